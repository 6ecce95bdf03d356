//! Normalization constants of the fractional Laplacian.

use std::f64::consts::PI;

/// Gamma function on the real line.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `c_{1,2s} = 4^s s Γ((1+2s)/2) / (π^{1/2} Γ(1-s))`, the constant in front of
/// the one-dimensional finite-difference stencil.
pub fn stencil_constant(s: f64) -> f64 {
    4f64.powf(s) * s * gamma((1.0 + 2.0 * s) / 2.0) / (PI.sqrt() * gamma(1.0 - s))
}

/// `C_{d,s} = 4^s Γ(d/2 + s) / (π^{d/2} |Γ(-s)|)`, the singular-integral
/// normalization of `(-Δ)^s` in dimension `d`.
pub fn singular_integral_constant(d: u32, s: f64) -> f64 {
    let half_d = d as f64 / 2.0;
    4f64.powf(s) * gamma(half_d + s) / (PI.powf(half_d) * gamma(-s).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        let mut fact = 1.0;
        for n in 1..20 {
            assert!(rel(gamma(n as f64), fact) < 1e-13, "n={n}");
            fact *= n as f64;
        }
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(1.5), PI.sqrt() / 2.0) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-14);
        // Γ(1/3) and Γ(0.1) to 16 digits
        assert!(rel(gamma(1.0 / 3.0), 2.678_938_534_707_747_6) < 1e-14);
        assert!(rel(gamma(0.1), 9.513_507_698_668_731_8) < 1e-14);
    }

    #[test]
    fn gamma_recurrence() {
        for i in 1..200 {
            let x = 0.013 * i as f64 + 0.2;
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn half_order_constants() {
        assert!(rel(stencil_constant(0.5), 1.0 / PI) < 1e-14);
        assert!(rel(singular_integral_constant(1, 0.5), 1.0 / PI) < 1e-14);
    }

    #[test]
    fn constants_agree_in_one_dimension() {
        // Γ(1-s) = -s Γ(-s), so c_{1,2s} and C_{1,s} coincide.
        for i in 1..20 {
            let s = i as f64 / 20.0;
            assert!(rel(stencil_constant(s), singular_integral_constant(1, s)) < 1e-13);
        }
    }
}
