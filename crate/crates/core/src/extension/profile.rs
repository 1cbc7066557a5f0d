use super::bessel::scaled_bessel_k;
use super::ExtensionError;

/// Bounded solution of `φ'' + (ε/s) φ' − φ = 0`, `φ(0) = 1`, `φ(∞) = 0`:
///
/// ```text
///     φ_ε(s) = 2^{1−ν}/Γ(ν) · s^ν K_ν(s),      ν = (1 − ε)/2,
///     φ_ε'(s) = −2^{1−ν}/Γ(ν) · s^ν K_{1−ν}(s).
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    epsilon: f64,
    nu: f64,
    norm: f64,
}

impl Profile {
    pub fn new(epsilon: f64) -> Result<Self, ExtensionError> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(ExtensionError::InvalidEpsilon(epsilon));
        }
        let nu = 0.5 * (1.0 - epsilon);
        Ok(Self {
            epsilon,
            nu,
            norm: 2f64.powf(1.0 - nu) / libm::tgamma(nu),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s > 745.0 {
            return 0.0;
        }
        self.norm * s.powf(self.nu) * scaled_bessel_k(self.nu, s) * (-s).exp()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        assert!(s > 0.0, "the profile derivative is singular at 0 for ε > 0");
        if s > 745.0 {
            return 0.0;
        }
        -self.norm * s.powf(self.nu) * scaled_bessel_k(1.0 - self.nu, s) * (-s).exp()
    }

    /// `s^ε φ'(s)`, continuous up to `s = 0` where it equals `−d_ε`.
    pub fn weighted_derivative(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return -dtn_constant(self.epsilon);
        }
        s.powf(self.epsilon) * self.derivative(s)
    }
}

/// `d_ε = 2^ε Γ((1+ε)/2) / Γ((1−ε)/2)`, so that the weighted Neumann
/// derivative of the extension is `−d_ε Λ^{1−ε} θ`.
pub fn dtn_constant(epsilon: f64) -> f64 {
    2f64.powf(epsilon) * libm::tgamma(0.5 * (1.0 + epsilon)) / libm::tgamma(0.5 * (1.0 - epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_zero_is_poisson() {
        let p = Profile::new(0.0).unwrap();
        for s in [0.0, 1e-6, 0.1, 1.0, 3.0, 20.0] {
            assert!((p.value(s) - (-s).exp()).abs() < 1e-14);
        }
        assert!((p.derivative(2.0) + (-2.0f64).exp()).abs() < 1e-14);
        assert!((dtn_constant(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profile_is_strictly_decreasing() {
        for eps in [0.0, 0.05, 0.1, 0.3] {
            let p = Profile::new(eps).unwrap();
            let mut prev = p.value(0.0);
            for k in 1..400 {
                let v = p.value(k as f64 * 0.05);
                assert!(v < prev, "ε = {eps} at s = {}", k as f64 * 0.05);
                prev = v;
            }
        }
    }

    #[test]
    fn weighted_derivative_tends_to_dtn_constant() {
        for eps in [0.05, 0.1, 0.3] {
            let p = Profile::new(eps).unwrap();
            let near = p.weighted_derivative(1e-9);
            assert!((near + dtn_constant(eps)).abs() < 1e-6, "ε = {eps}: {near}");
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(Profile::new(1.0).is_err());
        assert!(Profile::new(-0.1).is_err());
    }
}
