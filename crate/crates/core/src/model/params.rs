use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Vec2;

/// Physical coefficients, constant over each subdomain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalParams {
    /// Fluid viscosity.
    pub mu: f64,
    /// Permeability tensor (symmetric positive definite).
    pub k: Matrix2<f64>,
    pub lambda_p: f64,
    pub mu_p: f64,
    /// Biot-Willis coefficient.
    pub alpha: f64,
    /// Storage coefficient.
    pub s0: f64,
    /// Slip friction coefficient.
    pub alpha_bjs: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            mu: 1.0,
            k: Matrix2::identity(),
            lambda_p: 1.0,
            mu_p: 1.0,
            alpha: 1.0,
            s0: 1.0,
            alpha_bjs: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let finite = [
            self.mu,
            self.lambda_p,
            self.mu_p,
            self.alpha,
            self.s0,
            self.alpha_bjs,
        ]
        .iter()
        .chain(self.k.iter())
        .all(|v| v.is_finite());
        if !finite {
            return bad("coefficients must be finite");
        }
        if self.mu <= 0.0 {
            return bad("mu must be positive");
        }
        if (self.k[(0, 1)] - self.k[(1, 0)]).abs() > 1e-14 * self.k.norm() {
            return bad("permeability must be symmetric");
        }
        let (kmin, _) = self.k_eigenvalues();
        if kmin <= 0.0 {
            return bad("permeability must be positive definite");
        }
        if self.lambda_p <= 0.0 || self.mu_p <= 0.0 {
            return bad("Lame parameters must be positive");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.s0 < 0.0 {
            return bad("s0 must be non-negative");
        }
        if self.alpha_bjs < 0.0 {
            return bad("alpha_bjs must be non-negative");
        }
        Ok(())
    }

    /// Eigenvalues `(k_min, k_max)` of the permeability.
    pub fn k_eigenvalues(&self) -> (f64, f64) {
        let (a, b, d) = (
            self.k[(0, 0)],
            0.5 * (self.k[(0, 1)] + self.k[(1, 0)]),
            self.k[(1, 1)],
        );
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - r, mean + r)
    }

    pub fn k_inverse(&self) -> Result<Matrix2<f64>> {
        self.k
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular permeability".into()))
    }

    /// Tangential permeability `tau^T K tau` for a unit tangent.
    pub fn k_tangential(&self, tau: &Vec2) -> Result<f64> {
        if (tau.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "tangent {tau:?} is not a unit vector"
            )));
        }
        Ok(tau.dot(&(self.k * tau)))
    }

    /// Slip coefficient `mu * alpha_bjs / sqrt(tau^T K tau)`.
    pub fn bjs_coefficient(&self, tau: &Vec2) -> Result<f64> {
        Ok(self.mu * self.alpha_bjs / self.k_tangential(tau)?.sqrt())
    }

    /// Fluid stress `2 mu D(u) - p I`.
    pub fn stress_stokes(&self, grad_u: &Matrix2<f64>, p: f64) -> Matrix2<f64> {
        (grad_u + grad_u.transpose()) * self.mu - Matrix2::identity() * p
    }

    /// Poroelastic stress `lambda_p div(eta) I + 2 mu_p D(eta) - alpha p I`.
    pub fn stress_poroelastic(&self, grad_eta: &Matrix2<f64>, p: f64) -> Matrix2<f64> {
        let div = grad_eta.trace();
        Matrix2::identity() * (self.lambda_p * div - self.alpha * p)
            + (grad_eta + grad_eta.transpose()) * self.mu_p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tangential_permeability() {
        let mut p = PhysicalParams {
            k: Matrix2::identity() * 3.0,
            ..Default::default()
        };
        let tau = Vec2::new(0.6, 0.8);
        assert_relative_eq!(p.k_tangential(&tau).unwrap(), 3.0, epsilon = 1e-15);
        p.k = Matrix2::new(1.0, 0.0, 0.0, 4.0);
        assert_relative_eq!(p.k_tangential(&Vec2::new(1.0, 0.0)).unwrap(), 1.0);
        p.k = Matrix2::new(2.0, 1.0, 1.0, 3.0);
        let s = 0.5f64.sqrt();
        assert_relative_eq!(
            p.k_tangential(&Vec2::new(s, s)).unwrap(),
            3.5,
            epsilon = 1e-14
        );
        assert!(p.k_tangential(&Vec2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn stokes_stress_examples() {
        let p = PhysicalParams::default();
        assert_eq!(
            p.stress_stokes(&Matrix2::zeros(), 1.0),
            -Matrix2::identity()
        );
        // u = (y, 0)
        let g = Matrix2::new(0.0, 1.0, 0.0, 0.0);
        assert_eq!(p.stress_stokes(&g, 0.0), Matrix2::new(0.0, 1.0, 1.0, 0.0));
        let p = PhysicalParams {
            mu: 2.5,
            ..Default::default()
        };
        let g = Matrix2::new(0.3, -1.2, 0.7, 2.0);
        let s = p.stress_stokes(&g, 0.4);
        assert_relative_eq!(s[(0, 0)], 2.0 * 2.5 * 0.3 - 0.4);
        assert_relative_eq!(s[(0, 1)], 2.5 * (-1.2 + 0.7));
        assert_relative_eq!(s[(1, 0)], s[(0, 1)]);
        assert_relative_eq!(s[(1, 1)], 2.0 * 2.5 * 2.0 - 0.4);
    }

    #[test]
    fn poroelastic_stress_examples() {
        let p = PhysicalParams::default();
        assert_eq!(
            p.stress_poroelastic(&Matrix2::zeros(), 1.0),
            -Matrix2::identity()
        );
        assert_eq!(
            p.stress_poroelastic(&Matrix2::identity(), 0.0),
            Matrix2::identity() * 4.0
        );
        let p = PhysicalParams {
            lambda_p: 1.7,
            mu_p: 0.6,
            alpha: 0.8,
            ..Default::default()
        };
        let g = Matrix2::new(0.3, -1.2, 0.7, 2.0);
        let s = p.stress_poroelastic(&g, 0.5);
        assert_relative_eq!(
            s[(0, 0)],
            1.7 * 2.3 + 2.0 * 0.6 * 0.3 - 0.8 * 0.5,
            epsilon = 1e-14
        );
        assert_relative_eq!(s[(0, 1)], 0.6 * (-0.5), epsilon = 1e-14);
        assert_relative_eq!(
            s[(1, 1)],
            1.7 * 2.3 + 2.0 * 0.6 * 2.0 - 0.8 * 0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn validation() {
        assert!(PhysicalParams::default().validate().is_ok());
        let bad_k = PhysicalParams {
            k: Matrix2::new(1.0, 2.0, 2.0, 1.0),
            ..Default::default()
        };
        assert!(bad_k.validate().is_err());
        assert!(PhysicalParams {
            alpha: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PhysicalParams {
            s0: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PhysicalParams {
            mu: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PhysicalParams {
            s0: 0.0,
            alpha_bjs: 0.0,
            ..Default::default()
        }
        .validate()
        .is_ok());
    }
}
