use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Model parameters: edge weights `beta` (0-0) and `gamma` (1-1), vertex
/// activity `lambda` for spin 1, and an optional degree bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// `None` means unbounded degree.
    pub delta: Option<u32>,
    pub tol: f64,
}

impl SpinParams {
    pub fn new(beta: f64, gamma: f64, lambda: f64, delta: u32) -> Result<Self> {
        Self::build(beta, gamma, lambda, Some(delta), DEFAULT_TOL)
    }

    pub fn unbounded(beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        Self::build(beta, gamma, lambda, None, DEFAULT_TOL)
    }

    pub fn hard_core(lambda: f64, delta: u32) -> Result<Self> {
        Self::new(1.0, 0.0, lambda, delta)
    }

    pub fn build(beta: f64, gamma: f64, lambda: f64, delta: Option<u32>, tol: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(SpinError::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(SpinError::InvalidParameter(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(SpinError::InvalidParameter(format!("lambda must be finite and > 0, got {lambda}")));
        }
        if let Some(d) = delta {
            if d < 3 {
                return Err(SpinError::InvalidParameter(format!("delta must be >= 3, got {d}")));
            }
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(SpinError::InvalidParameter(format!("tol must be > 0, got {tol}")));
        }
        Ok(SpinParams { beta, gamma, lambda, delta, tol })
    }

    pub fn with_tol(self, tol: f64) -> Result<Self> {
        Self::build(self.beta, self.gamma, self.lambda, self.delta, tol)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::build(self.beta, self.gamma, lambda, self.delta, self.tol)
    }

    pub fn bc(&self) -> f64 {
        self.beta * self.gamma
    }

    pub fn is_degenerate(&self) -> bool {
        (self.bc() - 1.0).abs() <= self.tol
    }

    pub fn is_antiferromagnetic(&self) -> bool {
        self.bc() < 1.0 && !self.is_degenerate()
    }

    pub fn is_ferromagnetic(&self) -> bool {
        self.bc() > 1.0 && !self.is_degenerate()
    }

    pub fn require_delta(&self) -> Result<u32> {
        self.delta
            .ok_or_else(|| SpinError::InvalidParameter("a finite degree bound delta is required".into()))
    }

    pub fn require_antiferro(&self) -> Result<()> {
        if self.bc() < 1.0 {
            Ok(())
        } else {
            Err(SpinError::NotAntiferromagnetic)
        }
    }

    /// Edge interaction matrix `[[beta, 1], [1, gamma]]`, indexed by spins.
    pub fn edge_matrix(&self) -> [[f64; 2]; 2] {
        [[self.beta, 1.0], [1.0, self.gamma]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(SpinParams::new(-1.0, 1.0, 1.0, 3).is_err());
        assert!(SpinParams::new(1.0, f64::NAN, 1.0, 3).is_err());
        assert!(SpinParams::new(1.0, 1.0, 0.0, 3).is_err());
        assert!(SpinParams::new(1.0, 1.0, 1.0, 2).is_err());
        assert!(SpinParams::new(0.0, 0.0, 1.0, 3).is_ok());
    }

    #[test]
    fn classification() {
        let p = SpinParams::new(0.5, 0.5, 1.0, 3).unwrap();
        assert!(p.is_antiferromagnetic() && !p.is_ferromagnetic());
        let p = SpinParams::new(2.0, 0.5, 1.0, 3).unwrap();
        assert!(p.is_degenerate() && !p.is_antiferromagnetic() && !p.is_ferromagnetic());
        let p = SpinParams::new(2.0, 2.0, 1.0, 3).unwrap();
        assert!(p.is_ferromagnetic());
    }
}
