//! Problem parameters and the nonlinear closures of the radial chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One instance of the system
///
/// ```text
/// (-Δ)^α u = (t + |v|)^q,   (-Δ)^β v = (t^θ + |u|)^p   in B_1,
/// ```
///
/// with Dirichlet data up to order α-1 (resp. β-1). `t = 0` is the
/// unperturbed Lane-Emden system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha: usize,
    pub beta: usize,
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub theta: f64,
}

impl ProblemParams {
    /// Unperturbed system (`t = 0`) with θ at the midpoint of `(1/p, q)`.
    pub fn new(n: u32, alpha: usize, beta: usize, p: f64, q: f64) -> Result<Self> {
        let params = Self {
            n,
            alpha,
            beta,
            p,
            q,
            t: 0.0,
            theta: default_theta(p, q),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Number of shooting unknowns, `α + β`.
    pub fn dim(&self) -> usize {
        self.alpha + self.beta
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// Standing assumptions: `α, β ≥ 1`, `N > 2α`, `N > 2β`, `p, q > 0`, `t ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 || self.beta == 0 {
            return Err(Error::InvalidParams(format!(
                "alpha and beta must be at least 1 (got alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        let n = self.n as usize;
        if n <= 2 * self.alpha || n <= 2 * self.beta {
            return Err(Error::InvalidParams(format!(
                "requires N > 2*alpha and N > 2*beta (got N={}, alpha={}, beta={})",
                self.n, self.alpha, self.beta
            )));
        }
        if !(self.p > 0.0 && self.p.is_finite()) || !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "p and q must be positive and finite (got p={}, q={})",
                self.p, self.q
            )));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "t must be finite and nonnegative (got {})",
                self.t
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParams("theta must be finite".into()));
        }
        Ok(())
    }

    /// Extra requirements of the homotopy / blow-up machinery:
    /// `pq > 1` and `θ ∈ (1/p, q)`.
    pub fn validate_homotopy(&self) -> Result<()> {
        self.validate()?;
        if self.p * self.q <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "homotopy requires pq > 1 (got pq={})",
                self.p * self.q
            )));
        }
        if !(self.theta > 1.0 / self.p && self.theta < self.q) {
            return Err(Error::InvalidParams(format!(
                "theta must lie in (1/p, q) = ({}, {}) (got {})",
                1.0 / self.p,
                self.q,
                self.theta
            )));
        }
        Ok(())
    }

    /// Scaling exponents `(τ, σ)` with `τ(pq-1) = 2βq + 2α` and
    /// `σ(pq-1) = 2αp + 2β`; `None` unless `pq > 1`.
    ///
    /// At `t = 0`, `λ^τ u(λx), λ^σ v(λx)` solve the system whenever `u, v` do.
    pub fn scaling_exponents(&self) -> Option<(f64, f64)> {
        let d = self.p * self.q - 1.0;
        if !(d > 0.0) {
            return None;
        }
        let (a, b) = (self.alpha as f64, self.beta as f64);
        Some((
            (2.0 * b * self.q + 2.0 * a) / d,
            (2.0 * a * self.p + 2.0 * b) / d,
        ))
    }

    /// The closure of this instance (shifts `t` and `t^θ`).
    pub fn forcing(&self) -> Forcing {
        let shift_v = if self.t == 0.0 {
            0.0
        } else {
            self.t.powf(self.theta)
        };
        Forcing::Power {
            shift_u: self.t,
            shift_v,
        }
    }
}

/// Midpoint of `(1/p, q)`.
pub fn default_theta(p: f64, q: f64) -> f64 {
    0.5 * (1.0 / p + q)
}

/// Right-hand sides closing the two chains at their top entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// `u_α = (shift_u + |v_0|)^q`, `v_β = (shift_v + |u_0|)^p`.
    Power { shift_u: f64, shift_v: f64 },
    /// Constant right-hand sides, used for manufactured solutions and `K_α(1)`.
    Constant { u: f64, v: f64 },
}

/// A chain system: parameters plus closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSystem {
    pub params: ProblemParams,
    pub forcing: Forcing,
}

impl ChainSystem {
    pub fn new(params: ProblemParams) -> Self {
        Self {
            forcing: params.forcing(),
            params,
        }
    }

    pub fn with_forcing(params: ProblemParams, forcing: Forcing) -> Self {
        Self { params, forcing }
    }

    /// Top entries `(u_α, v_β)` as functions of `(u_0, v_0)`.
    #[inline]
    pub fn closures(&self, u0: f64, v0: f64) -> (f64, f64) {
        match self.forcing {
            Forcing::Power { shift_u, shift_v } => (
                (shift_u + v0.abs()).powf(self.params.q),
                (shift_v + u0.abs()).powf(self.params.p),
            ),
            Forcing::Constant { u, v } => (u, v),
        }
    }

    /// Center value of chain entry `idx + 1` given the center values `c`
    /// (index layout `u_0..u_{α-1}, v_0..v_{β-1}`).
    pub fn next_center(&self, c: &[f64], idx: usize) -> f64 {
        let a = self.params.alpha;
        let b = self.params.beta;
        let (top_u, top_v) = self.closures(c[0], c[a]);
        if idx < a {
            if idx + 1 < a {
                c[idx + 1]
            } else {
                top_u
            }
        } else if idx + 1 < a + b {
            c[idx + 1]
        } else {
            top_v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_dimension() {
        let err = ProblemParams::new(4, 2, 1, 2.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("N > 2*alpha"));
        assert!(ProblemParams::new(5, 2, 1, 2.0, 2.0).is_ok());
    }

    #[test]
    fn homotopy_needs_theta_window() {
        let p = ProblemParams::new(5, 1, 1, 2.0, 2.0).unwrap();
        assert_eq!(p.theta, 1.25);
        assert!(p.validate_homotopy().is_ok());
        assert!(p.with_theta(0.5).validate_homotopy().is_err());
        assert!(p.with_theta(2.0).validate_homotopy().is_err());
        let sub = ProblemParams::new(5, 1, 1, 0.5, 1.5).unwrap();
        assert!(sub.validate_homotopy().is_err());
    }

    #[test]
    fn forcing_reduces_at_zero_t() {
        let p = ProblemParams::new(5, 1, 1, 2.0, 3.0).unwrap();
        let sys = ChainSystem::new(p);
        assert_eq!(sys.closures(2.0, -3.0), (27.0, 4.0));
        let sys_t = ChainSystem::new(p.with_t(1.0));
        assert_eq!(sys_t.closures(2.0, 3.0), (64.0, 9.0));
    }
}
