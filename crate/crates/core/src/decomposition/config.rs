use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the sampling block is produced after the first iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleRefresh {
    /// Draw a new Gaussian block every iteration and project it away from
    /// every appended right block.
    #[default]
    Fresh,
    /// Keep projecting the initial block with the newest right block only.
    /// The sampled space never leaves `span(Omega) + span(V_L)`, so this
    /// stalls on matrices whose dominant spectrum is flat.
    Recycled,
}

/// Parameters of the incremental decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct R3svdConfig {
    /// Triplets appended per iteration.
    pub t: usize,
    /// Oversampling columns, discarded every iteration.
    pub p: usize,
    /// Power iterations per block.
    pub q: usize,
    /// Outer iteration cap; `None` means `ceil(min(m, n) / t)`.
    pub maxit: Option<usize>,
    /// Target energy fraction in `(0, 1]`.
    pub tau: f64,
    #[serde(default)]
    pub refresh: SampleRefresh,
}

impl Default for R3svdConfig {
    fn default() -> Self {
        R3svdConfig {
            t: 15,
            p: 5,
            q: 0,
            maxit: None,
            tau: 0.99,
            refresh: SampleRefresh::Fresh,
        }
    }
}

impl R3svdConfig {
    pub fn new(t: usize, p: usize, q: usize, tau: f64) -> Self {
        R3svdConfig {
            t,
            p,
            q,
            tau,
            ..Self::default()
        }
    }

    pub fn with_maxit(mut self, maxit: usize) -> Self {
        self.maxit = Some(maxit);
        self
    }

    /// Checks the shape-independent ranges.
    pub fn validate_ranges(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::param("t must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::param(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if self.maxit == Some(0) {
            return Err(Error::param("maxit must be at least 1"));
        }
        Ok(())
    }

    /// Validates against an `m x n` target and returns the effective
    /// iteration cap.
    pub fn validate(&self, m: usize, n: usize) -> Result<usize> {
        self.validate_ranges()?;
        let small = m.min(n);
        if self.t + self.p > small {
            return Err(Error::param(format!(
                "t + p = {} exceeds min(m, n) = {small}",
                self.t + self.p
            )));
        }
        Ok(self.maxit.unwrap_or_else(|| small.div_ceil(self.t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_experiment_setup() {
        let c = R3svdConfig::default();
        assert_eq!((c.t, c.p, c.q), (15, 5, 0));
    }

    #[test]
    fn validation() {
        let c = R3svdConfig::new(4, 2, 0, 0.9);
        assert_eq!(c.validate(10, 30).unwrap(), 3);
        assert_eq!(c.with_maxit(7).validate(10, 30).unwrap(), 7);
        assert!(R3svdConfig::new(9, 2, 0, 0.9).validate(10, 30).is_err());
        assert!(R3svdConfig::new(4, 2, 0, 1.5).validate(10, 30).is_err());
        assert!(R3svdConfig::new(4, 2, 0, 0.0).validate(10, 30).is_err());
        assert!(R3svdConfig::new(0, 2, 0, 0.5).validate(10, 30).is_err());
        assert!(R3svdConfig::new(4, 2, 0, 1.0).validate(10, 30).is_ok());
    }
}
