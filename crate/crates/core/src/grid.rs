use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AggregateModel;

/// Maximum accepted value of dt × fastest rate.
pub const MAX_STEP_PRODUCT: f64 = 0.1;
/// Default value of dt × fastest rate.
pub const DEFAULT_STEP_PRODUCT: f64 = 0.01;

/// Uniform output grid plus the internal fixed integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub dt_integrate: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize, dt_integrate: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::InvalidGrid(format!("need t_end > t_start, got {t_start}..{t_end}")));
        }
        if n_samples < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n_samples}")));
        }
        let spacing = (t_end - t_start) / (n_samples - 1) as f64;
        if !(dt_integrate > 0.0) || dt_integrate > spacing * (1.0 + 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "dt_integrate {dt_integrate} must be in (0, {spacing}]"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            n_samples,
            dt_integrate,
        })
    }

    /// Grid whose step is 0.01 / max(|ω|_max, γ_max, 2|V|_max), capped at
    /// the sample spacing.
    pub fn for_model(model: &AggregateModel, t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        let spacing = if n_samples >= 2 {
            (t_end - t_start) / (n_samples - 1) as f64
        } else {
            t_end - t_start
        };
        let rate = model.fastest_rate();
        let dt = if rate > 0.0 {
            (DEFAULT_STEP_PRODUCT / rate).min(spacing)
        } else {
            spacing
        };
        Self::new(t_start, t_end, n_samples, dt)
    }

    pub fn spacing(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_samples - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.n_samples {
            self.t_end
        } else {
            self.t_start + k as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.time(k)).collect()
    }

    /// Number of integration steps between consecutive samples.
    pub fn steps_per_sample(&self) -> usize {
        ((self.spacing() / self.dt_integrate) - 1e-9).ceil().max(1.0) as usize
    }

    /// Effective step: the sample spacing split evenly.
    pub fn effective_step(&self) -> f64 {
        self.spacing() / self.steps_per_sample() as f64
    }

    /// Same output grid with the integration step halved.
    pub fn halved(&self) -> Self {
        Self {
            dt_integrate: self.effective_step() / 2.0,
            ..*self
        }
    }

    /// Refuses steps that under-resolve the fastest rate of the model.
    pub fn check_step(&self, model: &AggregateModel) -> Result<()> {
        let rate = model.fastest_rate();
        let product = self.dt_integrate * rate;
        if product > MAX_STEP_PRODUCT {
            return Err(Error::StepTooLarge {
                dt: self.dt_integrate,
                rate,
                product,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::make_chain;

    #[test]
    fn validates_bounds() {
        assert!(TimeGrid::new(1.0, 1.0, 10, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 11, 0.2).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 11, 0.0).is_err());
        let g = TimeGrid::new(0.0, 1.0, 11, 0.1).unwrap();
        assert_eq!(g.steps_per_sample(), 1);
        assert_eq!(g.time(10), 1.0);
    }

    #[test]
    fn default_step_rule() {
        let (m, _) = make_chain(5, 1.0, 40.0, 1.0, 2).unwrap();
        let g = TimeGrid::for_model(&m, 0.0, 10.0, 101).unwrap();
        assert!((g.dt_integrate - 0.01 / 40.0).abs() < 1e-18);
        assert_eq!(g.steps_per_sample(), 400);
        g.check_step(&m).unwrap();
    }

    #[test]
    fn refuses_coarse_step() {
        let (m, _) = make_chain(5, 1.0, 40.0, 1.0, 2).unwrap();
        let g = TimeGrid::new(0.0, 10.0, 101, 0.01).unwrap();
        assert!(matches!(g.check_step(&m), Err(Error::StepTooLarge { .. })));
    }
}
