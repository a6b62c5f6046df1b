//! Adaptive loss weighting via an exponential moving average.
//!
//! Framework-free: callers feed raw auxiliary-loss observations and get back
//! a weight `lambda` in `[0, 1]` computed as the EMA of the loss divided by
//! the first observed loss (epsilon-guarded), clamped. The smoothing update is
//! `ema' = mu * ema + (1 - mu) * loss` with `mu = 0.99` by default; the EMA is
//! initialized to the first observed loss.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MU: f64 = 0.99;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("first observed loss must be positive, got {0}")]
    NonPositiveInitialLoss(f64),
    #[error("mu must lie strictly inside (0, 1), got {0}")]
    InvalidMu(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("loss observations must be non-negative and finite, got {0}")]
    InvalidLoss(f64),
    #[error("lambda must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Scheduler state. Copyable so training loops can checkpoint it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveWeightState {
    ema: f64,
    initial_loss: f64,
    mu: f64,
    epsilon: f64,
    step: u64,
}

impl AdaptiveWeightState {
    /// Initializes from the first observed loss with default `mu`/`epsilon`.
    pub fn new(first_loss: f64) -> Result<Self, ScheduleError> {
        Self::with_params(first_loss, DEFAULT_MU, DEFAULT_EPSILON)
    }

    pub fn with_params(first_loss: f64, mu: f64, epsilon: f64) -> Result<Self, ScheduleError> {
        if !(first_loss > 0.0 && first_loss.is_finite()) {
            return Err(ScheduleError::NonPositiveInitialLoss(first_loss));
        }
        if !(mu > 0.0 && mu < 1.0) {
            return Err(ScheduleError::InvalidMu(mu));
        }
        if epsilon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(ScheduleError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            ema: first_loss,
            initial_loss: first_loss,
            mu,
            epsilon,
            step: 0,
        })
    }

    /// Folds one loss observation into the EMA and returns the updated
    /// clamped weight.
    pub fn step(&mut self, loss: f64) -> Result<f64, ScheduleError> {
        if !(loss >= 0.0 && loss.is_finite()) {
            return Err(ScheduleError::InvalidLoss(loss));
        }
        self.ema = self.mu * self.ema + (1.0 - self.mu) * loss;
        self.step += 1;
        Ok(self.lambda())
    }

    /// Current weight: `clamp(ema / (initial + epsilon), 0, 1)`.
    pub fn lambda(&self) -> f64 {
        (self.ema / (self.initial_loss + self.epsilon)).clamp(0.0, 1.0)
    }

    pub fn ema(&self) -> f64 {
        self.ema
    }

    pub fn initial_loss(&self) -> f64 {
        self.initial_loss
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Weighted total of the two training-loss components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedLossReport {
    pub joint_loss: f64,
    pub priming_loss: f64,
    pub lambda: f64,
    pub total: f64,
}

/// `total = joint + lambda * priming`.
pub fn combine(
    joint_loss: f64,
    priming_loss: f64,
    lambda: f64,
) -> Result<CombinedLossReport, ScheduleError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ScheduleError::LambdaOutOfRange(lambda));
    }
    Ok(CombinedLossReport {
        joint_loss,
        priming_loss,
        lambda,
        total: joint_loss + lambda * priming_loss,
    })
}

/// One row of the optional trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub priming_loss: f64,
    pub ema: f64,
    pub lambda: f64,
}

/// Writes the trajectory as delimited text (CSV with a header row).
pub fn write_trajectory(
    path: impl AsRef<Path>,
    records: &[TrajectoryRecord],
) -> Result<(), ScheduleError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "step,priming_loss,ema,lambda")?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.step, r.priming_loss, r.ema, r.lambda)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_sets_ema_to_first_loss() {
        let s = AdaptiveWeightState::new(2.0).unwrap();
        assert_eq!(s.ema(), 2.0);
        assert_eq!(s.initial_loss(), 2.0);
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn init_rejects_zero_loss() {
        assert!(matches!(
            AdaptiveWeightState::new(0.0),
            Err(ScheduleError::NonPositiveInitialLoss(_))
        ));
    }

    #[test]
    fn tiny_first_loss_still_gives_near_unit_lambda() {
        let s = AdaptiveWeightState::new(1e-6).unwrap();
        let lambda = s.lambda();
        assert!(lambda > 0.98 && lambda <= 1.0);
    }

    #[test]
    fn constant_loss_keeps_lambda_at_one() {
        let mut s = AdaptiveWeightState::new(2.0).unwrap();
        let lambda = s.step(2.0).unwrap();
        assert_eq!(s.ema(), 2.0);
        assert!(lambda <= 1.0 && lambda > 0.999_999);
    }

    #[test]
    fn single_drop_hand_value() {
        let mut s = AdaptiveWeightState::new(2.0).unwrap();
        let lambda = s.step(0.2).unwrap();
        assert!((s.ema() - 1.982).abs() < 1e-12);
        assert!((lambda - 1.982 / (2.0 + 1e-8)).abs() < 1e-12);
        assert!((lambda - 0.991).abs() < 1e-3);
    }

    #[test]
    fn zero_loss_decays_geometrically() {
        let mut s = AdaptiveWeightState::new(2.0).unwrap();
        for t in 1..=200u32 {
            s.step(0.0).unwrap();
            let closed = 0.99f64.powi(t as i32) * 2.0;
            assert!((s.ema() - closed).abs() < 1e-12);
        }
        assert!(s.lambda() < 0.14);
    }

    #[test]
    fn negative_loss_rejected() {
        let mut s = AdaptiveWeightState::new(1.0).unwrap();
        assert!(matches!(s.step(-0.1), Err(ScheduleError::InvalidLoss(_))));
    }

    #[test]
    fn combine_hand_values() {
        assert_eq!(combine(1.0, 0.5, 0.5).unwrap().total, 1.25);
        assert_eq!(combine(1.0, 0.5, 0.0).unwrap().total, 1.0);
        assert_eq!(combine(1.0, 0.5, 1.0).unwrap().total, 1.5);
        assert!(matches!(
            combine(1.0, 0.5, 1.5),
            Err(ScheduleError::LambdaOutOfRange(_))
        ));
    }

    #[test]
    fn trajectory_roundtrip_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let mut s = AdaptiveWeightState::new(1.0).unwrap();
        let mut records = Vec::new();
        for loss in [1.0, 0.5, 0.25] {
            let lambda = s.step(loss).unwrap();
            records.push(TrajectoryRecord {
                step: s.step_count(),
                priming_loss: loss,
                ema: s.ema(),
                lambda,
            });
        }
        write_trajectory(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,priming_loss,ema,lambda\n"));
        assert_eq!(text.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn lambda_always_in_unit_interval(losses in prop::collection::vec(0.0f64..1e9, 1..200)) {
            let mut s = AdaptiveWeightState::new(0.5).unwrap();
            for loss in losses {
                let lambda = s.step(loss).unwrap();
                prop_assert!((0.0..=1.0).contains(&lambda));
            }
        }

        #[test]
        fn constant_loss_converges_monotonically(e0 in 0.1f64..10.0, c in 0.0f64..10.0) {
            let mut s = AdaptiveWeightState::new(e0).unwrap();
            let mut prev_gap = (s.ema() - c).abs();
            for _ in 0..100 {
                s.step(c).unwrap();
                let gap = (s.ema() - c).abs();
                prop_assert!(gap <= prev_gap + 1e-12);
                prev_gap = gap;
            }
        }

        #[test]
        fn deterministic_trajectories(losses in prop::collection::vec(0.0f64..100.0, 1..50)) {
            let mut a = AdaptiveWeightState::new(1.0).unwrap();
            let mut b = AdaptiveWeightState::new(1.0).unwrap();
            for loss in &losses {
                prop_assert_eq!(a.step(*loss).unwrap(), b.step(*loss).unwrap());
            }
            prop_assert_eq!(a, b);
        }
    }
}
