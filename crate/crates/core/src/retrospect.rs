//! Retrospective trust: how well did past predictions match what happened?
//!
//! Each accepted prediction/outcome pair yields a normalized discrepancy
//! `d`. An exponentially weighted average with span `H` smooths it, and
//! `trust = exp(-beta * ewma)` maps it into `(0, 1]`. Conservatism is
//! `1 - trust`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// `predicted` was issued at `t - horizon` for time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub t: i64,
    #[serde(alias = "k")]
    pub horizon: u32,
    #[serde(with = "crate::serde_float::vec")]
    pub predicted: Vec<f64>,
    #[serde(with = "crate::serde_float::vec")]
    pub realized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    window: usize,
    beta: f64,
    scale: Vec<f64>,
    recent: VecDeque<f64>,
    ewma: f64,
    trust: f64,
    accepted: u64,
    rejected: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    Accepted,
    Rejected,
}

impl TrustState {
    /// `window` is the EWMA span `H` and the length of the discrepancy
    /// window; `scale` holds one positive normalizer per output dimension.
    pub fn new(window: usize, beta: f64, scale: Vec<f64>) -> Result<Self> {
        if window == 0 {
            return Err(Error::param("window", "must be at least 1"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", "must be finite and > 0"));
        }
        if scale.is_empty() || scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::param("scale", "need one finite, positive entry per dimension"));
        }
        Ok(TrustState {
            window,
            beta,
            scale,
            recent: VecDeque::with_capacity(window),
            ewma: 0.0,
            trust: 1.0,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn rho(&self) -> f64 {
        2.0 / (self.window as f64 + 1.0)
    }

    /// Normalized RMS error, or `None` if the pair cannot be scored.
    pub fn discrepancy(&self, pair: &PredictionPair) -> Option<f64> {
        let dim = self.scale.len();
        if pair.horizon == 0 || pair.predicted.len() != dim || pair.realized.len() != dim {
            return None;
        }
        let mut sum = 0.0;
        for ((p, y), s) in pair.predicted.iter().zip(&pair.realized).zip(&self.scale) {
            let e = (p - y) / s;
            sum += e * e;
        }
        let d = math::sqrt(sum / dim as f64);
        d.is_finite().then_some(d)
    }

    /// Folds in one pair. Unscorable pairs (dimension mismatch, zero
    /// horizon, non-finite values) leave the state unchanged apart from the
    /// rejection count.
    pub fn update(&mut self, pair: &PredictionPair) -> Update {
        match self.discrepancy(pair) {
            Some(d) => {
                self.push_discrepancy(d);
                Update::Accepted
            }
            None => {
                self.rejected += 1;
                Update::Rejected
            }
        }
    }

    /// Folds in an already computed discrepancy `d >= 0`.
    pub fn push_discrepancy(&mut self, d: f64) {
        let rho = self.rho();
        self.ewma = (1.0 - rho) * self.ewma + rho * d;
        self.trust = math::exp(-self.beta * self.ewma).clamp(0.0, 1.0);
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(d);
        self.accepted += 1;
    }

    pub fn trust(&self) -> f64 {
        self.trust
    }

    pub fn conservatism(&self) -> f64 {
        1.0 - self.trust
    }

    pub fn ewma(&self) -> f64 {
        self.ewma
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn report(&self) -> TrustReport {
        trust_report(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustReport {
    pub trust: f64,
    pub conservatism: f64,
    pub ewma: f64,
    /// True when no pair has been accepted yet; statistics are then absent.
    pub indeterminate: bool,
    pub window_min: Option<f64>,
    pub window_max: Option<f64>,
    pub window_mean: Option<f64>,
    pub accepted: u64,
    pub rejected: u64,
}

pub fn trust_report(state: &TrustState) -> TrustReport {
    let n = state.recent.len();
    let (min, max, mean) = if n == 0 {
        (None, None, None)
    } else {
        (
            state.recent.iter().copied().reduce(f64::min),
            state.recent.iter().copied().reduce(f64::max),
            Some(state.recent.iter().sum::<f64>() / n as f64),
        )
    };
    TrustReport {
        trust: state.trust,
        conservatism: state.conservatism(),
        ewma: state.ewma,
        indeterminate: state.accepted == 0,
        window_min: min,
        window_max: max,
        window_mean: mean,
        accepted: state.accepted,
        rejected: state.rejected,
    }
}

/// Per-dimension population standard deviation of the realized outputs of
/// the scorable pairs; a zero deviation falls back to 1.
pub fn auto_scale(pairs: &[PredictionPair]) -> Result<Vec<f64>> {
    let dim = pairs
        .iter()
        .find(|p| p.realized.iter().all(|v| v.is_finite()))
        .map(|p| p.realized.len())
        .ok_or(Error::EmptyTrace)?;
    if dim == 0 {
        return Err(Error::param("realized", "outputs must have at least one dimension"));
    }
    Ok((0..dim)
        .map(|d| {
            let values = pairs
                .iter()
                .filter(|p| p.realized.len() == dim)
                .map(|p| p.realized[d]);
            match math::mean_std(values) {
                Some((_, s)) if s > 0.0 => s,
                _ => 1.0,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn pair(p: f64, y: f64) -> PredictionPair {
        PredictionPair {
            t: 0,
            horizon: 1,
            predicted: vec![p],
            realized: vec![y],
        }
    }

    #[test]
    fn perfect_predictions_keep_full_trust() {
        let mut s = TrustState::new(10, 1.0, vec![1.0]).unwrap();
        assert!(s.report().indeterminate);
        for _ in 0..50 {
            s.update(&pair(0.7, 0.7));
        }
        let r = s.report();
        assert_eq!((r.trust, r.conservatism, r.ewma), (1.0, 0.0, 0.0));
        assert!(!r.indeterminate);
    }

    #[test]
    fn constant_unit_discrepancy_converges_to_inverse_e() {
        for h in [1usize, 5, 20, 50] {
            let mut s = TrustState::new(h, 1.0, vec![1.0]).unwrap();
            // Oracle: iterate the recurrence independently.
            let rho = 2.0 / (h as f64 + 1.0);
            let mut e = 0.0f64;
            for _ in 0..10 * h {
                s.update(&pair(1.0, 0.0));
                e = (1.0 - rho) * e + rho;
            }
            assert!((s.trust() - (-1.0f64).exp()).abs() < 1e-3, "H={h}: {}", s.trust());
            assert!((s.ewma() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejections_leave_state_alone() {
        let mut s = TrustState::new(5, 1.0, vec![1.0, 2.0]).unwrap();
        let good = PredictionPair {
            t: 0,
            horizon: 2,
            predicted: vec![1.0, 2.0],
            realized: vec![0.0, 0.0],
        };
        s.update(&good);
        let before = s.clone();
        let mut bad = good.clone();
        bad.realized[1] = f64::NAN;
        assert_eq!(s.update(&bad), Update::Rejected);
        bad.realized = vec![0.0];
        assert_eq!(s.update(&bad), Update::Rejected);
        let mut zero = good.clone();
        zero.horizon = 0;
        assert_eq!(s.update(&zero), Update::Rejected);
        assert_eq!(s.rejected(), 3);
        assert_eq!(s.trust(), before.trust());
        assert_eq!(s.ewma(), before.ewma());
        // d = sqrt((1^2 + 1^2) / 2) = 1.
        assert_eq!(s.report().window_max, Some(1.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(TrustState::new(0, 1.0, vec![1.0]).is_err());
        assert!(TrustState::new(5, 0.0, vec![1.0]).is_err());
        assert!(TrustState::new(5, 1.0, vec![0.0]).is_err());
        assert!(TrustState::new(5, 1.0, vec![]).is_err());
    }

    #[test]
    fn lower_ewma_means_more_trust() {
        let mut a = TrustState::new(1, 1.0, vec![1.0]).unwrap();
        let mut b = a.clone();
        a.push_discrepancy(0.2);
        b.push_discrepancy(0.4);
        assert!(a.trust() > b.trust());
    }

    #[test]
    fn auto_scale_uses_realized_spread() {
        let pairs = vec![pair(0.0, 1.0), pair(0.0, 3.0), pair(0.0, f64::NAN)];
        assert_eq!(auto_scale(&pairs).unwrap(), [1.0]);
        let flat = vec![pair(0.0, 2.0), pair(0.0, 2.0)];
        assert_eq!(auto_scale(&flat).unwrap(), [1.0]);
    }

    proptest! {
        #[test]
        fn trust_bounded_and_complementary(ds in proptest::collection::vec(0.0..50.0f64, 1..100), h in 1usize..30, beta in 0.01..5.0f64) {
            let mut s = TrustState::new(h, beta, vec![1.0]).unwrap();
            for d in ds {
                s.push_discrepancy(d);
                prop_assert!(s.trust() > 0.0 && s.trust() <= 1.0);
                prop_assert_eq!(s.conservatism() + s.trust(), 1.0);
            }
        }

        #[test]
        fn larger_discrepancies_never_raise_trust(base in proptest::collection::vec((0.0..5.0f64, 0.0..2.0f64), 1..100), h in 1usize..30) {
            let mut a = TrustState::new(h, 1.0, vec![1.0]).unwrap();
            let mut b = a.clone();
            for (d, extra) in base {
                a.push_discrepancy(d);
                b.push_discrepancy(d + extra);
            }
            prop_assert!(b.trust() <= a.trust());
        }

        #[test]
        fn step_response_strictly_decreases(h in 1usize..40, level in 0.01..10.0f64, warmup in 0usize..20) {
            let mut s = TrustState::new(h, 1.0, vec![1.0]).unwrap();
            for _ in 0..warmup {
                s.push_discrepancy(0.0);
            }
            let mut prev = s.trust();
            for _ in 0..h {
                s.push_discrepancy(level);
                prop_assert!(s.trust() < prev);
                prev = s.trust();
            }
        }
    }
}
