//! From in-degree to an expected position in a search-result list.
//!
//! The chain has three steps: in-degree to expected PageRank (uncorrelated
//! closed form), PageRank to global rank via the Zipf ansatz R(p) = A p^(-α),
//! and global rank to the expected position r = R n / N inside an n-hit
//! list where every page is equally likely to be relevant. Running the
//! chain backwards answers "how many in-links to reach rank r".

use thiserror::Error;

/// Result lists are truncated at this many entries by the engines the model
/// mirrors, so observed ranks never exceed it.
pub const RESULT_LIST_CAP: u64 = 1000;

#[derive(Debug, Error)]
pub enum RankModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("global rank requires a positive PageRank, got {0}")]
    NonPositivePageRank(f64),
    #[error("target rank {0} is unreachable under the model")]
    UnreachableTarget(f64),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("calibration needs at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("calibration is degenerate: all observations are identical")]
    DegenerateObservations,
}

/// Parameters of the rank chain. Defaults are the published-index scale
/// (8.1e9 pages, mean in-degree 10), α = 1.1 from the PageRank distribution
/// exponent, jump probability 0.15, and A = 1.5e-4 from query-log
/// calibration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankModel {
    /// Zipf amplitude A.
    pub amplitude: f64,
    /// Zipf exponent α (one less than the PageRank density exponent).
    pub alpha: f64,
    /// Total page count N of the modeled web.
    pub web_size: f64,
    /// Mean in-degree of the modeled web.
    pub mean_k_in: f64,
    /// Jump probability.
    pub q: f64,
}

impl Default for RankModel {
    fn default() -> Self {
        Self {
            amplitude: 1.5e-4,
            alpha: 1.1,
            web_size: 8.1e9,
            mean_k_in: 10.0,
            q: 0.15,
        }
    }
}

impl RankModel {
    pub fn validated(self) -> Result<Self, RankModelError> {
        let bad = |msg: String| Err(RankModelError::InvalidParameter(msg));
        if !(self.amplitude > 0.0) {
            return bad(format!("amplitude must be positive, got {}", self.amplitude));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.web_size >= 1.0) {
            return bad(format!("web size must be at least 1, got {}", self.web_size));
        }
        if !(self.mean_k_in > 0.0) {
            return bad(format!(
                "mean in-degree must be positive, got {}",
                self.mean_k_in
            ));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q must lie in (0, 1), got {}", self.q));
        }
        Ok(self)
    }

    /// Refits α from a PageRank vector as one less than the fitted density
    /// exponent, using the default tail start.
    pub fn with_alpha_from_pagerank(
        mut self,
        values: &[f64],
    ) -> Result<Self, crate::analytics::AnalyticsError> {
        let x_min = crate::analytics::default_x_min(values)?;
        let fit = crate::analytics::fit_power_law(values, x_min)?;
        self.alpha = fit.exponent - 1.0;
        Ok(self)
    }

    /// Expected PageRank of a page with `k_in` in-links: the uncorrelated
    /// closed form with this model's web size and mean degree. Positive even
    /// at k_in = 0 (the jump floor q/N).
    pub fn expected_pagerank(&self, k_in: f64) -> f64 {
        (self.q + (1.0 - self.q) * (k_in / self.mean_k_in)) / self.web_size
    }

    /// Zipf ansatz: global rank A p^(-α), strictly decreasing in p.
    pub fn global_rank(&self, pagerank: f64) -> Result<f64, RankModelError> {
        if !(pagerank > 0.0) {
            return Err(RankModelError::NonPositivePageRank(pagerank));
        }
        Ok(self.amplitude * pagerank.powf(-self.alpha))
    }

    /// Expected position of a page with global rank `global` inside an
    /// n-hit list: R n / N.
    pub fn local_rank(&self, global: f64, hits: u64) -> f64 {
        global * hits as f64 / self.web_size
    }

    /// Expected list position from in-degree alone: exactly the three-step
    /// composition through [`Self::expected_pagerank`] and
    /// [`Self::global_rank`]. Real-valued; rounding is presentation.
    pub fn predict_local_rank(&self, k_in: u64, hits: u64) -> f64 {
        let p = self.expected_pagerank(k_in as f64);
        // p >= q/N > 0, so the Zipf step cannot fail.
        let global = self.amplitude * p.powf(-self.alpha);
        self.local_rank(global, hits)
    }

    /// Smallest in-link count whose predicted position in an n-hit list is
    /// at or above `target_rank`; 0 when the jump floor already suffices.
    pub fn required_inlinks(
        &self,
        target_rank: f64,
        hits: u64,
    ) -> Result<u64, RankModelError> {
        if !(target_rank > 0.0) {
            return Err(RankModelError::UnreachableTarget(target_rank));
        }
        if self.predict_local_rank(0, hits) <= target_rank {
            return Ok(0);
        }
        // Invert the chain analytically, then settle boundary rounding
        // against the forward formula.
        let p_needed = (self.amplitude * hits as f64 / (self.web_size * target_rank))
            .powf(1.0 / self.alpha);
        let k_real =
            (p_needed * self.web_size - self.q) * self.mean_k_in / (1.0 - self.q);
        if !k_real.is_finite() || k_real >= u64::MAX as f64 {
            return Err(RankModelError::UnreachableTarget(target_rank));
        }
        let mut k = k_real.max(0.0).ceil() as u64;
        let mut guard = 0;
        while self.predict_local_rank(k, hits) > target_rank {
            k += 1;
            guard += 1;
            if guard > 1000 {
                return Err(RankModelError::UnreachableTarget(target_rank));
            }
        }
        while k > 0 && self.predict_local_rank(k - 1, hits) <= target_rank {
            k -= 1;
        }
        Ok(k)
    }
}

/// One observed (in-degree, list size, position) triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankObservation {
    pub k_in: u64,
    pub hits: u64,
    pub rank: u64,
}

impl RankObservation {
    pub fn new(k_in: u64, hits: u64, rank: u64) -> Result<Self, RankModelError> {
        if rank == 0 {
            return Err(RankModelError::InvalidObservation(
                "rank positions start at 1".into(),
            ));
        }
        if rank > hits {
            return Err(RankModelError::InvalidObservation(format!(
                "rank {rank} exceeds the list size {hits}"
            )));
        }
        if rank > RESULT_LIST_CAP {
            return Err(RankModelError::InvalidObservation(format!(
                "rank {rank} exceeds the {RESULT_LIST_CAP}-result display cap"
            )));
        }
        Ok(Self { k_in, hits, rank })
    }
}

/// A calibrated model plus the loss it achieved.
#[derive(Debug, Clone, Copy)]
pub struct Calibration {
    pub model: RankModel,
    /// Mean squared log-rank error at the fitted amplitude.
    pub loss: f64,
}

/// Minimum number of observations accepted by [`calibrate_amplitude`].
pub const MIN_OBSERVATIONS: usize = 10;

/// Fits the amplitude A by minimizing the mean squared error between log
/// predicted and log observed positions. Predictions are clamped to the
/// display cap only for observations sitting at the cap (those are
/// censored); everything else uses the raw prediction. Deterministic:
/// closed-form seed, then a fixed grid/trisection refinement in log A.
pub fn calibrate_amplitude(
    observations: &[RankObservation],
    base: &RankModel,
) -> Result<Calibration, RankModelError> {
    if observations.len() < MIN_OBSERVATIONS {
        return Err(RankModelError::TooFewObservations {
            need: MIN_OBSERVATIONS,
            got: observations.len(),
        });
    }
    if observations.iter().all(|o| o == &observations[0]) {
        return Err(RankModelError::DegenerateObservations);
    }
    let unit = RankModel {
        amplitude: 1.0,
        ..*base
    };
    // ln predict(A) = ln A + ln C_i with C_i the unit-amplitude prediction.
    let log_c: Vec<f64> = observations
        .iter()
        .map(|o| unit.predict_local_rank(o.k_in, o.hits).ln())
        .collect();
    let log_r: Vec<f64> = observations.iter().map(|o| (o.rank as f64).ln()).collect();
    let censored: Vec<bool> = observations
        .iter()
        .map(|o| o.rank >= RESULT_LIST_CAP)
        .collect();
    let cap_log = (RESULT_LIST_CAP as f64).ln();

    let loss_at = |log_a: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..log_c.len() {
            let mut pred = log_a + log_c[i];
            if censored[i] && pred > cap_log {
                pred = cap_log;
            }
            let d = pred - log_r[i];
            acc += d * d;
        }
        acc / log_c.len() as f64
    };

    // Uncapped least squares has the closed form mean(log r - log C).
    let seed = log_c
        .iter()
        .zip(&log_r)
        .map(|(&c, &r)| r - c)
        .sum::<f64>()
        / log_c.len() as f64;

    let mut best = seed;
    let mut best_loss = loss_at(seed);
    let span = 8.0;
    let steps = 1600;
    for i in 0..=steps {
        let u = seed - span + 2.0 * span * i as f64 / steps as f64;
        let l = loss_at(u);
        if l < best_loss {
            best_loss = l;
            best = u;
        }
    }
    let (mut lo, mut hi) = (best - 2.0 * span / steps as f64, best + 2.0 * span / steps as f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if loss_at(m1) <= loss_at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let log_a = 0.5 * (lo + hi);
    let model = RankModel {
        amplitude: log_a.exp(),
        ..*base
    }
    .validated()?;
    Ok(Calibration {
        model,
        loss: loss_at(log_a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn model() -> RankModel {
        RankModel::default()
    }

    #[test]
    fn default_model_is_valid() {
        assert!(model().validated().is_ok());
    }

    #[test]
    fn global_rank_example_and_scaling() {
        let m = model();
        // Independent evaluation: 1.5e-4 * (1e-8)^(-1.1) = 94643.60167202912.
        let r = m.global_rank(1e-8).unwrap();
        assert!((r - 94643.60167202912).abs() / r < 1e-12);
        // Doubling p multiplies the rank by 2^(-alpha), exactly.
        for p in [1e-9, 3.7e-7, 2e-5] {
            let ratio = m.global_rank(2.0 * p).unwrap() / m.global_rank(p).unwrap();
            assert!((ratio - 2f64.powf(-1.1)).abs() < 1e-12);
        }
        assert!(matches!(
            m.global_rank(0.0),
            Err(RankModelError::NonPositivePageRank(_))
        ));
    }

    #[test]
    fn local_rank_identities() {
        let m = model();
        let n_web = m.web_size as u64;
        assert!((m.local_rank(123.0, n_web) - 123.0).abs() < 1e-9);
        assert!((m.local_rank(m.web_size, 5000) - 5000.0).abs() < 1e-9);
        // Chained from the global-rank example with n = 1e6.
        let chained = m.local_rank(m.global_rank(1e-8).unwrap(), 1_000_000);
        assert!((chained - 11.684395268151745).abs() / chained < 1e-12);
    }

    #[test]
    fn predict_is_exactly_the_composition() {
        let m = model();
        for k in [0u64, 1, 7, 10, 99, 1000, 123_456] {
            for n in [1u64, 1000, 1_000_000] {
                let direct = m.predict_local_rank(k, n);
                let composed = m
                    .local_rank(m.global_rank(m.expected_pagerank(k as f64)).unwrap(), n);
                assert!(
                    (direct - composed).abs() <= 1e-12 * composed.abs(),
                    "k={k} n={n}: {direct} vs {composed}"
                );
            }
        }
    }

    #[test]
    fn predict_matches_independent_oracle_to_six_digits() {
        // Hand evaluation of the full chain at k_in = 1000, n = 1e6 with the
        // default parameters gives 11.059529296914121.
        let r = model().predict_local_rank(1000, 1_000_000);
        assert!((r - 11.0595).abs() < 0.5e-4 * 11.0595, "got {r}");
    }

    #[test]
    fn predict_monotonicity() {
        let m = model();
        let n = 1_000_000;
        let mut last = f64::INFINITY;
        for k in 0..2000u64 {
            let r = m.predict_local_rank(k, n);
            assert!(r < last, "not strictly decreasing at k={k}");
            last = r;
        }
        // Linear in n.
        let r1 = m.predict_local_rank(50, 1000);
        let r2 = m.predict_local_rank(50, 2000);
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn required_inlinks_round_trips() {
        let m = model();
        let n = 1_000_000;
        for k in [10u64, 100, 1000] {
            let target = m.predict_local_rank(k, n);
            assert_eq!(m.required_inlinks(target, n).unwrap(), k);
        }
    }

    #[test]
    fn required_inlinks_floor_and_oracle() {
        let m = model();
        let n = 1_000_000;
        let floor_rank = m.predict_local_rank(0, n);
        assert_eq!(m.required_inlinks(floor_rank + 1.0, n).unwrap(), 0);

        // Bisection oracle over the forward formula for a top-10 target.
        let target = 10.0;
        let (mut lo, mut hi) = (0u64, 1_000_000_000u64);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if m.predict_local_rank(mid, n) <= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        assert_eq!(lo, 1097);
        assert_eq!(m.required_inlinks(target, n).unwrap(), lo);
    }

    #[test]
    fn unreachable_targets_error() {
        let m = model();
        assert!(matches!(
            m.required_inlinks(0.0, 100),
            Err(RankModelError::UnreachableTarget(_))
        ));
    }

    #[test]
    fn observation_validation() {
        assert!(RankObservation::new(5, 100, 1).is_ok());
        assert!(RankObservation::new(5, 100, 100).is_ok());
        assert!(matches!(
            RankObservation::new(5, 100, 0),
            Err(RankModelError::InvalidObservation(_))
        ));
        assert!(matches!(
            RankObservation::new(5, 100, 101),
            Err(RankModelError::InvalidObservation(_))
        ));
        assert!(matches!(
            RankObservation::new(5, 10_000, 1001),
            Err(RankModelError::InvalidObservation(_))
        ));
    }

    fn synthetic_observations(
        m: &RankModel,
        noise_sigma: f64,
        seed: u64,
    ) -> Vec<RankObservation> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut obs = Vec::new();
        for i in 0..200u64 {
            let k = 10 + i * 5;
            let n = 300_000u64;
            let mut r = m.predict_local_rank(k, n);
            if noise_sigma > 0.0 {
                // Box-Muller lognormal factor.
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                r *= (noise_sigma * z).exp();
            }
            let rank = (r.round() as u64).clamp(1, n.min(RESULT_LIST_CAP));
            obs.push(RankObservation::new(k, n, rank).unwrap());
        }
        obs
    }

    #[test]
    fn calibration_recovers_amplitude_on_noiseless_data() {
        let truth = model();
        let obs = synthetic_observations(&truth, 0.0, 1);
        let base = RankModel {
            amplitude: 1.0,
            ..truth
        };
        let cal = calibrate_amplitude(&obs, &base).unwrap();
        let ratio = cal.model.amplitude / truth.amplitude;
        assert!(
            (ratio - 1.0).abs() < 0.01,
            "amplitude ratio {ratio}, loss {}",
            cal.loss
        );
    }

    #[test]
    fn calibration_is_invariant_to_joint_scaling() {
        let truth = model();
        let obs = synthetic_observations(&truth, 0.0, 2);
        let scaled: Vec<RankObservation> = obs
            .iter()
            .filter(|o| o.rank * 3 <= RESULT_LIST_CAP)
            .map(|o| RankObservation::new(o.k_in, o.hits * 3, o.rank * 3).unwrap())
            .collect();
        let kept: Vec<RankObservation> = obs
            .iter()
            .filter(|o| o.rank * 3 <= RESULT_LIST_CAP)
            .copied()
            .collect();
        let base = RankModel {
            amplitude: 1.0,
            ..truth
        };
        let a1 = calibrate_amplitude(&kept, &base).unwrap().model.amplitude;
        let a2 = calibrate_amplitude(&scaled, &base).unwrap().model.amplitude;
        assert!((a1 / a2 - 1.0).abs() < 1e-6, "{a1} vs {a2}");
    }

    #[test]
    fn calibration_under_lognormal_noise() {
        let truth = model();
        let base = RankModel {
            amplitude: 1.0,
            ..truth
        };
        for seed in 0..10u64 {
            let obs = synthetic_observations(&truth, 0.5, 100 + seed);
            let cal = calibrate_amplitude(&obs, &base).unwrap();
            let ratio = cal.model.amplitude / truth.amplitude;
            assert!(
                ratio > 1.0 / 1.3 && ratio < 1.3,
                "seed {seed}: amplitude ratio {ratio}"
            );
        }
    }

    #[test]
    fn calibration_input_validation() {
        let base = model();
        let few = vec![RankObservation::new(10, 1000, 5).unwrap(); 5];
        assert!(matches!(
            calibrate_amplitude(&few, &base),
            Err(RankModelError::TooFewObservations { .. })
        ));
        let same = vec![RankObservation::new(10, 1000, 5).unwrap(); 20];
        assert!(matches!(
            calibrate_amplitude(&same, &base),
            Err(RankModelError::DegenerateObservations)
        ));
    }

    #[test]
    fn alpha_refit_from_pagerank_tail() {
        // Pareto tail with density exponent 2.3 should set alpha ~= 1.3.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..50_000)
            .map(|_| 1e-8 * (1.0 - rng.random::<f64>()).powf(-1.0 / 1.3))
            .collect();
        let m = model().with_alpha_from_pagerank(&values).unwrap();
        assert!((m.alpha - 1.3).abs() < 0.05, "alpha {}", m.alpha);
    }
}
