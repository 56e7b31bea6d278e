//! Streaming higher-order crossing counter.
//!
//! Maintains the difference cascade of an incoming signal: level 1 sees the
//! raw samples, level `k` sees the `(k-1)`-th difference. Each level clips
//! its value against a reference (level 1: zero, a fixed level, or a running
//! mean; deeper levels: always zero) and counts sign changes of the clipped
//! bit. The per-level state is a tail value, the previous bit, and two
//! counters, so total storage is O(levels) regardless of stream length.
//!
//! States serialize to a JSON snapshot carrying a configuration hash;
//! restoring against a different configuration is refused. Segmented
//! counting is supported via [`HocState::continue_segment`] +
//! [`merge`], which reproduce single-pass counts exactly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Samples a running level-1 mean observes before crossings are counted.
pub const DEFAULT_RUNNING_WARMUP: u64 = 50;

/// Level-1 clipping reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeanMode {
    /// Clip against zero (the signal is already centered).
    Zero,
    /// Clip against a fixed user-supplied level.
    Fixed(f64),
    /// Clip against the cumulative sample mean; counting starts only after
    /// the warm-up below, since early mean estimates are noisy.
    Running,
}

/// Crossing-counter configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HocConfig {
    /// Number of cascade levels L; level k counts crossings of the
    /// (k-1)-th difference.
    pub levels: usize,
    pub mean_mode: MeanMode,
    /// Warm-up samples before running-mean counting starts; unused by the
    /// other modes.
    pub running_warmup: u64,
    /// Optional forgetting factor for EWMA inter-crossing periods.
    pub ewma_lambda: Option<f64>,
}

impl HocConfig {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidModel("need at least one level".into()));
        }
        Ok(Self {
            levels,
            mean_mode: MeanMode::Zero,
            running_warmup: DEFAULT_RUNNING_WARMUP,
            ewma_lambda: None,
        })
    }

    pub fn with_mean_mode(mut self, mode: MeanMode) -> Self {
        self.mean_mode = mode;
        self
    }

    pub fn with_running_warmup(mut self, warmup: u64) -> Self {
        self.running_warmup = warmup;
        self
    }

    pub fn with_ewma(mut self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidLambda(lambda));
        }
        self.ewma_lambda = Some(lambda);
        Ok(self)
    }

    /// Canonical hash of everything that shapes state evolution. Estimation
    /// settings (model order, lag offset) are deliberately not part of it:
    /// the same counts can be re-analyzed at any order.
    pub fn hash(&self) -> String {
        let mean = match self.mean_mode {
            MeanMode::Zero => "zero".to_string(),
            MeanMode::Fixed(v) => format!("fixed:{v:?}"),
            MeanMode::Running => "running".to_string(),
        };
        let lambda = match self.ewma_lambda {
            Some(l) => format!("{l:?}"),
            None => "none".to_string(),
        };
        let text = format!(
            "hoc-v1;levels={};mean={};warmup={};lambda={}",
            self.levels, mean, self.running_warmup, lambda
        );
        let digest = Sha256::digest(text.as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// EWMA of inter-crossing periods at one level (number of samples between
/// consecutive crossing events).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaState {
    pub lambda: f64,
    /// Smoothed period; unset until two crossings have been seen.
    pub mean_period: Option<f64>,
    /// Samples at this level since the last crossing.
    pub run_length: u64,
    /// Whether a crossing has anchored the period clock yet.
    pub seen_crossing: bool,
}

impl EwmaState {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self {
            lambda,
            mean_period: None,
            run_length: 0,
            seen_crossing: false,
        })
    }

    /// Rate estimate `1 / mean_period`, once available.
    pub fn rate(&self) -> Option<f64> {
        self.mean_period.map(|t| 1.0 / t)
    }
}

/// Folds one observed inter-crossing period into the EWMA. The first
/// observation initializes the mean outright.
pub fn ewma_update(state: &EwmaState, period: f64) -> Result<EwmaState> {
    if !(period.is_finite() && period >= 1.0) {
        return Err(Error::InvalidPeriod(period));
    }
    let mut next = *state;
    next.mean_period = Some(match state.mean_period {
        None => period,
        Some(prev) => (1.0 - state.lambda) * prev + state.lambda * period,
    });
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Level {
    /// Last raw value of this level's series (feeds the next difference).
    tail: Option<f64>,
    /// Previous clipped bit.
    bit: Option<bool>,
    /// Crossing count D_k.
    count: u64,
    /// Values observed at this level, N_k.
    samples: u64,
    ewma: Option<EwmaState>,
}

impl Level {
    fn new(ewma_lambda: Option<f64>) -> Self {
        Self {
            tail: None,
            bit: None,
            count: 0,
            samples: 0,
            ewma: ewma_lambda.map(|l| EwmaState::new(l).expect("validated lambda")),
        }
    }

    fn observe(&mut self, value: f64) {
        self.samples += 1;
        let bit = value >= 0.0;
        let crossed = self.bit.map_or(false, |prev| prev != bit);
        self.bit = Some(bit);
        if crossed {
            self.count += 1;
        }
        if let Some(e) = &mut self.ewma {
            e.run_length += 1;
            if crossed {
                if e.seen_crossing {
                    *e = ewma_update(e, e.run_length as f64).expect("run length >= 1");
                }
                e.seen_crossing = true;
                e.run_length = 0;
            }
        }
    }
}

/// Running-mean accumulator for the level-1 reference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanAccumulator {
    pub sum: f64,
    pub count: u64,
}

/// Normalized crossing counts frozen out of a state.
///
/// `rate(k)` is `D_{k+1} / (N_{k+1} - 1)`, or the EWMA reciprocal-period
/// when the state was built in EWMA reporting mode; levels with fewer than
/// two samples (or no EWMA period yet) report `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct HocCounts {
    d: Vec<u64>,
    rates: Vec<Option<f64>>,
    samples: Vec<u64>,
    total: u64,
}

impl HocCounts {
    /// Synthetic counts carrying only normalized rates; raw counts and
    /// sample tallies are zero. Used to drive the lag recursion from
    /// predicted or externally supplied rates.
    pub fn from_rates(rates: &[f64]) -> Self {
        Self {
            d: vec![0; rates.len()],
            rates: rates.iter().map(|&r| Some(r)).collect(),
            samples: vec![0; rates.len()],
            total: 0,
        }
    }

    /// Raw crossing counts `D_1..D_L`.
    pub fn counts(&self) -> &[u64] {
        &self.d
    }

    /// Normalized rate for level `idx + 1`.
    pub fn rate(&self, idx: usize) -> Option<f64> {
        self.rates.get(idx).copied().flatten()
    }

    /// All rates, `None` where a level is not yet valid.
    pub fn rates(&self) -> &[Option<f64>] {
        &self.rates
    }

    /// Per-level sample counts `N_1..N_L`.
    pub fn level_samples(&self) -> &[u64] {
        &self.samples
    }

    /// Samples ingested at level 1.
    pub fn total_samples(&self) -> u64 {
        self.total
    }

    pub fn levels(&self) -> usize {
        self.d.len()
    }

    /// True when levels `1..=levels` all have valid rates.
    pub fn valid_through(&self, levels: usize) -> bool {
        levels <= self.rates.len() && self.rates[..levels].iter().all(|r| r.is_some())
    }
}

/// Live crossing-counter state. Single writer; snapshots are plain values.
#[derive(Debug, Clone, PartialEq)]
pub struct HocState {
    config: HocConfig,
    levels: Vec<Level>,
    mean: MeanAccumulator,
    /// Samples seen at level 1 since the stream began (warm-up gating
    /// included), as opposed to `levels[0].samples` which counts only
    /// clip-eligible samples.
    raw_samples: u64,
}

impl HocState {
    pub fn new(config: HocConfig) -> Self {
        let levels = (0..config.levels)
            .map(|_| Level::new(config.ewma_lambda))
            .collect();
        Self {
            config,
            levels,
            mean: MeanAccumulator::default(),
            raw_samples: 0,
        }
    }

    pub fn config(&self) -> &HocConfig {
        &self.config
    }

    /// Total raw samples ingested.
    pub fn samples_seen(&self) -> u64 {
        self.raw_samples
    }

    /// Feeds one sample through the whole cascade. Rejects non-finite input
    /// without touching the state.
    pub fn ingest(&mut self, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        self.raw_samples += 1;

        // Level-1 reference and warm-up gating.
        let (reference, gated) = match self.config.mean_mode {
            MeanMode::Zero => (0.0, false),
            MeanMode::Fixed(level) => (level, false),
            MeanMode::Running => {
                self.mean.sum += y;
                self.mean.count += 1;
                let gated = self.mean.count < self.config.running_warmup.max(1);
                (self.mean.sum / self.mean.count as f64, gated)
            }
        };

        let mut value = y;
        for k in 0..self.levels.len() {
            if k == 0 {
                if !gated {
                    self.levels[0].observe(value - reference);
                }
            } else {
                self.levels[k].observe(value);
            }
            match self.levels[k].tail.replace(value) {
                Some(prev) => value -= prev,
                None => break,
            }
        }
        Ok(())
    }

    /// Convenience bulk ingest.
    pub fn ingest_all(&mut self, ys: &[f64]) -> Result<()> {
        for &y in ys {
            self.ingest(y)?;
        }
        Ok(())
    }

    /// Freezes normalized counts out of the live state. Levels with fewer
    /// than two samples are flagged invalid rather than erroring.
    pub fn snapshot(&self) -> HocCounts {
        let rates = self
            .levels
            .iter()
            .map(|l| {
                if l.samples >= 2 {
                    Some(l.count as f64 / (l.samples - 1) as f64)
                } else {
                    None
                }
            })
            .collect();
        self.counts_with(rates)
    }

    /// Like [`HocState::snapshot`] but rates come from the EWMA period
    /// estimates (`1 / mean_period`); levels without a period yet are
    /// invalid. `None` when EWMA was not configured.
    pub fn snapshot_ewma(&self) -> Option<HocCounts> {
        self.config.ewma_lambda?;
        let rates = self
            .levels
            .iter()
            .map(|l| l.ewma.as_ref().and_then(|e| e.rate()))
            .collect();
        Some(self.counts_with(rates))
    }

    fn counts_with(&self, rates: Vec<Option<f64>>) -> HocCounts {
        HocCounts {
            d: self.levels.iter().map(|l| l.count).collect(),
            rates,
            samples: self.levels.iter().map(|l| l.samples).collect(),
            total: self.levels.first().map_or(0, |l| l.samples),
        }
    }

    /// Serializable full state.
    pub fn export(&self) -> StateFile {
        StateFile {
            levels: self.config.levels,
            counts: self.levels.iter().map(|l| l.count).collect(),
            samples: self.levels.iter().map(|l| l.samples).collect(),
            tails: self.levels.iter().map(|l| l.tail).collect(),
            bits: self
                .levels
                .iter()
                .map(|l| l.bit.map(|b| b as u8))
                .collect(),
            mean_mode: match self.config.mean_mode {
                MeanMode::Zero => "zero".into(),
                MeanMode::Fixed(_) => "fixed".into(),
                MeanMode::Running => "running".into(),
            },
            mean_state: match self.config.mean_mode {
                MeanMode::Zero => None,
                MeanMode::Fixed(level) => Some(MeanStateFile {
                    level: Some(level),
                    sum: None,
                    count: None,
                    warmup: None,
                    raw_samples: self.raw_samples,
                }),
                MeanMode::Running => Some(MeanStateFile {
                    level: None,
                    sum: Some(self.mean.sum),
                    count: Some(self.mean.count),
                    warmup: Some(self.config.running_warmup),
                    raw_samples: self.raw_samples,
                }),
            },
            ewma: self.config.ewma_lambda.map(|lambda| EwmaFile {
                lambda,
                periods: self
                    .levels
                    .iter()
                    .map(|l| l.ewma.as_ref().and_then(|e| e.mean_period))
                    .collect(),
                run_lengths: self
                    .levels
                    .iter()
                    .map(|l| l.ewma.as_ref().map_or(0, |e| e.run_length))
                    .collect(),
                seen: self
                    .levels
                    .iter()
                    .map(|l| l.ewma.as_ref().is_some_and(|e| e.seen_crossing))
                    .collect(),
            }),
            config_hash: self.config.hash(),
        }
    }

    /// Exact resume from a snapshot: counting continues as if uninterrupted.
    pub fn restore(file: &StateFile) -> Result<Self> {
        let config = file.reconstruct_config()?;
        Self::restore_with_config(file, &config)
    }

    /// Exact resume, additionally insisting the snapshot was produced under
    /// `config` (hash comparison).
    pub fn restore_with_config(file: &StateFile, config: &HocConfig) -> Result<Self> {
        file.validate()?;
        if file.config_hash != config.hash() {
            return Err(Error::ConfigMismatch(format!(
                "state file hash {} does not match configuration hash {}",
                file.config_hash,
                config.hash()
            )));
        }
        let mut state = Self::new(config.clone());
        for (k, lvl) in state.levels.iter_mut().enumerate() {
            lvl.count = file.counts[k];
            lvl.samples = file.samples[k];
            lvl.tail = file.tails[k];
            lvl.bit = file.bits[k].map(|b| b != 0);
            if let (Some(e), Some(ef)) = (&mut lvl.ewma, &file.ewma) {
                e.mean_period = ef.periods[k];
                e.run_length = ef.run_lengths[k];
                e.seen_crossing = ef.seen[k];
            }
        }
        if let Some(ms) = &file.mean_state {
            state.mean.sum = ms.sum.unwrap_or(0.0);
            state.mean.count = ms.count.unwrap_or(0);
            state.raw_samples = ms.raw_samples;
        } else {
            state.raw_samples = file.samples.first().copied().unwrap_or(0);
        }
        Ok(state)
    }

    /// Continuation state for segmented counting: tails, bits, mean and EWMA
    /// state carry over (so boundary crossings are counted in the new
    /// segment), but counts and sample tallies restart at zero. Combine with
    /// the originating state via [`merge`].
    pub fn continue_segment(file: &StateFile) -> Result<Self> {
        let mut state = Self::restore(file)?;
        for lvl in state.levels.iter_mut() {
            lvl.count = 0;
            lvl.samples = 0;
        }
        state.raw_samples = 0;
        Ok(state)
    }
}

/// Combines a finished segment `a` with its continuation `b`
/// (`b` must have started from [`HocState::continue_segment`] of `a`'s
/// exported state; that contiguity is the caller's contract). Counts and
/// sample tallies add; tails, bits, mean and EWMA state are `b`'s. The
/// result equals a single uninterrupted pass over both segments.
pub fn merge(a: &HocState, b: &HocState) -> Result<HocState> {
    if a.config != b.config {
        return Err(Error::ConfigMismatch(
            "cannot merge states with different configurations".into(),
        ));
    }
    let mut merged = b.clone();
    for (m, x) in merged.levels.iter_mut().zip(&a.levels) {
        m.count += x.count;
        m.samples += x.samples;
    }
    merged.raw_samples += a.raw_samples;
    Ok(merged)
}

/// Per-level EWMA payload of a state file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwmaFile {
    pub lambda: f64,
    pub periods: Vec<Option<f64>>,
    pub run_lengths: Vec<u64>,
    pub seen: Vec<bool>,
}

/// Level-1 reference payload of a state file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStateFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warmup: Option<u64>,
    pub raw_samples: u64,
}

/// Persistable crossing-counter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub levels: usize,
    pub counts: Vec<u64>,
    pub samples: Vec<u64>,
    pub tails: Vec<Option<f64>>,
    pub bits: Vec<Option<u8>>,
    pub mean_mode: String,
    pub mean_state: Option<MeanStateFile>,
    pub ewma: Option<EwmaFile>,
    pub config_hash: String,
}

impl StateFile {
    /// Rebuilds the configuration the file claims to come from.
    pub fn reconstruct_config(&self) -> Result<HocConfig> {
        let mut config = HocConfig::new(self.levels)?;
        config.mean_mode = match self.mean_mode.as_str() {
            "zero" => MeanMode::Zero,
            "fixed" => {
                let level = self
                    .mean_state
                    .as_ref()
                    .and_then(|m| m.level)
                    .ok_or_else(|| {
                        Error::CorruptState("fixed mean mode without level".into())
                    })?;
                MeanMode::Fixed(level)
            }
            "running" => MeanMode::Running,
            other => {
                return Err(Error::CorruptState(format!(
                    "unknown mean mode {other:?}"
                )))
            }
        };
        if let Some(ms) = &self.mean_state {
            if let Some(w) = ms.warmup {
                config.running_warmup = w;
            }
        }
        if let Some(e) = &self.ewma {
            config = config.with_ewma(e.lambda)?;
        }
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let l = self.levels;
        if l == 0 {
            return Err(Error::CorruptState("zero levels".into()));
        }
        let lens = [
            self.counts.len(),
            self.samples.len(),
            self.tails.len(),
            self.bits.len(),
        ];
        if lens.iter().any(|&len| len != l) {
            return Err(Error::CorruptState(format!(
                "array lengths {lens:?} do not match level count {l}"
            )));
        }
        if let Some(e) = &self.ewma {
            if e.periods.len() != l || e.run_lengths.len() != l || e.seen.len() != l {
                return Err(Error::CorruptState("EWMA array length mismatch".into()));
            }
        }
        if self.tails.iter().flatten().any(|t| !t.is_finite()) {
            return Err(Error::CorruptState("non-finite tail value".into()));
        }
        for (k, (&c, &s)) in self.counts.iter().zip(&self.samples).enumerate() {
            if c > s.saturating_sub(1) {
                return Err(Error::CorruptState(format!(
                    "level {} count {} exceeds sample bound {}",
                    k + 1,
                    c,
                    s.saturating_sub(1)
                )));
            }
        }
        let hash = self.reconstruct_config()?.hash();
        if hash != self.config_hash {
            return Err(Error::ConfigMismatch(format!(
                "stored hash {} does not match file contents (expected {})",
                self.config_hash, hash
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn state(levels: usize) -> HocState {
        HocState::new(HocConfig::new(levels).unwrap())
    }

    #[test]
    fn constant_sign_no_crossings() {
        let mut s = state(1);
        s.ingest_all(&[1.0, 2.0, 0.5, 3.0, 0.1]).unwrap();
        assert_eq!(s.snapshot().counts(), &[0]);
    }

    #[test]
    fn alternating_signs_cross_every_step() {
        let mut s = state(1);
        let seq: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        s.ingest_all(&seq).unwrap();
        let counts = s.snapshot();
        assert_eq!(counts.counts(), &[99]);
        assert_abs_diff_eq!(counts.rate(0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tie_maps_to_positive_bit() {
        // Zero counts as non-negative, so -1, 0, -1 crosses twice.
        let mut s = state(1);
        s.ingest_all(&[-1.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.snapshot().counts(), &[2]);
    }

    #[test]
    fn difference_cascade_sample_counts() {
        let mut s = state(4);
        s.ingest_all(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]).unwrap();
        let counts = s.snapshot();
        assert_eq!(counts.level_samples(), &[6, 5, 4, 3]);
        assert_eq!(counts.total_samples(), 6);
    }

    #[test]
    fn difference_values_flow_down() {
        // 0, 1, 3, 2 -> first differences 1, 2, -1 -> one crossing at level 2.
        let mut s = state(2);
        s.ingest_all(&[0.0, 1.0, 3.0, 2.0]).unwrap();
        let counts = s.snapshot();
        assert_eq!(counts.counts()[1], 1);
    }

    #[test]
    fn non_finite_rejected_without_mutation() {
        let mut s = state(2);
        s.ingest_all(&[1.0, -1.0]).unwrap();
        let before = s.clone();
        assert!(matches!(s.ingest(f64::NAN), Err(Error::NonFiniteSample)));
        assert!(matches!(
            s.ingest(f64::INFINITY),
            Err(Error::NonFiniteSample)
        ));
        assert_eq!(s, before);
    }

    #[test]
    fn degenerate_snapshot_flagged() {
        let s = state(2);
        assert!(s.snapshot().rate(0).is_none());
        let mut s = state(2);
        s.ingest(1.0).unwrap();
        let counts = s.snapshot();
        assert!(counts.rate(0).is_none());
        assert!(counts.rate(1).is_none());
        assert!(!counts.valid_through(1));
    }

    #[test]
    fn published_count_normalization() {
        // 2088 crossings over 10^4 samples normalizes to 0.20882.
        let mut s = state(1);
        // Direct synthetic: alternate in bursts to land on exactly 2088
        // crossings in 10^4 samples.
        let mut seq = Vec::with_capacity(10_000);
        let mut sign = 1.0;
        let mut flips = 0;
        for i in 0..10_000usize {
            if flips < 2088 && i % 4 == 3 {
                sign = -sign;
                flips += 1;
            }
            seq.push(sign);
        }
        assert_eq!(flips, 2088);
        s.ingest_all(&seq).unwrap();
        let counts = s.snapshot();
        assert_eq!(counts.counts(), &[2088]);
        assert_abs_diff_eq!(counts.rate(0).unwrap(), 0.20882, epsilon = 1e-5);
    }

    #[test]
    fn amplitude_invariance_fixed_scales() {
        let spec = crate::model::benchmark_arma21();
        let noise = crate::model::NoiseConfig::new(31, 1.0, 2000).unwrap();
        let y = crate::model::generate_arma(&spec, &noise).unwrap();
        let mut base = state(4);
        base.ingest_all(&y).unwrap();
        for scale in [1e-3, 0.5, 3.0, 1e4] {
            let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let mut s = state(4);
            s.ingest_all(&scaled).unwrap();
            assert_eq!(s.snapshot().counts(), base.snapshot().counts());
        }
    }

    #[test]
    fn flat_input_never_crosses() {
        let mut s = state(3);
        s.ingest_all(&[5.0; 100]).unwrap();
        assert_eq!(s.snapshot().counts(), &[0, 0, 0]);
    }

    #[test]
    fn running_mean_centers_biased_signal() {
        // A constant offset makes the zero-reference counter blind; the
        // running mean recovers the crossings.
        let seq: Vec<f64> = (0..2000)
            .map(|i| 10.0 + if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut zero_ref = state(1);
        zero_ref.ingest_all(&seq).unwrap();
        assert_eq!(zero_ref.snapshot().counts(), &[0]);

        let cfg = HocConfig::new(1)
            .unwrap()
            .with_mean_mode(MeanMode::Running);
        let mut s = HocState::new(cfg);
        s.ingest_all(&seq).unwrap();
        let counts = s.snapshot();
        // Counting starts after the 50-sample warm-up.
        assert_eq!(counts.level_samples()[0], 2000 - 49);
        let rate = counts.rate(0).unwrap();
        assert!(rate > 0.95, "rate = {rate}");
    }

    #[test]
    fn fixed_reference_mode() {
        let seq: Vec<f64> = (0..100)
            .map(|i| 10.0 + if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let cfg = HocConfig::new(1)
            .unwrap()
            .with_mean_mode(MeanMode::Fixed(10.0));
        let mut s = HocState::new(cfg);
        s.ingest_all(&seq).unwrap();
        assert_eq!(s.snapshot().counts(), &[99]);
    }

    #[test]
    fn ewma_update_extremes() {
        let e = EwmaState::new(1.0).unwrap();
        let e = ewma_update(&e, 10.0).unwrap();
        let e = ewma_update(&e, 4.0).unwrap();
        assert_eq!(e.mean_period, Some(4.0));

        let e = EwmaState::new(0.0).unwrap();
        let e = ewma_update(&e, 10.0).unwrap();
        let e = ewma_update(&e, 4.0).unwrap();
        assert_eq!(e.mean_period, Some(10.0));
    }

    #[test]
    fn ewma_geometric_convergence() {
        // Initialized at 10, fed constant periods of 5 with lambda 0.1:
        // mean after j updates is 5 + 5 * 0.9^j.
        let mut e = EwmaState::new(0.1).unwrap();
        e = ewma_update(&e, 10.0).unwrap();
        for j in 1..=20 {
            e = ewma_update(&e, 5.0).unwrap();
            let expect = 5.0 + 5.0 * 0.9f64.powi(j);
            assert_abs_diff_eq!(e.mean_period.unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn ewma_rejects_bad_inputs() {
        assert!(matches!(EwmaState::new(1.5), Err(Error::InvalidLambda(_))));
        assert!(matches!(EwmaState::new(-0.1), Err(Error::InvalidLambda(_))));
        let e = EwmaState::new(0.5).unwrap();
        assert!(matches!(
            ewma_update(&e, 0.5),
            Err(Error::InvalidPeriod(_))
        ));
    }

    #[test]
    fn ewma_rates_track_alternation() {
        let cfg = HocConfig::new(1).unwrap().with_ewma(0.2).unwrap();
        let mut s = HocState::new(cfg);
        let seq: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        s.ingest_all(&seq).unwrap();
        let counts = s.snapshot_ewma().unwrap();
        assert_abs_diff_eq!(counts.rate(0).unwrap(), 1.0, epsilon = 1e-12);
        // Cumulative snapshot still available alongside.
        assert_abs_diff_eq!(s.snapshot().rate(0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn export_restore_round_trip() {
        let cfg = HocConfig::new(3).unwrap().with_ewma(0.3).unwrap();
        let mut s = HocState::new(cfg);
        let noise = crate::model::NoiseConfig::new(8, 1.0, 500).unwrap();
        s.ingest_all(&noise.sample(500)).unwrap();

        let file = s.export();
        let text = serde_json::to_string(&file).unwrap();
        let parsed: StateFile = serde_json::from_str(&text).unwrap();
        let restored = HocState::restore(&parsed).unwrap();
        assert_eq!(restored, s);
        // Byte-identical re-export.
        assert_eq!(serde_json::to_string(&restored.export()).unwrap(), text);
    }

    #[test]
    fn restore_refuses_config_mismatch() {
        let mut s = state(2);
        s.ingest_all(&[1.0, -1.0, 1.0]).unwrap();
        let file = s.export();
        let other = HocConfig::new(3).unwrap();
        assert!(matches!(
            HocState::restore_with_config(&file, &other),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn restore_refuses_corrupt_file() {
        let mut s = state(2);
        s.ingest_all(&[1.0, -1.0, 1.0]).unwrap();
        let mut file = s.export();
        file.counts[0] = 999; // impossible given samples
        assert!(matches!(
            HocState::restore(&file),
            Err(Error::CorruptState(_))
        ));

        let mut file = s.export();
        file.config_hash = "0000".into();
        assert!(matches!(
            HocState::restore(&file),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn restore_continues_as_uninterrupted() {
        let noise = crate::model::NoiseConfig::new(21, 1.0, 1000).unwrap();
        let y = noise.sample(1000);

        let mut full = state(3);
        full.ingest_all(&y).unwrap();

        let mut first = state(3);
        first.ingest_all(&y[..400]).unwrap();
        let mut resumed = HocState::restore(&first.export()).unwrap();
        resumed.ingest_all(&y[400..]).unwrap();

        assert_eq!(resumed.snapshot(), full.snapshot());
        assert_eq!(resumed.export(), full.export());
    }

    #[test]
    fn segmented_counts_merge_to_single_pass() {
        let noise = crate::model::NoiseConfig::new(22, 1.0, 1000).unwrap();
        let y = noise.sample(1000);

        let mut full = state(4);
        full.ingest_all(&y).unwrap();

        for split in [1usize, 250, 500, 999] {
            let mut a = state(4);
            a.ingest_all(&y[..split]).unwrap();
            let mut b = HocState::continue_segment(&a.export()).unwrap();
            b.ingest_all(&y[split..]).unwrap();
            let merged = merge(&a, &b).unwrap();
            assert_eq!(merged.snapshot(), full.snapshot(), "split at {split}");
            assert_eq!(merged.export(), full.export(), "split at {split}");
        }
    }

    #[test]
    fn three_way_chained_split() {
        let noise = crate::model::NoiseConfig::new(23, 1.0, 900).unwrap();
        let y = noise.sample(900);

        let mut full = state(3);
        full.ingest_all(&y).unwrap();

        let mut a = state(3);
        a.ingest_all(&y[..300]).unwrap();
        let mut b = HocState::continue_segment(&a.export()).unwrap();
        b.ingest_all(&y[300..600]).unwrap();
        let ab = merge(&a, &b).unwrap();
        let mut c = HocState::continue_segment(&ab.export()).unwrap();
        c.ingest_all(&y[600..]).unwrap();
        let abc = merge(&ab, &c).unwrap();

        assert_eq!(abc.snapshot(), full.snapshot());
    }

    #[test]
    fn merge_with_empty_continuation() {
        let mut a = state(2);
        a.ingest_all(&[1.0, -2.0, 3.0]).unwrap();
        let b = HocState::continue_segment(&a.export()).unwrap();
        let merged = merge(&a, &b).unwrap();
        assert_eq!(merged.snapshot(), a.snapshot());
    }

    #[test]
    fn merge_rejects_config_mismatch() {
        let a = state(2);
        let b = state(3);
        assert!(matches!(merge(&a, &b), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn counts_monotone_and_bounded() {
        let noise = crate::model::NoiseConfig::new(5, 1.0, 5000).unwrap();
        let mut s = state(3);
        let mut prev = vec![0u64; 3];
        for &v in &noise.sample(5000) {
            s.ingest(v).unwrap();
            let snap = s.snapshot();
            for (k, (&c, &n)) in snap.counts().iter().zip(snap.level_samples()).enumerate() {
                assert!(c >= prev[k]);
                assert!(c <= n.saturating_sub(1));
                prev[k] = c;
            }
        }
        // Each differencing consumes one sample.
        let snap = s.snapshot();
        for k in 1..3 {
            assert_eq!(
                snap.level_samples()[k],
                snap.level_samples()[k - 1] - 1
            );
        }
    }
}
