//! Semiclassical trajectory sampler validating the analytic engine.
//!
//! Each trial draws every mode's quadratures as spike + noise (spike from the
//! state's lattice, weighted by the domain probabilities; noise Gaussian or
//! the exact in-domain residual), draws a unit-variance sample for every
//! vacuum and detector-noise symbol, evaluates the circuit's measurement
//! expressions numerically, applies the real rounding-to-nearest-lattice
//! feedforward, and compares the lattice index committed by each feedforward
//! against the true signal index. Odd shifts on the position feedforward are
//! bit flips, odd shifts on the momentum feedforward phase flips.
//!
//! Trials use counter-based RNG substreams derived from `(seed, trial
//! index)`, so tallies are reproducible regardless of how trials are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{run_with_mode_stats, CircuitReport, LossConfig};
use crate::domains::{domain_stats, DomainPartition, DomainStats};
use crate::engine::Symbol;
use crate::states::{Quadrature, StateModel};
use crate::{CoreError, Result};

/// How per-mode quadrature values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeModel {
    /// Spike at the domain mean, Gaussian noise with the aggregate domain
    /// variance.
    #[default]
    Gaussian,
    /// Inverse-CDF sampling of the exact quadrature marginal.
    ExactMarginal,
}

/// Which circuit the trials run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CircuitModel {
    Ideal,
    Lossy(LossConfig),
}

impl CircuitModel {
    pub fn loss_config(&self) -> LossConfig {
        match self {
            CircuitModel::Ideal => LossConfig::ideal(),
            CircuitModel::Lossy(cfg) => *cfg,
        }
    }
}

/// Full trial-run configuration; identical configs give identical tallies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub circuit: CircuitModel,
    pub delta2: f64,
    /// Logical value of the input state.
    pub input_mu: u8,
    #[serde(default)]
    pub spike_model: SpikeModel,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CoreError::ParameterOutOfRange("trials must be >= 1".into()));
        }
        if self.input_mu > 1 {
            return Err(CoreError::ParameterOutOfRange(format!("input_mu = {}", self.input_mu)));
        }
        if !(self.delta2 > 0.0 && self.delta2 < 1.0) {
            return Err(CoreError::ParameterOutOfRange(format!("delta2 = {}", self.delta2)));
        }
        self.circuit.loss_config().validate()
    }
}

/// Logical-error tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub none: u64,
    pub bit_flip: u64,
    pub phase_flip: u64,
    pub both: u64,
}

impl Counts {
    fn add(&mut self, other: &Counts) {
        self.none += other.none;
        self.bit_flip += other.bit_flip;
        self.phase_flip += other.phase_flip;
        self.both += other.both;
    }

    pub fn total(&self) -> u64 {
        self.none + self.bit_flip + self.phase_flip + self.both
    }

    pub fn as_array(&self) -> [(&'static str, u64); 4] {
        [
            ("none", self.none),
            ("bit_flip", self.bit_flip),
            ("phase_flip", self.phase_flip),
            ("both", self.both),
        ]
    }
}

/// Result of a trial run, with empirical rates and binomial standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub config: TrialConfig,
    pub counts: Counts,
    pub rates: [f64; 4],
    pub std_errs: [f64; 4],
    /// Empirical variances of the rescaled feedforward noise residues;
    /// converge to the analytic V1, V2.
    pub residue_var1: f64,
    pub residue_var2: f64,
}

/// Build the analytic report the trials are compared against: same circuit,
/// mode bindings taken from the sampled states' domain statistics.
pub fn analytic_report(cfg: &TrialConfig) -> Result<CircuitReport> {
    cfg.validate()?;
    let (tables, report) = setup(cfg)?;
    drop(tables);
    Ok(report)
}

/// Run the trials and tally logical errors.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialOutcome> {
    run_trials_distorted(cfg, 1.0)
}

/// Per-class z-score comparison of trial tallies against an analytic report.
#[derive(Debug, Clone, Serialize)]
pub struct McComparison {
    /// `(class, count, empirical rate, analytic probability, z)`.
    pub classes: Vec<ClassComparison>,
    pub max_abs_z: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassComparison {
    pub class: String,
    pub count: u64,
    pub rate: f64,
    pub analytic: f64,
    pub z: f64,
}

impl McComparison {
    /// CSV rows `class,count,rate,analytic,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,rate,analytic,z\n");
        for c in &self.classes {
            out.push_str(&format!("{},{},{},{},{}\n", c.class, c.count, c.rate, c.analytic, c.z));
        }
        out
    }
}

/// Compare trial tallies against the analytic logical-error prediction;
/// passes when every class sits within `max_z` binomial standard errors.
pub fn compare_with_analytic(outcome: &TrialOutcome, report: &CircuitReport, max_z: f64) -> Result<McComparison> {
    if outcome.counts.total() != outcome.config.trials || outcome.config.trials == 0 {
        return Err(CoreError::ConfigMismatch("outcome tallies do not match its trial count".into()));
    }
    if outcome.config.delta2 != report.delta2_input || outcome.config.circuit.loss_config() != report.cfg {
        return Err(CoreError::ConfigMismatch(
            "trial configuration and circuit report disagree on delta2 or losses".into(),
        ));
    }
    let n = outcome.config.trials as f64;
    let analytic = [
        report.logical.p_none,
        report.logical.p_bit_flip,
        report.logical.p_phase_flip,
        report.logical.p_both,
    ];
    let mut classes = Vec::with_capacity(4);
    let mut max_abs_z = 0.0f64;
    for (i, (name, count)) in outcome.counts.as_array().into_iter().enumerate() {
        let p = analytic[i];
        let rate = count as f64 / n;
        let sigma = (p * (1.0 - p) / n).sqrt();
        let z = if sigma > 0.0 {
            (rate - p) / sigma
        } else if rate == p {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z.abs());
        classes.push(ClassComparison { class: name.to_string(), count, rate, analytic: p, z });
    }
    Ok(McComparison { classes, max_abs_z, threshold: max_z, pass: max_abs_z <= max_z })
}

// ---------------------------------------------------------------------------
// sampling machinery
// ---------------------------------------------------------------------------

/// Per-quadrature sampling table.
struct SpikeTable {
    /// Cumulative domain probabilities with their means and lattice indices.
    cum: Vec<f64>,
    means: Vec<f64>,
    indices: Vec<i64>,
    sigma: f64,
    /// Inverse-CDF grid for exact-marginal sampling.
    exact: Option<ExactCdf>,
    period: f64,
}

struct ExactCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl SpikeTable {
    fn build(stats: &DomainStats, state: &StateModel, quadrature: Quadrature, model: SpikeModel, period: f64) -> Result<Self> {
        let mut cum = Vec::with_capacity(stats.domains.len());
        let mut acc = 0.0;
        for d in &stats.domains {
            acc += d.prob;
            cum.push(acc);
        }
        let exact = match model {
            SpikeModel::Gaussian => None,
            SpikeModel::ExactMarginal => {
                let grid = state.auto_density_grid(quadrature, 1 << 14)?;
                let mut cdf = Vec::with_capacity(grid.len());
                let mut run = 0.0;
                cdf.push(0.0);
                for i in 1..grid.len() {
                    run += 0.5 * (grid.values[i - 1] + grid.values[i]) * grid.dx;
                    cdf.push(run);
                }
                let total = *cdf.last().unwrap();
                for c in &mut cdf {
                    *c /= total;
                }
                Some(ExactCdf { xs: (0..grid.len()).map(|i| grid.x(i)).collect(), cdf })
            }
        };
        Ok(SpikeTable {
            cum,
            means: stats.domains.iter().map(|d| d.mean).collect(),
            indices: stats.domains.iter().map(|d| d.n).collect(),
            sigma: stats.variance.sqrt(),
            exact,
            period,
        })
    }

    /// Draw `(signal value, fluctuation value, lattice index)`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, i64) {
        match &self.exact {
            None => {
                let u: f64 = rng.gen();
                let idx = self.cum.partition_point(|c| *c < u).min(self.means.len() - 1);
                let z: f64 = rng.sample(StandardNormal);
                (self.means[idx], self.sigma * z, self.indices[idx])
            }
            Some(e) => {
                let u: f64 = rng.gen();
                let j = e.cdf.partition_point(|c| *c < u).clamp(1, e.xs.len() - 1);
                let (c0, c1) = (e.cdf[j - 1], e.cdf[j]);
                let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
                let x = e.xs[j - 1] + frac * (e.xs[j] - e.xs[j - 1]);
                let k = (x / self.period).round() as i64;
                let spike = self
                    .indices
                    .iter()
                    .position(|n| *n == k)
                    .map_or(k as f64 * self.period, |i| self.means[i]);
                (spike, x - spike, k)
            }
        }
    }
}

struct Tables {
    /// `[mode1 q, mode1 p, mode2 q, mode2 p, mode3 q, mode3 p]`.
    by_mode: [SpikeTable; 6],
    noise_syms: Vec<Symbol>,
    period: f64,
}

fn setup(cfg: &TrialConfig) -> Result<(Tables, CircuitReport)> {
    let period = (2.0 * std::f64::consts::PI).sqrt();
    let lattice = DomainPartition::lattice(period)?;
    let input = StateModel::gkp(cfg.input_mu, cfg.delta2)?;
    let plus = StateModel::gkp(0, cfg.delta2)?.rotated();

    let in_q = domain_stats(&input, Quadrature::Q, &lattice)?;
    let in_p = domain_stats(&input, Quadrature::P, &lattice)?;
    let plus_q = domain_stats(&plus, Quadrature::Q, &lattice)?;
    let plus_p = domain_stats(&plus, Quadrature::P, &lattice)?;

    let report = run_with_mode_stats(
        (in_q.variance, in_p.variance),
        (plus_q.variance, plus_p.variance),
        cfg.delta2,
        &cfg.circuit.loss_config(),
    )?;

    let model = cfg.spike_model;
    let by_mode = [
        SpikeTable::build(&in_q, &input, Quadrature::Q, model, period)?,
        SpikeTable::build(&in_p, &input, Quadrature::P, model, period)?,
        SpikeTable::build(&plus_q, &plus, Quadrature::Q, model, period)?,
        SpikeTable::build(&plus_p, &plus, Quadrature::P, model, period)?,
        SpikeTable::build(&plus_q, &plus, Quadrature::Q, model, period)?,
        SpikeTable::build(&plus_p, &plus, Quadrature::P, model, period)?,
    ];

    let mut noise_syms: Vec<Symbol> = [
        &report.measured_p1,
        &report.measured_p2,
        &report.q_pre_feedforward,
        &report.p_pre_feedforward,
    ]
    .iter()
    .flat_map(|e| e.terms())
    .filter_map(|(s, _)| matches!(s, Symbol::VacQ(_) | Symbol::VacP(_) | Symbol::MeasNoiseP(_)).then_some(s))
    .collect();
    noise_syms.sort();
    noise_syms.dedup();

    Ok((Tables { by_mode, noise_syms, period }, report))
}

struct TrialAccum {
    counts: Counts,
    res1_sq: f64,
    res2_sq: f64,
}

fn run_trials_distorted(cfg: &TrialConfig, gain_scale: f64) -> Result<TrialOutcome> {
    cfg.validate()?;
    let (tables, report) = setup(cfg)?;
    let d = tables.period;
    let r1 = -report.gains.g1 * gain_scale;
    let r2 = -report.gains.g2 * gain_scale;

    // integer coefficients of each error symbol in the outputs fix which
    // feedforward shift flips which logical component
    let err1 = Symbol::ErrShift(report.ladders.len() as u32 - 2);
    let err2 = Symbol::ErrShift(report.ladders.len() as u32 - 1);
    let parity_coeffs = |sym: Symbol| -> (i64, i64) {
        (report.q_out.coeff(sym).round() as i64, report.p_out.coeff(sym).round() as i64)
    };
    let (e1_q, e1_p) = parity_coeffs(err1);
    let (e2_q, e2_p) = parity_coeffs(err2);

    // Fixed-size chunks processed in parallel, then folded in chunk order:
    // keeps the floating-point accumulation order independent of scheduling.
    const CHUNK: u64 = 1024;
    let n_chunks = cfg.trials.div_ceil(CHUNK);
    let per_trial = |trial: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial);
            let mut draws = [(0.0f64, 0.0f64, 0i64); 6];
            for (slot, table) in draws.iter_mut().zip(&tables.by_mode) {
                *slot = table.sample(&mut rng);
            }
            let noise_vals: Vec<f64> = tables.noise_syms.iter().map(|_| rng.sample(StandardNormal)).collect();
            let value = |sym: Symbol| -> f64 {
                match sym {
                    Symbol::SignalQ(m) => draws[(m as usize - 1) * 2].0,
                    Symbol::SignalP(m) => draws[(m as usize - 1) * 2 + 1].0,
                    Symbol::FlucQ(m) => draws[(m as usize - 1) * 2].1,
                    Symbol::FlucP(m) => draws[(m as usize - 1) * 2 + 1].1,
                    Symbol::ErrShift(_) => 0.0,
                    other => tables
                        .noise_syms
                        .binary_search(&other)
                        .map(|i| noise_vals[i])
                        .unwrap_or(0.0),
                }
            };
            let signal_value = |sym: Symbol| -> f64 {
                if sym.is_signal() {
                    value(sym)
                } else {
                    0.0
                }
            };

            let m1 = report.measured_p1.eval(value);
            let m2 = report.measured_p2.eval(value);
            let s1 = report.measured_p1.eval(signal_value);
            let s2 = report.measured_p2.eval(signal_value);

            // true rounding-to-nearest-lattice feedforward
            let shift1 = (r1 * m1 / d).round() as i64 - (r1 * s1 / d).round() as i64;
            let shift2 = (r2 * m2 / d).round() as i64 - (r2 * s2 / d).round() as i64;
            let res1 = r1 * m1 - r1 * s1;
            let res2 = r2 * m2 - r2 * s2;

            let bit = (e1_q * shift1 + e2_q * shift2).rem_euclid(2) == 1;
            let phase = (e1_p * shift1 + e2_p * shift2).rem_euclid(2) == 1;
            let mut counts = Counts::default();
            match (bit, phase) {
                (false, false) => counts.none = 1,
                (true, false) => counts.bit_flip = 1,
                (false, true) => counts.phase_flip = 1,
                (true, true) => counts.both = 1,
            }
            TrialAccum { counts, res1_sq: res1 * res1, res2_sq: res2 * res2 }
        };
    let chunks: Vec<TrialAccum> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(cfg.trials);
            let mut acc = TrialAccum { counts: Counts::default(), res1_sq: 0.0, res2_sq: 0.0 };
            for trial in lo..hi {
                let t = per_trial(trial);
                acc.counts.add(&t.counts);
                acc.res1_sq += t.res1_sq;
                acc.res2_sq += t.res2_sq;
            }
            acc
        })
        .collect();
    let accum = chunks.into_iter().fold(
        TrialAccum { counts: Counts::default(), res1_sq: 0.0, res2_sq: 0.0 },
        |mut a, b| {
            a.counts.add(&b.counts);
            a.res1_sq += b.res1_sq;
            a.res2_sq += b.res2_sq;
            a
        },
    );

    let n = cfg.trials as f64;
    let counts = accum.counts;
    let arr = counts.as_array();
    let mut rates = [0.0; 4];
    let mut std_errs = [0.0; 4];
    for i in 0..4 {
        let p = arr[i].1 as f64 / n;
        rates[i] = p;
        std_errs[i] = (p * (1.0 - p) / n).sqrt();
    }
    Ok(TrialOutcome {
        config: *cfg,
        counts,
        rates,
        std_errs,
        residue_var1: accum.res1_sq / n,
        residue_var2: accum.res2_sq / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ideal_cfg(trials: u64, delta2: f64) -> TrialConfig {
        TrialConfig {
            trials,
            seed: 42,
            circuit: CircuitModel::Ideal,
            delta2,
            input_mu: 0,
            spike_model: SpikeModel::Gaussian,
        }
    }

    #[test]
    fn vanishing_noise_means_no_errors() {
        let cfg = ideal_cfg(10_000, 0.005);
        let out = run_trials(&cfg).unwrap();
        assert_eq!(out.counts.none, 10_000);
        assert_eq!(out.counts.total(), 10_000);
    }

    #[test]
    fn tallies_match_ladder_prediction() {
        let cfg = ideal_cfg(100_000, 0.1);
        let out = run_trials(&cfg).unwrap();
        let report = analytic_report(&cfg).unwrap();
        let cmp = compare_with_analytic(&out, &report, 3.0).unwrap();
        assert!(cmp.pass, "comparison: {cmp:?}");
        // residue variance reproduces V1, V2 within 4 sigma of the
        // chi-squared sampling spread sqrt(2/n) V
        let n = cfg.trials as f64;
        for (got, want) in [(out.residue_var1, report.v1), (out.residue_var2, report.v2)] {
            let sigma = want * (2.0 / n).sqrt();
            assert!((got - want).abs() < 4.0 * sigma, "residue var {got} vs {want}");
        }
    }

    #[test]
    fn deterministic_under_reruns_and_thread_counts() {
        let cfg = ideal_cfg(20_000, 0.12);
        let a = run_trials(&cfg).unwrap();
        let b = run_trials(&cfg).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.residue_var1, b.residue_var1);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| run_trials(&cfg)).unwrap();
        assert_eq!(a.counts, c.counts);
        assert_eq!(a.residue_var1, c.residue_var1);
        assert_eq!(a.residue_var2, c.residue_var2);
    }

    #[test]
    fn all_ones_lossy_equals_ideal_under_same_seed() {
        let mut cfg = ideal_cfg(20_000, 0.1);
        let ideal = run_trials(&cfg).unwrap();
        cfg.circuit = CircuitModel::Lossy(LossConfig::ideal());
        let lossy = run_trials(&cfg).unwrap();
        assert_eq!(ideal.counts, lossy.counts);
    }

    #[test]
    fn lossy_run_matches_its_analytic_report() {
        let cfg = TrialConfig {
            trials: 60_000,
            seed: 7,
            circuit: CircuitModel::Lossy(LossConfig { eta: 0.97, eta_g: 0.995, eta_m: 0.99, eta_d: 0.99 }),
            delta2: 0.06,
            input_mu: 1,
            spike_model: SpikeModel::Gaussian,
        };
        let out = run_trials(&cfg).unwrap();
        let report = analytic_report(&cfg).unwrap();
        let cmp = compare_with_analytic(&out, &report, 3.5).unwrap();
        assert!(cmp.pass, "comparison: {cmp:?}");
    }

    #[test]
    fn exact_marginal_model_agrees_at_strong_squeezing() {
        let cfg = TrialConfig { spike_model: SpikeModel::ExactMarginal, ..ideal_cfg(50_000, 0.08) };
        let out = run_trials(&cfg).unwrap();
        let report = analytic_report(&cfg).unwrap();
        let cmp = compare_with_analytic(&out, &report, 3.5).unwrap();
        assert!(cmp.pass, "comparison: {cmp:?}");
    }

    #[test]
    fn corrupted_gain_inflates_errors_far_beyond_noise() {
        // fault injection: a 20% gain distortion must blow the z-scores up
        let cfg = ideal_cfg(20_000, 0.1);
        let report = analytic_report(&cfg).unwrap();
        let out = run_trials_distorted(&cfg, 1.2).unwrap();
        let cmp = compare_with_analytic(&out, &report, 5.0).unwrap();
        assert!(!cmp.pass, "distorted run should fail: {cmp:?}");
        assert!(cmp.max_abs_z > 5.0);
    }

    #[test]
    fn config_validation_and_mismatch() {
        let mut cfg = ideal_cfg(0, 0.1);
        assert!(run_trials(&cfg).is_err());
        cfg.trials = 100;
        cfg.delta2 = 0.0;
        assert!(run_trials(&cfg).is_err());

        let good = ideal_cfg(1_000, 0.1);
        let out = run_trials(&good).unwrap();
        let other = crate::circuits::run_ideal(0.2, 0.2).unwrap();
        assert!(matches!(
            compare_with_analytic(&out, &other, 3.0),
            Err(CoreError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn rounding_path_matches_shift_bookkeeping() {
        // For each trial, bin the actual output value: the spike content of
        // the output (value minus the known noise residual) must land exactly
        // `shift` lattice steps from the no-error prediction; in particular,
        // trials with all residues below D/2 reproduce it exactly.
        let cfg = ideal_cfg(1, 0.1);
        let (tables, report) = setup(&cfg).unwrap();
        let d = tables.period;
        let r1 = -report.gains.g1;
        let r2 = -report.gains.g2;
        let mut small_residue_seen = false;
        for trial in 0..400u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial);
            let mut draws = [(0.0f64, 0.0f64, 0i64); 6];
            for (slot, table) in draws.iter_mut().zip(&tables.by_mode) {
                *slot = table.sample(&mut rng);
            }
            let noise_vals: Vec<f64> =
                tables.noise_syms.iter().map(|_| rand::Rng::sample(&mut rng, StandardNormal)).collect();
            let value = |sym: Symbol| -> f64 {
                match sym {
                    Symbol::SignalQ(m) => draws[(m as usize - 1) * 2].0,
                    Symbol::SignalP(m) => draws[(m as usize - 1) * 2 + 1].0,
                    Symbol::FlucQ(m) => draws[(m as usize - 1) * 2].1,
                    Symbol::FlucP(m) => draws[(m as usize - 1) * 2 + 1].1,
                    Symbol::ErrShift(_) => 0.0,
                    other => tables.noise_syms.binary_search(&other).map(|i| noise_vals[i]).unwrap_or(0.0),
                }
            };
            let signal_only = |sym: Symbol| if sym.is_signal() { value(sym) } else { 0.0 };
            let noise_only = |sym: Symbol| if sym.is_noise() { value(sym) } else { 0.0 };

            let m1 = report.measured_p1.eval(value);
            let m2 = report.measured_p2.eval(value);
            let s1 = report.measured_p1.eval(signal_only);
            let s2 = report.measured_p2.eval(signal_only);
            let shift1 = (r1 * m1 / d).round() as i64 - (r1 * s1 / d).round() as i64;
            let shift2 = (r2 * m2 / d).round() as i64 - (r2 * s2 / d).round() as i64;

            // real value path: rounded feedforward displacements
            let b1 = d * (r1 * m1 / d).round();
            let b2 = d * (r2 * m2 / d).round();
            let q_out_val = report.q_pre_feedforward.eval(value) - b2;
            let p_out_val = report.p_pre_feedforward.eval(value) - b1;

            let q_idx = ((q_out_val - report.q_out.eval(noise_only)) / d).round() as i64;
            let p_idx = ((p_out_val - report.p_out.eval(noise_only)) / d).round() as i64;
            let q_expected = (report.q_out.eval(signal_only) / d).round() as i64;
            let p_expected = (report.p_out.eval(signal_only) / d).round() as i64;
            // the error symbols carry coefficient -1 in the outputs
            assert_eq!(q_idx, q_expected - shift2, "trial {trial}");
            assert_eq!(p_idx, p_expected - shift1, "trial {trial}");
            if shift1 == 0 && shift2 == 0 {
                small_residue_seen = true;
                assert_eq!(q_idx, q_expected);
                assert_eq!(p_idx, p_expected);
            }
        }
        assert!(small_residue_seen);
    }

    #[test]
    fn analytic_report_binds_domain_statistics() {
        let cfg = ideal_cfg(1, 0.1);
        let report = analytic_report(&cfg).unwrap();
        // bindings come from domain stats, so V1 is near (not exactly) 2 d2
        assert_relative_eq!(report.v1, 0.2, max_relative = 0.02);
        assert!((report.v1 - 0.2).abs() > 1e-9);
    }
}
