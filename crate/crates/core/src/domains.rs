//! Domain partitions and domain-restricted signal/noise statistics.
//!
//! A quadrature density of a superposition state splits into domains, one per
//! spike. The per-domain mean is the signal value there; the aggregate
//! fluctuation variance is
//!
//! ```text
//!   V = <x^2> - sum_n x_n^2 P_n,
//!       x_n = int_n x |psi|^2 / int_n |psi|^2,   P_n = int_n |psi|^2,
//! ```
//!
//! the law-of-total-variance residue after the multi-valued signal is
//! subtracted. A single-domain partition recovers the Gaussian baseline
//! `V = <x^2> - <x>^2`.

use serde::{Deserialize, Serialize};

use crate::quad::adaptive_simpson;
use crate::states::{DensityGrid, Quadrature, StateKind, StateModel};
use crate::{CoreError, Result};

/// Relative tolerance of the per-domain adaptive quadrature.
const QUAD_REL_TOL: f64 = 1e-10;
/// Domains with probability below this are dropped and the rest renormalized.
const PROB_CUTOFF: f64 = 1e-12;
/// Initial panels per domain before adaptive refinement.
const PANELS: u32 = 8;

/// Rule mapping a quadrature value to a domain index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainPartition {
    /// Periodic tiling: domain `n` spans `[offset + (n-1/2) D, offset + (n+1/2) D)`.
    Lattice { period: f64, offset: f64 },
    /// Two half-lines split at zero: domain 0 is `(-inf, 0)`, domain 1 is `[0, inf)`.
    SignSplit,
    /// Explicit sorted interior boundaries; `k` boundaries make `k + 1` domains
    /// indexed left to right from 0. Empty list = a single domain.
    Explicit { boundaries: Vec<f64> },
}

impl DomainPartition {
    pub fn lattice(period: f64) -> Result<Self> {
        Self::lattice_with_offset(period, 0.0)
    }

    pub fn lattice_with_offset(period: f64, offset: f64) -> Result<Self> {
        if period > 0.0 && period.is_finite() && offset.is_finite() {
            Ok(DomainPartition::Lattice { period, offset })
        } else {
            Err(CoreError::InvalidPartition(format!("lattice period {period}, offset {offset}")))
        }
    }

    pub fn explicit(mut boundaries: Vec<f64>) -> Result<Self> {
        boundaries.sort_by(|a, b| a.total_cmp(b));
        if boundaries.windows(2).any(|w| w[0] >= w[1]) || boundaries.iter().any(|b| !b.is_finite()) {
            return Err(CoreError::InvalidPartition("explicit boundaries must be finite and strictly sorted".into()));
        }
        Ok(DomainPartition::Explicit { boundaries })
    }

    /// A single domain covering the whole line.
    pub fn single() -> Self {
        DomainPartition::Explicit { boundaries: Vec::new() }
    }

    /// Index of the domain containing `x`. Boundary points belong to the
    /// right-hand domain.
    pub fn domain_index(&self, x: f64) -> i64 {
        match self {
            DomainPartition::Lattice { period, offset } => ((x - offset) / period + 0.5).floor() as i64,
            DomainPartition::SignSplit => i64::from(x >= 0.0),
            DomainPartition::Explicit { boundaries: bs } => bs.partition_point(|b| *b <= x) as i64,
        }
    }

    /// `(lo, hi)` of domain `n`; half-lines carry infinite ends.
    pub fn domain_bounds(&self, n: i64) -> (f64, f64) {
        match self {
            DomainPartition::Lattice { period, offset } => {
                (offset + (n as f64 - 0.5) * period, offset + (n as f64 + 0.5) * period)
            }
            DomainPartition::SignSplit => {
                if n <= 0 {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            DomainPartition::Explicit { boundaries: bs } => {
                let lo = if n <= 0 { f64::NEG_INFINITY } else { bs[(n - 1) as usize] };
                let hi = if n as usize >= bs.len() { f64::INFINITY } else { bs[n as usize] };
                (lo, hi)
            }
        }
    }

    /// Interior boundaries falling inside `(lo, hi)`, sorted.
    pub fn boundaries_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            DomainPartition::Lattice { period, offset } => {
                let n_lo = ((lo - offset) / period - 0.5).floor() as i64;
                let n_hi = ((hi - offset) / period + 0.5).ceil() as i64;
                (n_lo..=n_hi)
                    .map(|n| offset + (n as f64 + 0.5) * period)
                    .filter(|b| *b > lo && *b < hi)
                    .collect()
            }
            DomainPartition::SignSplit => {
                if lo < 0.0 && hi > 0.0 {
                    vec![0.0]
                } else {
                    Vec::new()
                }
            }
            DomainPartition::Explicit { boundaries: bs } => bs.iter().copied().filter(|b| *b > lo && *b < hi).collect(),
        }
    }

    /// Partition with every boundary scaled by `factor > 0`: the image of the
    /// partition under `x -> factor * x`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(CoreError::InvalidPartition(format!("scale factor {factor}")));
        }
        Ok(match self {
            DomainPartition::Lattice { period, offset } => {
                DomainPartition::Lattice { period: period * factor, offset: offset * factor }
            }
            DomainPartition::SignSplit => DomainPartition::SignSplit,
            DomainPartition::Explicit { boundaries: bs } => {
                DomainPartition::Explicit { boundaries: bs.iter().map(|b| b * factor).collect() }
            }
        })
    }

    /// Half-width of the clipping diagnostic window around each boundary.
    /// A quarter of the domain period where one exists, otherwise a quarter
    /// of the relevant peak separation.
    fn clip_window(&self, records: &[DomainRecord]) -> f64 {
        match self {
            DomainPartition::Lattice { period, .. } => period / 4.0,
            DomainPartition::SignSplit => {
                if records.len() == 2 {
                    (records[1].mean - records[0].mean).abs() / 4.0
                } else {
                    0.0
                }
            }
            DomainPartition::Explicit { boundaries: bs } => {
                if bs.len() >= 2 {
                    bs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min) / 4.0
                } else if records.len() >= 2 {
                    records
                        .windows(2)
                        .map(|w| (w[1].mean - w[0].mean).abs())
                        .fold(f64::INFINITY, f64::min)
                        / 4.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-domain record: index, mean, probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainRecord {
    pub n: i64,
    pub mean: f64,
    pub prob: f64,
}

/// Domain-partitioned statistics of one quadrature density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainStats {
    pub domains: Vec<DomainRecord>,
    /// Aggregate fluctuation variance `V`.
    pub variance: f64,
    /// Raw second moment `<x^2>` over the retained domains.
    pub second_moment: f64,
    /// Probability mass within a quarter-period of any domain boundary.
    pub clipped_fraction: f64,
}

impl DomainStats {
    /// CSV rows `n,mean,prob` followed by footer rows for `V` and
    /// `clipped_fraction`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mean,prob\n");
        for d in &self.domains {
            out.push_str(&format!("{},{},{}\n", d.n, d.mean, d.prob));
        }
        out.push_str(&format!("V,{}\n", self.variance));
        out.push_str(&format!("clipped_fraction,{}\n", self.clipped_fraction));
        out
    }
}

struct RawDomain {
    n: i64,
    prob: f64,
    m1: f64,
    m2: f64,
}

fn assemble(mut raw: Vec<RawDomain>, clipped_mass: f64) -> Result<DomainStats> {
    let total: f64 = raw.iter().map(|d| d.prob).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(CoreError::NonNormalizable(total));
    }
    raw.retain(|d| d.prob / total >= PROB_CUTOFF);
    let kept: f64 = raw.iter().map(|d| d.prob).sum();
    let records: Vec<DomainRecord> = raw
        .iter()
        .map(|d| DomainRecord { n: d.n, mean: d.m1 / d.prob, prob: d.prob / kept })
        .collect();
    let second_moment = raw.iter().map(|d| d.m2).sum::<f64>() / kept;
    let signal_part: f64 = records.iter().map(|r| r.mean * r.mean * r.prob).sum();
    // All mass concentrated at single points makes V a small negative
    // round-off residue; clamp at zero.
    let variance = (second_moment - signal_part).max(0.0);
    Ok(DomainStats {
        domains: records,
        variance,
        second_moment,
        clipped_fraction: (clipped_mass / kept).clamp(0.0, 1.0),
    })
}

/// Domain statistics of an analytic state density, integrated by adaptive
/// Simpson quadrature per domain.
pub fn domain_stats(state: &StateModel, quadrature: Quadrature, partition: &DomainPartition) -> Result<DomainStats> {
    state.validate()?;
    let f = state.density(quadrature);
    let (lo, hi) = state.support(quadrature);
    let cuts = partition.boundaries_in(lo, hi);
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend_from_slice(&cuts);
    edges.push(hi);

    let mut raw = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-300 {
            continue;
        }
        let n = partition.domain_index(0.5 * (a + b));
        let prob = adaptive_simpson(&f, a, b, QUAD_REL_TOL, 1e-18, PANELS)?;
        let m1 = adaptive_simpson(|x| x * f(x), a, b, QUAD_REL_TOL, 1e-18, PANELS)?;
        let m2 = adaptive_simpson(|x| x * x * f(x), a, b, QUAD_REL_TOL, 1e-18, PANELS)?;
        raw.push(RawDomain { n, prob, m1, m2 });
    }

    let window = partition.clip_window(
        &raw.iter()
            .filter(|d| d.prob > PROB_CUTOFF)
            .map(|d| DomainRecord { n: d.n, mean: d.m1 / d.prob, prob: d.prob })
            .collect::<Vec<_>>(),
    );
    let mut clipped_mass = 0.0;
    if window > 0.0 {
        for b in &cuts {
            let (wa, wb) = ((b - window).max(lo), (b + window).min(hi));
            if wb > wa {
                clipped_mass += adaptive_simpson(&f, wa, wb, 1e-8, 1e-15, 4)?;
            }
        }
    }
    assemble(raw, clipped_mass)
}

/// Domain statistics of a tabulated density (trapezoidal integration with
/// linear interpolation at domain boundaries). Used for pushed-through
/// marginals where no analytic form exists.
pub fn domain_stats_from_grid(grid: &DensityGrid, partition: &DomainPartition) -> Result<DomainStats> {
    let total = grid.total_mass();
    if !(total > 0.0) || !total.is_finite() {
        return Err(CoreError::NonNormalizable(total));
    }
    let (lo, hi) = (grid.x0, grid.x_max());
    let cuts = partition.boundaries_in(lo, hi);
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend_from_slice(&cuts);
    edges.push(hi);

    let mut raw = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-300 {
            continue;
        }
        let n = partition.domain_index(0.5 * (a + b));
        raw.push(RawDomain {
            n,
            prob: grid.integrate_window(a, b, |_| 1.0),
            m1: grid.integrate_window(a, b, |x| x),
            m2: grid.integrate_window(a, b, |x| x * x),
        });
    }
    let window = partition.clip_window(
        &raw.iter()
            .filter(|d| d.prob > PROB_CUTOFF)
            .map(|d| DomainRecord { n: d.n, mean: d.m1 / d.prob, prob: d.prob })
            .collect::<Vec<_>>(),
    );
    let mut clipped_mass = 0.0;
    if window > 0.0 {
        for b in &cuts {
            clipped_mass += grid.integrate_window(b - window, b + window, |_| 1.0);
        }
    }
    assemble(raw, clipped_mass)
}

/// The partition a state's spike structure calls for in a given quadrature.
///
/// Cat states split position at the sign boundary and tile momentum with
/// period `pi / alpha`; GKP states tile both quadratures with period
/// `sqrt(2 pi)`; Gaussian states get a single domain.
pub fn auto_partition(state: &StateModel, quadrature: Quadrature) -> Result<DomainPartition> {
    // Rotation swaps which physical quadrature is being partitioned.
    let effective = match state.rotation {
        crate::states::Rotation::None => quadrature,
        crate::states::Rotation::Quarter => match quadrature {
            Quadrature::Q => Quadrature::P,
            Quadrature::P => Quadrature::Q,
        },
    };
    match state.kind {
        StateKind::Vacuum | StateKind::Coherent { .. } | StateKind::Squeezed { .. } => Ok(DomainPartition::single()),
        StateKind::Cat { alpha } => match effective {
            Quadrature::Q => Ok(DomainPartition::SignSplit),
            Quadrature::P => {
                if alpha > 0.0 {
                    DomainPartition::lattice(std::f64::consts::PI / alpha)
                } else {
                    Ok(DomainPartition::single())
                }
            }
        },
        StateKind::Gkp { .. } => DomainPartition::lattice((2.0 * std::f64::consts::PI).sqrt()),
    }
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub stats: DomainStats,
}

/// State family swept over one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SweepFamily {
    /// Cat states over `alpha`.
    CatAlpha,
    /// GKP states over `delta2` at fixed logical value and rotation.
    GkpDelta2 { mu: u8, rotated: bool },
}

impl SweepFamily {
    pub fn state_at(&self, param: f64) -> Result<StateModel> {
        match *self {
            SweepFamily::CatAlpha => StateModel::cat(param),
            SweepFamily::GkpDelta2 { mu, rotated } => {
                let s = StateModel::gkp(mu, param)?;
                Ok(if rotated { s.rotated() } else { s })
            }
        }
    }
}

/// Partition selection for sweeps: automatic (parameter-dependent) or fixed.
#[derive(Debug, Clone)]
pub enum PartitionChoice {
    Auto,
    Fixed(DomainPartition),
}

/// Sweep the aggregate variance over a monotone parameter grid.
pub fn sweep_variance(
    family: SweepFamily,
    from: f64,
    to: f64,
    steps: usize,
    quadrature: Quadrature,
    partition: &PartitionChoice,
) -> Result<Vec<SweepPoint>> {
    if steps < 2 || !(from < to) {
        return Err(CoreError::DegenerateRange(format!("sweep from {from} to {to} in {steps} steps")));
    }
    let dx = (to - from) / (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            let param = from + dx * i as f64;
            let state = family.state_at(param)?;
            let part = match partition {
                PartitionChoice::Auto => auto_partition(&state, quadrature)?,
                PartitionChoice::Fixed(p) => p.clone(),
            };
            Ok(SweepPoint { param, stats: domain_stats(&state, quadrature, &part)? })
        })
        .collect()
}

/// Ratio of the cat momentum domain width (peak separation) to the momentum
/// standard deviation, using the default momentum lattice of period
/// `pi / alpha`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioReport {
    pub alpha: f64,
    pub ratio: f64,
    pub v_p: f64,
    /// Set when `alpha < 1`, where the domain decomposition degrades.
    pub degraded_regime: bool,
}

pub fn peak_separation_ratio(alpha: f64) -> Result<RatioReport> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(CoreError::ParameterOutOfRange(format!("ratio needs alpha > 0, got {alpha}")));
    }
    let state = StateModel::cat(alpha)?;
    let period = std::f64::consts::PI / alpha;
    let part = DomainPartition::lattice(period)?;
    let stats = domain_stats(&state, Quadrature::P, &part)?;
    Ok(RatioReport {
        alpha,
        ratio: period / stats.variance.sqrt(),
        v_p: stats.variance,
        degraded_regime: alpha < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const SQ2PI: f64 = 2.5066282746310002;

    #[test]
    fn lattice_index_and_tie_break() {
        let p = DomainPartition::lattice(SQ2PI).unwrap();
        assert_eq!(p.domain_index(0.0), 0);
        assert_eq!(p.domain_index(1.1 * SQ2PI), 1);
        assert_eq!(p.domain_index(-1.1 * SQ2PI), -1);
        // boundary points belong to the right-hand domain
        assert_eq!(p.domain_index(0.5 * SQ2PI), 1);
        assert_eq!(p.domain_index(-0.5 * SQ2PI), 0);
    }

    #[test]
    fn sign_split_index() {
        let p = DomainPartition::SignSplit;
        assert_eq!(p.domain_index(-3.2), 0); // first domain (-inf, 0)
        assert_eq!(p.domain_index(2.0), 1);
        assert_eq!(p.domain_index(0.0), 1); // boundary goes right
    }

    #[test]
    fn explicit_index() {
        let p = DomainPartition::explicit(vec![-1.0, 2.0]).unwrap();
        assert_eq!(p.domain_index(-5.0), 0);
        assert_eq!(p.domain_index(0.0), 1);
        assert_eq!(p.domain_index(2.0), 2);
        assert!(DomainPartition::explicit(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn cat_sign_split_statistics() {
        let s = StateModel::cat(2.0).unwrap();
        let st = domain_stats(&s, Quadrature::Q, &DomainPartition::SignSplit).unwrap();
        assert_eq!(st.domains.len(), 2);
        assert_abs_diff_eq!(st.domains[0].mean, -4.0, epsilon = 0.02);
        assert_abs_diff_eq!(st.domains[1].mean, 4.0, epsilon = 0.02);
        assert_abs_diff_eq!(st.domains[0].prob, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(st.domains[1].prob, 0.5, epsilon = 1e-10);
        assert_relative_eq!(st.variance, 1.0, max_relative = 0.01);
    }

    #[test]
    fn cat_zero_alpha_is_half_normal_split() {
        // closed-form oracle: split unit Gaussian at zero, each half has
        // mean +-sqrt(2/pi) and the aggregate variance is 1 - 2/pi.
        let s = StateModel::cat(0.0).unwrap();
        let st = domain_stats(&s, Quadrature::Q, &DomainPartition::SignSplit).unwrap();
        let expect = 1.0 - 2.0 / std::f64::consts::PI;
        assert_abs_diff_eq!(st.variance, expect, epsilon = 1e-8);
        let half_mean = (2.0 / std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(st.domains[1].mean, half_mean, epsilon = 1e-8);
    }

    #[test]
    fn gkp_variance_tracks_delta2() {
        let s = StateModel::gkp(0, 0.05).unwrap();
        let part = DomainPartition::lattice(SQ2PI).unwrap();
        let st = domain_stats(&s, Quadrature::Q, &part).unwrap();
        assert_relative_eq!(st.variance, 0.05, max_relative = 0.05);
        let stp = domain_stats(&s, Quadrature::P, &part).unwrap();
        assert_relative_eq!(stp.variance, 0.05, max_relative = 0.05);
    }

    #[test]
    fn single_domain_recovers_gaussian_baseline() {
        // vacuum: V = <x^2> - <x>^2 = 1
        let st = domain_stats(&StateModel::vacuum(), Quadrature::Q, &DomainPartition::single()).unwrap();
        assert_abs_diff_eq!(st.variance, 1.0, epsilon = 1e-9);
        // displaced coherent state keeps unit variance in one domain
        let c = StateModel::coherent(1.3).unwrap();
        let st = domain_stats(&c, Quadrature::Q, &DomainPartition::single()).unwrap();
        assert_abs_diff_eq!(st.variance, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(st.domains[0].mean, 2.6, epsilon = 1e-9);
    }

    #[test]
    fn law_of_total_variance_identity() {
        let s = StateModel::gkp(1, 0.1).unwrap();
        let part = DomainPartition::lattice(SQ2PI).unwrap();
        let st = domain_stats(&s, Quadrature::Q, &part).unwrap();
        let signal: f64 = st.domains.iter().map(|d| d.mean * d.mean * d.prob).sum();
        assert_abs_diff_eq!(st.second_moment, st.variance + signal, epsilon = 1e-8);
    }

    #[test]
    fn peak_separation_ratio_near_constant() {
        let r2 = peak_separation_ratio(2.0).unwrap();
        assert!(r2.ratio > 5.4 && r2.ratio < 6.0, "ratio {}", r2.ratio);
        assert!(!r2.degraded_regime);
        let r15 = peak_separation_ratio(1.5).unwrap();
        let r30 = peak_separation_ratio(3.0).unwrap();
        let spread = (r15.ratio / r30.ratio).max(r30.ratio / r15.ratio);
        assert!(spread < 1.1, "spread {spread}");
        assert!(peak_separation_ratio(0.5).unwrap().degraded_regime);
        assert!(peak_separation_ratio(0.0).is_err());
    }

    #[test]
    fn ratio_scale_invariance() {
        // rescaling p -> c p scales both the domain width and sqrt(V_p):
        // recompute the ratio from grid statistics under a rescaled axis.
        let alpha = 2.0;
        let s = StateModel::cat(alpha).unwrap();
        let g = s.auto_density_grid(Quadrature::P, 32769).unwrap();
        let period = std::f64::consts::PI / alpha;
        for c in [1.0, 2.5] {
            let scaled = DensityGrid {
                quadrature: g.quadrature,
                x0: g.x0 * c,
                dx: g.dx * c,
                values: g.values.iter().map(|v| v / c).collect(),
            };
            let part = DomainPartition::lattice(period * c).unwrap();
            let st = domain_stats_from_grid(&scaled, &part).unwrap();
            let ratio = period * c / st.variance.sqrt();
            let base = peak_separation_ratio(alpha).unwrap().ratio;
            assert_relative_eq!(ratio, base, max_relative = 1e-4);
        }
    }

    #[test]
    fn sweep_families() {
        let pts = sweep_variance(SweepFamily::CatAlpha, 0.0, 3.0, 7, Quadrature::Q, &PartitionChoice::Auto).unwrap();
        assert_eq!(pts.len(), 7);
        assert!(pts[0].stats.variance < 0.4);
        assert!(pts[6].stats.variance > 0.99);
        assert!(sweep_variance(SweepFamily::CatAlpha, 0.0, 3.0, 1, Quadrature::Q, &PartitionChoice::Auto).is_err());
        assert!(sweep_variance(SweepFamily::CatAlpha, 3.0, 0.0, 5, Quadrature::Q, &PartitionChoice::Auto).is_err());
    }

    #[test]
    fn gkp_sweep_tracks_then_deviates() {
        let pts = sweep_variance(
            SweepFamily::GkpDelta2 { mu: 0, rotated: false },
            0.05,
            0.45,
            3,
            Quadrature::Q,
            &PartitionChoice::Auto,
        )
        .unwrap();
        assert!((pts[0].stats.variance - 0.05).abs() / 0.05 < 0.05);
        assert!((pts[2].stats.variance - 0.45).abs() / 0.45 > 0.02, "V(0.45) = {}", pts[2].stats.variance);
        // the dual (rotated) curve deviates differently
        let dual = sweep_variance(
            SweepFamily::GkpDelta2 { mu: 0, rotated: true },
            0.05,
            0.45,
            3,
            Quadrature::Q,
            &PartitionChoice::Auto,
        )
        .unwrap();
        let split = (pts[2].stats.variance - dual[2].stats.variance).abs();
        assert!(split / pts[2].stats.variance > 0.02);
    }

    #[test]
    fn vacuum_sweep_is_flat() {
        let pts = sweep_variance(
            SweepFamily::GkpDelta2 { mu: 0, rotated: false },
            0.05,
            0.1,
            3,
            Quadrature::Q,
            &PartitionChoice::Fixed(DomainPartition::single()),
        )
        .unwrap();
        // single-domain GKP variance is the full second moment, far above delta2
        assert!(pts.iter().all(|p| p.stats.variance > 1.0));
    }

    #[test]
    fn grid_stats_match_analytic() {
        let s = StateModel::gkp(0, 0.1).unwrap();
        let part = DomainPartition::lattice(SQ2PI).unwrap();
        let a = domain_stats(&s, Quadrature::Q, &part).unwrap();
        let g = s.auto_density_grid(Quadrature::Q, 65537).unwrap();
        let b = domain_stats_from_grid(&g, &part).unwrap();
        assert_relative_eq!(a.variance, b.variance, max_relative = 1e-5);
        assert_abs_diff_eq!(a.clipped_fraction, b.clipped_fraction, epsilon = 1e-5);
    }

    #[test]
    fn dropping_tiny_domains_preserves_variance() {
        let s = StateModel::gkp(0, 0.05).unwrap();
        let part = DomainPartition::lattice(SQ2PI).unwrap();
        let st = domain_stats(&s, Quadrature::Q, &part).unwrap();
        // recompute without the drop by integrating over a wider explicit set
        let sum: f64 = st.domains.iter().map(|d| d.prob).sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-8);
        assert!(st.domains.iter().all(|d| d.prob >= PROB_CUTOFF));
    }

    #[test]
    fn csv_has_footer() {
        let s = StateModel::cat(2.0).unwrap();
        let st = domain_stats(&s, Quadrature::Q, &DomainPartition::SignSplit).unwrap();
        let csv = st.to_csv();
        assert!(csv.starts_with("n,mean,prob\n"));
        assert!(csv.contains("\nV,"));
        assert!(csv.contains("\nclipped_fraction,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Domains tile the line: every point maps to exactly the domain whose
        // bounds contain it, with boundaries going right.
        #[test]
        fn partition_tiles_the_line(x in -30.0..30.0f64, period in 0.3..5.0f64, offset in -2.0..2.0f64) {
            for part in [
                DomainPartition::lattice_with_offset(period, offset).unwrap(),
                DomainPartition::SignSplit,
                DomainPartition::explicit(vec![-1.5, 0.25, 4.0]).unwrap(),
            ] {
                let n = part.domain_index(x);
                let (lo, hi) = part.domain_bounds(n);
                prop_assert!(lo <= x && x < hi, "{part:?} x={x} n={n} bounds=({lo},{hi})");
            }
        }

        // V is invariant under a joint shift of partition offset and state
        // displacement.
        #[test]
        fn offset_shift_invariance(alpha in -1.0..1.0f64, delta in -2.0..2.0f64) {
            let period = SQ2PI;
            let s1 = StateModel::coherent(alpha).unwrap();
            let p1 = DomainPartition::lattice(period).unwrap();
            // displacing a coherent state by delta in q means alpha -> alpha + delta/2
            let s2 = StateModel::coherent(alpha + delta / 2.0).unwrap();
            let p2 = DomainPartition::lattice_with_offset(period, delta).unwrap();
            let v1 = domain_stats(&s1, Quadrature::Q, &p1).unwrap().variance;
            let v2 = domain_stats(&s2, Quadrature::Q, &p2).unwrap().variance;
            prop_assert!((v1 - v2).abs() < 1e-8, "v1={v1} v2={v2}");
        }
    }
}
