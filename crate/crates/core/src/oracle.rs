//! Independent single-mode Gaussian-channel oracle.
//!
//! The quadrature marginal of a state passing through loss `eta` is exactly
//! the density of `sqrt(eta) X + sqrt(1 - eta) Z` with `Z` unit Gaussian:
//! rescale the abscissa, convolve with the Gaussian kernel. Amplification of
//! gain `g` is the same with `g` and kernel variance `g^2 - 1`. No density
//! matrices involved; this validates the engine's variance-transfer
//! arithmetic from first principles.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::domains::{auto_partition, domain_stats, domain_stats_from_grid, DomainPartition};
use crate::states::{DensityGrid, Quadrature, StateModel};
use crate::{CoreError, Result};

/// One-quadrature Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Loss { eta: f64 },
    Amp { gain: f64 },
}

impl ChannelSpec {
    /// `(abscissa scale, kernel variance)`.
    fn scale_and_kernel(&self) -> Result<(f64, f64)> {
        match *self {
            ChannelSpec::Loss { eta } => {
                if eta > 0.0 && eta <= 1.0 {
                    Ok((eta.sqrt(), 1.0 - eta))
                } else {
                    Err(CoreError::ParameterOutOfRange(format!("loss eta = {eta}, expected (0, 1]")))
                }
            }
            ChannelSpec::Amp { gain } => {
                if gain >= 1.0 && gain.is_finite() {
                    Ok((gain, gain * gain - 1.0))
                } else {
                    Err(CoreError::ParameterOutOfRange(format!("amplifier gain = {gain}, expected >= 1")))
                }
            }
        }
    }

    /// Factor multiplying the variance: `eta` or `g^2`.
    pub fn variance_scale(&self) -> f64 {
        match *self {
            ChannelSpec::Loss { eta } => eta,
            ChannelSpec::Amp { gain } => gain * gain,
        }
    }

    /// Added noise: `1 - eta` or `g^2 - 1`.
    pub fn added_noise(&self) -> f64 {
        match *self {
            ChannelSpec::Loss { eta } => 1.0 - eta,
            ChannelSpec::Amp { gain } => gain * gain - 1.0,
        }
    }
}

/// Push a normalized marginal through a Gaussian channel: rescale the axis,
/// convolve with the kernel (FFT, zero-padded by 6 kernel sigmas), renormalize.
pub fn push_marginal(grid: &DensityGrid, spec: &ChannelSpec) -> Result<DensityGrid> {
    let (scale, kernel_var) = spec.scale_and_kernel()?;
    // abscissa rescale: density of scale*X on the scaled grid
    let scaled = DensityGrid {
        quadrature: grid.quadrature,
        x0: grid.x0 * scale,
        dx: grid.dx * scale,
        values: grid.values.iter().map(|v| v / scale).collect(),
    };
    if kernel_var == 0.0 {
        return scaled.normalized();
    }
    let sigma = kernel_var.sqrt();
    if scaled.dx > sigma / 4.0 {
        return Err(CoreError::GridTooCoarse { spacing: scaled.dx, limit: sigma / 4.0 });
    }
    let pad = (6.0 * sigma / scaled.dx).ceil() as usize;
    let n = (scaled.values.len() + 2 * pad).next_power_of_two();
    let mut f: Vec<Complex64> = vec![Complex64::default(); n];
    for (i, v) in scaled.values.iter().enumerate() {
        f[i + pad] = Complex64::new(*v, 0.0);
    }
    // kernel sampled around index 0 with wrap-around
    let mut k: Vec<Complex64> = vec![Complex64::default(); n];
    let norm = 1.0 / (2.0 * std::f64::consts::PI * kernel_var).sqrt();
    for (j, slot) in k.iter_mut().enumerate() {
        let off = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 } * scaled.dx;
        *slot = Complex64::new(norm * (-off * off / (2.0 * kernel_var)).exp(), 0.0);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    fft.process(&mut f);
    fft.process(&mut k);
    for (a, b) in f.iter_mut().zip(&k) {
        *a *= b;
    }
    planner.plan_fft_inverse(n).process(&mut f);
    let values: Vec<f64> = f.iter().map(|c| (c.re / n as f64 * scaled.dx).max(0.0)).collect();
    DensityGrid {
        quadrature: scaled.quadrature,
        x0: scaled.x0 - pad as f64 * scaled.dx,
        dx: scaled.dx,
        values,
    }
    .normalized()
}

/// Oracle-vs-formula comparison of the domain variance transfer.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransferValidation {
    /// Domain variance of the pushed marginal, boundaries scaled along.
    pub oracle_v: f64,
    /// `eta V + (1 - eta)` (or the amplifier analogue).
    pub formula_v: f64,
    pub rel_err: f64,
    /// Clipping diagnostic of the pushed marginal.
    pub clipped_fraction: f64,
    /// Whether the spikes stayed well separated (`clipped_fraction < 0.05`);
    /// only then is tight agreement claimed.
    pub tight_regime: bool,
    /// Raw second moment of the pushed marginal vs its exact transfer.
    pub oracle_m2: f64,
    pub formula_m2: f64,
}

const GRID_POINTS: usize = 1 << 15;

/// Compare the convolution oracle against the variance-transfer formula for
/// one state and channel, using the state's default domain partition with
/// boundaries scaled by the channel's abscissa factor.
pub fn validate_transfer(state: &StateModel, quadrature: Quadrature, spec: &ChannelSpec) -> Result<TransferValidation> {
    let partition = auto_partition(state, quadrature)?;
    validate_transfer_with(state, quadrature, spec, &partition)
}

pub fn validate_transfer_with(
    state: &StateModel,
    quadrature: Quadrature,
    spec: &ChannelSpec,
    partition: &DomainPartition,
) -> Result<TransferValidation> {
    let (scale, _) = spec.scale_and_kernel()?;
    let before = domain_stats(state, quadrature, partition)?;
    let grid = state.auto_density_grid(quadrature, GRID_POINTS)?;
    let m2_before = grid.second_moment();
    let pushed = push_marginal(&grid, spec)?;
    let scaled_partition = partition.scaled(scale)?;
    let after = domain_stats_from_grid(&pushed, &scaled_partition)?;
    let formula_v = spec.variance_scale() * before.variance + spec.added_noise();
    let rel_err = (after.variance - formula_v).abs() / formula_v;
    Ok(TransferValidation {
        oracle_v: after.variance,
        formula_v,
        rel_err,
        clipped_fraction: after.clipped_fraction,
        tight_regime: after.clipped_fraction < 0.05,
        oracle_m2: pushed.second_moment(),
        formula_m2: spec.variance_scale() * m2_before + spec.added_noise(),
    })
}
