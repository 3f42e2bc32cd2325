//! Quadrature wavefunctions and probability densities.
//!
//! Every supported state is a finite sum of displaced Gaussians in the
//! position representation,
//!
//! ```text
//!   psi(x) = sum_j  a_j exp(-(x - c_j)^2 / (4 v_j)) exp(-i k_j x),
//! ```
//!
//! a family closed under the fixed momentum transform
//! `psi(p) = integral exp(-i q p / 2) / sqrt(4 pi) psi(q) dq`, which maps a
//! term `(a, c, v, k)` to `(a sqrt(v) e^{-ick}, -2k, 1/v, c/2)`. All state
//! constructors produce phase-free terms (`k = 0`), so amplitudes stay real
//! and momentum structure (cat fringes, GKP combs) arises from interference
//! of the transformed terms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CoreError, Result};

/// Which quadrature a density or grid refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "p")]
    P,
}

impl std::fmt::Display for Quadrature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quadrature::Q => "q",
            Quadrature::P => "p",
        })
    }
}

/// Quadrature rotation angle, restricted to `{0, pi/2}`.
///
/// A quarter rotation takes `q -> p`, `p -> -q` and implements the logical
/// Hadamard on GKP states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Rotation {
    #[default]
    #[serde(rename = "0")]
    None,
    #[serde(rename = "90")]
    Quarter,
}

/// State family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Vacuum,
    /// Coherent state with real displacement `alpha`; `<q> = 2 alpha`.
    Coherent { alpha: f64 },
    /// Squeezed vacuum with squeezed position variance `delta2` in `(0, 1]`.
    Squeezed { delta2: f64 },
    /// Even cat state: symmetric superposition of `|alpha>` and `|-alpha>`, `alpha >= 0`.
    Cat { alpha: f64 },
    /// Finite-energy GKP state: envelope-weighted superposition of squeezed
    /// states displaced to `sqrt(2 pi) (2n + mu) sqrt(1 - delta2^2)`.
    Gkp { mu: u8, delta2: f64 },
}

/// A parametric state together with an optional quarter rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateModel {
    #[serde(flatten)]
    pub kind: StateKind,
    #[serde(default)]
    pub rotation: Rotation,
}

/// One Gaussian term `amp * exp(-(x-center)^2/(4 var)) * exp(-i wavenumber x)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianTerm {
    pub amp: f64,
    pub center: f64,
    pub var: f64,
    pub wavenumber: f64,
}

impl GaussianTerm {
    fn eval(&self, x: f64) -> Complex64 {
        let g = self.amp * (-(x - self.center).powi(2) / (4.0 * self.var)).exp();
        if self.wavenumber == 0.0 {
            Complex64::new(g, 0.0)
        } else {
            let ph = -self.wavenumber * x;
            Complex64::new(g * ph.cos(), g * ph.sin())
        }
    }

    /// Momentum transform of a phase-free term.
    fn transformed(&self) -> GaussianTerm {
        debug_assert_eq!(self.wavenumber, 0.0);
        GaussianTerm {
            amp: self.amp * self.var.sqrt(),
            center: 0.0,
            var: 1.0 / self.var,
            wavenumber: self.center / 2.0,
        }
    }

    /// Parity flip `x -> -x`.
    fn mirrored(&self) -> GaussianTerm {
        GaussianTerm {
            amp: self.amp,
            center: -self.center,
            var: self.var,
            wavenumber: -self.wavenumber,
        }
    }
}

/// GKP envelope weights below this threshold are dropped; keeps the
/// truncation error far below every test tolerance.
const GKP_WEIGHT_CUTOFF: f64 = 1e-12;

/// Half-width of the support of a term, in standard deviations. Beyond this
/// the density has fallen below 1e-16 of the term peak.
const SUPPORT_SIGMAS: f64 = 9.0;

impl StateModel {
    pub fn new(kind: StateKind) -> Result<Self> {
        let s = StateModel { kind, rotation: Rotation::None };
        s.validate()?;
        Ok(s)
    }

    pub fn vacuum() -> Self {
        StateModel { kind: StateKind::Vacuum, rotation: Rotation::None }
    }

    pub fn coherent(alpha: f64) -> Result<Self> {
        Self::new(StateKind::Coherent { alpha })
    }

    pub fn squeezed(delta2: f64) -> Result<Self> {
        Self::new(StateKind::Squeezed { delta2 })
    }

    pub fn cat(alpha: f64) -> Result<Self> {
        Self::new(StateKind::Cat { alpha })
    }

    pub fn gkp(mu: u8, delta2: f64) -> Result<Self> {
        Self::new(StateKind::Gkp { mu, delta2 })
    }

    /// The state with its rotation set to a quarter turn (idempotent; only
    /// the two rotation values `{0, pi/2}` are supported).
    pub fn rotated(mut self) -> Self {
        self.rotation = Rotation::Quarter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            StateKind::Vacuum => Ok(()),
            StateKind::Coherent { alpha } => {
                if alpha.is_finite() {
                    Ok(())
                } else {
                    Err(CoreError::ParameterOutOfRange("coherent alpha must be finite".into()))
                }
            }
            StateKind::Squeezed { delta2 } => {
                if delta2 > 0.0 && delta2 <= 1.0 {
                    Ok(())
                } else {
                    Err(CoreError::ParameterOutOfRange(format!(
                        "squeezed variance delta2 = {delta2}, expected 0 < delta2 <= 1"
                    )))
                }
            }
            StateKind::Cat { alpha } => {
                if alpha >= 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(CoreError::ParameterOutOfRange(format!("cat alpha = {alpha}, expected alpha >= 0")))
                }
            }
            StateKind::Gkp { mu, delta2 } => {
                if mu > 1 {
                    return Err(CoreError::ParameterOutOfRange(format!("gkp mu = {mu}, expected 0 or 1")));
                }
                if delta2 > 0.0 && delta2 < 1.0 {
                    Ok(())
                } else {
                    Err(CoreError::ParameterOutOfRange(format!(
                        "gkp delta2 = {delta2}, expected 0 < delta2 < 1"
                    )))
                }
            }
        }
    }

    /// Gaussian terms of the unrotated position wavefunction.
    fn base_terms(&self) -> Vec<GaussianTerm> {
        let norm4 = (2.0 * std::f64::consts::PI).powf(-0.25);
        match self.kind {
            StateKind::Vacuum => vec![GaussianTerm { amp: norm4, center: 0.0, var: 1.0, wavenumber: 0.0 }],
            StateKind::Coherent { alpha } => {
                vec![GaussianTerm { amp: norm4, center: 2.0 * alpha, var: 1.0, wavenumber: 0.0 }]
            }
            StateKind::Squeezed { delta2 } => {
                let amp = (2.0 * std::f64::consts::PI * delta2).powf(-0.25);
                vec![GaussianTerm { amp, center: 0.0, var: delta2, wavenumber: 0.0 }]
            }
            StateKind::Cat { alpha } => {
                let aleph = (2.0 + 2.0 * (-2.0 * alpha * alpha).exp()).powf(-0.5);
                let amp = aleph * norm4;
                vec![
                    GaussianTerm { amp, center: 2.0 * alpha, var: 1.0, wavenumber: 0.0 },
                    GaussianTerm { amp, center: -2.0 * alpha, var: 1.0, wavenumber: 0.0 },
                ]
            }
            StateKind::Gkp { mu, delta2 } => gkp_terms(mu, delta2),
        }
    }

    /// Gaussian terms of the wavefunction in the requested quadrature,
    /// rotation applied.
    pub fn terms(&self, quadrature: Quadrature) -> Vec<GaussianTerm> {
        let base = self.base_terms();
        match (quadrature, self.rotation) {
            (Quadrature::Q, Rotation::None) => base,
            (Quadrature::P, Rotation::None) | (Quadrature::Q, Rotation::Quarter) => {
                base.iter().map(GaussianTerm::transformed).collect()
            }
            // <p|R psi> = <q = -p|psi> up to a global phase: the rotated
            // momentum amplitude is the mirrored position amplitude.
            (Quadrature::P, Rotation::Quarter) => base.iter().map(GaussianTerm::mirrored).collect(),
        }
    }

    /// Position-representation amplitude (momentum amplitude of the unrotated
    /// state when `rotation = pi/2`).
    pub fn psi_q(&self, q: f64) -> Result<Complex64> {
        self.validate()?;
        Ok(eval_terms(&self.terms(Quadrature::Q), q))
    }

    /// Momentum-representation amplitude under the fixed transform kernel.
    pub fn psi_p(&self, p: f64) -> Result<Complex64> {
        self.validate()?;
        Ok(eval_terms(&self.terms(Quadrature::P), p))
    }

    /// `|psi|^2` in the requested quadrature, as a closure over the term list.
    pub fn density(&self, quadrature: Quadrature) -> impl Fn(f64) -> f64 {
        let terms = self.terms(quadrature);
        move |x| eval_terms(&terms, x).norm_sqr()
    }

    /// Interval outside which the density is below ~1e-16 of any term peak.
    pub fn support(&self, quadrature: Quadrature) -> (f64, f64) {
        support_of(&self.terms(quadrature))
    }

    /// Tabulate the density on `[x_min, x_max]` with `n_points` samples.
    pub fn density_grid(&self, quadrature: Quadrature, x_min: f64, x_max: f64, n_points: usize) -> Result<DensityGrid> {
        self.validate()?;
        if n_points < 2 {
            return Err(CoreError::DegenerateRange(format!("n_points = {n_points}, need >= 2")));
        }
        if !(x_min < x_max) {
            return Err(CoreError::DegenerateRange(format!("grid range [{x_min}, {x_max}]")));
        }
        let f = self.density(quadrature);
        let dx = (x_max - x_min) / (n_points - 1) as f64;
        let values = (0..n_points).map(|i| f(x_min + dx * i as f64)).collect();
        Ok(DensityGrid { quadrature, x0: x_min, dx, values })
    }

    /// Tabulate the density over an automatically chosen range covering all
    /// but ~1e-12 of the probability mass.
    pub fn auto_density_grid(&self, quadrature: Quadrature, n_points: usize) -> Result<DensityGrid> {
        let (lo, hi) = self.support(quadrature);
        self.density_grid(quadrature, lo, hi, n_points)
    }
}

pub(crate) fn eval_terms(terms: &[GaussianTerm], x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        acc += t.eval(x);
    }
    acc
}

pub(crate) fn support_of(terms: &[GaussianTerm]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in terms {
        let w = SUPPORT_SIGMAS * t.var.sqrt();
        lo = lo.min(t.center - w);
        hi = hi.max(t.center + w);
    }
    (lo, hi)
}

fn gkp_terms(mu: u8, delta2: f64) -> Vec<GaussianTerm> {
    let sq2pi = (2.0 * std::f64::consts::PI).sqrt();
    let spacing = sq2pi * (1.0 - delta2 * delta2).sqrt();
    let amp0 = (2.0 * std::f64::consts::PI * delta2).powf(-0.25);
    let mut terms = Vec::new();
    let mut push = |m: i64| {
        let w = (-(std::f64::consts::PI / 2.0) * delta2 * (m * m) as f64).exp();
        terms.push(GaussianTerm { amp: w * amp0, center: spacing * m as f64, var: delta2, wavenumber: 0.0 });
    };
    let mut m = i64::from(mu);
    while (-(std::f64::consts::PI / 2.0) * delta2 * (m * m) as f64).exp() >= GKP_WEIGHT_CUTOFF {
        push(m);
        if m != 0 {
            push(-m);
        }
        m += 2;
    }
    // normalize from pairwise Gaussian overlaps (exact for real terms).
    let mut norm2 = 0.0;
    for a in &terms {
        for b in &terms {
            let vsum = a.var + b.var;
            norm2 += a.amp
                * b.amp
                * (4.0 * std::f64::consts::PI * a.var * b.var / vsum).sqrt()
                * (-(a.center - b.center).powi(2) / (4.0 * vsum)).exp();
        }
    }
    let scale = norm2.sqrt().recip();
    for t in &mut terms {
        t.amp *= scale;
    }
    terms
}

// ---------------------------------------------------------------------------
// Tabulated densities
// ---------------------------------------------------------------------------

/// A density sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub quadrature: Quadrature,
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.values.len().saturating_sub(1))
    }

    /// Trapezoidal total mass.
    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.values, self.dx)
    }

    pub fn mean(&self) -> f64 {
        let m: f64 = moment_values(self, 1);
        m / self.total_mass()
    }

    /// Raw (uncentred) second moment.
    pub fn second_moment(&self) -> f64 {
        moment_values(self, 2) / self.total_mass()
    }

    /// Rescale values so the trapezoidal mass is exactly 1.
    pub fn normalized(mut self) -> Result<Self> {
        let m = self.total_mass();
        if !(m > 0.0) || !m.is_finite() {
            return Err(CoreError::NonNormalizable(m));
        }
        for v in &mut self.values {
            *v /= m;
        }
        Ok(self)
    }

    /// Trapezoidal integral of `w(x) * density` over `[a, b]` with linear
    /// interpolation at the cut points.
    pub fn integrate_window<W: Fn(f64) -> f64>(&self, a: f64, b: f64, w: W) -> f64 {
        let lo = a.max(self.x0);
        let hi = b.min(self.x_max());
        if !(lo < hi) {
            return 0.0;
        }
        let fi = |x: f64| self.interp(x) * w(x);
        let i_lo = ((lo - self.x0) / self.dx).ceil() as usize;
        let i_hi = ((hi - self.x0) / self.dx).floor() as usize;
        if i_lo > i_hi {
            // both cuts inside one cell
            return 0.5 * (fi(lo) + fi(hi)) * (hi - lo);
        }
        let mut acc = 0.0;
        // partial cells at the ends
        let x_lo = self.x(i_lo);
        if lo < x_lo {
            acc += 0.5 * (fi(lo) + fi(x_lo)) * (x_lo - lo);
        }
        let x_hi = self.x(i_hi);
        if x_hi < hi {
            acc += 0.5 * (fi(x_hi) + fi(hi)) * (hi - x_hi);
        }
        for i in i_lo..i_hi {
            let xa = self.x(i);
            let xb = self.x(i + 1);
            acc += 0.5 * (fi(xa) + fi(xb)) * (xb - xa);
        }
        acc
    }

    fn interp(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        let i = t.floor();
        let frac = t - i;
        let i = i as isize;
        if i < 0 {
            return self.values[0];
        }
        let i = i as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

fn trapezoid(v: &[f64], dx: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    (inner + 0.5 * (v[0] + v[v.len() - 1])) * dx
}

fn moment_values(g: &DensityGrid, k: i32) -> f64 {
    let weighted: Vec<f64> = (0..g.len()).map(|i| g.x(i).powi(k) * g.values[i]).collect();
    trapezoid(&weighted, g.dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const SQ2PI: f64 = 2.5066282746310002; // sqrt(2 pi)

    fn norm4() -> f64 {
        (2.0 * std::f64::consts::PI).powf(-0.25)
    }

    #[test]
    fn vacuum_amplitudes() {
        let v = StateModel::vacuum();
        assert_relative_eq!(v.psi_q(0.0).unwrap().re, norm4(), max_relative = 1e-15);
        for p in [-1.3f64, 0.0, 0.7, 2.0] {
            let expect = norm4() * (-p * p / 4.0).exp();
            assert_relative_eq!(v.psi_p(p).unwrap().re, expect, max_relative = 1e-14);
            assert_abs_diff_eq!(v.psi_p(p).unwrap().im, 0.0);
        }
    }

    #[test]
    fn cat_position_amplitude_closed_form() {
        let alpha = 2.0;
        let s = StateModel::cat(alpha).unwrap();
        let aleph = (2.0 + 2.0 * (-2.0 * alpha * alpha).exp()).powf(-0.5);
        let expect = aleph * norm4() * (1.0 + (-16.0_f64).exp());
        assert_relative_eq!(s.psi_q(4.0).unwrap().re, expect, max_relative = 1e-14);
    }

    #[test]
    #[allow(clippy::approx_constant)] // 1.5707963 is a frozen expected value
    fn cat_momentum_fringe_spacing_is_pi_over_alpha() {
        // locate zeros of psi_p numerically; the density fringes of cos^2 have
        // the same period as the zero spacing.
        for alpha in [1.5_f64, 2.0, 3.0] {
            let s = StateModel::cat(alpha).unwrap();
            let re = |p: f64| s.psi_p(p).unwrap().re;
            let mut zeros = Vec::new();
            let mut prev = re(0.0);
            let dp = 1e-4;
            let mut p = dp;
            while p < 9.0 && zeros.len() < 3 {
                let cur = re(p);
                if prev.signum() != cur.signum() {
                    let (mut a, mut b) = (p - dp, p);
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        if re(a).signum() == re(m).signum() {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    zeros.push(0.5 * (a + b));
                }
                prev = cur;
                p += dp;
            }
            assert!(zeros.len() >= 2, "found zeros: {zeros:?}");
            let fringe = zeros[1] - zeros[0];
            assert_relative_eq!(fringe, std::f64::consts::PI / alpha, max_relative = 1e-6);
            if (alpha - 2.0).abs() < 1e-12 {
                assert_relative_eq!(fringe, 1.5707963, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn cat_momentum_central_fringe_is_global_max() {
        let s = StateModel::cat(2.0).unwrap();
        let peak = s.psi_p(0.0).unwrap().norm();
        let mut p = 0.01;
        while p < 8.0 {
            assert!(s.psi_p(p).unwrap().norm() < peak);
            assert!(s.psi_p(-p).unwrap().norm() < peak);
            p += 0.01;
        }
    }

    #[test]
    fn gkp_position_amplitude_matches_numeric_inverse_transform() {
        // independent oracle: psi_q(q) = integral e^{+iqp/2} psi_p(p) dp / sqrt(4 pi)
        // evaluated by trapezoidal sum on a fine grid.
        let s = StateModel::gkp(0, 0.1).unwrap();
        let (lo, hi) = s.support(Quadrature::P);
        let n = 200_001;
        let dp = (hi - lo) / (n - 1) as f64;
        for q in [0.0, 1.0, SQ2PI] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let p = lo + dp * i as f64;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let phase = Complex64::new(0.0, q * p / 2.0).exp();
                acc += w * phase * s.psi_p(p).unwrap();
            }
            acc *= dp / (4.0 * std::f64::consts::PI).sqrt();
            let direct = s.psi_q(q).unwrap();
            assert_abs_diff_eq!(acc.re, direct.re, epsilon = 1e-8);
            assert_abs_diff_eq!(acc.im, direct.im, epsilon = 1e-8);
        }
    }

    #[test]
    fn gkp_mu1_peaks_at_odd_lattice_multiples() {
        let s = StateModel::gkp(1, 0.1).unwrap();
        let g = s.auto_density_grid(Quadrature::Q, 16385).unwrap();
        // local maxima above a tenth of the global peak
        let peak = g.values.iter().cloned().fold(0.0, f64::max);
        let mut maxima = Vec::new();
        for i in 1..g.len() - 1 {
            if g.values[i] > g.values[i - 1] && g.values[i] > g.values[i + 1] && g.values[i] > 0.02 * peak {
                maxima.push(g.x(i));
            }
        }
        assert!(maxima.len() >= 4, "maxima: {maxima:?}");
        for m in maxima {
            let idx = m / SQ2PI;
            let nearest = idx.round();
            assert!(nearest as i64 % 2 != 0, "peak at {m} -> index {nearest}");
            assert!((idx - nearest).abs() < 0.05, "peak at {m} off-lattice");
        }
    }

    #[test]
    fn gkp_dual_basis_momentum_peaks_at_all_lattice_multiples() {
        let s = StateModel::gkp(0, 0.1).unwrap();
        let g = s.auto_density_grid(Quadrature::P, 16385).unwrap();
        let peak = g.values.iter().cloned().fold(0.0, f64::max);
        let mut maxima = Vec::new();
        for i in 1..g.len() - 1 {
            if g.values[i] > g.values[i - 1] && g.values[i] > g.values[i + 1] && g.values[i] > 0.05 * peak {
                maxima.push(g.x(i));
            }
        }
        // expect peaks near 0, ±1, ±2 times sqrt(2 pi): both "0" and "1" positions
        for k in -2i64..=2 {
            let target = k as f64 * SQ2PI;
            assert!(
                maxima.iter().any(|m| (m - target).abs() < 0.2),
                "no momentum peak near {target} (k = {k}); maxima: {maxima:?}"
            );
        }
    }

    #[test]
    fn cat_at_zero_alpha_is_vacuum() {
        let c = StateModel::cat(0.0).unwrap();
        let v = StateModel::vacuum();
        let dc = c.density(Quadrature::Q);
        let dv = v.density(Quadrature::Q);
        let mut x = -8.0;
        while x <= 8.0 {
            assert!((dc(x) - dv(x)).abs() < 1e-12);
            x += 0.05;
        }
    }

    #[test]
    fn vacuum_grid_mass_is_one() {
        let g = StateModel::vacuum().auto_density_grid(Quadrature::Q, 4097).unwrap();
        assert_abs_diff_eq!(g.total_mass(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(StateModel::gkp(2, 0.1).is_err());
        assert!(StateModel::gkp(0, 0.0).is_err());
        assert!(StateModel::gkp(0, 1.0).is_err());
        assert!(StateModel::squeezed(0.0).is_err());
        assert!(StateModel::squeezed(1.5).is_err());
        assert!(StateModel::cat(-1.0).is_err());
        assert!(StateModel::vacuum().density_grid(Quadrature::Q, 1.0, 1.0, 10).is_err());
        assert!(StateModel::vacuum().density_grid(Quadrature::Q, 0.0, 1.0, 1).is_err());
    }

    fn arb_state() -> impl Strategy<Value = StateModel> {
        let kind = prop_oneof![
            Just(StateKind::Vacuum),
            (-2.0..2.0f64).prop_map(|alpha| StateKind::Coherent { alpha }),
            (0.05..1.0f64).prop_map(|delta2| StateKind::Squeezed { delta2 }),
            (0.0..3.0f64).prop_map(|alpha| StateKind::Cat { alpha }),
            (0u8..2, 0.02..0.5f64).prop_map(|(mu, delta2)| StateKind::Gkp { mu, delta2 }),
        ];
        (kind, proptest::bool::ANY).prop_map(|(kind, rot)| {
            let mut s = StateModel::new(kind).unwrap();
            if rot {
                s = s.rotated();
            }
            s
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // Parseval: both quadrature densities carry unit mass.
        #[test]
        fn parseval_unit_mass(s in arb_state()) {
            let gq = s.auto_density_grid(Quadrature::Q, 8193).unwrap();
            let gp = s.auto_density_grid(Quadrature::P, 8193).unwrap();
            prop_assert!((gq.total_mass() - 1.0).abs() < 1e-8, "q mass {}", gq.total_mass());
            prop_assert!((gp.total_mass() - 1.0).abs() < 1e-8, "p mass {}", gp.total_mass());
        }

        // Rotation consistency: q density with rotation = pi/2 equals the
        // p density with rotation = 0, pointwise.
        #[test]
        fn rotation_swaps_quadratures(s in arb_state(), x in -6.0..6.0f64) {
            let base = StateModel { kind: s.kind, rotation: Rotation::None };
            let rot = StateModel { kind: s.kind, rotation: Rotation::Quarter };
            let dq = rot.density(Quadrature::Q);
            let dp = base.density(Quadrature::P);
            prop_assert!((dq(x) - dp(x)).abs() < 1e-10);
        }
    }
}
