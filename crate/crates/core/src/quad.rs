//! Adaptive Simpson quadrature.

use crate::{CoreError, Result};

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The interval is pre-split into `panels` pieces so narrow features away
/// from panel midpoints are not missed by the first error estimate, then each
/// piece is refined adaptively (Richardson criterion `|S2 - S1| <= 15 eps`).
/// `abs_floor` stops refinement of segments whose contribution is negligible
/// against the expected magnitude of the whole integral.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64, panels: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(CoreError::DegenerateRange(format!("integration bounds [{a}, {b}]")));
    }
    let panels = panels.max(1);
    let h = (b - a) / f64::from(panels);
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + h * f64::from(i);
        let hi = if i + 1 == panels { b } else { lo + h };
        let flo = f(lo);
        let fmid = f(0.5 * (lo + hi));
        let fhi = f(hi);
        let whole = simpson(lo, hi, flo, fmid, fhi);
        total += refine(&f, lo, hi, flo, fmid, fhi, whole, rel_tol, abs_floor, MAX_DEPTH);
    }
    if total.is_nan() {
        return Err(CoreError::Numeric("NaN encountered during quadrature".into()));
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, rel_tol: f64, abs_floor: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let s2 = left + right;
    let err = s2 - whole;
    let tol = rel_tol * s2.abs() + abs_floor;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return s2 + err / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, rel_tol, 0.5 * abs_floor, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, rel_tol, 0.5 * abs_floor, depth - 1)
}
