//! Lattice-shift error ladders and logical error classification.
//!
//! Binned feedforward rounds a noisy measurement to the nearest lattice
//! point. With Gaussian noise of variance `V` on a lattice of period `D`, the
//! rounded value lands `n` steps away with probability
//!
//! ```text
//!   P(0)     = erf( D / (2 sqrt(2 V)) )
//!   P(|n|)   = erf( (2n+1) D / (2 sqrt(2 V)) ) - erf( (2n-1) D / (2 sqrt(2 V)) ),  n >= 1,
//! ```
//!
//! the mass of the peak-centred band `[(n - 1/2) D, (n + 1/2) D)` combined
//! over both signs. The bands tile the line, so the ladder telescopes to 1.
//! (An alternative convention uses the half-open bands `[n D/2, (n+1) D/2)`;
//! it shares `P(0)` but does not reproduce the statistics of rounding to the
//! nearest lattice point and is not used here.)
//!
//! Shifts by even lattice multiples leave the encoded qubit alone; odd
//! multiples flip it. Odd total shift in `q` is a bit flip, odd total shift
//! in `p` a phase flip.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{OperatorExpr, Symbol};
use crate::{CoreError, Result};

/// Ladders are truncated once the remaining tail is below this.
const TAIL_CUTOFF: f64 = 1e-15;

/// Probability that Gaussian noise of variance `v` stays inside a centred
/// domain of width `d`: `erf(d / (2 sqrt(2 v)))`. Degenerate `v = 0` returns 1.
pub fn confinement_probability(v: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(CoreError::ParameterOutOfRange(format!("domain width {d}")));
    }
    if !(v >= 0.0) || !v.is_finite() {
        return Err(CoreError::ParameterOutOfRange(format!("variance {v}")));
    }
    if v == 0.0 {
        return Ok(1.0);
    }
    Ok(libm::erf(d / (2.0 * (2.0 * v).sqrt())))
}

/// Discrete distribution of lattice-shift errors.
///
/// `probs[n]` for `n >= 1` is the combined probability of shifting by `+n`
/// or `-n` periods; signs are split evenly when sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLadder {
    pub period: f64,
    pub variance: f64,
    pub probs: Vec<f64>,
}

/// Build the shift ladder for Gaussian noise of variance `v` on a lattice of
/// period `d`. `n_max` caps the ladder length; by default it extends until
/// the truncated tail is below 1e-15, then renormalizes.
pub fn build_ladder(v: f64, d: f64, n_max: Option<usize>) -> Result<ErrorLadder> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(CoreError::ParameterOutOfRange(format!("lattice period {d}")));
    }
    if !(v >= 0.0) || !v.is_finite() {
        return Err(CoreError::ParameterOutOfRange(format!("variance {v}")));
    }
    if v == 0.0 {
        return Ok(ErrorLadder { period: d, variance: 0.0, probs: vec![1.0] });
    }
    let u = d / (2.0 * (2.0 * v).sqrt());
    let band = |k: f64| libm::erf(k * u);
    let mut probs = vec![band(1.0)];
    let cap = n_max.unwrap_or(usize::MAX);
    let mut n = 1usize;
    while n <= cap {
        let hi = band((2 * n + 1) as f64);
        let lo = band((2 * n - 1) as f64);
        probs.push(hi - lo);
        if 1.0 - hi < TAIL_CUTOFF {
            break;
        }
        n += 1;
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(ErrorLadder { period: d, variance: v, probs })
}

impl ErrorLadder {
    /// Probability of an odd shift magnitude (a logical flip).
    pub fn prob_odd(&self) -> f64 {
        self.probs.iter().skip(1).step_by(2).sum()
    }

    pub fn prob_even(&self) -> f64 {
        1.0 - self.prob_odd()
    }

    /// Draw a signed shift; `|n| >= 1` splits its sign evenly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let mut u: f64 = rng.gen();
        for (n, p) in self.probs.iter().enumerate() {
            if u < *p {
                if n == 0 {
                    return 0;
                }
                let sign = if rng.gen::<bool>() { 1 } else { -1 };
                return sign * n as i64;
            }
            u -= p;
        }
        (self.probs.len() as i64 - 1).max(0)
    }

    /// CSV rows `n,prob`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,prob\n");
        for (n, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{n},{p}\n"));
        }
        out
    }
}

/// Joint logical error classes; the four probabilities sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicalErrorReport {
    pub p_none: f64,
    pub p_bit_flip: f64,
    pub p_phase_flip: f64,
    pub p_both: f64,
}

/// Classify the logical error distribution of an output expression pair.
///
/// Every `ErrShift` symbol in `q_expr` / `p_expr` must carry an integer
/// coefficient and refer to a ladder in `ladders` (indexed by its id). Each
/// symbol's shift parity flips the bit (via `q`) and/or the phase (via `p`)
/// wherever its coefficient is odd; independent ladders convolve.
pub fn classify_logical(q_expr: &OperatorExpr, p_expr: &OperatorExpr, ladders: &[ErrorLadder]) -> Result<LogicalErrorReport> {
    // gather (ladder, odd coefficient in q, odd coefficient in p) per symbol
    let gather = |expr: &OperatorExpr, into: &mut Vec<(usize, [bool; 2])>, slot: usize| -> Result<()> {
        for (sym, coeff) in expr.terms() {
            if let Symbol::ErrShift(id) = sym {
                let rounded = coeff.round();
                if (coeff - rounded).abs() > 1e-9 {
                    return Err(CoreError::UnbalancedCircuit { symbol: sym.to_string(), coeff });
                }
                let id = id as usize;
                if id >= ladders.len() {
                    return Err(CoreError::UnboundSymbol(sym.to_string()));
                }
                let odd = (rounded as i64).rem_euclid(2) == 1;
                if let Some(e) = into.iter_mut().find(|(i, _)| *i == id) {
                    e.1[slot] = odd;
                } else {
                    let mut f = [false; 2];
                    f[slot] = odd;
                    into.push((id, f));
                }
            }
        }
        Ok(())
    };
    let mut shifts: Vec<(usize, [bool; 2])> = Vec::new();
    gather(q_expr, &mut shifts, 0)?;
    gather(p_expr, &mut shifts, 1)?;

    // joint distribution over (bit parity, phase parity)
    let mut dist = [[0.0f64; 2]; 2];
    dist[0][0] = 1.0;
    for (id, affects) in shifts {
        let p_odd = ladders[id].prob_odd();
        let mut next = [[0.0f64; 2]; 2];
        for bq in 0..2 {
            for bp in 0..2 {
                let stay = dist[bq][bp] * (1.0 - p_odd);
                let nq = if affects[0] { bq ^ 1 } else { bq };
                let np = if affects[1] { bp ^ 1 } else { bp };
                next[bq][bp] += stay;
                next[nq][np] += dist[bq][bp] * p_odd;
            }
        }
        dist = next;
    }
    Ok(LogicalErrorReport {
        p_none: dist[0][0],
        p_bit_flip: dist[1][0],
        p_phase_flip: dist[0][1],
        p_both: dist[1][1],
    })
}
