//! Symbolic Heisenberg-picture propagation.
//!
//! Each mode's quadratures are tracked as real linear combinations of
//! symbols: per-mode signal operators (`q_c`, `p_c`) carrying the
//! multi-valued displacement, per-mode fluctuation operators (`dq`, `dp`),
//! vacuum operators injected by loss and amplification, detector noise, and
//! discrete lattice-shift error operators produced by binned feedforward.
//! Circuit elements map expressions linearly; variances are evaluated from
//! per-symbol bindings under the diagonal (independent-noise) assumption.
//!
//! Fresh symbol ids are sequential, so the same circuit always produces
//! identical expressions; the pretty-printer emits terms in a canonical
//! order for golden-file comparison.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::domains::DomainPartition;
use crate::ladder::{build_ladder, ErrorLadder};
use crate::{CoreError, Result};

/// Tolerance for the "balanced circuit" integer-coefficient precondition of
/// binned feedforward.
const INTEGER_TOL: f64 = 1e-9;

/// One symbolic operator. The `u32` is a mode number for signal/fluctuation
/// symbols, a fresh sequential id for vacuum/measurement noise, and a ladder
/// id for error shifts.
///
/// The derived ordering (variant order, then id) is the canonical term order
/// of the pretty-printer: signals, fluctuations, vacuum, measurement noise,
/// error shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    SignalQ(u32),
    SignalP(u32),
    FlucQ(u32),
    FlucP(u32),
    VacQ(u32),
    VacP(u32),
    MeasNoiseP(u32),
    ErrShift(u32),
}

impl Symbol {
    /// Signal symbols carry the multi-valued displacement, not Gaussian noise.
    pub fn is_signal(&self) -> bool {
        matches!(self, Symbol::SignalQ(_) | Symbol::SignalP(_))
    }

    /// Symbols contributing Gaussian noise to variances.
    pub fn is_noise(&self) -> bool {
        matches!(
            self,
            Symbol::FlucQ(_) | Symbol::FlucP(_) | Symbol::VacQ(_) | Symbol::VacP(_) | Symbol::MeasNoiseP(_)
        )
    }

    pub fn is_error_shift(&self) -> bool {
        matches!(self, Symbol::ErrShift(_))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::SignalQ(m) => write!(f, "q_c{m}"),
            Symbol::SignalP(m) => write!(f, "p_c{m}"),
            Symbol::FlucQ(m) => write!(f, "dq{m}"),
            Symbol::FlucP(m) => write!(f, "dp{m}"),
            Symbol::VacQ(i) => write!(f, "q_v{i}"),
            Symbol::VacP(i) => write!(f, "p_v{i}"),
            Symbol::MeasNoiseP(i) => write!(f, "p_m{i}"),
            Symbol::ErrShift(i) => write!(f, "p_e{i}"),
        }
    }
}

/// A real linear combination of symbols plus a constant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorExpr {
    terms: BTreeMap<Symbol, f64>,
    constant: f64,
}

impl OperatorExpr {
    pub fn from_symbol(sym: Symbol) -> Self {
        let mut e = OperatorExpr::default();
        e.add_term(sym, 1.0);
        e
    }

    pub fn constant(c: f64) -> Self {
        OperatorExpr { terms: BTreeMap::new(), constant: c }
    }

    /// Accumulate `coeff` onto `sym`, dropping the term if it cancels to zero.
    pub fn add_term(&mut self, sym: Symbol, coeff: f64) {
        let c = self.terms.entry(sym).or_insert(0.0);
        *c += coeff;
        if *c == 0.0 {
            self.terms.remove(&sym);
        }
    }

    pub fn coeff(&self, sym: Symbol) -> f64 {
        self.terms.get(&sym).copied().unwrap_or(0.0)
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.terms.iter().map(|(s, c)| (*s, *c))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.constant == 0.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = OperatorExpr { terms: BTreeMap::new(), constant: self.constant * factor };
        for (s, c) in &self.terms {
            let v = c * factor;
            if v != 0.0 {
                out.terms.insert(*s, v);
            }
        }
        out
    }

    pub fn plus(&self, other: &OperatorExpr) -> Self {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c);
        }
        out.constant += other.constant;
        out
    }

    pub fn minus(&self, other: &OperatorExpr) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    /// Numerical value given per-symbol sample values (absent symbols read 0).
    pub fn eval<F: Fn(Symbol) -> f64>(&self, value: F) -> f64 {
        self.constant + self.terms.iter().map(|(s, c)| c * value(*s)).sum::<f64>()
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (sym, coeff) in &self.terms {
            let mag = coeff.abs();
            if first {
                if *coeff < 0.0 {
                    f.write_str("-")?;
                }
                first = false;
            } else if *coeff < 0.0 {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if (mag - 1.0).abs() < 1e-15 {
                write!(f, "{sym}")?;
            } else {
                write!(f, "{mag}*{sym}")?;
            }
        }
        if self.constant != 0.0 {
            if first {
                write!(f, "{}", self.constant)?;
            } else if self.constant < 0.0 {
                write!(f, " - {}", -self.constant)?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}

impl Serialize for OperatorExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term {
            sym: String,
            coeff: f64,
        }
        struct Terms<'a>(&'a BTreeMap<Symbol, f64>);
        impl Serialize for Terms<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for (s, c) in self.0 {
                    seq.serialize_element(&Term { sym: s.to_string(), coeff: *c })?;
                }
                seq.end()
            }
        }
        let mut st = serializer.serialize_struct("OperatorExpr", 2)?;
        st.serialize_field("terms", &Terms(&self.terms))?;
        st.serialize_field("constant", &self.constant)?;
        st.end()
    }
}

/// Per-symbol Gaussian variances. Vacuum and measurement noise default to
/// unit variance; fluctuation symbols must be bound explicitly; signal and
/// error-shift symbols carry no Gaussian variance.
#[derive(Debug, Clone, Default)]
pub struct NoiseBindings {
    map: BTreeMap<Symbol, f64>,
}

impl NoiseBindings {
    pub fn set(&mut self, sym: Symbol, variance: f64) {
        self.map.insert(sym, variance);
    }

    pub fn variance(&self, sym: Symbol) -> Option<f64> {
        if let Some(v) = self.map.get(&sym) {
            return Some(*v);
        }
        match sym {
            Symbol::VacQ(_) | Symbol::VacP(_) | Symbol::MeasNoiseP(_) => Some(1.0),
            _ => None,
        }
    }
}

impl Serialize for NoiseBindings {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.map.len()))?;
        #[derive(Serialize)]
        struct Binding {
            sym: String,
            variance: f64,
        }
        for (s, v) in &self.map {
            seq.serialize_element(&Binding { sym: s.to_string(), variance: *v })?;
        }
        seq.end()
    }
}

/// Mode handle; display is 1-based to match the symbol names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeId(u32);

impl ModeId {
    pub fn number(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode {}", self.0)
    }
}

/// Which quadrature of a mode an operation addresses.
pub use crate::states::Quadrature;

/// Displacement argument: a number or an operator expression (feedforward).
#[derive(Debug, Clone)]
pub enum Displacement {
    Const(f64),
    Operator(OperatorExpr),
}

/// Result of a binned (error-correcting) feedforward.
#[derive(Debug, Clone)]
pub struct BinOutcome {
    /// Integer-coefficient signal content of the rescaled measurement.
    pub signal: OperatorExpr,
    /// Fresh error-shift symbol carrying the rounding-mistake ladder.
    pub err: Symbol,
    /// Gaussian noise variance of the rescaled measurement.
    pub noise_variance: f64,
    pub ladder_id: usize,
}

/// Symbolic engine state: per-mode expressions, noise bindings, fresh-symbol
/// counters, ladder registry, and a log of applied elements.
#[derive(Debug, Default)]
pub struct Engine {
    modes: Vec<Option<(OperatorExpr, OperatorExpr)>>,
    bindings: NoiseBindings,
    next_vac: u32,
    next_meas: u32,
    ladders: Vec<ErrorLadder>,
    log: Vec<String>,
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn bindings(&self) -> &NoiseBindings {
        &self.bindings
    }

    pub fn bindings_mut(&mut self) -> &mut NoiseBindings {
        &mut self.bindings
    }

    pub fn ladders(&self) -> &[ErrorLadder] {
        &self.ladders
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    /// Register a new mode with fluctuation variances `(v_q, v_p)`:
    /// `Q = q_c + dq`, `P = p_c + dp`.
    pub fn new_mode(&mut self, v_q: f64, v_p: f64) -> Result<ModeId> {
        if !(v_q >= 0.0) || !(v_p >= 0.0) || !v_q.is_finite() || !v_p.is_finite() {
            return Err(CoreError::ParameterOutOfRange(format!("mode variances ({v_q}, {v_p})")));
        }
        let m = self.modes.len() as u32 + 1;
        let mut q = OperatorExpr::from_symbol(Symbol::SignalQ(m));
        q.add_term(Symbol::FlucQ(m), 1.0);
        let mut p = OperatorExpr::from_symbol(Symbol::SignalP(m));
        p.add_term(Symbol::FlucP(m), 1.0);
        self.modes.push(Some((q, p)));
        self.bindings.set(Symbol::FlucQ(m), v_q);
        self.bindings.set(Symbol::FlucP(m), v_p);
        self.log.push(format!("new_mode({m}, v_q={v_q}, v_p={v_p})"));
        Ok(ModeId(m))
    }

    fn mode_mut(&mut self, mode: ModeId) -> Result<&mut (OperatorExpr, OperatorExpr)> {
        let idx = mode.0 as usize;
        if idx == 0 || idx > self.modes.len() {
            return Err(CoreError::UnknownMode(mode.0));
        }
        self.modes[idx - 1].as_mut().ok_or(CoreError::ConsumedMode(mode.0))
    }

    /// Current `(Q, P)` expressions of a live mode.
    pub fn mode_exprs(&self, mode: ModeId) -> Result<(&OperatorExpr, &OperatorExpr)> {
        let idx = mode.0 as usize;
        if idx == 0 || idx > self.modes.len() {
            return Err(CoreError::UnknownMode(mode.0));
        }
        self.modes[idx - 1]
            .as_ref()
            .map(|(q, p)| (q, p))
            .ok_or(CoreError::ConsumedMode(mode.0))
    }

    fn fresh_vac(&mut self) -> u32 {
        self.next_vac += 1;
        self.next_vac
    }

    fn fresh_meas(&mut self) -> u32 {
        self.next_meas += 1;
        self.next_meas
    }

    /// Beamsplitter of transmission `t2` acting on an expression pair: one
    /// fresh vacuum pair is admixed. `t2 = 1` returns clones and mints no
    /// symbols.
    pub fn attenuate_pair(&mut self, q: &OperatorExpr, p: &OperatorExpr, t2: f64) -> Result<(OperatorExpr, OperatorExpr)> {
        if !(0.0..=1.0).contains(&t2) {
            return Err(CoreError::ParameterOutOfRange(format!("transmission {t2}")));
        }
        if t2 == 1.0 {
            return Ok((q.clone(), p.clone()));
        }
        let id = self.fresh_vac();
        let (t, r) = (t2.sqrt(), (1.0 - t2).sqrt());
        let mut q2 = q.scaled(t);
        q2.add_term(Symbol::VacQ(id), r);
        let mut p2 = p.scaled(t);
        p2.add_term(Symbol::VacP(id), r);
        Ok((q2, p2))
    }

    /// Detector inefficiency on a momentum expression: `sqrt(eta) p +
    /// sqrt(1-eta) p_m`, with a dedicated measurement-noise symbol.
    pub fn detector_attenuate_p(&mut self, p: &OperatorExpr, eta: f64) -> Result<OperatorExpr> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(CoreError::ParameterOutOfRange(format!("detector efficiency {eta}")));
        }
        if eta == 1.0 {
            return Ok(p.clone());
        }
        let id = self.fresh_meas();
        let mut out = p.scaled(eta.sqrt());
        out.add_term(Symbol::MeasNoiseP(id), (1.0 - eta).sqrt());
        Ok(out)
    }

    /// Phase-insensitive amplifier on an expression pair:
    /// `Q -> g Q + sqrt(g^2-1) q_v`, `P -> g P - sqrt(g^2-1) p_v`
    /// (idler conjugate enters `P` with a minus sign).
    pub fn amplify_pair(&mut self, q: &OperatorExpr, p: &OperatorExpr, g: f64) -> Result<(OperatorExpr, OperatorExpr)> {
        if !(g >= 1.0) || !g.is_finite() {
            return Err(CoreError::ParameterOutOfRange(format!("amplifier gain {g}")));
        }
        if g == 1.0 {
            return Ok((q.clone(), p.clone()));
        }
        let id = self.fresh_vac();
        let r = (g * g - 1.0).sqrt();
        let mut q2 = q.scaled(g);
        q2.add_term(Symbol::VacQ(id), r);
        let mut p2 = p.scaled(g);
        p2.add_term(Symbol::VacP(id), -r);
        Ok((q2, p2))
    }

    /// Loss of transmission `eta` on a mode.
    pub fn apply_loss(&mut self, mode: ModeId, eta: f64) -> Result<()> {
        let (q, p) = self.mode_exprs(mode).map(|(q, p)| (q.clone(), p.clone()))?;
        let (q2, p2) = self.attenuate_pair(&q, &p, eta)?;
        *self.mode_mut(mode)? = (q2, p2);
        self.log.push(format!("loss({mode}, eta={eta})"));
        Ok(())
    }

    /// Detector inefficiency ahead of a measurement of `P`; the discarded
    /// position quadrature receives an ordinary vacuum admixture.
    pub fn apply_detector_loss(&mut self, mode: ModeId, eta: f64) -> Result<()> {
        let (q, p) = self.mode_exprs(mode).map(|(q, p)| (q.clone(), p.clone()))?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(CoreError::ParameterOutOfRange(format!("detector efficiency {eta}")));
        }
        if eta == 1.0 {
            return Ok(());
        }
        let p2 = self.detector_attenuate_p(&p, eta)?;
        let vac = self.fresh_vac();
        let mut q2 = q.scaled(eta.sqrt());
        q2.add_term(Symbol::VacQ(vac), (1.0 - eta).sqrt());
        *self.mode_mut(mode)? = (q2, p2);
        self.log.push(format!("detector_loss({mode}, eta={eta})"));
        Ok(())
    }

    /// CZ gate: each mode's momentum is displaced by the other's position;
    /// positions are untouched.
    pub fn apply_cz(&mut self, a: ModeId, b: ModeId) -> Result<()> {
        if a == b {
            return Err(CoreError::ParameterOutOfRange("cz needs two distinct modes".into()));
        }
        let q_a = self.mode_exprs(a)?.0.clone();
        let q_b = self.mode_exprs(b)?.0.clone();
        {
            let (_, p) = self.mode_mut(a)?;
            *p = p.plus(&q_b);
        }
        {
            let (_, p) = self.mode_mut(b)?;
            *p = p.plus(&q_a);
        }
        self.log.push(format!("cz({a}, {b})"));
        Ok(())
    }

    pub fn apply_amplifier(&mut self, mode: ModeId, g: f64) -> Result<()> {
        let (q, p) = self.mode_exprs(mode).map(|(q, p)| (q.clone(), p.clone()))?;
        let (q2, p2) = self.amplify_pair(&q, &p, g)?;
        *self.mode_mut(mode)? = (q2, p2);
        self.log.push(format!("amplifier({mode}, g={g})"));
        Ok(())
    }

    /// Quarter rotation: `(Q, P) -> (P, -Q)`.
    pub fn apply_rotation90(&mut self, mode: ModeId) -> Result<()> {
        let (q, p) = self.mode_mut(mode)?;
        let new_q = p.clone();
        let new_p = q.scaled(-1.0);
        *q = new_q;
        *p = new_p;
        self.log.push(format!("rotation90({mode})"));
        Ok(())
    }

    pub fn apply_displacement(&mut self, mode: ModeId, quadrature: Quadrature, by: Displacement) -> Result<()> {
        let (q, p) = self.mode_mut(mode)?;
        let target = match quadrature {
            Quadrature::Q => q,
            Quadrature::P => p,
        };
        match by {
            Displacement::Const(c) => target.add_constant(c),
            Displacement::Operator(e) => *target = target.plus(&e),
        }
        self.log.push(format!("displacement({mode}, {quadrature})"));
        Ok(())
    }

    /// Read out a quadrature: returns the current expression and consumes the
    /// mode.
    pub fn measure(&mut self, mode: ModeId, quadrature: Quadrature) -> Result<OperatorExpr> {
        let (q, p) = self.mode_exprs(mode)?;
        let out = match quadrature {
            Quadrature::Q => q.clone(),
            Quadrature::P => p.clone(),
        };
        self.modes[(mode.0 - 1) as usize] = None;
        self.log.push(format!("measure({mode}, {quadrature})"));
        Ok(out)
    }

    /// Gaussian variance of an expression: `sum coeff^2 * variance` over
    /// noise symbols. Signal and error-shift symbols are excluded;
    /// independence is assumed throughout.
    pub fn variance_of(&self, expr: &OperatorExpr) -> Result<f64> {
        variance_of(expr, &self.bindings)
    }

    /// Error-correcting feedforward: rescale the measured expression, round
    /// its signal content to the lattice, and trade its Gaussian noise for a
    /// discrete shift-error symbol.
    ///
    /// Precondition ("balanced circuit"): after rescaling, every signal and
    /// error-shift coefficient is an integer to 1e-9 and the constant is an
    /// integer multiple of the lattice period.
    pub fn bin_correct(&mut self, expr: &OperatorExpr, rescale: f64, partition: &DomainPartition) -> Result<BinOutcome> {
        let period = match partition {
            DomainPartition::Lattice { period, offset } if *offset == 0.0 => *period,
            DomainPartition::Lattice { .. } => {
                return Err(CoreError::InvalidPartition("binned feedforward expects a zero-offset lattice".into()))
            }
            other => {
                return Err(CoreError::InvalidPartition(format!(
                    "binned feedforward expects a lattice partition, got {other:?}"
                )))
            }
        };
        let scaled = expr.scaled(rescale);
        let mut signal = OperatorExpr::default();
        let mut noise_variance = 0.0;
        for (sym, coeff) in scaled.terms() {
            if sym.is_signal() || sym.is_error_shift() {
                let rounded = coeff.round();
                if (coeff - rounded).abs() > INTEGER_TOL {
                    return Err(CoreError::UnbalancedCircuit { symbol: sym.to_string(), coeff });
                }
                if rounded != 0.0 {
                    signal.add_term(sym, rounded);
                }
            } else {
                let v = self
                    .bindings
                    .variance(sym)
                    .ok_or_else(|| CoreError::UnboundSymbol(sym.to_string()))?;
                noise_variance += coeff * coeff * v;
            }
        }
        let k = scaled.constant_part() / period;
        let k_round = k.round();
        if (k - k_round).abs() > INTEGER_TOL {
            return Err(CoreError::UnbalancedCircuit { symbol: "constant".into(), coeff: scaled.constant_part() });
        }
        if k_round != 0.0 {
            signal.add_constant(k_round * period);
        }
        let ladder = build_ladder(noise_variance, period, None)?;
        let ladder_id = self.ladders.len();
        self.ladders.push(ladder);
        self.log.push(format!("bin_correct(rescale={rescale}, D={period}, V={noise_variance})"));
        Ok(BinOutcome { signal, err: Symbol::ErrShift(ladder_id as u32), noise_variance, ladder_id })
    }

    /// Symplectic form of an expression pair over fluctuation and vacuum
    /// symbol pairs: `sum_j (Q_qj P_pj - Q_pj P_qj)`. Passive elements and
    /// the phase-insensitive amplifier preserve the value 1 for a mode pair.
    pub fn symplectic_form(&self, q: &OperatorExpr, p: &OperatorExpr) -> f64 {
        #[derive(PartialEq, Eq, PartialOrd, Ord)]
        enum PairKey {
            Mode(u32),
            Vac(u32),
        }
        let key = |s: Symbol| match s {
            Symbol::FlucQ(m) | Symbol::FlucP(m) => Some(PairKey::Mode(m)),
            Symbol::VacQ(i) | Symbol::VacP(i) => Some(PairKey::Vac(i)),
            _ => None,
        };
        let mut keys: Vec<PairKey> = q.terms().chain(p.terms()).filter_map(|(s, _)| key(s)).collect();
        keys.sort();
        keys.dedup();
        keys.iter()
            .map(|k| {
                let (qs, ps) = match k {
                    PairKey::Mode(m) => (Symbol::FlucQ(*m), Symbol::FlucP(*m)),
                    PairKey::Vac(i) => (Symbol::VacQ(*i), Symbol::VacP(*i)),
                };
                q.coeff(qs) * p.coeff(ps) - q.coeff(ps) * p.coeff(qs)
            })
            .sum()
    }
}

/// Variance against explicit bindings (see [`Engine::variance_of`]).
pub fn variance_of(expr: &OperatorExpr, bindings: &NoiseBindings) -> Result<f64> {
    let mut acc = 0.0;
    for (sym, coeff) in expr.terms() {
        if sym.is_noise() {
            let v = bindings.variance(sym).ok_or_else(|| CoreError::UnboundSymbol(sym.to_string()))?;
            acc += coeff * coeff * v;
        }
    }
    Ok(acc)
}
