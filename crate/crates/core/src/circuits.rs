//! The CZ teleportation circuit with error-correcting feedforward, ideal and
//! loss-tolerant.
//!
//! Three modes: an input (mode 1) and two "+"-state resources (modes 2, 3).
//! CZ gates couple 1-2 and 2-3; momentum measurements of modes 1 and 2 are
//! binned to the GKP lattice and fed forward onto mode 3's momentum and
//! position respectively. In the loss-tolerant variant every component is
//! lossy, mode 3 gets a deliberate extra beamsplitter before its CZ, and a
//! linear amplifier after it; the feedforward gains are chosen so the
//! rescaled signal coefficients are exactly `{0, +-1}` and the output stays
//! centred in the lattice domains.
//!
//! Loss bookkeeping is per line: every quadrature line entering a measured or
//! output expression carries its full path transmission `t` as one effective
//! channel, `t x + sqrt(1 - t^2) v` with a dedicated vacuum symbol. Lines are
//! attenuated independently even where a physical wire would share a
//! beamsplitter, which keeps every vacuum term a single symbol and makes the
//! feedforward variances come out as
//!
//! ```text
//!   V1 = 2 D2 + 2 (1/(eta eta_g) - 1)   + (1/(eta eta_g))  (1/eta_m - 1)
//!   V2 = 3 D2 + 3 (1/(eta eta_g^2) - 1) + (1/(eta eta_g^2))(1/eta_m - 1).
//! ```

use serde::{Deserialize, Serialize};

use crate::domains::DomainPartition;
use crate::engine::{BinOutcome, Engine, OperatorExpr};
use crate::ladder::{classify_logical, ErrorLadder, LogicalErrorReport};
use crate::{CoreError, Result};

/// Component transmissions. `eta` is state preparation, `eta_g` gate loss,
/// `eta_m` detector efficiency, `eta_d` displacement loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub eta: f64,
    pub eta_g: f64,
    pub eta_m: f64,
    pub eta_d: f64,
}

impl LossConfig {
    pub fn ideal() -> Self {
        LossConfig { eta: 1.0, eta_g: 1.0, eta_m: 1.0, eta_d: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("eta_g", self.eta_g), ("eta_m", self.eta_m), ("eta_d", self.eta_d)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(CoreError::ParameterOutOfRange(format!("{name} = {v}, expected (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }
}

/// Feedforward and amplifier gains used by a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub g1: f64,
    pub g2: f64,
    pub g: f64,
}

/// Everything one circuit round produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitReport {
    /// Output quadrature expressions, feedforward applied, error shifts included.
    pub q_out: OperatorExpr,
    pub p_out: OperatorExpr,
    /// Output expressions before the feedforward displacements (used by the
    /// Monte Carlo sampler, which rounds real measurement values instead).
    pub q_pre_feedforward: OperatorExpr,
    pub p_pre_feedforward: OperatorExpr,
    /// Measured momentum expressions of modes 1 and 2.
    pub measured_p1: OperatorExpr,
    pub measured_p2: OperatorExpr,
    /// Rescaled feedforward noise variances.
    pub v1: f64,
    pub v2: f64,
    pub gains: Gains,
    /// Ladder registry; error-shift symbol ids index into it. Single rounds
    /// carry two ladders, iterated chains accumulate.
    pub ladders: Vec<ErrorLadder>,
    pub logical: LogicalErrorReport,
    /// Gaussian noise variances of the output quadratures.
    pub v_q_out: f64,
    pub v_p_out: f64,
    pub delta2_input: f64,
    pub delta2_resource: f64,
    pub cfg: LossConfig,
}

fn lattice() -> DomainPartition {
    DomainPartition::Lattice { period: (2.0 * std::f64::consts::PI).sqrt(), offset: 0.0 }
}

enum RoundInput {
    /// Fresh input mode with the given fluctuation variances.
    Fresh { v_q: f64, v_p: f64 },
    /// Output expressions of a previous round.
    Carried { q: OperatorExpr, p: OperatorExpr },
}

fn feedforward_term(bin: &BinOutcome) -> OperatorExpr {
    let mut e = bin.signal.clone();
    e.add_term(bin.err, 1.0);
    e
}

fn build_round(
    engine: &mut Engine,
    input: RoundInput,
    resource_stats: (f64, f64),
    delta2_input: f64,
    delta2_resource: f64,
    cfg: &LossConfig,
) -> Result<CircuitReport> {
    cfg.validate()?;
    if !(delta2_input > 0.0) || !(delta2_resource > 0.0) {
        return Err(CoreError::ParameterOutOfRange(format!(
            "squeezing variances ({delta2_input}, {delta2_resource}) must be positive"
        )));
    }
    let (q1, p1) = match input {
        RoundInput::Fresh { v_q, v_p } => {
            let m = engine.new_mode(v_q, v_p)?;
            let (q, p) = engine.mode_exprs(m)?;
            (q.clone(), p.clone())
        }
        RoundInput::Carried { q, p } => (q, p),
    };
    let m2 = engine.new_mode(resource_stats.0, resource_stats.1)?;
    let m3 = engine.new_mode(resource_stats.0, resource_stats.1)?;
    let (q2, p2) = {
        let (q, p) = engine.mode_exprs(m2)?;
        (q.clone(), p.clone())
    };
    let (q3, p3) = {
        let (q, p) = engine.mode_exprs(m3)?;
        (q.clone(), p.clone())
    };

    // Path transmissions. Mode 1 and mode 2 reach the first measurement
    // through preparation loss and one gate loss; everything reaching the
    // second measurement or the output has passed eta eta_g^2 (mode 3 via its
    // deliberate extra beamsplitter ahead of the CZ).
    let t_first = cfg.eta * cfg.eta_g;
    let t_second = cfg.eta * cfg.eta_g * cfg.eta_g;
    let gains = Gains {
        g1: -1.0 / (t_first * cfg.eta_m).sqrt(),
        g2: -1.0 / (t_second * cfg.eta_m).sqrt(),
        g: 1.0 / (t_second * cfg.eta_d).sqrt(),
    };
    let lat = lattice();

    // first momentum measurement: p1o = p1 + q2 after the 1-2 CZ
    let (_, a1p) = engine.attenuate_pair(&q1, &p1, t_first)?;
    let (a2q, _) = engine.attenuate_pair(&q2, &p2, t_first)?;
    let measured_p1 = engine.detector_attenuate_p(&a1p.plus(&a2q), cfg.eta_m)?;
    let bin1 = engine.bin_correct(&measured_p1, -gains.g1, &lat)?;

    // second momentum measurement: p2o = p2 + q1 + q3 after both CZs
    let (b1q, _) = engine.attenuate_pair(&q1, &p1, t_second)?;
    let (_, b2p) = engine.attenuate_pair(&q2, &p2, t_second)?;
    let (b3q, _) = engine.attenuate_pair(&q3, &p3, t_second)?;
    let measured_p2 = engine.detector_attenuate_p(&b2p.plus(&b1q).plus(&b3q), cfg.eta_m)?;
    let bin2 = engine.bin_correct(&measured_p2, -gains.g2, &lat)?;

    // mode 3 after its CZ: p3' = p3 + q2, then amplification and
    // displacement loss, then the two feedforward displacements
    let (c3q, c3p) = engine.attenuate_pair(&q3, &p3, t_second)?;
    let (c2q, _) = engine.attenuate_pair(&q2, &p2, t_second)?;
    let (amp_q, amp_p) = engine.amplify_pair(&c3q, &c3p.plus(&c2q), gains.g)?;
    let (q_pre, p_pre) = engine.attenuate_pair(&amp_q, &amp_p, cfg.eta_d)?;

    let p_out = p_pre.minus(&feedforward_term(&bin1));
    let q_out = q_pre.minus(&feedforward_term(&bin2));

    let logical = classify_logical(&q_out, &p_out, engine.ladders())?;
    Ok(CircuitReport {
        v_q_out: engine.variance_of(&q_out)?,
        v_p_out: engine.variance_of(&p_out)?,
        q_out,
        p_out,
        q_pre_feedforward: q_pre,
        p_pre_feedforward: p_pre,
        measured_p1,
        measured_p2,
        v1: bin1.noise_variance,
        v2: bin2.noise_variance,
        gains,
        ladders: engine.ladders().to_vec(),
        logical,
        delta2_input,
        delta2_resource,
        cfg: *cfg,
    })
}

/// Lossless circuit with distinct input and resource squeezing.
pub fn run_ideal(delta2_input: f64, delta2_resource: f64) -> Result<CircuitReport> {
    let mut engine = Engine::new();
    build_round(
        &mut engine,
        RoundInput::Fresh { v_q: delta2_input, v_p: delta2_input },
        (delta2_resource, delta2_resource),
        delta2_input,
        delta2_resource,
        &LossConfig::ideal(),
    )
}

/// Loss-tolerant circuit with loss on every component.
pub fn run_lossy(delta2: f64, cfg: &LossConfig) -> Result<CircuitReport> {
    let mut engine = Engine::new();
    build_round(
        &mut engine,
        RoundInput::Fresh { v_q: delta2, v_p: delta2 },
        (delta2, delta2),
        delta2,
        delta2,
        cfg,
    )
}

/// Circuit with explicit per-quadrature fluctuation bindings, e.g. taken from
/// measured domain statistics rather than the nominal squeezing.
pub fn run_with_mode_stats(
    input_stats: (f64, f64),
    resource_stats: (f64, f64),
    delta2: f64,
    cfg: &LossConfig,
) -> Result<CircuitReport> {
    let mut engine = Engine::new();
    build_round(
        &mut engine,
        RoundInput::Fresh { v_q: input_stats.0, v_p: input_stats.1 },
        resource_stats,
        delta2,
        delta2,
        cfg,
    )
}

/// Iterate the circuit: each round's output expressions become the next
/// round's input mode, with fresh resource states every round.
pub fn iterate(rounds: usize, delta2: f64, cfg: &LossConfig) -> Result<Vec<CircuitReport>> {
    if rounds == 0 {
        return Err(CoreError::ParameterOutOfRange("iteration needs at least one round".into()));
    }
    let mut engine = Engine::new();
    let mut reports = Vec::with_capacity(rounds);
    let mut carried: Option<(OperatorExpr, OperatorExpr)> = None;
    for _ in 0..rounds {
        let input = match carried.take() {
            None => RoundInput::Fresh { v_q: delta2, v_p: delta2 },
            Some((q, p)) => RoundInput::Carried { q, p },
        };
        let report = build_round(&mut engine, input, (delta2, delta2), delta2, delta2, cfg)?;
        carried = Some((report.q_out.clone(), report.p_out.clone()));
        reports.push(report);
    }
    Ok(reports)
}
