//! Golden-file regression of the pretty-printed circuit expressions.
//!
//! The printer emits terms in canonical order (signals, fluctuations,
//! vacuum, measurement noise, error shifts; ids ascending), so any change in
//! engine bookkeeping shows up as a diff against these files.

use ntf_core::circuits::{run_ideal, run_lossy, LossConfig};

fn check(name: &str, got: &str) {
    let path = format!("{}/tests/golden/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing golden file {path}: {e}"));
    assert_eq!(got, want.trim_end(), "golden mismatch for {name}");
}

#[test]
fn ideal_circuit_expressions() {
    let r = run_ideal(0.1, 0.1).unwrap();
    check("ideal_q_out", &r.q_out.to_string());
    check("ideal_p_out", &r.p_out.to_string());
    check("ideal_measured_p1", &r.measured_p1.to_string());
    check("ideal_measured_p2", &r.measured_p2.to_string());
}

#[test]
fn lossy_circuit_expressions() {
    let cfg = LossConfig { eta: 0.95, eta_g: 0.99, eta_m: 0.98, eta_d: 0.98 };
    let r = run_lossy(0.05, &cfg).unwrap();
    check("lossy_q_out", &r.q_out.to_string());
    check("lossy_p_out", &r.p_out.to_string());
    check("lossy_measured_p1", &r.measured_p1.to_string());
}
