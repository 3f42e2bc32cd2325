//! Run configurations: a JSON document mirroring the subcommand flags,
//! schema-validated (unknown keys rejected) and stored alongside every
//! output set for provenance. Each output file embeds the config hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateName {
    Vacuum,
    Coherent,
    Squeezed,
    Cat,
    Gkp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureArg {
    Q,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Ideal,
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    Delta2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeModelArg {
    Gaussian,
    Exact,
}

/// State selection shared by several subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub state: StateName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(default)]
    pub rotated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossArgs {
    pub eta: f64,
    pub eta_g: f64,
    pub eta_m: f64,
    pub eta_d: f64,
}

impl Default for LossArgs {
    fn default() -> Self {
        LossArgs { eta: 1.0, eta_g: 1.0, eta_m: 1.0, eta_d: 1.0 }
    }
}

/// The full run configuration, one variant per subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RunConfig {
    StateStats {
        #[serde(flatten)]
        state: StateSpec,
        quadrature: QuadratureArg,
        /// `sign`, `lattice:PERIOD[:OFFSET]`, `single`, or `auto`.
        domains: String,
        out: OutFormat,
        points: usize,
    },
    Sweep {
        state: StateName,
        param: SweepParam,
        from: f64,
        to: f64,
        steps: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<u8>,
        #[serde(default)]
        rotated: bool,
        out: OutFormat,
    },
    Circuit {
        model: ModelArg,
        delta2: f64,
        #[serde(default)]
        loss: LossArgs,
        rounds: usize,
    },
    Mc {
        trials: u64,
        seed: u64,
        model: ModelArg,
        delta2: f64,
        #[serde(default)]
        loss: LossArgs,
        mu: u8,
        spike_model: SpikeModelArg,
        max_z: f64,
    },
    LossOracle {
        #[serde(flatten)]
        state: StateSpec,
        quadrature: QuadratureArg,
        eta: f64,
    },
}

impl RunConfig {
    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }
}
