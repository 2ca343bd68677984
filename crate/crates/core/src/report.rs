//! Serializable record of one command run.

use serde::{Deserialize, Serialize};

use crate::catalog::TableSummary;
use crate::design::DesignVerdict;
use crate::gram::GramFile;
use crate::height::HeightReport;
use crate::modular::{ConjectureProbe, FullyCriticalReport};
use crate::theta::QSeries;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub norm: String,
    pub cardinality: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub dim: usize,
    pub determinant: String,
    pub integral: bool,
    pub even: bool,
    pub level: Option<u64>,
    pub layers: Vec<LayerRow>,
    pub theta: QSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    pub residual: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "kebab-case")]
pub enum Outcome {
    Analysis(Analysis),
    Layers(Vec<LayerRow>),
    Designs(Vec<DesignVerdict>),
    FullyCritical(Box<FullyCriticalReport>),
    Height(HeightReport),
    Stationarity(Stationarity),
    Tables(TableSummary),
    Probe(ConjectureProbe),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub input: Option<GramFile>,
    pub outcome: Outcome,
    pub wall_time_secs: f64,
    /// Radius, bound or budget actually used, when meaningful.
    pub truncation: Option<String>,
    pub version: String,
}

impl RunReport {
    pub fn new(command: impl Into<String>, input: Option<GramFile>, outcome: Outcome, wall_time_secs: f64) -> Self {
        RunReport { command: command.into(), input, outcome, wall_time_secs, truncation: None, version: VERSION.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::{GramMatrix, LatticeDescriptor};
    use crate::height::height;
    use crate::modular::{fully_critical, FullyCriticalOptions};

    #[test]
    fn round_trips() {
        let d = LatticeDescriptor::named("a2", GramMatrix::from_i64_rows(&[vec![2, 1], vec![1, 2]]).unwrap());
        let fc = fully_critical(&d, &FullyCriticalOptions::default()).unwrap();
        let h = height(&d).unwrap();
        for outcome in [Outcome::FullyCritical(Box::new(fc)), Outcome::Height(h)] {
            let r = RunReport::new("x", Some(GramFile::from_descriptor(&d)), outcome, 0.25);
            assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
        }
    }
}
