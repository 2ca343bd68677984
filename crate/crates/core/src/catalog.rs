//! Embedded catalog of strongly eutactic lattices in dimensions 2–7 and the
//! harness that re-runs the certification over it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gram::{GramMatrix, LatticeDescriptor};
use crate::modular::{fully_critical, FullyCriticalOptions, Verdict};

const CATALOG_TOML: &str = include_str!("../data/catalog.toml");

#[derive(Deserialize)]
struct RawCatalog {
    incomplete_dims: Vec<usize>,
    lattice: Vec<RawEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    name: String,
    gram: Vec<Vec<i64>>,
    dim_m: u32,
    #[serde(rename = "N")]
    n: u32,
    traditional_name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub descriptor: LatticeDescriptor,
    /// The list for this dimension is known to be incomplete.
    pub incomplete: bool,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        self.descriptor.name.as_deref().unwrap_or_default()
    }

    pub fn dim(&self) -> usize {
        self.descriptor.gram.dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn get(&self, name: &str) -> Result<&CatalogEntry> {
        self.entries.iter().find(|e| e.name() == name).ok_or_else(|| Error::UnknownLattice(name.to_string()))
    }

    pub fn of_dim(&self, n: usize) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter().filter(move |e| e.dim() == n)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(CatalogEntry::name).collect()
    }
}

/// Parses and validates the embedded data.
pub fn load_catalog() -> Result<Catalog> {
    parse_catalog(CATALOG_TOML)
}

fn parse_catalog(text: &str) -> Result<Catalog> {
    let raw: RawCatalog = toml::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
    let mut entries = Vec::with_capacity(raw.lattice.len());
    for e in raw.lattice {
        let gram = GramMatrix::from_i64_rows(&e.gram).map_err(|err| Error::Catalog(format!("{}: {err}", e.name)))?;
        let incomplete = raw.incomplete_dims.contains(&gram.dim());
        let descriptor = LatticeDescriptor {
            name: Some(e.name),
            gram,
            reference_dim_m: Some(e.dim_m),
            reference_n: Some(e.n),
            traditional_name: Some(e.traditional_name),
        };
        entries.push(CatalogEntry { descriptor, incomplete });
    }
    Ok(Catalog { entries })
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub name: String,
    pub dim: usize,
    pub traditional_name: Option<String>,
    pub level: Option<u64>,
    pub weight: Option<u64>,
    pub sturm_bound: Option<u64>,
    pub reference_n: Option<u32>,
    pub bound_used: Option<u64>,
    pub verdict: Option<Verdict>,
    /// Every catalog entry is expected to be fully critical.
    pub matches: bool,
    pub incomplete: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: Vec<TableRow>,
    pub mismatches: usize,
}

impl TableSummary {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<8} {:>3} {:>6} {:>6} {:>7} {:>5} {:>7}  {:<16} {}\n",
            "name", "n", "level", "weight", "sturm", "N", "bound", "verdict", "remarks"
        );
        let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        for r in &self.rows {
            let verdict = match (&r.verdict, &r.error) {
                (Some(Verdict::FullyCritical), _) => "fully-critical".to_string(),
                (Some(Verdict::FailureAt { norm }), _) => format!("FAILURE at {norm}"),
                (Some(Verdict::Inconclusive { certified_norm, .. }), _) => format!("inconclusive ≤{certified_norm}"),
                (None, Some(e)) => format!("error: {e}"),
                (None, None) => "-".into(),
            };
            let mut remark = r.traditional_name.clone().unwrap_or_default();
            if r.incomplete {
                remark.push_str(" [catalog incomplete]");
            }
            s.push_str(&format!(
                "{:<8} {:>3} {:>6} {:>6} {:>7} {:>5} {:>7}  {:<16} {}\n",
                r.name,
                r.dim,
                opt(r.level),
                opt(r.weight),
                opt(r.sturm_bound),
                opt(r.reference_n.map(u64::from)),
                opt(r.bound_used),
                verdict,
                remark
            ));
        }
        s.push_str(&format!("{} entries, {} mismatches\n", self.rows.len(), self.mismatches));
        s
    }
}

/// Certifies every catalog entry of the given dimensions. Failures of single
/// entries are recorded in their row and do not stop the run.
pub fn reproduce_tables(catalog: &Catalog, dims: &[usize], opts: &FullyCriticalOptions) -> TableSummary {
    let chosen: Vec<&CatalogEntry> = catalog.entries.iter().filter(|e| dims.contains(&e.dim())).collect();
    let exec = opts.exec;
    let inner = FullyCriticalOptions { exec: Exec::Sequential, ..opts.clone() };
    let rows = exec.map(&chosen, |e| {
        let d = &e.descriptor;
        let mut row = TableRow {
            name: e.name().to_string(),
            dim: e.dim(),
            traditional_name: d.traditional_name.clone(),
            level: None,
            weight: None,
            sturm_bound: None,
            reference_n: d.reference_n,
            bound_used: None,
            verdict: None,
            matches: false,
            incomplete: e.incomplete,
            error: None,
        };
        match fully_critical(d, &inner) {
            Ok(r) => {
                row.level = Some(r.level);
                row.weight = Some(r.weight);
                row.sturm_bound = Some(r.sturm_bound);
                row.bound_used = Some(r.bound_b);
                row.matches = r.verdict == Verdict::FullyCritical;
                row.verdict = Some(r.verdict);
            }
            Err(err) => row.error = Some(err.to_string()),
        }
        row
    });
    let mismatches = rows.iter().filter(|r| !r.matches).count();
    TableSummary { rows, mismatches }
}
