//! File format for instances: demand as an edge list, 0-based indices.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use super::distribution::ValueDistribution;
use super::instance::{Instance, MultiObjective, Units};
use super::reward::RewardKind;
use crate::error::{Diagnostic, DiagnosticCode, Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub dist: ValueDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: Units,
    #[serde(default = "default_objective")]
    pub objective: RewardKind,
    pub demand: Vec<DemandEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_time: Option<Vec<Vec<f64>>>,
    /// `null` entries mark disallowed redirections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect_cost: Option<Vec<Vec<Option<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching_edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_grid: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_objective: Option<MultiObjective>,
}

fn default_objective() -> RewardKind {
    RewardKind::Throughput
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn square_from(rows: &[Vec<f64>], n: usize, ptr: &str, out: &mut Vec<Diagnostic>) -> Option<Matrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        out.push(Diagnostic::new(ptr, DiagnosticCode::Dimension, format!("must be {n}x{n}")));
        return None;
    }
    Matrix::from_rows(rows.to_vec())
}

impl InstanceFile {
    /// Semantic checks that need file positions, then conversion and the
    /// full instance validation.
    pub fn into_instance(self) -> std::result::Result<Instance, Vec<Diagnostic>> {
        use DiagnosticCode::*;
        let n = self.n;
        let mut diags = Vec::new();
        if n == 0 {
            diags.push(Diagnostic::new("/n", Dimension, "at least one station is required"));
            return Err(diags);
        }
        let mut demand = Matrix::zeros(n, n);
        let mut dists: Matrix<Option<ValueDistribution>> = Matrix::filled(n, n, None);
        let mut seen = vec![false; n * n];
        for (k, e) in self.demand.iter().enumerate() {
            let base = format!("/demand/{k}");
            let mut ok = true;
            if e.from >= n {
                diags.push(Diagnostic::new(format!("{base}/from"), IndexOutOfRange, format!("{} outside 0..{n}", e.from)));
                ok = false;
            }
            if e.to >= n {
                diags.push(Diagnostic::new(format!("{base}/to"), IndexOutOfRange, format!("{} outside 0..{n}", e.to)));
                ok = false;
            }
            if !e.rate.is_finite() || e.rate < 0.0 {
                diags.push(Diagnostic::new(format!("{base}/rate"), NegativeRate, format!("rate {} must be finite and >= 0", e.rate)));
                ok = false;
            }
            if let Err(err) = e.dist.check() {
                diags.push(Diagnostic::new(format!("{base}/dist"), InvalidDistribution, err.to_string()));
                ok = false;
            }
            if !ok {
                continue;
            }
            if e.from == e.to && e.rate > 0.0 {
                diags.push(Diagnostic::new(base.clone(), SelfLoopDemand, format!("station {} has demand to itself", e.from)));
                continue;
            }
            let idx = e.from * n + e.to;
            if seen[idx] {
                diags.push(Diagnostic::new(base, DuplicateEdge, format!("({},{}) listed twice", e.from, e.to)));
                continue;
            }
            seen[idx] = true;
            if e.rate > 0.0 {
                demand[(e.from, e.to)] = e.rate;
                dists[(e.from, e.to)] = Some(e.dist);
            }
        }
        let mut inst = Instance::new(self.m, self.objective, demand, dists);
        if let Some(t) = &self.travel_time {
            inst.travel_time = square_from(t, n, "/travel_time", &mut diags);
        }
        if let Some(c) = &self.redirect_cost {
            let rows: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect()).collect();
            inst.redirect_cost = square_from(&rows, n, "/redirect_cost", &mut diags);
        }
        inst.matching_edges = self.matching_edges.map(|e| e.into_iter().map(|[a, b]| (a, b)).collect());
        inst.price_grid = self.price_grid;
        inst.multi_objective = self.multi_objective;
        if !diags.is_empty() {
            return Err(diags);
        }
        inst.validate().map(|_| inst)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let demand = inst
            .edges()
            .into_iter()
            .map(|(i, j)| DemandEntry {
                from: i,
                to: j,
                rate: inst.demand[(i, j)],
                dist: inst.value_dist[(i, j)].expect("distribution on demand support"),
            })
            .collect();
        InstanceFile {
            n: inst.n,
            m: inst.m,
            objective: inst.objective,
            demand,
            travel_time: inst.travel_time.as_ref().map(Matrix::to_rows),
            redirect_cost: inst
                .redirect_cost
                .as_ref()
                .map(|c| c.to_rows().into_iter().map(|r| r.into_iter().map(|v| v.is_finite().then_some(v)).collect()).collect()),
            matching_edges: inst.matching_edges.as_ref().map(|e| e.iter().map(|&(a, b)| [a, b]).collect()),
            price_grid: inst.price_grid.clone(),
            multi_objective: inst.multi_objective,
        }
    }
}

/// Parses and validates an instance from JSON text.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let ptr = pointer(e.path());
        Error::InvalidInstance(vec![Diagnostic::new(ptr, DiagnosticCode::Schema, e.inner().to_string())])
    })?;
    file.into_instance().map_err(Error::InvalidInstance)
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes")
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_instance(&text)
}

pub fn save_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    save_result(path, &InstanceFile::from_instance(inst))
}

/// Writes any serializable value as pretty JSON.
pub fn save_result<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}
