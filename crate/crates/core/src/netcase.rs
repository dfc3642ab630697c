//! Network data: buses, lines and generators, the JSON case document,
//! structural validation, and the incidence / DC flow operators.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub index: usize,
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Per-unit on the network's `base_mva`.
    pub susceptance: f64,
    /// Thermal limit in MW.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub existing_capacity: f64,
    pub max_addition: f64,
    /// $/MWh.
    pub marginal_cost: f64,
    /// $/MW over the planning horizon.
    pub investment_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

/// Machine-readable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    NoBuses,
    NoLines,
    NoGenerators,
    BadBaseMva,
    BadIndex,
    DuplicateId,
    DanglingBus,
    SelfLoop,
    NonPositiveSusceptance,
    NonPositiveCapacity,
    InvalidGeneratorData,
    NoReference,
    MultipleReference,
    Disconnected,
    /// Warning only: no bus was marked as reference, the first bus was used.
    ReferenceDefaulted,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        let name = s.as_ref().and_then(|v| v.as_str()).unwrap_or("UNKNOWN");
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic { code, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid case: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

impl CaseError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            CaseError::Invalid(d) => d,
            _ => &[],
        }
    }
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("line {line} has non-positive susceptance {value}")]
    NonPositiveSusceptance { line: String, value: f64 },
    #[error("capacity scale factor must be positive and finite, got {0}")]
    BadScaleFactor(f64),
}

/// The on-disk case document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDocument {
    pub base_mva: f64,
    pub buses: Vec<BusEntry>,
    pub lines: Vec<LineEntry>,
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub id: String,
    pub from: String,
    pub to: String,
    pub susceptance_pu: f64,
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub id: String,
    pub bus: String,
    pub existing_mw: f64,
    pub max_addition_mw: f64,
    pub marginal_cost_per_mwh: f64,
    pub investment_cost_per_mw: f64,
}

/// A validated network together with non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct ParsedCase {
    pub network: Network,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and validates a JSON case document.
pub fn parse_case(text: &str) -> Result<ParsedCase, CaseError> {
    let doc: CaseDocument = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            serde_json::error::Category::Data => CaseError::Schema { line, column, message },
            _ => CaseError::Syntax { line, column, message },
        }
    })?;
    build_network(doc)
}

/// Assigns indices, defaults the reference bus and validates.
pub fn build_network(doc: CaseDocument) -> Result<ParsedCase, CaseError> {
    let mut warnings = Vec::new();
    let mut buses: Vec<Bus> = doc
        .buses
        .into_iter()
        .enumerate()
        .map(|(index, b)| Bus { id: b.id, index, is_reference: b.reference })
        .collect();
    if !buses.is_empty() && !buses.iter().any(|b| b.is_reference) {
        buses[0].is_reference = true;
        warnings.push(Diagnostic::new(
            DiagnosticCode::ReferenceDefaulted,
            format!("no reference bus given, using first bus \"{}\"", buses[0].id),
        ));
    }
    let network = Network {
        base_mva: doc.base_mva,
        buses,
        lines: doc
            .lines
            .into_iter()
            .map(|l| Line {
                id: l.id,
                from_bus: l.from,
                to_bus: l.to,
                susceptance: l.susceptance_pu,
                capacity: l.capacity_mw,
            })
            .collect(),
        generators: doc
            .generators
            .into_iter()
            .map(|g| Generator {
                id: g.id,
                bus: g.bus,
                existing_capacity: g.existing_mw,
                max_addition: g.max_addition_mw,
                marginal_cost: g.marginal_cost_per_mwh,
                investment_cost: g.investment_cost_per_mw,
            })
            .collect(),
    };
    let errors = validate(&network);
    if errors.is_empty() {
        Ok(ParsedCase { network, warnings })
    } else {
        Err(CaseError::Invalid(errors))
    }
}

impl Network {
    pub fn to_document(&self) -> CaseDocument {
        CaseDocument {
            base_mva: self.base_mva,
            buses: self.buses.iter().map(|b| BusEntry { id: b.id.clone(), reference: b.is_reference }).collect(),
            lines: self
                .lines
                .iter()
                .map(|l| LineEntry {
                    id: l.id.clone(),
                    from: l.from_bus.clone(),
                    to: l.to_bus.clone(),
                    susceptance_pu: l.susceptance,
                    capacity_mw: l.capacity,
                })
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorEntry {
                    id: g.id.clone(),
                    bus: g.bus.clone(),
                    existing_mw: g.existing_capacity,
                    max_addition_mw: g.max_addition,
                    marginal_cost_per_mwh: g.marginal_cost,
                    investment_cost_per_mw: g.investment_cost,
                })
                .collect(),
        }
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn bus_position(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Index of the reference bus (first one flagged, or 0).
    pub fn reference_bus(&self) -> usize {
        self.buses.iter().position(|b| b.is_reference).unwrap_or(0)
    }

    /// Resolved integer topology. Panics on dangling references; call on
    /// validated networks only.
    pub fn topology(&self) -> Topology {
        let map: HashMap<&str, usize> = self.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let idx = |id: &str| *map.get(id).unwrap_or_else(|| panic!("unknown bus \"{id}\""));
        Topology {
            line_ends: self.lines.iter().map(|l| (idx(&l.from_bus), idx(&l.to_bus))).collect(),
            generator_bus: self.generators.iter().map(|g| idx(&g.bus)).collect(),
            reference: self.reference_bus(),
        }
    }
}

/// Bus indices referenced by lines and generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub line_ends: Vec<(usize, usize)>,
    pub generator_bus: Vec<usize>,
    pub reference: usize,
}

/// Serializes a network back to a case document.
pub fn render(network: &Network) -> String {
    serde_json::to_string_pretty(&network.to_document()).expect("case document serializes")
}

fn non_negative_finite(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Checks every structural invariant. Empty output means the network is valid.
pub fn validate(network: &Network) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut out = Vec::new();
    if !(network.base_mva.is_finite() && network.base_mva > 0.0) {
        out.push(Diagnostic::new(BadBaseMva, format!("base_mva must be positive, got {}", network.base_mva)));
    }
    if network.buses.is_empty() {
        out.push(Diagnostic::new(NoBuses, "case has no buses"));
    }
    if network.lines.is_empty() {
        out.push(Diagnostic::new(NoLines, "case has no lines"));
    }
    if network.generators.is_empty() {
        out.push(Diagnostic::new(NoGenerators, "case has no generators"));
    }

    for (i, b) in network.buses.iter().enumerate() {
        if b.index != i {
            out.push(Diagnostic::new(BadIndex, format!("bus \"{}\" at position {i} has index {}", b.id, b.index)));
        }
    }
    let check_unique = |kind: &str, ids: Vec<&str>, out: &mut Vec<Diagnostic>| {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                out.push(Diagnostic::new(DuplicateId, format!("duplicate {kind} id \"{id}\"")));
            }
        }
    };
    check_unique("bus", network.buses.iter().map(|b| b.id.as_str()).collect(), &mut out);
    check_unique("line", network.lines.iter().map(|l| l.id.as_str()).collect(), &mut out);
    check_unique("generator", network.generators.iter().map(|g| g.id.as_str()).collect(), &mut out);

    let refs = network.buses.iter().filter(|b| b.is_reference).count();
    if refs > 1 {
        out.push(Diagnostic::new(MultipleReference, format!("{refs} buses are marked as reference")));
    } else if refs == 0 && !network.buses.is_empty() {
        out.push(Diagnostic::new(NoReference, "no bus is marked as reference"));
    }

    let pos: HashMap<&str, usize> = network.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..network.buses.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for l in &network.lines {
        let mut ends = Vec::new();
        for end in [&l.from_bus, &l.to_bus] {
            match pos.get(end.as_str()) {
                Some(&i) => ends.push(i),
                None => out
                    .push(Diagnostic::new(DanglingBus, format!("line \"{}\" references unknown bus \"{end}\"", l.id))),
            }
        }
        if l.from_bus == l.to_bus {
            out.push(Diagnostic::new(SelfLoop, format!("line \"{}\" connects bus \"{}\" to itself", l.id, l.from_bus)));
        }
        if !(l.susceptance.is_finite() && l.susceptance > 0.0) {
            out.push(Diagnostic::new(
                NonPositiveSusceptance,
                format!("line \"{}\" has susceptance {}", l.id, l.susceptance),
            ));
        }
        if !(l.capacity.is_finite() && l.capacity > 0.0) {
            out.push(Diagnostic::new(NonPositiveCapacity, format!("line \"{}\" has capacity {}", l.id, l.capacity)));
        }
        if let [a, b] = ends[..] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    if !network.buses.is_empty() {
        let root = find(&mut parent, 0);
        for i in 1..network.buses.len() {
            if find(&mut parent, i) != root {
                out.push(Diagnostic::new(
                    Disconnected,
                    format!("bus \"{}\" is not connected to bus \"{}\"", network.buses[i].id, network.buses[0].id),
                ));
            }
        }
    }

    for g in &network.generators {
        if !pos.contains_key(g.bus.as_str()) {
            out.push(Diagnostic::new(
                DanglingBus,
                format!("generator \"{}\" references unknown bus \"{}\"", g.id, g.bus),
            ));
        }
        let fields = [
            ("existing capacity", g.existing_capacity),
            ("max addition", g.max_addition),
            ("marginal cost", g.marginal_cost),
            ("investment cost", g.investment_cost),
        ];
        for (name, v) in fields {
            if !non_negative_finite(v) {
                out.push(Diagnostic::new(InvalidGeneratorData, format!("generator \"{}\" has {name} {v}", g.id)));
            }
        }
    }
    out
}

/// Bus-by-line incidence: +1 at the from bus, -1 at the to bus.
pub fn incidence_matrix(network: &Network) -> SparseMatrix {
    let topo = network.topology();
    let triplets = topo.line_ends.iter().enumerate().flat_map(|(l, &(a, b))| [(a, l, 1.0), (b, l, -1.0)]).collect();
    SparseMatrix::from_triplets(network.num_buses(), network.num_lines(), triplets)
}

/// Line-by-bus operator `diag(b) K^T` in per-unit: `f = M theta`.
pub fn dc_flow_operator(network: &Network) -> Result<SparseMatrix, NetworkError> {
    if let Some(l) = network.lines.iter().find(|l| !(l.susceptance > 0.0)) {
        return Err(NetworkError::NonPositiveSusceptance { line: l.id.clone(), value: l.susceptance });
    }
    let topo = network.topology();
    let triplets = topo
        .line_ends
        .iter()
        .zip(&network.lines)
        .enumerate()
        .flat_map(|(l, (&(a, b), line))| [(l, a, line.susceptance), (l, b, -line.susceptance)])
        .collect();
    Ok(SparseMatrix::from_triplets(network.num_lines(), network.num_buses(), triplets))
}

/// Copy of `network` with every line capacity multiplied by `factor`.
pub fn scale_line_capacities(network: &Network, factor: f64) -> Result<Network, NetworkError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(NetworkError::BadScaleFactor(factor));
    }
    let mut out = network.clone();
    for l in &mut out.lines {
        l.capacity *= factor;
    }
    Ok(out)
}
