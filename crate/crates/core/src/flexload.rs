//! Demand model: hourly base load, deferrable workload classes with backlog
//! and completion windows, and geographically shiftable demand.
//!
//! All matrices are hour-major `T x |N|` with columns in network bus order.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netcase::Network;

/// Tolerance, in MW, used when validating externally supplied trajectories.
pub const TRAJECTORY_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("profile CSV: {0}")]
    Csv(String),
    #[error("profile column \"{0}\" is not a bus of the network")]
    UnknownBus(String),
    #[error("profile has no column for bus \"{0}\"")]
    MissingBus(String),
    #[error("profile column \"{0}\" appears twice")]
    DuplicateColumn(String),
    #[error("negative load {value} at hour row {row}, bus \"{bus}\"")]
    NegativeValue { row: usize, bus: String, value: f64 },
    #[error("unparsable value \"{value}\" at hour row {row}, column {column}")]
    BadNumber { row: usize, column: usize, value: String },
    #[error("profile has no hours")]
    Empty,
    #[error("{what} has length {found}, expected {expected}")]
    Length { what: String, expected: usize, found: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Workload that may be served after it arrives, within `window` hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeferrableClass {
    pub id: String,
    pub bus: String,
    pub window: usize,
    /// MW arriving in each hour.
    pub arrivals: Vec<f64>,
    /// $/MWh charged on the backlog each hour.
    pub delay_penalty: f64,
}

/// Same-hour reallocation of demand between buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoShiftSpec {
    pub baseline: Array2<f64>,
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
    /// Per-hour L1 budget on the shift; `None` means no budget row.
    pub budget: Option<Vec<f64>>,
}

impl GeoShiftSpec {
    /// No shiftable demand at all.
    pub fn none(horizon: usize, buses: usize) -> Self {
        let z = Array2::zeros((horizon, buses));
        GeoShiftSpec { baseline: z.clone(), lower: z.clone(), upper: z, budget: None }
    }

    /// Bounds derived from a single flexible portion `rho`:
    /// upper = rho * (hourly max of the baseline over `geo_buses`), lower =
    /// -rho * baseline, budget = 2 * rho * hourly baseline total (the L1 norm
    /// of moving a fraction `rho` of the load). Buses outside `geo_buses`
    /// get zero bounds.
    pub fn from_portion(baseline: Array2<f64>, geo_buses: &[usize], rho: f64) -> Self {
        let (t_len, n_len) = baseline.dim();
        let mut lower = Array2::zeros((t_len, n_len));
        let mut upper = Array2::zeros((t_len, n_len));
        let mut budget = vec![0.0; t_len];
        for t in 0..t_len {
            let peak = geo_buses.iter().map(|&n| baseline[[t, n]]).fold(0.0, f64::max);
            for &n in geo_buses {
                upper[[t, n]] = rho * peak;
                lower[[t, n]] = -rho * baseline[[t, n]];
            }
            budget[t] = 2.0 * rho * baseline.row(t).sum();
        }
        GeoShiftSpec { baseline, lower, upper, budget: Some(budget) }
    }

    pub fn horizon(&self) -> usize {
        self.baseline.nrows()
    }

    /// Whether any shift is possible at all.
    pub fn is_firm(&self) -> bool {
        let no_room = self.lower.iter().all(|&v| v == 0.0) || self.upper.iter().all(|&v| v == 0.0);
        no_room || self.budget.as_ref().is_some_and(|b| b.iter().all(|&v| v == 0.0))
    }

    fn check(&self, horizon: usize, buses: usize) -> Result<(), LoadError> {
        for (what, m) in [("geo baseline", &self.baseline), ("geo lower", &self.lower), ("geo upper", &self.upper)] {
            if m.dim() != (horizon, buses) {
                return Err(LoadError::Invalid(format!(
                    "{what} is {}x{}, expected {horizon}x{buses}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if let Some(b) = &self.budget {
            if b.len() != horizon {
                return Err(LoadError::Length { what: "geo budget".into(), expected: horizon, found: b.len() });
            }
            if b.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(LoadError::Invalid("geo budget must be finite and non-negative".into()));
            }
        }
        for t in 0..horizon {
            for n in 0..buses {
                let (base, lo, up) = (self.baseline[[t, n]], self.lower[[t, n]], self.upper[[t, n]]);
                if !(base >= 0.0 && lo <= 0.0 && up >= 0.0 && base.is_finite() && lo.is_finite() && up.is_finite()) {
                    return Err(LoadError::Invalid(format!(
                        "geo data at hour {t}, bus {n} must satisfy baseline >= 0, lower <= 0 <= upper"
                    )));
                }
                if base + lo < -TRAJECTORY_TOL {
                    return Err(LoadError::Invalid(format!(
                        "geo lower bound at hour {t}, bus {n} would drive demand negative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Complete demand description for one planning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSet {
    pub horizon: usize,
    pub base: Array2<f64>,
    pub deferrable: Vec<DeferrableClass>,
    pub geo: GeoShiftSpec,
    /// $/MWh on `|delta|`.
    pub shift_penalty: f64,
}

impl LoadSet {
    /// Only firm base load.
    pub fn firm(base: Array2<f64>) -> Self {
        let (t, n) = base.dim();
        LoadSet { horizon: t, base, deferrable: Vec::new(), geo: GeoShiftSpec::none(t, n), shift_penalty: 0.0 }
    }

    pub fn num_buses(&self) -> usize {
        self.base.ncols()
    }

    /// Checks dimensions and value ranges against `network`.
    pub fn validate(&self, network: &Network) -> Result<(), LoadError> {
        let (t_len, n_len) = (self.horizon, network.num_buses());
        if t_len == 0 {
            return Err(LoadError::Empty);
        }
        if self.base.dim() != (t_len, n_len) {
            return Err(LoadError::Invalid(format!(
                "base load is {}x{}, expected {t_len}x{n_len}",
                self.base.nrows(),
                self.base.ncols()
            )));
        }
        if self.base.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(LoadError::Invalid("base load must be finite and non-negative".into()));
        }
        if !(self.shift_penalty >= 0.0 && self.shift_penalty.is_finite()) {
            return Err(LoadError::Invalid("shift penalty must be non-negative".into()));
        }
        for c in &self.deferrable {
            if network.bus_position(&c.bus).is_none() {
                return Err(LoadError::UnknownBus(c.bus.clone()));
            }
            if c.arrivals.len() != t_len {
                return Err(LoadError::Length {
                    what: format!("arrivals of class \"{}\"", c.id),
                    expected: t_len,
                    found: c.arrivals.len(),
                });
            }
            if c.arrivals.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(LoadError::Invalid(format!("class \"{}\" has negative arrivals", c.id)));
            }
            if c.window >= t_len {
                return Err(LoadError::Invalid(format!(
                    "class \"{}\" window {} must be shorter than the horizon {t_len}",
                    c.id, c.window
                )));
            }
            if !(c.delay_penalty >= 0.0 && c.delay_penalty.is_finite()) {
                return Err(LoadError::Invalid(format!("class \"{}\" has a negative delay penalty", c.id)));
            }
        }
        self.geo.check(t_len, n_len)
    }

    /// Demand at its nominal hour and bus: base + arrivals + geo baseline.
    pub fn nominal_demand(&self, network: &Network) -> Array2<f64> {
        let mut d = &self.base + &self.geo.baseline;
        for c in &self.deferrable {
            let n = network.bus_position(&c.bus).expect("validated class bus");
            for (t, &u) in c.arrivals.iter().enumerate() {
                d[[t, n]] += u;
            }
        }
        d
    }

    /// Sets every class window to `min(window, horizon - 1)`.
    pub fn with_window(mut self, window: usize) -> Self {
        let cap = self.horizon.saturating_sub(1);
        for c in &mut self.deferrable {
            c.window = window.min(cap);
        }
        self
    }
}

/// Same demand with every flexible MW pinned to its nominal hour and bus.
pub fn firm_equivalent(loads: &LoadSet) -> LoadSet {
    let mut out = loads.clone();
    for c in &mut out.deferrable {
        c.window = 0;
    }
    let (t, n) = out.geo.baseline.dim();
    out.geo.lower = Array2::zeros((t, n));
    out.geo.upper = Array2::zeros((t, n));
    out.geo.budget = Some(vec![0.0; t]);
    out
}

/// Reads a `hour,<bus>,<bus>,...` profile into a `T x |N|` matrix.
pub fn load_profiles(csv_text: &str, network: &Network) -> Result<Array2<f64>, LoadError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|e| LoadError::Csv(e.to_string()))?.clone();
    if headers.get(0) != Some("hour") {
        return Err(LoadError::Csv("first column must be \"hour\"".into()));
    }
    let mut column_bus = Vec::new();
    let mut seen = vec![false; network.num_buses()];
    for name in headers.iter().skip(1) {
        let n = network.bus_position(name).ok_or_else(|| LoadError::UnknownBus(name.to_string()))?;
        if seen[n] {
            return Err(LoadError::DuplicateColumn(name.to_string()));
        }
        seen[n] = true;
        column_bus.push(n);
    }
    if let Some(n) = seen.iter().position(|s| !s) {
        return Err(LoadError::MissingBus(network.buses[n].id.clone()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LoadError::Csv(e.to_string()))?;
        let mut values = vec![0.0; network.num_buses()];
        for (k, &n) in column_bus.iter().enumerate() {
            let raw = &record[k + 1];
            let v: f64 =
                raw.parse().map_err(|_| LoadError::BadNumber { row, column: k + 1, value: raw.to_string() })?;
            if !v.is_finite() {
                return Err(LoadError::BadNumber { row, column: k + 1, value: raw.to_string() });
            }
            if v < 0.0 {
                return Err(LoadError::NegativeValue { row, bus: network.buses[n].id.clone(), value: v });
            }
            values[n] = v;
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(LoadError::Empty);
    }
    let t_len = rows.len();
    Ok(Array2::from_shape_vec((t_len, network.num_buses()), rows.concat()).expect("rectangular rows"))
}

/// Writes a profile matrix as CSV with bus ids in the header.
pub fn write_profiles(matrix: &Array2<f64>, bus_ids: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["hour".to_string()];
    header.extend(bus_ids.iter().cloned());
    w.write_record(&header).expect("write to memory");
    for (t, row) in matrix.rows().into_iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
}

/// Data-center load split into its three components.
#[derive(Debug, Clone, PartialEq)]
pub struct DcLoad {
    /// Base load plus the firm part of the DC load.
    pub firm: Array2<f64>,
    /// Deferrable arrivals per bus.
    pub deferrable: Array2<f64>,
    /// Geographically shiftable baseline per bus.
    pub geo_baseline: Array2<f64>,
}

/// Adds `growth_ratio * base` of DC demand at `dc_buses` and partitions it
/// into (deferrable, geo, firm) by `split = (deferrable, geo)`.
pub fn superimpose_dc_load(
    base: &Array2<f64>,
    dc_buses: &[usize],
    growth_ratio: f64,
    split: (f64, f64),
) -> Result<DcLoad, LoadError> {
    let (f_def, f_geo) = split;
    if !(growth_ratio >= 0.0 && growth_ratio.is_finite()) {
        return Err(LoadError::Invalid(format!("growth ratio must be non-negative, got {growth_ratio}")));
    }
    let in_unit = |f: f64| (0.0..=1.0).contains(&f);
    if !(in_unit(f_def) && in_unit(f_geo) && f_def + f_geo <= 1.0 + 1e-12) {
        return Err(LoadError::Invalid(format!("invalid DC split ({f_def}, {f_geo})")));
    }
    let (t_len, n_len) = base.dim();
    if let Some(&n) = dc_buses.iter().find(|&&n| n >= n_len) {
        return Err(LoadError::Invalid(format!("DC bus index {n} out of range")));
    }
    let mut out = DcLoad {
        firm: base.clone(),
        deferrable: Array2::zeros((t_len, n_len)),
        geo_baseline: Array2::zeros((t_len, n_len)),
    };
    let f_firm = (1.0 - f_def - f_geo).max(0.0);
    for &n in dc_buses {
        for t in 0..t_len {
            let dc = growth_ratio * base[[t, n]];
            out.deferrable[[t, n]] += f_def * dc;
            out.geo_baseline[[t, n]] += f_geo * dc;
            out.firm[[t, n]] += f_firm * dc;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BacklogViolation {
    /// `s_t < 0`.
    NegativeService { hour: usize, served: f64 },
    /// `s_t > b_{t-1} + u_t`, i.e. the implied backlog goes negative.
    ServiceExceedsAvailable { hour: usize, served: f64, available: f64 },
    /// Backlog left at the end of the horizon.
    FinalBacklog { backlog: f64 },
    /// Cumulative service behind the arrivals due by this hour.
    DeadlineMissed { hour: usize, served_to_date: f64, due: f64 },
}

/// Checks a service trajectory against the backlog and deadline rules.
/// Hours are 0-based in the returned violations.
pub fn check_backlog_trajectory(class: &DeferrableClass, served: &[f64]) -> Result<Vec<BacklogViolation>, LoadError> {
    let u = &class.arrivals;
    if served.len() != u.len() {
        return Err(LoadError::Length { what: "served".into(), expected: u.len(), found: served.len() });
    }
    let tol = TRAJECTORY_TOL;
    let mut out = Vec::new();
    let mut backlog = 0.0;
    let mut cum_s = 0.0;
    let mut cum_u = vec![0.0; u.len() + 1];
    for t in 0..u.len() {
        cum_u[t + 1] = cum_u[t] + u[t];
    }
    for (t, &s) in served.iter().enumerate() {
        if s < -tol {
            out.push(BacklogViolation::NegativeService { hour: t, served: s });
        }
        let available = backlog + u[t];
        if s > available + tol {
            out.push(BacklogViolation::ServiceExceedsAvailable { hour: t, served: s, available });
        }
        backlog = available - s;
        cum_s += s;
        // Arrivals up to hour t - W must be served by hour t.
        if t >= class.window {
            let due = cum_u[t + 1 - class.window];
            if cum_s < due - tol {
                out.push(BacklogViolation::DeadlineMissed { hour: t, served_to_date: cum_s, due });
            }
        }
    }
    if backlog.abs() > tol {
        out.push(BacklogViolation::FinalBacklog { backlog });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeoViolation {
    NonZeroSum { hour: usize, sum: f64 },
    BelowLower { hour: usize, bus: usize, value: f64, lower: f64 },
    AboveUpper { hour: usize, bus: usize, value: f64, upper: f64 },
    OverBudget { hour: usize, l1: f64, budget: f64 },
}

/// Checks a shift matrix against conservation, bounds and the L1 budget.
pub fn check_geo_shift(spec: &GeoShiftSpec, delta: &Array2<f64>) -> Result<Vec<GeoViolation>, LoadError> {
    if delta.dim() != spec.lower.dim() {
        return Err(LoadError::Invalid(format!(
            "shift matrix is {}x{}, expected {}x{}",
            delta.nrows(),
            delta.ncols(),
            spec.lower.nrows(),
            spec.lower.ncols()
        )));
    }
    let tol = TRAJECTORY_TOL;
    let mut out = Vec::new();
    for (t, row) in delta.rows().into_iter().enumerate() {
        let sum: f64 = row.sum();
        if sum.abs() > tol {
            out.push(GeoViolation::NonZeroSum { hour: t, sum });
        }
        for (n, &v) in row.iter().enumerate() {
            if v < spec.lower[[t, n]] - tol {
                out.push(GeoViolation::BelowLower { hour: t, bus: n, value: v, lower: spec.lower[[t, n]] });
            }
            if v > spec.upper[[t, n]] + tol {
                out.push(GeoViolation::AboveUpper { hour: t, bus: n, value: v, upper: spec.upper[[t, n]] });
            }
        }
        if let Some(b) = &spec.budget {
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            if l1 > b[t] + tol {
                out.push(GeoViolation::OverBudget { hour: t, l1, budget: b[t] });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Flex-spec documents

/// Either one value for every class or a per-class map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerClass {
    Uniform(f64),
    ByClass(BTreeMap<String, f64>),
}

impl Default for PerClass {
    fn default() -> Self {
        PerClass::Uniform(0.0)
    }
}

impl PerClass {
    pub fn get(&self, class: &str) -> Result<f64, LoadError> {
        match self {
            PerClass::Uniform(v) => Ok(*v),
            PerClass::ByClass(m) => m
                .get(class)
                .copied()
                .ok_or_else(|| LoadError::Invalid(format!("no delay penalty for class \"{class}\""))),
        }
    }
}

/// Data-center load added on top of the base profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcBlock {
    pub buses: Vec<String>,
    pub growth_ratio: f64,
    #[serde(default)]
    pub deferrable_fraction: f64,
    #[serde(default)]
    pub geo_fraction: f64,
    /// Window of the deferrable classes created for the DC buses.
    #[serde(default)]
    pub window_h: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: String,
    pub bus: String,
    pub window_h: usize,
    pub arrivals_mw: Vec<f64>,
}

/// Geographic flexibility. Matrices are hour-major with one column per entry
/// of `buses`; buses not listed cannot send or receive shifted load.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoBlock {
    pub buses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portion: Option<f64>,
    /// Explicit shiftable baseline; added to any DC geo component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_mw: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_mw: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_mw: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_mw: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Penalties {
    #[serde(default)]
    pub delay_per_mwh: PerClass,
    #[serde(default)]
    pub shift_per_mwh: f64,
}

/// Flexibility description, resolved against a network and base profile by
/// [`resolve_loads`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlexSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc: Option<DcBlock>,
    #[serde(default)]
    pub deferrable: Vec<ClassEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoBlock>,
    #[serde(default)]
    pub penalties: Penalties,
}

impl FlexSpec {
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        serde_json::from_str(text).map_err(|e| LoadError::Invalid(format!("flex spec: {e}")))
    }
}

fn bus_indices(network: &Network, ids: &[String]) -> Result<Vec<usize>, LoadError> {
    ids.iter().map(|id| network.bus_position(id).ok_or_else(|| LoadError::UnknownBus(id.clone()))).collect()
}

fn scatter(what: &str, rows: &[Vec<f64>], cols: &[usize], shape: (usize, usize)) -> Result<Array2<f64>, LoadError> {
    if rows.len() != shape.0 {
        return Err(LoadError::Length { what: what.into(), expected: shape.0, found: rows.len() });
    }
    let mut m = Array2::zeros(shape);
    for (t, row) in rows.iter().enumerate() {
        if row.len() != cols.len() {
            return Err(LoadError::Length { what: format!("{what} row {t}"), expected: cols.len(), found: row.len() });
        }
        for (&n, &v) in cols.iter().zip(row) {
            m[[t, n]] = v;
        }
    }
    Ok(m)
}

/// Builds the [`LoadSet`] for `network` from a base profile and a flex spec.
pub fn resolve_loads(network: &Network, base: &Array2<f64>, spec: &FlexSpec) -> Result<LoadSet, LoadError> {
    let (t_len, n_len) = base.dim();
    if n_len != network.num_buses() {
        return Err(LoadError::Length {
            what: "base profile columns".into(),
            expected: network.num_buses(),
            found: n_len,
        });
    }
    let mut loads = LoadSet::firm(base.clone());
    let mut geo_baseline = Array2::zeros((t_len, n_len));
    let mut classes: Vec<ClassEntry> = Vec::new();

    if let Some(dc) = &spec.dc {
        let dc_buses = bus_indices(network, &dc.buses)?;
        let split = superimpose_dc_load(base, &dc_buses, dc.growth_ratio, (dc.deferrable_fraction, dc.geo_fraction))?;
        loads.base = split.firm;
        geo_baseline = split.geo_baseline;
        if dc.deferrable_fraction > 0.0 {
            for (&n, id) in dc_buses.iter().zip(&dc.buses) {
                classes.push(ClassEntry {
                    id: format!("dc_{id}"),
                    bus: id.clone(),
                    window_h: dc.window_h,
                    arrivals_mw: split.deferrable.column(n).to_vec(),
                });
            }
        }
    }
    classes.extend(spec.deferrable.iter().cloned());

    let mut seen = HashMap::new();
    for c in classes {
        if seen.insert(c.id.clone(), ()).is_some() {
            return Err(LoadError::Invalid(format!("duplicate class id \"{}\"", c.id)));
        }
        let delay_penalty = spec.penalties.delay_per_mwh.get(&c.id)?;
        loads.deferrable.push(DeferrableClass {
            id: c.id,
            bus: c.bus,
            window: c.window_h,
            arrivals: c.arrivals_mw,
            delay_penalty,
        });
    }

    loads.shift_penalty = spec.penalties.shift_per_mwh;
    if let Some(geo) = &spec.geo {
        let cols = bus_indices(network, &geo.buses)?;
        if let Some(rows) = &geo.baseline_mw {
            geo_baseline = geo_baseline + scatter("geo baseline", rows, &cols, (t_len, n_len))?;
        }
        let mut g = match geo.portion {
            Some(rho) => {
                if !(0.0..=1.0).contains(&rho) {
                    return Err(LoadError::Invalid(format!("geo portion must lie in [0, 1], got {rho}")));
                }
                GeoShiftSpec::from_portion(geo_baseline.clone(), &cols, rho)
            }
            None => GeoShiftSpec {
                baseline: geo_baseline.clone(),
                lower: Array2::zeros((t_len, n_len)),
                upper: Array2::zeros((t_len, n_len)),
                budget: None,
            },
        };
        if let Some(rows) = &geo.lower_mw {
            g.lower = scatter("geo lower", rows, &cols, (t_len, n_len))?;
        }
        if let Some(rows) = &geo.upper_mw {
            g.upper = scatter("geo upper", rows, &cols, (t_len, n_len))?;
        }
        if let Some(b) = &geo.budget_mw {
            g.budget = Some(b.clone());
        }
        loads.geo = g;
    } else {
        loads.geo.baseline = geo_baseline;
    }
    loads.validate(network)?;
    Ok(loads)
}

// ---------------------------------------------------------------------------
// Synthetic profiles

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    Flat,
    Sinusoidal,
    /// Narrow evening peak on a flat night-time floor.
    Evening,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    pub horizon: usize,
    pub shape: ProfileShape,
    #[serde(default = "default_peak_hour")]
    pub peak_hour: usize,
    /// Minimum over maximum of the daily cycle.
    #[serde(default = "default_trough")]
    pub trough_ratio: f64,
    /// Relative multiplicative noise amplitude.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_peak_hour() -> usize {
    18
}

fn default_trough() -> f64 {
    0.6
}

/// Daily cycle value in `[trough_ratio, 1]` for hour `h`.
pub fn diurnal_factor(shape: ProfileShape, h: usize, peak_hour: usize, trough_ratio: f64) -> f64 {
    let phase = 2.0 * PI * ((h % 24) as f64 - peak_hour as f64) / 24.0;
    let bump = match shape {
        ProfileShape::Flat => return 1.0,
        ProfileShape::Sinusoidal => 0.5 * (1.0 + phase.cos()),
        ProfileShape::Evening => (0.5 * (1.0 + phase.cos())).powi(6),
    };
    trough_ratio + (1.0 - trough_ratio) * bump
}

/// Seeded synthetic `T x |peaks|` profile.
pub fn generate_profiles(params: &ProfileParams, peaks: &[f64]) -> Result<Array2<f64>, LoadError> {
    if params.horizon == 0 {
        return Err(LoadError::Empty);
    }
    if params.peak_hour >= 24 {
        return Err(LoadError::Invalid(format!("peak hour must be in 0..24, got {}", params.peak_hour)));
    }
    if !(0.0..=1.0).contains(&params.trough_ratio) {
        return Err(LoadError::Invalid(format!("trough ratio must be in [0, 1], got {}", params.trough_ratio)));
    }
    if !(0.0..1.0).contains(&params.noise) {
        return Err(LoadError::Invalid(format!("noise must be in [0, 1), got {}", params.noise)));
    }
    if peaks.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(LoadError::Invalid("peaks must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut m = Array2::zeros((params.horizon, peaks.len()));
    for t in 0..params.horizon {
        let f = diurnal_factor(params.shape, t, params.peak_hour, params.trough_ratio);
        for (n, &peak) in peaks.iter().enumerate() {
            let eps = if params.noise > 0.0 { rng.gen_range(-params.noise..=params.noise) } else { 0.0 };
            m[[t, n]] = peak * f * (1.0 + eps);
        }
    }
    Ok(m)
}
