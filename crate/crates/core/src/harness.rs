//! Experiment batches: flexibility and penetration sweeps, minimum
//! flexibility search, and firm-versus-flexible comparisons.

use std::cmp::Ordering;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{
    congestion_report, solve_expansion, ExpansionError, ExpansionOptions, ExpansionResult, ShedMode,
};
use crate::flexload::{firm_equivalent, resolve_loads, FlexSpec, LoadError, LoadSet};
use crate::netcase::{scale_line_capacities, Network, NetworkError};

/// Everything needed to run one family of experiments.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: Network,
    /// Base load, `T x |N|`.
    pub base: Array2<f64>,
    pub flex: FlexSpec,
    pub options: ExpansionOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Firm,
    Flex,
}

/// Overrides applied to a scenario; `None` keeps the scenario's own value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub variant: Variant,
    pub growth_ratio: Option<f64>,
    pub line_factor: Option<f64>,
    pub window_h: Option<usize>,
    pub geo_portion: Option<f64>,
    /// Multiplier on the per-hour shift budget.
    pub budget_scale: Option<f64>,
}

impl Point {
    pub fn flex() -> Self {
        Point {
            variant: Variant::Flex,
            growth_ratio: None,
            line_factor: None,
            window_h: None,
            geo_portion: None,
            budget_scale: None,
        }
    }

    fn sort_key(&self, other: &Self) -> Ordering {
        fn opt(a: Option<f64>, b: Option<f64>) -> Ordering {
            match (a, b) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (a, b) => a.is_some().cmp(&b.is_some()),
            }
        }
        opt(self.growth_ratio, other.growth_ratio)
            .then(opt(self.line_factor, other.line_factor))
            .then(self.window_h.cmp(&other.window_h))
            .then(opt(self.geo_portion, other.geo_portion))
            .then(opt(self.budget_scale, other.budget_scale))
            .then(self.variant.cmp(&other.variant))
    }
}

/// Parameter values actually used for a point, after defaulting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub growth_ratio: Option<f64>,
    pub line_factor: f64,
    pub window_h: Option<usize>,
    pub geo_portion: Option<f64>,
    pub budget_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub point: Point,
    pub resolved: Resolved,
    pub status: String,
    pub total_cost: Option<f64>,
    pub investment_cost: Option<f64>,
    pub operating_cost: Option<f64>,
    pub delay_cost: Option<f64>,
    pub shift_cost: Option<f64>,
    pub shed_cost: Option<f64>,
    pub added_capacity_mw: Option<f64>,
    pub added_by_generator: Vec<f64>,
    pub total_shift_mw: Option<f64>,
    pub max_backlog_mw: Option<f64>,
    pub binding_line_hours: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error("INFEASIBLE_AT_MAX: even {knob} = {max} cannot meet the budget")]
    InfeasibleAtMax { knob: Knob, max: f64 },
}

/// Builds the network and loads of one point.
pub fn instantiate(scenario: &Scenario, point: &Point) -> Result<(Network, LoadSet, Resolved), HarnessError> {
    let line_factor = point.line_factor.unwrap_or(1.0);
    let network = if line_factor == 1.0 {
        scenario.network.clone()
    } else {
        scale_line_capacities(&scenario.network, line_factor)?
    };
    let mut spec = scenario.flex.clone();
    if let Some(g) = point.growth_ratio {
        let dc = spec
            .dc
            .as_mut()
            .ok_or_else(|| HarnessError::Scenario("growth ratio given but the flex spec has no dc block".into()))?;
        dc.growth_ratio = g;
    }
    if let Some(w) = point.window_h {
        if let Some(dc) = spec.dc.as_mut() {
            dc.window_h = w;
        }
        for c in &mut spec.deferrable {
            c.window_h = w;
        }
    }
    if let Some(p) = point.geo_portion {
        let geo = spec
            .geo
            .as_mut()
            .ok_or_else(|| HarnessError::Scenario("geo portion given but the flex spec has no geo block".into()))?;
        geo.portion = Some(p);
    }
    let mut loads = resolve_loads(&network, &scenario.base, &spec)?;
    let budget_scale = point.budget_scale.unwrap_or(1.0);
    if budget_scale != 1.0 {
        if !(budget_scale >= 0.0 && budget_scale.is_finite()) {
            return Err(HarnessError::Scenario(format!("budget scale must be non-negative, got {budget_scale}")));
        }
        if let Some(b) = loads.geo.budget.as_mut() {
            b.iter_mut().for_each(|v| *v *= budget_scale);
        }
    }
    if point.variant == Variant::Firm {
        loads = firm_equivalent(&loads);
    }
    let resolved = Resolved {
        growth_ratio: spec.dc.as_ref().map(|d| d.growth_ratio),
        line_factor,
        window_h: loads.deferrable.iter().map(|c| c.window).max(),
        geo_portion: spec.geo.as_ref().and_then(|g| g.portion),
        budget_scale,
    };
    Ok((network, loads, resolved))
}

fn record_from(
    point: Point,
    resolved: Resolved,
    outcome: Result<(ExpansionResult, Network), ExpansionError>,
) -> SweepRecord {
    let mut r = SweepRecord {
        point,
        resolved,
        status: String::new(),
        total_cost: None,
        investment_cost: None,
        operating_cost: None,
        delay_cost: None,
        shift_cost: None,
        shed_cost: None,
        added_capacity_mw: None,
        added_by_generator: Vec::new(),
        total_shift_mw: None,
        max_backlog_mw: None,
        binding_line_hours: None,
        error: None,
    };
    match outcome {
        Ok((res, network)) => {
            let c = congestion_report(&res, &network);
            r.status = if res.requires_shed { "optimal_with_shed" } else { "optimal" }.into();
            r.total_cost = Some(res.total_cost);
            r.investment_cost = Some(res.investment_cost);
            r.operating_cost = Some(res.operating_cost);
            r.delay_cost = Some(res.delay_cost);
            r.shift_cost = Some(res.shift_cost);
            r.shed_cost = Some(res.shed_cost);
            r.added_capacity_mw = Some(res.added_capacity.iter().sum());
            r.added_by_generator = res.added_capacity;
            r.total_shift_mw = Some(c.total_shift_mw);
            r.max_backlog_mw = Some(c.max_backlog);
            r.binding_line_hours = Some(c.binding_line_hours);
        }
        Err(e) => {
            r.status = match e {
                ExpansionError::Infeasible => "infeasible",
                ExpansionError::Unbounded => "unbounded",
                ExpansionError::IterationLimit => "iteration_limit",
                _ => "error",
            }
            .into();
            r.error = Some(e.to_string());
        }
    }
    r
}

/// Solves one point; failures are captured in the record.
pub fn evaluate_point(scenario: &Scenario, point: &Point) -> SweepRecord {
    match instantiate(scenario, point) {
        Ok((network, loads, resolved)) => {
            let outcome = solve_expansion(&network, &loads, &scenario.options).map(|r| (r, network));
            record_from(*point, resolved, outcome)
        }
        Err(e) => {
            let resolved = Resolved {
                growth_ratio: point.growth_ratio,
                line_factor: point.line_factor.unwrap_or(1.0),
                window_h: point.window_h,
                geo_portion: point.geo_portion,
                budget_scale: point.budget_scale.unwrap_or(1.0),
            };
            let mut r = record_from(*point, resolved, Err(ExpansionError::Options(String::new())));
            r.error = Some(e.to_string());
            r
        }
    }
}

/// Sorts records into the canonical table order.
pub fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(|a, b| a.point.sort_key(&b.point));
}

/// Evaluates `points` on up to `workers` threads, calling `on_done` after
/// each point. The output is sorted and independent of `workers`.
pub fn run_points(
    scenario: &Scenario,
    points: &[Point],
    workers: usize,
    on_done: &(dyn Fn(&SweepRecord) + Sync),
) -> Vec<SweepRecord> {
    let eval = |p: &Point| {
        let r = evaluate_point(scenario, p);
        on_done(&r);
        r
    };
    #[cfg(feature = "parallel")]
    let mut records: Vec<SweepRecord> = if workers > 1 {
        use rayon::prelude::*;
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| points.par_iter().map(eval).collect()),
            Err(e) => {
                log::warn!("could not start {workers} workers ({e}), running serially");
                points.iter().map(eval).collect()
            }
        }
    } else {
        points.iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut records: Vec<SweepRecord> = {
        let _ = workers;
        points.iter().map(eval).collect()
    };
    sort_records(&mut records);
    records
}

/// Axes of a flexibility sweep. An empty axis keeps the scenario's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlexGrid {
    pub windows: Vec<usize>,
    pub geo_portions: Vec<f64>,
    pub line_factors: Vec<f64>,
    pub budget_scales: Vec<f64>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

/// Cartesian product of the grid, flexible variant only.
pub fn flexibility_points(grid: &FlexGrid) -> Vec<Point> {
    let mut out = Vec::new();
    for lf in axis(&grid.line_factors) {
        for w in axis(&grid.windows) {
            for g in axis(&grid.geo_portions) {
                for s in axis(&grid.budget_scales) {
                    out.push(Point { line_factor: lf, window_h: w, geo_portion: g, budget_scale: s, ..Point::flex() });
                }
            }
        }
    }
    out
}

pub fn sweep_flexibility(scenario: &Scenario, grid: &FlexGrid, workers: usize) -> Vec<SweepRecord> {
    run_points(scenario, &flexibility_points(grid), workers, &|_| {})
}

/// Firm and flexible points for each growth ratio.
pub fn penetration_points(ratios: &[f64]) -> Vec<Point> {
    ratios
        .iter()
        .flat_map(|&g| {
            [Variant::Firm, Variant::Flex].map(|variant| Point { variant, growth_ratio: Some(g), ..Point::flex() })
        })
        .collect()
}

pub fn sweep_penetration(scenario: &Scenario, ratios: &[f64], workers: usize) -> Vec<SweepRecord> {
    run_points(scenario, &penetration_points(ratios), workers, &|_| {})
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |v| v.to_string())
}

/// Renders records as `sweep.csv`.
pub fn sweep_csv(records: &[SweepRecord], generator_ids: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "variant",
        "growth_ratio",
        "line_factor",
        "window_h",
        "geo_portion",
        "budget_scale",
        "status",
        "total_cost",
        "investment_cost",
        "operating_cost",
        "delay_cost",
        "shift_cost",
        "shed_cost",
        "added_capacity_mw",
        "total_shift_mw",
        "max_backlog_mw",
        "binding_line_hours",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(generator_ids.iter().map(|g| format!("added_mw_{g}")));
    header.push("error".into());
    w.write_record(&header).expect("write to memory");
    for r in records {
        let mut row = vec![
            match r.point.variant {
                Variant::Firm => "firm".to_string(),
                Variant::Flex => "flex".to_string(),
            },
            fmt_opt(&r.resolved.growth_ratio),
            r.resolved.line_factor.to_string(),
            fmt_opt(&r.resolved.window_h),
            fmt_opt(&r.resolved.geo_portion),
            r.resolved.budget_scale.to_string(),
            r.status.clone(),
            fmt_opt(&r.total_cost),
            fmt_opt(&r.investment_cost),
            fmt_opt(&r.operating_cost),
            fmt_opt(&r.delay_cost),
            fmt_opt(&r.shift_cost),
            fmt_opt(&r.shed_cost),
            fmt_opt(&r.added_capacity_mw),
            fmt_opt(&r.total_shift_mw),
            fmt_opt(&r.max_backlog_mw),
            fmt_opt(&r.binding_line_hours),
        ];
        for g in 0..generator_ids.len() {
            row.push(r.added_by_generator.get(g).map_or(String::new(), |v| v.to_string()));
        }
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
}

/// Smallest window whose cost is within 1% of the cost at the largest window.
pub fn plateau_window(costs: &[(usize, f64)]) -> Option<usize> {
    let &(_, reference) = costs.iter().max_by_key(|(w, _)| *w)?;
    costs.iter().filter(|(_, c)| *c - reference <= 0.01 * reference.abs()).map(|(w, _)| *w).min()
}

// ---------------------------------------------------------------------------
// Minimum-flexibility search

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    GeoPortion,
    Window,
}

impl std::fmt::Display for Knob {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Knob::GeoPortion => "geo_portion",
            Knob::Window => "window",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Cap on total investment cost, $.
    Investment(f64),
    /// Cap on total added capacity, MW.
    Capacity(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub knob: Knob,
    pub value: f64,
    pub tol: f64,
    /// Solve at `value` is feasible.
    pub feasible_at_value: bool,
    /// Solve one step below `value` is infeasible; `None` when `value` is 0.
    pub infeasible_below: Option<bool>,
    /// Every `(knob value, feasible)` pair evaluated, in order.
    pub evaluations: Vec<(f64, bool)>,
    pub total_cost: f64,
    pub investment_cost: f64,
}

/// Finds the least flexibility that keeps the problem feasible without
/// shedding under `budget`. Portions are bisected to `tol`; windows are
/// scanned exactly up to `max_window` (default: horizon - 1).
pub fn min_flexibility_search(
    scenario: &Scenario,
    budget: Budget,
    knob: Knob,
    tol: f64,
    max_window: Option<usize>,
) -> Result<SearchResult, HarnessError> {
    let mut sc = scenario.clone();
    sc.options.shed_mode = ShedMode::Forbidden;
    match budget {
        Budget::Investment(b) => sc.options.investment_cap = Some(b),
        Budget::Capacity(c) => sc.options.capacity_cap = Some(c),
    }
    let mut evaluations = Vec::new();
    let mut try_at = |v: f64| -> Result<Option<ExpansionResult>, HarnessError> {
        let point = match knob {
            Knob::GeoPortion => Point { geo_portion: Some(v), ..Point::flex() },
            Knob::Window => Point { window_h: Some(v as usize), ..Point::flex() },
        };
        let (network, loads, _) = instantiate(&sc, &point)?;
        let out = match solve_expansion(&network, &loads, &sc.options) {
            Ok(r) => Some(r),
            Err(ExpansionError::Infeasible) => None,
            Err(e) => return Err(e.into()),
        };
        evaluations.push((v, out.is_some()));
        Ok(out)
    };

    let (value, at_value, below) = match knob {
        Knob::GeoPortion => {
            if !(tol > 0.0) {
                return Err(HarnessError::Scenario(format!("search tolerance must be positive, got {tol}")));
            }
            let Some(at_max) = try_at(1.0)? else {
                return Err(HarnessError::InfeasibleAtMax { knob, max: 1.0 });
            };
            if let Some(r) = try_at(0.0)? {
                (0.0, r, None)
            } else {
                let (mut lo, mut hi, mut best) = (0.0, 1.0, at_max);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    match try_at(mid)? {
                        Some(r) => {
                            hi = mid;
                            best = r;
                        }
                        None => lo = mid,
                    }
                }
                let below = try_at((hi - tol).max(0.0))?.is_none();
                (hi, best, Some(below))
            }
        }
        Knob::Window => {
            let horizon = scenario.base.nrows();
            let max = max_window.unwrap_or(horizon.saturating_sub(1)).min(horizon.saturating_sub(1));
            if try_at(max as f64)?.is_none() {
                return Err(HarnessError::InfeasibleAtMax { knob, max: max as f64 });
            }
            let mut found = None;
            for w in 0..=max {
                if let Some(r) = try_at(w as f64)? {
                    found = Some((w, r));
                    break;
                }
            }
            let (w, r) = found.expect("feasible at the maximum");
            // The scan already showed w - 1 infeasible.
            (w as f64, r, (w > 0).then_some(true))
        }
    };
    Ok(SearchResult {
        knob,
        value,
        tol: if knob == Knob::Window { 1.0 } else { tol },
        feasible_at_value: true,
        infeasible_below: below,
        evaluations,
        total_cost: at_value.total_cost,
        investment_cost: at_value.investment_cost,
    })
}

// ---------------------------------------------------------------------------
// Firm versus flexible

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub total_cost: f64,
    pub investment_cost: f64,
    pub operating_cost: f64,
    pub added_capacity_mw: f64,
}

impl From<&ExpansionResult> for CostSummary {
    fn from(r: &ExpansionResult) -> Self {
        CostSummary {
            total_cost: r.total_cost,
            investment_cost: r.investment_cost,
            operating_cost: r.operating_cost,
            added_capacity_mw: r.added_capacity.iter().sum(),
        }
    }
}

/// Signed percentage changes going from firm to flexible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub firm: CostSummary,
    pub flex: CostSummary,
    pub total_pct: f64,
    pub investment_pct: f64,
    pub operating_pct: f64,
    pub added_capacity_pct: f64,
}

/// `100 * (new - old) / |old|`; zero when both vanish, signed infinity when
/// only `old` does.
pub fn pct_change(old: f64, new: f64) -> f64 {
    let scale = old.abs().max(new.abs());
    if (new - old).abs() <= 1e-9 * (1.0 + scale) {
        0.0
    } else if old == 0.0 {
        f64::INFINITY.copysign(new)
    } else {
        100.0 * (new - old) / old.abs()
    }
}

pub fn compare_firm_vs_flex(scenario: &Scenario, point: &Point) -> Result<DeltaReport, HarnessError> {
    let solve_variant = |variant| -> Result<ExpansionResult, HarnessError> {
        let (network, loads, _) = instantiate(scenario, &Point { variant, ..*point })?;
        Ok(solve_expansion(&network, &loads, &scenario.options)?)
    };
    let firm = CostSummary::from(&solve_variant(Variant::Firm)?);
    let flex = CostSummary::from(&solve_variant(Variant::Flex)?);
    Ok(DeltaReport {
        total_pct: pct_change(firm.total_cost, flex.total_cost),
        investment_pct: pct_change(firm.investment_cost, flex.investment_cost),
        operating_pct: pct_change(firm.operating_cost, flex.operating_cost),
        added_capacity_pct: pct_change(firm.added_capacity_mw, flex.added_capacity_mw),
        firm,
        flex,
    })
}
