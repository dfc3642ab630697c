//! Capacity expansion with flexible data-center demand, assembled as one
//! deterministic LP over all hours and solved with the built-in simplex.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flexload::{LoadError, LoadSet};
use crate::lpcore::{
    check_kkt, solve, ConId, KktReport, LinearModel, ModelError, Relation, SolveOptions, SolveStatus, VarId,
};
use crate::netcase::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShedMode {
    /// Shedding is always available at the penalty price.
    Allowed,
    /// Solve with shedding, then re-solve with shedding removed wherever the
    /// first solve did not use it.
    TwoPhase,
    /// No shedding; the LP may be infeasible.
    Forbidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionOptions {
    /// $/MWh of unserved demand.
    pub shed_penalty: f64,
    pub shed_mode: ShedMode,
    /// Shed below this many MW counts as zero.
    pub shed_tol: f64,
    /// Upper bound on total investment cost, $.
    pub investment_cap: Option<f64>,
    /// Upper bound on total added capacity, MW.
    pub capacity_cap: Option<f64>,
    /// Attach a KKT report of the final solve to the result.
    pub verify: bool,
    pub solver: SolveOptions,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            shed_penalty: 10_000.0,
            shed_mode: ShedMode::TwoPhase,
            shed_tol: 1e-6,
            investment_cap: None,
            capacity_cap: None,
            verify: false,
            solver: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("invalid load data: {0}")]
    Load(#[from] LoadError),
    #[error("{0}")]
    Options(String),
    #[error("model construction failed: {0}")]
    Model(#[from] ModelError),
    #[error("the expansion problem is infeasible")]
    Infeasible,
    #[error("the expansion problem is unbounded")]
    Unbounded,
    #[error("solver hit its iteration limit")]
    IterationLimit,
}

/// Variable and row handles of an assembled model, hour-major.
#[derive(Debug, Clone)]
pub struct IndexMap {
    pub capacity: Vec<VarId>,
    pub dispatch: Vec<Vec<VarId>>,
    pub angle: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    pub served: Vec<Vec<VarId>>,
    pub backlog: Vec<Vec<VarId>>,
    pub shift_up: Vec<Vec<Option<VarId>>>,
    pub shift_down: Vec<Vec<Option<VarId>>>,
    pub shed: Vec<Vec<VarId>>,
    pub balance: Vec<Vec<ConId>>,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub model: LinearModel,
    pub index: IndexMap,
}

fn check_inputs(network: &Network, loads: &LoadSet, options: &ExpansionOptions) -> Result<(), ExpansionError> {
    loads.validate(network)?;
    let max_mc = network.generators.iter().map(|g| g.marginal_cost).fold(0.0, f64::max);
    if !(options.shed_penalty.is_finite() && options.shed_penalty > 10.0 * max_mc) {
        return Err(ExpansionError::Options(format!(
            "shed penalty {} must exceed ten times the largest marginal cost ({max_mc})",
            options.shed_penalty
        )));
    }
    for (name, cap) in [("investment cap", options.investment_cap), ("capacity cap", options.capacity_cap)] {
        if let Some(c) = cap {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(ExpansionError::Options(format!("{name} must be non-negative, got {c}")));
            }
        }
    }
    Ok(())
}

/// Builds the deterministic-equivalent LP.
///
/// Flow limits, the reference angle, the end-of-horizon backlog and the
/// completion windows are variable bounds; the remaining constraints are
/// rows (flow definition, nodal balance, generator capacity, backlog
/// dynamics, shift conservation and budget, optional investment caps).
pub fn assemble(network: &Network, loads: &LoadSet, options: &ExpansionOptions) -> Result<Assembled, ExpansionError> {
    check_inputs(network, loads, options)?;
    let topo = network.topology();
    let t_len = loads.horizon;
    let n_len = network.num_buses();
    let shed_ub = if options.shed_mode == ShedMode::Forbidden { 0.0 } else { f64::INFINITY };
    let inf = f64::INFINITY;
    let mut m = LinearModel::new();
    let mut costs: Vec<(VarId, f64)> = Vec::new();

    let capacity: Vec<VarId> = network
        .generators
        .iter()
        .map(|g| {
            let v = m.add_variable(format!("x[{}]", g.id), 0.0, g.max_addition)?;
            costs.push((v, g.investment_cost));
            Ok(v)
        })
        .collect::<Result<_, ModelError>>()?;

    let class_bus: Vec<usize> =
        loads.deferrable.iter().map(|c| network.bus_position(&c.bus).expect("validated class bus")).collect();

    let mut index = IndexMap {
        capacity,
        dispatch: Vec::with_capacity(t_len),
        angle: Vec::with_capacity(t_len),
        flow: Vec::with_capacity(t_len),
        served: Vec::with_capacity(t_len),
        backlog: Vec::with_capacity(t_len),
        shift_up: Vec::with_capacity(t_len),
        shift_down: Vec::with_capacity(t_len),
        shed: Vec::with_capacity(t_len),
        balance: Vec::with_capacity(t_len),
    };

    for t in 0..t_len {
        let mut p = Vec::new();
        for g in &network.generators {
            let v = m.add_variable(format!("p[{t},{}]", g.id), 0.0, inf)?;
            costs.push((v, g.marginal_cost));
            p.push(v);
        }
        let mut theta = Vec::new();
        for (n, b) in network.buses.iter().enumerate() {
            let (lo, up) = if n == topo.reference { (0.0, 0.0) } else { (-inf, inf) };
            theta.push(m.add_variable(format!("theta[{t},{}]", b.id), lo, up)?);
        }
        let mut f = Vec::new();
        for l in &network.lines {
            f.push(m.add_variable(format!("f[{t},{}]", l.id), -l.capacity, l.capacity)?);
        }
        let mut s = Vec::new();
        let mut bl = Vec::new();
        for c in &loads.deferrable {
            s.push(m.add_variable(format!("s[{t},{}]", c.id), 0.0, inf)?);
            // Cumulative service must cover arrivals older than the window,
            // which caps the backlog at the arrivals inside the window.
            let ub = if t + 1 == t_len {
                0.0
            } else if t >= c.window {
                c.arrivals[t + 1 - c.window..=t].iter().sum::<f64>().max(0.0)
            } else {
                inf
            };
            let v = m.add_variable(format!("b[{t},{}]", c.id), 0.0, ub)?;
            costs.push((v, c.delay_penalty));
            bl.push(v);
        }
        let mut up = Vec::new();
        let mut down = Vec::new();
        for (n, b) in network.buses.iter().enumerate() {
            let hi = loads.geo.upper[[t, n]];
            let lo = loads.geo.lower[[t, n]];
            let vu = if hi > 0.0 { Some(m.add_variable(format!("dp[{t},{}]", b.id), 0.0, hi)?) } else { None };
            let vd = if lo < 0.0 { Some(m.add_variable(format!("dm[{t},{}]", b.id), 0.0, -lo)?) } else { None };
            for v in vu.iter().chain(vd.iter()) {
                costs.push((*v, loads.shift_penalty));
            }
            up.push(vu);
            down.push(vd);
        }
        let mut shed = Vec::new();
        for b in &network.buses {
            let v = m.add_variable(format!("shed[{t},{}]", b.id), 0.0, shed_ub)?;
            costs.push((v, options.shed_penalty));
            shed.push(v);
        }

        // f = base_mva * b * (theta_from - theta_to)
        for (l, line) in network.lines.iter().enumerate() {
            let (a, z) = topo.line_ends[l];
            let k = network.base_mva * line.susceptance;
            m.add_constraint(
                format!("flow[{t},{}]", line.id),
                [(f[l], 1.0), (theta[a], -k), (theta[z], k)],
                Relation::Eq,
                0.0,
            )?;
        }

        // Generation - net outflow - served deferrable - shift + shed = base + geo baseline
        let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n_len];
        for (g, &n) in topo.generator_bus.iter().enumerate() {
            rows[n].push((p[g], 1.0));
        }
        for (l, &(a, z)) in topo.line_ends.iter().enumerate() {
            rows[a].push((f[l], -1.0));
            rows[z].push((f[l], 1.0));
        }
        for (d, &n) in class_bus.iter().enumerate() {
            rows[n].push((s[d], -1.0));
        }
        for n in 0..n_len {
            if let Some(v) = up[n] {
                rows[n].push((v, -1.0));
            }
            if let Some(v) = down[n] {
                rows[n].push((v, 1.0));
            }
            rows[n].push((shed[n], 1.0));
        }
        let mut balance = Vec::with_capacity(n_len);
        for (n, row) in rows.into_iter().enumerate() {
            let rhs = loads.base[[t, n]] + loads.geo.baseline[[t, n]];
            balance.push(m.add_constraint(format!("bal[{t},{}]", network.buses[n].id), row, Relation::Eq, rhs)?);
        }

        for (g, gen) in network.generators.iter().enumerate() {
            m.add_constraint(
                format!("cap[{t},{}]", gen.id),
                [(p[g], 1.0), (index.capacity[g], -1.0)],
                Relation::Le,
                gen.existing_capacity,
            )?;
        }

        for (d, c) in loads.deferrable.iter().enumerate() {
            let mut row = vec![(bl[d], 1.0), (s[d], 1.0)];
            if t > 0 {
                row.push((index.backlog[t - 1][d], -1.0));
            }
            m.add_constraint(format!("blog[{t},{}]", c.id), row, Relation::Eq, c.arrivals[t])?;
        }

        let up_vars: Vec<VarId> = up.iter().flatten().copied().collect();
        let down_vars: Vec<VarId> = down.iter().flatten().copied().collect();
        if !up_vars.is_empty() || !down_vars.is_empty() {
            let conserve = up_vars.iter().map(|&v| (v, 1.0)).chain(down_vars.iter().map(|&v| (v, -1.0)));
            m.add_constraint(format!("geo_sum[{t}]"), conserve, Relation::Eq, 0.0)?;
            if let Some(budget) = &loads.geo.budget {
                let l1 = up_vars.iter().chain(down_vars.iter()).map(|&v| (v, 1.0));
                m.add_constraint(format!("geo_l1[{t}]"), l1, Relation::Le, budget[t])?;
            }
        }

        index.dispatch.push(p);
        index.angle.push(theta);
        index.flow.push(f);
        index.served.push(s);
        index.backlog.push(bl);
        index.shift_up.push(up);
        index.shift_down.push(down);
        index.shed.push(shed);
        index.balance.push(balance);
    }

    if let Some(cap) = options.investment_cap {
        let row = index.capacity.iter().zip(&network.generators).map(|(&v, g)| (v, g.investment_cost));
        m.add_constraint("investment_cap", row, Relation::Le, cap)?;
    }
    if let Some(cap) = options.capacity_cap {
        m.add_constraint("capacity_cap", index.capacity.iter().map(|&v| (v, 1.0)), Relation::Le, cap)?;
    }
    m.set_objective(costs)?;
    Ok(Assembled { model: m, index })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub status: SolveStatus,
    /// Shedding was still needed after the two-phase clean-up.
    pub requires_shed: bool,
    pub added_capacity: Vec<f64>,
    pub total_cost: f64,
    pub investment_cost: f64,
    pub operating_cost: f64,
    pub delay_cost: f64,
    pub shift_cost: f64,
    pub shed_cost: f64,
    pub dispatch: Array2<f64>,
    pub angles: Array2<f64>,
    /// MW.
    pub flows: Array2<f64>,
    pub served: Array2<f64>,
    pub backlog: Array2<f64>,
    /// Net shift `delta` per bus.
    pub shifts: Array2<f64>,
    /// `delta+ + delta-` per bus; equals `|delta|` unless both sides are used.
    pub shift_volume: Array2<f64>,
    pub shed: Array2<f64>,
    pub iterations: usize,
    pub solves: usize,
    pub dual_objective: f64,
    #[serde(skip)]
    pub kkt: Option<KktReport>,
}

fn extract(network: &Network, loads: &LoadSet, a: &Assembled, x: &[f64], pen: f64) -> ExpansionResult {
    let t_len = loads.horizon;
    let idx = &a.index;
    let grab = |blocks: &Vec<Vec<VarId>>, width: usize| {
        Array2::from_shape_fn((t_len, width), |(t, k)| x[blocks[t][k].index()])
    };
    let n_len = network.num_buses();
    let opt = |v: Option<VarId>| v.map_or(0.0, |v| x[v.index()]);
    let shifts = Array2::from_shape_fn((t_len, n_len), |(t, n)| opt(idx.shift_up[t][n]) - opt(idx.shift_down[t][n]));
    let shift_volume =
        Array2::from_shape_fn((t_len, n_len), |(t, n)| opt(idx.shift_up[t][n]) + opt(idx.shift_down[t][n]));
    let added: Vec<f64> = idx.capacity.iter().map(|v| x[v.index()]).collect();
    let dispatch = grab(&idx.dispatch, network.num_generators());
    let backlog = grab(&idx.backlog, loads.deferrable.len());
    let shed = grab(&idx.shed, n_len);

    let investment_cost: f64 = network.generators.iter().zip(&added).map(|(g, x)| g.investment_cost * x).sum();
    let operating_cost: f64 = dispatch
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&network.generators).map(|(p, g)| p * g.marginal_cost).sum::<f64>())
        .sum();
    let delay_cost: f64 = backlog
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&loads.deferrable).map(|(b, c)| b * c.delay_penalty).sum::<f64>())
        .sum();
    let shift_cost = loads.shift_penalty * shift_volume.sum();
    let shed_cost = pen * shed.sum();
    // `+ 0.0` turns empty-sum negative zeros into plain zeros.
    ExpansionResult {
        status: SolveStatus::Optimal,
        requires_shed: false,
        added_capacity: added,
        total_cost: a.model.evaluate_objective(x) + 0.0,
        investment_cost: investment_cost + 0.0,
        operating_cost: operating_cost + 0.0,
        delay_cost: delay_cost + 0.0,
        shift_cost: shift_cost + 0.0,
        shed_cost: shed_cost + 0.0,
        dispatch,
        angles: grab(&idx.angle, n_len),
        flows: grab(&idx.flow, network.num_lines()),
        served: grab(&idx.served, loads.deferrable.len()),
        backlog,
        shifts,
        shift_volume,
        shed,
        iterations: 0,
        solves: 0,
        dual_objective: 0.0,
        kkt: None,
    }
}

fn status_error(status: SolveStatus) -> ExpansionError {
    match status {
        SolveStatus::Infeasible => ExpansionError::Infeasible,
        SolveStatus::Unbounded => ExpansionError::Unbounded,
        _ => ExpansionError::IterationLimit,
    }
}

fn run(
    network: &Network,
    loads: &LoadSet,
    options: &ExpansionOptions,
    fixed: Option<&[f64]>,
) -> Result<ExpansionResult, ExpansionError> {
    let mut a = assemble(network, loads, options)?;
    if let Some(x) = fixed {
        for (&v, &val) in a.index.capacity.iter().zip(x) {
            a.model.set_bounds(v, val, val)?;
        }
    }
    let mut sol = solve(&a.model, &options.solver);
    let mut iterations = sol.iterations;
    let mut solves = 1;
    if sol.status != SolveStatus::Optimal {
        return Err(status_error(sol.status));
    }
    let tol = options.shed_tol;
    if options.shed_mode == ShedMode::TwoPhase {
        let used = a.index.shed.iter().flatten().any(|v| sol.value(*v) > tol);
        if used {
            for &v in a.index.shed.iter().flatten() {
                if sol.value(v) <= tol {
                    a.model.set_bounds(v, 0.0, 0.0)?;
                }
            }
            sol = solve(&a.model, &options.solver);
            iterations += sol.iterations;
            solves += 1;
            if sol.status != SolveStatus::Optimal {
                return Err(status_error(sol.status));
            }
        }
    }
    let mut r = extract(network, loads, &a, &sol.primal, options.shed_penalty);
    r.requires_shed = r.shed.iter().any(|&v| v > tol);
    r.iterations = iterations;
    r.solves = solves;
    r.dual_objective = sol.dual_objective;
    if options.verify {
        r.kkt = Some(check_kkt(&a.model, &sol, 1e-6));
    }
    Ok(r)
}

/// Solves the full two-stage problem.
pub fn solve_expansion(
    network: &Network,
    loads: &LoadSet,
    options: &ExpansionOptions,
) -> Result<ExpansionResult, ExpansionError> {
    run(network, loads, options, None)
}

/// Solves the operating problem for fixed capacity additions.
pub fn evaluate_second_stage(
    network: &Network,
    loads: &LoadSet,
    x_fixed: &[f64],
    options: &ExpansionOptions,
) -> Result<ExpansionResult, ExpansionError> {
    if x_fixed.len() != network.num_generators() {
        return Err(ExpansionError::Options(format!(
            "fixed capacity has {} entries, network has {} generators",
            x_fixed.len(),
            network.num_generators()
        )));
    }
    let mut clamped = Vec::with_capacity(x_fixed.len());
    for (g, &x) in network.generators.iter().zip(x_fixed) {
        let slack = 1e-9 * (1.0 + g.max_addition);
        if !(x >= -slack && x <= g.max_addition + slack) {
            return Err(ExpansionError::Options(format!(
                "fixed capacity {x} for generator \"{}\" outside [0, {}]",
                g.id, g.max_addition
            )));
        }
        clamped.push(x.clamp(0.0, g.max_addition));
    }
    run(network, loads, options, Some(&clamped))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CongestionReport {
    pub binding_line_hours: usize,
    pub binding_lines: Vec<String>,
    pub peak_generators: Vec<String>,
    pub max_backlog: f64,
    pub total_shift_mw: f64,
}

/// Relative tolerance for calling a line or generator binding.
pub const BINDING_TOL: f64 = 1e-4;

pub fn congestion_report(result: &ExpansionResult, network: &Network) -> CongestionReport {
    let mut binding_line_hours = 0;
    let mut binding = vec![false; network.num_lines()];
    for row in result.flows.rows() {
        for (l, (&f, line)) in row.iter().zip(&network.lines).enumerate() {
            if f.abs() >= line.capacity * (1.0 - BINDING_TOL) {
                binding_line_hours += 1;
                binding[l] = true;
            }
        }
    }
    let mut peak = vec![false; network.num_generators()];
    for row in result.dispatch.rows() {
        for (g, (&p, gen)) in row.iter().zip(&network.generators).enumerate() {
            let cap = gen.existing_capacity + result.added_capacity[g];
            if cap > 0.0 && p >= cap * (1.0 - BINDING_TOL) {
                peak[g] = true;
            }
        }
    }
    let pick = |flags: &[bool], ids: Vec<&String>| -> Vec<String> {
        flags.iter().zip(ids).filter(|(f, _)| **f).map(|(_, id)| id.clone()).collect()
    };
    CongestionReport {
        binding_line_hours,
        binding_lines: pick(&binding, network.lines.iter().map(|l| &l.id).collect()),
        peak_generators: pick(&peak, network.generators.iter().map(|g| &g.id).collect()),
        max_backlog: result.backlog.iter().copied().fold(0.0, f64::max),
        total_shift_mw: result.shifts.iter().map(|v| v.abs()).sum(),
    }
}

/// Largest nodal balance residual, MW, recomputed from the trajectories.
pub fn balance_residual(result: &ExpansionResult, network: &Network, loads: &LoadSet) -> f64 {
    let topo = network.topology();
    let mut worst: f64 = 0.0;
    for t in 0..loads.horizon {
        let mut net = vec![0.0; network.num_buses()];
        for (g, &n) in topo.generator_bus.iter().enumerate() {
            net[n] += result.dispatch[[t, g]];
        }
        for (l, &(a, z)) in topo.line_ends.iter().enumerate() {
            net[a] -= result.flows[[t, l]];
            net[z] += result.flows[[t, l]];
        }
        for (d, c) in loads.deferrable.iter().enumerate() {
            net[network.bus_position(&c.bus).expect("class bus")] -= result.served[[t, d]];
        }
        for (n, v) in net.iter_mut().enumerate() {
            *v += result.shed[[t, n]] - loads.base[[t, n]] - loads.geo.baseline[[t, n]] - result.shifts[[t, n]];
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Largest violation of the DC flow equation, MW.
pub fn flow_residual(result: &ExpansionResult, network: &Network) -> f64 {
    let topo = network.topology();
    let mut worst: f64 = 0.0;
    for t in 0..result.flows.nrows() {
        for (l, &(a, z)) in topo.line_ends.iter().enumerate() {
            let k = network.base_mva * network.lines[l].susceptance;
            let f = k * (result.angles[[t, a]] - result.angles[[t, z]]);
            worst = worst.max((f - result.flows[[t, l]]).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultSummary {
    pub status: String,
    pub requires_shed: bool,
    pub total_cost: f64,
    pub investment_cost: f64,
    pub operating_cost: f64,
    pub delay_cost: f64,
    pub shift_cost: f64,
    pub shed_cost: f64,
    pub added_capacity: Vec<AddedCapacity>,
    pub congestion: CongestionSummary,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AddedCapacity {
    pub generator: String,
    pub mw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CongestionSummary {
    pub binding_line_hours: usize,
    pub binding_lines: Vec<String>,
    pub peak_generators: Vec<String>,
    pub max_backlog_mw: f64,
    pub total_shift_mw: f64,
}

fn table(ids: &[String], m: &Array2<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["hour".to_string()];
    header.extend(ids.iter().cloned());
    w.write_record(&header).expect("write to memory");
    for (t, row) in m.rows().into_iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&rec).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv")
}

impl ExpansionResult {
    /// Hour-major trajectory tables as `(file name, csv text)`.
    pub fn trajectory_csvs(&self, network: &Network, loads: &LoadSet) -> Vec<(&'static str, String)> {
        let buses: Vec<String> = network.buses.iter().map(|b| b.id.clone()).collect();
        let gens: Vec<String> = network.generators.iter().map(|g| g.id.clone()).collect();
        let lines: Vec<String> = network.lines.iter().map(|l| l.id.clone()).collect();
        let classes: Vec<String> = loads.deferrable.iter().map(|c| c.id.clone()).collect();
        vec![
            ("dispatch.csv", table(&gens, &self.dispatch)),
            ("flows.csv", table(&lines, &self.flows)),
            ("shifts.csv", table(&buses, &self.shifts)),
            ("backlog.csv", table(&classes, &self.backlog)),
            ("served.csv", table(&classes, &self.served)),
            ("shed.csv", table(&buses, &self.shed)),
        ]
    }

    pub fn summary(&self, network: &Network, loads: &LoadSet) -> ResultSummary {
        let c = congestion_report(self, network);
        ResultSummary {
            status: self.status.to_string(),
            requires_shed: self.requires_shed,
            total_cost: self.total_cost,
            investment_cost: self.investment_cost,
            operating_cost: self.operating_cost,
            delay_cost: self.delay_cost,
            shift_cost: self.shift_cost,
            shed_cost: self.shed_cost,
            added_capacity: network
                .generators
                .iter()
                .zip(&self.added_capacity)
                .map(|(g, &mw)| AddedCapacity { generator: g.id.clone(), mw })
                .collect(),
            congestion: CongestionSummary {
                binding_line_hours: c.binding_line_hours,
                binding_lines: c.binding_lines,
                peak_generators: c.peak_generators,
                max_backlog_mw: c.max_backlog,
                total_shift_mw: c.total_shift_mw,
            },
            files: self.trajectory_csvs(network, loads).into_iter().map(|(n, _)| n.to_string()).collect(),
        }
    }

    /// Plain-text cost table.
    pub fn cost_table(&self) -> String {
        let mut out = String::new();
        for (name, v) in [
            ("investment", self.investment_cost),
            ("operating", self.operating_cost),
            ("delay", self.delay_cost),
            ("shift", self.shift_cost),
            ("shed", self.shed_cost),
            ("total", self.total_cost),
        ] {
            let _ = writeln!(out, "{name:<12}{v:>16.4}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flexload::GeoShiftSpec;
    use crate::netcase::parse_case;
    use ndarray::array;

    fn toy2() -> Network {
        parse_case(
            r#"{"base_mva": 100,
            "buses": [{"id": "b1", "reference": true}, {"id": "b2"}],
            "lines": [{"id": "l1", "from": "b1", "to": "b2", "susceptance_pu": 10, "capacity_mw": 1}],
            "generators": [
              {"id": "g1", "bus": "b1", "existing_mw": 10, "max_addition_mw": 0, "marginal_cost_per_mwh": 1, "investment_cost_per_mw": 0},
              {"id": "g2", "bus": "b2", "existing_mw": 1, "max_addition_mw": 10, "marginal_cost_per_mwh": 5, "investment_cost_per_mw": 100}]}"#,
        )
        .unwrap()
        .network
    }

    #[test]
    fn toy_firm_two_mw() {
        let net = toy2();
        let loads = LoadSet::firm(array![[0.0, 2.0]]);
        let a = assemble(&net, &loads, &ExpansionOptions::default()).unwrap();
        assert_eq!(a.model.num_variables(), 2 + 2 + 2 + 1 + 2);
        assert_eq!(a.model.num_constraints(), 5);
        let r = solve_expansion(&net, &loads, &ExpansionOptions::default()).unwrap();
        assert!((r.total_cost - 6.0).abs() < 1e-9);
        assert!((r.flows[[0, 0]] - 1.0).abs() < 1e-9);
        assert_eq!(congestion_report(&r, &net).binding_line_hours, 1);
    }

    #[test]
    fn toy_forced_expansion_and_geo_relief() {
        let net = toy2();
        let opts = ExpansionOptions { shed_mode: ShedMode::Forbidden, ..Default::default() };
        let firm = LoadSet::firm(array![[0.0, 3.0]]);
        let r = solve_expansion(&net, &firm, &opts).unwrap();
        assert!((r.total_cost - 111.0).abs() < 1e-9);
        assert!((r.added_capacity[1] - 1.0).abs() < 1e-9);
        assert!(matches!(evaluate_second_stage(&net, &firm, &[0.0, 0.0], &opts), Err(ExpansionError::Infeasible)));

        let mut flex = LoadSet::firm(array![[0.0, 0.0]]);
        flex.geo = GeoShiftSpec::from_portion(array![[0.0, 3.0]], &[0, 1], 1.0 / 3.0);
        flex.shift_penalty = 0.1;
        let r = solve_expansion(&net, &flex, &opts).unwrap();
        assert!((r.total_cost - 7.2).abs() < 1e-9, "{}", r.total_cost);
        assert!(r.added_capacity[1].abs() < 1e-9);
    }
}
