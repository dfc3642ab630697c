//! Independent feasibility and bookkeeping checks for expansion results.

use gridflex::expansion::ExpansionResult;
use gridflex::flexload::{check_backlog_trajectory, check_geo_shift, LoadSet};
use gridflex::netcase::Network;

pub const BALANCE_TOL_MW: f64 = 1e-5;
pub const FLOW_TOL_MW: f64 = 1e-6;
pub const COST_REL_TOL: f64 = 1e-6;
pub const KKT_TOL: f64 = 1e-6;
pub const DUALITY_TOL: f64 = 1e-6;

fn pos(network: &Network, id: &str) -> usize {
    network.buses.iter().position(|b| b.id == id).expect("known bus")
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Every problem found in `r`; empty when the result is sound.
pub fn audit(network: &Network, loads: &LoadSet, r: &ExpansionResult, shed_penalty: f64) -> Vec<String> {
    let mut out = Vec::new();
    let hours = loads.horizon;
    let n_bus = network.buses.len();

    for t in 0..hours {
        let mut residual = vec![0.0; n_bus];
        for (g, gen) in network.generators.iter().enumerate() {
            let p = r.dispatch[[t, g]];
            let cap = gen.existing_capacity + r.added_capacity[g];
            if p < -FLOW_TOL_MW || p > cap + FLOW_TOL_MW {
                out.push(format!("hour {t}: {} dispatch {p} outside [0, {cap}]", gen.id));
            }
            residual[pos(network, &gen.bus)] += p;
        }
        for (l, line) in network.lines.iter().enumerate() {
            let f = r.flows[[t, l]];
            if f.abs() > line.capacity + FLOW_TOL_MW {
                out.push(format!("hour {t}: {} flow {f} over limit {}", line.id, line.capacity));
            }
            let (a, z) = (pos(network, &line.from_bus), pos(network, &line.to_bus));
            let law = network.base_mva * line.susceptance * (r.angles[[t, a]] - r.angles[[t, z]]);
            if (law - f).abs() > BALANCE_TOL_MW {
                out.push(format!("hour {t}: {} flow {f} disagrees with angles ({law})", line.id));
            }
            residual[a] -= f;
            residual[z] += f;
        }
        for (d, c) in loads.deferrable.iter().enumerate() {
            residual[pos(network, &c.bus)] -= r.served[[t, d]];
        }
        for (n, res) in residual.iter_mut().enumerate() {
            *res += r.shed[[t, n]] - loads.base[[t, n]] - loads.geo.baseline[[t, n]] - r.shifts[[t, n]];
            if res.abs() > BALANCE_TOL_MW {
                out.push(format!("hour {t}: balance residual {res} at {}", network.buses[n].id));
            }
            if r.shed[[t, n]] < -FLOW_TOL_MW {
                out.push(format!("hour {t}: negative shed at {}", network.buses[n].id));
            }
        }
        let reference = network.buses.iter().position(|b| b.is_reference).unwrap();
        if r.angles[[t, reference]] != 0.0 {
            out.push(format!("hour {t}: reference angle {}", r.angles[[t, reference]]));
        }
    }
    for (g, gen) in network.generators.iter().enumerate() {
        let x = r.added_capacity[g];
        if x < -FLOW_TOL_MW || x > gen.max_addition + FLOW_TOL_MW {
            out.push(format!("{} addition {x} outside [0, {}]", gen.id, gen.max_addition));
        }
    }

    for (d, c) in loads.deferrable.iter().enumerate() {
        let served: Vec<f64> = r.served.column(d).to_vec();
        match check_backlog_trajectory(c, &served) {
            Ok(v) if v.is_empty() => {}
            Ok(v) => out.push(format!("class {}: {v:?}", c.id)),
            Err(e) => out.push(format!("class {}: {e}", c.id)),
        }
    }
    match check_geo_shift(&loads.geo, &r.shifts) {
        Ok(v) if v.is_empty() => {}
        Ok(v) => out.push(format!("geo shift: {v:?}")),
        Err(e) => out.push(format!("geo shift: {e}")),
    }

    // Cost components recomputed from the trajectories. With a positive
    // shift penalty a bus never sends and receives in the same hour, so
    // |delta| is the shifted volume.
    let investment: f64 = network.generators.iter().zip(&r.added_capacity).map(|(g, x)| g.investment_cost * x).sum();
    let mut operating = 0.0;
    let mut delay = 0.0;
    let mut shift = 0.0;
    let mut shed = 0.0;
    for t in 0..hours {
        for (g, gen) in network.generators.iter().enumerate() {
            operating += gen.marginal_cost * r.dispatch[[t, g]];
        }
        // Backlog rebuilt from arrivals and service.
        for (d, c) in loads.deferrable.iter().enumerate() {
            let backlog: f64 = (0..=t).map(|tau| c.arrivals[tau] - r.served[[tau, d]]).sum();
            delay += c.delay_penalty * backlog;
        }
        for n in 0..n_bus {
            shift += loads.shift_penalty * r.shifts[[t, n]].abs();
            shed += shed_penalty * r.shed[[t, n]];
        }
    }
    for (what, mine, theirs) in [
        ("investment", investment, r.investment_cost),
        ("operating", operating, r.operating_cost),
        ("delay", delay, r.delay_cost),
        ("shift", shift, r.shift_cost),
        ("shed", shed, r.shed_cost),
    ] {
        if rel_gap(mine, theirs) > COST_REL_TOL {
            out.push(format!("{what} cost {theirs} but trajectories give {mine}"));
        }
    }
    let parts = r.investment_cost + r.operating_cost + r.delay_cost + r.shift_cost + r.shed_cost;
    if rel_gap(parts, r.total_cost) > COST_REL_TOL {
        out.push(format!("total {} but components sum to {parts}", r.total_cost));
    }
    out
}

/// KKT report and primal/dual objective agreement.
pub fn optimality(r: &ExpansionResult) -> Vec<String> {
    let mut out = Vec::new();
    match &r.kkt {
        Some(k) if k.tol > KKT_TOL => out.push(format!("KKT checked at {} instead of {KKT_TOL}", k.tol)),
        Some(k) if k.passed() => {}
        Some(k) => out.push(format!("KKT check failed: {k:?}")),
        None => out.push("no KKT report (verify off)".into()),
    }
    if (r.total_cost - r.dual_objective).abs() > DUALITY_TOL * (1.0 + r.total_cost.abs()) {
        out.push(format!("duality gap: primal {} dual {}", r.total_cost, r.dual_objective));
    }
    out
}
