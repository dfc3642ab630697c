//! Small random expansion instances and an enumeration oracle for them.
//!
//! The oracle writes the problem in a different but equivalent form from the
//! library: angles and flows are eliminated with a hand-built PTDF matrix,
//! backlog is replaced by cumulative-service inequalities, and the resulting
//! LP is minimised by enumerating vertices.

use gridflex::flexload::{DeferrableClass, GeoShiftSpec, LoadSet};
use gridflex::netcase::{build_network, BusEntry, CaseDocument, GeneratorEntry, LineEntry, Network};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::enumerate::{binomial, dense_solve, VertexLp};

pub struct Instance {
    pub network: Network,
    pub loads: LoadSet,
    pub allow_shed: bool,
}

/// Random instance with at most 3 buses, 3 hours and 2 deferrable classes.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n_bus = rng.gen_range(2..=3usize);
    let hours = rng.gen_range(1..=3usize);
    let reference = rng.gen_range(0..n_bus);
    let bus_id = |n: usize| format!("n{n}");
    let buses = (0..n_bus).map(|n| BusEntry { id: bus_id(n), reference: n == reference }).collect();

    let mut pairs = vec![(0, 1)];
    if n_bus == 3 {
        pairs.push((rng.gen_range(0..2), 2));
        if rng.gen_bool(0.5) {
            let extra = if pairs[1].0 == 0 { (1, 2) } else { (0, 2) };
            pairs.push(extra);
        }
    }
    let lines = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, z))| LineEntry {
            id: format!("l{i}"),
            from: bus_id(a),
            to: bus_id(z),
            susceptance_pu: rng.gen_range(2.0..20.0),
            capacity_mw: rng.gen_range(0.5..3.0),
        })
        .collect();

    let n_gen = rng.gen_range(1..=2usize);
    let generators = (0..n_gen)
        .map(|g| GeneratorEntry {
            id: format!("g{g}"),
            bus: bus_id(rng.gen_range(0..n_bus)),
            existing_mw: rng.gen_range(0.0..3.0),
            max_addition_mw: if rng.gen_bool(0.7) { rng.gen_range(0.5..4.0) } else { 0.0 },
            marginal_cost_per_mwh: rng.gen_range(1.0..10.0),
            investment_cost_per_mw: rng.gen_range(0.0..30.0),
        })
        .collect();

    let doc = CaseDocument { base_mva: 100.0, buses, lines, generators };
    let network = build_network(doc).expect("generated case is valid").network;

    let base = Array2::from_shape_fn((hours, n_bus), |_| if rng.gen_bool(0.6) { rng.gen_range(0.0..2.0) } else { 0.0 });
    let mut loads = LoadSet::firm(base);

    let n_class = rng.gen_range(0..=2usize);
    for d in 0..n_class {
        loads.deferrable.push(DeferrableClass {
            id: format!("c{d}"),
            bus: bus_id(rng.gen_range(0..n_bus)),
            window: rng.gen_range(0..hours),
            arrivals: (0..hours).map(|_| if rng.gen_bool(0.7) { rng.gen_range(0.0..2.0) } else { 0.0 }).collect(),
            delay_penalty: rng.gen_range(0.0..2.0),
        });
    }

    if rng.gen_bool(0.5) {
        let mut geo = GeoShiftSpec::none(hours, n_bus);
        for t in 0..hours {
            for n in 0..n_bus {
                if rng.gen_bool(0.7) {
                    geo.baseline[[t, n]] = rng.gen_range(0.0..2.0);
                    geo.lower[[t, n]] = -geo.baseline[[t, n]] * rng.gen_range(0.0..1.0);
                    geo.upper[[t, n]] = rng.gen_range(0.0..1.5);
                }
            }
        }
        if rng.gen_bool(0.6) {
            geo.budget = Some((0..hours).map(|_| rng.gen_range(0.0..2.0)).collect());
        }
        loads.geo = geo;
        loads.shift_penalty = rng.gen_range(0.0..1.0);
    }

    Instance { network, loads, allow_shed: rng.gen_bool(0.3) }
}

/// Flow on each line per MW injected at each bus (withdrawn at the reference).
fn ptdf(network: &Network) -> Vec<Vec<f64>> {
    let n_bus = network.buses.len();
    let pos = |id: &str| network.buses.iter().position(|b| b.id == id).unwrap();
    let reference = network.buses.iter().position(|b| b.is_reference).unwrap();
    let others: Vec<usize> = (0..n_bus).filter(|&n| n != reference).collect();
    let mut b = vec![vec![0.0; n_bus]; n_bus];
    for l in &network.lines {
        let (a, z) = (pos(&l.from_bus), pos(&l.to_bus));
        b[a][a] += l.susceptance;
        b[z][z] += l.susceptance;
        b[a][z] -= l.susceptance;
        b[z][a] -= l.susceptance;
    }
    let reduced: Vec<Vec<f64>> = others.iter().map(|&i| others.iter().map(|&j| b[i][j]).collect()).collect();
    let mut out = vec![vec![0.0; n_bus]; network.lines.len()];
    for (col, &n) in others.iter().enumerate() {
        let mut e = vec![0.0; others.len()];
        e[col] = 1.0;
        let theta_red = dense_solve(reduced.clone(), e).expect("connected network");
        let mut theta = vec![0.0; n_bus];
        for (k, &m) in others.iter().enumerate() {
            theta[m] = theta_red[k];
        }
        for (l, line) in network.lines.iter().enumerate() {
            out[l][n] = line.susceptance * (theta[pos(&line.from_bus)] - theta[pos(&line.to_bus)]);
        }
    }
    out
}

/// Builds the reformulated LP. Returns it with an estimate of the number of
/// candidate vertices the enumeration will visit.
pub fn oracle_lp(inst: &Instance, shed_penalty: f64) -> (VertexLp, f64) {
    let net = &inst.network;
    let loads = &inst.loads;
    let hours = loads.horizon;
    let n_bus = net.buses.len();
    let pos = |id: &str| net.buses.iter().position(|b| b.id == id).unwrap();

    // Variable layout, allocated on demand.
    let mut n = 0usize;
    let mut cost: Vec<f64> = Vec::new();
    let mut new_var = |c: f64, n: &mut usize| {
        cost.push(c);
        *n += 1;
        *n - 1
    };
    let x: Vec<Option<usize>> =
        net.generators.iter().map(|g| (g.max_addition > 0.0).then(|| new_var(g.investment_cost, &mut n))).collect();
    let mut p = vec![vec![0; net.generators.len()]; hours];
    let mut s = vec![vec![0; loads.deferrable.len()]; hours];
    let mut up = vec![vec![None; n_bus]; hours];
    let mut down = vec![vec![None; n_bus]; hours];
    let mut shed = vec![vec![None; n_bus]; hours];
    for t in 0..hours {
        for (g, gen) in net.generators.iter().enumerate() {
            p[t][g] = new_var(gen.marginal_cost, &mut n);
        }
        for (d, c) in loads.deferrable.iter().enumerate() {
            // Backlog b_t = U_t - S_t, so its penalty lands on every s_tau
            // with tau <= t, i.e. (hours - tau) times; the constant part is
            // added to the objective separately.
            s[t][d] = new_var(-c.delay_penalty * (hours - t) as f64, &mut n);
        }
        for b in 0..n_bus {
            if loads.geo.upper[[t, b]] > 0.0 {
                up[t][b] = Some(new_var(loads.shift_penalty, &mut n));
            }
            if loads.geo.lower[[t, b]] < 0.0 {
                down[t][b] = Some(new_var(loads.shift_penalty, &mut n));
            }
            if inst.allow_shed {
                shed[t][b] = Some(new_var(shed_penalty, &mut n));
            }
        }
    }

    let mut lp = VertexLp::new(n);
    lp.cost = cost;

    for (g, gen) in net.generators.iter().enumerate() {
        if let Some(v) = x[g] {
            lp.add_ge(vec![(v, 1.0)], 0.0);
            lp.add_le(vec![(v, 1.0)], gen.max_addition);
        }
    }

    let shift = ptdf(net);
    for t in 0..hours {
        // Injection at each bus as (terms, constant).
        let mut inj: Vec<(Vec<(usize, f64)>, f64)> =
            (0..n_bus).map(|b| (Vec::new(), -(loads.base[[t, b]] + loads.geo.baseline[[t, b]]))).collect();
        for (g, gen) in net.generators.iter().enumerate() {
            let v = p[t][g];
            lp.add_ge(vec![(v, 1.0)], 0.0);
            let mut cap = vec![(v, 1.0)];
            if let Some(xv) = x[g] {
                cap.push((xv, -1.0));
            }
            lp.add_le(cap, gen.existing_capacity);
            inj[pos(&gen.bus)].0.push((v, 1.0));
        }
        for (d, c) in loads.deferrable.iter().enumerate() {
            inj[pos(&c.bus)].0.push((s[t][d], -1.0));
        }
        for b in 0..n_bus {
            if let Some(v) = up[t][b] {
                lp.add_ge(vec![(v, 1.0)], 0.0);
                lp.add_le(vec![(v, 1.0)], loads.geo.upper[[t, b]]);
                inj[b].0.push((v, -1.0));
            }
            if let Some(v) = down[t][b] {
                lp.add_ge(vec![(v, 1.0)], 0.0);
                lp.add_le(vec![(v, 1.0)], -loads.geo.lower[[t, b]]);
                inj[b].0.push((v, 1.0));
            }
            if let Some(v) = shed[t][b] {
                lp.add_ge(vec![(v, 1.0)], 0.0);
                inj[b].0.push((v, 1.0));
            }
        }

        // Lossless network: injections sum to zero.
        let total: Vec<(usize, f64)> = inj.iter().flat_map(|(terms, _)| terms.iter().copied()).collect();
        let constant: f64 = inj.iter().map(|(_, c)| c).sum();
        lp.add_eq(total, -constant);

        for (l, line) in net.lines.iter().enumerate() {
            let mut row = Vec::new();
            let mut constant = 0.0;
            for (b, (terms, c)) in inj.iter().enumerate() {
                let w = shift[l][b];
                if w != 0.0 {
                    row.extend(terms.iter().map(|&(v, a)| (v, a * w)));
                    constant += w * c;
                }
            }
            lp.add_le(row.clone(), line.capacity - constant);
            lp.add_ge(row, -line.capacity - constant);
        }

        let ups: Vec<usize> = up[t].iter().flatten().copied().collect();
        let downs: Vec<usize> = down[t].iter().flatten().copied().collect();
        if !ups.is_empty() || !downs.is_empty() {
            let conserve = ups.iter().map(|&v| (v, 1.0)).chain(downs.iter().map(|&v| (v, -1.0))).collect();
            lp.add_eq(conserve, 0.0);
            if let Some(budget) = &loads.geo.budget {
                lp.add_le(ups.iter().chain(&downs).map(|&v| (v, 1.0)).collect(), budget[t]);
            }
        }
    }

    for (d, c) in loads.deferrable.iter().enumerate() {
        let cum_u: Vec<f64> = c
            .arrivals
            .iter()
            .scan(0.0, |acc, &u| {
                *acc += u;
                Some(*acc)
            })
            .collect();
        for t in 0..hours {
            lp.add_ge(vec![(s[t][d], 1.0)], 0.0);
            let served_so_far: Vec<(usize, f64)> = (0..=t).map(|tau| (s[tau][d], 1.0)).collect();
            if t + 1 == hours {
                lp.add_eq(served_so_far, cum_u[t]);
            } else {
                // Backlog never negative.
                lp.add_le(served_so_far.clone(), cum_u[t]);
                // Arrivals older than the window are finished.
                if t >= c.window {
                    lp.add_ge(served_so_far, cum_u[t - c.window]);
                }
            }
        }
    }

    let combos = match lp.size() {
        Some((k, m)) => binomial(m, k),
        None => 0.0,
    };
    (lp, combos)
}

/// Constant part of the objective dropped from the reformulation.
pub fn delay_constant(loads: &LoadSet) -> f64 {
    loads
        .deferrable
        .iter()
        .map(|c| {
            let mut cum = 0.0;
            let mut total = 0.0;
            for &u in &c.arrivals {
                cum += u;
                total += cum;
            }
            c.delay_penalty * total
        })
        .sum()
}

/// Draws instances until one is small enough to enumerate within `budget`
/// candidate vertices.
pub fn tractable_instance(rng: &mut ChaCha8Rng, shed_penalty: f64, budget: f64) -> (Instance, VertexLp) {
    loop {
        let inst = random_instance(rng);
        let (lp, combos) = oracle_lp(&inst, shed_penalty);
        if combos <= budget {
            return (inst, lp);
        }
    }
}

/// Optimal cost from the oracle, `None` if infeasible.
pub fn oracle_cost(inst: &Instance, lp: &VertexLp) -> Option<f64> {
    lp.minimize().map(|v| v + delay_constant(&inst.loads))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
