use serde::Serialize;

use super::model::{ConId, LinearModel, Relation};
use super::simplex::Solution;

/// Worst violation found in one optimality category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub value: f64,
    /// Element carrying the worst violation, if any.
    pub at: Option<String>,
}

impl Violation {
    fn none() -> Self {
        Self { value: 0.0, at: None }
    }

    fn record(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value > self.value {
            self.value = value;
            self.at = Some(at());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub tol: f64,
    pub primal_feasibility: Violation,
    pub dual_feasibility: Violation,
    pub complementary_slackness: Violation,
    pub stationarity: Violation,
}

impl KktReport {
    pub fn passed(&self) -> bool {
        [&self.primal_feasibility, &self.dual_feasibility, &self.complementary_slackness, &self.stationarity]
            .iter()
            .all(|v| v.value <= self.tol)
    }
}

/// Checks first-order optimality of `sol` for `model`.
///
/// Residuals are normalized: row residuals by `1 + |rhs|`, bound residuals by
/// `1 + |bound|`, stationarity by `1 + |c_j|`, and complementarity products by
/// the magnitude of the multiplier and slack involved.
pub fn check_kkt(model: &LinearModel, sol: &Solution, tol: f64) -> KktReport {
    let x = &sol.primal;
    let y = &sol.duals;
    let d = &sol.reduced_costs;
    let mut primal = Violation::none();
    let mut dual = Violation::none();
    let mut comp = Violation::none();
    let mut stat = Violation::none();

    for (j, v) in model.variables().iter().enumerate() {
        if v.lower.is_finite() {
            primal.record((v.lower - x[j]) / (1.0 + v.lower.abs()), || v.name.clone());
        }
        if v.upper.is_finite() {
            primal.record((x[j] - v.upper) / (1.0 + v.upper.abs()), || v.name.clone());
        }
        // d_j >= 0 needs a finite lower bound, d_j <= 0 a finite upper bound.
        let scale = 1.0 + model.objective()[j].abs();
        if v.lower == f64::NEG_INFINITY {
            dual.record(d[j] / scale, || v.name.clone());
        }
        if v.upper == f64::INFINITY {
            dual.record(-d[j] / scale, || v.name.clone());
        }
        if d[j] > 0.0 && v.lower.is_finite() {
            let slack = x[j] - v.lower;
            comp.record(d[j].abs() * slack.abs() / (1.0 + slack.abs() + d[j].abs()), || v.name.clone());
        }
        if d[j] < 0.0 && v.upper.is_finite() {
            let slack = v.upper - x[j];
            comp.record(d[j].abs() * slack.abs() / (1.0 + slack.abs() + d[j].abs()), || v.name.clone());
        }
    }

    // Stationarity: c - A'y - d = 0.
    let mut resid: Vec<f64> = model.objective().iter().zip(d).map(|(c, dj)| c - dj).collect();
    for (i, c) in model.constraints().iter().enumerate() {
        for &(v, a) in &c.row {
            resid[v.index()] -= a * y[i];
        }
        let act = model.row_activity(ConId::from_index(i), x);
        let viol = match c.relation {
            Relation::Le => act - c.rhs,
            Relation::Ge => c.rhs - act,
            Relation::Eq => (act - c.rhs).abs(),
        };
        primal.record(viol / (1.0 + c.rhs.abs()), || c.name.clone());
        let wrong_sign = match c.relation {
            Relation::Le => y[i],
            Relation::Ge => -y[i],
            Relation::Eq => 0.0,
        };
        dual.record(wrong_sign, || c.name.clone());
        if c.relation != Relation::Eq {
            let slack = (act - c.rhs).abs();
            comp.record(y[i].abs() * slack / (1.0 + slack + y[i].abs()), || c.name.clone());
        }
    }
    for (j, r) in resid.iter().enumerate() {
        let scale = 1.0 + model.objective()[j].abs();
        stat.record(r.abs() / scale, || model.variables()[j].name.clone());
    }

    KktReport {
        tol,
        primal_feasibility: primal,
        dual_feasibility: dual,
        complementary_slackness: comp,
        stationarity: stat,
    }
}
