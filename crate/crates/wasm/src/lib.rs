//! Browser demo: three interactive studies on the bundled fixtures.
//!
//! Each operation has a plain Rust function returning JSON (tested
//! natively) and a thin `wasm_bindgen` wrapper used by `www/main.js`.

use gridflex::expansion::{solve_expansion, ExpansionOptions, ShedMode};
use gridflex::flexload::{load_profiles, resolve_loads, FlexSpec, LoadSet};
use gridflex::harness::{instantiate, Point, Scenario};
use gridflex::netcase::{parse_case, scale_line_capacities, Network};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const TOY_CASE: &str = include_str!("../../../cases/toy2.json");
const IEEE14_CASE: &str = include_str!("../../../cases/ieee14.json");
const DIURNAL: &str = include_str!("../../../profiles/ieee14_diurnal.csv");
const EVENING: &str = include_str!("../../../profiles/ieee14_evening.csv");
const DC_FLEX: &str = include_str!("../../../flex/ieee14_dc.json");
const EVENING_FLEX: &str = include_str!("../../../flex/ieee14_evening.json");

#[derive(Debug, Serialize)]
pub struct ToyOutcome {
    pub status: String,
    pub total_cost: Option<f64>,
    pub investment_cost: Option<f64>,
    pub operating_cost: Option<f64>,
    pub shift_cost: Option<f64>,
    pub added_mw: Option<f64>,
    pub dispatch_mw: Vec<f64>,
    pub flow_mw: Option<f64>,
    pub shifted_mw: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub status: String,
    pub total_cost: Option<f64>,
    pub investment_cost: Option<f64>,
    pub added_mw: Option<f64>,
}

fn network(text: &str) -> Result<Network, String> {
    parse_case(text).map(|p| p.network).map_err(|e| e.to_string())
}

fn scenario(case: &str, profiles: &str, flex: &str) -> Result<Scenario, String> {
    let network = network(case)?;
    let base = load_profiles(profiles, &network).map_err(|e| e.to_string())?;
    let flex = FlexSpec::from_json(flex).map_err(|e| e.to_string())?;
    Ok(Scenario { network, base, flex, options: ExpansionOptions::default() })
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), String> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(format!("{name} must be in [{lo}, {hi}], got {v}"))
    }
}

/// Two-bus system with `load_mw` of data-center load at bus b2, of which
/// `geo_portion` may move to b1. Shedding is not allowed.
pub fn toy_solve(load_mw: f64, geo_portion: f64, line_mw: f64) -> Result<ToyOutcome, String> {
    check_range("load", load_mw, 0.0, 20.0)?;
    check_range("geo portion", geo_portion, 0.0, 1.0)?;
    check_range("line capacity", line_mw, 0.1, 10.0)?;
    let net = network(TOY_CASE)?;
    let net = scale_line_capacities(&net, line_mw / net.lines[0].capacity).map_err(|e| e.to_string())?;
    let spec = FlexSpec::from_json(&format!(
        r#"{{"geo": {{"buses": ["b1", "b2"], "baseline_mw": [[0, {load_mw}]], "portion": {geo_portion}}},
            "penalties": {{"shift_per_mwh": 0.1}}}}"#
    ))
    .map_err(|e| e.to_string())?;
    let loads: LoadSet = resolve_loads(&net, &ndarray::Array2::zeros((1, 2)), &spec).map_err(|e| e.to_string())?;
    let options = ExpansionOptions { shed_mode: ShedMode::Forbidden, ..Default::default() };
    Ok(match solve_expansion(&net, &loads, &options) {
        Ok(r) => ToyOutcome {
            status: "optimal".into(),
            total_cost: Some(r.total_cost),
            investment_cost: Some(r.investment_cost),
            operating_cost: Some(r.operating_cost),
            shift_cost: Some(r.shift_cost),
            added_mw: Some(r.added_capacity.iter().sum()),
            dispatch_mw: r.dispatch.row(0).to_vec(),
            flow_mw: Some(r.flows[[0, 0]]),
            shifted_mw: Some(r.shifts[[0, 0]].max(0.0)),
        },
        Err(e) => ToyOutcome {
            status: e.to_string(),
            total_cost: None,
            investment_cost: None,
            operating_cost: None,
            shift_cost: None,
            added_mw: None,
            dispatch_mw: Vec::new(),
            flow_mw: None,
            shifted_mw: None,
        },
    })
}

fn curve(sc: &Scenario, xs: &[f64], point: impl Fn(f64) -> Point) -> Result<Vec<CurvePoint>, String> {
    xs.iter()
        .map(|&x| {
            let (net, loads, _) = instantiate(sc, &point(x)).map_err(|e| e.to_string())?;
            Ok(match solve_expansion(&net, &loads, &sc.options) {
                Ok(r) => CurvePoint {
                    x,
                    status: if r.requires_shed { "optimal_with_shed" } else { "optimal" }.into(),
                    total_cost: Some(r.total_cost),
                    investment_cost: Some(r.investment_cost),
                    added_mw: Some(r.added_capacity.iter().sum()),
                },
                Err(e) => {
                    CurvePoint { x, status: e.to_string(), total_cost: None, investment_cost: None, added_mw: None }
                }
            })
        })
        .collect()
}

/// Cost of the 14-bus case against the geographically flexible portion of
/// data-center load, at the given growth ratio and line-capacity factor.
pub fn portion_curve(growth_ratio: f64, line_factor: f64, steps: usize) -> Result<Vec<CurvePoint>, String> {
    check_range("growth ratio", growth_ratio, 0.0, 3.0)?;
    check_range("line factor", line_factor, 0.5, 2.0)?;
    if !(1..=20).contains(&steps) {
        return Err(format!("steps must be in 1..=20, got {steps}"));
    }
    let sc = scenario(IEEE14_CASE, DIURNAL, DC_FLEX)?;
    let xs: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    curve(&sc, &xs, |p| Point {
        growth_ratio: Some(growth_ratio),
        line_factor: Some(line_factor),
        geo_portion: Some(p),
        ..Point::flex()
    })
}

/// Cost of the 14-bus evening-peak case against the deferral window.
pub fn window_curve(max_window: usize, line_factor: f64) -> Result<Vec<CurvePoint>, String> {
    if max_window > 12 {
        return Err(format!("window must be at most 12 hours, got {max_window}"));
    }
    check_range("line factor", line_factor, 0.5, 2.0)?;
    let sc = scenario(IEEE14_CASE, EVENING, EVENING_FLEX)?;
    let xs: Vec<f64> = (0..=max_window).map(|w| w as f64).collect();
    curve(&sc, &xs, |w| Point { window_h: Some(w as usize), line_factor: Some(line_factor), ..Point::flex() })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = toySolve)]
pub fn toy_solve_js(load_mw: f64, geo_portion: f64, line_mw: f64) -> Result<String, JsValue> {
    to_js(toy_solve(load_mw, geo_portion, line_mw))
}

#[wasm_bindgen(js_name = portionCurve)]
pub fn portion_curve_js(growth_ratio: f64, line_factor: f64, steps: usize) -> Result<String, JsValue> {
    to_js(portion_curve(growth_ratio, line_factor, steps))
}

#[wasm_bindgen(js_name = windowCurve)]
pub fn window_curve_js(max_window: usize, line_factor: f64) -> Result<String, JsValue> {
    to_js(window_curve(max_window, line_factor))
}
