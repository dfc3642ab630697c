use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gridflex::expansion::{assemble, solve_expansion, ExpansionError};
use gridflex::flexload::{generate_profiles, load_profiles, resolve_loads, write_profiles, FlexSpec, ProfileParams};
use gridflex::harness::{
    flexibility_points, instantiate, min_flexibility_search, penetration_points, run_points, sort_records, sweep_csv,
    Budget, HarnessError, Point, Scenario, SweepRecord,
};
use gridflex::lpcore::{export_mps, review_text};
use gridflex::netcase::{parse_case, Network};
use ndarray::Array2;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{self, Loaded, SweepKind};
use crate::{CliError, Common};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Inputs {
    loaded: Loaded,
    files: Vec<(&'static str, PathBuf)>,
}

fn load_config(common: &Common) -> Result<Loaded, CliError> {
    let mut loaded = config::load(&common.config)?;
    let c = &mut loaded.config;
    if let Some(w) = common.workers {
        c.workers = Some(w);
    }
    if let Some(t) = common.feas_tol {
        c.expansion.solver.feas_tol = t;
    }
    if let Some(t) = common.opt_tol {
        c.expansion.solver.opt_tol = t;
    }
    Ok(loaded)
}

fn out_dir(common: &Common, loaded: &Loaded) -> Result<PathBuf, CliError> {
    let dir = match (&common.out, &loaded.config.out) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => loaded.resolve(d),
        (None, None) => PathBuf::from("out"),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn load_network(path: &Path) -> Result<Network, CliError> {
    let parsed = parse_case(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed.network)
}

fn load_scenario(common: &Common) -> Result<(Scenario, Inputs), CliError> {
    let loaded = load_config(common)?;
    let c = &loaded.config;
    let case = loaded.required("case", &c.case)?;
    let profiles = loaded.required("profiles", &c.profiles)?;
    let flex = loaded.existing("flex", &c.flex)?;
    let network = load_network(&case)?;
    let base = load_profiles(&read(&profiles)?, &network)
        .map_err(|e| CliError::Input(format!("{}: {e}", profiles.display())))?;
    let spec = match &flex {
        Some(p) => FlexSpec::from_json(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => FlexSpec::default(),
    };
    let mut files = vec![("case", case), ("profiles", profiles)];
    if let Some(p) = flex {
        files.push(("flex", p));
    }
    let scenario = Scenario { network, base, flex: spec, options: c.expansion.clone() };
    Ok((scenario, Inputs { loaded, files }))
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Expansion(ExpansionError::Infeasible) => CliError::Infeasible(e.to_string()),
        HarnessError::InfeasibleAtMax { .. } => CliError::Infeasible(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

pub fn solve(common: &Common) -> Result<(), CliError> {
    let (scenario, inputs) = load_scenario(common)?;
    let point: Point = inputs.loaded.config.solve.clone().unwrap_or_default().point();
    let (network, loads, _) = instantiate(&scenario, &point).map_err(harness_error)?;
    let out = out_dir(common, &inputs.loaded)?;

    if common.export_mps || common.dump_lp {
        let a = assemble(&network, &loads, &scenario.options).map_err(|e| CliError::Input(e.to_string()))?;
        if common.dump_lp {
            write(&out.join("model.lp"), review_text(&a.model).as_bytes())?;
        }
        if common.export_mps {
            let e = export_mps(&a.model, "GRIDFLEX");
            write(&out.join("model.mps"), e.text.as_bytes())?;
            write(&out.join("model.names"), e.name_map_text().as_bytes())?;
            println!(
                "wrote {} ({} columns, {} rows)",
                out.join("model.mps").display(),
                a.model.num_variables(),
                a.model.num_constraints()
            );
            return Ok(());
        }
    }

    let result = match solve_expansion(&network, &loads, &scenario.options) {
        Ok(r) => r,
        Err(ExpansionError::Infeasible) => {
            return Err(CliError::Infeasible("no dispatch meets demand under the given limits".into()))
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    for (name, text) in result.trajectory_csvs(&network, &loads) {
        write(&out.join(name), text.as_bytes())?;
    }
    let summary = result.summary(&network, &loads);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&out.join("result.json"), json.as_bytes())?;
    print!("{}", result.cost_table());
    if result.requires_shed {
        eprintln!("warning: demand could only be met with load shedding");
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: String,
    inputs: Vec<InputHash>,
    config: &'a config::RunConfig,
}

#[derive(Serialize)]
struct InputHash {
    role: &'static str,
    path: String,
    sha256: String,
}

fn manifest(inputs: &Inputs, command: &'static str) -> Result<String, CliError> {
    let mut hashes = Vec::new();
    for (role, path) in &inputs.files {
        let bytes = fs::read(path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        let shown = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        hashes.push(InputHash { role, path: shown, sha256: sha256_hex(&bytes) });
    }
    let m = Manifest {
        tool: "gridflex",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(&inputs.loaded.bytes),
        inputs: hashes,
        config: &inputs.loaded.config,
    };
    Ok(serde_json::to_string_pretty(&m).expect("manifest serializes"))
}

const JOURNAL: &str = "sweep.journal.jsonl";

fn read_journal(path: &Path) -> Vec<SweepRecord> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    // A torn final line from an interrupted run is skipped.
    text.lines().filter_map(|l| serde_json::from_str(l).ok()).collect()
}

pub fn sweep(common: &Common) -> Result<(), CliError> {
    let (scenario, inputs) = load_scenario(common)?;
    let cfg =
        inputs.loaded.config.sweep.clone().ok_or_else(|| CliError::Config("config has no [sweep] section".into()))?;
    let points = match cfg.kind {
        SweepKind::Flexibility => flexibility_points(&cfg.grid()),
        SweepKind::Penetration => {
            if cfg.growth_ratios.is_empty() {
                return Err(CliError::Config("penetration sweep needs growth_ratios".into()));
            }
            penetration_points(&cfg.growth_ratios)
        }
    };
    let workers = inputs.loaded.config.workers.unwrap_or(1).max(1);
    let out = out_dir(common, &inputs.loaded)?;
    let journal_path = out.join(JOURNAL);

    let mut done: Vec<SweepRecord> = Vec::new();
    if common.resume {
        for r in read_journal(&journal_path) {
            if points.contains(&r.point) && !done.iter().any(|d| d.point == r.point) {
                done.push(r);
            }
        }
    }
    let todo: Vec<Point> = points.iter().filter(|p| !done.iter().any(|d| &d.point == *p)).copied().collect();

    // Rewrite the journal with the kept records so it never holds stale points.
    let mut journal =
        fs::File::create(&journal_path).map_err(|e| CliError::Io { path: journal_path.clone(), source: e })?;
    for r in &done {
        writeln!(journal, "{}", serde_json::to_string(r).expect("record serializes"))
            .map_err(|e| CliError::Io { path: journal_path.clone(), source: e })?;
    }
    if !done.is_empty() {
        eprintln!("resuming: {} of {} points already done", done.len(), points.len());
    }
    let journal = Mutex::new(journal);
    let counter = AtomicUsize::new(done.len());
    let total = points.len();
    let on_done = |r: &SweepRecord| {
        let line = serde_json::to_string(r).expect("record serializes");
        if let Ok(mut f) = journal.lock() {
            let _ = writeln!(f, "{line}");
            let _ = f.flush();
        }
        let k = counter.fetch_add(1, Ordering::SeqCst) + 1;
        eprintln!("[{k}/{total}] {} {}", describe(&r.point), r.status);
    };
    let mut records = run_points(&scenario, &todo, workers, &on_done);
    records.extend(done);
    sort_records(&mut records);

    let gen_ids: Vec<String> = scenario.network.generators.iter().map(|g| g.id.clone()).collect();
    write(&out.join("sweep.csv"), sweep_csv(&records, &gen_ids).as_bytes())?;
    write(&out.join("manifest.json"), manifest(&inputs, "sweep")?.as_bytes())?;
    println!("wrote {} ({} points)", out.join("sweep.csv").display(), records.len());
    Ok(())
}

fn describe(p: &Point) -> String {
    let mut parts = vec![format!("{:?}", p.variant).to_lowercase()];
    if let Some(v) = p.growth_ratio {
        parts.push(format!("growth={v}"));
    }
    if let Some(v) = p.line_factor {
        parts.push(format!("lines={v}"));
    }
    if let Some(v) = p.window_h {
        parts.push(format!("window={v}"));
    }
    if let Some(v) = p.geo_portion {
        parts.push(format!("portion={v}"));
    }
    if let Some(v) = p.budget_scale {
        parts.push(format!("budget={v}"));
    }
    parts.join(" ")
}

pub fn search(common: &Common) -> Result<(), CliError> {
    let (scenario, inputs) = load_scenario(common)?;
    let cfg =
        inputs.loaded.config.search.clone().ok_or_else(|| CliError::Config("config has no [search] section".into()))?;
    let budget = match (cfg.investment_cap, cfg.capacity_cap) {
        (Some(b), None) => Budget::Investment(b),
        (None, Some(c)) => Budget::Capacity(c),
        _ => return Err(CliError::Config("[search] needs exactly one of investment_cap or capacity_cap".into())),
    };
    let out = out_dir(common, &inputs.loaded)?;
    let result = min_flexibility_search(&scenario, budget, cfg.knob, cfg.tol, cfg.max_window).map_err(harness_error)?;
    let json = serde_json::to_string_pretty(&result).expect("search result serializes");
    write(&out.join("search.json"), json.as_bytes())?;
    println!("minimal {} = {}", result.knob, result.value);
    Ok(())
}

pub fn gen_profiles(common: &Common) -> Result<(), CliError> {
    let loaded = load_config(common)?;
    let c = &loaded.config;
    let g = c.gen_profiles.clone().ok_or_else(|| CliError::Config("config has no [gen_profiles] section".into()))?;
    let (ids, peaks) = match loaded.existing("case", &c.case)? {
        Some(case) => {
            let network = load_network(&case)?;
            let mut by_bus: HashMap<&str, f64> = HashMap::new();
            for p in &g.peaks {
                if network.bus_position(&p.bus).is_none() {
                    return Err(CliError::Input(format!("peak given for unknown bus \"{}\"", p.bus)));
                }
                by_bus.insert(&p.bus, p.mw);
            }
            let ids: Vec<String> = network.buses.iter().map(|b| b.id.clone()).collect();
            let peaks = ids.iter().map(|id| by_bus.get(id.as_str()).copied().unwrap_or(0.0)).collect();
            (ids, peaks)
        }
        None => (g.peaks.iter().map(|p| p.bus.clone()).collect(), g.peaks.iter().map(|p| p.mw).collect::<Vec<_>>()),
    };
    let params = ProfileParams {
        horizon: g.horizon,
        shape: g.shape,
        peak_hour: g.peak_hour,
        trough_ratio: g.trough_ratio,
        noise: g.noise,
        seed: c.seed.unwrap_or(0),
    };
    let m: Array2<f64> = generate_profiles(&params, &peaks).map_err(|e| CliError::Input(e.to_string()))?;
    let path = match (&common.out, &g.output) {
        (Some(dir), _) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
            dir.join("profiles.csv")
        }
        (None, Some(p)) => loaded.resolve(p),
        (None, None) => return Err(CliError::Config("gen_profiles needs `output` or --out".into())),
    };
    write(&path, write_profiles(&m, &ids).as_bytes())?;
    println!("wrote {} ({} hours x {} buses)", path.display(), m.nrows(), m.ncols());
    Ok(())
}

pub fn validate(common: &Common) -> Result<(), CliError> {
    let loaded = load_config(common)?;
    let c = &loaded.config;
    let case = loaded.required("case", &c.case)?;
    let network = load_network(&case)?;
    println!(
        "case ok: {} buses, {} lines, {} generators",
        network.num_buses(),
        network.num_lines(),
        network.num_generators()
    );
    if let Some(p) = loaded.existing("profiles", &c.profiles)? {
        let base = load_profiles(&read(&p)?, &network).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        println!("profiles ok: {} hours", base.nrows());
        if let Some(f) = loaded.existing("flex", &c.flex)? {
            let spec = FlexSpec::from_json(&read(&f)?).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
            let loads =
                resolve_loads(&network, &base, &spec).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
            println!("flex ok: {} deferrable classes", loads.deferrable.len());
        }
    } else if c.flex.is_some() {
        return Err(CliError::Config("checking a flex spec needs profiles".into()));
    }
    Ok(())
}
