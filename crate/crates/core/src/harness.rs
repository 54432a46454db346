//! Configuration-driven experiment runs.
//!
//! A run reads a flat key-value document, executes one mode and writes its
//! CSV/JSON outputs plus a `manifest.json` with the config echo, timing and
//! SHA-256 checksums. Scan modes store every finished cell under `cells/`
//! so an interrupted scan resumes where it stopped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{self, ClassifyOptions, NetmapOptions, TransientOptions};
use crate::bifurcation;
use crate::compact::{self, CompactState};
use crate::ensemble::{self, EnsembleSpec, EnsembleSummary};
use crate::error::{Error, Result};
use crate::kv::{self, KvDoc};
use crate::master::{self, EvolveMethod, StateSpace};
use crate::model::{ModelParams, Scenario};
use crate::ode::{self, OdeOptions};
use crate::pairwise::{self, PairwiseState};
use crate::sim::{self, EdgeInit, InitSpec, InitialInfected, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Simulate,
    Ensemble,
    Pairwise,
    Compact,
    BifA,
    BifB,
    Hopf,
    Master,
    Netmap,
    Spectrum,
    Compare,
}

impl Mode {
    pub const ALL: [Mode; 11] = [
        Mode::Simulate,
        Mode::Ensemble,
        Mode::Pairwise,
        Mode::Compact,
        Mode::BifA,
        Mode::BifB,
        Mode::Hopf,
        Mode::Master,
        Mode::Netmap,
        Mode::Spectrum,
        Mode::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ensemble => "ensemble",
            Mode::Pairwise => "pairwise",
            Mode::Compact => "compact",
            Mode::BifA => "bif-a",
            Mode::BifB => "bif-b",
            Mode::Hopf => "hopf",
            Mode::Master => "master",
            Mode::Netmap => "netmap",
            Mode::Spectrum => "spectrum",
            Mode::Compare => "compare",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        let alias = match s {
            "bifurcation-a" => "bif-a",
            "bifurcation-b" => "bif-b",
            "hopf-scan" => "hopf",
            other => other,
        };
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == alias)
            .ok_or_else(|| Error::config("mode", format!("unknown mode `{s}`")))
    }
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "n_nodes",
    "tau",
    "gamma",
    "alpha_ss",
    "alpha_si",
    "alpha_ii",
    "omega_ss",
    "omega_si",
    "omega_ii",
    "alpha",
    "omega",
    "seed",
    "runs",
    "t_max",
    "sample_dt",
    "init.edges",
    "init.p",
    "init.infected",
    "scan.tau",
    "scan.omega_si",
    "scan.omega",
    "ode.rtol",
    "ode.atol",
    "ode.points",
    "hopf.omega_min",
    "hopf.omega_max",
    "hopf.n_grid",
    "hopf.tol",
    "master.times",
    "netmap.late_fraction",
    "analysis.window",
    "analysis.segment_len",
    "analysis.freq_threshold",
    "analysis.alpha",
    "compare.a",
    "compare.b",
    "compare.column",
    "compare.t_from",
    "compare.t_to",
];

/// Fully parsed experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub params: ModelParams,
    pub seed: u64,
    pub runs: Option<usize>,
    pub t_max: Option<f64>,
    pub sample_dt: Option<f64>,
    /// `None` means the built-in default for the parameters.
    pub init: Option<InitSpec>,
    pub scan_tau: Option<Vec<f64>>,
    pub scan_omega: Option<Vec<f64>>,
    pub ode: OdeOptions,
    pub ode_points: usize,
    pub hopf_omega_min: f64,
    pub hopf_omega_max: f64,
    pub hopf_n_grid: usize,
    pub hopf_tol: f64,
    pub master_times: Vec<f64>,
    pub late_fraction: f64,
    pub transient: TransientOptions,
    pub freq_threshold: f64,
    pub alpha_level: f64,
    pub compare_a: Option<PathBuf>,
    pub compare_b: Option<PathBuf>,
    pub compare_column: String,
    pub compare_window: (f64, f64),
    /// The document the config was parsed from, echoed in the manifest.
    pub doc: KvDoc,
}

fn get_f64_or(doc: &KvDoc, key: &str, default: f64) -> Result<f64> {
    Ok(kv::get_f64(doc, key)?.unwrap_or(default))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn params_from_doc(doc: &KvDoc) -> Result<ModelParams> {
    let mut doc = doc.clone();
    // `alpha`/`omega` are shorthand for link-type independent rates
    for (short, keys) in [
        ("alpha", ["alpha_ss", "alpha_si", "alpha_ii"]),
        ("omega", ["omega_ss", "omega_si", "omega_ii"]),
    ] {
        if let Some(v) = doc.get(short).cloned() {
            if let Some(k) = keys.iter().find(|k| doc.contains_key(**k)) {
                return Err(Error::config(short, format!("cannot be combined with `{k}`")));
            }
            for k in keys {
                doc.insert(k.to_string(), v.clone());
            }
        }
    }
    ModelParams::from_kv(&doc).map_err(|e| match e {
        Error::InvalidParams(msg) => Error::config("params", msg),
        other => other,
    })
}

impl ExperimentConfig {
    /// Parses a document. `mode` may be supplied by the caller (the CLI
    /// subcommand) and must then agree with any `mode` key.
    pub fn from_kv(doc: &KvDoc, mode: Option<Mode>) -> Result<Self> {
        if let Some(k) = doc.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::config(k.as_str(), "unknown key"));
        }
        let mode = match (mode, doc.get("mode")) {
            (Some(m), Some(s)) => {
                let from_doc = Mode::parse(s)?;
                if from_doc != m {
                    return Err(Error::config("mode", format!("config says `{s}`, command is `{}`", m.name())));
                }
                m
            }
            (Some(m), None) => m,
            (None, Some(s)) => Mode::parse(s)?,
            (None, None) => return Err(Error::config("mode", "missing")),
        };
        let params = params_from_doc(doc)?;
        let grid = |key: &str| doc.get(key).map(|s| kv::parse_grid(key, s)).transpose();
        let scan_omega = match (grid("scan.omega_si")?, grid("scan.omega")?) {
            (Some(_), Some(_)) => return Err(Error::config("scan.omega", "give either scan.omega or scan.omega_si")),
            (a, b) => a.or(b),
        };
        let init = match doc.get("init.edges").map(String::as_str) {
            None if !doc.contains_key("init.p") && !doc.contains_key("init.infected") => None,
            edges => {
                let default = InitSpec::default_for(&params)?;
                let edges = match edges {
                    None | Some("er") => match kv::get_f64(doc, "init.p")? {
                        Some(p) if (0.0..=1.0).contains(&p) => EdgeInit::ErdosRenyi(p),
                        Some(p) => return Err(Error::config("init.p", format!("{p} is not a probability"))),
                        None => default.edges,
                    },
                    Some("complete") => EdgeInit::Complete,
                    Some(other) => return Err(Error::config("init.edges", format!("expected `er` or `complete`, got `{other}`"))),
                };
                let infected = match kv::get_usize(doc, "init.infected")? {
                    Some(c) if c <= params.n_nodes => InitialInfected::Count(c),
                    Some(c) => return Err(Error::config("init.infected", format!("{c} exceeds n_nodes"))),
                    None => default.infected,
                };
                Some(InitSpec { edges, infected })
            }
        };
        let ode = OdeOptions {
            rtol: positive("ode.rtol", get_f64_or(doc, "ode.rtol", OdeOptions::default().rtol)?)?,
            atol: positive("ode.atol", get_f64_or(doc, "ode.atol", OdeOptions::default().atol)?)?,
            ..OdeOptions::default()
        };
        let segment_len = kv::get_usize(doc, "analysis.segment_len")?.unwrap_or(analysis::SEGMENT_LEN);
        if !segment_len.is_power_of_two() || segment_len < 4 {
            return Err(Error::config("analysis.segment_len", "must be a power of two >= 4"));
        }
        let transient = TransientOptions {
            segment_len,
            window: kv::get_usize(doc, "analysis.window")?.unwrap_or(analysis::DEFAULT_FILTER_WINDOW).max(1),
            ..TransientOptions::default()
        };
        let runs = kv::get_usize(doc, "runs")?;
        if runs == Some(0) {
            return Err(Error::config("runs", "must be at least 1"));
        }
        let t_max = kv::get_f64(doc, "t_max")?.map(|v| positive("t_max", v)).transpose()?;
        let sample_dt = kv::get_f64(doc, "sample_dt")?.map(|v| positive("sample_dt", v)).transpose()?;
        let ode_points = kv::get_usize(doc, "ode.points")?.unwrap_or(1001);
        if ode_points < 2 {
            return Err(Error::config("ode.points", "need at least 2 output points"));
        }
        let late_fraction = get_f64_or(doc, "netmap.late_fraction", 0.2)?;
        if !(late_fraction > 0.0 && late_fraction <= 1.0) {
            return Err(Error::config("netmap.late_fraction", "must lie in (0, 1]"));
        }
        let cfg = ExperimentConfig {
            mode,
            params,
            seed: kv::get_u64(doc, "seed")?.unwrap_or(1),
            runs,
            t_max,
            sample_dt,
            init,
            scan_tau: grid("scan.tau")?,
            scan_omega,
            ode,
            ode_points,
            hopf_omega_min: positive("hopf.omega_min", get_f64_or(doc, "hopf.omega_min", 0.01)?)?,
            hopf_omega_max: positive("hopf.omega_max", get_f64_or(doc, "hopf.omega_max", 1000.0)?)?,
            hopf_n_grid: kv::get_usize(doc, "hopf.n_grid")?.unwrap_or(400).max(2),
            hopf_tol: positive("hopf.tol", get_f64_or(doc, "hopf.tol", 1e-8)?)?,
            master_times: match grid("master.times")? {
                Some(g) => g,
                None => vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
            },
            late_fraction,
            transient,
            freq_threshold: get_f64_or(doc, "analysis.freq_threshold", 0.5)?,
            alpha_level: get_f64_or(doc, "analysis.alpha", 0.05)?,
            compare_a: doc.get("compare.a").map(PathBuf::from),
            compare_b: doc.get("compare.b").map(PathBuf::from),
            compare_column: doc.get("compare.column").cloned().unwrap_or_else(|| "I".into()),
            compare_window: (
                get_f64_or(doc, "compare.t_from", f64::NEG_INFINITY)?,
                get_f64_or(doc, "compare.t_to", f64::INFINITY)?,
            ),
            doc: doc.clone(),
        };
        cfg.check_mode()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str, mode: Option<Mode>) -> Result<Self> {
        ExperimentConfig::from_kv(&kv::parse(text)?, mode)
    }

    fn check_mode(&self) -> Result<()> {
        let scenario = self.params.validate()?;
        let need = |s: Scenario, what: &'static str| {
            if scenario == s {
                Ok(())
            } else {
                Err(Error::config("params", format!("mode `{}` requires {what}", self.mode.name())))
            }
        };
        match self.mode {
            Mode::BifA | Mode::Hopf => need(Scenario::A, "scenario A rates (alpha_ss, omega_si only)")?,
            Mode::BifB | Mode::Netmap => need(Scenario::B, "link-type independent rates")?,
            Mode::Master if self.params.n_nodes > master::DEFAULT_CAP => {
                return Err(Error::config("n_nodes", format!("master mode supports N <= {}", master::DEFAULT_CAP)));
            }
            Mode::Compare if self.compare_a.is_some() != self.compare_b.is_some() => {
                return Err(Error::config("compare.b", "compare.a and compare.b must be given together"));
            }
            _ => {}
        }
        match self.mode {
            Mode::BifA | Mode::Netmap if self.scan_tau.is_none() && self.mode == Mode::BifA => {
                Err(Error::config("scan.tau", "missing grid"))
            }
            Mode::BifA | Mode::BifB if self.scan_omega.is_none() => Err(Error::config("scan.omega_si", "missing grid")),
            Mode::Hopf if self.scan_tau.is_none() => Err(Error::config("scan.tau", "missing grid")),
            _ => Ok(()),
        }
    }

    fn init_spec(&self, params: &ModelParams) -> Result<InitSpec> {
        match &self.init {
            Some(s) => Ok(s.clone()),
            None => InitSpec::default_for(params),
        }
    }

    fn initial_density(&self, params: &ModelParams) -> Result<(f64, f64)> {
        let spec = self.init_spec(params)?;
        let n = params.n_nodes;
        let p = match spec.edges {
            EdgeInit::ErdosRenyi(p) => p,
            EdgeInit::Complete => 1.0,
            EdgeInit::EdgeList(ref e) => 2.0 * e.len() as f64 / (n * (n - 1)) as f64,
        };
        let i0 = match spec.infected {
            InitialInfected::Count(c) => c as f64,
            InitialInfected::Nodes(ref v) => v.len() as f64,
        };
        Ok((p, i0))
    }

    fn sim_config(&self, default_t: f64, default_dt: f64, stop_on_extinction: bool, track_components: bool) -> SimConfig {
        SimConfig {
            t_max: self.t_max.unwrap_or(default_t),
            sample_dt: self.sample_dt.unwrap_or(default_dt),
            stop_on_extinction,
            track_components,
        }
    }

    /// SHA-256 of the rendered document, used to tag resumable cells.
    pub fn fingerprint(&self) -> String {
        let mut doc = self.doc.clone();
        doc.insert("mode".into(), self.mode.name().into());
        doc.insert("seed".into(), self.seed.to_string());
        hex(&Sha256::digest(kv::render(&doc).as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub mode: String,
    pub seed: u64,
    pub config: KvDoc,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
    pub resumed_cells: usize,
    pub files: Vec<FileEntry>,
}

/// Output directory plus the list of files written so far.
pub struct Bundle {
    root: PathBuf,
    files: Vec<FileEntry>,
    fingerprint: String,
    resumed: usize,
}

#[derive(Serialize, Deserialize)]
struct Cell<T> {
    fingerprint: String,
    value: T,
}

impl Bundle {
    pub fn new(root: &Path, fingerprint: String) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Bundle { root: root.to_path_buf(), files: Vec::new(), fingerprint, resumed: 0 })
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        Self::write_atomic(&self.root.join(name), bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    /// Returns the stored cell when it was produced by the same config,
    /// otherwise computes and stores it.
    pub fn cell<T, F>(&mut self, name: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let dir = self.root.join("cells");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{name}.json"));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(cell) = serde_json::from_str::<Cell<T>>(&text) {
                if cell.fingerprint == self.fingerprint {
                    self.resumed += 1;
                    return Ok(cell.value);
                }
            }
        }
        let value = compute()?;
        let cell = Cell { fingerprint: self.fingerprint.clone(), value };
        Self::write_atomic(&path, &serde_json::to_vec(&cell)?)?;
        Ok(cell.value)
    }
}

/// Executes `cfg` and writes all outputs below `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut b = Bundle::new(out, cfg.fingerprint())?;
    match cfg.mode {
        Mode::Simulate => run_simulate(cfg, &mut b)?,
        Mode::Ensemble => run_ensemble(cfg, &mut b)?,
        Mode::Pairwise => run_pairwise(cfg, &mut b)?,
        Mode::Compact => run_compact(cfg, &mut b)?,
        Mode::BifA => run_bif_a(cfg, &mut b)?,
        Mode::BifB => run_bif_b(cfg, &mut b)?,
        Mode::Hopf => run_hopf(cfg, &mut b)?,
        Mode::Master => run_master(cfg, &mut b)?,
        Mode::Netmap => run_netmap(cfg, &mut b)?,
        Mode::Spectrum => run_spectrum(cfg, &mut b)?,
        Mode::Compare => run_compare(cfg, &mut b)?,
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: cfg.mode.name().to_string(),
        seed: cfg.seed,
        config: cfg.doc.clone(),
        started_unix,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        resumed_cells: b.resumed,
        files: b.files.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    Bundle::write_atomic(&out.join("manifest.json"), &bytes)?;
    Ok(manifest)
}

fn run_simulate(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let spec = EnsembleSpec {
        params: cfg.params,
        init: cfg.init_spec(&cfg.params)?,
        sim: cfg.sim_config(100.0, 0.01, false, true),
        n_runs: 1,
        base_seed: cfg.seed,
    };
    let ts = spec.run_one(0)?;
    b.write_with("series.csv", |w| ts.write_csv(w))?;
    #[derive(Serialize)]
    struct RunInfo<'a> {
        params: ModelParams,
        init: &'a InitSpec,
        init_is_default: bool,
        seed: u64,
        n_events: u64,
        died_out: Option<f64>,
    }
    b.write_json(
        "run.json",
        &RunInfo {
            params: cfg.params,
            init: &spec.init,
            init_is_default: cfg.init.is_none(),
            seed: cfg.seed,
            n_events: ts.n_events,
            died_out: ts.died_out,
        },
    )
}

fn run_ensemble(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let runs = cfg.runs.unwrap_or(20);
    if let Some(omegas) = &cfg.scan_omega {
        // die-out scan along ω_SI
        let sim = cfg.sim_config(1320.0, 0.01, true, false);
        let mut fractions = Vec::with_capacity(omegas.len());
        for (i, &w) in omegas.iter().enumerate() {
            let params = ModelParams { omega_si: w, ..cfg.params };
            let init = cfg.init.clone();
            let seed = cfg.seed.wrapping_add((i as u64) << 32);
            let f: f64 = b.cell(&format!("dieout_{i}"), || {
                let scan = analysis::die_out_scan(&params, &[w], init.as_ref(), &sim, runs, seed)?;
                Ok(scan.fractions[0])
            })?;
            fractions.push(f);
        }
        let scan = analysis::DieOutScan { omegas: omegas.clone(), fractions, n_runs: runs };
        b.write_with("dieout.csv", |w| {
            use std::io::Write;
            writeln!(w, "omega_si,die_out_fraction")?;
            for (o, f) in scan.omegas.iter().zip(&scan.fractions) {
                writeln!(w, "{o},{f}")?;
            }
            Ok(())
        })?;
        let (lower, upper) = scan.boundaries();
        return b.write_json(
            "dieout.json",
            &serde_json::json!({
                "n_runs": runs,
                "no_die_out_up_to": lower,
                "all_die_out_from": upper,
                "monotone_3sigma": scan.is_monotone(),
            }),
        );
    }
    let spec = EnsembleSpec {
        params: cfg.params,
        init: cfg.init_spec(&cfg.params)?,
        sim: cfg.sim_config(100.0, 0.01, false, false),
        n_runs: runs,
        base_seed: cfg.seed,
    };
    let res = ensemble::ensemble(&spec)?;
    b.write_json("summary.json", &EnsembleSummary::new(&spec, &res, cfg.init.is_none()))?;
    let all: Vec<&sim::TimeSeries> = res.runs.iter().collect();
    let mean_all = ensemble::mean_prevalence(&all);
    b.write_with("mean_prevalence.csv", |w| {
        use std::io::Write;
        writeln!(w, "t,mean_I_all,mean_I_surviving")?;
        for (k, m) in mean_all.iter().enumerate() {
            let s = res.mean_prevalence_surviving.get(k).copied().unwrap_or(f64::NAN);
            writeln!(w, "{},{},{}", sim::fmt_time(k as f64 * spec.sim.sample_dt), m, s)?;
        }
        Ok(())
    })
}

fn omega_list(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.scan_omega.clone().unwrap_or_else(|| vec![cfg.params.omega_si])
}

fn ode_grid(cfg: &ExperimentConfig, default_t: f64) -> Vec<f64> {
    ode::linspace(0.0, cfg.t_max.unwrap_or(default_t), cfg.ode_points - 1)
}

fn run_pairwise(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let grid = ode_grid(cfg, 500.0);
    let mut regimes = Vec::new();
    for w in omega_list(cfg) {
        let params = ModelParams { omega_si: w, ..cfg.params };
        let (p, i0) = cfg.initial_density(&params)?;
        let y0 = PairwiseState::erdos_renyi(params.n_nodes, p, i0);
        let traj = pairwise::integrate(&params, &y0, &grid, &cfg.ode)?;
        b.write_with(&format!("pairwise_omega_{w}.csv"), |out| pairwise::write_csv(&traj, params.n_nodes, out))?;
        if params.validate()? == Scenario::A {
            let regime = bifurcation::classify_regime(&params).map(|r| r.label()).unwrap_or("unknown");
            regimes.push(serde_json::json!({ "omega_si": w, "regime": regime }));
        }
    }
    if !regimes.is_empty() {
        b.write_json("regimes.json", &regimes)?;
    }
    Ok(())
}

fn run_compact(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let grid = ode_grid(cfg, 20.0);
    let (p, i0) = cfg.initial_density(&cfg.params)?;
    let y0 = CompactState::erdos_renyi(cfg.params.n_nodes, p, i0)?;
    let traj = compact::integrate(&cfg.params, &y0, &grid, &cfg.ode)?;
    b.write_with("compact.csv", |w| compact::write_csv(&traj, w).map_err(to_io))?;
    let t_end = *grid.last().unwrap();
    let snaps = [0.0, 0.25 * t_end, 0.5 * t_end, t_end];
    b.write_with("degree_snapshots.csv", |w| compact::write_degree_snapshots(&traj, &snaps, w).map_err(to_io))
}

fn to_io(e: Error) -> std::io::Error {
    match e {
        Error::Io(io) => io,
        other => std::io::Error::other(other.to_string()),
    }
}

fn run_bif_a(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let taus = cfg.scan_tau.as_ref().expect("checked in config");
    let omegas = cfg.scan_omega.as_ref().expect("checked in config");
    let points = bifurcation::regime_diagram(&cfg.params, taus, omegas)?;
    b.write_with("regimes.csv", |w| bifurcation::write_regime_csv(&points, w))?;
    b.write_with("transcritical.csv", |w| {
        use std::io::Write;
        writeln!(w, "tau,omega_tc")?;
        for &tau in taus {
            let p = ModelParams { tau, ..cfg.params };
            writeln!(w, "{tau},{}", bifurcation::transcritical_scenario_a(&p).map_err(to_io)?)?;
        }
        Ok(())
    })
}

fn run_bif_b(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let omegas = cfg.scan_omega.as_ref().expect("checked in config");
    let alpha = cfg.params.alpha_ss;
    b.write_with("thresholds.csv", |w| {
        use std::io::Write;
        writeln!(w, "omega,tau_c,tau_c_printed,tau_pc")?;
        for &omega in omegas {
            let p = ModelParams::scenario_b(cfg.params.tau, cfg.params.gamma, alpha, omega, cfg.params.n_nodes);
            let tc = bifurcation::tau_c_scenario_b(&p).unwrap_or(f64::NAN);
            let tp = bifurcation::tau_c_printed(&p).unwrap_or(f64::NAN);
            let pc = bifurcation::tau_pc_meanfield(&p).map_err(to_io)?;
            writeln!(w, "{omega},{tc},{tp},{pc}")?;
        }
        Ok(())
    })?;
    b.write_json(
        "bif_b.json",
        &serde_json::json!({
            "alpha": alpha,
            "n_nodes": cfg.params.n_nodes,
            "omega_star": bifurcation::omega_star_connectivity(alpha, cfg.params.n_nodes)?,
        }),
    )
}

fn run_hopf(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let taus = cfg.scan_tau.as_ref().expect("checked in config");
    let mut rows = Vec::with_capacity(taus.len());
    for (i, &tau) in taus.iter().enumerate() {
        let row: bifurcation::HopfRow = b.cell(&format!("hopf_{i}"), || {
            let mut r = bifurcation::hopf_curve_scan(
                &cfg.params,
                &[tau],
                cfg.hopf_omega_min,
                cfg.hopf_omega_max,
                cfg.hopf_n_grid,
                cfg.hopf_tol,
            )?;
            Ok(r.remove(0))
        })?;
        rows.push(row);
    }
    b.write_with("hopf.csv", |w| {
        use std::io::Write;
        writeln!(w, "tau,n_crossings,omega_1,omega_2,failed_brackets")?;
        for r in &rows {
            let c = |k: usize| r.crossings.get(k).map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", r.tau, r.crossings.len(), c(0), c(1), r.failed_brackets.len())?;
        }
        Ok(())
    })?;
    b.write_json("hopf.json", &rows)
}

fn run_master(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let space = StateSpace::new(cfg.params.n_nodes, master::DEFAULT_CAP)?;
    let m = master::build_generator(&space, &cfg.params)?;
    b.write_with("generator.txt", |w| master::write_triplets(&m, w))?;
    b.write_json("spectrum.json", &master::spectrum_report(&m)?)?;
    let report = master::lumping_report(&space, &m)?;
    b.write_json("lumping.json", &report)?;
    let lumped = master::lump_by_symmetry(&space, &m)?;
    b.write_with("lumped_generator.txt", |w| master::write_triplets(&lumped.generator, w))?;
    match master::absorbing_check(&space, &m) {
        Ok(ab) => b.write_json("absorbing.json", &ab)?,
        Err(Error::MultiplicityWarning) => {
            b.write_json("absorbing.json", &serde_json::json!({ "warning": "zero eigenvalue is not simple" }))?
        }
        Err(e) => return Err(e),
    }
    // start from the fully infected complete graph
    let mut x0 = vec![0.0; space.dim()];
    x0[space.dim() - 1] = 1.0;
    let ev = master::evolve(&m, &x0, &cfg.master_times, EvolveMethod::Auto)?;
    let obs = master::observables(&space, &ev);
    b.write_with("evolution.csv", |w| {
        use std::io::Write;
        writeln!(w, "t,mean_I,mean_edges")?;
        for (t, i, e) in &obs {
            writeln!(w, "{t},{i},{e}")?;
        }
        Ok(())
    })
}

fn run_netmap(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let defaults = NetmapOptions::default();
    let opts = NetmapOptions {
        taus: cfg.scan_tau.clone().unwrap_or(defaults.taus),
        omegas: cfg.scan_omega.clone().unwrap_or(defaults.omegas),
        alpha: cfg.params.alpha_ss,
        gamma: cfg.params.gamma,
        n_nodes: cfg.params.n_nodes,
        n_runs: cfg.runs.unwrap_or(defaults.n_runs),
        t_max: cfg.t_max.unwrap_or(defaults.t_max),
        sample_dt: cfg.sample_dt.unwrap_or(defaults.sample_dt),
        late_fraction: cfg.late_fraction,
        base_seed: cfg.seed,
    };
    let mut cells = Vec::new();
    for (i, &tau) in opts.taus.iter().enumerate() {
        for (j, &omega) in opts.omegas.iter().enumerate() {
            let seed = opts.base_seed.wrapping_add(((i * opts.omegas.len() + j) as u64) << 20);
            let cell = b.cell(&format!("netmap_{i}_{j}"), || analysis::netmap_cell(&opts, tau, omega, seed))?;
            cells.push(cell);
        }
    }
    let res = analysis::netmap_result(cells, &opts)?;
    b.write_with("netmap.csv", |w| res.write_csv(w))?;
    b.write_json(
        "netmap.json",
        &serde_json::json!({
            "omega_star": res.omega_star,
            "connectivity_boundary": res.connectivity_boundary(),
            "labels_present": res.labels_present(),
            "misclassified_tau_c": res.misclassified_tau_c,
            "misclassified_tau_c_printed": res.misclassified_tau_c_printed,
            "misclassified_tau_pc": res.misclassified_tau_pc,
        }),
    )
}

fn run_spectrum(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let spec = EnsembleSpec {
        params: cfg.params,
        init: cfg.init_spec(&cfg.params)?,
        sim: cfg.sim_config(1320.0, 0.01, true, false),
        n_runs: cfg.runs.unwrap_or(20),
        base_seed: cfg.seed,
    };
    let copts = ClassifyOptions {
        transient: cfg.transient,
        freq_threshold: cfg.freq_threshold,
        alpha: cfg.alpha_level,
    };
    // keep only the stationary parts so memory stays bounded
    let per_run = ensemble::ensemble_map(&spec, |k, ts| {
        let class = analysis::classify_run(&ts, &copts);
        let part = if ts.died_out.is_none() { analysis::stationary_prevalence(&ts, &cfg.transient).ok() } else { None };
        (k, ts.seed, class, part)
    })?;
    let mut rows = String::from("run,seed,label,died_out,stationary_from,peak_freq,significant,note\n");
    let mut parts = Vec::new();
    for (k, seed, class, part) in per_run {
        match class {
            Ok(c) => {
                let _ = writeln!(
                    rows,
                    "{k},{seed},{},{},{},{},{},",
                    c.label.label(),
                    c.died_out.map(|t| t.to_string()).unwrap_or_default(),
                    c.transient_end.map(|k| sim::fmt_time(k as f64 * spec.sim.sample_dt)).unwrap_or_default(),
                    c.peak_freq.map(|t| t.to_string()).unwrap_or_default(),
                    c.significant
                );
            }
            Err(e) => {
                let _ = writeln!(rows, "{k},{seed},unclassified,,,,,{}", e.to_string().replace(',', ";"));
            }
        }
        if let Some(p) = part {
            parts.push(p);
        }
    }
    b.write("regimes.csv", rows.as_bytes())?;
    let refs: Vec<&[f64]> = parts.iter().map(|v| v.as_slice()).collect();
    let est = analysis::pooled_periodogram(&refs, cfg.transient.segment_len, spec.sim.sample_dt, analysis::Taper::Rectangular)?;
    b.write_with("spectrum.csv", |w| est.write_csv(w))?;
    b.write_json(
        "spectrum.json",
        &serde_json::json!({
            "n_runs": spec.n_runs,
            "n_used": parts.len(),
            "n_segments": est.n_segments,
            "peak_freq": est.peak_freq,
            "peak_power": est.peak_power,
            "baseline": est.baseline(3),
            "significant": est.peak_significant(cfg.alpha_level),
        }),
    )
}

/// Pointwise comparison of two series on a common grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n_points: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_rel: f64,
    pub mean_rel: f64,
}

/// Compares `a` and `b` (pairs `(t, value)`) over `t ∈ [from, to]`.
/// Relative errors are taken with respect to `b`.
pub fn compare_series(a: &[(f64, f64)], b: &[(f64, f64)], from: f64, to: f64) -> Result<CompareReport> {
    let pick = |s: &[(f64, f64)]| -> Vec<(f64, f64)> { s.iter().copied().filter(|(t, _)| *t >= from && *t <= to).collect() };
    let (a, b) = (pick(a), pick(b));
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} points in the window", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::GridMismatch("no points in the comparison window".into()));
    }
    let mut rep = CompareReport { n_points: a.len(), max_abs: 0.0, mean_abs: 0.0, max_rel: 0.0, mean_rel: 0.0 };
    for (&(ta, va), &(tb, vb)) in a.iter().zip(&b) {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("times {ta} and {tb} differ")));
        }
        let d = (va - vb).abs();
        let r = if vb != 0.0 { d / vb.abs() } else if d == 0.0 { 0.0 } else { f64::INFINITY };
        rep.max_abs = rep.max_abs.max(d);
        rep.max_rel = rep.max_rel.max(r);
        rep.mean_abs += d;
        rep.mean_rel += r;
    }
    rep.mean_abs /= a.len() as f64;
    rep.mean_rel /= a.len() as f64;
    Ok(rep)
}

/// Reads column `column` of a CSV with a `t` column.
pub fn read_csv_column(path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let field = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::config("compare.column", format!("{} has no column `{name}`", path.display())))
    };
    let (ti, vi) = (field("t")?, field(column)?);
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            let num = |i: usize| {
                cols.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::GridMismatch(format!("bad row `{l}` in {}", path.display())))
            };
            Ok((num(ti)?, num(vi)?))
        })
        .collect()
}

/// Ensemble mean over runs surviving to `t_max` against the simple and
/// compact pairwise models started from the matching expected state.
pub struct ModelComparison {
    pub times: Vec<f64>,
    pub simulation: Vec<f64>,
    pub pairwise: Vec<f64>,
    pub compact: Option<Vec<f64>>,
    pub n_surviving: usize,
}

pub fn simulation_vs_ode(
    params: &ModelParams,
    init: &InitSpec,
    t_max: f64,
    sample_dt: f64,
    n_runs: usize,
    seed: u64,
    ode_opts: &OdeOptions,
) -> Result<ModelComparison> {
    let spec = EnsembleSpec {
        params: *params,
        init: init.clone(),
        sim: SimConfig { t_max, sample_dt, stop_on_extinction: true, track_components: false },
        n_runs,
        base_seed: seed,
    };
    let series = ensemble::ensemble_map(&spec, |_, ts| ts.died_out.is_none().then(|| ts.prevalence()))?;
    let survivors: Vec<Vec<f64>> = series.into_iter().flatten().collect();
    if survivors.is_empty() {
        return Err(Error::InsufficientData("no run survived to t_max".into()));
    }
    let len = survivors[0].len();
    let simulation: Vec<f64> =
        (0..len).map(|k| survivors.iter().map(|s| s[k]).sum::<f64>() / survivors.len() as f64).collect();
    let times: Vec<f64> = (0..len).map(|k| k as f64 * sample_dt).collect();
    let (p, i0) = match (&init.edges, &init.infected) {
        (EdgeInit::ErdosRenyi(p), InitialInfected::Count(c)) => (*p, *c as f64),
        (EdgeInit::Complete, InitialInfected::Count(c)) => (1.0, *c as f64),
        _ => return Err(Error::config("init", "comparison needs an ER or complete start with a count")),
    };
    let y0 = PairwiseState::erdos_renyi(params.n_nodes, p, i0);
    let pw = pairwise::integrate(params, &y0, &times, ode_opts)?;
    let compact = CompactState::erdos_renyi(params.n_nodes, p, i0)
        .and_then(|c0| compact::integrate(params, &c0, &times, ode_opts))
        .ok()
        .map(|tr| tr.states.iter().map(|y| y[params.n_nodes..2 * params.n_nodes].iter().sum()).collect());
    Ok(ModelComparison {
        times,
        simulation,
        pairwise: pw.component(0),
        compact,
        n_surviving: survivors.len(),
    })
}

fn run_compare(cfg: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let (from, to) = cfg.compare_window;
    if let (Some(pa), Some(pb)) = (&cfg.compare_a, &cfg.compare_b) {
        let a = read_csv_column(pa, &cfg.compare_column)?;
        let bb = read_csv_column(pb, &cfg.compare_column)?;
        let rep = compare_series(&a, &bb, from, to)?;
        return b.write_json("compare.json", &rep);
    }
    let init = cfg.init_spec(&cfg.params)?;
    let t_max = cfg.t_max.unwrap_or(20.0);
    let cmp = simulation_vs_ode(
        &cfg.params,
        &init,
        t_max,
        cfg.sample_dt.unwrap_or(0.1),
        cfg.runs.unwrap_or(500),
        cfg.seed,
        &cfg.ode,
    )?;
    b.write_with("compare.csv", |w| {
        use std::io::Write;
        writeln!(w, "t,simulation,pairwise,compact")?;
        for k in 0..cmp.times.len() {
            let c = cmp.compact.as_ref().map(|v| v[k].to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", sim::fmt_time(cmp.times[k]), cmp.simulation[k], cmp.pairwise[k], c)?;
        }
        Ok(())
    })?;
    let zip = |v: &[f64]| -> Vec<(f64, f64)> { cmp.times.iter().copied().zip(v.iter().copied()).collect() };
    let sim_pts = zip(&cmp.simulation);
    let pw = compare_series(&sim_pts, &zip(&cmp.pairwise), from.max(0.0), to.min(t_max))?;
    let cp = cmp.compact.as_ref().map(|c| compare_series(&sim_pts, &zip(c), from.max(0.0), to.min(t_max))).transpose()?;
    b.write_json(
        "compare.json",
        &serde_json::json!({
            "n_surviving": cmp.n_surviving,
            "simulation_vs_pairwise": pw,
            "simulation_vs_compact": cp,
        }),
    )
}
