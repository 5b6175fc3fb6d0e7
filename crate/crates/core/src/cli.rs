//! Command-line front end.
//!
//! Configuration is layered: built-in defaults, then an optional
//! `key=value` file, then command-line flags (which use the same names as
//! the keys). Each command writes its files into `out`; if a command fails,
//! the files it already wrote are removed.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::analysis::{
    density, fringe_period, sweep_k_vs_delta, to_position_space, DensityField, FringeAxis,
};
use crate::dynamics::{entanglement_trace, log_times};
use crate::error::{Error, Result};
use crate::io::{self, fmt_f64, parse_key_values, parse_list, write_csv, Cell};
use crate::model::{
    build_grid_with, gaussian_initial, normalize, BipartiteAmplitude, ModelParams, MomentumGrid,
    DEFAULT_GRID_EXTENT, DEFAULT_GRID_POINTS,
};
use crate::schmidt::{self, purity_oracle};
use crate::steady::{steady_state_bell, steady_state_pairwise_with, PairwiseForm, DEFAULT_SERIES_TOL};

/// Environment variable consulted for the thread count when the config has none.
pub const THREADS_ENV: &str = "PAIRSCATTER_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Keys accepted in config files and as flags.
const KNOWN_KEYS: &[&str] = &[
    "sigma",
    "delta",
    "kc",
    "gamma",
    "em",
    "detuning",
    "grid-n",
    "grid-extent",
    "allow-under-resolved",
    "pairwise-form",
    "series-tol",
    "out",
    "downsample",
    "threads",
    "times",
    "deltas",
    "sigmas",
    "em-list",
    "input",
    "modes",
];

const DEFAULT_TIMES: &str = "log:1:1e5:31";
const DEFAULT_DELTAS: &str = "0.1,0.125,0.15,0.2,0.25,0.3,0.4,0.5";
const DEFAULT_SIGMAS: &str = "0.2,0.3,0.5,1.0";
const DEFAULT_EM_LIST: &str = "0,1e-4,5e-4,2e-3";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Pairwise and Bell-like steady states with their spectra.
    Steady,
    /// Schmidt number versus coupling time.
    Evolve,
    /// Decompose a state file.
    Schmidt,
    /// Schmidt number over a sigma x delta grid.
    Sweep,
    /// Full figure data set.
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Evolve => "evolve",
            Command::Schmidt => "schmidt",
            Command::Sweep => "sweep",
            Command::Figures => "figures",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pairscatter", version, about = "Two-atom momentum entanglement from a single scattered photon")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Pairwise and Bell-like steady states with their spectra.
    Steady(Flags),
    /// Schmidt number versus coupling time.
    Evolve(Flags),
    /// Decompose a state file.
    Schmidt(Flags),
    /// Schmidt number over a sigma x delta grid.
    Sweep(Flags),
    /// Full figure data set.
    Figures(Flags),
}

impl CliCommand {
    fn split(self) -> (Command, Flags) {
        match self {
            CliCommand::Steady(f) => (Command::Steady, f),
            CliCommand::Evolve(f) => (Command::Evolve, f),
            CliCommand::Schmidt(f) => (Command::Schmidt, f),
            CliCommand::Sweep(f) => (Command::Sweep, f),
            CliCommand::Figures(f) => (Command::Figures, f),
        }
    }
}

#[derive(Debug, Default, clap::Args)]
pub struct Flags {
    /// Config file of key=value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub kc: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub em: Option<String>,
    #[arg(long)]
    pub detuning: Option<String>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<String>,
    #[arg(long = "grid-extent")]
    pub grid_extent: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub downsample: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    /// Comma list, or `log:START:STOP:COUNT`.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub deltas: Option<String>,
    #[arg(long)]
    pub sigmas: Option<String>,
    #[arg(long = "em-list")]
    pub em_list: Option<String>,
    /// State file (stem, `.meta` or `.dat`) for `schmidt`.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub modes: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs: [(&'static str, &Option<String>); 18] = [
            ("sigma", &self.sigma),
            ("delta", &self.delta),
            ("kc", &self.kc),
            ("gamma", &self.gamma),
            ("em", &self.em),
            ("detuning", &self.detuning),
            ("grid-n", &self.grid_n),
            ("grid-extent", &self.grid_extent),
            ("out", &self.out),
            ("downsample", &self.downsample),
            ("threads", &self.threads),
            ("times", &self.times),
            ("deltas", &self.deltas),
            ("sigmas", &self.sigmas),
            ("em-list", &self.em_list),
            ("input", &self.input),
            ("modes", &self.modes),
            ("config", &None),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }
}

/// Fully validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid_n: usize,
    pub grid_extent: f64,
    pub allow_under_resolved: bool,
    pub pairwise_form: String,
    pub series_tol: f64,
    pub out: PathBuf,
    pub downsample: usize,
    pub threads: Option<usize>,
    pub times: Vec<f64>,
    pub deltas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub em_list: Vec<f64>,
    pub input: Option<PathBuf>,
    pub modes: usize,
    /// The merged key=value map the config was built from.
    pub raw: BTreeMap<String, String>,
}

fn cfg_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number"))),
    }
}

fn cfg_usize(map: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a non-negative integer"))),
    }
}

fn cfg_bool(map: &BTreeMap<String, String>, key: &str) -> Result<bool> {
    match map.get(key).map(String::as_str) {
        None | Some("false") | Some("0") => Ok(false),
        Some("true") | Some("1") => Ok(true),
        Some(v) => Err(Error::Config(format!("`{key}`: `{v}` is not a boolean"))),
    }
}

/// Comma list or `log:START:STOP:COUNT`.
pub fn parse_times(raw: &str) -> Result<Vec<f64>> {
    let raw = raw.trim();
    if let Some(spec) = raw.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config("times: expected log:START:STOP:COUNT".into()));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Config("times: bad START".into()))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Config("times: bad STOP".into()))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::Config("times: bad COUNT".into()))?;
        return log_times(start, stop, count).map_err(|e| Error::Config(e.to_string()));
    }
    parse_list(raw)
}

impl RunConfig {
    /// Builds a config from a merged key=value map, rejecting unknown keys.
    pub fn from_map(map: BTreeMap<String, String>) -> Result<Self> {
        if let Some(bad) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{bad}`")));
        }
        let base = ModelParams::default();
        let params = ModelParams {
            k_c: cfg_f64(&map, "kc", base.k_c)?,
            sigma: cfg_f64(&map, "sigma", base.sigma)?,
            delta: cfg_f64(&map, "delta", base.delta)?,
            gamma_rate: cfg_f64(&map, "gamma", base.gamma_rate)?,
            em_over_hbar: cfg_f64(&map, "em", base.em_over_hbar)?,
            detuning: cfg_f64(&map, "detuning", base.detuning)?,
            t: 0.0,
        };
        params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let grid_n = cfg_usize(&map, "grid-n", DEFAULT_GRID_POINTS)?;
        let grid_extent = cfg_f64(&map, "grid-extent", DEFAULT_GRID_EXTENT * params.k_c)?;
        let pairwise_form = map
            .get("pairwise-form")
            .cloned()
            .unwrap_or_else(|| "order-resolved".into());
        if !matches!(pairwise_form.as_str(), "order-resolved" | "smooth-envelope") {
            return Err(Error::Config(format!(
                "pairwise-form: `{pairwise_form}` is not order-resolved or smooth-envelope"
            )));
        }
        let series_tol = cfg_f64(&map, "series-tol", DEFAULT_SERIES_TOL)?;
        if !(series_tol > 0.0 && series_tol < 1.0) {
            return Err(Error::Config("series-tol must lie in (0, 1)".into()));
        }
        let downsample = cfg_usize(&map, "downsample", 4)?;
        if downsample == 0 {
            return Err(Error::Config("downsample must be positive".into()));
        }
        let threads = match map.get("threads") {
            Some(_) => Some(cfg_usize(&map, "threads", 0)?),
            None => None,
        };
        let times = parse_times(map.get("times").map_or(DEFAULT_TIMES, String::as_str))?;
        let deltas = parse_list(map.get("deltas").map_or(DEFAULT_DELTAS, String::as_str))?;
        let sigmas = parse_list(map.get("sigmas").map_or(DEFAULT_SIGMAS, String::as_str))?;
        let em_list = parse_list(map.get("em-list").map_or(DEFAULT_EM_LIST, String::as_str))?;
        Ok(RunConfig {
            params,
            grid_n,
            grid_extent,
            allow_under_resolved: cfg_bool(&map, "allow-under-resolved")?,
            pairwise_form,
            series_tol,
            out: PathBuf::from(map.get("out").map_or("out", String::as_str)),
            downsample,
            threads,
            times,
            deltas,
            sigmas,
            em_list,
            input: map.get("input").map(PathBuf::from),
            modes: cfg_usize(&map, "modes", 8)?,
            raw: map,
        })
    }

    /// Defaults, then `file`, then `overrides`.
    pub fn load(file: Option<&Path>, overrides: &[(&str, &String)]) -> Result<Self> {
        let mut map = match file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                parse_key_values(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            map.insert((*k).to_string(), (*v).clone());
        }
        Self::from_map(map)
    }

    /// Thread count: config key first, then the environment, else all cores.
    pub fn resolved_threads(&self) -> Result<usize> {
        if let Some(t) = self.threads {
            return Ok(t);
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}: `{v}` is not an integer"))),
            Err(_) => Ok(0),
        }
    }

    /// One-line `key=value` echo of the merged configuration.
    pub fn params_line(&self) -> String {
        let mut parts: Vec<String> = io::params_echo(&self.params)
            .into_iter()
            .filter(|(k, _)| *k != "t")
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        parts.push(format!("grid-n={}", self.grid_n));
        parts.push(format!("grid-extent={}", fmt_f64(self.grid_extent)));
        parts.push(format!("pairwise-form={}", self.pairwise_form));
        parts.join(" ")
    }

    fn grid_for(&self, params: &ModelParams) -> Result<MomentumGrid> {
        build_grid_with(params, self.grid_n, self.grid_extent, self.allow_under_resolved)
    }

    fn form_for(&self, params: &ModelParams) -> Result<PairwiseForm> {
        Ok(match self.pairwise_form.as_str() {
            "smooth-envelope" => PairwiseForm::SmoothEnvelope(
                crate::steady::truncation_order(params, self.series_tol)?,
            ),
            _ => PairwiseForm::OrderResolved,
        })
    }

    fn with_sigma(&self, sigma: f64) -> ModelParams {
        ModelParams {
            sigma,
            ..self.params
        }
    }
}

/// Files written by a command, removed again if the command fails.
#[derive(Debug, Default)]
struct Outputs {
    files: Vec<PathBuf>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    fn cleanup(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Short `key=value` summary lines for stdout.
    pub summary: Vec<String>,
}

/// Runs one command. On failure, every file written so far is removed.
pub fn run(command: Command, config: &RunConfig) -> Result<RunReport> {
    fs::create_dir_all(&config.out)?;
    let mut outputs = Outputs::default();
    let mut summary = Vec::new();
    let result = match command {
        Command::Steady => run_steady(config, &mut outputs, &mut summary),
        Command::Evolve => run_evolve(config, &mut outputs, &mut summary),
        Command::Schmidt => run_schmidt(config, &mut outputs, &mut summary),
        Command::Sweep => run_sweep(config, &mut outputs, &mut summary),
        Command::Figures => run_figures(config, &mut outputs, &mut summary),
    };
    match result {
        Ok(()) => Ok(RunReport {
            files: outputs.files,
            summary,
        }),
        Err(e) => {
            outputs.cleanup();
            Err(e)
        }
    }
}

fn spectrum_rows(spec: &schmidt::SchmidtSpectrum) -> Vec<Vec<Cell>> {
    spec.lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| vec![Cell::Int(i as i64), Cell::Float(l)])
        .collect()
}

fn write_spectrum(
    path: PathBuf,
    params_line: &str,
    spec: &schmidt::SchmidtSpectrum,
    outputs: &mut Outputs,
) -> Result<()> {
    let line = format!(
        "{params_line} k_number={} entropy={}",
        fmt_f64(spec.k_number),
        fmt_f64(spec.entropy)
    );
    write_csv(&path, &line, &["index", "lambda"], spectrum_rows(spec))?;
    outputs.add(path);
    Ok(())
}

fn write_state_tracked(
    config: &RunConfig,
    name: &str,
    state: &BipartiteAmplitude,
    params: &ModelParams,
    extra: &[(&str, String)],
    outputs: &mut Outputs,
) -> Result<()> {
    let paths = io::write_state(&config.out, name, state, params, extra)?;
    paths.into_iter().for_each(|p| outputs.add(p));
    Ok(())
}

fn run_steady(config: &RunConfig, outputs: &mut Outputs, summary: &mut Vec<String>) -> Result<()> {
    let params = config.params;
    let grid = config.grid_for(&params)?;
    let line = config.params_line();
    let states = [
        ("pairwise", steady_state_pairwise_with(&params, &grid, config.form_for(&params)?)?),
        ("bell", steady_state_bell(&params, &grid)?),
    ];
    for (name, state) in &states {
        let spec = schmidt::spectrum(state)?;
        let purity = purity_oracle(state)?;
        let extra = [
            ("k_number", fmt_f64(spec.k_number)),
            ("entropy", fmt_f64(spec.entropy)),
            ("purity_k", fmt_f64(purity)),
            ("envelope_truncated", grid.envelope_truncated().to_string()),
        ];
        write_state_tracked(config, name, state, &params, &extra, outputs)?;
        write_spectrum(
            config.out.join(format!("spectrum_{name}.csv")),
            &line,
            &spec,
            outputs,
        )?;
        summary.push(format!(
            "{name}: k_number={} entropy={}",
            fmt_f64(spec.k_number),
            fmt_f64(spec.entropy)
        ));
    }
    Ok(())
}

fn run_evolve(config: &RunConfig, outputs: &mut Outputs, summary: &mut Vec<String>) -> Result<()> {
    if config.times.is_empty() {
        return Err(Error::Config("evolve needs a non-empty time list".into()));
    }
    let grid = config.grid_for(&config.params)?;
    let trace = entanglement_trace(&config.params, &grid, &config.times)?;
    let path = config.out.join("trace.csv");
    write_csv(
        &path,
        &config.params_line(),
        &["t", "k_number"],
        trace
            .samples
            .iter()
            .map(|s| vec![Cell::Float(s.t), Cell::Float(s.k_value)]),
    )?;
    outputs.add(path);
    summary.push(format!(
        "trace: samples={} final_k={} max_k={}",
        trace.samples.len(),
        fmt_f64(trace.final_k()),
        fmt_f64(trace.max_k())
    ));
    Ok(())
}

fn run_schmidt(config: &RunConfig, outputs: &mut Outputs, summary: &mut Vec<String>) -> Result<()> {
    let input = config
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("schmidt needs `input` (a state file)".into()))?;
    let state = io::read_state(input)?;
    let (spec, modes) = schmidt::decompose(&state.amplitude)?;
    let source = input.display().to_string();
    let line = format!("input={source}");
    write_spectrum(config.out.join("spectrum.csv"), &line, &spec, outputs)?;

    let count = config.modes.min(modes.count());
    let axis = state
        .amplitude
        .grid()
        .axis_points(state.amplitude.representation());
    let mut columns: Vec<String> = vec!["coordinate".into()];
    for n in 0..count {
        columns.extend([
            format!("a{n}_re"),
            format!("a{n}_im"),
            format!("b{n}_re"),
            format!("b{n}_im"),
        ]);
    }
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = axis.iter().enumerate().map(|(i, &x)| {
        let mut row = vec![Cell::Float(x)];
        for n in 0..count {
            let a: Complex64 = modes.modes_a[[i, n]];
            let b: Complex64 = modes.modes_b[[i, n]];
            row.extend([a.re, a.im, b.re, b.im].map(Cell::Float));
        }
        row
    });
    let modes_path = config.out.join("modes.csv");
    write_csv(&modes_path, &line, &column_refs, rows)?;
    outputs.add(modes_path);

    let meta_path = config.out.join("schmidt.meta");
    fs::write(
        &meta_path,
        format!(
            "input={source}\nk_number={}\nentropy={}\nrank={}\n",
            fmt_f64(spec.k_number),
            fmt_f64(spec.entropy),
            spec.rank()
        ),
    )?;
    outputs.add(meta_path);
    summary.push(format!(
        "schmidt: k_number={} entropy={} rank={}",
        fmt_f64(spec.k_number),
        fmt_f64(spec.entropy),
        spec.rank()
    ));
    Ok(())
}

fn write_sweep(config: &RunConfig, path: PathBuf, outputs: &mut Outputs) -> Result<usize> {
    // the lattice is validated per row against that row's sigma
    let grid = MomentumGrid::from_raw(config.grid_n, config.grid_extent)?;
    let table = sweep_k_vs_delta(&config.params, &config.deltas, &config.sigmas, &grid)?;
    write_csv(
        &path,
        &config.params_line(),
        &["sigma", "delta", "inv_delta", "k_numeric", "k_exact", "k_approx"],
        table.rows.iter().map(|r| {
            vec![
                Cell::Float(r.sigma),
                Cell::Float(r.delta),
                Cell::Float(1.0 / r.delta),
                Cell::Float(r.k_numeric),
                Cell::Float(r.k_exact),
                Cell::Float(r.k_approx),
            ]
        }),
    )?;
    outputs.add(path);
    Ok(table.rows.len())
}

fn run_sweep(config: &RunConfig, outputs: &mut Outputs, summary: &mut Vec<String>) -> Result<()> {
    let rows = write_sweep(config, config.out.join("sweep.csv"), outputs)?;
    summary.push(format!("sweep: rows={rows}"));
    Ok(())
}

fn write_density(
    path: PathBuf,
    params_line: &str,
    field: &DensityField,
    labels: [&str; 2],
    outputs: &mut Outputs,
) -> Result<()> {
    let n = field.axis.len();
    let rows = (0..n).flat_map(|i| {
        (0..n).map(move |j| {
            vec![
                Cell::Float(field.axis[i]),
                Cell::Float(field.axis[j]),
                Cell::Float(field.values[[i, j]]),
            ]
        })
    });
    write_csv(&path, params_line, &[labels[0], labels[1], "density"], rows)?;
    outputs.add(path);
    Ok(())
}

fn run_figures(config: &RunConfig, outputs: &mut Outputs, summary: &mut Vec<String>) -> Result<()> {
    let out = &config.out;

    // spatial distribution of the pairwise steady state, plus the initial inset
    let params = config.params;
    let grid = config.grid_for(&params)?;
    let state = steady_state_pairwise_with(&params, &grid, config.form_for(&params)?)?;
    let position = to_position_space(&state)?;
    let period = fringe_period(&density(&position, 1)?, FringeAxis::Relative)?;
    let line = format!(
        "{} fringe_period={}",
        config.params_line(),
        fmt_f64(period)
    );
    write_state_tracked(
        config,
        "fig2_state",
        &state,
        &params,
        &[("fringe_period", fmt_f64(period))],
        outputs,
    )?;
    write_density(
        out.join("fig2_position_density.csv"),
        &line,
        &density(&position, config.downsample)?,
        ["x_a", "x_b"],
        outputs,
    )?;
    let initial = to_position_space(&normalize(gaussian_initial(&params, &grid)?)?)?;
    write_density(
        out.join("fig2_initial_position_density.csv"),
        &config.params_line(),
        &density(&initial, config.downsample)?,
        ["x_a", "x_b"],
        outputs,
    )?;
    summary.push(format!("fig2: fringe_period={}", fmt_f64(period)));

    // momentum densities for separated and overlapping wavepackets
    for (name, sigma) in [("fig3a", 0.3), ("fig3b", 1.0)] {
        let p = config.with_sigma(sigma);
        let g = config.grid_for(&p)?;
        let s = steady_state_pairwise_with(&p, &g, config.form_for(&p)?)?;
        write_state_tracked(config, &format!("{name}_state"), &s, &p, &[], outputs)?;
        let line = format!("{} sigma_override={}", config.params_line(), fmt_f64(sigma));
        write_density(
            out.join(format!("{name}_momentum_density.csv")),
            &line,
            &density(&s, config.downsample)?,
            ["q_a", "q_b"],
            outputs,
        )?;
    }

    let rows = write_sweep(config, out.join("fig4_sweep.csv"), outputs)?;
    summary.push(format!("fig4: rows={rows}"));

    // entanglement buildup for each energy mismatch
    if config.times.is_empty() {
        return Err(Error::Config("figures needs a non-empty time list".into()));
    }
    let mut trace_rows = Vec::new();
    for &em in &config.em_list {
        let p = ModelParams {
            em_over_hbar: em,
            ..params
        };
        let trace = entanglement_trace(&p, &grid, &config.times)?;
        for s in &trace.samples {
            trace_rows.push(vec![Cell::Float(em), Cell::Float(s.t), Cell::Float(s.k_value)]);
        }
        summary.push(format!(
            "fig5: em={} max_k={} final_k={}",
            fmt_f64(em),
            fmt_f64(trace.max_k()),
            fmt_f64(trace.final_k())
        ));
    }
    let path = out.join("fig5_trace.csv");
    write_csv(
        &path,
        &config.params_line(),
        &["em_over_hbar", "t", "k_number"],
        trace_rows,
    )?;
    outputs.add(path);
    Ok(())
}

/// Sets up the worker pool. Linear algebra runs sequentially inside each
/// task so results do not depend on the thread count.
pub fn init_threads(threads: usize) -> Result<()> {
    faer::set_global_parallelism(faer::Par::Seq);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Exit code for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Single-line machine-parseable error report.
pub fn error_line(command: &str, err: &Error) -> String {
    format!(
        "error command={command} kind={} exit={} message={:?}",
        err.kind(),
        exit_code(err),
        err.to_string()
    )
}

/// Entry point behind the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (command, flags) = cli.command.split();
    let config = match RunConfig::load(flags.config.as_deref(), &flags.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", error_line(command.name(), &e));
            return exit_code(&e);
        }
    };
    let threads = match config.resolved_threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}", error_line(command.name(), &e));
            return exit_code(&e);
        }
    };
    // a second initialization in the same process is harmless
    let _ = init_threads(threads);
    match run(command, &config) {
        Ok(report) => {
            // a closed stdout (e.g. piped into `head`) is not a failure
            let mut stdout = std::io::stdout().lock();
            for line in &report.summary {
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", error_line(command.name(), &e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults() {
        let c = RunConfig::from_map(BTreeMap::new()).unwrap();
        assert_eq!(c.params, ModelParams::default());
        assert_eq!(c.grid_n, 1024);
        assert_eq!(c.grid_extent, 24.0);
        assert_eq!(c.times.len(), 31);
        assert_eq!(c.em_list, vec![0.0, 1e-4, 5e-4, 2e-3]);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(matches!(
            RunConfig::from_map(map(&[("sigmaa", "0.2")])),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::from_map(map(&[("sigma", "abc")])).is_err());
        assert!(RunConfig::from_map(map(&[("sigma", "-1")])).is_err());
        assert!(RunConfig::from_map(map(&[("pairwise-form", "exact")])).is_err());
        assert!(RunConfig::from_map(map(&[("downsample", "0")])).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "sigma=0.3\ndelta=0.2 # comment\n").unwrap();
        let flag = "0.5".to_string();
        let c = RunConfig::load(Some(&path), &[("sigma", &flag)]).unwrap();
        assert_eq!(c.params.sigma, 0.5);
        assert_eq!(c.params.delta, 0.2);
    }

    #[test]
    fn times_syntax() {
        assert_eq!(parse_times("1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_times("log:1:100:3").unwrap(), vec![1.0, 10.000000000000002, 100.0]);
        assert!(parse_times("log:1:100").is_err());
        assert!(parse_times("").unwrap().is_empty());
    }

    #[test]
    fn thread_precedence() {
        let c = RunConfig::from_map(map(&[("threads", "3")])).unwrap();
        assert_eq!(c.resolved_threads().unwrap(), 3);
    }

    #[test]
    fn error_line_is_single_line() {
        let e = Error::Config("bad\nthing".into());
        let line = error_line("evolve", &e);
        assert!(!line.contains('\n'));
        assert!(line.starts_with("error command=evolve kind=config exit=2"));
    }
}
