//! Command-line experiments and their file outputs.
//!
//! Every CSV starts with a `# schema=<name> version=<n>` line, numbers use 17
//! significant digits, and each file is written to a temporary name in the output
//! directory and renamed into place. Outputs depend only on the configuration
//! digest and the seed, never on the worker count.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::array::{make_grid, SpatialFrequency};
use crate::beamform::beampattern;
use crate::clutter::{psd, stability_report, StabilityReport};
use crate::error::{Error, Result};
use crate::sim::{aggregate, false_alarm_trials, run_episodes, Aggregate, EpisodeContext, EpisodeTrace, Policy, Scenario};
use config::{parse_config, LoadedConfig};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CSV_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cogradar", version, about = "Cognitive MIMO radar detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunOpts {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the configured Monte Carlo run count.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = default_threads())]
    pub threads: usize,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agent and omnidirectional Monte Carlo on one scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: RunOpts,
        /// Dump run 0's Q-table every this many pulses.
        #[arg(long, default_value_t = 10)]
        q_every: usize,
    },
    /// Detection probability against array size (equal transmit and receive sides).
    SweepN {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long, value_delimiter = ',', default_values_t = [3usize, 4, 5, 6, 7, 8, 9, 10])]
        sides: Vec<usize>,
    },
    /// Detection probability of one target against its SNR.
    SweepSnr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_values_t = [-10.0f64, -9.0, -8.0, -7.0, -6.0, -5.0])]
        snrs: Vec<f64>,
        /// Index of the swept target in the configuration.
        #[arg(long, default_value_t = 0)]
        target: usize,
    },
    /// Disturbance spectrum on a regular grid, plus target markers.
    Psd {
        #[command(flatten)]
        common: Common,
        /// Points per axis over [−0.5, 0.5).
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
    /// Empirical false-alarm rate from target-free scans.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: RunOpts,
        /// Bin-level trials; rounded up to whole pulses.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Overrides the configured false-alarm probability.
        #[arg(long)]
        p_fa: Option<f64>,
    },
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

/// Runs one command and returns the files it wrote.
pub fn execute(cmd: &Command) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Run { common, opts, q_every } => cmd_run(common, opts, *q_every),
        Command::SweepN { common, opts, sides } => cmd_sweep_n(common, opts, sides),
        Command::SweepSnr {
            common,
            opts,
            snrs,
            target,
        } => cmd_sweep_snr(common, opts, snrs, *target),
        Command::Psd { common, resolution } => cmd_psd(common, *resolution),
        Command::Calibrate {
            common,
            opts,
            trials,
            p_fa,
        } => cmd_calibrate(common, opts, *trials, *p_fa),
    }
}

fn load(common: &Common, runs: Option<usize>) -> Result<LoadedConfig> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(r) = runs {
        if r == 0 {
            return Err(Error::Config {
                key: "--runs".into(),
                line: None,
                message: "must be at least 1".into(),
            });
        }
        cfg.file.run.mc_runs = r;
        cfg.scenario.mc_runs = r;
    }
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    Ok(cfg)
}

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Versioned CSV text: schema line, column header, rows.
pub fn csv(schema: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("# schema={schema} version={CSV_VERSION}\n{}\n", header.join(","));
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

/// Writes `contents` to `dir/name` through a temporary file and rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub artifact_version: &'static str,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub mc_runs: usize,
    /// Seconds since the epoch: `SOURCE_DATE_EPOCH` when set, else the wall clock.
    pub created_unix: u64,
    pub disturbance_power: Option<f64>,
    pub stability: StabilityReport,
    pub outputs: Vec<OutputFile>,
}

fn created_unix() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<(PathBuf, String)>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Self { dir, written: Vec::new() }
    }

    fn put(&mut self, name: &str, contents: String) -> Result<()> {
        let path = write_atomic(self.dir, name, &contents)?;
        let hash = Sha256::digest(contents.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        self.written.push((path, hash));
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &LoadedConfig, seed: u64, power: Option<f64>) -> Result<Vec<PathBuf>> {
        let outputs = self
            .written
            .iter()
            .map(|(p, h)| OutputFile {
                name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256: h.clone(),
            })
            .collect();
        let manifest = RunManifest {
            schema: "cogradar.manifest",
            artifact_version: ARTIFACT_VERSION,
            command: command.to_string(),
            config_digest: cfg.file.digest()?,
            seed,
            mc_runs: cfg.scenario.mc_runs,
            created_unix: created_unix(),
            disturbance_power: power,
            stability: stability_report(&cfg.scenario.disturbance),
            outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::validation(format!("cannot serialize manifest: {e}")))?;
        self.put("manifest.json", text + "\n")?;
        Ok(self.written.into_iter().map(|(p, _)| p).collect())
    }
}

fn both(ctx: &EpisodeContext<f64>, opts: &RunOpts, q_every: Option<usize>) -> Result<(Vec<EpisodeTrace<f64>>, Aggregate, Aggregate)> {
    let runs = ctx.scenario.mc_runs;
    let rl_traces = run_episodes(ctx, Policy::Agent, 0, runs, opts.threads, q_every)?;
    let rl = aggregate(ctx, Policy::Agent, &rl_traces)?;
    let om_traces = run_episodes(ctx, Policy::Omni, 0, runs, opts.threads, None)?;
    let om = aggregate(ctx, Policy::Omni, &om_traces)?;
    Ok((rl_traces, rl, om))
}

fn cube_rows(sc: &Scenario<f64>, agg: &Aggregate) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(agg.k_pulses * agg.bins);
    for k in 0..agg.k_pulses {
        for (b, bin) in sc.grid.bins().iter().enumerate() {
            rows.push(vec![
                (k + 1).to_string(),
                bin.l.to_string(),
                bin.i.to_string(),
                num(bin.freq.nu_x),
                num(bin.freq.nu_y),
                num(agg.frequency(k, b)),
            ]);
        }
    }
    rows
}

pub fn cmd_run(common: &Common, opts: &RunOpts, q_every: usize) -> Result<Vec<PathBuf>> {
    let cfg = load(common, opts.runs)?;
    let sc = &cfg.scenario;
    let ctx = EpisodeContext::new(sc.clone(), opts.seed)?;
    let (traces, rl, om) = both(&ctx, opts, (q_every > 0).then_some(q_every))?;
    let mut w = Writer::new(&common.out);

    let cube_header = ["step", "l", "i", "nu_x", "nu_y", "freq"];
    w.put("cube_rl.csv", csv("cogradar.detection_cube", &cube_header, &cube_rows(sc, &rl)))?;
    w.put("cube_omni.csv", csv("cogradar.detection_cube", &cube_header, &cube_rows(sc, &om)))?;

    let summary: Vec<Vec<String>> = sc
        .targets
        .iter()
        .enumerate()
        .map(|(t, tg)| {
            vec![
                t.to_string(),
                num(tg.freq.nu_x),
                num(tg.freq.nu_y),
                num(tg.snr_db),
                num(rl.target_pd(t)),
                num(om.target_pd(t)),
            ]
        })
        .collect();
    w.put(
        "pd_summary.csv",
        csv("cogradar.pd_summary", &["target", "nu_x", "nu_y", "snr_db", "pd_rl", "pd_omni"], &summary),
    )?;

    let mut curves = Vec::new();
    for t in 0..sc.targets.len() {
        let (a, b) = (rl.target_curve(t), om.target_curve(t));
        for k in 0..sc.k_pulses {
            curves.push(vec![(k + 1).to_string(), t.to_string(), num(a[k]), num(b[k])]);
        }
    }
    w.put("pd_curves.csv", csv("cogradar.pd_curves", &["step", "target", "pd_rl", "pd_omni"], &curves))?;

    let reward: Vec<Vec<String>> = rl
        .mean_reward_curve()
        .iter()
        .enumerate()
        .map(|(k, r)| vec![(k + 1).to_string(), num(*r)])
        .collect();
    w.put("reward_curve.csv", csv("cogradar.reward_curve", &["step", "mean_reward"], &reward))?;

    let first = &traces[0];
    let mut q_rows = Vec::new();
    let mut tables: Vec<(usize, &crate::agent::QTable<f64>)> = first.q_checkpoints.iter().map(|(k, q)| (*k, q)).collect();
    if let Some(q) = &first.q_final {
        if tables.last().map(|t| t.0) != Some(sc.k_pulses) {
            tables.push((sc.k_pulses, q));
        }
    }
    for (k, q) in tables {
        for s in 0..=q.m_max() {
            for a in 0..=q.m_max() {
                q_rows.push(vec![k.to_string(), s.to_string(), a.to_string(), num(q.get(s, a))]);
            }
        }
    }
    w.put("q_table.csv", csv("cogradar.q_table", &["step", "state", "action", "value"], &q_rows))?;

    let last = first.steps.last().map(|s| s.weights.clone()).unwrap_or(crate::sim::WeightsDescriptor::Omni);
    let wts = ctx.weights_for(&last)?;
    let bp: Vec<Vec<String>> = sc
        .grid
        .bins()
        .iter()
        .map(|b| {
            vec![
                b.l.to_string(),
                b.i.to_string(),
                num(b.freq.nu_x),
                num(b.freq.nu_y),
                num(beampattern(&wts, b.freq, &sc.geometry)),
            ]
        })
        .collect();
    w.put("beampattern.csv", csv("cogradar.beampattern", &["l", "i", "nu_x", "nu_y", "gain"], &bp))?;

    let trace_rows: Vec<Vec<String>> = first
        .steps
        .iter()
        .enumerate()
        .map(|(k, st)| {
            vec![
                (k + 1).to_string(),
                st.state.to_string(),
                st.action.to_string(),
                num(st.reward),
                st.detections.to_string(),
                num(st.max_lambda),
            ]
        })
        .collect();
    w.put(
        "trace_run0.csv",
        csv("cogradar.trace", &["step", "state", "action", "reward", "detections", "max_lambda"], &trace_rows),
    )?;

    w.finish("run", &cfg, opts.seed, Some(ctx.disturbance_power))
}

pub fn cmd_sweep_n(common: &Common, opts: &RunOpts, sides: &[usize]) -> Result<Vec<PathBuf>> {
    let cfg = load(common, opts.runs)?;
    let base = &cfg.scenario;
    let mut rows = Vec::new();
    for &side in sides {
        let mut sc = base.clone();
        sc.geometry = crate::array::ArrayGeometry::new(side, side, base.geometry.spacing_wavelengths)?;
        let ctx = EpisodeContext::new(sc, opts.seed)?;
        let (_, rl, om) = both(&ctx, opts, None)?;
        for (name, agg) in [("rl", &rl), ("omni", &om)] {
            let mut r = vec![side.to_string(), ctx.scenario.geometry.n().to_string(), name.to_string()];
            r.extend((0..ctx.target_bins.len()).map(|t| num(agg.target_pd(t))));
            rows.push(r);
        }
    }
    let pd_cols: Vec<String> = (0..base.targets.len()).map(|t| format!("pd_t{t}")).collect();
    let mut header = vec!["side", "n", "method"];
    header.extend(pd_cols.iter().map(String::as_str));
    let mut w = Writer::new(&common.out);
    w.put("pd_vs_n.csv", csv("cogradar.pd_vs_n", &header, &rows))?;
    w.finish("sweep-n", &cfg, opts.seed, None)
}

pub fn cmd_sweep_snr(common: &Common, opts: &RunOpts, snrs: &[f64], target: usize) -> Result<Vec<PathBuf>> {
    let cfg = load(common, opts.runs)?;
    if target >= cfg.scenario.targets.len() {
        return Err(Error::Config {
            key: "--target".into(),
            line: None,
            message: format!("configuration has {} targets", cfg.scenario.targets.len()),
        });
    }
    let base = EpisodeContext::new(cfg.scenario.clone(), opts.seed)?;
    let mut rows = Vec::new();
    for &snr in snrs {
        let mut sc = cfg.scenario.clone();
        sc.targets[target].snr_db = snr;
        let ctx = EpisodeContext::with_power(sc, opts.seed, base.disturbance_power)?;
        let (_, rl, om) = both(&ctx, opts, None)?;
        for (name, agg) in [("rl", &rl), ("omni", &om)] {
            rows.push(vec![num(snr), name.to_string(), num(agg.target_pd(target))]);
        }
    }
    let mut w = Writer::new(&common.out);
    w.put("pd_vs_snr.csv", csv("cogradar.pd_vs_snr", &["snr_db", "method", "pd"], &rows))?;
    w.finish("sweep-snr", &cfg, opts.seed, Some(base.disturbance_power))
}

pub fn cmd_psd(common: &Common, resolution: usize) -> Result<Vec<PathBuf>> {
    if resolution == 0 {
        return Err(Error::Config {
            key: "--resolution".into(),
            line: None,
            message: "must be at least 1".into(),
        });
    }
    let cfg = load(common, None)?;
    let sc = &cfg.scenario;
    let step = 1.0 / resolution as f64;
    let g = make_grid(resolution, resolution, -0.5, step)?;
    let rows: Vec<Vec<String>> = g
        .bins()
        .iter()
        .map(|b| {
            let v = psd(&sc.disturbance, b.freq);
            vec![
                num(b.freq.nu_x),
                num(b.freq.nu_y),
                num(v.value),
                num(10.0 * v.value.log10()),
                u8::from(v.singular).to_string(),
            ]
        })
        .collect();
    let markers: Vec<Vec<String>> = sc
        .targets
        .iter()
        .enumerate()
        .map(|(t, tg)| {
            let v = psd(&sc.disturbance, SpatialFrequency::new(tg.freq.nu_x, tg.freq.nu_y));
            vec![t.to_string(), num(tg.freq.nu_x), num(tg.freq.nu_y), num(tg.snr_db), num(10.0 * v.value.log10())]
        })
        .collect();
    let mut w = Writer::new(&common.out);
    w.put("psd.csv", csv("cogradar.psd", &["nu_x", "nu_y", "psd", "psd_db", "singular"], &rows))?;
    w.put(
        "targets.csv",
        csv("cogradar.targets", &["target", "nu_x", "nu_y", "snr_db", "psd_db"], &markers),
    )?;
    w.finish("psd", &cfg, 0, None)
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn cmd_calibrate(common: &Common, opts: &RunOpts, trials: u64, p_fa: Option<f64>) -> Result<Vec<PathBuf>> {
    let mut cfg = load(common, None)?;
    if let Some(p) = p_fa {
        cfg.file.detector.p_fa = p;
        cfg.scenario.p_fa = p;
    }
    let mut sc = cfg.scenario.clone();
    sc.targets.clear();
    let ctx = EpisodeContext::with_power(sc, opts.seed, 1.0).map_err(|e| match e {
        Error::Domain(m) if p_fa.is_some() => Error::Config {
            key: "--p-fa".into(),
            line: None,
            message: m,
        },
        e => e,
    })?;
    let bins = ctx.scenario.grid.len() as u64;
    let pulses = trials.div_ceil(bins).max(1) as usize;
    let (n, alarms) = false_alarm_trials(&ctx, pulses, opts.threads)?;
    let p = ctx.scenario.p_fa;
    let rate = alarms as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let (lo, hi) = wilson_interval(alarms, n, 1.959_963_984_540_054);
    let rows = vec![vec![
        num(p),
        n.to_string(),
        alarms.to_string(),
        num(rate),
        num((rate - p) / sigma),
        num(lo),
        num(hi),
    ]];
    let mut w = Writer::new(&common.out);
    w.put(
        "calibration.csv",
        csv(
            "cogradar.calibration",
            &["p_fa", "trials", "false_alarms", "rate", "z_score", "ci95_low", "ci95_high"],
            &rows,
        ),
    )?;
    w.finish("calibrate", &cfg, opts.seed, None)
}
