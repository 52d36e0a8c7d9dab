//! `xxring` command line: simulations, analyses, sweeps, oracle checks and a
//! timing bench, writing CSV series plus a JSON run manifest.
//!
//! Exit codes: 0 success, 1 oracle failure or I/O error, 2 usage error,
//! 3 work budget exceeded.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use xxring::grid::uniform;
use xxring::io::{write_json, write_series, RunManifest};
use xxring::observables::{
    entropy_trace, population_field, populations as site_populations, relative_entropy_check,
    total_correlation,
};
use xxring::oracle::{available_oracles, compare_with, OracleKind};
use xxring::recurrence::{
    correlation_peak, detect_recurrences, lightcone_front, DEFAULT_ARRIVAL_THRESHOLD,
    DEFAULT_CONTRAST, DEFAULT_WINDOW,
};
use xxring::scaling::{
    fit_power_law, scaled_trajectories_with_budget, sweep_eta_with_budget, WorkBudget,
    DEFAULT_GRID_STEP, DEFAULT_SPAN_FACTOR,
};
use xxring::spectral::{
    default_q_max, phi_batch_fft, phi_bessel_series_vector, phi_direct, phi_infinite,
    RingTransform,
};
use xxring::{ChainSpec, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Optional cap on worker threads; the only environment input.
pub const THREADS_ENV: &str = "XXRING_THREADS";

const DEFAULT_CELL_BUDGET: u64 = 200_000_000;

#[derive(Debug, Parser)]
#[command(name = "xxring", version, about = "Local relaxation in the periodic XX ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherence function Φₙ(τ) for selected sites.
    Coherence(CoherenceArgs),
    /// Excited populations of every site over the grid.
    Populations(FieldArgs),
    /// Site entropies, total correlation, its maximum and η.
    Entropy(FieldArgs),
    /// Hierarchy-recurrence events of Φ₀.
    Recurrences(RecurrenceArgs),
    /// Light-cone front of the population spreading.
    Lightcone(LightconeArgs),
    /// η_N over a size sweep and its power-law fit.
    Scaling(ScalingArgs),
    /// Brute-force oracles against the spectral route.
    OracleCheck(OracleArgs),
    /// Time N direct sums against one batched FFT.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Number of sites N.
    #[arg(long)]
    n_sites: usize,
    /// Exchange coupling g.
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    /// On-site energy ω (does not affect any output).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    onsite: f64,
}

impl ModelArgs {
    fn spec(&self) -> Result<ChainSpec, Error> {
        ChainSpec::new(self.n_sites, self.coupling, self.onsite)
    }

    fn record(&self, m: &mut RunManifest) {
        m.param("n_sites", self.n_sites)
            .param("coupling", self.coupling)
            .param("onsite", self.onsite);
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Last scaled time τ = 2gt on the grid.
    #[arg(long)]
    tau_max: Option<f64>,
    /// Grid spacing in scaled time.
    #[arg(long)]
    step: Option<f64>,
}

impl GridArgs {
    fn resolve(&self, default_max: f64, default_step: f64, m: &mut RunManifest) -> Result<Vec<f64>, Error> {
        let tau_max = self.tau_max.unwrap_or(default_max);
        let step = self.step.unwrap_or(default_step);
        m.param("tau_max", tau_max).param("step", step);
        uniform(tau_max, step)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; the manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report physical time t = τ/2g instead of τ in CSV abscissae.
    #[arg(long)]
    physical_time: bool,
    /// Largest number of sites × grid points to evaluate.
    #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
    budget: u64,
}

impl OutputArgs {
    fn path(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn abscissa(&self, spec: &ChainSpec, tau: f64) -> f64 {
        if self.physical_time {
            spec.physical_time(tau)
        } else {
            tau
        }
    }

    fn time_label(&self) -> &'static str {
        if self.physical_time {
            "t"
        } else {
            "tau"
        }
    }

    fn check_budget(&self, spec: &ChainSpec, points: usize, what: &str) -> Result<(), Error> {
        WorkBudget(self.budget).check(spec.n_sites() as u64 * points as u64, what)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Fft,
    Direct,
    Bessel,
}

#[derive(Debug, Args)]
struct CoherenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Comma-separated site indices.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    sites: Vec<i64>,
    /// Evaluation route.
    #[arg(long, value_enum, default_value_t = Method::Fft)]
    method: Method,
    /// Image wraps kept by the Bessel route (default widens with τ).
    #[arg(long)]
    q_max: Option<usize>,
    /// Also emit the infinite-ring reference (−i)ⁿJₙ(τ).
    #[arg(long)]
    compare_bessel: bool,
}

#[derive(Debug, Args)]
struct FieldArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct RecurrenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Contrast a bump must exceed over the pre-window baseline.
    #[arg(long, default_value_t = DEFAULT_CONTRAST)]
    threshold: f64,
    /// Half-width of the search window as a fraction of qN.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: f64,
    /// Analyse the infinite-ring reference J₀(τ) instead of Φ₀.
    #[arg(long)]
    infinite: bool,
}

#[derive(Debug, Args)]
struct LightconeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Population a site must reach to count as arrived.
    #[arg(long, default_value_t = DEFAULT_ARRIVAL_THRESHOLD)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    /// Comma-separated ring sizes.
    #[arg(long, value_delimiter = ',', default_value = "20,50,100,200,500,1000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    step: f64,
    /// Grid extent as a multiple of N.
    #[arg(long, default_value_t = DEFAULT_SPAN_FACTOR)]
    span: f64,
    /// Also write C_T/N against 2gt/N with this many points per curve.
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = WorkBudget::default().0)]
    budget: u64,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Only the full 2^N spin-space oracle.
    #[arg(long, conflicts_with = "dense")]
    full_spin: bool,
    /// Only the dense one-excitation oracle.
    #[arg(long)]
    dense: bool,
    /// Largest acceptable deviation.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1 << 16)]
    n_sites: usize,
    /// Scaled time at which both routes are evaluated.
    #[arg(long, default_value_t = 123.4)]
    tau: f64,
    /// Sites spot-checked for agreement between the routes.
    #[arg(long, default_value_t = 8)]
    spot_checks: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EntropySummary {
    n_sites: usize,
    c_max: f64,
    c_max_per_site: f64,
    eta: f64,
    tau_star: Option<f64>,
    c_star: Option<f64>,
    max_relative_entropy_gap: f64,
}

#[derive(Debug, Serialize)]
struct ScalingOutput<'a> {
    table: &'a xxring::scaling::ScalingTable,
    fit: Option<xxring::scaling::PowerLawFit>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub n_sites: usize,
    pub tau: f64,
    pub direct_calls: usize,
    pub direct_seconds: f64,
    pub fft_seconds: f64,
    pub speedup: f64,
    pub max_spot_dev: f64,
}

enum Outcome {
    Done,
    OracleFailed,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Budget(_) => EXIT_BUDGET,
        Error::Argument(_) | Error::Domain(_) | Error::Index { .. } => EXIT_USAGE,
        Error::Fit(_) | Error::Numeric(_) | Error::Io(_) | Error::Json(_) => EXIT_FAILURE,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A pool may already exist when run() is invoked repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::OracleFailed) => EXIT_FAILURE,
        Err(e) => {
            eprintln!("xxring: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Coherence(a) => coherence(a),
        Command::Populations(a) => populations(a),
        Command::Entropy(a) => entropy(a),
        Command::Recurrences(a) => recurrences(a),
        Command::Lightcone(a) => lightcone(a),
        Command::Scaling(a) => scaling(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Bench(a) => bench(a).map(|_| Outcome::Done),
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn coherence(a: CoherenceArgs) -> Result<Outcome, Error> {
    let spec = a.model.spec()?;
    let mut m = RunManifest::new("coherence");
    a.model.record(&mut m);
    let taus = a.grid.resolve(4.5 * spec.recurrence_tau(), 0.1, &mut m)?;
    a.output.check_budget(&spec, taus.len(), "coherence")?;
    let sites = a
        .sites
        .iter()
        .map(|&s| spec_site(&spec, s))
        .collect::<Result<Vec<usize>, Error>>()?;
    m.param("sites", &sites)
        .param("method", format!("{:?}", a.method).to_lowercase())
        .param("q_max", a.q_max)
        .param("compare_bessel", a.compare_bessel)
        .param("physical_time", a.output.physical_time);

    let amps: Vec<Vec<num_complex::Complex64>> = match a.method {
        Method::Fft => RingTransform::for_spec(&spec)
            .map_grid(&taus, |cv| sites.iter().map(|&s| cv.amps[s]).collect())?,
        Method::Direct => taus
            .iter()
            .map(|&t| sites.iter().map(|&s| phi_direct(&spec, s as i64, t)).collect())
            .collect::<Result<_, _>>()?,
        Method::Bessel => taus
            .iter()
            .map(|&t| {
                let q = a.q_max.unwrap_or_else(|| default_q_max(&spec, t));
                phi_bessel_series_vector(&spec, t, q).map(|cv| sites.iter().map(|&s| cv.amps[s]).collect())
            })
            .collect::<Result<_, _>>()?,
    };

    let mut header = vec![a.output.time_label().to_string()];
    for s in &sites {
        header.push(format!("re_phi_{s}"));
        header.push(format!("im_phi_{s}"));
    }
    if a.compare_bessel {
        for s in &sites {
            header.push(format!("re_inf_{s}"));
            header.push(format!("im_inf_{s}"));
        }
    }
    let mut rows = Vec::with_capacity(taus.len());
    for (&t, row_amps) in taus.iter().zip(&amps) {
        let mut row = vec![a.output.abscissa(&spec, t)];
        for z in row_amps {
            row.push(z.re);
            row.push(z.im);
        }
        if a.compare_bessel {
            for &s in &sites {
                let z = phi_infinite(s as i64, t)?;
                row.push(z.re);
                row.push(z.im);
            }
        }
        rows.push(row);
    }
    let path = a.output.path("coherence.csv");
    write_series(&path, &header, &rows, &mut m)?;
    announce(&path);
    Ok(Outcome::Done)
}

fn spec_site(spec: &ChainSpec, site: i64) -> Result<usize, Error> {
    if site < 0 || site as usize >= spec.n_sites() {
        return Err(Error::Index {
            index: site,
            n_sites: spec.n_sites(),
        });
    }
    Ok(site as usize)
}

fn populations(a: FieldArgs) -> Result<Outcome, Error> {
    let spec = a.model.spec()?;
    let mut m = RunManifest::new("populations");
    a.model.record(&mut m);
    let taus = a.grid.resolve(spec.recurrence_tau(), 0.1, &mut m)?;
    a.output.check_budget(&spec, taus.len(), "population field")?;
    m.param("physical_time", a.output.physical_time);
    let field = population_field(&spec, &taus)?;
    let mut header = vec![a.output.time_label().to_string()];
    header.extend((0..spec.n_sites()).map(|n| format!("p_{n}")));
    let rows: Vec<Vec<f64>> = field
        .taus
        .iter()
        .zip(&field.pops)
        .map(|(&t, p)| std::iter::once(a.output.abscissa(&spec, t)).chain(p.iter().copied()).collect())
        .collect();
    let path = a.output.path("populations.csv");
    write_series(&path, &header, &rows, &mut m)?;
    announce(&path);
    Ok(Outcome::Done)
}

fn entropy(a: FieldArgs) -> Result<Outcome, Error> {
    let spec = a.model.spec()?;
    let mut m = RunManifest::new("entropy");
    a.model.record(&mut m);
    let taus = a.grid.resolve(spec.recurrence_tau(), 0.05, &mut m)?;
    a.output.check_budget(&spec, taus.len(), "entropy trace")?;
    m.param("physical_time", a.output.physical_time);
    let trace = entropy_trace(&spec, &taus)?;

    let transform = RingTransform::for_spec(&spec);
    let gaps = transform.map_grid(&taus, |cv| {
        let ct = total_correlation(&site_populations(&cv))?;
        Ok::<f64, Error>((relative_entropy_check(&cv)? - ct).abs())
    })?;
    let max_gap = gaps.into_iter().try_fold(0.0f64, |acc, g| g.map(|g| acc.max(g)))?;

    let n = spec.n_sites();
    let mut header = vec![a.output.time_label().to_string()];
    header.extend((0..n).map(|k| format!("s_{k}")));
    header.push("c_t".into());
    header.push("c_max".into());
    let rows: Vec<Vec<f64>> = trace
        .taus
        .iter()
        .zip(&trace.site_entropy)
        .zip(&trace.total_correlation)
        .map(|((&t, s), &c)| {
            let mut row = vec![a.output.abscissa(&spec, t)];
            row.extend_from_slice(s);
            row.push(c);
            row.push(trace.c_max);
            row
        })
        .collect();
    let path = a.output.path("entropy.csv");
    write_series(&path, &header, &rows, &mut m)?;

    let peak = correlation_peak(&trace, &spec).ok();
    let summary = EntropySummary {
        n_sites: n,
        c_max: trace.c_max,
        c_max_per_site: trace.c_max / n as f64,
        eta: trace.eta,
        tau_star: peak.map(|p| p.tau_star),
        c_star: peak.map(|p| p.c_star),
        max_relative_entropy_gap: max_gap,
    };
    let summary_path = path.with_extension("summary.json");
    write_json(&summary_path, &summary, &mut m)?;
    announce(&path);
    announce(&summary_path);
    Ok(Outcome::Done)
}

fn recurrences(a: RecurrenceArgs) -> Result<Outcome, Error> {
    let spec = a.model.spec()?;
    let mut m = RunManifest::new("recurrences");
    a.model.record(&mut m);
    let taus = a.grid.resolve(4.5 * spec.recurrence_tau(), 0.1, &mut m)?;
    a.output.check_budget(&spec, taus.len(), "recurrence scan")?;
    m.param("threshold", a.threshold)
        .param("window", a.window)
        .param("infinite", a.infinite);
    let phi0: Vec<num_complex::Complex64> = if a.infinite {
        taus.iter().map(|&t| phi_infinite(0, t)).collect::<Result<_, _>>()?
    } else {
        RingTransform::for_spec(&spec).map_grid(&taus, |cv| cv.amps[0])?
    };
    let report = detect_recurrences(&taus, &phi0, &spec, a.threshold, a.window)?;
    let path = a.output.path("recurrences.json");
    write_json(&path, &report, &mut m)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(Outcome::Done)
}

fn lightcone(a: LightconeArgs) -> Result<Outcome, Error> {
    let spec = a.model.spec()?;
    let mut m = RunManifest::new("lightcone");
    a.model.record(&mut m);
    let taus = a.grid.resolve(0.6 * spec.recurrence_tau(), 0.05, &mut m)?;
    a.output.check_budget(&spec, taus.len(), "light cone")?;
    m.param("threshold", a.threshold);
    let field = population_field(&spec, &taus)?;
    let fit = lightcone_front(&field, &spec, a.threshold)?;
    let path = a.output.path("lightcone.json");
    write_json(&path, &fit, &mut m)?;
    println!(
        "speed = {} scaled-time units per site (intercept {}, rms {})",
        fit.speed, fit.intercept, fit.residual
    );
    Ok(Outcome::Done)
}

fn scaling(a: ScalingArgs) -> Result<Outcome, Error> {
    let mut m = RunManifest::new("scaling");
    m.param("sizes", &a.sizes)
        .param("step", a.step)
        .param("span", a.span)
        .param("trajectories", a.trajectories);
    let budget = WorkBudget(a.budget);
    let table = sweep_eta_with_budget(&a.sizes, a.step, a.span, budget)?;
    let fit = if table.rows.len() >= 3 {
        Some(fit_power_law(&table)?)
    } else {
        None
    };

    let json_path = a.out.clone().unwrap_or_else(|| PathBuf::from("scaling.json"));
    let csv_path = json_path.with_extension("csv");
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| vec![r.n_sites as f64, r.eta, r.tau_star, r.c_star, r.tau_star / r.n_sites as f64])
        .collect();
    write_series(
        &csv_path,
        &["n_sites", "eta", "tau_star", "c_star", "tau_star_over_n"],
        &rows,
        &mut m,
    )?;
    write_json(&json_path, &ScalingOutput { table: &table, fit: fit.clone() }, &mut m)?;
    announce(&csv_path);
    announce(&json_path);

    if let Some(points) = a.trajectories {
        let curves = scaled_trajectories_with_budget(&a.sizes, points, budget)?;
        let mut header = vec!["scaled_time".to_string()];
        for c in &curves {
            header.push(format!("c_t_over_n_{}", c.n_sites));
            header.push(format!("c_max_over_n_{}", c.n_sites));
        }
        let rows: Vec<Vec<f64>> = (0..points)
            .map(|j| {
                let mut row = vec![curves[0].scaled_time[j]];
                for c in &curves {
                    row.push(c.correlation_per_site[j]);
                    row.push(c.max_per_site);
                }
                row
            })
            .collect();
        let traj_path = json_path.with_extension("trajectories.csv");
        write_series(&traj_path, &header, &rows, &mut m)?;
        announce(&traj_path);
    }
    if let Some(f) = fit {
        println!("alpha = {} (log intercept {}, rms {})", f.alpha, f.log_intercept, f.residual_rms);
    }
    Ok(Outcome::Done)
}

fn oracle_check(a: OracleArgs) -> Result<Outcome, Error> {
    let spec = a.model.spec()?;
    let mut m = RunManifest::new("oracle-check");
    a.model.record(&mut m);
    let taus = a.grid.resolve(20.0, 0.05, &mut m)?;
    let kinds = if a.full_spin {
        vec![OracleKind::FullSpin]
    } else if a.dense {
        vec![OracleKind::DenseSector]
    } else {
        available_oracles(&spec)
    };
    m.param("oracles", &kinds).param("tolerance", a.tolerance);
    let report = compare_with(&spec, &taus, &kinds)?;
    let path = a.out.clone().unwrap_or_else(|| PathBuf::from("oracle-check.json"));
    write_json(&path, &report, &mut m)?;
    let pass = report.max_abs_dev <= a.tolerance;
    println!(
        "max_abs_dev = {:e} at site {} tau {} ({})",
        report.max_abs_dev,
        report.worst_site,
        report.worst_tau,
        if pass { "ok" } else { "FAILED" }
    );
    Ok(if pass { Outcome::Done } else { Outcome::OracleFailed })
}

/// Times `N` calls of the direct sum against one batched FFT and
/// spot-checks agreement on `spot_checks` evenly spaced sites.
pub fn bench_routes(n_sites: usize, tau: f64, spot_checks: usize) -> Result<BenchReport, Error> {
    let spec = ChainSpec::unit(n_sites)?;

    let start = Instant::now();
    let cv = phi_batch_fft(&spec, tau)?;
    let fft_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut direct = Vec::with_capacity(n_sites);
    for n in 0..n_sites {
        direct.push(phi_direct(&spec, n as i64, tau)?);
    }
    let direct_seconds = start.elapsed().as_secs_f64();

    let spots = spot_checks.clamp(1, n_sites);
    let max_spot_dev = (0..spots)
        .map(|j| j * n_sites / spots)
        .map(|n| (direct[n] - cv.amps[n]).norm())
        .fold(0.0, f64::max);
    Ok(BenchReport {
        n_sites,
        tau,
        direct_calls: n_sites,
        direct_seconds,
        fft_seconds,
        speedup: direct_seconds / fft_seconds,
        max_spot_dev,
    })
}

fn bench(a: BenchArgs) -> Result<BenchReport, Error> {
    let mut m = RunManifest::new("bench");
    m.param("n_sites", a.n_sites)
        .param("tau", a.tau)
        .param("spot_checks", a.spot_checks);
    let r = bench_routes(a.n_sites, a.tau, a.spot_checks)?;
    let path = a.out.clone().unwrap_or_else(|| PathBuf::from("bench.csv"));
    write_series(
        &path,
        &["n_sites", "direct_calls", "direct_seconds", "fft_seconds", "speedup", "max_spot_dev"],
        &[vec![
            r.n_sites as f64,
            r.direct_calls as f64,
            r.direct_seconds,
            r.fft_seconds,
            r.speedup,
            r.max_spot_dev,
        ]],
        &mut m,
    )?;
    println!(
        "N = {}: direct {:.3} s, fft {:.3e} s, speedup {:.0}x, spot deviation {:e}",
        r.n_sites, r.direct_seconds, r.fft_seconds, r.speedup, r.max_spot_dev
    );
    Ok(r)
}
