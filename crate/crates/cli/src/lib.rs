//! Command-line experiment runner. `run` is the whole program; `main` only
//! maps its result to the process exit status.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use blockband::girko::{self, CircularLawConfig};
use blockband::lsv::{self, LsvExperimentConfig};
use blockband::oracles::{self, SuiteConfig};
use blockband::stieltjes::{self, LimitCdf, RateConfig, StieltjesGrid};
use blockband::{AtomDistribution, AtomKind, Complex64, ExperimentReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "blockband", version, about = "Periodic block-band random matrix experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of one or more band matrices and their disk discrepancies.
    Esd(Flags),
    /// Least singular value tail of the shifted matrix.
    Lsv(Flags),
    /// Monte-Carlo rate of the empirical Stieltjes transform.
    StieltjesRate(Flags),
    /// Log-determinant gaps against a Ginibre matrix.
    GirkoCompare(Flags),
    /// Numerical checks of the resolvent and moment lemmas.
    VerifyLemmas(Flags),
    /// Density and CDF of the limiting squared-singular-value law.
    Density(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    bandwidth: Option<usize>,
    /// gaussian-complex | gaussian-real | rademacher
    #[arg(long)]
    atom: Option<String>,
    #[arg(long = "z-re", allow_negative_numbers = true)]
    z_re: Option<f64>,
    #[arg(long = "z-im", allow_negative_numbers = true)]
    z_im: Option<f64>,
    #[arg(long = "zeta-re", allow_negative_numbers = true)]
    zeta_re: Option<f64>,
    #[arg(long = "zeta-im", allow_negative_numbers = true)]
    zeta_im: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for trials; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Key-value file (`key = value` per line); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// esd: also run a Ginibre baseline per trial.
    #[arg(long)]
    baseline: bool,
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, false)
    }
}

/// The effective configuration, echoed into every output file.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: String,
    pub n: usize,
    pub bandwidth: usize,
    pub atom: String,
    pub z_re: f64,
    pub z_im: f64,
    pub zeta_re: f64,
    pub zeta_im: f64,
    pub trials: usize,
    pub seed: u64,
    pub p: u32,
    pub out_dir: PathBuf,
    pub format: Format,
    pub baseline: bool,
}

impl RunConfig {
    fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }

    fn zeta(&self) -> Complex64 {
        Complex64::new(self.zeta_re, self.zeta_im)
    }

    fn atom(&self) -> Result<AtomDistribution, Failure> {
        let kind: AtomKind = self.atom.parse().map_err(|e| Failure::Invalid(format!("{e}")))?;
        Ok(kind.into())
    }

    fn json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<blockband::Error> for Failure {
    fn from(e: blockband::Error) -> Self {
        use blockband::Error as E;
        match e {
            E::Io(_) | E::Json(_) | E::Convergence(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

struct Defaults {
    n: usize,
    bandwidth: usize,
    z: (f64, f64),
    zeta: (f64, f64),
    trials: usize,
}

fn defaults(cmd: &str) -> Defaults {
    let base = Defaults { n: 1000, bandwidth: 100, z: (0.0, 0.0), zeta: (1.0, 0.5), trials: 1 };
    match cmd {
        "lsv" => Defaults { n: 300, bandwidth: 30, z: (1.0, 0.0), trials: 100, ..base },
        "stieltjes-rate" => Defaults { n: 1200, bandwidth: 40, z: (1.0, 0.0), trials: 50, ..base },
        "girko-compare" => Defaults { n: 500, bandwidth: 50, z: (1.0, 1.0), ..base },
        "verify-lemmas" => Defaults { n: 60, bandwidth: 6, z: (1.0, 0.0), zeta: (1.0, 1.0), trials: 500 },
        "density" => Defaults { n: 400, bandwidth: 1, z: (1.0, 0.0), ..base },
        _ => base,
    }
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Invalid(format!("config line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s.parse().map_err(|_| Failure::Invalid(format!("config key {key}: cannot parse {s:?}"))),
        None => Ok(default),
    }
}

const KNOWN_KEYS: [&str; 14] = [
    "n", "bandwidth", "atom", "z_re", "z_im", "zeta_re", "zeta_im", "trials", "seed", "p", "out_dir", "format", "jobs", "baseline",
];

fn resolve(cmd: &str, f: Flags) -> Result<(RunConfig, Option<usize>), Failure> {
    let file = match &f.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Failure::Invalid(format!("unknown config key {k}")));
    }
    let d = defaults(cmd);
    let cfg = RunConfig {
        subcommand: cmd.to_string(),
        n: pick(f.n, &file, "n", d.n)?,
        bandwidth: pick(f.bandwidth, &file, "bandwidth", d.bandwidth)?,
        atom: pick(f.atom, &file, "atom", "gaussian-complex".to_string())?,
        z_re: pick(f.z_re, &file, "z_re", d.z.0)?,
        z_im: pick(f.z_im, &file, "z_im", d.z.1)?,
        zeta_re: pick(f.zeta_re, &file, "zeta_re", d.zeta.0)?,
        zeta_im: pick(f.zeta_im, &file, "zeta_im", d.zeta.1)?,
        trials: pick(f.trials, &file, "trials", d.trials)?,
        seed: pick(f.seed, &file, "seed", 42)?,
        p: pick(f.p, &file, "p", 1)?,
        out_dir: pick(f.out_dir, &file, "out_dir", PathBuf::from("out"))?,
        format: pick(f.format, &file, "format", Format::Csv)?,
        baseline: f.baseline || pick(None, &file, "baseline", false)?,
    };
    let jobs = match f.jobs {
        Some(j) => Some(j),
        None => file.get("jobs").map(|s| s.parse().map_err(|_| Failure::Invalid(format!("config key jobs: cannot parse {s:?}")))).transpose()?,
    };
    if jobs == Some(0) {
        return Err(Failure::Invalid("--jobs must be at least 1".into()));
    }
    if cfg.trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    cfg.atom()?;
    if !matches!(cmd, "verify-lemmas" | "density") {
        blockband::bandmat::check_dims(cfg.n, cfg.bandwidth)?;
    }
    Ok((cfg, jobs))
}

/// Result of a subcommand: files to write, the one-line summary and whether
/// every check passed.
struct Outcome {
    files: Vec<(String, String)>,
    line: String,
    passed: bool,
}

fn csv_with_config(cfg: &RunConfig, body: &str) -> String {
    format!("# run_config: {}\n{body}", cfg.json())
}

fn plot_header(cfg: &RunConfig, columns: &str) -> String {
    format!("# run_config: {}\n# {columns}\n", cfg.json())
}

fn summary_json(cfg: &RunConfig, report: &ExperimentReport, extra: Option<(&str, serde_json::Value)>) -> Result<String, Failure> {
    let mut root = serde_json::Map::new();
    root.insert("run_config".into(), serde_json::to_value(cfg).map_err(|e| Failure::Runtime(e.to_string()))?);
    root.insert("report".into(), serde_json::to_value(report).map_err(|e| Failure::Runtime(e.to_string()))?);
    if let Some((k, v)) = extra {
        root.insert(k.into(), v);
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(root)).map(|s| s + "\n").map_err(|e| Failure::Runtime(e.to_string()))
}

fn esd(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let out = girko::circular_law_experiment(&CircularLawConfig {
        n: cfg.n,
        b: cfg.bandwidth,
        atom: cfg.atom()?,
        z_grid: Vec::new(),
        trials: cfg.trials,
        seed: cfg.seed,
        baseline: cfg.baseline,
    })?;
    let mut files = Vec::new();
    match cfg.format {
        Format::Csv => {
            files.push(("eigenvalues.csv".into(), csv_with_config(cfg, &girko::eigenvalues_csv(&out.eigenvalues))));
            files.push(("discrepancy.csv".into(), csv_with_config(cfg, &girko::discrepancy_csv(&out.discrepancy))));
            files.push(("summary.json".into(), summary_json(cfg, &out.report, None)?));
        }
        Format::Json => {
            let eigs: Vec<Vec<[f64; 2]>> = out.eigenvalues.iter().map(|l| l.iter().map(|z| [z.re, z.im]).collect()).collect();
            files.push(("summary.json".into(), summary_json(cfg, &out.report, Some(("eigenvalues", serde_json::json!(eigs))))?));
        }
        Format::Plotdata => {
            files.push(("eigenvalues.dat".into(), girko::plotdata(&out.eigenvalues, &[format!("run_config: {}", cfg.json())])));
            files.push(("summary.json".into(), summary_json(cfg, &out.report, None)?));
        }
    }
    let line = format!(
        "esd n={} b={} atom={} trials={}: median radial_sup {:.5}, angular_sup {:.5}",
        cfg.n,
        cfg.bandwidth,
        cfg.atom,
        cfg.trials,
        out.report.summary_f64("median_radial_sup").unwrap_or(f64::NAN),
        out.report.summary_f64("median_angular_sup").unwrap_or(f64::NAN),
    );
    Ok(Outcome { files, line, passed: out.report.passed() })
}

fn trial_table(cfg: &RunConfig, report: &ExperimentReport, columns: &[&str], name: &str) -> Vec<(String, String)> {
    let sep = if cfg.format == Format::Plotdata { " " } else { "," };
    let mut body = String::new();
    for t in &report.trials {
        let mut row = vec![t.trial.to_string()];
        row.extend(columns.iter().map(|c| t.get(c).map(|v| v.to_string()).unwrap_or_default()));
        let _ = writeln!(body, "{}", row.join(sep));
    }
    let header = std::iter::once("trial").chain(columns.iter().copied()).collect::<Vec<_>>();
    match cfg.format {
        Format::Csv => vec![(format!("{name}.csv"), csv_with_config(cfg, &format!("{}\n{body}", header.join(","))))],
        Format::Plotdata => vec![(format!("{name}.dat"), plot_header(cfg, &header.join(" ")) + &body)],
        Format::Json => Vec::new(),
    }
}

fn lsv_cmd(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let report = lsv::lsv_tail_experiment(&LsvExperimentConfig {
        n: cfg.n,
        b: cfg.bandwidth,
        z: cfg.z(),
        trials: cfg.trials,
        seed: cfg.seed,
        log_thresholds: vec![-10.0, -5.0, -2.0],
        atom: cfg.atom()?,
    })?;
    let mut files = trial_table(cfg, &report, &["s_n", "ln_s_n"], "lsv");
    files.push(("summary.json".into(), summary_json(cfg, &report, None)?));
    let line = format!(
        "lsv n={} b={} z={}: median s_n {:.4e}, min s_n {:.4e}, frequency below c_n^(-25m) {}",
        cfg.n,
        cfg.bandwidth,
        cfg.z(),
        report.summary_f64("median_s_n").unwrap_or(f64::NAN),
        report.summary_f64("min_s_n").unwrap_or(f64::NAN),
        report.summary_f64("frequency_below_threshold").unwrap_or(f64::NAN),
    );
    Ok(Outcome { files, line, passed: report.passed() })
}

fn rate_cmd(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let atom = cfg.atom()?;
    let report = stieltjes::rate_experiment(&RateConfig {
        n: cfg.n,
        b: cfg.bandwidth,
        z: cfg.z(),
        zeta: cfg.zeta(),
        p: cfg.p,
        trials: cfg.trials,
        seed: cfg.seed,
        atom: atom.clone(),
    })?;
    let mut files = trial_table(cfg, &report, &["m_emp_re", "m_emp_im", "abs_diff", "moment"], "rate");
    // transform profile of the first trial along Im zeta = const
    let x = blockband::PeriodicBlockBandMatrix::generate(cfg.n, cfg.bandwidth, &atom, blockband::seed::trial_seed(cfg.seed, 0), true)?;
    let nu = blockband::EmpiricalMeasure::new(blockband::spectra::squared_singular_values(&x.shifted(cfg.z()))?)?;
    let grid = StieltjesGrid::new(stieltjes::default_a(cfg.z()), cfg.zeta_im, 101)?;
    let rows = stieltjes::stieltjes_rows(&nu, cfg.z(), &grid)?;
    match cfg.format {
        Format::Csv => files.push(("stieltjes.csv".into(), csv_with_config(cfg, &stieltjes::stieltjes_csv(&rows)))),
        Format::Plotdata => {
            let mut body = plot_header(cfg, "zeta_re abs_diff");
            for r in &rows {
                let _ = writeln!(body, "{} {}", r.zeta.re, r.abs_diff());
            }
            files.push(("stieltjes.dat".into(), body));
        }
        Format::Json => {}
    }
    files.push(("summary.json".into(), summary_json(cfg, &report, None)?));
    let line = format!(
        "stieltjes-rate n={} b={} p={}: estimate {:.4e} +- {:.2e}, bound term {:.4e}",
        cfg.n,
        cfg.bandwidth,
        cfg.p,
        report.summary_f64("estimate").unwrap_or(f64::NAN),
        report.summary_f64("std_error").unwrap_or(f64::NAN),
        report.summary_f64("bound_term").unwrap_or(f64::NAN),
    );
    Ok(Outcome { files, line, passed: report.passed() })
}

fn girko_cmd(cfg: &RunConfig, z_given: bool) -> Result<Outcome, Failure> {
    let z_grid = if z_given {
        vec![cfg.z()]
    } else {
        girko::DEFAULT_Z_GRID.iter().map(|&(r, i)| Complex64::new(r, i)).collect()
    };
    let report = girko::girko_compare(&CircularLawConfig {
        n: cfg.n,
        b: cfg.bandwidth,
        atom: cfg.atom()?,
        z_grid: z_grid.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        baseline: false,
    })?;
    let sep = if cfg.format == Format::Plotdata { " " } else { "," };
    let cols = ["trial", "k", "z_re", "z_im", "log_det_gap", "interval_distance", "log_integral_bound"];
    let mut body = String::new();
    for t in &report.trials {
        for (k, z) in z_grid.iter().enumerate() {
            let get = |c: &str| t.get(&format!("{c}_z{k}")).map(|v| v.to_string()).unwrap_or_default();
            let row = [t.trial.to_string(), k.to_string(), z.re.to_string(), z.im.to_string(), get("log_det_gap"), get("interval_distance"), get("log_integral_bound")];
            let _ = writeln!(body, "{}", row.join(sep));
        }
    }
    let mut files = Vec::new();
    match cfg.format {
        Format::Csv => files.push(("girko.csv".into(), csv_with_config(cfg, &format!("{}\n{body}", cols.join(","))))),
        Format::Plotdata => files.push(("girko.dat".into(), plot_header(cfg, &cols.join(" ")) + &body)),
        Format::Json => {}
    }
    files.push(("summary.json".into(), summary_json(cfg, &report, None)?));
    let worst = (0..z_grid.len())
        .filter_map(|k| report.summary_f64(&format!("median_abs_log_det_gap_z{k}")))
        .fold(0.0, f64::max);
    let line = format!("girko-compare n={} b={} shifts={}: largest median |gap| {:.4e}", cfg.n, cfg.bandwidth, z_grid.len(), worst);
    Ok(Outcome { files, line, passed: report.passed() })
}

fn lemmas_cmd(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let results = oracles::run_suite(&SuiteConfig { instances: 1000, trials: cfg.trials, seed: cfg.seed })?;
    let passed = results.iter().all(|r| r.passed);
    let doc = serde_json::json!({ "run_config": cfg, "results": results });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.to_string()))? + "\n";
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.lemma_id.as_str()).collect();
    let line = if failed.is_empty() {
        format!("verify-lemmas: {} checks passed", results.len())
    } else {
        format!("verify-lemmas: {} of {} checks failed: {}", failed.len(), results.len(), failed.join(", "))
    };
    Ok(Outcome { files: vec![("lemmas.json".into(), text)], line, passed })
}

fn density_cmd(cfg: &RunConfig) -> Result<Outcome, Failure> {
    if cfg.n < 2 {
        return Err(Failure::Invalid("density needs --n of at least 2 grid points".into()));
    }
    let z = cfg.z();
    let cdf = LimitCdf::cached(z)?;
    let x_max = 1.05 * cdf.support_max();
    let xs: Vec<f64> = (0..cfg.n).map(|i| x_max * (i as f64 + 0.5) / cfg.n as f64).collect();
    let dens: Vec<f64> = xs.iter().map(|&x| stieltjes::limit_density(z, x, stieltjes::DEFAULT_ETA)).collect::<Result<_, _>>()?;
    let cdfs: Vec<f64> = xs.iter().map(|&x| cdf.cdf(x)).collect();
    let sep = if cfg.format == Format::Plotdata { " " } else { "," };
    let mut body = String::new();
    for i in 0..xs.len() {
        let _ = writeln!(body, "{}{sep}{}{sep}{}", xs[i], dens[i], cdfs[i]);
    }
    let mut report = ExperimentReport::new("density", cfg.seed).config("z", [z.re, z.im]).config("points", cfg.n);
    report.set_summary("total_mass", cdf.total_mass());
    report.set_summary("support_max", cdf.support_max());
    let mut files = Vec::new();
    match cfg.format {
        Format::Csv => files.push(("density.csv".into(), csv_with_config(cfg, &format!("x,density,cdf\n{body}")))),
        Format::Plotdata => files.push(("density.dat".into(), plot_header(cfg, "x density cdf") + &body)),
        Format::Json => {
            let pts: Vec<[f64; 3]> = (0..xs.len()).map(|i| [xs[i], dens[i], cdfs[i]]).collect();
            report.set_summary("points", pts);
        }
    }
    files.push(("summary.json".into(), summary_json(cfg, &report, None)?));
    let line = format!("density z={}: total mass {:.6}, support edge {:.4}", z, cdf.total_mass(), cdf.support_max());
    Ok(Outcome { files, line, passed: true })
}

fn execute(cmd: &str, cfg: &RunConfig, z_given: bool) -> Result<Outcome, Failure> {
    match cmd {
        "esd" => esd(cfg),
        "lsv" => lsv_cmd(cfg),
        "stieltjes-rate" => rate_cmd(cfg),
        "girko-compare" => girko_cmd(cfg, z_given),
        "verify-lemmas" => lemmas_cmd(cfg),
        "density" => density_cmd(cfg),
        other => Err(Failure::Invalid(format!("unknown subcommand {other}"))),
    }
}

/// Parses `argv` (program name first), runs the subcommand, writes its files
/// and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, flags) = match cli.command {
        Command::Esd(f) => ("esd", f),
        Command::Lsv(f) => ("lsv", f),
        Command::StieltjesRate(f) => ("stieltjes-rate", f),
        Command::GirkoCompare(f) => ("girko-compare", f),
        Command::VerifyLemmas(f) => ("verify-lemmas", f),
        Command::Density(f) => ("density", f),
    };
    let z_given = flags.z_re.is_some() || flags.z_im.is_some();
    // dense kernels split work by pool size; keep them sequential so --jobs
    // only changes how trials are scheduled, never the floating-point results
    faer::set_global_parallelism(faer::Par::Seq);
    let result = resolve(name, flags).and_then(|(cfg, jobs)| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            builder = builder.num_threads(j);
        }
        let pool = builder.build().map_err(|e| Failure::Runtime(e.to_string()))?;
        let outcome = pool.install(|| execute(name, &cfg, z_given))?;
        fs::create_dir_all(&cfg.out_dir)?;
        for (file, text) in &outcome.files {
            fs::write(cfg.out_dir.join(file), text)?;
        }
        Ok(outcome)
    });
    match result {
        Ok(o) => {
            println!("{}", o.line);
            if o.passed {
                EXIT_OK
            } else {
                eprintln!("one or more checks failed; see summary output");
                EXIT_CHECK_FAILED
            }
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
    }
}
