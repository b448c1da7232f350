//! Hermitization diagnostics: disk discrepancy against the circular law, the
//! Ginibre baseline, log-determinant gaps and truncated log integrals.

use std::f64::consts::PI;
use std::fmt::Write as _;

use faer::Mat;
use num_complex::Complex64;
use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::AtomDistribution;
use crate::bandmat::{PeriodicBlockBandMatrix, DEFAULT_DENSE_GUARD};
use crate::error::{Error, Result};
use crate::report::{median, ExperimentReport, TrialRecord};
use crate::seed;
use crate::spectra::{self, EmpiricalMeasure, LogAbsDet};
use crate::stieltjes::ks_distance;

const GINIBRE_TAG: u64 = 0x6769_6e69;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Complex,
    Real,
}

impl Field {
    pub fn of(dist: &AtomDistribution) -> Field {
        if dist.is_real() {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

/// `n x n` matrix of iid standard Gaussians over `field`, divided by `sqrt(n)`.
pub fn ginibre(n: usize, seed: u64, field: Field) -> Result<Mat<Complex64>> {
    if n > DEFAULT_DENSE_GUARD {
        return Err(Error::DenseGuard { n, cap: DEFAULT_DENSE_GUARD });
    }
    let mut rng = seed::rng(seed);
    let s = 1.0 / (n as f64).sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // column-major fill so the stream order matches the storage order
    let mut g = Mat::<Complex64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            g[(i, j)] = match field {
                Field::Real => Complex64::new(re * s, 0.0),
                Field::Complex => {
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * h * s, im * h * s)
                }
            };
        }
    }
    Ok(g)
}

/// Real Ginibre directly as `f64`, same stream as `ginibre(n, seed, Field::Real)`.
pub fn ginibre_real(n: usize, seed: u64) -> Result<Mat<f64>> {
    if n > DEFAULT_DENSE_GUARD {
        return Err(Error::DenseGuard { n, cap: DEFAULT_DENSE_GUARD });
    }
    let mut rng = seed::rng(seed);
    let s = 1.0 / (n as f64).sqrt();
    let mut g = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            g[(i, j)] = x * s;
        }
    }
    Ok(g)
}

pub fn ginibre_eigenvalues(n: usize, seed: u64, field: Field) -> Result<Vec<Complex64>> {
    match field {
        Field::Real => spectra::eigenvalues_real(&ginibre_real(n, seed)?),
        Field::Complex => spectra::eigenvalues(&ginibre(n, seed, field)?),
    }
}

/// Kolmogorov distances of the radii and arguments from the uniform law on the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    /// `sup_r |F(r) - r^2|` over `r` in `[0, 1]`, radii beyond 1 counted at 1.
    pub radial_sup: f64,
    /// `sup |G(theta) - (theta + pi) / 2 pi|` over `[-pi, pi]`.
    pub angular_sup: f64,
    pub n: usize,
}

pub fn disk_discrepancy(eigs: &[Complex64]) -> Result<DiscrepancyReport> {
    if eigs.is_empty() {
        return Err(Error::InvalidParameter("no eigenvalues".into()));
    }
    let radii = EmpiricalMeasure::new(eigs.iter().map(|l| l.norm().min(1.0)).collect())?;
    let args = EmpiricalMeasure::new(eigs.iter().map(|l| l.arg()).collect())?;
    Ok(DiscrepancyReport {
        radial_sup: ks_distance(&radii, |r| r.clamp(0.0, 1.0).powi(2)),
        angular_sup: ks_distance(&args, |t| ((t + PI) / (2.0 * PI)).clamp(0.0, 1.0)),
        n: eigs.len(),
    })
}

/// `(1/n) log|det G_z| - (1/n) log|det X_z|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDetGap {
    pub gap: f64,
    pub x: LogAbsDet,
    pub g: LogAbsDet,
    /// Either side is numerically singular, so `gap` carries an infinity or NaN.
    pub singular: bool,
}

fn shift_dense(m: &Mat<Complex64>, z: Complex64) -> Mat<Complex64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] -= z;
    }
    out
}

/// Both sides go through the same dense complex path, so `X` against its own
/// dense copy gives exactly zero.
pub fn log_det_gap(x: &PeriodicBlockBandMatrix, g: &Mat<Complex64>, z: Complex64) -> Result<LogDetGap> {
    if g.nrows() != x.n() || g.ncols() != x.n() {
        return Err(Error::Dimension { expected: x.n(), got: g.nrows() });
    }
    let xs = spectra::log_abs_det_dense(&x.shifted(z).to_dense()?)?;
    let gs = spectra::log_abs_det_dense(&shift_dense(g, z))?;
    let n = x.n() as f64;
    Ok(LogDetGap { gap: gs.value / n - xs.value / n, x: xs, g: gs, singular: xs.singular || gs.singular })
}

/// `sum` over atoms in `[a, b]` of `weight * ln(atom)`.
pub fn truncated_log_integral(nu: &EmpiricalMeasure, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < b) {
        return Err(Error::InvalidParameter(format!("need 0 < a < b, got a={a}, b={b}")));
    }
    let atoms = nu.atoms();
    let lo = atoms.partition_point(|&x| x < a);
    let hi = atoms.partition_point(|&x| x <= b);
    Ok(atoms[lo..hi].iter().map(|x| x.ln()).sum::<f64>() * nu.weight())
}

/// `sup_{x in [a, b]} |mu([a, x]) - nu([a, x])|`.
pub fn interval_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, a: f64, b: f64) -> f64 {
    let base_mu = mu.cdf_left(a);
    let base_nu = nu.cdf_left(a);
    mu.atoms()
        .iter()
        .chain(nu.atoms())
        .copied()
        .filter(|&x| x >= a && x <= b)
        .chain(std::iter::once(b))
        .map(|x| ((mu.cdf(x) - base_mu) - (nu.cdf(x) - base_nu)).abs())
        .fold(0.0, f64::max)
}

/// Right-hand side `2 (|ln b| + |ln a|) ||mu - nu||_[a,b]` of the log-integral comparison.
pub fn log_integral_bound(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, a: f64, b: f64) -> f64 {
    2.0 * (b.ln().abs() + a.ln().abs()) * interval_distance(mu, nu, a, b)
}

/// Bandwidth hypothesis of the circular law: `n^{32/33} ln n <= b`.
pub fn in_hypothesis_regime(n: usize, b: usize) -> bool {
    let nf = n as f64;
    b as f64 >= nf.powf(32.0 / 33.0) * nf.ln()
}

pub const DEFAULT_Z_GRID: [(f64, f64); 5] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.0)];

#[derive(Debug, Clone)]
pub struct CircularLawConfig {
    pub n: usize,
    pub b: usize,
    pub atom: AtomDistribution,
    /// Shifts for the log-determinant comparison; empty skips it.
    pub z_grid: Vec<Complex64>,
    pub trials: usize,
    pub seed: u64,
    /// Also run a same-field Ginibre matrix per trial.
    pub baseline: bool,
}

#[derive(Debug, Clone)]
pub struct CircularLawOutput {
    pub report: ExperimentReport,
    /// Band-matrix eigenvalues, one list per trial.
    pub eigenvalues: Vec<Vec<Complex64>>,
    pub discrepancy: Vec<DiscrepancyReport>,
    pub baseline: Vec<DiscrepancyReport>,
}

struct TrialOut {
    record: TrialRecord,
    eigs: Vec<Complex64>,
    band: DiscrepancyReport,
    base: Option<DiscrepancyReport>,
}

/// Eigenvalues and disk discrepancies of the band matrix, optionally against a
/// Ginibre baseline of the atom's field, plus log-determinant gaps over `z_grid`.
pub fn circular_law_experiment(cfg: &CircularLawConfig) -> Result<CircularLawOutput> {
    crate::bandmat::check_dims(cfg.n, cfg.b)?;
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let field = Field::of(&cfg.atom);
    let outs: Vec<TrialOut> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed::trial_seed(cfg.seed, t);
            let gseed = seed::substream(s, GINIBRE_TAG);
            let x = PeriodicBlockBandMatrix::generate(cfg.n, cfg.b, &cfg.atom, s, true)?;
            let eigs = spectra::eigenvalues_shifted(&x.shifted(Complex64::new(0.0, 0.0)))?;
            let band = disk_discrepancy(&eigs)?;
            let mut record = TrialRecord::new(t, s)
                .with("radial_sup", band.radial_sup)
                .with("angular_sup", band.angular_sup)
                .with("spectral_radius", eigs.iter().map(|l| l.norm()).fold(0.0, f64::max));
            let base = if cfg.baseline {
                let d = disk_discrepancy(&ginibre_eigenvalues(cfg.n, gseed, field)?)?;
                record = record.with("ginibre_radial_sup", d.radial_sup).with("ginibre_angular_sup", d.angular_sup);
                Some(d)
            } else {
                None
            };
            if !cfg.z_grid.is_empty() {
                record = hermitization_record(record, &x, &ginibre(cfg.n, gseed, field)?, &cfg.z_grid)?;
            }
            Ok(TrialOut { record, eigs, band, base })
        })
        .collect::<Result<_>>()?;

    let regime = in_hypothesis_regime(cfg.n, cfg.b);
    let mut report = ExperimentReport::new("circular-law", cfg.seed)
        .config("n", cfg.n)
        .config("b", cfg.b)
        .config("atom", cfg.atom.name())
        .config("trials", cfg.trials)
        .config("baseline", cfg.baseline)
        .config("z_grid", cfg.z_grid.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    let mut eigenvalues = Vec::with_capacity(outs.len());
    let mut discrepancy = Vec::with_capacity(outs.len());
    let mut baseline = Vec::new();
    for o in outs {
        report.trials.push(o.record);
        eigenvalues.push(o.eigs);
        discrepancy.push(o.band);
        baseline.extend(o.base);
    }
    report.set_summary("in_hypothesis_regime", regime);
    if !regime {
        report.set_summary(
            "regime_note",
            format!("b = {} is below n^(32/33) ln n = {:.1}; run permitted, outside the proven bandwidth regime", cfg.b, {
                let nf = cfg.n as f64;
                nf.powf(32.0 / 33.0) * nf.ln()
            }),
        );
    }
    if cfg.b * 3 > cfg.n {
        report.set_summary("large_bandwidth_flag", true);
    }
    let radial = median(&report.column("radial_sup"));
    let angular = median(&report.column("angular_sup"));
    report.set_summary("median_radial_sup", radial);
    report.set_summary("median_angular_sup", angular);
    report.set_summary("baseline_field", field);
    if cfg.baseline {
        let gr = median(&report.column("ginibre_radial_sup"));
        let ga = median(&report.column("ginibre_angular_sup"));
        report.set_summary("ginibre_median_radial_sup", gr);
        report.set_summary("ginibre_median_angular_sup", ga);
        report.check_le("radial_sup_vs_2x_ginibre", radial, 2.0 * gr);
        report.check_le("angular_sup_vs_2x_ginibre", angular, 2.0 * ga);
    }
    summarize_hermitization(&mut report, cfg.z_grid.len());
    Ok(CircularLawOutput { report, eigenvalues, discrepancy, baseline })
}

fn hermitization_record(mut record: TrialRecord, x: &PeriodicBlockBandMatrix, g: &Mat<Complex64>, z_grid: &[Complex64]) -> Result<TrialRecord> {
    for (k, &z) in z_grid.iter().enumerate() {
        let gap = log_det_gap(x, g, z)?;
        record = record.with(&format!("log_det_gap_z{k}"), gap.gap);
        let nu_x = spectra::empirical_measure_sq_sv(&spectra::singular_values(&x.shifted(z).to_dense()?)?)?;
        let nu_g = spectra::empirical_measure_sq_sv(&spectra::singular_values(&shift_dense(g, z))?)?;
        let a = nu_x.atoms()[0].min(nu_g.atoms()[0]);
        let b = nu_x.atoms().last().unwrap().max(*nu_g.atoms().last().unwrap());
        if a > 0.0 && a < b {
            record = record
                .with(&format!("interval_distance_z{k}"), interval_distance(&nu_x, &nu_g, a, b))
                .with(&format!("log_integral_bound_z{k}"), log_integral_bound(&nu_x, &nu_g, a, b));
        }
    }
    Ok(record)
}

fn summarize_hermitization(report: &mut ExperimentReport, grid_len: usize) {
    for k in 0..grid_len {
        let gaps: Vec<f64> = report.column(&format!("log_det_gap_z{k}"));
        report.set_summary(&format!("median_abs_log_det_gap_z{k}"), median(&gaps.iter().map(|g| g.abs()).collect::<Vec<_>>()));
        let bounds = report.column(&format!("log_integral_bound_z{k}"));
        if bounds.len() == gaps.len() {
            // integral of log against nu is (2/n) log|det|
            let ok = gaps.iter().zip(&bounds).all(|(g, bd)| 2.0 * g.abs() <= bd * (1.0 + 1e-9) + 1e-12);
            report.check_flag(&format!("log_integral_bound_z{k}"), ok, "2 |gap| <= 2 (|ln b| + |ln a|) ||nu_X - nu_G||_[a,b]");
        }
    }
}

/// Log-determinant gaps between the band matrix and a Ginibre matrix of the
/// atom's field over `cfg.z_grid`, without the eigenvalue step.
pub fn girko_compare(cfg: &CircularLawConfig) -> Result<ExperimentReport> {
    crate::bandmat::check_dims(cfg.n, cfg.b)?;
    if cfg.trials == 0 || cfg.z_grid.is_empty() {
        return Err(Error::InvalidParameter("need at least one trial and one shift".into()));
    }
    let field = Field::of(&cfg.atom);
    let records: Vec<TrialRecord> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed::trial_seed(cfg.seed, t);
            let x = PeriodicBlockBandMatrix::generate(cfg.n, cfg.b, &cfg.atom, s, true)?;
            let g = ginibre(cfg.n, seed::substream(s, GINIBRE_TAG), field)?;
            hermitization_record(TrialRecord::new(t, s), &x, &g, &cfg.z_grid)
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("girko-compare", cfg.seed)
        .config("n", cfg.n)
        .config("b", cfg.b)
        .config("atom", cfg.atom.name())
        .config("trials", cfg.trials)
        .config("z_grid", cfg.z_grid.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    report.trials = records;
    report.set_summary("in_hypothesis_regime", in_hypothesis_regime(cfg.n, cfg.b));
    report.set_summary("baseline_field", field);
    summarize_hermitization(&mut report, cfg.z_grid.len());
    Ok(report)
}

/// `eigenvalues.csv`: `trial,re,im`.
pub fn eigenvalues_csv(eigs: &[Vec<Complex64>]) -> String {
    let mut out = String::from("trial,re,im\n");
    for (t, list) in eigs.iter().enumerate() {
        for l in list {
            let _ = writeln!(out, "{t},{},{}", l.re, l.im);
        }
    }
    out
}

/// `discrepancy.csv`: `trial,radial_sup,angular_sup`.
pub fn discrepancy_csv(rows: &[DiscrepancyReport]) -> String {
    let mut out = String::from("trial,radial_sup,angular_sup\n");
    for (t, d) in rows.iter().enumerate() {
        let _ = writeln!(out, "{t},{},{}", d.radial_sup, d.angular_sup);
    }
    out
}

/// Whitespace-delimited `re im` lines for gnuplot, with `#` comment headers.
pub fn plotdata(eigs: &[Vec<Complex64>], header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    out.push_str("# re im\n");
    for (t, list) in eigs.iter().enumerate() {
        if t > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# trial {t}");
        for l in list {
            let _ = writeln!(out, "{} {}", l.re, l.im);
        }
    }
    out
}
