//! Stieltjes transforms of `nu_{X_z}`: the empirical transform, the limiting
//! cubic fixed point, density inversion, distances and the rate experiment.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock, RwLock};

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::AtomDistribution;
use crate::bandmat::PeriodicBlockBandMatrix;
use crate::error::{Error, Result};
use crate::report::{mean, std_error, ExperimentReport, TrialRecord};
use crate::seed;
use crate::spectra::{self, EmpiricalMeasure};

const IM_TOL: f64 = 1e-12;
const AMBIGUITY: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn require_upper(zeta: Complex64) -> Result<()> {
    if zeta.im > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("zeta must lie in the upper half-plane, got {zeta}")))
    }
}

/// `(1/n) sum 1 / (x_i - zeta)` over the atoms of `nu`.
pub fn empirical_transform(nu: &EmpiricalMeasure, zeta: Complex64) -> Result<Complex64> {
    require_upper(zeta)?;
    let sum: Complex64 = nu.atoms().iter().map(|&x| (c(x, 0.0) - zeta).inv()).sum();
    Ok(sum / nu.len() as f64)
}

/// `f(s) = [ |z|^2 / (1 + s) - (1 + s) zeta ]^{-1}`.
pub fn eval_f(s: Complex64, z: Complex64, zeta: Complex64) -> Result<Complex64> {
    let one_s = c(1.0, 0.0) + s;
    if one_s.norm() == 0.0 {
        return Err(Error::Singular("f has a pole at s = -1".into()));
    }
    let bracket = z.norm_sqr() / one_s - one_s * zeta;
    if bracket.norm() == 0.0 {
        return Err(Error::Singular("f: bracket vanishes".into()));
    }
    Ok(bracket.inv())
}

/// Coefficients `(c3, c2, c1, c0)` of `zeta m^3 + 2 zeta m^2 + (1 + zeta - |z|^2) m + 1`.
pub fn cubic_coefficients(z: Complex64, zeta: Complex64) -> [Complex64; 4] {
    [zeta, 2.0 * zeta, c(1.0 - z.norm_sqr(), 0.0) + zeta, c(1.0, 0.0)]
}

fn cubic_eval(k: &[Complex64; 4], m: Complex64) -> (Complex64, Complex64) {
    let p = ((k[0] * m + k[1]) * m + k[2]) * m + k[3];
    let dp = (3.0 * k[0] * m + 2.0 * k[1]) * m + k[2];
    (p, dp)
}

/// The three roots of the cubic from the companion matrix, each polished by Newton.
pub fn cubic_roots(z: Complex64, zeta: Complex64) -> Result<[Complex64; 3]> {
    let k = cubic_coefficients(z, zeta);
    if k[0].norm() == 0.0 {
        return Err(Error::InvalidParameter("zeta = 0 degenerates the cubic".into()));
    }
    let a = [k[1] / k[0], k[2] / k[0], k[3] / k[0]];
    let comp = Mat::from_fn(3, 3, |i, j| {
        if i == 0 {
            -a[j]
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let ev = comp.eigenvalues().map_err(|e| Error::Convergence(format!("companion eigensolver: {e:?}")))?;
    let mut roots = [c(0.0, 0.0); 3];
    for (r, mut m) in roots.iter_mut().zip(ev) {
        for _ in 0..8 {
            let (p, dp) = cubic_eval(&k, m);
            if dp.norm() == 0.0 {
                break;
            }
            let next = m - p / dp;
            if cubic_eval(&k, next).0.norm() >= p.norm() {
                break;
            }
            m = next;
        }
        *r = m;
    }
    Ok(roots)
}

/// A selected root with the data needed to audit the choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub m: Complex64,
    pub roots: [Complex64; 3],
    pub root_index: usize,
    /// `|zeta m^3 + 2 zeta m^2 + (1 + zeta - |z|^2) m + 1|`.
    pub cubic_residual: f64,
    /// `|m - f(m)|`.
    pub fixed_point_residual: f64,
    /// `Im(sqrt(zeta) m)` shares the sign of `Im sqrt(zeta)`.
    pub sqrt_branch_ok: bool,
    /// `Im(zeta m) >= 0`, the form in which the branch is sometimes stated.
    pub zeta_m_branch_ok: bool,
    /// `|sqrt(zeta) m| <= 1 + 1e-8`.
    pub sqrt_bound_ok: bool,
}

/// `m_z(zeta)` for a fixed shift `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitTransform {
    pub z: Complex64,
}

impl LimitTransform {
    pub fn new(z: Complex64) -> Self {
        Self { z }
    }

    pub fn eval(&self, zeta: Complex64) -> Result<Complex64> {
        Ok(self.eval_detailed(zeta)?.m)
    }

    /// Root of the cubic with `Im m > 0` and `Im(sqrt(zeta) m)` of the sign of
    /// `Im sqrt(zeta)` (principal square root), with `|sqrt(zeta) m| <= 1` as tiebreaker.
    pub fn eval_detailed(&self, zeta: Complex64) -> Result<LimitValue> {
        require_upper(zeta)?;
        let z = self.z;
        let roots = cubic_roots(z, zeta)?;
        let sq = zeta.sqrt();
        let sign = sq.im.signum();
        // the sign test on Im(sqrt(zeta) m) is relative: near the origin every
        // root is scaled by |sqrt(zeta)| and an absolute slack admits spurious ones
        let same_sign = |m: &Complex64| (sq * m).im * sign > -IM_TOL * (sq * m).norm();
        let qualifies = |m: &Complex64| m.im > -IM_TOL && same_sign(m);
        let mut cands: Vec<usize> = (0..3).filter(|&i| qualifies(&roots[i])).collect();
        if cands.len() > 1 {
            let bounded: Vec<usize> =
                cands.iter().copied().filter(|&i| (sq * roots[i]).norm() <= 1.0 + AMBIGUITY).collect();
            if !bounded.is_empty() {
                cands = bounded;
            }
        }
        let Some(&first) = cands.first() else {
            return Err(Error::Branch(format!("no root of the cubic satisfies the branch conditions at z={z}, zeta={zeta}")));
        };
        if cands.iter().any(|&i| (roots[i] - roots[first]).norm() > AMBIGUITY) {
            return Err(Error::Branch(format!("ambiguous branch at z={z}, zeta={zeta}: roots {roots:?}")));
        }
        let m = roots[first];
        let k = cubic_coefficients(z, zeta);
        let fixed = eval_f(m, z, zeta).map(|f| (m - f).norm()).unwrap_or(f64::INFINITY);
        Ok(LimitValue {
            m,
            roots,
            root_index: first,
            cubic_residual: cubic_eval(&k, m).0.norm(),
            fixed_point_residual: fixed,
            sqrt_branch_ok: same_sign(&m),
            zeta_m_branch_ok: (zeta * m).im > -IM_TOL,
            sqrt_bound_ok: (sq * m).norm() <= 1.0 + AMBIGUITY,
        })
    }
}

pub fn limit_transform(z: Complex64, zeta: Complex64) -> Result<Complex64> {
    LimitTransform::new(z).eval(zeta)
}

/// Density of `nu_z` at `x` by Stieltjes inversion `(1/pi) Im m_z(x + i eta)`.
pub fn limit_density(z: Complex64, x: f64, eta_small: f64) -> Result<f64> {
    if !(eta_small > 0.0 && eta_small <= 1e-2) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1e-2], got {eta_small}")));
    }
    let m = limit_transform(z, c(x, eta_small))?;
    Ok((m.im / std::f64::consts::PI).max(0.0))
}

/// Default inversion height for density evaluation.
pub const DEFAULT_ETA: f64 = 1e-6;

/// `A = max(4, (1 + |z|)^2 + 2)`.
pub fn default_a(z: Complex64) -> f64 {
    4f64.max((1.0 + z.norm()).powi(2) + 2.0)
}

/// `q_n = n log n / b^2`, the scale of the interval-distance rate.
pub fn q_n(n: usize, b: usize) -> f64 {
    let nf = n as f64;
    nf * nf.ln() / (b as f64).powi(2)
}

/// Points `theta + i eta` with `theta` uniform in the open interval `(-A, A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StieltjesGrid {
    pub a: f64,
    pub eta: f64,
    pub points: Vec<Complex64>,
}

impl StieltjesGrid {
    pub fn new(a: f64, eta: f64, count: usize) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) || !(a > 0.0) || count == 0 {
            return Err(Error::InvalidParameter(format!("grid needs A > 0, 0 < eta < 1, count > 0 (A={a}, eta={eta})")));
        }
        let points = (0..count).map(|k| c(-a + 2.0 * a * (k as f64 + 0.5) / count as f64, eta)).collect();
        Ok(Self { a, eta, points })
    }
}

/// Cumulative distribution of `nu_z`, tabulated once per `z`.
///
/// The density is integrated in `t = sqrt(x)` so the `x^{-1/2}` edge at the
/// origin becomes bounded; adaptive trapezoid with absolute tolerance `1e-4`.
#[derive(Debug, Clone)]
pub struct LimitCdf {
    z: Complex64,
    knots: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
    support_max: f64,
}

const CDF_TOL: f64 = 1e-4;

impl LimitCdf {
    pub fn build(z: Complex64) -> Result<Self> {
        // ||X|| -> 2, so squared singular values of X - z sit below (2 + |z|)^2
        let x_max = (2.0 + z.norm()).powi(2) + 1.0;
        let t_max = x_max.sqrt();
        // eta shrinks with x so the inverse-square-root edge at 0 is resolved
        let g = |t: f64| -> Result<f64> {
            let x = t * t;
            if x < 1e-12 {
                return Ok(0.0);
            }
            Ok(2.0 * t * limit_density(z, x, DEFAULT_ETA * x.min(1.0))?)
        };
        let coarse = 512usize;
        let mut knots = vec![0.0];
        let mut values = vec![g(0.0)?];
        for k in 0..coarse {
            let a = t_max * k as f64 / coarse as f64;
            let b = t_max * (k + 1) as f64 / coarse as f64;
            let (ga, gb) = (*values.last().unwrap(), g(b)?);
            refine(&g, a, b, ga, gb, CDF_TOL / coarse as f64, 0, &mut knots, &mut values)?;
            knots.push(b);
            values.push(gb);
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..knots.len() {
            acc += 0.5 * (knots[i] - knots[i - 1]) * (values[i] + values[i - 1]);
            cumulative.push(acc);
        }
        // density floor well above the O(eta) leakage of the inversion
        let last = knots.iter().zip(&values).rposition(|(&t, &v)| t > 0.0 && v / (2.0 * t) > 1e-4).unwrap_or(0);
        let support_max = knots[(last + 1).min(knots.len() - 1)].powi(2);
        Ok(Self { z, knots, values, cumulative, support_max })
    }

    /// Shared table for `z`; concurrent readers, fills serialized under the write lock.
    pub fn cached(z: Complex64) -> Result<Arc<LimitCdf>> {
        static CACHE: OnceLock<RwLock<HashMap<(u64, u64), Arc<LimitCdf>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(hit) = cache.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let mut guard = cache.write().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = guard.get(&key) {
            return Ok(hit.clone());
        }
        let table = Arc::new(Self::build(z)?);
        guard.insert(key, table.clone());
        Ok(table)
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// Total integrated mass (one up to quadrature error).
    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Right end of the numerically detected support.
    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = x.sqrt();
        let last = self.knots.len() - 1;
        if t >= self.knots[last] {
            return self.total_mass().min(1.0);
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        let (ta, tb) = (self.knots[i], self.knots[i + 1]);
        let (ga, gb) = (self.values[i], self.values[i + 1]);
        let gt = ga + (gb - ga) * (t - ta) / (tb - ta);
        (self.cumulative[i] + 0.5 * (t - ta) * (ga + gt)).clamp(0.0, 1.0)
    }
}

#[allow(clippy::too_many_arguments)]
fn refine(
    g: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    ga: f64,
    gb: f64,
    tol: f64,
    depth: u32,
    knots: &mut Vec<f64>,
    values: &mut Vec<f64>,
) -> Result<()> {
    let mid = 0.5 * (a + b);
    let gm = g(mid)?;
    let coarse = 0.5 * (b - a) * (ga + gb);
    let fine = 0.25 * (b - a) * (ga + 2.0 * gm + gb);
    if (coarse - fine).abs() <= tol || depth >= 24 {
        return Ok(());
    }
    refine(g, a, mid, ga, gm, 0.5 * tol, depth + 1, knots, values)?;
    knots.push(mid);
    values.push(gm);
    refine(g, mid, b, gm, gb, 0.5 * tol, depth + 1, knots, values)
}

/// `sup_x |mu((-inf, x]) - nu((-inf, x])|`, checked on both sides of every jump of `mu`.
pub fn ks_distance(mu: &EmpiricalMeasure, nu_cdf: impl Fn(f64) -> f64) -> f64 {
    let atoms = mu.atoms();
    let n = atoms.len() as f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < atoms.len() {
        let x = atoms[i];
        let j = atoms[i..].partition_point(|&a| a <= x) + i;
        let left = i as f64 / n;
        let right = j as f64 / n;
        sup = sup.max((left - nu_cdf(x.next_down())).abs());
        sup = sup.max((right - nu_cdf(x)).abs());
        i = j;
    }
    sup.min(1.0)
}

/// `(4 sqrt(A) / Im zeta) |m_n - f(m_n)|`, the stability bound on `|m_n - m|`.
pub fn stability_bound(m_n: Complex64, z: Complex64, zeta: Complex64, a: f64) -> Result<f64> {
    let f = eval_f(m_n, z, zeta)?;
    Ok(4.0 * a.sqrt() / zeta.im.abs() * (m_n - f).norm())
}

/// One row of `stieltjes.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesRow {
    pub zeta: Complex64,
    pub m_emp: Complex64,
    pub m_lim: Complex64,
}

impl StieltjesRow {
    pub fn abs_diff(&self) -> f64 {
        (self.m_emp - self.m_lim).norm()
    }
}

pub const STIELTJES_CSV_HEADER: &str = "zeta_re,zeta_im,m_emp_re,m_emp_im,m_lim_re,m_lim_im,abs_diff";

pub fn stieltjes_csv(rows: &[StieltjesRow]) -> String {
    let mut out = String::from(STIELTJES_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.zeta.re,
            r.zeta.im,
            r.m_emp.re,
            r.m_emp.im,
            r.m_lim.re,
            r.m_lim.im,
            r.abs_diff()
        );
    }
    out
}

/// Empirical and limiting transforms of one sampled `X_z` along a grid.
pub fn stieltjes_rows(nu: &EmpiricalMeasure, z: Complex64, grid: &StieltjesGrid) -> Result<Vec<StieltjesRow>> {
    let lt = LimitTransform::new(z);
    grid.points
        .iter()
        .map(|&zeta| Ok(StieltjesRow { zeta, m_emp: empirical_transform(nu, zeta)?, m_lim: lt.eval(zeta)? }))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RateConfig {
    pub n: usize,
    pub b: usize,
    pub z: Complex64,
    pub zeta: Complex64,
    pub p: u32,
    pub trials: usize,
    pub seed: u64,
    pub atom: AtomDistribution,
}

/// Monte-Carlo estimate of `E |m_{n,z}(zeta) - m_z(zeta)|^{2p}` with its
/// standard error and the bound's decay term `(n / c_n^2)^p + c_n^{-p/2}`.
pub fn rate_experiment(cfg: &RateConfig) -> Result<ExperimentReport> {
    if cfg.trials == 0 || cfg.p == 0 {
        return Err(Error::InvalidParameter("trials and p must be positive".into()));
    }
    if !(cfg.zeta.im > 0.0 && cfg.zeta.im < 1.0) {
        return Err(Error::InvalidParameter(format!("Im zeta must lie in (0, 1), got {}", cfg.zeta.im)));
    }
    let a = default_a(cfg.z);
    if cfg.zeta.re.abs() >= a {
        return Err(Error::InvalidParameter(format!("|Re zeta| must be below A = {a}")));
    }
    crate::bandmat::check_dims(cfg.n, cfg.b)?;
    let m_lim = limit_transform(cfg.z, cfg.zeta)?;
    let records: Vec<TrialRecord> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed::trial_seed(cfg.seed, t);
            let x = PeriodicBlockBandMatrix::generate(cfg.n, cfg.b, &cfg.atom, s, true)?;
            let nu = EmpiricalMeasure::new(spectra::squared_singular_values(&x.shifted(cfg.z))?)?;
            let m_n = empirical_transform(&nu, cfg.zeta)?;
            let diff = (m_n - m_lim).norm();
            Ok(TrialRecord::new(t, s)
                .with("m_emp_re", m_n.re)
                .with("m_emp_im", m_n.im)
                .with("abs_diff", diff)
                .with("moment", diff.powi(2 * cfg.p as i32))
                .with("stability_bound", stability_bound(m_n, cfg.z, cfg.zeta, a)?))
        })
        .collect::<Result<_>>()?;
    let c_n = (3 * cfg.b) as f64;
    let p = cfg.p as f64;
    let bound_term = (cfg.n as f64 / (c_n * c_n)).powf(p) + c_n.powf(-p / 2.0);
    let mut report = ExperimentReport::new("stieltjes-rate", cfg.seed)
        .config("n", cfg.n)
        .config("b", cfg.b)
        .config("z", [cfg.z.re, cfg.z.im])
        .config("zeta", [cfg.zeta.re, cfg.zeta.im])
        .config("p", cfg.p)
        .config("trials", cfg.trials)
        .config("atom", cfg.atom.name());
    report.trials = records;
    let moments = report.column("moment");
    let est = mean(&moments);
    report.set_summary("m_lim", [m_lim.re, m_lim.im]);
    report.set_summary("estimate", est);
    report.set_summary("std_error", std_error(&moments));
    report.set_summary("bound_term", bound_term);
    report.set_summary("fitted_constant", est / bound_term);
    report.set_summary("A", a);
    let omega = cfg.atom.moment(4.0 * p).ok();
    report.set_summary("omega_4p", omega);
    let stable = report.trials.iter().all(|t| t.get("abs_diff").unwrap() <= t.get("stability_bound").unwrap() * (1.0 + 1e-9));
    report.check_flag("stability_bound", stable, "|m_n - m| <= (4 sqrt(A) / Im zeta) |m_n - f(m_n)| on every trial");
    Ok(report)
}
