//! Eigenvalues, singular values, empirical measures and norm diagnostics.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bandmat::{BlockKind, PeriodicBlockBandMatrix, ShiftedMatrix, DEFAULT_DENSE_GUARD};
use crate::error::{Error, Result};

/// Relative cutoff for rank and zero decisions.
pub const RANK_CUTOFF: f64 = 1e-8;

fn is_real_dense(m: &Mat<Complex64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

fn real_part(m: &Mat<Complex64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

fn check_square(m: &Mat<Complex64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
    }
    if m.nrows() > DEFAULT_DENSE_GUARD {
        return Err(Error::DenseGuard { n: m.nrows(), cap: DEFAULT_DENSE_GUARD });
    }
    Ok(m.nrows())
}

/// Real dense copy of `X - zI` when both the blocks and `z` are real.
///
/// Builds the `f64` matrix directly so the complex copy never exists.
pub fn real_dense(sm: &ShiftedMatrix<'_>) -> Result<Option<Mat<f64>>> {
    let base = sm.base();
    if sm.z().im != 0.0 || !base.is_real() {
        return Ok(None);
    }
    let (n, b, m) = (base.n(), base.b(), base.m());
    if n > DEFAULT_DENSE_GUARD {
        return Err(Error::DenseGuard { n, cap: DEFAULT_DENSE_GUARD });
    }
    let s = base.scale();
    let mut out = Mat::<f64>::zeros(n, n);
    for kind in BlockKind::ALL {
        for c in 0..m {
            let r = kind.row_of(c, m);
            let blk = base.block(kind, c);
            for j in 0..b {
                for i in 0..b {
                    out[(r * b + i, c * b + j)] += blk[(i, j)].re * s;
                }
            }
        }
    }
    for i in 0..n {
        out[(i, i)] -= sm.z().re;
    }
    Ok(Some(out))
}

/// All `n` eigenvalues of a dense square matrix, counted with multiplicity.
/// Real input goes through the real Schur path.
pub fn eigenvalues(m: &Mat<Complex64>) -> Result<Vec<Complex64>> {
    check_square(m)?;
    if is_real_dense(m) {
        return eigenvalues_real(&real_part(m));
    }
    m.eigenvalues().map_err(|e| Error::Convergence(format!("eigensolver: {e:?}")))
}

pub fn eigenvalues_real(m: &Mat<f64>) -> Result<Vec<Complex64>> {
    m.eigenvalues().map_err(|e| Error::Convergence(format!("eigensolver: {e:?}")))
}

/// Eigenvalues of `X - zI`, holding a single dense copy.
pub fn eigenvalues_shifted(sm: &ShiftedMatrix<'_>) -> Result<Vec<Complex64>> {
    match real_dense(sm)? {
        Some(r) => eigenvalues_real(&r),
        None => {
            let d = sm.to_dense()?;
            d.eigenvalues().map_err(|e| Error::Convergence(format!("eigensolver: {e:?}")))
        }
    }
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &Mat<Complex64>) -> Result<Vec<f64>> {
    if m.nrows().max(m.ncols()) > DEFAULT_DENSE_GUARD {
        return Err(Error::DenseGuard { n: m.nrows().max(m.ncols()), cap: DEFAULT_DENSE_GUARD });
    }
    if is_real_dense(m) {
        return singular_values_real(&real_part(m));
    }
    m.singular_values().map_err(|e| Error::Convergence(format!("svd: {e:?}")))
}

pub fn singular_values_real(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Convergence(format!("svd: {e:?}")))
}

pub fn singular_values_shifted(sm: &ShiftedMatrix<'_>) -> Result<Vec<f64>> {
    match real_dense(sm)? {
        Some(r) => singular_values_real(&r),
        None => {
            let d = sm.to_dense()?;
            d.singular_values().map_err(|e| Error::Convergence(format!("svd: {e:?}")))
        }
    }
}

/// Eigenvalues of `(X - zI)(X - zI)^*` in non-decreasing order, clamped at zero.
///
/// The Gram matrix is assembled blockwise and handed to the Hermitian solver,
/// which is several times cheaper than a full SVD when only `nu_{X_z}` is needed.
pub fn squared_singular_values(sm: &ShiftedMatrix<'_>) -> Result<Vec<f64>> {
    let gram = sm.gram_dense()?;
    let ev = if is_real_dense(&gram) {
        real_part(&gram).self_adjoint_eigenvalues(faer::Side::Lower)
    } else {
        gram.self_adjoint_eigenvalues(faer::Side::Lower)
    }
    .map_err(|e| Error::Convergence(format!("hermitian eigensolver: {e:?}")))?;
    Ok(ev.into_iter().map(|x| x.max(0.0)).collect())
}

/// `s_n(X - zI)`.
pub fn least_singular_value(sm: &ShiftedMatrix<'_>) -> Result<f64> {
    let s = singular_values_shifted(sm)?;
    Ok(s.last().copied().unwrap_or(0.0))
}

/// `log |det M|` from singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogAbsDet {
    /// `sum log s_i`, or negative infinity when the matrix is numerically singular.
    pub value: f64,
    /// Some `s_i <= 1e-8 s_1`.
    pub singular: bool,
    pub smallest_sv: f64,
}

pub fn log_abs_det_from_svs(svs: &[f64]) -> LogAbsDet {
    let s1 = svs.iter().copied().fold(0.0, f64::max);
    let smallest = svs.iter().copied().fold(f64::INFINITY, f64::min);
    let singular = svs.is_empty() || s1 == 0.0 || smallest <= RANK_CUTOFF * s1;
    let value = if singular { f64::NEG_INFINITY } else { svs.iter().map(|s| s.ln()).sum() };
    LogAbsDet { value, singular, smallest_sv: if svs.is_empty() { 0.0 } else { smallest } }
}

pub fn log_abs_det(sm: &ShiftedMatrix<'_>) -> Result<LogAbsDet> {
    Ok(log_abs_det_from_svs(&singular_values_shifted(sm)?))
}

pub fn log_abs_det_dense(m: &Mat<Complex64>) -> Result<LogAbsDet> {
    check_square(m)?;
    Ok(log_abs_det_from_svs(&singular_values(m)?))
}

/// Parameters of the good event: block norms at most `k`, and `U`, `T`
/// blocks with smallest singular value at least `b^(-sv_floor_exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventEkParams {
    pub k: f64,
    pub sv_floor_exponent: f64,
}

impl EventEkParams {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("K must be positive, got {k}")));
        }
        Ok(Self { k, sv_floor_exponent: 5.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EkCondition {
    NormU,
    NormD,
    NormT,
    SminU,
    SminT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkWitness {
    pub condition: EkCondition,
    /// 0-based block column index.
    pub block: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkOutcome {
    pub holds: bool,
    pub witness: Option<EkWitness>,
}

/// Per-block quantities entering the good event, in checking order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub norm_u: f64,
    pub norm_d: f64,
    pub norm_t: f64,
    pub smin_u: f64,
    pub smin_t: f64,
}

impl BlockDiagnostics {
    pub fn max_norm(&self) -> f64 {
        self.norm_u.max(self.norm_d).max(self.norm_t)
    }
}

fn extreme_svs(blk: &Mat<Complex64>) -> Result<(f64, f64)> {
    let s = singular_values(blk)?;
    Ok((s[0], *s.last().unwrap()))
}

/// Norms and smallest singular values of the scaled blocks, one entry per block column.
pub fn block_diagnostics(x: &PeriodicBlockBandMatrix, z: Complex64) -> Result<Vec<BlockDiagnostics>> {
    let sm = x.shifted(z);
    (0..x.m())
        .map(|i| {
            let (norm_u, smin_u) = extreme_svs(&sm.shifted_block(BlockKind::U, i))?;
            let (norm_d, _) = extreme_svs(&sm.shifted_block(BlockKind::D, i))?;
            let (norm_t, smin_t) = extreme_svs(&sm.shifted_block(BlockKind::T, i))?;
            Ok(BlockDiagnostics { norm_u, norm_d, norm_t, smin_u, smin_t })
        })
        .collect()
}

/// Evaluates the good event; the witness is the first failing condition in
/// block order, checking `||U_i||, ||(D_i)_z||, ||T_i||, s_min(U_i), s_min(T_i)`.
pub fn check_event_ek(x: &PeriodicBlockBandMatrix, z: Complex64, params: &EventEkParams) -> Result<EkOutcome> {
    let diags = block_diagnostics(x, z)?;
    Ok(evaluate_event_ek(&diags, x.b(), params))
}

pub fn evaluate_event_ek(diags: &[BlockDiagnostics], b: usize, params: &EventEkParams) -> EkOutcome {
    let floor = (b as f64).powf(-params.sv_floor_exponent);
    for (i, d) in diags.iter().enumerate() {
        let checks = [
            (EkCondition::NormU, d.norm_u, d.norm_u <= params.k, params.k),
            (EkCondition::NormD, d.norm_d, d.norm_d <= params.k, params.k),
            (EkCondition::NormT, d.norm_t, d.norm_t <= params.k, params.k),
            (EkCondition::SminU, d.smin_u, d.smin_u >= floor, floor),
            (EkCondition::SminT, d.smin_t, d.smin_t >= floor, floor),
        ];
        if let Some(&(condition, value, _, bound)) = checks.iter().find(|c| !c.2) {
            return EkOutcome { holds: false, witness: Some(EkWitness { condition, block: i, value, bound }) };
        }
    }
    EkOutcome { holds: true, witness: None }
}

/// `||X||`: dense SVD within the guard, power iteration on `X X^*` beyond it.
pub fn spectral_norm(x: &PeriodicBlockBandMatrix) -> Result<f64> {
    let sm = x.shifted(Complex64::new(0.0, 0.0));
    if x.n() <= DEFAULT_DENSE_GUARD {
        Ok(singular_values_shifted(&sm)?[0])
    } else {
        spectral_norm_iterative(&sm, 1e-6, 20_000)
    }
}

/// Power iteration on `M^* M` using only band matvecs.
pub fn spectral_norm_iterative(sm: &ShiftedMatrix<'_>, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let n = sm.n();
    // deterministic start with no special alignment to the block structure
    let mut v: Vec<Complex64> =
        (0..n).map(|i| Complex64::new(1.0 + ((i * 7919) % 104_729) as f64 / 104_729.0, 0.0)).collect();
    normalize(&mut v);
    let mut est = 0.0f64;
    for _ in 0..max_iter {
        let w = sm.matvec(&v)?;
        let mut u = sm.matvec_adjoint(&w)?;
        let lambda = norm(&u);
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let next = lambda.sqrt();
        u.iter_mut().for_each(|x| *x /= lambda);
        v = u;
        if (next - est).abs() <= rel_tol * next {
            return Ok(next);
        }
        est = next;
    }
    Err(Error::Convergence(format!("power iteration did not reach {rel_tol} in {max_iter} steps")))
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let s = norm(v);
    v.iter_mut().for_each(|x| *x /= s);
}

/// Largest distance in a greedy nearest-neighbour pairing of two equal-size
/// multisets of complex numbers; infinite when the sizes differ.
pub fn matching_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Uniform-weight measure on the real line, atoms sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(mut atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("empirical measure needs at least one atom".into()));
        }
        if atoms.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidParameter("NaN atom".into()));
        }
        atoms.sort_by(f64::total_cmp);
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    /// `mu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.partition_point(|&a| a <= x) as f64 / self.atoms.len() as f64
    }

    /// `mu((-inf, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.atoms.partition_point(|&a| a < x) as f64 / self.atoms.len() as f64
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&a| f(a)).sum::<f64>() / self.atoms.len() as f64
    }
}

/// Uniform-weight measure on the plane, atoms sorted lexicographically by `(re, im)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexEmpiricalMeasure {
    atoms: Vec<Complex64>,
}

impl ComplexEmpiricalMeasure {
    pub fn atoms(&self) -> &[Complex64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    /// Mass of `{w : re w <= x, im w <= y}`.
    pub fn cdf(&self, x: f64, y: f64) -> f64 {
        self.atoms.iter().filter(|a| a.re <= x && a.im <= y).count() as f64 / self.atoms.len() as f64
    }
}

/// `mu_A` from eigenvalues.
pub fn empirical_measure_2d(eigs: &[Complex64]) -> Result<ComplexEmpiricalMeasure> {
    if eigs.is_empty() {
        return Err(Error::InvalidParameter("empirical measure needs at least one atom".into()));
    }
    let mut atoms = eigs.to_vec();
    atoms.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ComplexEmpiricalMeasure { atoms })
}

/// `nu_A` from singular values: atoms are the squares.
pub fn empirical_measure_sq_sv(svs: &[f64]) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::new(svs.iter().map(|s| s * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::AtomKind;
    use rand::RngExt;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_dense(n: usize, seed: u64) -> Mat<Complex64> {
        let mut rng = crate::seed::rng(seed);
        Mat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn eigenvalues_of_small_examples() {
        let d = Mat::from_fn(3, 3, |i, j| if i != j { c(0.0, 0.0) } else { [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)][i] });
        let got = sorted(eigenvalues(&d).unwrap());
        let want = sorted(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
        let rot = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(1.0, 0.0),
            (1, 0) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let got = sorted(eigenvalues(&rot).unwrap());
        assert!((got[0] - c(0.0, -1.0)).norm() < 1e-12 && (got[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn companion_matrix_roots_are_polynomial_roots() {
        let mut rng = crate::seed::rng(11);
        for _ in 0..20 {
            let a: Vec<Complex64> = (0..3).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
            // x^3 + a2 x^2 + a1 x + a0
            let comp = Mat::from_fn(3, 3, |i, j| {
                if i == 0 {
                    -a[2 - j]
                } else if i == j + 1 {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            for r in eigenvalues(&comp).unwrap() {
                let p = ((r + a[2]) * r + a[1]) * r + a[0];
                assert!(p.norm() < 1e-8, "residual {}", p.norm());
            }
        }
    }

    #[test]
    fn eigenvalue_backward_error_is_small() {
        let m = random_dense(40, 3);
        let s1 = singular_values(&m).unwrap()[0];
        for lam in eigenvalues(&m).unwrap() {
            let mut shifted = m.clone();
            for i in 0..40 {
                shifted[(i, i)] -= lam;
            }
            let smin = *singular_values(&shifted).unwrap().last().unwrap();
            assert!(smin <= 1e-8 * s1);
        }
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        for seed in 0..5 {
            let m = random_dense(8, seed);
            let s = singular_values(&m).unwrap();
            let gram = &m * m.adjoint();
            let mut ev = gram.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
            ev.sort_by(|a, b| b.total_cmp(a));
            for (si, ei) in s.iter().zip(&ev) {
                assert!((si - ei.max(0.0).sqrt()).abs() < 1e-10);
            }
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn singular_values_of_identity_and_rank_one() {
        let id = Mat::<Complex64>::identity(5, 5);
        assert!(singular_values(&id).unwrap().iter().all(|&s| (s - 1.0).abs() < 1e-14));
        let u = [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let r1 = Mat::from_fn(3, 3, |i, j| u[i] * u[j].conj());
        let s = singular_values(&r1).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-12 && s[1].abs() < 1e-12 && s[2].abs() < 1e-12);
    }

    #[test]
    fn least_singular_value_of_identity_blocks_matches_dense() {
        let x = PeriodicBlockBandMatrix::identity_blocks(9, 3, 1.0).unwrap();
        let sm = x.shifted(c(0.0, 0.0));
        let dense = singular_values(&sm.to_dense().unwrap()).unwrap();
        assert!((least_singular_value(&sm).unwrap() - dense[8]).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let mut m = random_dense(10, 1);
        for i in 0..10 {
            m[(i, 3)] = m[(i, 7)];
        }
        let s = singular_values(&m).unwrap();
        assert!(s[9] <= 1e-8 * s[0]);
        assert!(log_abs_det_dense(&m).unwrap().singular);
        assert_eq!(log_abs_det_dense(&m).unwrap().value, f64::NEG_INFINITY);
    }

    #[test]
    fn log_abs_det_examples() {
        let id = Mat::<Complex64>::identity(4, 4);
        assert!(log_abs_det_dense(&id).unwrap().value.abs() < 1e-15);
        let d = Mat::from_fn(2, 2, |i, j| if i == j { c([2.0, 0.5][i], 0.0) } else { c(0.0, 0.0) });
        assert!(log_abs_det_dense(&d).unwrap().value.abs() < 1e-15);
        for seed in 0..5 {
            let m = random_dense(10, 100 + seed);
            let lu = m.determinant().norm().ln();
            assert!((log_abs_det_dense(&m).unwrap().value - lu).abs() < 1e-8);
        }
    }

    #[test]
    fn shifted_band_log_det_matches_lu() {
        let x = PeriodicBlockBandMatrix::generate(30, 5, &AtomKind::GaussianComplex.into(), 2, true).unwrap();
        let sm = x.shifted(c(0.5, 0.2));
        let lu = sm.to_dense().unwrap().determinant().norm().ln();
        assert!((log_abs_det(&sm).unwrap().value - lu).abs() < 1e-8);
    }

    #[test]
    fn real_path_agrees_with_complex_path() {
        let x = PeriodicBlockBandMatrix::generate(30, 5, &AtomKind::Rademacher.into(), 5, true).unwrap();
        let sm = x.shifted(c(0.3, 0.0));
        assert!(real_dense(&sm).unwrap().is_some());
        let dense = sm.to_dense().unwrap();
        let a = eigenvalues_shifted(&sm).unwrap();
        let b = dense.eigenvalues().unwrap();
        assert!(matching_distance(&a, &b) < 1e-9);
        assert!(real_dense(&x.shifted(c(0.0, 1.0))).unwrap().is_none());
    }

    #[test]
    fn squared_singular_values_match_svd() {
        let x = PeriodicBlockBandMatrix::generate(40, 5, &AtomKind::GaussianComplex.into(), 12, true).unwrap();
        let sm = x.shifted(c(1.0, 0.5));
        let mut sq: Vec<f64> = singular_values_shifted(&sm).unwrap().iter().map(|s| s * s).collect();
        sq.reverse();
        for (a, b) in squared_singular_values(&sm).unwrap().iter().zip(&sq) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn event_ek_examples() {
        let x = PeriodicBlockBandMatrix::identity_blocks(12, 3, 1.0).unwrap();
        let p = EventEkParams::new(2.0).unwrap();
        assert!(check_event_ek(&x, c(0.0, 0.0), &p).unwrap().holds);
        let mut y = x.clone();
        *y.block_mut(BlockKind::U, 0) = Mat::zeros(3, 3);
        let out = check_event_ek(&y, c(0.0, 0.0), &p).unwrap();
        assert!(!out.holds);
        let w = out.witness.unwrap();
        assert_eq!((w.condition, w.block), (EkCondition::SminU, 0));
        // shift pushes the diagonal norm over K
        let out = check_event_ek(&x, c(5.0, 0.0), &p).unwrap();
        assert_eq!(out.witness.unwrap().condition, EkCondition::NormD);
        assert!(EventEkParams::new(0.0).is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        let x = PeriodicBlockBandMatrix::identity_blocks(6, 2, 1.0 / 6f64.sqrt()).unwrap();
        let dense = singular_values(&x.to_dense().unwrap()).unwrap()[0];
        assert!((spectral_norm(&x).unwrap() - dense).abs() < 1e-12);
        // circulant with three unit bands: norm 3 * scale
        assert!((dense - 3.0 / 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(spectral_norm(&PeriodicBlockBandMatrix::zeros(9, 3).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_matches_dense_norm() {
        let x = PeriodicBlockBandMatrix::generate(60, 5, &AtomKind::GaussianComplex.into(), 4, true).unwrap();
        let dense = spectral_norm(&x).unwrap();
        let it = spectral_norm_iterative(&x.shifted(c(0.0, 0.0)), 1e-10, 100_000).unwrap();
        assert!((dense - it).abs() < 1e-4 * dense);
    }

    #[test]
    fn empirical_measures() {
        let nu = empirical_measure_sq_sv(&[2.0, 1.0]).unwrap();
        assert_eq!(nu.atoms(), &[1.0, 4.0]);
        assert_eq!(nu.weight(), 0.5);
        assert_eq!(nu.cdf(f64::INFINITY), 1.0);
        assert_eq!(nu.cdf(1.0), 0.5);
        assert_eq!(nu.cdf_left(1.0), 0.0);
        let one = empirical_measure_sq_sv(&[3.0]).unwrap();
        assert_eq!(one.weight(), 1.0);
        assert!(empirical_measure_sq_sv(&[]).is_err());
        let mu = empirical_measure_2d(&[c(1.0, 0.0), c(-1.0, 2.0)]).unwrap();
        assert_eq!(mu.atoms()[0], c(-1.0, 2.0));
        assert_eq!(mu.cdf(f64::INFINITY, f64::INFINITY), 1.0);
        assert!(empirical_measure_2d(&[]).is_err());
    }
}
