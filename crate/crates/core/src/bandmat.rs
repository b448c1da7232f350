//! The periodic block-band matrix, its normalization and its shifts.
//!
//! Block column `c` (0-based) holds three `b x b` blocks: `D_c` on the
//! diagonal block `(c, c)`, `U_c` one block row above at `(c - 1, c)` and
//! `T_c` one block row below at `(c + 1, c)`, block indices taken modulo
//! `m`. Read along block row `i` this is `(T_{i-1}, D_i, U_{i+1})`, with
//! `T_{m-1}` in the top-right and `U_0` in the bottom-left corner.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atoms::AtomDistribution;
use crate::error::{Error, Result};
use crate::seed;

pub type Block = Mat<Complex64>;

/// Largest dimension for which a dense `n x n` complex copy is allowed
/// (about 6.4 GB at the cap).
pub const DEFAULT_DENSE_GUARD: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Diagonal block `D`.
    D,
    /// Sub-diagonal block `T`.
    T,
    /// Super-diagonal block `U`.
    U,
}

impl BlockKind {
    pub const ALL: [BlockKind; 3] = [BlockKind::D, BlockKind::T, BlockKind::U];

    /// Block row occupied by the block of this kind living in block column `col`.
    pub fn row_of(self, col: usize, m: usize) -> usize {
        match self {
            BlockKind::D => col,
            BlockKind::T => (col + 1) % m,
            BlockKind::U => (col + m - 1) % m,
        }
    }

    fn letter(self) -> char {
        match self {
            BlockKind::D => 'D',
            BlockKind::T => 'T',
            BlockKind::U => 'U',
        }
    }
}

/// Permutation symmetries under which the model's law is invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Conjugation by the transposition of global indices `i` and `j`, which
    /// must share a block interval.
    WithinBlockSwap { i: usize, j: usize },
    /// Conjugation by the permutation sending block interval `k` to `k + 1`.
    CyclicShift,
}

/// Validated `(n, b)` pair with `m = n / b >= 3`.
pub fn check_dims(n: usize, b: usize) -> Result<usize> {
    if n == 0 || b == 0 {
        return Err(Error::InvalidParameter(format!("n and b must be positive (n={n}, b={b})")));
    }
    if n % b != 0 {
        return Err(Error::Divisibility { n, b });
    }
    let m = n / b;
    if m < 3 {
        return Err(Error::TooFewBlocks { m });
    }
    Ok(m)
}

/// The block tri-diagonal matrix with wrap-around corners.
///
/// Blocks are stored unscaled; `scale` multiplies every entry on access
/// (`1` for the raw matrix, `1/sqrt(3b)` for the normalized one).
#[derive(Debug, Clone)]
pub struct PeriodicBlockBandMatrix {
    n: usize,
    b: usize,
    m: usize,
    diag: Vec<Block>,
    lower: Vec<Block>,
    upper: Vec<Block>,
    scale: f64,
}

impl PeriodicBlockBandMatrix {
    /// Fills `D_0..D_{m-1}`, then `T_0..`, then `U_0..`, each block column-major,
    /// from one stream seeded by `seed`.
    pub fn generate(n: usize, b: usize, dist: &AtomDistribution, seed: u64, normalized: bool) -> Result<Self> {
        let m = check_dims(n, b)?;
        let mut rng = seed::rng(seed);
        let mut draw_blocks = || -> Vec<Block> {
            (0..m)
                .map(|_| {
                    let mut blk = Block::zeros(b, b);
                    for j in 0..b {
                        for i in 0..b {
                            blk[(i, j)] = dist.draw(&mut rng);
                        }
                    }
                    blk
                })
                .collect()
        };
        let diag = draw_blocks();
        let lower = draw_blocks();
        let upper = draw_blocks();
        let scale = if normalized { normalization(b) } else { 1.0 };
        Ok(Self { n, b, m, diag, lower, upper, scale })
    }

    pub fn from_blocks(b: usize, diag: Vec<Block>, lower: Vec<Block>, upper: Vec<Block>, scale: f64) -> Result<Self> {
        let m = diag.len();
        if lower.len() != m || upper.len() != m {
            return Err(Error::InvalidParameter("block lists must have equal length".into()));
        }
        check_dims(m * b, b)?;
        for blk in diag.iter().chain(&lower).chain(&upper) {
            if blk.nrows() != b || blk.ncols() != b {
                return Err(Error::Dimension { expected: b, got: blk.nrows().max(blk.ncols()) });
            }
        }
        Ok(Self { n: m * b, b, m, diag, lower, upper, scale })
    }

    /// Every block equal to `fill(kind, col)`.
    pub fn from_fn(n: usize, b: usize, scale: f64, mut fill: impl FnMut(BlockKind, usize) -> Block) -> Result<Self> {
        let m = check_dims(n, b)?;
        let diag = (0..m).map(|c| fill(BlockKind::D, c)).collect();
        let lower = (0..m).map(|c| fill(BlockKind::T, c)).collect();
        let upper = (0..m).map(|c| fill(BlockKind::U, c)).collect();
        Self::from_blocks(b, diag, lower, upper, scale)
    }

    pub fn identity_blocks(n: usize, b: usize, scale: f64) -> Result<Self> {
        Self::from_fn(n, b, scale, |_, _| Block::identity(b, b))
    }

    pub fn zeros(n: usize, b: usize) -> Result<Self> {
        Self::from_fn(n, b, 1.0, |_, _| Block::zeros(b, b))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unscaled block of the given kind in block column `col`.
    pub fn block(&self, kind: BlockKind, col: usize) -> &Block {
        match kind {
            BlockKind::D => &self.diag[col % self.m],
            BlockKind::T => &self.lower[col % self.m],
            BlockKind::U => &self.upper[col % self.m],
        }
    }

    pub fn block_mut(&mut self, kind: BlockKind, col: usize) -> &mut Block {
        let m = self.m;
        match kind {
            BlockKind::D => &mut self.diag[col % m],
            BlockKind::T => &mut self.lower[col % m],
            BlockKind::U => &mut self.upper[col % m],
        }
    }

    /// Block with the scale applied.
    pub fn scaled_block(&self, kind: BlockKind, col: usize) -> Block {
        let s = self.scale;
        let blk = self.block(kind, col);
        Block::from_fn(self.b, self.b, |i, j| blk[(i, j)] * s)
    }

    /// True when every stored entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .all(|blk| (0..self.b).all(|j| (0..self.b).all(|i| blk[(i, j)].im == 0.0)))
    }

    pub fn shifted(&self, z: Complex64) -> ShiftedMatrix<'_> {
        ShiftedMatrix { base: self, z }
    }

    pub fn to_dense(&self) -> Result<Mat<Complex64>> {
        self.shifted(Complex64::new(0.0, 0.0)).to_dense()
    }

    /// Dense export with an explicit memory cap.
    pub fn to_dense_with_guard(&self, cap: usize) -> Result<Mat<Complex64>> {
        self.shifted(Complex64::new(0.0, 0.0)).to_dense_with_guard(cap)
    }

    /// Reads the unscaled blocks back out of a dense copy of this pattern.
    pub fn extract_blocks(dense: &Mat<Complex64>, b: usize, scale: f64) -> Result<Self> {
        let n = dense.nrows();
        if dense.ncols() != n {
            return Err(Error::Dimension { expected: n, got: dense.ncols() });
        }
        let m = check_dims(n, b)?;
        Self::from_fn(n, b, scale, |kind, c| {
            let r = kind.row_of(c, m);
            Block::from_fn(b, b, |i, j| dense[(r * b + i, c * b + j)] / scale)
        })
    }

    /// `P X P^{-1}` for the given permutation symmetry.
    pub fn conjugate_by_symmetry(&self, sym: Symmetry) -> Result<Self> {
        let mut out = self.clone();
        match sym {
            Symmetry::CyclicShift => {
                for c in 0..self.m {
                    let to = (c + 1) % self.m;
                    out.diag[to] = self.diag[c].clone();
                    out.lower[to] = self.lower[c].clone();
                    out.upper[to] = self.upper[c].clone();
                }
            }
            Symmetry::WithinBlockSwap { i, j } => {
                if i >= self.n || j >= self.n {
                    return Err(Error::InvalidParameter(format!("index out of range: ({i}, {j}) for n = {}", self.n)));
                }
                let k = i / self.b;
                if j / self.b != k {
                    return Err(Error::InvalidParameter(format!(
                        "indices {i} and {j} lie in different block intervals"
                    )));
                }
                let (li, lj) = (i % self.b, j % self.b);
                let m = self.m;
                // rows li, lj of block row k: T_{k-1}, D_k, U_{k+1}
                for (kind, col) in [(BlockKind::T, (k + m - 1) % m), (BlockKind::D, k), (BlockKind::U, (k + 1) % m)] {
                    swap_rows(out.block_mut(kind, col), li, lj);
                }
                // columns li, lj of block column k: U_k, D_k, T_k
                for kind in BlockKind::ALL {
                    swap_cols(out.block_mut(kind, k), li, lj);
                }
            }
        }
        Ok(out)
    }

    /// CSV of nonzero dense entries with header `row,col,re,im` (0-based indices).
    pub fn write_dense_csv(&self, path: &Path) -> Result<()> {
        let mut rows: Vec<(usize, usize, Complex64)> = Vec::with_capacity(3 * self.n * self.b);
        for kind in BlockKind::ALL {
            for c in 0..self.m {
                let r = kind.row_of(c, self.m);
                let blk = self.block(kind, c);
                for j in 0..self.b {
                    for i in 0..self.b {
                        let v = blk[(i, j)] * self.scale;
                        if v.re != 0.0 || v.im != 0.0 {
                            rows.push((r * self.b + i, c * self.b + j, v));
                        }
                    }
                }
            }
        }
        rows.sort_by_key(|&(r, c, _)| (r, c));
        let mut out = String::from("row,col,re,im\n");
        for (r, c, v) in rows {
            let _ = writeln!(out, "{r},{c},{},{}", v.re, v.im);
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// One CSV per unscaled block (`D_000.csv`, `T_000.csv`, ...) plus `meta.json`.
    pub fn write_block_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = serde_json::json!({ "n": self.n, "b": self.b, "m": self.m, "scale": self.scale });
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        for kind in BlockKind::ALL {
            for c in 0..self.m {
                let blk = self.block(kind, c);
                let mut out = String::from("row,col,re,im\n");
                for i in 0..self.b {
                    for j in 0..self.b {
                        let v = blk[(i, j)];
                        let _ = writeln!(out, "{i},{j},{},{}", v.re, v.im);
                    }
                }
                fs::write(dir.join(format!("{}_{c:03}.csv", kind.letter())), out)?;
            }
        }
        Ok(())
    }

    pub fn read_block_dir(dir: &Path) -> Result<Self> {
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let get = |key: &str| {
            meta[key].as_u64().map(|v| v as usize).ok_or_else(|| Error::InvalidParameter(format!("meta.json lacks '{key}'")))
        };
        let (n, b) = (get("n")?, get("b")?);
        let scale = meta["scale"].as_f64().ok_or_else(|| Error::InvalidParameter("meta.json lacks 'scale'".into()))?;
        let m = check_dims(n, b)?;
        let load = |kind: BlockKind| -> Result<Vec<Block>> {
            (0..m)
                .map(|c| {
                    let text = fs::read_to_string(dir.join(format!("{}_{c:03}.csv", kind.letter())))?;
                    let mut blk = Block::zeros(b, b);
                    for line in text.lines().skip(1) {
                        let f: Vec<&str> = line.split(',').collect();
                        let parse_err = || Error::InvalidParameter(format!("malformed block line '{line}'"));
                        if f.len() != 4 {
                            return Err(parse_err());
                        }
                        let i: usize = f[0].parse().map_err(|_| parse_err())?;
                        let j: usize = f[1].parse().map_err(|_| parse_err())?;
                        let re: f64 = f[2].parse().map_err(|_| parse_err())?;
                        let im: f64 = f[3].parse().map_err(|_| parse_err())?;
                        if i >= b || j >= b {
                            return Err(parse_err());
                        }
                        blk[(i, j)] = Complex64::new(re, im);
                    }
                    Ok(blk)
                })
                .collect()
        };
        let diag = load(BlockKind::D)?;
        let lower = load(BlockKind::T)?;
        let upper = load(BlockKind::U)?;
        Self::from_blocks(b, diag, lower, upper, scale)
    }
}

/// `1 / sqrt(3b)`: each row then carries total variance one.
pub fn normalization(b: usize) -> f64 {
    1.0 / ((3 * b) as f64).sqrt()
}

fn swap_rows(blk: &mut Block, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..blk.ncols() {
        let t = blk[(a, j)];
        blk[(a, j)] = blk[(b, j)];
        blk[(b, j)] = t;
    }
}

fn swap_cols(blk: &mut Block, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..blk.nrows() {
        let t = blk[(i, a)];
        blk[(i, a)] = blk[(i, b)];
        blk[(i, b)] = t;
    }
}

/// `X - zI` for a periodic block-band `X`. The shift only touches diagonal blocks.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedMatrix<'a> {
    base: &'a PeriodicBlockBandMatrix,
    z: Complex64,
}

impl<'a> ShiftedMatrix<'a> {
    pub fn new(base: &'a PeriodicBlockBandMatrix, z: Complex64) -> Self {
        Self { base, z }
    }

    pub fn base(&self) -> &'a PeriodicBlockBandMatrix {
        self.base
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    /// Scaled block with the shift applied to `D`.
    pub fn shifted_block(&self, kind: BlockKind, col: usize) -> Block {
        let mut blk = self.base.scaled_block(kind, col);
        if kind == BlockKind::D {
            for i in 0..self.base.b {
                blk[(i, i)] -= self.z;
            }
        }
        blk
    }

    pub fn to_dense(&self) -> Result<Mat<Complex64>> {
        self.to_dense_with_guard(DEFAULT_DENSE_GUARD)
    }

    pub fn to_dense_with_guard(&self, cap: usize) -> Result<Mat<Complex64>> {
        let (n, b, m) = (self.base.n, self.base.b, self.base.m);
        if n > cap {
            return Err(Error::DenseGuard { n, cap });
        }
        let s = self.base.scale;
        let mut out = Mat::<Complex64>::zeros(n, n);
        for kind in BlockKind::ALL {
            for c in 0..m {
                let r = kind.row_of(c, m);
                let blk = self.base.block(kind, c);
                for j in 0..b {
                    for i in 0..b {
                        out[(r * b + i, c * b + j)] += blk[(i, j)] * s;
                    }
                }
            }
        }
        for i in 0..n {
            out[(i, i)] -= self.z;
        }
        Ok(out)
    }

    /// `(X - zI) v` in `O(n b)`.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(v, false)
    }

    /// `(X - zI)^* v` in `O(n b)`.
    pub fn matvec_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply(v, true)
    }

    fn apply(&self, v: &[Complex64], adjoint: bool) -> Result<Vec<Complex64>> {
        let (n, b, m) = (self.base.n, self.base.b, self.base.m);
        if v.len() != n {
            return Err(Error::Dimension { expected: n, got: v.len() });
        }
        let s = self.base.scale;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for kind in BlockKind::ALL {
            for c in 0..m {
                let r = kind.row_of(c, m);
                let blk = self.base.block(kind, c);
                if adjoint {
                    // y[c-block] += B^* v[r-block]
                    for j in 0..b {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for i in 0..b {
                            acc += blk[(i, j)].conj() * v[r * b + i];
                        }
                        y[c * b + j] += acc * s;
                    }
                } else {
                    for j in 0..b {
                        let x = v[c * b + j] * s;
                        for i in 0..b {
                            y[r * b + i] += blk[(i, j)] * x;
                        }
                    }
                }
            }
        }
        let shift = if adjoint { self.z.conj() } else { self.z };
        for (yi, vi) in y.iter_mut().zip(v) {
            *yi -= shift * vi;
        }
        Ok(y)
    }

    /// The `b x 3b` block row `(T_{i-1}, D_i - z, U_{i+1})`, indices modulo `m`.
    pub fn block_row(&self, i: usize) -> Mat<Complex64> {
        let (b, m) = (self.base.b, self.base.m);
        let i = i % m;
        let parts = [
            self.shifted_block(BlockKind::T, (i + m - 1) % m),
            self.shifted_block(BlockKind::D, i),
            self.shifted_block(BlockKind::U, (i + 1) % m),
        ];
        Mat::from_fn(b, 3 * b, |r, c| parts[c / b][(r, c % b)])
    }

    /// Dense `(X - zI)(X - zI)^*`, assembled block by block.
    pub fn gram_dense(&self) -> Result<Mat<Complex64>> {
        let (n, b, m) = (self.base.n, self.base.b, self.base.m);
        if n > DEFAULT_DENSE_GUARD {
            return Err(Error::DenseGuard { n, cap: DEFAULT_DENSE_GUARD });
        }
        let mut out = Mat::<Complex64>::zeros(n, n);
        for c in 0..m {
            let col: Vec<(usize, Block)> =
                BlockKind::ALL.iter().map(|&k| (k.row_of(c, m), self.shifted_block(k, c))).collect();
            for (r1, b1) in &col {
                for (r2, b2) in &col {
                    let prod = b1 * b2.adjoint();
                    for j in 0..b {
                        for i in 0..b {
                            out[(r1 * b + i, r2 * b + j)] += prod[(i, j)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
