//! Atom variables: the scalar law filling every nonzero matrix entry.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::RngExt;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::seed::{self, SimRng};

/// Built-in atom kinds. The kebab-case names are the CLI tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomKind {
    /// `(g1 + i g2) / sqrt(2)` with independent standard normals.
    GaussianComplex,
    GaussianReal,
    /// Uniform on `{-1, +1}`.
    Rademacher,
}

impl AtomKind {
    pub const ALL: [AtomKind; 3] = [AtomKind::GaussianComplex, AtomKind::GaussianReal, AtomKind::Rademacher];

    pub fn token(self) -> &'static str {
        match self {
            AtomKind::GaussianComplex => "gaussian-complex",
            AtomKind::GaussianReal => "gaussian-real",
            AtomKind::Rademacher => "rademacher",
        }
    }
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for AtomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AtomKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown atom kind '{s}' (expected gaussian-complex | gaussian-real | rademacher)"
                ))
            })
    }
}

/// A raw sampler wrapped so that its output has mean zero and unit variance.
///
/// The caller supplies the raw law's mean and standard deviation; each draw
/// returns `(raw - mean) / std_dev`.
#[derive(Clone)]
pub struct Standardized {
    name: String,
    raw: fn(&mut SimRng) -> Complex64,
    mean: Complex64,
    std_dev: f64,
    real: bool,
}

impl Standardized {
    pub fn new(
        name: impl Into<String>,
        raw: fn(&mut SimRng) -> Complex64,
        mean: Complex64,
        std_dev: f64,
        real: bool,
    ) -> Result<Self> {
        if !(std_dev.is_finite() && std_dev > 0.0) {
            return Err(Error::InvalidParameter(format!("standard deviation must be positive, got {std_dev}")));
        }
        Ok(Self { name: name.into(), raw, mean, std_dev, real })
    }

    fn draw(&self, rng: &mut SimRng) -> Complex64 {
        ((self.raw)(rng) - self.mean) / self.std_dev
    }
}

impl fmt::Debug for Standardized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Standardized")
            .field("name", &self.name)
            .field("mean", &self.mean)
            .field("std_dev", &self.std_dev)
            .finish()
    }
}

#[derive(Debug, Clone)]
enum Source {
    Builtin(AtomKind),
    Custom(Standardized),
}

/// Law of the atom variable together with its declared moment profile.
///
/// Built-in kinds have every absolute moment available in closed form; custom
/// kinds only know the moments declared through [`AtomDistribution::with_moment`].
/// `epsilon` records that `E|xi|^(4+epsilon)` is finite. It is metadata only.
#[derive(Debug, Clone)]
pub struct AtomDistribution {
    source: Source,
    moment_profile: Vec<(f64, f64)>,
    epsilon: Option<f64>,
}

impl AtomDistribution {
    pub fn new(kind: AtomKind) -> Self {
        Self { source: Source::Builtin(kind), moment_profile: Vec::new(), epsilon: None }
    }

    pub fn custom(atom: Standardized) -> Self {
        Self { source: Source::Custom(atom), moment_profile: Vec::new(), epsilon: None }
    }

    pub fn with_moment(mut self, p: f64, value: f64) -> Self {
        self.moment_profile.retain(|(q, _)| *q != p);
        self.moment_profile.push((p, value));
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn kind(&self) -> Option<AtomKind> {
        match &self.source {
            Source::Builtin(k) => Some(*k),
            Source::Custom(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.source {
            Source::Builtin(k) => k.token().to_string(),
            Source::Custom(c) => c.name.clone(),
        }
    }

    /// True when every draw is real.
    pub fn is_real(&self) -> bool {
        match &self.source {
            Source::Builtin(k) => !matches!(k, AtomKind::GaussianComplex),
            Source::Custom(c) => c.real,
        }
    }

    /// `E[xi^2]` (not the absolute moment), needed by quadratic-form expansions.
    pub fn pseudo_variance(&self) -> Result<Complex64> {
        match &self.source {
            Source::Builtin(AtomKind::GaussianComplex) => Ok(Complex64::new(0.0, 0.0)),
            Source::Builtin(_) => Ok(Complex64::new(1.0, 0.0)),
            Source::Custom(c) if c.real => Ok(Complex64::new(1.0, 0.0)),
            Source::Custom(c) => Err(Error::UnsupportedMoment { p: 2.0, kind: c.name.clone() }),
        }
    }

    /// Absolute moment `omega_p = E|xi|^p`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!("moment order must be positive, got {p}")));
        }
        match &self.source {
            Source::Builtin(AtomKind::Rademacher) => Ok(1.0),
            // |xi|^2 ~ Exp(1)
            Source::Builtin(AtomKind::GaussianComplex) => Ok(gamma(1.0 + p / 2.0)),
            Source::Builtin(AtomKind::GaussianReal) => {
                Ok(2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt())
            }
            Source::Custom(c) => {
                if (p - 2.0).abs() < 1e-12 {
                    return Ok(1.0);
                }
                self.moment_profile
                    .iter()
                    .find(|(q, _)| (q - p).abs() < 1e-12)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::UnsupportedMoment { p, kind: c.name.clone() })
            }
        }
    }

    pub fn draw(&self, rng: &mut SimRng) -> Complex64 {
        match &self.source {
            Source::Builtin(AtomKind::GaussianComplex) => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            Source::Builtin(AtomKind::GaussianReal) => Complex64::new(rng.sample(StandardNormal), 0.0),
            Source::Builtin(AtomKind::Rademacher) => {
                Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
            }
            Source::Custom(c) => c.draw(rng),
        }
    }

    pub fn fill(&self, rng: &mut SimRng, out: &mut [Complex64]) {
        for x in out {
            *x = self.draw(rng);
        }
    }
}

impl From<AtomKind> for AtomDistribution {
    fn from(kind: AtomKind) -> Self {
        AtomDistribution::new(kind)
    }
}

/// `count` iid draws; identical `(dist, seed, count)` gives identical output.
pub fn sample(dist: &AtomDistribution, seed: u64, count: usize) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    Ok((0..count).map(|_| dist.draw(&mut rng)).collect())
}
