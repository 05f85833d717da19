//! Markov source models and the age penalties built from them.
//!
//! For a time-homogeneous Markov source the information the receiver holds
//! about the current value depends only on the age of the freshest delivered
//! sample, so every model here exposes its freshness as a curve `r(age)` in
//! bits: non-negative and non-increasing in the age.
//!
//! | model | `r(age)` |
//! |-------|----------|
//! | Gaussian AR(1), `X_n = a X_{n-1} + N(0, sigma2)` | `-1/2 log2(1 - a^(2 age))` |
//! | binary symmetric, `X_n = X_{n-1} xor Bernoulli(q)` | `1 - h((1 - (1 - 2q)^age) / 2)` |
//! | tabulated | the stored values, then 0 |

use std::f64::consts::LN_2;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("binary entropy argument {x} outside [0, 1]")));
    }
    Ok(entropy_term(x) + entropy_term(1.0 - x))
}

fn entropy_term(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// `1 - h((1 - eps) / 2)` for `eps` in `[0, 1]`.
///
/// Small `eps` goes through the all-positive series
/// `sum_k eps^(2k) / (2k (2k - 1)) / ln 2` so the tail stays accurate and
/// monotone in `eps` where the direct form cancels to noise.
fn one_minus_h_centered(eps: f64) -> f64 {
    if eps >= 1.0 {
        return 1.0;
    }
    if eps <= 0.0 {
        return 0.0;
    }
    let e2 = eps * eps;
    if e2 < 0.25 {
        let mut power = e2;
        let mut sum = 0.0;
        for k in 1..=64u32 {
            let k = f64::from(k);
            let term = power / (2.0 * k * (2.0 * k - 1.0));
            sum += term;
            if term <= sum * 1e-18 {
                break;
            }
            power *= e2;
        }
        sum / LN_2
    } else {
        ((1.0 + eps) * eps.ln_1p() + (1.0 - eps) * (-eps).ln_1p()) / (2.0 * LN_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAr1 {
    a: f64,
    sigma2: f64,
}

impl GaussianAr1 {
    pub fn new(a: f64, sigma2: f64) -> Result<Self> {
        if !(a > -1.0 && a < 1.0) {
            return Err(Error::InvalidModel(format!("AR(1) coefficient a = {a} must lie in (-1, 1)")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidModel(format!("noise variance sigma2 = {sigma2} must be positive")));
        }
        Ok(Self { a, sigma2 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarySymmetric {
    q: f64,
}

impl BinarySymmetric {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::InvalidModel(format!("flip probability q = {q} must lie in [0, 0.5]")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// An explicit MI-vs-age curve `r(0), r(1), ..., r(max)`; zero past the end.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCurve {
    values: Vec<f64>,
}

impl TabulatedCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidModel("tabulated curve needs at least one value".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !(*v >= 0.0) {
                return Err(Error::InvalidModel(format!("tabulated value r({i}) = {v} must be non-negative")));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidModel(format!(
                "tabulated curve increases between age {i} and {}",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarkovSourceModel {
    GaussianAr1(GaussianAr1),
    BinarySymmetric(BinarySymmetric),
    Tabulated(TabulatedCurve),
}

impl MarkovSourceModel {
    pub fn gaussian_ar1(a: f64, sigma2: f64) -> Result<Self> {
        GaussianAr1::new(a, sigma2).map(Self::GaussianAr1)
    }

    pub fn binary_symmetric(q: f64) -> Result<Self> {
        BinarySymmetric::new(q).map(Self::BinarySymmetric)
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        TabulatedCurve::new(values).map(Self::Tabulated)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::GaussianAr1(_) => "gaussian",
            Self::BinarySymmetric(_) => "binary",
            Self::Tabulated(_) => "tabulated",
        }
    }

    /// `r(delta)` in bits. Gaussian sources return `+inf` at `delta = 0`.
    pub fn mutual_information(&self, delta: u64) -> f64 {
        match self {
            Self::GaussianAr1(m) => {
                if delta == 0 {
                    return f64::INFINITY;
                }
                let b = (m.a * m.a).powf(delta as f64);
                -(-b).ln_1p() / (2.0 * LN_2)
            }
            Self::BinarySymmetric(m) => {
                let eps = if delta == 0 {
                    1.0
                } else {
                    (1.0 - 2.0 * m.q).powf(delta as f64)
                };
                one_minus_h_centered(eps)
            }
            Self::Tabulated(t) => usize::try_from(delta)
                .ok()
                .and_then(|i| t.values.get(i).copied())
                .unwrap_or(0.0),
        }
    }

    /// Simulates `horizon` consecutive source states starting from the
    /// stationary distribution.
    ///
    /// The generator is ChaCha8 seeded with `seed`.
    pub fn sample_path(&self, horizon: usize, seed: u64) -> Result<SourcePath> {
        if horizon == 0 {
            return Err(Error::OutOfRange("source path horizon must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Self::GaussianAr1(m) => {
                let noise = Normal::new(0.0, m.sigma2.sqrt()).expect("positive variance");
                let stationary_sd = (m.sigma2 / (1.0 - m.a * m.a)).sqrt();
                let mut x = stationary_sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
                let mut out = Vec::with_capacity(horizon);
                out.push(x);
                for _ in 1..horizon {
                    x = m.a * x + noise.sample(&mut rng);
                    out.push(x);
                }
                Ok(SourcePath::Reals(out))
            }
            Self::BinarySymmetric(m) => {
                let mut x: bool = rng.random();
                let mut out = Vec::with_capacity(horizon);
                out.push(x);
                for _ in 1..horizon {
                    x ^= rng.random_bool(m.q);
                    out.push(x);
                }
                Ok(SourcePath::Bits(out))
            }
            Self::Tabulated(_) => Err(Error::NoGenerativeModel("tabulated")),
        }
    }
}

impl fmt::Display for MarkovSourceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GaussianAr1(m) => write!(f, "gaussian(a={}, sigma2={})", m.a, m.sigma2),
            Self::BinarySymmetric(m) => write!(f, "binary(q={})", m.q),
            Self::Tabulated(t) => write!(f, "tabulated({} values)", t.values.len()),
        }
    }
}

pub fn mutual_information(model: &MarkovSourceModel, delta: u64) -> f64 {
    model.mutual_information(delta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourcePath {
    Bits(Vec<bool>),
    Reals(Vec<f64>),
}

impl SourcePath {
    pub fn len(&self) -> usize {
        match self {
            Self::Bits(v) => v.len(),
            Self::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A non-decreasing age penalty `p(age)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AgePenalty {
    /// `p = -r`: minimizing it maximizes time-average mutual information.
    NegatedMi(MarkovSourceModel),
    /// Explicit values `p(0), p(1), ...`, held at the last value past the end.
    Table(Vec<f64>),
    /// `slope * age + intercept`; slope 1 and intercept 0 is plain age.
    Affine { slope: f64, intercept: f64 },
}

impl AgePenalty {
    pub fn negated_mi(model: MarkovSourceModel) -> Self {
        Self::NegatedMi(model)
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPenalty("penalty table needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPenalty("penalty table values must be finite".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidPenalty(format!(
                "penalty table decreases between age {i} and {}",
                i + 1
            )));
        }
        Ok(Self::Table(values))
    }

    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope >= 0.0 && slope.is_finite()) || !intercept.is_finite() {
            return Err(Error::InvalidPenalty(format!(
                "affine penalty needs finite slope >= 0 and finite intercept, got {slope}, {intercept}"
            )));
        }
        Ok(Self::Affine { slope, intercept })
    }

    /// The penalty that is `k` at every age.
    pub fn constant(k: f64) -> Result<Self> {
        Self::affine(0.0, k)
    }

    pub fn value(&self, delta: u64) -> f64 {
        match self {
            Self::NegatedMi(model) => -model.mutual_information(delta),
            Self::Table(values) => {
                let i = usize::try_from(delta).unwrap_or(usize::MAX).min(values.len() - 1);
                values[i]
            }
            Self::Affine { slope, intercept } => slope * delta as f64 + intercept,
        }
    }

    /// `sup p = lim p(age)` as the age grows without bound.
    pub fn supremum(&self) -> f64 {
        match self {
            Self::NegatedMi(MarkovSourceModel::BinarySymmetric(b)) if b.q() == 0.0 => -1.0,
            Self::NegatedMi(_) => 0.0,
            Self::Table(values) => values[values.len() - 1],
            Self::Affine { slope, intercept } if *slope == 0.0 => *intercept,
            Self::Affine { .. } => f64::INFINITY,
        }
    }

    pub fn source(&self) -> Option<&MarkovSourceModel> {
        match self {
            Self::NegatedMi(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for AgePenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegatedMi(m) => write!(f, "-MI[{m}]"),
            Self::Table(v) => write!(f, "table({} values)", v.len()),
            Self::Affine { slope, intercept } => write!(f, "affine({slope}*age + {intercept})"),
        }
    }
}

pub fn penalty_value(penalty: &AgePenalty, delta: u64) -> f64 {
    penalty.value(delta)
}
