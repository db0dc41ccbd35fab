//! Synthetic regression data: relevant uniform features, a response
//! function, calibrated Gaussian noise, and independent irrelevant copies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::expr::Expr;
use crate::data::Dataset;
use crate::error::{Error, Result};

const MAX_RESAMPLE: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub id: String,
    pub expr: Expr,
    pub ranges: Vec<(f64, f64)>,
}

impl EquationSpec {
    pub fn new(id: impl Into<String>, expr: &str, ranges: Vec<(f64, f64)>) -> Result<Self> {
        let spec = Self {
            id: id.into(),
            expr: Expr::parse(expr)?,
            ranges,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same range on every variable the expression references.
    pub fn uniform_ranges(id: impl Into<String>, expr: &str, lo: f64, hi: f64) -> Result<Self> {
        let e = Expr::parse(expr)?;
        let p0 = e.arity();
        Self::new(id, expr, vec![(lo, hi); p0])
    }

    pub fn p0(&self) -> usize {
        self.ranges.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ranges.is_empty() {
            return Err(Error::Generation(format!(
                "equation '{}' has no relevant features",
                self.id
            )));
        }
        if self.expr.arity() > self.ranges.len() {
            return Err(Error::Generation(format!(
                "equation '{}' uses x{} but declares {} ranges",
                self.id,
                self.expr.arity(),
                self.ranges.len()
            )));
        }
        if let Some((j, _)) = self
            .ranges
            .iter()
            .enumerate()
            .find(|(_, (a, b))| !(a < b && a.is_finite() && b.is_finite()))
        {
            return Err(Error::Generation(format!(
                "equation '{}': range of x{} is not a finite interval",
                self.id,
                j + 1
            )));
        }
        Ok(())
    }
}

/// Built-in equations by id.
pub fn registry() -> Vec<EquationSpec> {
    let entries: [(&str, &str, f64, f64); 4] = [
        ("II-11-17", "x1*(1 + x5*x6*cos(x4)/(x2*x3))", 1.0, 3.0),
        ("product", "x1*x2", 1.0, 3.0),
        ("additive", "x1 + 2*x2 - x3", 0.0, 1.0),
        ("trig", "sin(x1)*cos(x2) + x3", 0.0, 3.0),
    ];
    entries
        .iter()
        .map(|&(id, e, lo, hi)| EquationSpec::uniform_ranges(id, e, lo, hi).expect("built-in equation"))
        .collect()
}

pub fn lookup(id: &str) -> Option<EquationSpec> {
    registry().into_iter().find(|e| e.id == id)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Ratio(f64),
    Noiseless,
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Ratio(v) => write!(f, "{v}"),
            Snr::Noiseless => f.write_str("noiseless"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("noiseless") {
            return Ok(Snr::Noiseless);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Snr::Ratio(v)),
            _ => Err(Error::Config(format!(
                "snr must be a positive number or \"noiseless\", got '{s}'"
            ))),
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Snr::Ratio(v) => s.serialize_f64(*v),
            Snr::Noiseless => s.serialize_str("noiseless"),
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Snr::from_str(&v.to_string()),
            Raw::Text(t) => Snr::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: Dataset,
    /// Noiseless response values.
    pub signal: Vec<f64>,
    /// Sample variance of the signal on the realized design.
    pub signal_variance: f64,
    pub noise_variance: f64,
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Column layout: relevant `x1..xp0`, then for each relevant feature `j`
/// its `s` irrelevant copies `xj_irr1..xj_irrs`, drawn from the same range.
/// The truth set is the first `p0` columns.
pub fn generate_dataset(spec: &EquationSpec, n: usize, snr: Snr, s: usize, seed: u64) -> Result<GeneratedData> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Generation("n must be at least 1".into()));
    }
    let p0 = spec.p0();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut relevant = vec![Vec::with_capacity(n); p0];
    let mut signal = Vec::with_capacity(n);
    let mut x = vec![0.0; p0];
    for i in 0..n {
        let mut tries = 0;
        let f = loop {
            for (v, &(a, b)) in x.iter_mut().zip(&spec.ranges) {
                *v = rng.random_range(a..b);
            }
            let f = spec.expr.eval(&x);
            if f.is_finite() {
                break f;
            }
            tries += 1;
            if tries >= MAX_RESAMPLE {
                return Err(Error::Generation(format!(
                    "equation '{}' is non-finite at row {} after {MAX_RESAMPLE} resamples (last x = {x:?})",
                    spec.id,
                    i + 1
                )));
            }
        };
        for (col, &v) in relevant.iter_mut().zip(&x) {
            col.push(v);
        }
        signal.push(f);
    }
    let signal_variance = sample_variance(&signal);
    let noise_variance = match snr {
        Snr::Ratio(r) => signal_variance / r,
        Snr::Noiseless => 0.0,
    };
    let y: Vec<f64> = if noise_variance > 0.0 {
        let noise = Normal::new(0.0, noise_variance.sqrt()).expect("finite noise sd");
        signal.iter().map(|&f| f + noise.sample(&mut rng)).collect()
    } else {
        signal.clone()
    };
    let mut names: Vec<String> = (1..=p0).map(|j| format!("x{j}")).collect();
    let mut columns = relevant;
    for (j, &(a, b)) in spec.ranges.iter().enumerate() {
        for k in 1..=s {
            columns.push((0..n).map(|_| rng.random_range(a..b)).collect());
            names.push(format!("x{}_irr{k}", j + 1));
        }
    }
    let dataset = Dataset::from_columns(y, columns, Some(names))?.with_truth(0..p0)?;
    Ok(GeneratedData {
        dataset,
        signal,
        signal_variance,
        noise_variance,
    })
}
