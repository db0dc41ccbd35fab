//! Conjugate full conditionals: Gaussian leaf values, inverse-gamma noise
//! variance, and the leaf marginal likelihood used by tree proposals.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Partial-residual statistics of the observations routed to one leaf.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeafSufficientStats {
    pub n: usize,
    pub sum_r: f64,
    pub sum_r2: f64,
}

impl LeafSufficientStats {
    pub fn from_residuals(r: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::default();
        for v in r {
            s.push(v);
        }
        s
    }

    #[inline]
    pub fn push(&mut self, r: f64) {
        self.n += 1;
        self.sum_r += r;
        self.sum_r2 += r * r;
    }

    pub fn merged(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            sum_r: self.sum_r + other.sum_r,
            sum_r2: self.sum_r2 + other.sum_r2,
        }
    }
}

/// Posterior `(mean, variance)` of a leaf value under `mu ~ N(0, sigma_mu2)`.
pub fn leaf_posterior(stats: &LeafSufficientStats, sigma2: f64, sigma_mu2: f64) -> (f64, f64) {
    let var = 1.0 / (stats.n as f64 / sigma2 + 1.0 / sigma_mu2);
    (var * stats.sum_r / sigma2, var)
}

pub fn sample_leaf_value<R: Rng + ?Sized>(
    stats: &LeafSufficientStats,
    sigma2: f64,
    sigma_mu2: f64,
    rng: &mut R,
) -> f64 {
    let (mean, var) = leaf_posterior(stats, sigma2, sigma_mu2);
    Normal::new(mean, var.sqrt())
        .expect("finite positive variance")
        .sample(rng)
}

/// Inverse-gamma parameters in the shape/scale convention
/// (density ∝ x^(-shape-1) exp(-scale/x)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InvGamma {
    pub fn mean(&self) -> f64 {
        self.scale / (self.shape - 1.0)
    }

    pub fn variance(&self) -> f64 {
        let s = self.shape - 1.0;
        self.scale * self.scale / (s * s * (self.shape - 2.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, 1.0 / self.scale)
            .expect("positive shape and scale")
            .sample(rng);
        1.0 / g
    }
}

pub fn sigma2_posterior(total_sse: f64, n: usize, nu: f64, lambda: f64) -> InvGamma {
    InvGamma {
        shape: (n as f64 + nu) / 2.0,
        scale: (total_sse + nu * lambda) / 2.0,
    }
}

pub fn sample_sigma2<R: Rng + ?Sized>(
    total_sse: f64,
    n: usize,
    nu: f64,
    lambda: f64,
    rng: &mut R,
) -> f64 {
    sigma2_posterior(total_sse, n, nu, lambda).sample(rng)
}

/// Chooses `lambda` so that `P(sigma < sigma_hat) = q` under the prior
/// `sigma² ~ nu·lambda / chi²_nu`.
pub fn calibrate_lambda(sigma_hat: f64, nu: f64, q: f64) -> f64 {
    let chi = ChiSquared::new(nu).expect("nu > 0");
    sigma_hat * sigma_hat * chi.inverse_cdf(1.0 - q) / nu
}

/// Leaf log marginal likelihood with the data-only terms
/// (`-n/2 log 2πσ² - Σr²/2σ²`) dropped; those cancel in every ratio the
/// sampler takes.
#[inline]
fn log_marginal_core(n: usize, sum_r: f64, sigma2: f64, sigma_mu2: f64) -> f64 {
    let denom = sigma2 + n as f64 * sigma_mu2;
    0.5 * (sigma2 / denom).ln() + sigma_mu2 * sum_r * sum_r / (2.0 * sigma2 * denom)
}

/// Full leaf log marginal likelihood, `log ∫ Π N(r_i; mu, σ²) N(mu; 0, σ_mu²) dmu`.
pub fn log_marginal(stats: &LeafSufficientStats, sigma2: f64, sigma_mu2: f64) -> f64 {
    let n = stats.n as f64;
    -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - stats.sum_r2 / (2.0 * sigma2)
        + log_marginal_core(stats.n, stats.sum_r, sigma2, sigma_mu2)
}

/// `log [m(left) m(right) / m(left ∪ right)]`.
pub fn log_split_likelihood_ratio(
    left: &LeafSufficientStats,
    right: &LeafSufficientStats,
    sigma2: f64,
    sigma_mu2: f64,
) -> f64 {
    log_marginal_core(left.n, left.sum_r, sigma2, sigma_mu2)
        + log_marginal_core(right.n, right.sum_r, sigma2, sigma_mu2)
        - log_marginal_core(
            left.n + right.n,
            left.sum_r + right.sum_r,
            sigma2,
            sigma_mu2,
        )
}
