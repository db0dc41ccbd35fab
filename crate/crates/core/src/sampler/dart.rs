//! Dirichlet split-probability update and the griddy-Gibbs draw of its
//! concentration parameter.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

/// Floor applied to split probabilities before taking logs.
pub const MIN_SPLIT_PROB: f64 = 1e-300;

/// `log G` for `G ~ Gamma(shape, 1)`. Shapes below one use
/// `G = G' · U^(1/shape)` with `G' ~ Gamma(shape + 1, 1)`, which stays
/// finite in log space where a direct draw would underflow to zero.
fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0)
            .expect("positive shape")
            .sample(rng)
            .ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng)
            .ln();
        let u: f64 = 1.0 - rng.random::<f64>();
        g + u.ln() / shape
    }
}

pub fn sample_dirichlet<R: Rng + ?Sized>(params: &[f64], rng: &mut R) -> Vec<f64> {
    let logs: Vec<f64> = params.iter().map(|&a| log_gamma_variate(a, rng)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = s.iter().sum();
    for v in &mut s {
        *v /= total;
    }
    s
}

/// Conjugate draw `s ~ Dirichlet(alpha/p + c_1, ..., alpha/p + c_p)`.
pub fn update_split_probs<R: Rng + ?Sized>(counts: &[u32], alpha: f64, rng: &mut R) -> Vec<f64> {
    let base = alpha / counts.len() as f64;
    let params: Vec<f64> = counts.iter().map(|&c| base + c as f64).collect();
    sample_dirichlet(&params, rng)
}

/// `lambda = alpha / (alpha + rho)` grid points: `i / (G + 1)`, `i = 1..=G`.
pub fn alpha_grid(grid_size: usize) -> impl Iterator<Item = f64> {
    (1..=grid_size).map(move |i| i as f64 / (grid_size + 1) as f64)
}

/// Unnormalized log posterior of each grid point: Beta(lambda; a, b) prior
/// times the Dirichlet(alpha/p) density of `s`.
pub fn alpha_log_weights(s: &[f64], a: f64, b: f64, rho: f64, grid_size: usize) -> Vec<(f64, f64)> {
    let p = s.len() as f64;
    let sum_log_s: f64 = s.iter().map(|&v| v.max(MIN_SPLIT_PROB).ln()).sum();
    alpha_grid(grid_size)
        .map(|lambda| {
            let alpha = rho * lambda / (1.0 - lambda);
            let log_prior = (a - 1.0) * lambda.ln() + (b - 1.0) * (1.0 - lambda).ln();
            let log_dir = ln_gamma(alpha) - p * ln_gamma(alpha / p) + (alpha / p - 1.0) * sum_log_s;
            (alpha, log_prior + log_dir)
        })
        .collect()
}

/// Normalizes log weights by subtracting their maximum. `None` when no
/// weight is finite.
pub fn normalize_log_weights(log_w: &[f64]) -> Option<Vec<f64>> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    Some(w.into_iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaDraw {
    pub alpha: f64,
    /// Every grid weight underflowed; `alpha` is the previous value.
    pub degenerate: bool,
}

pub fn sample_alpha<R: Rng + ?Sized>(
    s: &[f64],
    a: f64,
    b: f64,
    rho: f64,
    grid_size: usize,
    current: f64,
    rng: &mut R,
) -> AlphaDraw {
    let grid = alpha_log_weights(s, a, b, rho, grid_size);
    let log_w: Vec<f64> = grid.iter().map(|g| g.1).collect();
    let Some(w) = normalize_log_weights(&log_w) else {
        return AlphaDraw {
            alpha: current,
            degenerate: true,
        };
    };
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        acc += wi;
        if u < acc {
            return AlphaDraw {
                alpha: grid[i].0,
                degenerate: false,
            };
        }
    }
    AlphaDraw {
        alpha: grid[grid.len() - 1].0,
        degenerate: false,
    }
}
