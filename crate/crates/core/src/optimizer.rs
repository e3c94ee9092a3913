//! Low-dimensional embedding: Student-t kernel, Hellinger cost, its gradient
//! and the momentum descent loop.

use alloc::format;
use alloc::vec::Vec;

use crate::affinity::{conditional_probabilities, exaggerate, symmetrize, AffinityMatrix};
use crate::error::{Error, Result};
use crate::geometry::{dissimilarity_matrix, CountMatrix, DissimilarityMatrix, DEFAULT_EPSILON};
use crate::matrix::Matrix;
use crate::rng;

/// Floor applied to `Q` before square roots and divisions.
pub const Q_FLOOR: f64 = 1e-300;

/// Below this cost the gradient is taken to be zero.
pub const COST_FLOOR: f64 = 1e-12;

/// Hyperparameters of a fit.
///
/// The defaults are the shared settings of the synthetic experiments: two
/// output dimensions, `w = 1`, `eta = 100`, momentum 0.5 switching to 0.8 at
/// iteration 250, exaggeration by 4 for the first 100 iterations, at most 500
/// iterations, tolerance `1e-8`, `epsilon = 1e-2`, no group penalty and seed 42.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FitConfig {
    pub embed_dim: usize,
    pub sharpness: f64,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    /// First iteration (1-based) that uses `momentum_final`.
    pub momentum_switch_iter: usize,
    pub exaggeration: f64,
    /// Iterations `1..=exaggeration_iters` use the exaggerated affinities.
    pub exaggeration_iters: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub epsilon: f64,
    pub group_lasso: f64,
    pub seed: u64,
    /// Divide the exaggerated affinities by their sum again. This makes the
    /// exaggeration a no-op and is off by default.
    pub exaggeration_renormalize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            embed_dim: 2,
            sharpness: 1.0,
            learning_rate: 100.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            exaggeration: 4.0,
            exaggeration_iters: 100,
            max_iters: 500,
            tolerance: 1e-8,
            epsilon: DEFAULT_EPSILON,
            group_lasso: 0.0,
            seed: 42,
            exaggeration_renormalize: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive, got {v}")))
            }
        };
        if self.embed_dim < 1 {
            return Err(Error::domain("embed_dim must be at least 1"));
        }
        if self.max_iters < 1 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        if self.exaggeration_iters > self.max_iters {
            return Err(Error::domain(format!(
                "exaggeration_iters ({}) exceeds max_iters ({})",
                self.exaggeration_iters, self.max_iters
            )));
        }
        positive("sharpness", self.sharpness)?;
        positive("learning_rate", self.learning_rate)?;
        positive("tolerance", self.tolerance)?;
        positive("epsilon", self.epsilon)?;
        for (name, mu) in [("momentum_initial", self.momentum_initial), ("momentum_final", self.momentum_final)] {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::domain(format!("{name} must lie in [0, 1), got {mu}")));
            }
        }
        if !(self.exaggeration.is_finite() && self.exaggeration >= 1.0) {
            return Err(Error::domain(format!("exaggeration must be >= 1, got {}", self.exaggeration)));
        }
        if !(self.group_lasso.is_finite() && self.group_lasso >= 0.0) {
            return Err(Error::domain(format!("group_lasso must be >= 0, got {}", self.group_lasso)));
        }
        Ok(())
    }

    /// Momentum coefficient used at 1-based iteration `k`.
    pub fn momentum_at(&self, k: usize) -> f64 {
        if k < self.momentum_switch_iter {
            self.momentum_initial
        } else {
            self.momentum_final
        }
    }
}

/// Student-t kernel of an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    /// `u[a,b] = 1 / (1 + |x_a - x_b|^2)`; the diagonal holds 1 but is never used.
    pub u: Matrix,
    /// Sum of `u` over ordered off-diagonal pairs.
    pub z: f64,
    /// `u / z` off the diagonal, zero on it.
    pub q: Matrix,
}

impl KernelMatrix {
    pub fn n_samples(&self) -> usize {
        self.u.rows()
    }
}

pub fn compute_kernel(x: &Matrix) -> Result<KernelMatrix> {
    let (n, dim) = x.shape();
    if n < 2 {
        return Err(Error::domain("need at least 2 embedded points"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("embedding contains a non-finite coordinate".into()));
    }
    let mut u = Matrix::zeros(n, n);
    for a in 0..n {
        u[(a, a)] = 1.0;
        let xa = x.row(a);
        for b in (a + 1)..n {
            let xb = x.row(b);
            let mut sq = 0.0;
            for p in 0..dim {
                let d = xa[p] - xb[p];
                sq += d * d;
            }
            let k = 1.0 / (1.0 + sq);
            u[(a, b)] = k;
            u[(b, a)] = k;
        }
    }
    let mut z = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                z += u[(a, b)];
            }
        }
    }
    let mut q = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                q[(a, b)] = u[(a, b)] / z;
            }
        }
    }
    Ok(KernelMatrix { u, z, q })
}

fn check_pair(s: &AffinityMatrix, kernel: &KernelMatrix) -> Result<()> {
    if s.n_samples() != kernel.n_samples() {
        return Err(Error::shape(format!("affinity has {} samples, kernel has {}", s.n_samples(), kernel.n_samples())));
    }
    Ok(())
}

/// Half the squared Hellinger sum, `1/2 sum_{a != b} (sqrt S - sqrt Q)^2`.
fn half_sq_hellinger(s: &Matrix, q: &Matrix) -> f64 {
    let n = s.rows();
    let mut f = 0.0;
    for a in 0..n {
        let (sr, qr) = (s.row(a), q.row(a));
        for b in 0..n {
            if a != b {
                let d = libm::sqrt(sr[b]) - libm::sqrt(qr[b]);
                f += d * d;
            }
        }
    }
    0.5 * f
}

/// Hellinger distance between the affinities and the kernel distribution.
///
/// Lies in `[0, 1]` when both are proper distributions. With unnormalized
/// exaggerated affinities it can exceed 1.
pub fn hellinger_cost(s: &AffinityMatrix, kernel: &KernelMatrix) -> Result<f64> {
    check_pair(s, kernel)?;
    if kernel.q.as_slice().iter().any(|v| *v < 0.0) {
        return Err(Error::domain("kernel distribution has negative entries"));
    }
    Ok(libm::sqrt(half_sq_hellinger(s.values(), &kernel.q)))
}

/// Gradient of [`hellinger_cost`] with respect to every embedded point.
///
/// With `c[a,b] = (sqrt S[a,b] - sqrt Q[a,b]) / sqrt Q[a,b]`:
///
/// ```text
/// dL/dx_n = 1/L * sum_{j != n} (A[n,j] - beta) u[n,j]^2 (x_n - x_j)
/// A[n,j]  = (c[n,j] + c[j,n]) / 2Z
/// beta    = 1/Z * sum_{a != b} c[a,b] Q[a,b]
/// ```
///
/// `Q` is floored at [`Q_FLOOR`]; below [`COST_FLOOR`] the gradient is zero.
pub fn gradient(x: &Matrix, s_eff: &AffinityMatrix, kernel: &KernelMatrix) -> Result<Matrix> {
    check_pair(s_eff, kernel)?;
    if x.rows() != kernel.n_samples() {
        return Err(Error::shape(format!("embedding has {} rows, kernel has {}", x.rows(), kernel.n_samples())));
    }
    let cost = hellinger_cost(s_eff, kernel)?;
    Ok(gradient_with_cost(x, s_eff.values(), kernel, cost))
}

fn gradient_with_cost(x: &Matrix, s: &Matrix, kernel: &KernelMatrix, cost: f64) -> Matrix {
    let (n, dim) = x.shape();
    let mut grad = Matrix::zeros(n, dim);
    if cost < COST_FLOOR {
        return grad;
    }

    let mut c = Matrix::zeros(n, n);
    let mut cq = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let q = kernel.q[(a, b)].max(Q_FLOOR);
            let sq = libm::sqrt(q);
            let v = (libm::sqrt(s[(a, b)]) - sq) / sq;
            c[(a, b)] = v;
            cq += v * q;
        }
    }
    let inv_z = 1.0 / kernel.z;
    let beta = inv_z * cq;
    let inv_cost = 1.0 / cost;

    for i in 0..n {
        let xi = x.row(i);
        let gi = grad.row_mut(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let u = kernel.u[(i, j)];
            let a = 0.5 * inv_z * (c[(i, j)] + c[(j, i)]);
            let coef = (a - beta) * u * u;
            let xj = x.row(j);
            for p in 0..dim {
                gi[p] += coef * (xi[p] - xj[p]);
            }
        }
        for g in gi.iter_mut() {
            *g *= inv_cost;
        }
    }
    grad
}

/// Group penalty `gamma * sum_p |x^(p)|_2`, one group per embedding dimension
/// (a column of `x`), and a subgradient of it. Groups with zero norm get a
/// zero subgradient.
pub fn group_lasso_penalty(x: &Matrix, gamma: f64) -> Result<(f64, Matrix)> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let (n, dim) = x.shape();
    let mut sub = Matrix::zeros(n, dim);
    if gamma == 0.0 {
        return Ok((0.0, sub));
    }
    let mut penalty = 0.0;
    for p in 0..dim {
        let norm = libm::sqrt((0..n).map(|i| x[(i, p)] * x[(i, p)]).sum::<f64>());
        penalty += norm;
        if norm > 0.0 {
            for i in 0..n {
                sub[(i, p)] = gamma * x[(i, p)] / norm;
            }
        }
    }
    Ok((gamma * penalty, sub))
}

/// `v <- mu v - eta grad`, then `x <- x + v`.
pub fn momentum_step(x: &mut Matrix, velocity: &mut Matrix, grad: &Matrix, mu: f64, eta: f64) {
    debug_assert_eq!(x.shape(), velocity.shape());
    debug_assert_eq!(x.shape(), grad.shape());
    for ((v, xv), g) in velocity.as_mut_slice().iter_mut().zip(x.as_mut_slice().iter_mut()).zip(grad.as_slice()) {
        *v = mu * *v - eta * g;
        *xv += *v;
    }
}

/// Embedding coordinates, velocity and the cost history of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    pub x: Matrix,
    pub velocity: Matrix,
    /// Number of iterations executed (cost evaluations).
    pub iteration: usize,
    /// `(iteration, cost)` for every executed iteration, 1-based.
    pub cost_trace: Vec<(usize, f64)>,
    /// Whether the run stopped on the tolerance rather than `max_iters`.
    pub converged: bool,
}

impl EmbeddingState {
    /// Coordinates drawn independently from Student-t with 3 degrees of
    /// freedom, row by row, from the initialization stream of `seed`.
    pub fn initialize(n_samples: usize, embed_dim: usize, seed: u64) -> Self {
        let mut gen = rng::generator(seed, rng::STREAM_INIT);
        let x = Matrix::from_fn(n_samples, embed_dim, |_, _| rng::student_t(&mut gen, 3.0));
        EmbeddingState {
            x,
            velocity: Matrix::zeros(n_samples, embed_dim),
            iteration: 0,
            cost_trace: Vec::new(),
            converged: false,
        }
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.cost_trace.last().map(|&(_, c)| c)
    }

    /// Cost recorded at 1-based iteration `k`.
    pub fn cost_at(&self, k: usize) -> Option<f64> {
        self.cost_trace.iter().find(|&&(i, _)| i == k).map(|&(_, c)| c)
    }
}

/// Dissimilarities, affinities and optimization from raw counts.
pub fn fit(counts: &CountMatrix, config: &FitConfig) -> Result<(EmbeddingState, AffinityMatrix)> {
    config.validate()?;
    let dist = dissimilarity_matrix(counts, config.epsilon)?;
    fit_dissimilarity(&dist, config)
}

/// Same as [`fit`] but starting from a precomputed dissimilarity matrix.
pub fn fit_dissimilarity(dist: &DissimilarityMatrix, config: &FitConfig) -> Result<(EmbeddingState, AffinityMatrix)> {
    config.validate()?;
    let cond = conditional_probabilities(dist, config.sharpness)?;
    let s = symmetrize(&cond);
    let state = optimize(&s, config)?;
    Ok((state, s))
}

/// Momentum descent on the Hellinger cost for fixed affinities.
///
/// The tolerance check compares consecutive costs and only runs once both of
/// them were computed without exaggeration.
pub fn optimize(s: &AffinityMatrix, config: &FitConfig) -> Result<EmbeddingState> {
    config.validate()?;
    let mut state = EmbeddingState::initialize(s.n_samples(), config.embed_dim, config.seed);
    let exaggerated = exaggerate(s, config.exaggeration, config.exaggeration_renormalize)?;
    let mut previous: Option<f64> = None;

    for k in 1..=config.max_iters {
        let s_eff = if k <= config.exaggeration_iters { &exaggerated } else { s };
        let kernel = compute_kernel(&state.x).map_err(|_| Error::Diverged { iteration: k })?;
        let cost = libm::sqrt(half_sq_hellinger(s_eff.values(), &kernel.q));
        let (penalty, penalty_grad) = if config.group_lasso > 0.0 {
            let (p, g) = group_lasso_penalty(&state.x, config.group_lasso)?;
            (p, Some(g))
        } else {
            (0.0, None)
        };
        let total = cost + penalty;
        if !total.is_finite() {
            return Err(Error::Diverged { iteration: k });
        }
        state.iteration = k;
        state.cost_trace.push((k, total));

        if k > config.exaggeration_iters + 1 {
            if let Some(prev) = previous {
                if libm::fabs(total - prev) < config.tolerance {
                    state.converged = true;
                    break;
                }
            }
        }
        previous = Some(total);

        let mut grad = gradient_with_cost(&state.x, s_eff.values(), &kernel, cost);
        if let Some(g) = penalty_grad {
            for (a, b) in grad.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *a += b;
            }
        }
        momentum_step(&mut state.x, &mut state.velocity, &grad, config.momentum_at(k), config.learning_rate);
        if !state.x.is_finite() {
            return Err(Error::Diverged { iteration: k });
        }
    }
    Ok(state)
}
