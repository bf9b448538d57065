//! Estimation of the matrix norm `‖x‖_{M_n(S_p^m)}` defined by the
//! supremum of `‖a·x·b‖_{S_p}` over scalar matrices in the Schatten-2p
//! unit balls.
//!
//! The supremum is a maximization of a convex function over a product of
//! convex bodies, so local ascent cannot certify global optimality. The
//! estimator therefore never reports "the norm": it reports a certified
//! lower bound — the objective value at a stored feasible witness, which
//! any caller can re-evaluate — together with whatever independent upper
//! bound is available (exact values at `p ∈ {2, ∞}`, complex
//! interpolation elsewhere).
//!
//! Two independent routes are provided for `p = 1`: the direct ascent on
//! the compression objective, and a dual-pairing estimator whose
//! half-steps are exact singular value problems. They estimate the same
//! quantity and cross-check each other.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matcore::{schatten_from_singular_values, trace_pairing, ComplexMatrix, PExponent};
use crate::ohnorm::oh_matrix_norm;
use crate::opmatrix::BlockMatrix;
use crate::stream;
use crate::{Error, Result};

/// Witness values must reproduce the reported lower bound to this
/// tolerance when re-evaluated.
pub const CERT_TOL: f64 = 1e-10;
/// Witness constraint slack: Schatten-2p norms may exceed 1 by this much.
pub const FEAS_TOL: f64 = 1e-12;

/// Provenance labels for the two sides of a [`NormEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactSvd,
    ExactOh,
    Witness,
    Optimizer,
    DualPairing,
    Interpolation,
    CbBound,
}

/// A feasible point certifying a lower bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Pair {
        a: ComplexMatrix,
        b: ComplexMatrix,
    },
    Triple {
        a: ComplexMatrix,
        b: ComplexMatrix,
        y: BlockMatrix,
    },
}

/// An interval `[lower, upper]` for a norm value. `upper = None` means no
/// independent upper bound is available.
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: Option<f64>,
    pub method: Vec<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl NormEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        Self {
            lower: value,
            upper: Some(value),
            method: vec![method],
            witness: None,
        }
    }

    /// Merges an additional upper bound, keeping the smaller one.
    pub fn with_upper(mut self, value: f64, label: Method) -> Self {
        match self.upper {
            Some(u) if u <= value => {}
            _ => {
                self.upper = Some(value);
                if !self.method.contains(&label) {
                    self.method.push(label);
                }
            }
        }
        self
    }
}

/// Step-size rule for the ascent; backtracking is the only rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    #[default]
    Backtracking,
}

/// Configuration for the randomized ascent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 500,
            step_rule: StepRule::Backtracking,
            tol: 1e-10,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// The compression objective `g(a, b) = ‖a·x·b‖_{S_p}` evaluated through
/// the flattening. This is the quantity every witness certifies.
pub fn compression_objective(
    x: &BlockMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p: PExponent,
) -> Result<f64> {
    if a.shape() != (x.outer_rows(), x.outer_rows()) || b.shape() != (x.outer_cols(), x.outer_cols())
    {
        return Err(Error::ShapeMismatch(
            "compression factors must match the outer shape".into(),
        ));
    }
    let f = x.flatten();
    eval_objective(&f, x.inner_rows(), x.inner_cols(), a, b, p)
}

fn eval_objective(
    f: &ComplexMatrix,
    m: usize,
    mp: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p: PExponent,
) -> Result<f64> {
    let am = a.kron(&ComplexMatrix::identity(m));
    let bm = b.kron(&ComplexMatrix::identity(mp));
    let prod = &(&am * f) * &bm;
    prod.schatten_norm(p)
}

/// Derivative of the Schatten p-norm at `M`: with `M = U Σ V*`, returns
/// `U diag(σ_i^(p-1)) V* / ‖M‖_p^(p-1)`. The directional derivative along
/// `H` is `Re ⟨grad, H⟩`. At the endpoints `p ∈ {1, ∞}` a consistent
/// subgradient is returned.
pub fn schatten_gradient(m: &ComplexMatrix, p: PExponent) -> Result<ComplexMatrix> {
    let svd = m.svd_parts()?;
    let smax = svd.sigma[0];
    if smax <= 0.0 {
        return Err(Error::Numerical(
            "Schatten gradient is undefined at the zero matrix".into(),
        ));
    }
    let coeffs: Vec<f64> = match p {
        PExponent::Infinity => {
            let mut c = vec![0.0; svd.sigma.len()];
            c[0] = 1.0;
            c
        }
        PExponent::Finite(pv) if pv == 1.0 => svd
            .sigma
            .iter()
            .map(|&s| if s > smax * 1e-12 { 1.0 } else { 0.0 })
            .collect(),
        PExponent::Finite(pv) => {
            let norm = schatten_from_singular_values(&svd.sigma, p);
            let denom = norm.powf(pv - 1.0);
            svd.sigma.iter().map(|&s| s.powf(pv - 1.0) / denom).collect()
        }
    };
    let diag = ComplexMatrix::from_fn(coeffs.len(), coeffs.len(), |i, j| {
        Complex64::new(if i == j { coeffs[i] } else { 0.0 }, 0.0)
    });
    Ok(&(&svd.u * &diag) * &svd.v_t)
}

/// Block trace over the inner index: for `K` of shape `(n·inner) ×
/// (n·inner)` returns the `n × n` matrix with `(i, j)` entry
/// `Σ_r K[i·inner + r, j·inner + r]`.
fn partial_trace(k: &ComplexMatrix, inner: usize) -> ComplexMatrix {
    let outer = k.rows() / inner;
    ComplexMatrix::from_fn(outer, outer, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..inner {
            acc += k[(i * inner + r, j * inner + r)];
        }
        acc
    })
}

fn grad_in_a(
    f: &ComplexMatrix,
    m: usize,
    mp: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p_grad: PExponent,
) -> Result<ComplexMatrix> {
    let am = a.kron(&ComplexMatrix::identity(m));
    let w = f * &b.kron(&ComplexMatrix::identity(mp));
    let big = &am * &w;
    let g = schatten_gradient(&big, p_grad)?;
    Ok(partial_trace(&(&w * &g.adjoint()), m).adjoint())
}

fn grad_in_b(
    f: &ComplexMatrix,
    m: usize,
    mp: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p_grad: PExponent,
) -> Result<ComplexMatrix> {
    let am = a.kron(&ComplexMatrix::identity(m));
    let v = &am * f;
    let big = &v * &b.kron(&ComplexMatrix::identity(mp));
    let g = schatten_gradient(&big, p_grad)?;
    Ok(partial_trace(&(&g.adjoint() * &v), mp).adjoint())
}

fn normalize_s2p(m: &ComplexMatrix, two_p: PExponent) -> Option<ComplexMatrix> {
    let norm = m.schatten_norm(two_p).ok()?;
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    Some(m.scale_re(1.0 / norm))
}

fn random_matrix(rng: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| stream::complex_gaussian(rng))
}

struct RestartOutcome {
    value: f64,
    a: ComplexMatrix,
    b: ComplexMatrix,
}

/// One alternating-ascent run from the restart's own RNG stream. Returns
/// `None` when a non-finite intermediate value aborts the restart.
fn ascent_restart(
    f: &ComplexMatrix,
    m: usize,
    mp: usize,
    p: PExponent,
    p_grad: PExponent,
    two_p: PExponent,
    cfg: &OptimizerConfig,
    restart_idx: u64,
) -> Option<RestartOutcome> {
    let n = f.rows() / m;
    let q = f.cols() / mp;
    let mut rng = stream::substream(cfg.seed, restart_idx);
    let mut a = normalize_s2p(&random_matrix(&mut rng, n, n), two_p)?;
    let mut b = normalize_s2p(&random_matrix(&mut rng, q, q), two_p)?;
    let mut value = eval_objective(f, m, mp, &a, &b, p).ok()?;
    if !value.is_finite() {
        return None;
    }
    let mut step_a = 1.0_f64;
    let mut step_b = 1.0_f64;
    for _ in 0..cfg.max_iters {
        let before = value;
        if let Some((na, nv, ns)) = line_search(f, m, mp, &a, &b, p, p_grad, two_p, value, step_a, true)
        {
            a = na;
            value = nv;
            step_a = ns;
        } else {
            step_a = (step_a * 0.5).max(1e-12);
        }
        if let Some((nb, nv, ns)) = line_search(f, m, mp, &a, &b, p, p_grad, two_p, value, step_b, false)
        {
            b = nb;
            value = nv;
            step_b = ns;
        } else {
            step_b = (step_b * 0.5).max(1e-12);
        }
        if !value.is_finite() {
            return None;
        }
        if value - before <= cfg.tol * before.max(1e-300) {
            break;
        }
    }
    // Exact renormalization, then one certifying re-evaluation.
    a = normalize_s2p(&a, two_p)?;
    b = normalize_s2p(&b, two_p)?;
    let value = eval_objective(f, m, mp, &a, &b, p).ok()?;
    if !value.is_finite() {
        return None;
    }
    Some(RestartOutcome { value, a, b })
}

/// Backtracking line search along the Schatten gradient for one factor,
/// renormalizing every candidate onto the Schatten-2p sphere. Returns the
/// accepted point, its value, and the step to start from next time.
#[allow(clippy::too_many_arguments)]
fn line_search(
    f: &ComplexMatrix,
    m: usize,
    mp: usize,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p: PExponent,
    p_grad: PExponent,
    two_p: PExponent,
    current: f64,
    step_init: f64,
    update_a: bool,
) -> Option<(ComplexMatrix, f64, f64)> {
    let grad = if update_a {
        grad_in_a(f, m, mp, a, b, p_grad).ok()?
    } else {
        grad_in_b(f, m, mp, a, b, p_grad).ok()?
    };
    let gnorm = grad.frobenius_norm();
    if !(gnorm > 1e-300) || !gnorm.is_finite() {
        return None;
    }
    let base = if update_a { a } else { b };
    // Scale so that step 1 moves by about one unit relative to the factor.
    let scale = base.frobenius_norm() / gnorm;
    let mut t = step_init;
    for _ in 0..40 {
        let moved = base.add(&grad.scale_re(t * scale));
        if let Some(cand) = normalize_s2p(&moved, two_p) {
            let v = if update_a {
                eval_objective(f, m, mp, &cand, b, p)
            } else {
                eval_objective(f, m, mp, a, &cand, p)
            };
            if let Ok(v) = v {
                if v.is_finite() && v > current {
                    return Some((cand, v, (t * 2.0).min(1e3)));
                }
            }
        }
        t *= 0.5;
        if t < 1e-14 {
            break;
        }
    }
    None
}

/// Estimates `‖x‖_{M_n(S_p^m)}`.
///
/// Exact at the two closed-form exponents: `p = ∞` is the operator norm
/// of the flattening (the supremum is attained at the identity pair) and
/// `p = 2` is the Gram-arrangement value. Elsewhere the lower bound is
/// the best certified witness over `cfg.restarts` seeded ascent runs and
/// the upper bound comes from interpolation when the endpoints are
/// computable (`p > 2`).
pub fn mn_schatten_norm(x: &BlockMatrix, p: PExponent, cfg: &OptimizerConfig) -> Result<NormEstimate> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite("block matrix has non-finite entries".into()));
    }
    let xs = x.pad_outer_square();
    match p {
        PExponent::Infinity => {
            let value = xs.flatten().operator_norm()?;
            let n = xs.outer_rows();
            Ok(NormEstimate {
                lower: value,
                upper: Some(value),
                method: vec![Method::ExactSvd, Method::Witness],
                witness: Some(Witness::Pair {
                    a: ComplexMatrix::identity(n),
                    b: ComplexMatrix::identity(n),
                }),
            })
        }
        PExponent::Finite(pv) if pv == 2.0 => Ok(NormEstimate::exact(oh_matrix_norm(&xs)?, Method::ExactOh)),
        PExponent::Finite(pv) => {
            let two_p = PExponent::Finite(2.0 * pv);
            let p_grad = if pv == 1.0 {
                // Evaluate at true p = 1, steer with a slightly smoothed
                // exponent; the induced bias is below the witness
                // certification tolerance at desk scale.
                PExponent::Finite(1.0 + 1e-6)
            } else {
                p
            };
            let f = xs.flatten();
            let (m, mp) = (xs.inner_rows(), xs.inner_cols());
            let outcomes: Vec<Option<RestartOutcome>> = (0..cfg.restarts as u64)
                .into_par_iter()
                .map(|idx| ascent_restart(&f, m, mp, p, p_grad, two_p, cfg, idx))
                .collect();
            let mut best: Option<RestartOutcome> = None;
            for o in outcomes.into_iter().flatten() {
                let better = match &best {
                    Some(b) => o.value > b.value,
                    None => true,
                };
                if better {
                    best = Some(o);
                }
            }
            let best = best.ok_or_else(|| {
                Error::Numerical("every ascent restart hit non-finite values".into())
            })?;
            let mut est = NormEstimate {
                lower: best.value,
                upper: None,
                method: vec![Method::Witness, Method::Optimizer],
                witness: Some(Witness::Pair { a: best.a, b: best.b }),
            };
            if pv > 2.0 {
                est = est.with_upper(interpolation_upper(&xs, p, None)?, Method::Interpolation);
            }
            Ok(est)
        }
    }
}

/// Interpolation upper bound for `‖x‖_{M_n(S_p)}`.
///
/// For `p ≥ 2` the endpoints are computable exactly: returns
/// `N_∞^(1-θ) · N_2^θ` with `θ = 2/p`. For `p < 2` the `S_1` endpoint is
/// not computable from below, so a certified upper bound `n1_upper` must
/// be supplied by the caller; the result is `N_1^(1-θ) · N_2^θ` with
/// `θ = 2/p'`.
pub fn interpolation_upper(x: &BlockMatrix, p: PExponent, n1_upper: Option<f64>) -> Result<f64> {
    let xs = x.pad_outer_square();
    match p {
        PExponent::Infinity => xs.flatten().operator_norm(),
        PExponent::Finite(pv) if pv == 2.0 => oh_matrix_norm(&xs),
        PExponent::Finite(pv) if pv > 2.0 => {
            let theta = p.theta();
            let n_inf = xs.flatten().operator_norm()?;
            let n_two = oh_matrix_norm(&xs)?;
            Ok(n_inf.powf(1.0 - theta) * n_two.powf(theta))
        }
        PExponent::Finite(_) => {
            let n1 = n1_upper.ok_or_else(|| {
                Error::MissingEndpoint(
                    "p < 2 interpolation needs a certified upper bound for the S_1 endpoint".into(),
                )
            })?;
            let theta = p.theta();
            if theta == 0.0 {
                return Ok(n1);
            }
            let n_two = oh_matrix_norm(&xs)?;
            Ok(n1.powf(1.0 - theta) * n_two.powf(theta))
        }
    }
}

/// The dual-pairing objective `|Σ_{i,j,k,l} a_jk ⟨x_ij, y_kl⟩ b_li|` with
/// `⟨·,·⟩` the bilinear trace pairing.
pub fn dual_objective(
    x: &BlockMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    y: &BlockMatrix,
) -> Result<f64> {
    let n = x.outer_rows();
    if x.outer_cols() != n || y.outer_rows() != n || y.outer_cols() != n {
        return Err(Error::ShapeMismatch("dual pairing needs square outer shapes".into()));
    }
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(Error::ShapeMismatch("dual factors must be n x n".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let pairing = trace_pairing(x.block(i, j), y.block(k, l))?;
                    acc += a[(j, k)] * pairing * b[(l, i)];
                }
            }
        }
    }
    Ok(acc.norm())
}

/// Estimates `‖x‖_{M_n(S_1^m)}` through the dual pairing: the supremum of
/// [`dual_objective`] over `‖a‖_{S_2} ≤ 1`, `‖b‖_{S_2} ≤ 1` and
/// `‖y‖_{M_n(S_∞^m)} ≤ 1` (operator norm of the flattening).
///
/// Both alternating half-steps are exact singular value problems: for
/// fixed `y` the optimal `(a, b)` is the top singular pair of the pairing
/// tensor, and for a fixed pair the optimal `y` is the polar factor of the
/// accumulated block matrix, with value its nuclear norm.
pub fn m1_norm_dual(x: &BlockMatrix, cfg: &OptimizerConfig) -> Result<NormEstimate> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite("block matrix has non-finite entries".into()));
    }
    let xs = x.pad_outer_square();
    if xs.inner_rows() != xs.inner_cols() {
        return Err(Error::ShapeMismatch(
            "the dual estimator needs square inner blocks".into(),
        ));
    }
    let outcomes: Vec<Option<DualOutcome>> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|idx| dual_restart(&xs, cfg, idx))
        .collect();
    let mut best: Option<DualOutcome> = None;
    for o in outcomes.into_iter().flatten() {
        let better = match &best {
            Some(b) => o.value > b.value,
            None => true,
        };
        if better {
            best = Some(o);
        }
    }
    let best = best
        .ok_or_else(|| Error::Numerical("every dual restart hit non-finite values".into()))?;
    // Certify by re-evaluating the objective at the stored triple.
    let value = dual_objective(&xs, &best.a, &best.b, &best.y)?;
    Ok(NormEstimate {
        lower: value,
        upper: None,
        method: vec![Method::Witness, Method::DualPairing],
        witness: Some(Witness::Triple {
            a: best.a,
            b: best.b,
            y: best.y,
        }),
    })
}

struct DualOutcome {
    value: f64,
    a: ComplexMatrix,
    b: ComplexMatrix,
    y: BlockMatrix,
}

fn dual_restart(x: &BlockMatrix, cfg: &OptimizerConfig, idx: u64) -> Option<DualOutcome> {
    let n = x.outer_rows();
    let m = x.inner_rows();
    let mut rng = stream::substream(cfg.seed, idx);
    // Start from a random contraction on the boundary.
    let raw = BlockMatrix::from_blocks(
        n,
        n,
        (0..n * n).map(|_| random_matrix(&mut rng, m, m)).collect(),
    )
    .ok()?;
    let norm = raw.flatten().operator_norm().ok()?;
    if !(norm > 0.0) {
        return None;
    }
    let mut y = raw.scale(Complex64::new(1.0 / norm, 0.0));
    let mut a = ComplexMatrix::zeros(n, n);
    let mut b = ComplexMatrix::zeros(n, n);
    let mut value = 0.0_f64;
    for _ in 0..cfg.max_iters {
        let before = value;
        // Optimal (a, b) for this y: top singular pair of the pairing
        // tensor T[(j,k),(l,i)] = <x_ij, y_kl>.
        let t = ComplexMatrix::from_fn(n * n, n * n, |row, col| {
            let (j, k) = (row / n, row % n);
            let (l, i) = (col / n, col % n);
            trace_pairing(x.block(i, j), y.block(k, l)).expect("square blocks")
        });
        let svd = t.svd_parts().ok()?;
        a = ComplexMatrix::from_fn(n, n, |j, k| svd.u[(j * n + k, 0)].conj());
        b = ComplexMatrix::from_fn(n, n, |l, i| svd.v_t[(0, l * n + i)].conj());
        // Optimal y for this pair: polar factor of the accumulated block
        // matrix; the value is its nuclear norm.
        let mut s = BlockMatrix::zeros(n, n, m, m);
        for k in 0..n {
            for l in 0..n {
                let mut acc = ComplexMatrix::zeros(m, m);
                for i in 0..n {
                    for j in 0..n {
                        let c = a[(j, k)] * b[(l, i)];
                        if c != Complex64::new(0.0, 0.0) {
                            acc = acc.add(&x.block(i, j).scale(c));
                        }
                    }
                }
                s.set_block(k, l, acc).ok()?;
            }
        }
        let q = s.block_transpose().flatten();
        let qsvd = q.svd_parts().ok()?;
        let y_flat = &qsvd.v_t.adjoint() * &qsvd.u.adjoint();
        y = BlockMatrix::from_flat(&y_flat, n, n, m, m).ok()?;
        value = qsvd.sigma.iter().sum();
        if !value.is_finite() {
            return None;
        }
        if value - before <= cfg.tol * before.max(1e-300) {
            break;
        }
    }
    Some(DualOutcome { value, a, b, y })
}
