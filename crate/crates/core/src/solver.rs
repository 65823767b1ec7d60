//! Maximization of min-of-concave rate objectives over
//! `{S_i ⪰ 0, tr(S_i) ≤ P_i}` and recovery of the KKT multipliers.
//!
//! The four problems (inner/outer × sum-rate/boundary) are written in
//! epigraph form `max t s.t. t ≤ φ_k(S) − b_k` and solved by a primal
//! log-barrier method with damped Newton steps over the symmetric
//! coordinates of `S1`, `S2` and `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelMimo, User};
use crate::gsi::GsiVerdict;
use crate::linalg::{self, Mat, SymMatrix};
use crate::rates::{self, CovariancePair, GenieParam, RateError, RateExpr};

/// A constraint with slack below this many nats is considered active.
pub const ACTIVE_TOL: f64 = 1e-6;

/// Boundary problems with `r` this close to `r_max` pin `S2` at the
/// single-user optimum.
pub const PIN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error("rate floor r = {r} outside [0, {r_max}]")]
    RateOutOfRange { r: f64, r_max: f64 },
    #[error("no strictly feasible starting point")]
    Infeasible,
    #[error("boundary sweep needs at least two points")]
    TooFewPoints,
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OptKind {
    InnerSum,
    InnerBoundary { r: f64 },
    OuterSum { genie: GenieParam },
    OuterBoundary { r: f64, genie: GenieParam },
}

impl OptKind {
    pub fn is_sum(&self) -> bool {
        matches!(self, OptKind::InnerSum | OptKind::OuterSum { .. })
    }

    pub fn rate_floor(&self) -> Option<f64> {
        match self {
            OptKind::InnerBoundary { r } | OptKind::OuterBoundary { r, .. } => Some(*r),
            _ => None,
        }
    }

    pub fn genie(&self) -> Option<&GenieParam> {
        match self {
            OptKind::OuterSum { genie } | OptKind::OuterBoundary { genie, .. } => Some(genie),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptProblem {
    pub kind: OptKind,
    pub channel: ChannelMimo,
}

impl OptProblem {
    pub fn new(kind: OptKind, channel: ChannelMimo) -> Self {
        OptProblem { kind, channel }
    }
}

/// Constraint labels. In sum-rate problems `SumOfSingles`, `Sum1`, `Sum2`
/// carry the multipliers `γ`, `λ1`, `λ2`; in boundary problems `Single1`,
/// `Single2`, `Sum1`, `Sum2` carry `α1`, `α2`, `β1`, `β2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintTag {
    /// `t ≤ g1 + g2`
    SumOfSingles,
    /// `t ≤ g1`
    Single1,
    /// `g2 ≥ r`
    Single2,
    /// `t ≤ gs1 − r` (or `ḡs1 − r`)
    Sum1,
    /// `t ≤ gs2 − r` (or `ḡs2 − r`)
    Sum2,
}

impl ConstraintTag {
    pub fn sum(u: User) -> ConstraintTag {
        match u {
            User::One => ConstraintTag::Sum1,
            User::Two => ConstraintTag::Sum2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target accuracy of the objective in nats.
    pub tol_obj: f64,
    /// Newton-iteration cap per start.
    pub max_iter: usize,
    /// 1: isotropic start only; 2: also a rank-one start.
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_obj: 1e-7,
            max_iter: 2000,
            starts: 2,
        }
    }
}

/// Barrier-based multiplier estimates (`1/(ρ s_k)` and `1/(ρ (P − tr S))`).
/// The rate floor of a pinned user has no estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualEstimate {
    pub constraints: Vec<(ConstraintTag, Option<f64>)>,
    pub etas: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub pair: CovariancePair,
    pub objective: f64,
    pub active_set: Vec<ConstraintTag>,
    pub slacks: Vec<(ConstraintTag, f64)>,
    pub iterations: usize,
    pub converged: bool,
    /// Users whose covariance was fixed at the single-user optimum (`r = r_max`).
    pub pinned: [bool; 2],
    pub duals: DualEstimate,
}

impl OptResult {
    pub fn slack(&self, tag: ConstraintTag) -> Option<f64> {
        self.slacks.iter().find(|(t, _)| *t == tag).map(|(_, s)| *s)
    }
}

/// `slack = φ(S) − t_coef·t − offset ≥ 0`
#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub tag: ConstraintTag,
    pub expr: RateExpr,
    pub t_coef: f64,
    pub offset: f64,
}

/// The constraint list of a problem. Joint-decoding constraints at a receiver
/// that sees no interference (`F_j = 0`) are omitted, as are outer-bound sum
/// constraints without a genie.
pub(crate) fn constraints(problem: &OptProblem) -> Result<Vec<Constraint>> {
    let ch = &problem.channel;
    let r = problem.kind.rate_floor().unwrap_or(0.0);
    let mut out = Vec::new();
    if problem.kind.is_sum() {
        let mut e = rates::expr_g(ch, User::One);
        e.terms.extend(rates::expr_g(ch, User::Two).terms);
        out.push(Constraint {
            tag: ConstraintTag::SumOfSingles,
            expr: e,
            t_coef: 1.0,
            offset: 0.0,
        });
    } else {
        out.push(Constraint {
            tag: ConstraintTag::Single1,
            expr: rates::expr_g(ch, User::One),
            t_coef: 1.0,
            offset: 0.0,
        });
        out.push(Constraint {
            tag: ConstraintTag::Single2,
            expr: rates::expr_g(ch, User::Two),
            t_coef: 0.0,
            offset: r,
        });
    }
    for u in User::BOTH {
        let expr = match problem.kind.genie() {
            None => {
                if ch.cross_is_zero(u.other()) {
                    continue;
                }
                rates::expr_gs(ch, u)
            }
            Some(genie) => match genie.get(u.other()) {
                Some(a) => rates::expr_gbar(ch, u, a)?,
                None => continue,
            },
        };
        out.push(Constraint {
            tag: ConstraintTag::sum(u),
            expr,
            t_coef: 1.0,
            offset: r,
        });
    }
    Ok(out)
}

/// Largest achievable `g2`, i.e. the end of the boundary sweep.
pub fn r_max(ch: &ChannelMimo) -> f64 {
    rates::waterfill(&ch.h2, ch.p2).1
}

/// Coordinates of the free covariances inside the Newton variable `x = (t, S1, S2)`.
struct Layout {
    free: [bool; 2],
    dims: [usize; 2],
    offsets: [usize; 2],
    /// (user, a, b) with a ≤ b
    coords: Vec<(User, usize, usize)>,
    fixed: CovariancePair,
    powers: [f64; 2],
}

impl Layout {
    fn new(ch: &ChannelMimo, free: [bool; 2], fixed: CovariancePair) -> Self {
        let dims = [ch.tx(User::One), ch.tx(User::Two)];
        let mut coords = Vec::new();
        let mut offsets = [0; 2];
        for u in User::BOTH {
            offsets[u.index()] = 1 + coords.len();
            if free[u.index()] {
                let n = dims[u.index()];
                for a in 0..n {
                    for b in a..n {
                        coords.push((u, a, b));
                    }
                }
            }
        }
        Layout {
            free,
            dims,
            offsets,
            coords,
            fixed,
            powers: [ch.p1, ch.p2],
        }
    }

    fn n(&self) -> usize {
        1 + self.coords.len()
    }

    fn pair(&self, x: &[f64]) -> CovariancePair {
        let mut pair = self.fixed.clone();
        for u in User::BOTH {
            if !self.free[u.index()] {
                continue;
            }
            let n = self.dims[u.index()];
            let mut m = Mat::zeros(n, n);
            let mut k = self.offsets[u.index()];
            for a in 0..n {
                for b in a..n {
                    m[(a, b)] = x[k];
                    m[(b, a)] = x[k];
                    k += 1;
                }
            }
            *pair.get_mut(u) = SymMatrix::from_mat(&m);
        }
        pair
    }

    fn encode(&self, t: f64, pair: &CovariancePair) -> Vec<f64> {
        let mut x = vec![t];
        for &(u, a, b) in &self.coords {
            x.push(pair.get(u)[(a, b)]);
        }
        x
    }
}

/// Sum over the symmetric-basis pairs of `K[b][c] · K'[d][a]`, i.e.
/// `tr(K E_f K' E_e)` for basis elements `E_e` = sym(a, b) and `E_f` = sym(c, d).
fn basis_trace(k: &Mat, kp: &Mat, e: (usize, usize), f: (usize, usize)) -> f64 {
    let es: &[(usize, usize)] = if e.0 == e.1 {
        &[(e.0, e.0)]
    } else {
        &[(e.0, e.1), (e.1, e.0)]
    };
    let fs: &[(usize, usize)] = if f.0 == f.1 {
        &[(f.0, f.0)]
    } else {
        &[(f.0, f.1), (f.1, f.0)]
    };
    let mut acc = 0.0;
    for &(a, b) in es {
        for &(c, d) in fs {
            acc += k[(b, c)] * kp[(d, a)];
        }
    }
    acc
}

/// `tr(M E)` for a symmetric-basis element.
fn basis_dot(m: &Mat, a: usize, b: usize) -> f64 {
    if a == b {
        m[(a, a)]
    } else {
        m[(a, b)] + m[(b, a)]
    }
}

/// Value, gradient and Hessian (over the free coordinates) of a rate expression.
fn expr_derivatives(
    expr: &RateExpr,
    layout: &Layout,
    pair: &CovariancePair,
) -> Result<(f64, Vec<f64>, Mat)> {
    let n = layout.n();
    let mut grad = vec![0.0; n];
    let mut hess = Mat::zeros(n, n);
    let mut value = 0.0;
    for term in &expr.terms {
        let (v, g) = term.value_and_inverse(pair)?;
        value += v;
        let gm = g.to_mat();
        let parts: Vec<(User, &Mat)> = term
            .parts
            .iter()
            .filter(|(u, _)| layout.free[u.index()])
            .map(|(u, m)| (*u, m))
            .collect();
        // K_uv = M_uᵀ G M_v
        let mut kmat = vec![vec![Mat::zeros(0, 0); parts.len()]; parts.len()];
        for (i, (_, mi)) in parts.iter().enumerate() {
            let left = mi.transpose().matmul(&gm);
            for (j, (_, mj)) in parts.iter().enumerate() {
                kmat[i][j] = left.matmul(mj);
            }
        }
        let idx = |u: User| parts.iter().position(|(v, _)| *v == u);
        for (e, &(ue, a, b)) in layout.coords.iter().enumerate() {
            let Some(i) = idx(ue) else { continue };
            grad[1 + e] += term.coef * basis_dot(&kmat[i][i], a, b);
            for (f, &(uf, c, d)) in layout.coords.iter().enumerate().skip(e) {
                let Some(j) = idx(uf) else { continue };
                let h = -term.coef * basis_trace(&kmat[i][j], &kmat[j][i], (a, b), (c, d));
                hess[(1 + e, 1 + f)] += h;
                if f != e {
                    hess[(1 + f, 1 + e)] += h;
                }
            }
        }
    }
    Ok((value, grad, hess))
}

struct Barrier<'a> {
    cons: &'a [Constraint],
    layout: &'a Layout,
}

impl Barrier<'_> {
    /// Slacks of all constraints, or `None` outside the barrier's domain.
    fn slacks(&self, x: &[f64]) -> Option<Vec<f64>> {
        let pair = self.layout.pair(x);
        for u in User::BOTH {
            if !self.layout.free[u.index()] {
                continue;
            }
            let s = pair.get(u);
            if !s.is_finite() || self.layout.powers[u.index()] - s.trace() <= 0.0 {
                return None;
            }
            match s.min_eigenvalue() {
                Ok(l) if l > 0.0 => {}
                _ => return None,
            }
        }
        let mut out = Vec::with_capacity(self.cons.len());
        for c in self.cons {
            let v = c.expr.value(&pair).ok()?;
            let s = v - c.t_coef * x[0] - c.offset;
            if s.is_nan() || s <= 0.0 {
                return None;
            }
            out.push(s);
        }
        Some(out)
    }

    /// `f(x) = −ρ t − Σ log s_k − Σ_u [log det S_u + log(P_u − tr S_u)]`
    fn value(&self, x: &[f64], rho: f64) -> Option<f64> {
        let slacks = self.slacks(x)?;
        let pair = self.layout.pair(x);
        let mut f = -rho * x[0] - slacks.iter().map(|s| s.ln()).sum::<f64>();
        for u in User::BOTH {
            if self.layout.free[u.index()] {
                let s = pair.get(u);
                f -= linalg::logdet(s).ok()? + (self.layout.powers[u.index()] - s.trace()).ln();
            }
        }
        Some(f)
    }

    fn derivatives(&self, x: &[f64], rho: f64) -> Result<(Vec<f64>, Mat)> {
        let n = self.layout.n();
        let pair = self.layout.pair(x);
        let mut grad = vec![0.0; n];
        let mut hess = Mat::zeros(n, n);
        grad[0] = -rho;
        for c in self.cons {
            let (v, mut g, h) = expr_derivatives(&c.expr, self.layout, &pair)?;
            g[0] = -c.t_coef;
            let s = v - c.t_coef * x[0] - c.offset;
            for i in 0..n {
                grad[i] -= g[i] / s;
                for j in 0..n {
                    hess[(i, j)] += -h[(i, j)] / s + g[i] * g[j] / (s * s);
                }
            }
        }
        for u in User::BOTH {
            if !self.layout.free[u.index()] {
                continue;
            }
            let s = pair.get(u);
            let inv = s.inverse_pd()?.to_mat();
            let slack = self.layout.powers[u.index()] - s.trace();
            for (e, &(ue, a, b)) in self.layout.coords.iter().enumerate() {
                if ue != u {
                    continue;
                }
                let tr_e = if a == b { 1.0 } else { 0.0 };
                grad[1 + e] -= basis_dot(&inv, a, b) - tr_e / slack;
                for (f, &(uf, c, d)) in self.layout.coords.iter().enumerate() {
                    if uf != u {
                        continue;
                    }
                    let tr_f = if c == d { 1.0 } else { 0.0 };
                    hess[(1 + e, 1 + f)] +=
                        basis_trace(&inv, &inv, (a, b), (c, d)) + tr_e * tr_f / (slack * slack);
                }
            }
        }
        Ok((grad, hess))
    }
}

struct Outcome {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    rho: f64,
}

fn barrier_solve(barrier: &Barrier, x0: Vec<f64>, opts: &SolverOptions) -> Result<Outcome> {
    let mut x = x0;
    let dof = barrier.cons.len() as f64
        + User::BOTH
            .iter()
            .filter(|u| barrier.layout.free[u.index()])
            .map(|u| barrier.layout.dims[u.index()] as f64 + 1.0)
            .sum::<f64>();
    let rho_final = (dof / (1e-2 * opts.tol_obj)).max(1e3);
    let mut rho = 1.0;
    let mut iterations = 0;
    let converged = loop {
        let mut centered = false;
        while iterations < opts.max_iter {
            iterations += 1;
            let (g, h) = barrier.derivatives(&x, rho)?;
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let dx = match linalg::solve(&h, &neg_g) {
                Ok(d) => d,
                Err(_) => break,
            };
            let decrement: f64 = -g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
            if decrement < 2e-10 {
                centered = true;
                break;
            }
            let f0 = match barrier.value(&x, rho) {
                Some(v) => v,
                None => return Err(SolverError::Infeasible),
            };
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
                if let Some(f) = barrier.value(&trial, rho) {
                    if f < f0 && f <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                // no resolvable decrease; the stage optimum is then within
                // about decrement/rho of the objective
                centered = decrement <= (1e-3 * opts.tol_obj * rho).clamp(1e-6, 0.25);
                break;
            }
        }
        // only the final stage determines the accuracy of the result
        if rho >= rho_final || iterations >= opts.max_iter {
            break centered && rho >= rho_final;
        }
        rho = (rho * 10.0).min(rho_final);
    };
    Ok(Outcome {
        x,
        iterations,
        converged,
        rho,
    })
}

fn initial_t(cons: &[Constraint], pair: &CovariancePair) -> Result<f64> {
    let mut m = f64::INFINITY;
    for c in cons.iter().filter(|c| c.t_coef != 0.0) {
        m = m.min(c.expr.value(pair)? - c.offset);
    }
    Ok(m - 1.0 - 0.1 * m.abs())
}

/// Dominant right singular vector of `h`.
fn dominant_direction(h: &Mat) -> Vec<f64> {
    let e = h
        .gram_cols()
        .eigen()
        .expect("Jacobi converges on small Gram matrices");
    e.vector(0)
}

fn start_covariance(ch: &ChannelMimo, u: User, rank_one: bool) -> SymMatrix {
    let t = ch.tx(u);
    let p = ch.power(u);
    let iso = SymMatrix::scaled_identity(t, p / t as f64);
    let s = if rank_one {
        SymMatrix::outer(&dominant_direction(ch.h(u)))
            .scale(0.8 * p)
            .add(&iso.scale(0.2))
    } else {
        iso
    };
    s.scale(0.9)
}

/// Interior covariance for user 2 with `g2(S2) > r`, built by shrinking the
/// water-filling solution toward the isotropic one.
fn floor_feasible_start(ch: &ChannelMimo, r: f64, base: &SymMatrix) -> Result<SymMatrix> {
    if rates::g2(ch, base) > r + 1e-3 {
        return Ok(base.clone());
    }
    let (wf, rmax) = rates::waterfill(&ch.h2, ch.p2);
    let t = ch.tx(User::Two);
    let iso = SymMatrix::scaled_identity(t, ch.p2 / t as f64);
    let target = r + 0.5 * (rmax - r);
    let mut eps: f64 = 0.5;
    for _ in 0..80 {
        let s = wf.scale(1.0 - eps).add(&iso.scale(eps)).scale(1.0 - eps);
        if rates::g2(ch, &s) > target {
            return Ok(s);
        }
        eps *= 0.5;
    }
    Err(SolverError::Infeasible)
}

/// Final epigraph variable and barrier weight of the winning start.
struct BarrierState {
    t: f64,
    rho: f64,
}

fn assemble(
    problem: &OptProblem,
    cons: &[Constraint],
    pair: CovariancePair,
    iterations: usize,
    converged: bool,
    pinned: [bool; 2],
    barrier: BarrierState,
) -> Result<OptResult> {
    let rho = barrier.rho;
    let mut objective = f64::INFINITY;
    let mut values = Vec::with_capacity(cons.len());
    for c in cons {
        let v = c.expr.value(&pair)? - c.offset;
        if c.t_coef != 0.0 {
            objective = objective.min(v);
        }
        values.push(v);
    }
    let mut slacks = Vec::new();
    let mut active_set = Vec::new();
    let mut duals = Vec::new();
    for (c, v) in cons.iter().zip(&values) {
        let s = v - c.t_coef * objective;
        slacks.push((c.tag, s));
        if s < ACTIVE_TOL {
            active_set.push(c.tag);
        }
        let pinned_floor = c.t_coef == 0.0 && pinned[User::Two.index()];
        let barrier_slack = v - c.t_coef * barrier.t;
        duals.push((
            c.tag,
            (!pinned_floor).then(|| 1.0 / (rho * barrier_slack.max(f64::MIN_POSITIVE))),
        ));
    }
    let mut etas = [0.0; 2];
    for u in User::BOTH {
        if !pinned[u.index()] {
            let gap = problem.channel.power(u) - pair.get(u).trace();
            etas[u.index()] = 1.0 / (rho * gap.max(f64::MIN_POSITIVE));
        }
    }
    Ok(OptResult {
        pair,
        objective,
        active_set,
        slacks,
        iterations,
        converged,
        pinned,
        duals: DualEstimate {
            constraints: duals,
            etas,
        },
    })
}

pub fn solve(problem: &OptProblem, opts: &SolverOptions) -> Result<OptResult> {
    let ch = &problem.channel;
    ch.validate()?;
    let mut cons = constraints(problem)?;
    let mut pinned = [false; 2];
    let mut fixed = CovariancePair::zeros(ch);
    if let Some(r) = problem.kind.rate_floor() {
        let (wf, rmax) = rates::waterfill(&ch.h2, ch.p2);
        if !(r >= 0.0 && r <= rmax + PIN_TOL) {
            return Err(SolverError::RateOutOfRange { r, r_max: rmax });
        }
        if r >= rmax - PIN_TOL {
            pinned[User::Two.index()] = true;
            fixed.s2 = wf;
            for c in cons.iter_mut() {
                c.offset = c.offset.min(rmax);
            }
        }
    }
    let layout = Layout::new(ch, [true, !pinned[1]], fixed.clone());
    // the rate floor is a constant once S2 is pinned
    let live: Vec<Constraint> = cons
        .iter()
        .filter(|c| !(c.t_coef == 0.0 && pinned[1]))
        .cloned()
        .collect();
    let barrier = Barrier {
        cons: &live,
        layout: &layout,
    };

    let mut best: Option<(Outcome, f64)> = None;
    for start in 0..opts.starts.max(1) {
        let rank_one = start == 1;
        let mut pair = fixed.clone();
        for u in User::BOTH {
            if layout.free[u.index()] {
                *pair.get_mut(u) = start_covariance(ch, u, rank_one);
            }
        }
        if let (Some(r), false) = (problem.kind.rate_floor(), pinned[1]) {
            pair.s2 = floor_feasible_start(ch, r, &pair.s2)?;
        }
        let t0 = initial_t(&live, &pair)?;
        let x0 = layout.encode(t0, &pair);
        let out = barrier_solve(&barrier, x0, opts)?;
        let pair = layout.pair(&out.x);
        let obj = live
            .iter()
            .filter(|c| c.t_coef != 0.0)
            .map(|c| c.expr.value(&pair).map(|v| v - c.offset))
            .collect::<std::result::Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let better = match &best {
            None => true,
            Some((b, bobj)) => {
                (out.converged && !b.converged) || (out.converged == b.converged && obj > *bobj)
            }
        };
        if better {
            best = Some((out, obj));
        }
    }
    let (out, _) = best.expect("at least one start");
    let pair = layout.pair(&out.x);
    let barrier = BarrierState {
        t: out.x[0],
        rho: out.rho,
    };
    assemble(
        problem,
        &cons,
        pair,
        out.iterations,
        out.converged,
        pinned,
        barrier,
    )
}

/// Residual norms of a recovered KKT system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `|Σ ν_k − 1|` over the constraints that involve `t`
    pub simplex: f64,
    /// `‖W_i S_i‖_max`
    pub stationarity: [f64; 2],
    /// `tr(W_i S_i)`
    pub complementarity: [f64; 2],
    /// smallest eigenvalue of `W_i`
    pub min_eigenvalue: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    pub sum_problem: bool,
    /// `γ` (sum rate) or `α1` (boundary)
    pub gamma_or_alpha: f64,
    /// `α2`, the multiplier of `g2 ≥ r` (boundary problems only)
    pub alpha2: f64,
    /// `(λ1, λ2)` or `(β1, β2)`
    pub lambdas_or_betas: [f64; 2],
    /// `(η1, η2)` or `(ν1, ν2)`
    pub etas_or_nus: [f64; 2],
    /// `(W1, W2)` or `(K1, K2)`
    pub w_or_k: [SymMatrix; 2],
    pub residuals: KktResiduals,
    /// the multiplier system has more than one solution
    pub non_unique: bool,
    pub pinned: [bool; 2],
}

impl KktCertificate {
    pub fn multiplier(&self, tag: ConstraintTag) -> f64 {
        match tag {
            ConstraintTag::SumOfSingles | ConstraintTag::Single1 => self.gamma_or_alpha,
            ConstraintTag::Single2 => self.alpha2,
            ConstraintTag::Sum1 => self.lambdas_or_betas[0],
            ConstraintTag::Sum2 => self.lambdas_or_betas[1],
        }
    }
}

/// Eigen-decomposition of `S` restricted to eigenvalues above a relative
/// threshold; the dropped part is the barrier's residual interior component.
pub(crate) fn significant_eigenvectors(s: &SymMatrix) -> Result<Vec<(f64, Vec<f64>)>> {
    let e = s.eigen()?;
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let cut = 1e-6 * top.max(1e-300);
    Ok((0..e.values.len())
        .filter(|&k| e.values[k] > cut)
        .map(|k| (e.values[k], e.vector(k)))
        .collect())
}

/// Covariance with the barrier's residual interior component removed.
pub fn clean_covariance(s: &SymMatrix) -> Result<SymMatrix> {
    let parts = significant_eigenvectors(s)?;
    let mut out = SymMatrix::zeros(s.dim());
    for (l, v) in parts {
        out = out.add(&SymMatrix::outer(&v).scale(l));
    }
    Ok(out)
}

/// Recovers `(γ/α, λ/β, η/ν, W/K)` at a solution by nonnegative least
/// squares on `Σ ν_k = 1` and `W_i v = 0` for the significant eigenvectors
/// `v` of `S_i*`, over the candidate active set.
pub fn recover_kkt(problem: &OptProblem, result: &OptResult) -> Result<KktCertificate> {
    let ch = &problem.channel;
    let cons = constraints(problem)?;
    let pair = &result.pair;
    let active: Vec<usize> = (0..cons.len())
        .filter(|&k| {
            let s = result.slack(cons[k].tag).unwrap_or(f64::INFINITY);
            s < ACTIVE_TOL && !(cons[k].t_coef == 0.0 && result.pinned[1])
        })
        .collect();
    let gradients: Vec<[SymMatrix; 2]> = cons
        .iter()
        .map(|c| c.expr.gradient(pair))
        .collect::<std::result::Result<_, _>>()?;
    let trace_active: Vec<User> = User::BOTH
        .into_iter()
        .filter(|u| {
            let p = ch.power(*u);
            !result.pinned[u.index()] && p - pair.get(*u).trace() < ACTIVE_TOL * p.max(1.0)
        })
        .collect();

    // unknowns: ν_k for k in `active`, then η_u for u in `trace_active`
    let n_unknowns = active.len() + trace_active.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    rows.push(
        active
            .iter()
            .map(|&k| cons[k].t_coef)
            .chain(trace_active.iter().map(|_| 0.0))
            .collect(),
    );
    rhs.push(1.0);
    for u in User::BOTH {
        if result.pinned[u.index()] {
            continue;
        }
        for (_, v) in significant_eigenvectors(pair.get(u))? {
            let n = v.len();
            for i in 0..n {
                let mut row = vec![0.0; n_unknowns];
                for (col, &k) in active.iter().enumerate() {
                    let gv = gradients[k][u.index()].to_mat().mul_vec(&v);
                    row[col] = -gv[i];
                }
                if let Some(pos) = trace_active.iter().position(|w| *w == u) {
                    row[active.len() + pos] = v[i];
                }
                rows.push(row);
                rhs.push(0.0);
            }
        }
    }
    let a = Mat::from_rows(&rows);
    let z = if n_unknowns == 0 {
        Vec::new()
    } else {
        linalg::nnls(&a, &rhs)?
    };
    let rank = if n_unknowns == 0 {
        0
    } else {
        linalg::lsq_solve(&a, &Mat::column(&rhs))?.rank
    };
    let non_unique = rank < n_unknowns;

    let mut nu = vec![0.0; cons.len()];
    for (col, &k) in active.iter().enumerate() {
        nu[k] = z[col];
    }
    let mut etas = [0.0; 2];
    let mut w = [
        SymMatrix::zeros(ch.tx(User::One)),
        SymMatrix::zeros(ch.tx(User::Two)),
    ];
    let mut residuals = KktResiduals {
        simplex: (active.iter().map(|&k| cons[k].t_coef * nu[k]).sum::<f64>() - 1.0).abs(),
        stationarity: [0.0; 2],
        complementarity: [0.0; 2],
        min_eigenvalue: [0.0; 2],
    };
    for u in User::BOTH {
        let i = u.index();
        let mut m = SymMatrix::zeros(ch.tx(u));
        for (k, g) in gradients.iter().enumerate() {
            if nu[k] != 0.0 {
                m = m.add(&g[i].scale(nu[k]));
            }
        }
        let trace_is_active = trace_active.contains(&u) || result.pinned[i];
        etas[i] = if trace_is_active {
            m.max_eigenvalue()?.max(0.0)
        } else {
            0.0
        };
        let wi = m.scale(-1.0).add_identity(etas[i]);
        let s_clean = clean_covariance(pair.get(u))?;
        let ws = wi.to_mat().matmul(&s_clean.to_mat());
        residuals.stationarity[i] = ws.max_abs();
        residuals.complementarity[i] = wi.inner(&s_clean);
        residuals.min_eigenvalue[i] = wi.min_eigenvalue()?;
        w[i] = wi;
    }
    let get = |tag: ConstraintTag| {
        cons.iter()
            .position(|c| c.tag == tag)
            .map_or(0.0, |k| nu[k])
    };
    let sum_problem = problem.kind.is_sum();
    Ok(KktCertificate {
        sum_problem,
        gamma_or_alpha: if sum_problem {
            get(ConstraintTag::SumOfSingles)
        } else {
            get(ConstraintTag::Single1)
        },
        alpha2: get(ConstraintTag::Single2),
        lambdas_or_betas: [get(ConstraintTag::Sum1), get(ConstraintTag::Sum2)],
        etas_or_nus: etas,
        w_or_k: w,
        residuals,
        non_unique,
        pinned: result.pinned,
    })
}

/// Parameter carried by each polyline vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// the rate floor `r` on `R2`
    Rate,
    /// beam angle in units of π
    PhiOverPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub param: f64,
    pub r1: f64,
    pub r2: f64,
    pub pair: Option<CovariancePair>,
    pub converged: bool,
    pub verdict: Option<GsiVerdict>,
    /// Closed-form boundary test value (Z channel only).
    pub q_phi: Option<f64>,
}

impl RegionPoint {
    pub fn certified(&self) -> Option<bool> {
        self.verdict.as_ref().map(GsiVerdict::is_certified)
    }
}

/// Ordered boundary points `(R1, R2)` in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPolyline {
    pub param: SweepParam,
    pub points: Vec<RegionPoint>,
}

impl RegionPolyline {
    pub fn to_csv(&self) -> String {
        let with_q = self.points.iter().any(|p| p.q_phi.is_some());
        let mut out = String::new();
        out.push_str(match self.param {
            SweepParam::Rate => "r_nats",
            SweepParam::PhiOverPi => "phi_over_pi",
        });
        out.push_str(",R1_nats,R2_nats,certified");
        if with_q {
            out.push_str(",Q_phi");
        }
        out.push('\n');
        for p in &self.points {
            let cert = match p.certified() {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            };
            out.push_str(&format!(
                "{},{},{},{}",
                fmt_sig(p.param),
                fmt_sig(p.r1),
                fmt_sig(p.r2),
                cert
            ));
            if with_q {
                out.push_str(&format!(",{}", p.q_phi.map(fmt_sig).unwrap_or_default()));
            }
            out.push('\n');
        }
        out
    }
}

/// Six significant digits, fixed formatting for reproducible text output.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

/// Uniform grid `r_k = k·r_max/(n−1)` on the rate of user 2 and the largest
/// `R1` at each `r`. `genie = None` gives the inner bound; `Some` gives the
/// outer bound with that fixed genie.
pub fn boundary_sweep(
    ch: &ChannelMimo,
    n_points: usize,
    genie: Option<&GenieParam>,
    opts: &SolverOptions,
) -> Result<RegionPolyline> {
    if n_points < 2 {
        return Err(SolverError::TooFewPoints);
    }
    ch.validate()?;
    let rmax = r_max(ch);
    let grid: Vec<f64> = (0..n_points)
        .map(|k| rmax * k as f64 / (n_points - 1) as f64)
        .collect();
    let points = grid
        .par_iter()
        .map(|&r| {
            let kind = match genie {
                None => OptKind::InnerBoundary { r },
                Some(g) => OptKind::OuterBoundary {
                    r,
                    genie: g.clone(),
                },
            };
            let res = solve(&OptProblem::new(kind, ch.clone()), opts)?;
            Ok(RegionPoint {
                param: r,
                r1: res.objective,
                r2: r,
                pair: Some(res.pair),
                converged: res.converged,
                verdict: None,
                q_phi: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionPolyline {
        param: SweepParam::Rate,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_sum_rate_closed_form() {
        let ch = ChannelMimo::scalar(1.0, 1.0, 1.0, 1.0);
        let res = solve(
            &OptProblem::new(OptKind::InnerSum, ch),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_abs_diff_eq!(res.objective, 0.5 * 3f64.ln(), epsilon = 1e-7);
        assert_abs_diff_eq!(res.pair.s1[(0, 0)], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(res.pair.s2[(0, 0)], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn interference_free_multipliers() {
        let z = Mat::zeros(2, 2);
        let ch = ChannelMimo::new(
            Mat::from_rows(&[[1.0, 0.2], [0.1, 0.7]]),
            z.clone(),
            Mat::from_rows(&[[0.8, 0.0], [0.3, 1.0]]),
            z,
            2.0,
            1.0,
        );
        let p = OptProblem::new(OptKind::InnerSum, ch.clone());
        let res = solve(&p, &SolverOptions::default()).unwrap();
        let expect = rates::waterfill(&ch.h1, 2.0).1 + rates::waterfill(&ch.h2, 1.0).1;
        assert_abs_diff_eq!(res.objective, expect, epsilon = 1e-7);
        let cert = recover_kkt(&p, &res).unwrap();
        assert_abs_diff_eq!(cert.gamma_or_alpha, 1.0, epsilon = 1e-9);
        assert_eq!(cert.lambdas_or_betas, [0.0, 0.0]);
        for i in 0..2 {
            assert!(cert.residuals.min_eigenvalue[i] > -1e-7);
            assert!(cert.residuals.complementarity[i].abs() < 1e-6);
        }
    }

    #[test]
    fn fmt_sig_is_six_digits() {
        assert_eq!(fmt_sig(3.299841), "3.29984");
        assert_eq!(fmt_sig(0.000123456789), "0.000123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e6");
        assert_eq!(fmt_sig(2.0), "2");
        assert_eq!(fmt_sig(0.0), "0");
    }
}
