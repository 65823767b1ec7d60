//! Rate functionals of the inner and outer bounds, in nats.
//!
//! Inner bound: `g1`, `g2` (single-user terms) and `gs1`, `gs2` (joint
//! decoding at each receiver). Outer bound: `gbar_s1`, `gbar_s2`, which add a
//! genie term built from `A_i` and `O_i`.
//!
//! Every functional here is a weighted sum of terms
//! `c · log|I + Σ_u M_u S_u M_uᵀ|`; [`RateExpr`] keeps that structure so the
//! solver can evaluate values, gradients and Hessians uniformly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelMimo, User};
use crate::linalg::{self, LinalgError, Mat, SymMatrix, PSD_TOL};

/// Minimum eigenvalue of `I − A Aᵀ` for the genie matrix `O` to exist.
pub const GENIE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("genie matrix degenerate: I - A A^T has min eigenvalue {0:e}")]
    GenieDegenerate(f64),
    #[error("genie matrix A{user} must be {rows}x{cols}")]
    GenieShape {
        user: usize,
        rows: usize,
        cols: usize,
    },
    #[error("covariance S{0}: {1}")]
    Covariance(usize, String),
}

pub type Result<T> = std::result::Result<T, RateError>;

/// Transmit covariances `(S1, S2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariancePair {
    pub s1: SymMatrix,
    pub s2: SymMatrix,
}

impl CovariancePair {
    pub fn new(s1: SymMatrix, s2: SymMatrix) -> Self {
        CovariancePair { s1, s2 }
    }

    pub fn zeros(ch: &ChannelMimo) -> Self {
        CovariancePair::new(
            SymMatrix::zeros(ch.tx(User::One)),
            SymMatrix::zeros(ch.tx(User::Two)),
        )
    }

    pub fn get(&self, u: User) -> &SymMatrix {
        match u {
            User::One => &self.s1,
            User::Two => &self.s2,
        }
    }

    pub fn get_mut(&mut self, u: User) -> &mut SymMatrix {
        match u {
            User::One => &mut self.s1,
            User::Two => &mut self.s2,
        }
    }

    /// Checks PSD-ness (tolerance [`PSD_TOL`]) and the trace constraint.
    pub fn validate(&self, ch: &ChannelMimo) -> Result<()> {
        for u in User::BOTH {
            let s = self.get(u);
            if s.dim() != ch.tx(u) {
                return Err(RateError::Covariance(
                    u.number(),
                    format!("must be {0}x{0}", ch.tx(u)),
                ));
            }
            if !linalg::is_psd(s, PSD_TOL) {
                return Err(RateError::Covariance(
                    u.number(),
                    "not positive semidefinite".into(),
                ));
            }
            if s.trace() > ch.power(u) + PSD_TOL {
                return Err(RateError::Covariance(
                    u.number(),
                    "trace exceeds the power budget".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Genie matrices. `a1` enters `gbar_s2` and `a2` enters `gbar_s1`; `None`
/// drops the corresponding sum-rate constraint from the outer bound.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GenieParam {
    pub a1: Option<Mat>,
    pub a2: Option<Mat>,
}

impl GenieParam {
    pub fn get(&self, u: User) -> Option<&Mat> {
        match u {
            User::One => self.a1.as_ref(),
            User::Two => self.a2.as_ref(),
        }
    }

    pub fn set(&mut self, u: User, a: Option<Mat>) {
        match u {
            User::One => self.a1 = a,
            User::Two => self.a2 = a,
        }
    }
}

/// `coef · log|I + Σ_u M_u S_u M_uᵀ|`
#[derive(Debug, Clone)]
pub struct LogDetTerm {
    pub coef: f64,
    pub parts: Vec<(User, Mat)>,
}

impl LogDetTerm {
    fn new(coef: f64, parts: Vec<(User, Mat)>) -> Self {
        LogDetTerm { coef, parts }
    }

    pub fn out_dim(&self) -> usize {
        self.parts.first().map_or(0, |(_, m)| m.rows())
    }

    /// `I + Σ M S Mᵀ`
    pub fn argument(&self, pair: &CovariancePair) -> SymMatrix {
        let mut acc = SymMatrix::identity(self.out_dim());
        for (u, m) in &self.parts {
            acc = acc.add(&pair.get(*u).congruence(m));
        }
        acc
    }

    pub fn value(&self, pair: &CovariancePair) -> Result<f64> {
        Ok(self.coef * linalg::logdet(&self.argument(pair))?)
    }

    /// Value together with `G = (I + Σ M S Mᵀ)⁻¹`.
    pub fn value_and_inverse(&self, pair: &CovariancePair) -> Result<(f64, SymMatrix)> {
        let arg = self.argument(pair);
        let v = linalg::logdet(&arg)?;
        Ok((self.coef * v, arg.inverse_pd()?))
    }
}

/// Weighted sum of log-det terms.
#[derive(Debug, Clone, Default)]
pub struct RateExpr {
    pub terms: Vec<LogDetTerm>,
}

impl RateExpr {
    pub fn value(&self, pair: &CovariancePair) -> Result<f64> {
        self.terms.iter().map(|t| t.value(pair)).sum()
    }

    /// Gradients with respect to `S1` and `S2`: `Σ c M_uᵀ G M_u`.
    pub fn gradient(&self, pair: &CovariancePair) -> Result<[SymMatrix; 2]> {
        let mut g = [
            SymMatrix::zeros(pair.s1.dim()),
            SymMatrix::zeros(pair.s2.dim()),
        ];
        for t in &self.terms {
            let (_, inv) = t.value_and_inverse(pair)?;
            for (u, m) in &t.parts {
                let contrib = inv.congruence(&m.transpose()).scale(t.coef);
                g[u.index()] = g[u.index()].add(&contrib);
            }
        }
        Ok(g)
    }

    pub fn involves(&self, u: User) -> bool {
        self.terms
            .iter()
            .any(|t| t.parts.iter().any(|(v, _)| *v == u))
    }
}

pub fn expr_g(ch: &ChannelMimo, u: User) -> RateExpr {
    RateExpr {
        terms: vec![LogDetTerm::new(0.5, vec![(u, ch.h(u).clone())])],
    }
}

/// Joint decoding of both messages at receiver `u`.
pub fn expr_gs(ch: &ChannelMimo, u: User) -> RateExpr {
    let j = u.other();
    RateExpr {
        terms: vec![LogDetTerm::new(
            0.5,
            vec![(u, ch.h(u).clone()), (j, ch.f(j).clone())],
        )],
    }
}

/// Outer-bound sum constraint at receiver `u`, with the genie `a_other`
/// belonging to the other user `j` (`A_j`, shape `r_j × r_u`).
pub fn expr_gbar(ch: &ChannelMimo, u: User, a_other: &Mat) -> Result<RateExpr> {
    let j = u.other();
    let o = genie_o(ch, a_other, j)?;
    let f = ch.f(j);
    let b = root_factor(&f.gram_cols().add(&o.scale(2.0)))?;
    Ok(RateExpr {
        terms: vec![
            LogDetTerm::new(0.5, vec![(u, ch.h(u).clone()), (j, f.clone())]),
            LogDetTerm::new(-0.5, vec![(j, f.clone())]),
            LogDetTerm::new(0.5, vec![(j, b)]),
        ],
    })
}

/// `B` with `BᵀB = M` for PSD `M`.
fn root_factor(m: &SymMatrix) -> Result<Mat> {
    let e = m.eigen()?;
    let n = m.dim();
    let mut b = Mat::zeros(n, n);
    for k in 0..n {
        let s = e.values[k].max(0.0).sqrt();
        for i in 0..n {
            b[(k, i)] = s * e.vectors[(i, k)];
        }
    }
    Ok(b)
}

/// `½ log|I + H_u S_u H_uᵀ|`
pub fn g(ch: &ChannelMimo, u: User, s: &SymMatrix) -> f64 {
    let arg = s.congruence(ch.h(u)).add_identity(1.0);
    0.5 * linalg::logdet(&arg).expect("I + H S H^T is positive definite for PSD S")
}

pub fn g1(ch: &ChannelMimo, s1: &SymMatrix) -> f64 {
    g(ch, User::One, s1)
}

pub fn g2(ch: &ChannelMimo, s2: &SymMatrix) -> f64 {
    g(ch, User::Two, s2)
}

/// `½ log|I + H_u S_u H_uᵀ + F_j S_j F_jᵀ|`
pub fn gs(ch: &ChannelMimo, u: User, pair: &CovariancePair) -> f64 {
    let j = u.other();
    let arg = pair
        .get(u)
        .congruence(ch.h(u))
        .add(&pair.get(j).congruence(ch.f(j)))
        .add_identity(1.0);
    0.5 * linalg::logdet(&arg).expect("argument is positive definite for PSD covariances")
}

pub fn gs1(ch: &ChannelMimo, pair: &CovariancePair) -> f64 {
    gs(ch, User::One, pair)
}

pub fn gs2(ch: &ChannelMimo, pair: &CovariancePair) -> f64 {
    gs(ch, User::Two, pair)
}

/// `O_i = ½ (H_i − A_i F_i)ᵀ (I − A_i A_iᵀ)⁻¹ (H_i − A_i F_i)`
pub fn genie_o(ch: &ChannelMimo, a: &Mat, i: User) -> Result<SymMatrix> {
    let j = i.other();
    let (ri, rj) = (ch.rx(i), ch.rx(j));
    if a.shape() != (ri, rj) {
        return Err(RateError::GenieShape {
            user: i.number(),
            rows: ri,
            cols: rj,
        });
    }
    let core = SymMatrix::identity(ri).sub(&a.gram_rows());
    let min = core.min_eigenvalue()?;
    if min <= GENIE_TOL {
        return Err(RateError::GenieDegenerate(min));
    }
    let d = ch.h(i).sub(&a.matmul(ch.f(i)));
    Ok(core.inverse_pd()?.congruence(&d.transpose()).scale(0.5))
}

/// Outer-bound sum constraint at receiver `u` (O-form).
pub fn gbar_s(ch: &ChannelMimo, u: User, pair: &CovariancePair, a_other: &Mat) -> Result<f64> {
    expr_gbar(ch, u, a_other)?.value(pair)
}

pub fn gbar_s1(ch: &ChannelMimo, pair: &CovariancePair, a2: &Mat) -> Result<f64> {
    gbar_s(ch, User::One, pair, a2)
}

pub fn gbar_s2(ch: &ChannelMimo, pair: &CovariancePair, a1: &Mat) -> Result<f64> {
    gbar_s(ch, User::Two, pair, a1)
}

/// Block form of the outer-bound sum constraint:
/// `½ log|I + H_u S_u H_uᵀ (I + F_j S_j F_jᵀ)⁻¹| + ½ log|I + [H_j; F_j] S_j [H_j; F_j]ᵀ E_j⁻¹|`
/// with `E_j = [[I, A_j], [A_jᵀ, I]]`.
pub fn gbar_s_block_form(
    ch: &ChannelMimo,
    u: User,
    pair: &CovariancePair,
    a_other: &Mat,
) -> Result<f64> {
    let j = u.other();
    let (ru, rj) = (ch.rx(u), ch.rx(j));
    let noise = pair.get(j).congruence(ch.f(j)).add_identity(1.0);
    let first = SymMatrix::identity(ru)
        .add(&pair.get(u).congruence(ch.h(u)))
        .add(&pair.get(j).congruence(ch.f(j)));
    let t1 = linalg::logdet(&first)? - linalg::logdet(&noise)?;
    let mut e = Mat::identity(rj + ru);
    for r in 0..rj {
        for c in 0..ru {
            e[(r, rj + c)] = a_other[(r, c)];
            e[(rj + c, r)] = a_other[(r, c)];
        }
    }
    let e = SymMatrix::from_mat(&e);
    let stacked = ch.h(j).vstack(ch.f(j));
    let cov = pair.get(j).congruence(&stacked);
    // |I + C E⁻¹| = |E + C| / |E|
    let t2 = linalg::logdet(&e.add(&cov))? - linalg::logdet(&e)?;
    Ok(0.5 * (t1 + t2))
}

/// Single-user water-filling: the covariance maximizing `½ log|I + H S Hᵀ|`
/// under `tr(S) ≤ P`, and the resulting rate.
pub fn waterfill(h: &Mat, p: f64) -> (SymMatrix, f64) {
    let gram = h.gram_cols();
    let e = gram
        .eigen()
        .expect("Jacobi converges on small Gram matrices");
    let gains: Vec<f64> = e.values.iter().map(|&d| d.max(0.0)).collect();
    let cutoff = 1e-14 * gains.first().copied().unwrap_or(0.0);
    let active: Vec<usize> = (0..gains.len()).filter(|&k| gains[k] > cutoff).collect();
    let mut alloc = vec![0.0; gains.len()];
    for m in (1..=active.len()).rev() {
        let idx = &active[..m];
        let mu = (p + idx.iter().map(|&k| 1.0 / gains[k]).sum::<f64>()) / m as f64;
        if mu - 1.0 / gains[idx[m - 1]] > 0.0 {
            for &k in idx {
                alloc[k] = mu - 1.0 / gains[k];
            }
            break;
        }
    }
    let rate = 0.5
        * alloc
            .iter()
            .zip(&gains)
            .map(|(a, g)| (1.0 + a * g).ln())
            .sum::<f64>();
    (e.recompose(&alloc), rate)
}
