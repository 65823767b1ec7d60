//! Channel definitions, validation and the MISO equivalent-channel reduction.
//!
//! The model is
//! `y1 = H1 x1 + F2 x2 + z1`, `y2 = H2 x2 + F1 x1 + z2`
//! with unit-variance white Gaussian noise and `tr(S_i) ≤ P_i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Mat, SymMatrix};

/// `‖F1‖` at or below this value is treated as an exact zero (Z channel).
pub const ZERO_CROSS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("direct channel H{0} is zero")]
    ZeroDirect(usize),
    #[error("power P{0} must be positive and finite, got {1}")]
    Power(usize, f64),
    #[error("non-finite channel entry in {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }
}

/// Two-user vector Gaussian interference channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMimo {
    /// `r1 × t1`
    pub h1: Mat,
    /// `r2 × t1`: user 1's interference at receiver 2
    pub f1: Mat,
    /// `r2 × t2`
    pub h2: Mat,
    /// `r1 × t2`: user 2's interference at receiver 1
    pub f2: Mat,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    GeneralMimo,
    Simo,
    Miso,
    MisoZic,
    Scalar,
}

impl ChannelMimo {
    pub fn new(h1: Mat, f1: Mat, h2: Mat, f2: Mat, p1: f64, p2: f64) -> Self {
        ChannelMimo {
            h1,
            f1,
            h2,
            f2,
            p1,
            p2,
        }
    }

    /// Scalar channel in standard form: unit direct gains, cross gains `√a_i`.
    pub fn scalar(a1: f64, a2: f64, p1: f64, p2: f64) -> Self {
        let one = Mat::from_rows(&[[1.0]]);
        ChannelMimo::new(
            one.clone(),
            Mat::from_rows(&[[a1.sqrt()]]),
            one,
            Mat::from_rows(&[[a2.sqrt()]]),
            p1,
            p2,
        )
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn h(&self, u: User) -> &Mat {
        match u {
            User::One => &self.h1,
            User::Two => &self.h2,
        }
    }

    /// Interference matrix of user `u` (seen at the other receiver).
    pub fn f(&self, u: User) -> &Mat {
        match u {
            User::One => &self.f1,
            User::Two => &self.f2,
        }
    }

    pub fn power(&self, u: User) -> f64 {
        match u {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }

    /// Transmit antennas of user `u`.
    pub fn tx(&self, u: User) -> usize {
        self.h(u).cols()
    }

    /// Receive antennas at receiver `u`.
    pub fn rx(&self, u: User) -> usize {
        self.h(u).rows()
    }

    /// True when user `u` causes no interference at the other receiver.
    pub fn cross_is_zero(&self, u: User) -> bool {
        self.f(u).frobenius() <= ZERO_CROSS_TOL
    }

    pub fn validate(&self) -> Result<ChannelKind, ChannelError> {
        for (name, m) in [
            ("h1", &self.h1),
            ("f1", &self.f1),
            ("h2", &self.h2),
            ("f2", &self.f2),
        ] {
            if m.rows() == 0 || m.cols() == 0 {
                return Err(ChannelError::Shape(format!("{name} is empty")));
            }
            if !m.is_finite() {
                return Err(ChannelError::NonFinite(name));
            }
        }
        let (r1, t1) = self.h1.shape();
        let (r2, t2) = self.h2.shape();
        if self.f1.shape() != (r2, t1) {
            return Err(ChannelError::Shape(format!(
                "f1 must be {r2}x{t1} (rows of h2 by columns of h1), got {}x{}",
                self.f1.rows(),
                self.f1.cols()
            )));
        }
        if self.f2.shape() != (r1, t2) {
            return Err(ChannelError::Shape(format!(
                "f2 must be {r1}x{t2} (rows of h1 by columns of h2), got {}x{}",
                self.f2.rows(),
                self.f2.cols()
            )));
        }
        for u in User::BOTH {
            if self.h(u).frobenius() == 0.0 {
                return Err(ChannelError::ZeroDirect(u.number()));
            }
            let p = self.power(u);
            if !(p > 0.0 && p.is_finite()) {
                return Err(ChannelError::Power(u.number(), p));
            }
        }
        let kind = if r1 == 1 && r2 == 1 && t1 == 1 && t2 == 1 {
            ChannelKind::Scalar
        } else if r1 == 1 && r2 == 1 {
            if self.cross_is_zero(User::One) {
                ChannelKind::MisoZic
            } else {
                ChannelKind::Miso
            }
        } else if t1 == 1 && t2 == 1 {
            ChannelKind::Simo
        } else {
            ChannelKind::GeneralMimo
        };
        Ok(kind)
    }

    /// Reduction of a MISO channel to its two-antenna equivalent.
    pub fn to_miso_equiv(&self) -> Result<MisoEquiv, ChannelError> {
        match self.validate()? {
            ChannelKind::Miso | ChannelKind::MisoZic | ChannelKind::Scalar => {}
            other => {
                return Err(ChannelError::Invalid(format!(
                    "{other:?} channel is not MISO"
                )))
            }
        }
        reduce_miso(
            self.h1.data(),
            self.f1.data(),
            self.h2.data(),
            self.f2.data(),
            self.p1,
            self.p2,
        )
    }
}

/// `sign(x)` with `sign(0) = +1`.
pub fn tau_of(theta: f64) -> f64 {
    if theta.cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Equivalent two-antenna MISO channel
/// `h_i = (cos θ_i, sin θ_i)ᵀ`, `f_i = (√a_i, 0)ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisoEquiv {
    pub theta1: f64,
    pub theta2: f64,
    pub a1: f64,
    pub a2: f64,
    pub p1: f64,
    pub p2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl MisoEquiv {
    pub fn new(theta1: f64, theta2: f64, a1: f64, a2: f64, p1: f64, p2: f64) -> Self {
        MisoEquiv {
            theta1,
            theta2,
            a1,
            a2,
            p1,
            p2,
            tau1: tau_of(theta1),
            tau2: tau_of(theta2),
        }
    }

    /// Z channel: user 1 causes no interference (`f1 = 0`, `θ1 = 0`, `a1 = 0`).
    pub fn zic(a: f64, theta: f64, p1: f64, p2: f64) -> Self {
        MisoEquiv::new(0.0, theta, 0.0, a, p1, p2)
    }

    pub fn symmetric(a: f64, theta: f64, p: f64) -> Self {
        MisoEquiv::new(theta, theta, a, a, p, p)
    }

    pub fn theta(&self, u: User) -> f64 {
        match u {
            User::One => self.theta1,
            User::Two => self.theta2,
        }
    }

    pub fn a(&self, u: User) -> f64 {
        match u {
            User::One => self.a1,
            User::Two => self.a2,
        }
    }

    pub fn power(&self, u: User) -> f64 {
        match u {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }

    pub fn tau(&self, u: User) -> f64 {
        match u {
            User::One => self.tau1,
            User::Two => self.tau2,
        }
    }

    pub fn h_vec(&self, u: User) -> [f64; 2] {
        let t = self.theta(u);
        [t.cos(), t.sin()]
    }

    pub fn f_vec(&self, u: User) -> [f64; 2] {
        [self.a(u).sqrt(), 0.0]
    }

    pub fn is_zic(&self) -> bool {
        self.a1 == 0.0
    }

    /// The equivalent channel as a 1×2 MISO instance of the general model.
    pub fn to_channel(&self) -> ChannelMimo {
        ChannelMimo::new(
            Mat::row(&self.h_vec(User::One)),
            Mat::row(&self.f_vec(User::One)),
            Mat::row(&self.h_vec(User::Two)),
            Mat::row(&self.f_vec(User::Two)),
            self.p1,
            self.p2,
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between `h` and `f` in `[0, π]`, via atan2 of the orthogonal and
/// parallel components of `h` relative to `f`. Zero when `f = 0`.
pub fn angle_between(h: &[f64], f: &[f64]) -> f64 {
    let nf = norm(f);
    if nf == 0.0 {
        return 0.0;
    }
    let par = dot(h, f) / nf;
    let perp: f64 = h
        .iter()
        .zip(f)
        .map(|(hi, fi)| {
            let d = hi - par * fi / nf;
            d * d
        })
        .sum::<f64>()
        .sqrt();
    perp.atan2(par).clamp(0.0, PI)
}

pub fn reduce_miso(
    hhat1: &[f64],
    fhat1: &[f64],
    hhat2: &[f64],
    fhat2: &[f64],
    phat1: f64,
    phat2: f64,
) -> Result<MisoEquiv, ChannelError> {
    let mut parts = [(0.0, 0.0, 0.0); 2];
    for (k, (h, f, p)) in [(hhat1, fhat1, phat1), (hhat2, fhat2, phat2)]
        .into_iter()
        .enumerate()
    {
        if h.len() != f.len() {
            return Err(ChannelError::Shape(format!(
                "user {}: h has {} entries but f has {}",
                k + 1,
                h.len(),
                f.len()
            )));
        }
        let nh = norm(h);
        if nh == 0.0 {
            return Err(ChannelError::ZeroDirect(k + 1));
        }
        let nf = norm(f);
        let (theta, a) = if nf <= ZERO_CROSS_TOL {
            (0.0, 0.0)
        } else {
            (angle_between(h, f), (nf / nh).powi(2))
        };
        parts[k] = (theta, a, p * nh * nh);
    }
    Ok(MisoEquiv::new(
        parts[0].0, parts[1].0, parts[0].1, parts[1].1, parts[0].2, parts[1].2,
    ))
}

/// Orthonormal basis `U` (`t × k`, `k = min(t, 2)`) such that
/// `ĥ = ‖ĥ‖ U (cos θ, sin θ)ᵀ` and `f̂ = ‖f̂‖ U (1, 0)ᵀ` (restricted to the
/// first `k` coordinates).
fn plane_basis(hhat: &[f64], fhat: &[f64]) -> Mat {
    let t = hhat.len();
    let nh = norm(hhat);
    let nf = norm(fhat);
    let e1: Vec<f64> = if nf > ZERO_CROSS_TOL {
        fhat.iter().map(|x| x / nf).collect()
    } else {
        hhat.iter().map(|x| x / nh).collect()
    };
    let mut cols = vec![e1.clone()];
    if t >= 2 {
        let p = dot(hhat, &e1);
        let mut e2: Vec<f64> = hhat.iter().zip(&e1).map(|(h, e)| h - p * e).collect();
        let n2 = norm(&e2);
        if n2 > 1e-12 * nh {
            e2.iter_mut().for_each(|x| *x /= n2);
        } else {
            // ĥ ∥ f̂: any unit vector orthogonal to e1 completes the plane
            let k = (0..t)
                .min_by(|&i, &j| e1[i].abs().total_cmp(&e1[j].abs()))
                .unwrap_or(0);
            let mut v = vec![0.0; t];
            v[k] = 1.0;
            let p = dot(&v, &e1);
            v.iter_mut().zip(&e1).for_each(|(x, e)| *x -= p * e);
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            e2 = v;
        }
        cols.push(e2);
    }
    let mut u = Mat::zeros(t, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..t {
            u[(i, j)] = c[i];
        }
    }
    u
}

/// Lifts a 2×2 covariance of the equivalent channel back to the original
/// `t`-antenna transmitter: `Ŝ = U S Uᵀ / ‖ĥ‖²` with `U` an orthonormal basis
/// of span{f̂, ĥ}. When `t = 1` only the first coordinate of `S` survives.
pub fn lift_covariance(s_equiv: &SymMatrix, hhat: &[f64], fhat: &[f64]) -> SymMatrix {
    let u = plane_basis(hhat, fhat);
    let k = u.cols();
    let mut s = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            s[(i, j)] = s_equiv[(i, j)];
        }
    }
    let nh2 = dot(hhat, hhat);
    SymMatrix::from_mat(&u.matmul(&s).matmul(&u.transpose()).scale(1.0 / nh2))
}
