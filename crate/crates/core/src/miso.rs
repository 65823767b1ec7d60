//! Closed-form MISO machinery: the beam-angle parametrization of the
//! joint-decoding region, MISO Z channel sum rate and boundary, the symmetric
//! MISO case table, SIMO conditions and regime maps.
//!
//! Channels with `cos θ < 0` are handled by the substitution `θ → π − θ`,
//! which leaves the beam angle `φ` unchanged.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{angle_between, ChannelError, ChannelMimo, MisoEquiv, User};
use crate::gsi::{CertTolerances, ConditionCheck, GsiStatus, GsiVerdict};
use crate::linalg::{Mat, SymMatrix};
use crate::rates::GenieParam;
use crate::search;
use crate::solver::{self, RegionPoint, RegionPolyline, SolverError, SolverOptions, SweepParam};

/// Grid intervals of the coarse φ scan.
pub const SCAN_POINTS: usize = 512;
/// Bracket width of the golden-section refinement.
pub const GOLDEN_TOL: f64 = 1e-10;
/// A boundary point is certified where `Q(φ) ≥ −Q_TOL`.
pub const Q_TOL: f64 = 1e-9;
/// `|sin θ|` or `|cos θ|` below this counts as a degenerate angle.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MisoError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("not a MISO Z channel (a1 must be 0)")]
    NotZic,
    #[error("not a symmetric MISO channel: {0}")]
    NotSymmetric(String),
    #[error("degenerate angle: {0}")]
    Degenerate(String),
    #[error("genie scalar must satisfy |A| < 1, got {0}")]
    GenieOutOfRange(f64),
    #[error("regime map needs at least an 8x8 grid, got {0}x{1}")]
    GridTooSmall(usize, usize),
}

pub type Result<T> = std::result::Result<T, MisoError>;

fn half_ln(x: f64) -> f64 {
    0.5 * x.ln()
}

fn sin2(x: f64) -> f64 {
    x.sin().powi(2)
}

/// `θ` folded into `[0, π/2]` by `θ → π − θ` when `cos θ < 0`.
fn fold(theta: f64) -> f64 {
    if theta.cos() < 0.0 {
        PI - theta
    } else {
        theta
    }
}

/// Rank-one covariance `P u uᵀ`, `u = (sin φ, τ cos φ)ᵀ`.
pub fn beam(p: f64, tau: f64, phi: f64) -> SymMatrix {
    SymMatrix::outer(&[phi.sin(), tau * phi.cos()]).scale(p)
}

/// The four bounds of the joint-decoding region at beam angles `(φ1, φ2)`.
/// A joint-decoding bound at a receiver without interference is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisoRates {
    pub r1: f64,
    pub r2: f64,
    pub sum1: Option<f64>,
    pub sum2: Option<f64>,
}

impl MisoRates {
    pub fn sum_rate(&self) -> f64 {
        [self.sum1, self.sum2]
            .into_iter()
            .flatten()
            .fold(self.r1 + self.r2, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPoint {
    pub phi: [f64; 2],
    pub s: [SymMatrix; 2],
    pub rates: MisoRates,
}

impl PhiPoint {
    pub fn new(ch: &MisoEquiv, phi1: f64, phi2: f64) -> Self {
        PhiPoint {
            phi: [phi1, phi2],
            s: [beam(ch.p1, ch.tau1, phi1), beam(ch.p2, ch.tau2, phi2)],
            rates: miso_region_point(ch, phi1, phi2),
        }
    }
}

pub fn miso_region_point(ch: &MisoEquiv, phi1: f64, phi2: f64) -> MisoRates {
    let d1 = ch.p1 * sin2(ch.theta1 + ch.tau1 * phi1);
    let d2 = ch.p2 * sin2(ch.theta2 + ch.tau2 * phi2);
    MisoRates {
        r1: half_ln(1.0 + d1),
        r2: half_ln(1.0 + d2),
        sum1: (ch.a2 > 0.0).then(|| half_ln(1.0 + d1 + ch.a2 * ch.p2 * sin2(phi2))),
        sum2: (ch.a1 > 0.0).then(|| half_ln(1.0 + d2 + ch.a1 * ch.p1 * sin2(phi1))),
    }
}

/// Largest joint-decoding sum rate by a nested scan over `(φ1, φ2) ∈ [0, π/2]²`.
pub fn phi_scan_sum_rate(ch: &MisoEquiv) -> PhiPoint {
    let inner = |phi1: f64| {
        search::scan_max(
            |phi2| miso_region_point(ch, phi1, phi2).sum_rate(),
            0.0,
            FRAC_PI_2,
            SCAN_POINTS,
            GOLDEN_TOL,
        )
    };
    let (phi1, _) = search::scan_max(
        |phi1| inner(phi1).1,
        0.0,
        FRAC_PI_2,
        SCAN_POINTS,
        GOLDEN_TOL,
    );
    let (phi2, _) = inner(phi1);
    PhiPoint::new(ch, phi1, phi2)
}

/// Genie scalar making `S h = S f A` for the beam at `φ`: `τ sin(θ + τφ) / (√a sin φ)`.
pub fn miso_genie(ch: &MisoEquiv, u: User, phi: f64) -> f64 {
    let (theta, tau, a) = (ch.theta(u), ch.tau(u), ch.a(u));
    tau * (theta + tau * phi).sin() / (a.sqrt() * phi.sin())
}

/// Multipliers of a rank-one optimum together with the scale of `λO`.
/// `W = k v vᵀ` with `v ⟂ u` the beam direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisoMultipliers {
    /// multiplier of the joint-decoding sum constraint(s)
    pub lambda: f64,
    /// multiplier of the sum of single-user rates
    pub gamma: f64,
    /// power multiplier
    pub eta: f64,
    pub k: f64,
    /// `(λ/2)·a sin²θ / (a sin²φ − sin²(θ+φ))`
    pub lambda_o_scale: f64,
}

/// `η = uᵀMu`, `k = η − vᵀMv` for the gradient sum `M` and beam `u = (sin φ, cos φ)`.
fn eta_and_k(m: &SymMatrix, phi: f64) -> (f64, f64) {
    let u = [phi.sin(), phi.cos()];
    let v = [phi.cos(), -phi.sin()];
    let eta = m.quad(&u);
    (eta, eta - m.quad(&v))
}

fn lambda_o_scale(lambda: f64, a: f64, theta: f64, phi: f64) -> f64 {
    0.5 * lambda * a * sin2(theta) / (a * sin2(phi) - sin2(theta + phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZicCaseTag {
    #[serde(rename = "TypeI_VeryStrong")]
    TypeIVeryStrong,
    TypeII,
    TypeIII,
    None,
}

impl ZicCaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZicCaseTag::TypeIVeryStrong => "TypeI_VeryStrong",
            ZicCaseTag::TypeII => "TypeII",
            ZicCaseTag::TypeIII => "TypeIII",
            ZicCaseTag::None => "None",
        }
    }
}

/// Which branch of the joint-decoding sum-rate maximum applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZicRegime {
    /// `a cos²θ ≥ 1 + P1`
    VeryStrong,
    /// `a/(1+P1) ≤ cos²θ < (1+P1)/a`
    Strong,
    /// `cos²θ < min{a/(1+P1), (1+P1)/a}`
    Intermediate,
    /// `θ ∈ {0, π}`: scalar Z channel
    Scalar,
    /// `a = 0` or `θ = π/2`: no effective interference
    Separable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZicSumRateCase {
    pub case_tag: ZicCaseTag,
    pub regime: ZicRegime,
    pub phi_opt: f64,
    /// largest joint-decoding sum rate (the sum capacity when `case_tag != None`)
    pub sum_rate: f64,
    pub multipliers: Option<MisoMultipliers>,
}

impl ZicSumRateCase {
    pub fn certified(&self) -> bool {
        self.case_tag != ZicCaseTag::None
    }
}

/// Folded parameters `(a, θ, P1, P2)` of a Z channel.
#[derive(Debug, Clone, Copy)]
struct Zic {
    a: f64,
    theta: f64,
    p1: f64,
    p2: f64,
}

impl Zic {
    fn of(ch: &MisoEquiv) -> Result<Zic> {
        if !ch.is_zic() {
            return Err(MisoError::NotZic);
        }
        Ok(Zic {
            a: ch.a2,
            theta: fold(ch.theta2),
            p1: ch.p1,
            p2: ch.p2,
        })
    }

    fn separable(&self) -> bool {
        self.a == 0.0 || self.theta.cos().abs() < ANGLE_TOL
    }

    fn scalar(&self) -> bool {
        self.theta.sin().abs() < ANGLE_TOL
    }

    fn regime(&self) -> ZicRegime {
        if self.separable() {
            return ZicRegime::Separable;
        }
        if self.scalar() {
            return ZicRegime::Scalar;
        }
        let c2 = self.theta.cos().powi(2);
        if self.a * c2 >= 1.0 + self.p1 {
            ZicRegime::VeryStrong
        } else if c2 >= self.a / (1.0 + self.p1) {
            ZicRegime::Strong
        } else {
            ZicRegime::Intermediate
        }
    }

    fn phi_ez(&self) -> f64 {
        let s = (self.a / (1.0 + self.p1)).sqrt();
        let x = (s - self.theta.cos()).max(0.0);
        self.theta.sin().atan2(x)
    }

    fn r2(&self, phi: f64) -> f64 {
        half_ln(1.0 + self.p2 * sin2(self.theta + phi))
    }

    fn sum1(&self, phi: f64) -> f64 {
        half_ln(1.0 + self.p1 + self.a * self.p2 * sin2(phi))
    }

    /// Boundary pair at `φ` and whether it was clipped onto `R1 = 0`.
    fn pair(&self, phi: f64) -> ((f64, f64), bool) {
        let (r2, sum) = (self.r2(phi), self.sum1(phi));
        if sum < r2 {
            ((0.0, sum), true)
        } else {
            ((sum - r2, r2), false)
        }
    }

    fn q(&self, phi: f64) -> f64 {
        let (a, t) = (self.a, self.theta);
        a * sin2(phi) - sin2(t + phi)
            + (2.0 * (t + phi)).sin() * sin2(t) / (2.0 * t).sin()
                * (1.0 + self.p1 + a * self.p2 * sin2(phi))
    }

    /// Multipliers at a beam angle where the receiver-1 sum constraint is
    /// active with weight `lambda`.
    fn multipliers(&self, phi: f64, lambda: f64) -> MisoMultipliers {
        let (a, t) = (self.a, self.theta);
        let gamma = 1.0 - lambda;
        let h = [t.cos(), t.sin()];
        let f = [a.sqrt(), 0.0];
        let m = SymMatrix::outer(&h)
            .scale(gamma / (2.0 * (1.0 + self.p2 * sin2(t + phi))))
            .add(
                &SymMatrix::outer(&f)
                    .scale(lambda / (2.0 * (1.0 + self.p1 + a * self.p2 * sin2(phi)))),
            );
        let (eta, k) = eta_and_k(&m, phi);
        MisoMultipliers {
            lambda,
            gamma,
            eta,
            k,
            lambda_o_scale: lambda_o_scale(lambda, a, t, phi),
        }
    }

    fn type_ii_condition(&self) -> bool {
        let s2 = sin2(self.theta);
        let den = 1.0 - self.p2 * s2;
        den > 0.0
            && (1.0 + self.p1 * s2) / den <= self.a
            && self.a <= (1.0 + self.p1) * self.theta.cos().powi(2)
    }

    fn type_iii_condition(&self) -> bool {
        let s = (self.a / (1.0 + self.p1)).sqrt();
        let c = self.theta.cos();
        let lhs = self.p1 * s * c;
        let rhs = (1.0 - s * c)
            * (1.0 + self.p1 + self.a * self.p2 * sin2(self.theta) / (s * s + 1.0 - 2.0 * s * c));
        lhs >= rhs
    }
}

/// `sin²(θ + τφ_ez) = (a/(1+P1)) sin²φ_ez`.
pub fn phi_ez(ch: &MisoEquiv) -> Result<f64> {
    Ok(Zic::of(ch)?.phi_ez())
}

/// Boundary test function; a point of the φ-parametrized boundary is on the
/// capacity boundary where `Q(φ) ≥ 0`.
pub fn q_phi(ch: &MisoEquiv, phi: f64) -> Result<f64> {
    let z = Zic::of(ch)?;
    if z.scalar() {
        return Err(MisoError::Degenerate(
            "Q is undefined for θ ∈ {0, π}".into(),
        ));
    }
    Ok(z.q(phi))
}

pub fn zic_sum_rate(ch: &MisoEquiv) -> Result<ZicSumRateCase> {
    let z = Zic::of(ch)?;
    let regime = z.regime();
    let (p1, p2, a) = (z.p1, z.p2, z.a);
    let separate = half_ln(1.0 + p1) + half_ln(1.0 + p2);
    let out = match regime {
        ZicRegime::Separable | ZicRegime::VeryStrong => ZicSumRateCase {
            case_tag: ZicCaseTag::TypeIVeryStrong,
            regime,
            phi_opt: FRAC_PI_2 - z.theta,
            sum_rate: separate,
            multipliers: None,
        },
        ZicRegime::Scalar => {
            let case_tag = if a >= 1.0 + p1 {
                ZicCaseTag::TypeIVeryStrong
            } else if a >= 1.0 {
                ZicCaseTag::TypeII
            } else {
                ZicCaseTag::None
            };
            ZicSumRateCase {
                case_tag,
                regime,
                phi_opt: FRAC_PI_2,
                sum_rate: separate.min(half_ln(1.0 + p1 + a * p2)),
                multipliers: None,
            }
        }
        ZicRegime::Strong => ZicSumRateCase {
            case_tag: if z.type_ii_condition() {
                ZicCaseTag::TypeII
            } else {
                ZicCaseTag::None
            },
            regime,
            phi_opt: FRAC_PI_2,
            sum_rate: z.sum1(FRAC_PI_2),
            multipliers: Some(z.multipliers(FRAC_PI_2, 1.0)),
        },
        ZicRegime::Intermediate => {
            let phi = z.phi_ez();
            let s2 = (2.0 * (z.theta + phi)).sin();
            let lambda = s2 / (s2 - a * (2.0 * phi).sin() / (1.0 + p1));
            ZicSumRateCase {
                case_tag: if z.type_iii_condition() {
                    ZicCaseTag::TypeIII
                } else {
                    ZicCaseTag::None
                },
                regime,
                phi_opt: phi,
                sum_rate: z.sum1(phi),
                multipliers: Some(z.multipliers(phi, lambda)),
            }
        }
    };
    Ok(out)
}

/// The φ range of the parametrized capacity boundary, `None` when the region
/// is a rectangle.
pub fn zic_phi_interval(ch: &MisoEquiv) -> Result<Option<(f64, f64)>> {
    let z = Zic::of(ch)?;
    Ok(match z.regime() {
        ZicRegime::Separable | ZicRegime::VeryStrong => None,
        ZicRegime::Scalar => {
            return Err(MisoError::Degenerate("θ ∈ {0, π}: scalar Z channel".into()))
        }
        ZicRegime::Strong => Some((FRAC_PI_2 - z.theta, FRAC_PI_2)),
        ZicRegime::Intermediate => Some((FRAC_PI_2 - z.theta, z.phi_ez())),
    })
}

/// Rate pair of the parametrized boundary at `φ`. When the receiver-1 sum
/// bound is below `R2`'s own bound the corner leaves the quadrant and the
/// extreme point is `(0, sum bound)`.
pub fn zic_boundary_pair(ch: &MisoEquiv, phi: f64) -> Result<(f64, f64)> {
    Ok(Zic::of(ch)?.pair(phi).0)
}

fn q_verdict(point: (f64, f64), q: f64) -> GsiVerdict {
    let passed = q >= -Q_TOL;
    GsiVerdict {
        status: if passed {
            GsiStatus::Certified
        } else {
            GsiStatus::NotCertified
        },
        conditions: vec![ConditionCheck {
            name: "Q(phi) >= 0".into(),
            passed,
            margin: q,
        }],
        point,
        genie: GenieParam::default(),
        note: None,
        tolerances: CertTolerances::default(),
    }
}

/// `n_points` equally spaced angles over the φ interval, with `Q(φ)` and a
/// verdict per point. Each sign change of `Q` replaces the nearest interior
/// grid angle. A rectangular region yields its single corner.
pub fn zic_boundary(ch: &MisoEquiv, n_points: usize) -> Result<RegionPolyline> {
    if n_points < 2 {
        return Err(SolverError::TooFewPoints.into());
    }
    let z = Zic::of(ch)?;
    let Some((lo, hi)) = zic_phi_interval(ch)? else {
        let point = (half_ln(1.0 + z.p1), half_ln(1.0 + z.p2));
        let phi = FRAC_PI_2 - z.theta;
        let verdict = GsiVerdict {
            conditions: Vec::new(),
            ..q_verdict(point, 0.0)
        };
        return Ok(RegionPolyline {
            param: SweepParam::PhiOverPi,
            points: vec![RegionPoint {
                param: phi / PI,
                r1: point.0,
                r2: point.1,
                pair: Some(solver_pair(ch, phi)),
                converged: true,
                verdict: Some(verdict),
                q_phi: None,
            }],
        });
    };
    let mut phis: Vec<f64> = (0..n_points)
        .map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64)
        .collect();
    // snap the nearest interior grid point onto each sign change of Q
    for root in zic_q_roots(ch)? {
        if let Some(k) = (1..n_points - 1)
            .min_by(|&i, &j| (phis[i] - root).abs().total_cmp(&(phis[j] - root).abs()))
        {
            phis[k] = root;
        }
    }
    let points = phis
        .into_iter()
        .map(|phi| {
            let ((r1, r2), clipped) = z.pair(phi);
            let q = z.q(phi);
            let mut verdict = q_verdict((r1, r2), q);
            if clipped {
                verdict.status = GsiStatus::NotCertified;
                verdict.note = Some("corner outside the quadrant, clipped to R1 = 0".into());
            }
            RegionPoint {
                param: phi / PI,
                r1,
                r2,
                pair: Some(solver_pair(ch, phi)),
                converged: true,
                verdict: Some(verdict),
                q_phi: Some(q),
            }
        })
        .collect();
    Ok(RegionPolyline {
        param: SweepParam::PhiOverPi,
        points,
    })
}

fn solver_pair(ch: &MisoEquiv, phi: f64) -> crate::rates::CovariancePair {
    crate::rates::CovariancePair::new(beam(ch.p1, 1.0, FRAC_PI_2), beam(ch.p2, ch.tau2, phi))
}

/// Points where `Q` changes sign inside the φ interval.
pub fn zic_q_roots(ch: &MisoEquiv) -> Result<Vec<f64>> {
    let z = Zic::of(ch)?;
    Ok(match zic_phi_interval(ch)? {
        None => Vec::new(),
        Some((lo, hi)) => search::roots(|p| z.q(p), lo, hi, SCAN_POINTS, 1e-15),
    })
}

/// Distinguished points of a Z channel region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZicCorners {
    /// `φ = π/2 − θ`: user 2 at its single-user rate
    pub single_user: (f64, f64),
    /// the far end of the φ interval
    pub interval_end: (f64, f64),
    /// last point of the certified segment starting at `single_user`
    pub certified_end: (f64, f64),
    /// `φ` of `certified_end`
    pub phi_certified_end: f64,
    /// `R1 = ½ln(1+P1)` on the sum-rate line
    pub sum_rate: (f64, f64),
}

pub fn zic_corners(ch: &MisoEquiv) -> Result<ZicCorners> {
    let z = Zic::of(ch)?;
    let sum = zic_sum_rate(ch)?.sum_rate;
    let r1_max = half_ln(1.0 + z.p1);
    let sum_corner = (r1_max, sum - r1_max);
    let Some((lo, hi)) = zic_phi_interval(ch)? else {
        let corner = (r1_max, half_ln(1.0 + z.p2));
        return Ok(ZicCorners {
            single_user: corner,
            interval_end: corner,
            certified_end: corner,
            phi_certified_end: FRAC_PI_2 - z.theta,
            sum_rate: corner,
        });
    };
    let phi_end = if z.q(lo) < -Q_TOL {
        lo
    } else {
        zic_q_roots(ch)?
            .into_iter()
            .find(|&r| z.q((r + 1e-6).min(hi)) < 0.0)
            .unwrap_or(hi)
    };
    Ok(ZicCorners {
        single_user: zic_boundary_pair(ch, lo)?,
        interval_end: zic_boundary_pair(ch, hi)?,
        certified_end: zic_boundary_pair(ch, phi_end)?,
        phi_certified_end: phi_end,
        sum_rate: sum_corner,
    })
}

/// Outer bound with the scalar genie `A` on user 2 (`E2 = [[1, A], [A, 1]]`),
/// swept over `R2 ∈ [0, ½ln(1+P2)]` with the general solver.
pub fn zic_outer_bound(
    ch: &MisoEquiv,
    a_scalar: f64,
    n_points: usize,
    opts: &SolverOptions,
) -> Result<RegionPolyline> {
    if !ch.is_zic() {
        return Err(MisoError::NotZic);
    }
    if a_scalar.is_nan() || a_scalar.abs() >= 1.0 {
        return Err(MisoError::GenieOutOfRange(a_scalar));
    }
    let genie = GenieParam {
        a1: None,
        a2: Some(Mat::from_rows(&[[a_scalar]])),
    };
    Ok(solver::boundary_sweep(
        &ch.to_channel(),
        n_points,
        Some(&genie),
        opts,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymCase {
    I,
    II,
    III,
}

impl SymCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            SymCase::I => "I",
            SymCase::II => "II",
            SymCase::III => "III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMisoCase {
    pub case_tag: SymCase,
    /// `φ_u`, `φ_s` or `φ_e`
    pub phi_star: f64,
    pub sum_rate: f64,
    pub multipliers: MisoMultipliers,
    pub certified: bool,
}

struct Sym {
    a: f64,
    theta: f64,
    p: f64,
}

impl Sym {
    fn q_u(&self, phi: f64) -> f64 {
        (1.0 + self.p * sin2(self.theta + phi)).ln()
    }

    fn q_s(&self, phi: f64) -> f64 {
        half_ln(1.0 + self.p * sin2(self.theta + phi) + self.a * self.p * sin2(phi))
    }

    fn phi_s(&self) -> f64 {
        let c = self.a + (2.0 * self.theta).cos();
        let x = (2.0 * self.theta).sin() / c;
        if c > 0.0 {
            FRAC_PI_2 - 0.5 * x.atan()
        } else if c == 0.0 {
            PI / 4.0
        } else {
            -0.5 * x.atan()
        }
    }

    fn multipliers(&self, phi: f64, lambda: f64, gamma: f64) -> MisoMultipliers {
        let (a, t, p) = (self.a, self.theta, self.p);
        let du = 1.0 + p * sin2(t + phi);
        let ds = du + a * p * sin2(phi);
        let h = [t.cos(), t.sin()];
        let f = [a.sqrt(), 0.0];
        let m = SymMatrix::outer(&h)
            .scale(gamma / (2.0 * du) + lambda / (2.0 * ds))
            .add(&SymMatrix::outer(&f).scale(lambda / (2.0 * ds)));
        let (eta, k) = eta_and_k(&m, phi);
        let scale = if lambda > 0.0 {
            lambda_o_scale(lambda, a, t, phi)
        } else {
            0.0
        };
        MisoMultipliers {
            lambda,
            gamma,
            eta,
            k,
            lambda_o_scale: scale,
        }
    }
}

pub fn sym_sum_rate(ch: &MisoEquiv) -> Result<SymMisoCase> {
    if ch.theta1 != ch.theta2 || ch.a1 != ch.a2 || ch.p1 != ch.p2 {
        return Err(MisoError::NotSymmetric(
            "θ, a and P must agree for both users".into(),
        ));
    }
    if !(ch.a1 > 0.0 && ch.p1 > 0.0) {
        return Err(MisoError::NotSymmetric("a and P must be positive".into()));
    }
    let theta = fold(ch.theta1);
    if theta.sin().abs() < ANGLE_TOL || theta.cos().abs() < ANGLE_TOL {
        return Err(MisoError::Degenerate("θ must avoid 0, π/2 and π".into()));
    }
    let s = Sym {
        a: ch.a1,
        theta,
        p: ch.p1,
    };
    let phi_u = FRAC_PI_2 - theta;
    let phi_s = s.phi_s();
    let out = if s.q_s(phi_u) >= s.q_u(phi_u) {
        SymMisoCase {
            case_tag: SymCase::I,
            phi_star: phi_u,
            sum_rate: s.q_u(phi_u),
            multipliers: s.multipliers(phi_u, 0.0, 1.0),
            certified: true,
        }
    } else if s.q_s(phi_s) <= s.q_u(phi_s) {
        let mult = s.multipliers(phi_s, 0.5, 0.0);
        SymMisoCase {
            case_tag: SymCase::II,
            phi_star: phi_s,
            sum_rate: s.q_s(phi_s),
            certified: sin2(theta + phi_s) < s.a * sin2(phi_s) && mult.k >= mult.lambda_o_scale,
            multipliers: mult,
        }
    } else {
        let roots = search::roots(|p| s.q_u(p) - s.q_s(p), 0.0, FRAC_PI_2, SCAN_POINTS, 1e-15);
        let phi_e = roots
            .into_iter()
            .max_by(|x, y| s.q_u(*x).total_cmp(&s.q_u(*y)))
            .ok_or_else(|| MisoError::Degenerate("q_u and q_s do not cross".into()))?;
        let s2 = (2.0 * (theta + phi_e)).sin();
        let d = -(s2 + s.a * (2.0 * phi_e).sin()) / ((1.0 + s.p * sin2(theta + phi_e)) * s2);
        let lambda = 1.0 / (d + 2.0);
        let mult = s.multipliers(phi_e, lambda, 1.0 - 2.0 * lambda);
        SymMisoCase {
            case_tag: SymCase::III,
            phi_star: phi_e,
            sum_rate: s.q_s(phi_e),
            certified: sin2(theta + phi_e) < s.a * sin2(phi_e) && mult.k >= mult.lambda_o_scale,
            multipliers: mult,
        }
    };
    Ok(out)
}

/// Closed-form SIMO conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimoReport {
    /// `‖h_i‖ ≤ ‖f_i‖` for both users
    pub gsi_full_region: bool,
    pub very_strong: bool,
    /// `‖f_i‖ / ‖h_i‖`
    pub norm_ratios: [f64; 2],
    /// `‖f_i‖²/‖h_i‖² − (1 + P_j‖h_j‖²)/(1 + P_j‖h_j‖² sin²∠(f_i, h_j))`
    pub very_strong_margins: [f64; 2],
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn simo_conditions(
    h1: &[f64],
    f1: &[f64],
    h2: &[f64],
    f2: &[f64],
    p1: f64,
    p2: f64,
) -> std::result::Result<SimoReport, ChannelError> {
    let h = [h1, h2];
    let f = [f1, f2];
    let p = [p1, p2];
    for i in 0..2 {
        if norm(h[i]) == 0.0 {
            return Err(ChannelError::ZeroDirect(i + 1));
        }
        if f[i].len() != h[1 - i].len() {
            return Err(ChannelError::Shape(format!(
                "f{} has {} entries but receiver {} has {} antennas",
                i + 1,
                f[i].len(),
                2 - i,
                h[1 - i].len()
            )));
        }
    }
    let mut ratios = [0.0; 2];
    let mut margins = [0.0; 2];
    for i in 0..2 {
        let j = 1 - i;
        let (nh, nf, nhj) = (norm(h[i]), norm(f[i]), norm(h[j]));
        ratios[i] = nf / nh;
        let g = p[j] * nhj * nhj;
        let s = sin2(angle_between(f[i], h[j]));
        margins[i] = ratios[i] * ratios[i] - (1.0 + g) / (1.0 + g * s);
    }
    Ok(SimoReport {
        gsi_full_region: ratios.iter().all(|&r| r >= 1.0),
        very_strong: margins.iter().all(|&m| m >= 0.0),
        norm_ratios: ratios,
        very_strong_margins: margins,
    })
}

pub fn simo_conditions_of(ch: &ChannelMimo) -> std::result::Result<SimoReport, ChannelError> {
    if ch.tx(User::One) != 1 || ch.tx(User::Two) != 1 {
        return Err(ChannelError::Invalid(
            "SIMO conditions need single-antenna transmitters".into(),
        ));
    }
    simo_conditions(
        &ch.h1.col_vec(0),
        &ch.f1.col_vec(0),
        &ch.h2.col_vec(0),
        &ch.f2.col_vec(0),
        ch.p1,
        ch.p2,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    Zic,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub a: f64,
    pub theta_over_pi: f64,
    pub case_tag: String,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    pub kind: MapKind,
    pub p1: f64,
    pub p2: f64,
    pub cells: Vec<RegimeCell>,
}

impl RegimeMap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,theta_over_pi,case_tag,certified\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{}\n",
                solver::fmt_sig(c.a),
                solver::fmt_sig(c.theta_over_pi),
                c.case_tag,
                c.certified
            ));
        }
        out
    }
}

/// Case tag and certification flag on the grid `a_values × theta_values`
/// (angles in radians). The symmetric map uses `P = p1`.
pub fn regime_map(
    kind: MapKind,
    p1: f64,
    p2: f64,
    a_values: &[f64],
    theta_values: &[f64],
) -> Result<RegimeMap> {
    if a_values.len() < 8 || theta_values.len() < 8 {
        return Err(MisoError::GridTooSmall(a_values.len(), theta_values.len()));
    }
    let grid: Vec<(f64, f64)> = a_values
        .iter()
        .flat_map(|&a| theta_values.iter().map(move |&t| (a, t)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(a, theta)| {
            let (case_tag, certified) = match kind {
                MapKind::Zic => {
                    let c = zic_sum_rate(&MisoEquiv::zic(a, theta, p1, p2))?;
                    (c.case_tag.as_str().to_string(), c.certified())
                }
                MapKind::Symmetric => {
                    let c = sym_sum_rate(&MisoEquiv::symmetric(a, theta, p1))?;
                    (c.case_tag.as_str().to_string(), c.certified)
                }
            };
            Ok(RegimeCell {
                a,
                theta_over_pi: theta / PI,
                case_tag,
                certified,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegimeMap {
        kind,
        p1,
        p2: if kind == MapKind::Symmetric { p1 } else { p2 },
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beam_has_full_trace_and_rank_one() {
        let s = beam(2.5, -1.0, 0.3);
        assert_abs_diff_eq!(s.trace(), 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.min_eigenvalue().unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn region_point_at_aligned_beam() {
        let ch = MisoEquiv::new(FRAC_PI_2, FRAC_PI_2, 1.0, 1.0, 2.0, 3.0);
        let r = miso_region_point(&ch, 0.0, 0.0);
        assert_abs_diff_eq!(r.r1, half_ln(3.0), epsilon = 1e-14);
        assert_abs_diff_eq!(r.r2, half_ln(4.0), epsilon = 1e-14);
        assert_abs_diff_eq!(r.sum1.unwrap(), half_ln(3.0), epsilon = 1e-14);
    }

    #[test]
    fn very_strong_zic() {
        let c = zic_sum_rate(&MisoEquiv::zic(10.0, 0.1 * PI, 1.0, 1.0)).unwrap();
        assert_eq!(c.case_tag, ZicCaseTag::TypeIVeryStrong);
        assert_abs_diff_eq!(c.sum_rate, 2.0 * half_ln(2.0), epsilon = 1e-14);
    }

    #[test]
    fn scalar_zic_routes_to_closed_form() {
        let c = zic_sum_rate(&MisoEquiv::zic(1.5, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(c.regime, ZicRegime::Scalar);
        assert_eq!(c.case_tag, ZicCaseTag::TypeII);
        assert_abs_diff_eq!(c.sum_rate, half_ln(3.5), epsilon = 1e-14);
        let weak = zic_sum_rate(&MisoEquiv::zic(0.5, PI, 1.0, 1.0)).unwrap();
        assert_eq!(weak.case_tag, ZicCaseTag::None);
    }

    #[test]
    fn simo_boundary_case() {
        let r =
            simo_conditions(&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.8], &[1.0, 0.0], 1.0, 1.0).unwrap();
        assert!(r.gsi_full_region);
        let r =
            simo_conditions(&[1.0, 0.0], &[0.0, 0.0], &[0.6, 0.8], &[1.0, 0.0], 1.0, 1.0).unwrap();
        assert!(!r.gsi_full_region);
        assert!(!r.very_strong);
        assert!(simo_conditions(&[0.0], &[1.0], &[1.0], &[1.0], 1.0, 1.0).is_err());
    }
}
