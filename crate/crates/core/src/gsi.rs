//! Generally-strong-interference certificates: genie matrices `A_i`, the
//! penalty `O_i`, the sum-rate and boundary-point conditions, and a regime
//! classifier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelMimo, User};
use crate::linalg::{self, Mat, SymMatrix};
use crate::miso::{self, SimoReport};
use crate::rates::{self, GenieParam, GENIE_TOL};
use crate::search;
use crate::solver::{
    self, clean_covariance, KktCertificate, OptKind, OptProblem, OptResult, RegionPoint,
    RegionPolyline, SolverOptions, SweepParam,
};

/// Cap on line searches in the nullspace searches for `A`.
pub const A_SEARCH_CAP: usize = 500;

/// `H − AF` below this (relative to `‖H‖`) is treated as an exact factorization, so `O = 0`.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertTolerances {
    /// consistency of `S Hᵀ = S Fᵀ Aᵀ` (Frobenius residual)
    pub residual: f64,
    /// slack on `‖A‖₂ ≤ 1`
    pub spectral: f64,
    /// slack on `W − λO ⪰ 0` (smallest eigenvalue)
    pub psd: f64,
    /// multipliers at or below this are treated as zero
    pub multiplier: f64,
}

impl Default for CertTolerances {
    fn default() -> Self {
        CertTolerances {
            residual: 1e-8,
            spectral: 1e-9,
            psd: 1e-8,
            multiplier: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AMatrixSolution {
    pub a: Mat,
    /// `‖S Hᵀ − S Fᵀ Aᵀ‖_F`
    pub residual: f64,
    pub spectral_norm: f64,
    /// dimension of the solution set of the linear system
    pub freedom_dim: usize,
    /// unit-Frobenius directions spanning that set
    #[serde(skip)]
    pub nullspace: Vec<Mat>,
}

impl AMatrixSolution {
    pub fn admissible(&self, tol: &CertTolerances) -> bool {
        self.residual <= tol.residual && self.spectral_norm <= 1.0 + tol.spectral
    }
}

fn directions(nullspace: &Mat, ri: usize, rj: usize) -> Vec<Mat> {
    (0..nullspace.cols())
        .map(|k| linalg::unvec(&nullspace.col_vec(k), rj, ri).transpose())
        .collect()
}

/// Solves `S Hᵀ = S Fᵀ Aᵀ` for `A` (`r_i × r_j`) through the Kronecker system
/// `(I ⊗ S Fᵀ) vec(Aᵀ) = vec(S Hᵀ)`. Starts from the minimum-Frobenius-norm
/// solution; if that has `‖A‖₂ > 1` and the solution set is larger than a
/// point, coordinate descent over the nullspace lowers the spectral norm.
pub fn solve_a(s_star: &SymMatrix, h: &Mat, f: &Mat) -> linalg::Result<AMatrixSolution> {
    let (ri, rj) = (h.rows(), f.rows());
    let sm = s_star.to_mat();
    let m = sm.matmul(&f.transpose());
    let rhs = sm.matmul(&h.transpose());
    let k = linalg::kron(&Mat::identity(ri), &m);
    let ls = linalg::lsq_solve(&k, &linalg::vec(&rhs))?;
    let mut a = linalg::unvec(&ls.solution.col_vec(0), rj, ri).transpose();
    let dirs = directions(&ls.nullspace, ri, rj);
    let mut spectral = a.spectral_norm();
    if spectral > 1.0 && !dirs.is_empty() {
        let (a2, s2) = minimize_spectral(a, &dirs);
        a = a2;
        spectral = s2;
    }
    let residual = rhs.sub(&m.matmul(&a.transpose())).frobenius();
    Ok(AMatrixSolution {
        a,
        residual,
        spectral_norm: spectral,
        freedom_dim: dirs.len(),
        nullspace: dirs,
    })
}

fn minimize_spectral(mut a: Mat, dirs: &[Mat]) -> (Mat, f64) {
    let mut best = a.spectral_norm();
    let mut searches = 0;
    while searches < A_SEARCH_CAP {
        let start = best;
        for d in dirs {
            if searches >= A_SEARCH_CAP {
                break;
            }
            searches += 1;
            let width = 2.0 * (a.frobenius() + 1.0);
            let (c, v) = search::golden_max(
                |c| -a.add(&d.scale(c)).spectral_norm(),
                -width,
                width,
                1e-12,
            );
            if -v < best - 1e-15 {
                a = a.add(&d.scale(c));
                best = -v;
            }
        }
        if start - best <= 1e-13 {
            break;
        }
    }
    (a, best)
}

/// `A` with `H = A F` exactly, if one exists (`S = I` in [`solve_a`]).
pub fn exact_a(h: &Mat, f: &Mat) -> linalg::Result<AMatrixSolution> {
    solve_a(&SymMatrix::identity(h.cols()), h, f)
}

/// `O_i(A)`, taken as zero when `H_i = A F_i` holds exactly (even for `‖A‖₂ = 1`).
/// `None` when `I − AAᵀ` is singular and the factorization is inexact.
pub fn genie_penalty(ch: &ChannelMimo, a: &Mat, i: User) -> Option<SymMatrix> {
    let d = ch.h(i).sub(&a.matmul(ch.f(i)));
    if d.frobenius() <= EXACT_TOL * (1.0 + ch.h(i).frobenius()) {
        return Some(SymMatrix::zeros(ch.tx(i)));
    }
    rates::genie_o(ch, a, i).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GsiStatus {
    Certified,
    NotCertified,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    /// signed distance to failure (nonnegative when passed, up to tolerance)
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsiVerdict {
    pub status: GsiStatus,
    pub conditions: Vec<ConditionCheck>,
    /// `(R1, R2)` in nats
    pub point: (f64, f64),
    /// genie matrices found for the users that needed one
    pub genie: GenieParam,
    pub note: Option<String>,
    pub tolerances: CertTolerances,
}

impl GsiVerdict {
    pub fn is_certified(&self) -> bool {
        self.status == GsiStatus::Certified
    }

    /// The genie to hand to the outer bound. Exact factorizations with
    /// `‖A‖₂ = 1` are pulled just inside the unit ball so `O` stays finite.
    pub fn outer_genie(&self) -> GenieParam {
        let mut g = GenieParam::default();
        for u in User::BOTH {
            if let Some(a) = self.genie.get(u) {
                let n = a.spectral_norm();
                let limit = 1.0 - 1e-8;
                g.set(
                    u,
                    Some(if n > limit {
                        a.scale(limit / n)
                    } else {
                        a.clone()
                    }),
                );
            }
        }
        g
    }
}

struct Candidate {
    sol: AMatrixSolution,
    psd_margin: Option<f64>,
}

impl Candidate {
    fn score(&self, tol: &CertTolerances, check_psd: bool) -> (bool, bool, bool, f64) {
        let m = self.psd_margin.unwrap_or(f64::NEG_INFINITY);
        let psd_ok = !check_psd || m >= -tol.psd;
        (
            self.sol.residual <= tol.residual,
            self.sol.spectral_norm <= 1.0 + tol.spectral,
            psd_ok,
            m,
        )
    }

    fn passes(&self, tol: &CertTolerances, check_psd: bool) -> bool {
        let (a, b, c, _) = self.score(tol, check_psd);
        a && b && c
    }
}

fn psd_margin(ch: &ChannelMimo, i: User, a: &Mat, w: &SymMatrix, lam: f64) -> Option<f64> {
    let o = genie_penalty(ch, a, i)?;
    w.sub(&o.scale(lam)).min_eigenvalue().ok()
}

/// Best-effort maximization of `λmin(W − λ O(A))` over the consistent set
/// `A0 + span(dirs)` with `‖A‖₂ < 1`.
fn refine_psd(ch: &ChannelMimo, i: User, start: &AMatrixSolution, w: &SymMatrix, lam: f64) -> Mat {
    let objective = |a: &Mat| -> f64 {
        if a.spectral_norm() >= 1.0 - GENIE_TOL {
            return -1e300;
        }
        psd_margin(ch, i, a, w, lam).unwrap_or(-1e300)
    };
    let mut a = start.a.clone();
    let mut best = objective(&a);
    let mut searches = 0;
    while searches < A_SEARCH_CAP {
        let before = best;
        for d in &start.nullspace {
            if searches >= A_SEARCH_CAP {
                break;
            }
            searches += 1;
            let (c, v) = search::scan_max(|c| objective(&a.add(&d.scale(c))), -1.0, 1.0, 64, 1e-10);
            if v > best {
                a = a.add(&d.scale(c));
                best = v;
            }
        }
        if best - before <= 1e-12 {
            break;
        }
    }
    a
}

/// Looks for `A_i` satisfying the Markov equation, `A_iA_iᵀ ⪯ I` and (unless
/// `skip_psd`) `W_i ⪰ λ O_i`. Candidates in order: exact `H_i = A_iF_i`, the
/// `S*`-weighted solution, and a refinement of the latter.
fn find_genie(
    ch: &ChannelMimo,
    i: User,
    s_star: &SymMatrix,
    w: &SymMatrix,
    lam: f64,
    skip_psd: bool,
    tol: &CertTolerances,
) -> linalg::Result<Candidate> {
    let (h, f) = (ch.h(i), ch.f(i));
    let sm = s_star.to_mat();
    let weighted_residual = |a: &Mat| {
        sm.matmul(&h.transpose())
            .sub(&sm.matmul(&f.transpose()).matmul(&a.transpose()))
            .frobenius()
    };
    let make = |mut sol: AMatrixSolution| {
        sol.residual = weighted_residual(&sol.a);
        let psd_margin = psd_margin(ch, i, &sol.a, w, lam);
        Candidate { sol, psd_margin }
    };
    let check_psd = !skip_psd;
    let exact = exact_a(h, f)?;
    let mut candidates = Vec::new();
    if exact.residual <= EXACT_TOL * (1.0 + h.frobenius()) {
        let c = make(exact);
        if c.passes(tol, check_psd) {
            return Ok(c);
        }
        candidates.push(c);
    }
    let weighted = solve_a(s_star, h, f)?;
    let c = make(weighted.clone());
    if c.passes(tol, check_psd) {
        return Ok(c);
    }
    candidates.push(c);
    if check_psd && !weighted.nullspace.is_empty() {
        let a = refine_psd(ch, i, &weighted, w, lam);
        let sol = AMatrixSolution {
            spectral_norm: a.spectral_norm(),
            a,
            ..weighted
        };
        candidates.push(make(sol));
    }
    let best = candidates
        .into_iter()
        .max_by(|x, y| {
            let (sx, sy) = (x.score(tol, check_psd), y.score(tol, check_psd));
            (sx.0, sx.1, sx.2)
                .cmp(&(sy.0, sy.1, sy.2))
                .then(sx.3.total_cmp(&sy.3))
        })
        .expect("at least one candidate");
    Ok(best)
}

fn certify(
    ch: &ChannelMimo,
    result: &OptResult,
    cert: &KktCertificate,
    point: (f64, f64),
    tol: &CertTolerances,
) -> GsiVerdict {
    let (mult, mat) = if cert.sum_problem {
        ("lambda", "W")
    } else {
        ("beta", "K")
    };
    let mut verdict = GsiVerdict {
        status: GsiStatus::Certified,
        conditions: Vec::new(),
        point,
        genie: GenieParam::default(),
        note: None,
        tolerances: *tol,
    };
    if !result.converged {
        verdict.status = GsiStatus::Inconclusive;
        verdict.note = Some("solver did not converge".into());
        return verdict;
    }
    let mut notes = Vec::new();
    for j in User::BOTH {
        let lam = cert.lambdas_or_betas[j.index()];
        if lam <= tol.multiplier {
            continue;
        }
        let i = j.other();
        let (ni, nj) = (i.number(), j.number());
        let s_i = match clean_covariance(result.pair.get(i)) {
            Ok(s) => s,
            Err(e) => {
                verdict.status = GsiStatus::Inconclusive;
                verdict.note = Some(format!("eigen-decomposition failed: {e}"));
                return verdict;
            }
        };
        let skip_psd = cert.pinned[i.index()];
        let cand = match find_genie(ch, i, &s_i, &cert.w_or_k[i.index()], lam, skip_psd, tol) {
            Ok(c) => c,
            Err(e) => {
                verdict.status = GsiStatus::Inconclusive;
                verdict.note = Some(format!("genie search failed: {e}"));
                return verdict;
            }
        };
        let (res_ok, spec_ok, psd_ok, margin) = cand.score(tol, !skip_psd);
        verdict.conditions.push(ConditionCheck {
            name: format!("A{ni} exists (S{ni} H{ni}^T = S{ni} F{ni}^T A{ni}^T)"),
            passed: res_ok,
            margin: tol.residual - cand.sol.residual,
        });
        verdict.conditions.push(ConditionCheck {
            name: format!("A{ni} A{ni}^T <= I"),
            passed: spec_ok,
            margin: 1.0 - cand.sol.spectral_norm,
        });
        if !skip_psd {
            verdict.conditions.push(ConditionCheck {
                name: format!("{mat}{ni} - {mult}{nj} O{ni} >= 0"),
                passed: psd_ok,
                margin,
            });
        }
        if !spec_ok && cand.sol.freedom_dim > 0 {
            notes.push(format!(
                "no A{ni} with spectral norm <= 1 found; admissibility not disproven"
            ));
        }
        verdict.genie.set(i, Some(cand.sol.a));
    }
    if verdict.conditions.iter().any(|c| !c.passed) {
        verdict.status = GsiStatus::NotCertified;
    }
    if cert.non_unique {
        notes.push("multipliers not unique; least-squares representative used".into());
    }
    if !notes.is_empty() {
        verdict.note = Some(notes.join("; "));
    }
    verdict
}

/// Sum-rate conditions: for each `λ_j > 0`, an admissible `A_i` with `W_i ⪰ λ_j O_i`.
pub fn certify_sum_rate(ch: &ChannelMimo, result: &OptResult, cert: &KktCertificate) -> GsiVerdict {
    certify_sum_rate_with(ch, result, cert, &CertTolerances::default())
}

pub fn certify_sum_rate_with(
    ch: &ChannelMimo,
    result: &OptResult,
    cert: &KktCertificate,
    tol: &CertTolerances,
) -> GsiVerdict {
    let r1 = rates::g1(ch, &result.pair.s1).min(result.objective);
    certify(ch, result, cert, (r1, result.objective - r1), tol)
}

/// Boundary conditions at `R2 = r`: for each `β_j > 0`, an admissible `A_i`
/// with `K_i ⪰ β_j O_i`. The PSD test is skipped for a user whose covariance
/// is pinned at the single-user optimum.
pub fn certify_boundary_point(
    ch: &ChannelMimo,
    r: f64,
    result: &OptResult,
    cert: &KktCertificate,
) -> GsiVerdict {
    certify_boundary_point_with(ch, r, result, cert, &CertTolerances::default())
}

pub fn certify_boundary_point_with(
    ch: &ChannelMimo,
    r: f64,
    result: &OptResult,
    cert: &KktCertificate,
    tol: &CertTolerances,
) -> GsiVerdict {
    certify(ch, result, cert, (result.objective, r), tol)
}

/// Solution, multipliers and verdict of one inner problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub result: OptResult,
    pub certificate: KktCertificate,
    pub verdict: GsiVerdict,
}

pub fn analyze_sum_rate(ch: &ChannelMimo, opts: &SolverOptions) -> solver::Result<Analysis> {
    let problem = OptProblem::new(OptKind::InnerSum, ch.clone());
    let result = solver::solve(&problem, opts)?;
    let certificate = solver::recover_kkt(&problem, &result)?;
    let verdict = certify_sum_rate(ch, &result, &certificate);
    Ok(Analysis {
        result,
        certificate,
        verdict,
    })
}

pub fn analyze_boundary_point(
    ch: &ChannelMimo,
    r: f64,
    opts: &SolverOptions,
) -> solver::Result<Analysis> {
    let problem = OptProblem::new(OptKind::InnerBoundary { r }, ch.clone());
    let result = solver::solve(&problem, opts)?;
    let certificate = solver::recover_kkt(&problem, &result)?;
    let verdict = certify_boundary_point(ch, r, &result, &certificate);
    Ok(Analysis {
        result,
        certificate,
        verdict,
    })
}

/// Inner-bound sweep on `r_k = k·r_max/(n−1)` with a verdict at every point.
pub fn certified_sweep(
    ch: &ChannelMimo,
    n_points: usize,
    opts: &SolverOptions,
) -> solver::Result<RegionPolyline> {
    if n_points < 2 {
        return Err(solver::SolverError::TooFewPoints);
    }
    ch.validate()?;
    let rmax = solver::r_max(ch);
    let points = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let r = rmax * k as f64 / (n_points - 1) as f64;
            let an = analyze_boundary_point(ch, r, opts)?;
            Ok(RegionPoint {
                param: r,
                r1: an.result.objective,
                r2: r,
                converged: an.result.converged,
                pair: Some(an.result.pair),
                verdict: Some(an.verdict),
                q_phi: None,
            })
        })
        .collect::<solver::Result<Vec<_>>>()?;
    Ok(RegionPolyline {
        param: SweepParam::Rate,
        points,
    })
}

/// Very strong interference for receiver `i`'s interferer: with both users at
/// their single-user optima, `log|I + H_iS_iH_iᵀ| ≤ log|I + F_iS_iF_iᵀ(I + H_jS_jH_jᵀ)⁻¹|`.
/// Vacuous when `F_i = 0`.
pub fn very_strong_condition(ch: &ChannelMimo, i: User) -> linalg::Result<Option<f64>> {
    if ch.cross_is_zero(i) {
        return Ok(None);
    }
    let j = i.other();
    let (si, gi) = rates::waterfill(ch.h(i), ch.power(i));
    let (sj, _) = rates::waterfill(ch.h(j), ch.power(j));
    let own = 2.0 * gi;
    let noise = sj.congruence(ch.h(j)).add_identity(1.0);
    let cross = linalg::logdet(&noise.add(&si.congruence(ch.f(i))))? - linalg::logdet(&noise)?;
    Ok(Some(cross - own))
}

/// Classical strong interference for user `i`: `H_i = A_iF_i` with
/// `A_iA_iᵀ ⪯ I`. Vacuous when `F_i = 0`.
pub fn strong_classical_condition(
    ch: &ChannelMimo,
    i: User,
    tol: &CertTolerances,
) -> linalg::Result<bool> {
    if ch.cross_is_zero(i) {
        return Ok(true);
    }
    let sol = exact_a(ch.h(i), ch.f(i))?;
    Ok(sol.residual <= EXACT_TOL * (1.0 + ch.h(i).frobenius())
        && sol.spectral_norm <= 1.0 + tol.spectral)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub kind: ChannelKind,
    pub very_strong: bool,
    /// per-user margins of the very-strong test (`None` when vacuous)
    pub very_strong_margins: [Option<f64>; 2],
    pub strong_classical: bool,
    pub gsi_sum_rate: bool,
    pub gsi_full_region: bool,
    pub fraction_of_boundary_certified: f64,
    pub sum_rate: f64,
    pub sum_rate_verdict: GsiVerdict,
    pub boundary: RegionPolyline,
    pub simo: Option<SimoReport>,
}

pub fn classify_regime(
    ch: &ChannelMimo,
    n_points: usize,
    opts: &SolverOptions,
) -> solver::Result<RegimeReport> {
    let kind = ch.validate()?;
    let tol = CertTolerances::default();
    let margins = [
        very_strong_condition(ch, User::One)?,
        very_strong_condition(ch, User::Two)?,
    ];
    let very_strong = margins.iter().all(|m| m.is_none_or(|v| v >= -1e-12));
    let strong_classical = strong_classical_condition(ch, User::One, &tol)?
        && strong_classical_condition(ch, User::Two, &tol)?;
    let sum = analyze_sum_rate(ch, opts)?;
    let boundary = certified_sweep(ch, n_points, opts)?;
    let n_cert = boundary
        .points
        .iter()
        .filter(|p| p.certified() == Some(true))
        .count();
    let fraction = n_cert as f64 / boundary.points.len() as f64;
    let simo = if kind == ChannelKind::Simo {
        Some(miso::simo_conditions_of(ch)?)
    } else {
        None
    };
    Ok(RegimeReport {
        kind,
        very_strong,
        very_strong_margins: margins,
        strong_classical,
        gsi_sum_rate: sum.verdict.is_certified(),
        gsi_full_region: n_cert == boundary.points.len() && sum.verdict.is_certified(),
        fraction_of_boundary_certified: fraction,
        sum_rate: sum.result.objective,
        sum_rate_verdict: sum.verdict,
        boundary,
        simo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_links_give_identity_genie() {
        let h = Mat::from_rows(&[[1.0, 0.3], [0.2, 0.9]]);
        let sol = exact_a(&h, &h).unwrap();
        assert!(sol.residual < 1e-12);
        assert_eq!(sol.freedom_dim, 0);
        assert_abs_diff_eq!(sol.spectral_norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nullspace_search_finds_admissible_a() {
        // rank-one S leaves A free in the direction orthogonal to F S
        let s = SymMatrix::outer(&[1.0, 0.0]);
        let h = Mat::from_rows(&[[0.5, 3.0]]);
        let f = Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0]]);
        let sol = solve_a(&s, &h, &f).unwrap();
        assert!(sol.residual < 1e-12);
        assert_eq!(sol.freedom_dim, 1);
        assert!(sol.spectral_norm <= 1.0);
    }

    #[test]
    fn penalty_vanishes_on_exact_factorization() {
        let f = Mat::from_rows(&[[1.0, 0.5], [0.0, 2.0]]);
        let a = Mat::from_rows(&[[0.6, 0.0], [0.0, 1.0]]);
        let h = a.matmul(&f);
        let ch = ChannelMimo::new(h, f, Mat::identity(2), Mat::identity(2), 1.0, 1.0);
        let o = genie_penalty(&ch, &a, User::One).unwrap();
        assert_eq!(o.max_abs(), 0.0);
    }
}
