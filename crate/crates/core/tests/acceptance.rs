//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.
#![allow(
    clippy::approx_constant,
    clippy::type_complexity,
    clippy::too_many_arguments
)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gsic::channel::{ChannelMimo, MisoEquiv, User};
use gsic::gsi::{self, GsiStatus};
use gsic::linalg::{Mat, SymMatrix};
use gsic::miso;
use gsic::rates::{self, CovariancePair, GenieParam};
use gsic::scenarios;
use gsic::solver::{self, OptKind, OptProblem, SolverOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Outcome {
            pass: true,
            detail: summary,
        }
    } else {
        Outcome {
            pass: false,
            detail: format!("{summary}; failed: {}", failures.join("; ")),
        }
    }
}

fn close(x: f64, reference: f64, tol: f64) -> bool {
    (x - reference).abs() <= tol
}

fn close_rel(x: f64, reference: f64, tol: f64) -> bool {
    (x - reference).abs() <= tol * reference.abs()
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

// 2x2 helpers used as independent oracles

fn logdet2(m: [[f64; 2]; 2]) -> f64 {
    (m[0][0] * m[1][1] - m[0][1] * m[1][0]).ln()
}

/// `I + Σ M_k S_k M_kᵀ` for 2x2 inputs.
fn gram_sum(terms: &[(&[[f64; 2]; 2], &[[f64; 2]; 2])]) -> [[f64; 2]; 2] {
    let mut out = [[1.0, 0.0], [0.0, 1.0]];
    for (m, s) in terms {
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += m[i][k] * s[k][l] * m[j][l];
                    }
                }
                out[i][j] += acc;
            }
        }
    }
    out
}

fn arr(m: &Mat) -> [[f64; 2]; 2] {
    let r = m.to_rows();
    [[r[0][0], r[0][1]], [r[1][0], r[1][1]]]
}

/// `min(g1 + g2, gs1, gs2)` for a 2x2 channel.
fn sum_objective(ch: &[[[f64; 2]; 2]; 4], s1: &[[f64; 2]; 2], s2: &[[f64; 2]; 2]) -> f64 {
    let [h1, f1, h2, f2] = ch;
    let g1 = 0.5 * logdet2(gram_sum(&[(h1, s1)]));
    let g2 = 0.5 * logdet2(gram_sum(&[(h2, s2)]));
    let gs1 = 0.5 * logdet2(gram_sum(&[(h1, s1), (f2, s2)]));
    let gs2 = 0.5 * logdet2(gram_sum(&[(h2, s2), (f1, s1)]));
    (g1 + g2).min(gs1).min(gs2)
}

fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Mat {
    Mat::new(
        r,
        c,
        (0..r * c).map(|_| rng.gen_range(-scale..scale)).collect(),
    )
}

fn random_cov(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SymMatrix {
    let x = random_mat(rng, n, n, 1.0);
    let s = SymMatrix::from_mat(&x.matmul(&x.transpose()));
    let t = s.trace();
    s.scale(p / t)
}

// 1-5: reference examples

fn criterion1() -> Outcome {
    let ch = scenarios::channel(1).unwrap();
    let t = Instant::now();
    let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let mut f = Vec::new();
    let obj = an.result.objective;
    check(&mut f, close(obj, 3.2998, 1e-3), format!("sum {obj}"));
    let s1 = an.result.pair.s1.to_rows();
    let s2 = an.result.pair.s2.to_rows();
    let r1 = [[8.2319, 0.3636], [0.3636, 1.7681]];
    let r2 = [[7.7370, 4.1843], [4.1843, 2.2630]];
    for i in 0..2 {
        for j in 0..2 {
            check(
                &mut f,
                close(s1[i][j], r1[i][j], 2e-3),
                format!("S1[{i}{j}]={}", s1[i][j]),
            );
            check(
                &mut f,
                close(s2[i][j], r2[i][j], 2e-3),
                format!("S2[{i}{j}]={}", s2[i][j]),
            );
        }
    }
    let l = an.certificate.lambdas_or_betas;
    check(
        &mut f,
        close(l[0], 1.0, 1e-6) && close(l[1], 0.0, 1e-6),
        format!("lambda {l:?}"),
    );
    check(
        &mut f,
        an.result.active_set == vec![solver::ConstraintTag::Sum1],
        format!("active {:?}", an.result.active_set),
    );
    check(
        &mut f,
        an.verdict.status == GsiStatus::Certified,
        format!("{:?}", an.verdict.status),
    );
    match an.verdict.genie.get(User::Two) {
        Some(a2) => {
            let n = a2.spectral_norm();
            check(&mut f, n <= 1.0 + 1e-9, format!("|A2| = {n}"));
            // residual of S2 H2ᵀ = S2 F2ᵀ A2ᵀ recomputed here
            let s = an.result.pair.s2.to_mat();
            let lhs = s.matmul(&ch.h2.transpose());
            let rhs = s.matmul(&ch.f2.transpose()).matmul(&a2.transpose());
            let res = lhs.sub(&rhs).frobenius();
            check(&mut f, res <= 1e-8, format!("A2 residual {res}"));
        }
        None => f.push("no A2".into()),
    }
    check(&mut f, secs < 5.0, format!("runtime {secs} s"));
    outcome(
        f,
        format!(
            "sum {obj:.6}, lambda=({:.4}, {:.4}), {:?}, {secs:.3} s",
            l[0], l[1], an.verdict.status
        ),
    )
}

/// Closed-form symmetric case plus the general solver on the same channel.
fn symmetric_case(
    m: &MisoEquiv,
    sum: f64,
    phi_over_pi: f64,
    phi_tol: f64,
    k_scale: f64,
    lo_scale: f64,
    multipliers: Option<(f64, f64, f64)>,
    f: &mut Vec<String>,
) -> String {
    let c = miso::sym_sum_rate(m).unwrap();
    let mu = c.multipliers;
    check(
        f,
        close(c.sum_rate, sum, 1e-3),
        format!("sum {}", c.sum_rate),
    );
    check(
        f,
        close(c.phi_star / PI, phi_over_pi, phi_tol),
        format!("phi {}", c.phi_star / PI),
    );
    check(f, close_rel(mu.k, k_scale, 5e-3), format!("k {}", mu.k));
    check(
        f,
        close_rel(mu.lambda_o_scale, lo_scale, 5e-3),
        format!("lambda O {}", mu.lambda_o_scale),
    );
    check(
        f,
        mu.k >= mu.lambda_o_scale && c.certified,
        "closed form not certified",
    );
    if let Some((gamma, lambda, eta)) = multipliers {
        check(
            f,
            close_rel(mu.gamma, gamma, 5e-3),
            format!("gamma {}", mu.gamma),
        );
        check(
            f,
            close_rel(mu.lambda, lambda, 5e-3),
            format!("lambda {}", mu.lambda),
        );
        check(f, close_rel(mu.eta, eta, 5e-3), format!("eta {}", mu.eta));
    }
    // the general MIMO pipeline must agree with the closed form
    let an = gsi::analyze_sum_rate(&m.to_channel(), &opts()).unwrap();
    check(
        f,
        close(an.result.objective, c.sum_rate, 1e-6),
        format!("solver sum {}", an.result.objective),
    );
    check(
        f,
        an.verdict.status == GsiStatus::Certified,
        format!("solver {:?}", an.verdict.status),
    );
    let cert = &an.certificate;
    check(
        f,
        close(cert.gamma_or_alpha, mu.gamma, 1e-4),
        format!("solver gamma {}", cert.gamma_or_alpha),
    );
    check(
        f,
        close(cert.lambdas_or_betas[0], mu.lambda, 1e-4),
        format!("solver lambda {}", cert.lambdas_or_betas[0]),
    );
    check(
        f,
        close(cert.etas_or_nus[0], mu.eta, 1e-4),
        format!("solver eta {}", cert.etas_or_nus[0]),
    );
    format!(
        "sum {:.6} at {:.5}pi, gamma {:.4}, lambda {:.4}, eta {:.4}, k {:.4} vs lambda O {:.4}",
        c.sum_rate,
        c.phi_star / PI,
        mu.gamma,
        mu.lambda,
        mu.eta,
        mu.k,
        mu.lambda_o_scale
    )
}

fn criterion2() -> Outcome {
    let mut f = Vec::new();
    let m = scenarios::miso_params(2).unwrap();
    let s = symmetric_case(
        &m,
        0.6532,
        0.3902,
        2e-3,
        0.1768,
        0.1499,
        Some((0.2627, 0.3686, 0.1974)),
        &mut f,
    );
    outcome(f, s)
}

fn criterion3() -> Outcome {
    let mut f = Vec::new();
    let m = scenarios::miso_params(3).unwrap();
    let s = symmetric_case(&m, 1.2724, 0.4672, 1e-3, 0.0563, 0.0467, None, &mut f);
    outcome(f, s)
}

fn find_point(poly: &solver::RegionPolyline, r: (f64, f64), tol: f64) -> bool {
    poly.points
        .iter()
        .any(|p| close(p.r1, r.0, tol) && close(p.r2, r.1, tol))
}

fn criterion4() -> Outcome {
    let mut f = Vec::new();
    let ch = scenarios::channel(4).unwrap();
    let m = ch.to_miso_equiv().unwrap();
    let roots = miso::zic_q_roots(&m).unwrap();
    check(&mut f, roots.len() == 1, format!("Q roots {roots:?}"));
    let phi0 = roots.first().copied().unwrap_or(f64::NAN);
    check(
        &mut f,
        close(phi0 / PI, 0.3748, 2e-3),
        format!("phi0 {}", phi0 / PI),
    );
    let poly = miso::zic_boundary(&m, 64).unwrap();
    check(
        &mut f,
        find_point(&poly, (0.8474, 0.6931), 2e-3),
        "C not on the sweep",
    );
    check(
        &mut f,
        find_point(&poly, (0.9442, 0.6724), 2e-3),
        "B not on the sweep",
    );
    // the outer bounds are compared at the computed corners; the boundary is
    // steep there, so the 4-digit reference coordinates are not usable as r
    let corners = miso::zic_corners(&m).unwrap();
    let (c, b) = (corners.single_user, corners.certified_end);
    // certified exactly up to phi0
    for p in &poly.points {
        let expect = p.param <= phi0 / PI + 1e-12;
        if p.certified() != Some(expect) {
            f.push(format!("verdict at phi={}pi", p.param));
        }
    }
    let mut gaps = Vec::new();
    for (a, corner) in [(0.5046, c), (0.4298, b)] {
        let genie = GenieParam {
            a1: None,
            a2: Some(Mat::from_rows(&[[a]])),
        };
        let at = |r: f64| {
            solver::solve(
                &OptProblem::new(
                    OptKind::OuterBoundary {
                        r,
                        genie: genie.clone(),
                    },
                    ch.clone(),
                ),
                &opts(),
            )
            .unwrap()
            .objective
        };
        let gap = at(corner.1) - corner.0;
        check(
            &mut f,
            gap.abs() <= 1e-3,
            format!("outer A={a} misses its corner by {gap}"),
        );
        // a valid outer bound stays above the inner boundary elsewhere
        for p in poly.points.iter().step_by(8) {
            let d = at(p.r2) - p.r1;
            check(
                &mut f,
                d >= -1e-6,
                format!("outer A={a} below inner by {d} at R2={}", p.r2),
            );
        }
        gaps.push(gap);
    }
    outcome(
        f,
        format!(
            "phi0 {:.5}pi, outer gaps at C {:.2e}, at B {:.2e}",
            phi0 / PI,
            gaps[0],
            gaps[1]
        ),
    )
}

fn zic_full(id: u8, sum: f64, corners: &[(f64, f64)], f: &mut Vec<String>) -> String {
    let ch = scenarios::channel(id).unwrap();
    let m = ch.to_miso_equiv().unwrap();
    let s = miso::zic_sum_rate(&m).unwrap();
    check(
        f,
        close(s.sum_rate, sum, 2e-3),
        format!("ex{id} sum {}", s.sum_rate),
    );
    let z = miso::zic_corners(&m).unwrap();
    let computed = [z.single_user, z.interval_end, z.sum_rate];
    for c in corners {
        let hit = computed
            .iter()
            .any(|p| close(p.0, c.0, 2e-3) && close(p.1, c.1, 2e-3));
        check(f, hit, format!("ex{id} corner {c:?} missing"));
    }
    let poly = miso::zic_boundary(&m, 32).unwrap();
    let all = poly.points.iter().all(|p| p.certified() == Some(true));
    check(f, all, format!("ex{id} sweep not fully certified"));
    // the general certifier must agree at every sweep point
    let general: Vec<bool> = poly
        .points
        .par_iter()
        .map(|p| {
            gsi::analyze_boundary_point(&ch, p.r2, &opts())
                .map(|a| a.verdict.is_certified())
                .unwrap_or(false)
        })
        .collect();
    let n_gen = general.iter().filter(|c| **c).count();
    check(
        f,
        n_gen == general.len(),
        format!("ex{id} general certifier: {n_gen}/{}", general.len()),
    );
    let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
    check(
        f,
        close(an.result.objective, s.sum_rate, 1e-6),
        format!("ex{id} solver sum {}", an.result.objective),
    );
    check(
        f,
        an.verdict.is_certified(),
        format!("ex{id} solver sum {:?}", an.verdict.status),
    );
    format!(
        "ex{id} sum {:.6}, {} points certified",
        s.sum_rate,
        poly.points.len()
    )
}

fn criterion5() -> Outcome {
    let mut f = Vec::new();
    let a = zic_full(
        5,
        0.3710,
        &[(0.1544, 0.2027), (0.1844, 0.1866), (0.2027, 0.1682)],
        &mut f,
    );
    let b = zic_full(6, 0.6675, &[(0.4615, 0.1682), (0.5493, 0.1182)], &mut f);
    outcome(f, format!("{a}; {b}"))
}

// 6: phi_ez

fn criterion6() -> Outcome {
    let mut f = Vec::new();
    let (a, theta, p1) = (2.0, 0.2 * PI, 2.0);
    let m = MisoEquiv::zic(a, theta, p1, 0.4);
    let phi = miso::phi_ez(&m).unwrap();
    let residual = (theta + phi).sin().powi(2) - a / (1.0 + p1) * phi.sin().powi(2);
    check(
        &mut f,
        close(phi / PI, 0.4959, 1e-4),
        format!("phi_ez {}", phi / PI),
    );
    check(
        &mut f,
        residual.abs() <= 1e-9,
        format!("fixed point residual {residual:e}"),
    );
    outcome(
        f,
        format!("phi_ez {:.6}pi, residual {residual:.1e}", phi / PI),
    )
}

// 7: oracle equivalence

/// Independent beam scan over the full half-circle for each user.
fn beam_scan(m: &MisoEquiv) -> f64 {
    let h = [m.h_vec(User::One), m.h_vec(User::Two)];
    let fv = [m.f_vec(User::One), m.f_vec(User::Two)];
    let p = [m.p1, m.p2];
    let proj = |v: [f64; 2], psi: f64| (v[0] * psi.cos() + v[1] * psi.sin()).powi(2);
    let obj = |psi1: f64, psi2: f64| {
        let d1 = p[0] * proj(h[0], psi1);
        let d2 = p[1] * proj(h[1], psi2);
        let i1 = p[1] * proj(fv[1], psi2);
        let i2 = p[0] * proj(fv[0], psi1);
        let mut v = 0.5 * (1.0 + d1).ln() + 0.5 * (1.0 + d2).ln();
        if m.a2 > 0.0 {
            v = v.min(0.5 * (1.0 + d1 + i1).ln());
        }
        if m.a1 > 0.0 {
            v = v.min(0.5 * (1.0 + d2 + i2).ln());
        }
        v
    };
    let inner = |psi1: f64| multi_start_max(|psi2| obj(psi1, psi2), PI, 360);
    multi_start_max(inner, PI, 360)
}

/// Maximum of a `period`-periodic function: grid scan, then golden refinement
/// around every grid-local maximum within 1e-3 of the best.
fn multi_start_max(f: impl Fn(f64) -> f64, period: f64, n: usize) -> f64 {
    let h = period / n as f64;
    let vals: Vec<f64> = (0..n).map(|k| f(k as f64 * h)).collect();
    let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = best;
    for k in 0..n {
        let v = vals[k];
        if v >= vals[(k + n - 1) % n] && v >= vals[(k + 1) % n] && v >= best - 1e-3 {
            let (mut lo, mut hi) = ((k as f64 - 1.0) * h, (k as f64 + 1.0) * h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            let (mut f1, mut f2) = (f(x1), f(x2));
            while hi - lo > 1e-11 {
                if f1 < f2 {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = f(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = f(x1);
                }
            }
            out = out.max(f1).max(f2);
        }
    }
    out
}

fn criterion7() -> Outcome {
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let misos: Vec<MisoEquiv> = (0..500)
        .map(|_| {
            MisoEquiv::new(
                rng.gen_range(0.01..FRAC_PI_2 - 0.01),
                rng.gen_range(0.01..FRAC_PI_2 - 0.01),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
            )
        })
        .collect();
    let diffs: Vec<(f64, f64, f64, bool)> = misos
        .par_iter()
        .map(|m| {
            let res = solver::solve(&OptProblem::new(OptKind::InnerSum, m.to_channel()), &opts())
                .unwrap();
            let scan = beam_scan(m);
            let closed = miso::phi_scan_sum_rate(m).rates.sum_rate();
            (
                res.objective - scan,
                closed - scan,
                res.objective,
                res.converged,
            )
        })
        .collect();
    let worst_solver = diffs.iter().map(|d| d.0.abs()).fold(0.0, f64::max);
    let worst_closed = diffs.iter().map(|d| d.1.abs()).fold(0.0, f64::max);
    let unconverged = diffs.iter().filter(|d| !d.3).count();
    check(
        &mut f,
        worst_solver <= 1e-6,
        format!("solver vs scan {worst_solver:e}"),
    );
    check(
        &mut f,
        worst_closed <= 1e-6,
        format!("phi scan vs beam scan {worst_closed:e}"),
    );
    check(
        &mut f,
        unconverged == 0,
        format!("{unconverged} unconverged"),
    );

    let channels: Vec<[[[f64; 2]; 2]; 4]> = (0..200)
        .map(|_| {
            let mut m = || arr(&random_mat(&mut rng, 2, 2, 1.5));
            [m(), m(), m(), m()]
        })
        .collect();
    let seeds: Vec<(u64, f64, f64)> = (0..200)
        .map(|_| {
            (
                rng.gen(),
                rng.gen_range(0.5..10.0),
                rng.gen_range(0.5..10.0),
            )
        })
        .collect();
    let excess: Vec<f64> = channels
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(c, &(seed, p1, p2))| {
            let to_mat = |a: &[[f64; 2]; 2]| Mat::from_rows(a);
            let ch = ChannelMimo::new(
                to_mat(&c[0]),
                to_mat(&c[1]),
                to_mat(&c[2]),
                to_mat(&c[3]),
                p1,
                p2,
            );
            let res = solver::solve(&OptProblem::new(OptKind::InnerSum, ch), &opts()).unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let mut best = f64::NEG_INFINITY;
            for k in 0..100_000 {
                let sample = |r: &mut ChaCha8Rng, p: f64| -> [[f64; 2]; 2] {
                    if k % 2 == 0 {
                        let t: f64 = r.gen_range(0.0..PI);
                        let (c, s) = (t.cos(), t.sin());
                        [[p * c * c, p * c * s], [p * c * s, p * s * s]]
                    } else {
                        let s = random_cov(r, 2, p).to_rows();
                        [[s[0][0], s[0][1]], [s[1][0], s[1][1]]]
                    }
                };
                let s1 = sample(&mut r, p1);
                let s2 = sample(&mut r, p2);
                best = best.max(sum_objective(c, &s1, &s2));
            }
            best - res.objective
        })
        .collect();
    let worst = excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    check(
        &mut f,
        worst <= 1e-5,
        format!("random search beats solver by {worst:e}"),
    );
    outcome(
        f,
        format!(
            "500 MISO: |solver - scan| <= {worst_solver:.1e}, |phi scan - scan| <= {worst_closed:.1e}; 200 MIMO: best random excess {worst:.1e}"
        ),
    )
}

// 8: certified sum rate => outer bound meets inner

fn criterion8() -> Outcome {
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut chans: Vec<ChannelMimo> = [1, 2, 3, 5, 6]
        .iter()
        .map(|&i| scenarios::channel(i).unwrap())
        .collect();
    for _ in 0..40 {
        // strong-ish cross links make certification common
        let f1 = random_mat(&mut rng, 2, 2, 2.0);
        let f2 = random_mat(&mut rng, 2, 2, 2.0);
        let h1 = random_mat(&mut rng, 2, 2, 1.0);
        let h2 = random_mat(&mut rng, 2, 2, 1.0);
        chans.push(ChannelMimo::new(
            h1,
            f1,
            h2,
            f2,
            rng.gen_range(0.5..10.0),
            rng.gen_range(0.5..10.0),
        ));
    }
    for _ in 0..40 {
        let m = MisoEquiv::new(
            rng.gen_range(0.05..1.5),
            rng.gen_range(0.05..1.5),
            rng.gen_range(0.5..10.0),
            rng.gen_range(0.5..10.0),
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..5.0),
        );
        chans.push(m.to_channel());
    }
    let gaps: Vec<Option<f64>> = chans
        .par_iter()
        .map(|ch| {
            let an = gsi::analyze_sum_rate(ch, &opts()).unwrap();
            if !an.verdict.is_certified() {
                return None;
            }
            let outer = solver::solve(
                &OptProblem::new(
                    OptKind::OuterSum {
                        genie: an.verdict.outer_genie(),
                    },
                    ch.clone(),
                ),
                &opts(),
            )
            .unwrap();
            Some(outer.objective - an.result.objective)
        })
        .collect();
    let certified: Vec<f64> = gaps.iter().flatten().cloned().collect();
    let worst = certified.iter().map(|g| g.abs()).fold(0.0, f64::max);
    check(
        &mut f,
        certified.len() >= 20,
        format!("only {} certified channels", certified.len()),
    );
    check(
        &mut f,
        worst <= 1e-6,
        format!("outer - inner up to {worst:e}"),
    );
    outcome(
        f,
        format!(
            "{} of {} certified, max |outer - inner| {worst:.1e}",
            certified.len(),
            chans.len()
        ),
    )
}

// 9: concavity

fn criterion9() -> Outcome {
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = 2;
        let ch = ChannelMimo::new(
            random_mat(&mut rng, n, n, 1.5),
            random_mat(&mut rng, n, n, 1.5),
            random_mat(&mut rng, n, n, 1.5),
            random_mat(&mut rng, n, n, 1.5),
            3.0,
            3.0,
        );
        let a = random_mat(&mut rng, n, n, 1.0);
        let a = a.scale(rng.gen_range(0.05..0.95) / a.spectral_norm());
        let u = if k % 2 == 0 { User::One } else { User::Two };
        let x = CovariancePair::new(random_cov(&mut rng, n, 3.0), random_cov(&mut rng, n, 3.0));
        let y = CovariancePair::new(random_cov(&mut rng, n, 3.0), random_cov(&mut rng, n, 3.0));
        let mid = CovariancePair::new(x.s1.add(&y.s1).scale(0.5), x.s2.add(&y.s2).scale(0.5));
        let v = |p: &CovariancePair| rates::gbar_s(&ch, u, p, &a).unwrap();
        let gap = v(&mid) - 0.5 * (v(&x) + v(&y));
        worst = worst.min(gap);
    }
    check(
        &mut f,
        worst >= -1e-9,
        format!("midpoint deficit {worst:e}"),
    );
    outcome(
        f,
        format!("1000 midpoints, worst deficit {:.1e}", (-worst).max(0.0)),
    )
}

// 10: strong interference

fn criterion10() -> Outcome {
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let chans: Vec<ChannelMimo> = (0..100)
        .map(|_| {
            let mut make = || {
                let fm = random_mat(&mut rng, 2, 2, 2.0).add(&Mat::identity(2));
                let a = random_mat(&mut rng, 2, 2, 1.0);
                let a = a.scale(rng.gen_range(0.2..1.0) / a.spectral_norm());
                (a.matmul(&fm), fm)
            };
            let (h1, f1) = make();
            let (h2, f2) = make();
            ChannelMimo::new(
                h1,
                f1,
                h2,
                f2,
                rng.gen_range(0.5..5.0),
                rng.gen_range(0.5..5.0),
            )
        })
        .collect();
    let results: Vec<(usize, usize, f64)> = chans
        .par_iter()
        .map(|ch| {
            let poly = gsi::certified_sweep(ch, 8, &opts()).unwrap();
            let mut certified = 0;
            let mut worst_o: f64 = 0.0;
            for p in &poly.points {
                if let Some(v) = &p.verdict {
                    if v.is_certified() {
                        certified += 1;
                    }
                    for u in User::BOTH {
                        if let Some(a) = v.genie.get(u) {
                            let o = gsi::genie_penalty(ch, a, u)
                                .map(|o| o.max_abs())
                                .unwrap_or(f64::INFINITY);
                            worst_o = worst_o.max(o);
                        }
                    }
                }
            }
            (certified, poly.points.len(), worst_o)
        })
        .collect();
    let total: usize = results.iter().map(|r| r.1).sum();
    let certified: usize = results.iter().map(|r| r.0).sum();
    let worst_o = results.iter().map(|r| r.2).fold(0.0, f64::max);
    check(
        &mut f,
        certified == total,
        format!("{certified}/{total} certified"),
    );
    check(&mut f, worst_o <= 1e-12, format!("|O| up to {worst_o:e}"));
    outcome(
        f,
        format!("{certified}/{total} sweep points certified, max |O| {worst_o:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Example 1 MIMO sum rate", criterion1),
        ("Example 2 symmetric MISO case III", criterion2),
        ("Example 3 symmetric MISO case II", criterion3),
        ("Example 4 partial MISO ZIC", criterion4),
        ("Examples 5-6 full-region MISO ZIC", criterion5),
        ("phi_ez closed form and fixed point", criterion6),
        (
            "Oracle equivalence (MISO scan, MIMO random search)",
            criterion7,
        ),
        ("Certified sum rate implies outer = inner", criterion8),
        ("Concavity of gbar_s", criterion9),
        ("Strong interference degenerates to O = 0", criterion10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
