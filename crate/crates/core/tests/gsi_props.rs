use gsic::channel::{ChannelMimo, User};
use gsic::gsi::{self, CertTolerances, GsiStatus};
use gsic::linalg::{self, Mat, SymMatrix};
use gsic::miso;
use gsic::scenarios;
use gsic::solver::{self, OptKind, OptProblem, SolverOptions};
use proptest::prelude::*;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn mat_strategy(r: usize, c: usize, scale: f64) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-scale..scale, r * c).prop_map(move |d| Mat::new(r, c, d))
}

/// Contraction with spectral norm in `[0.2, 0.9]`.
fn contraction() -> impl Strategy<Value = Mat> {
    (mat_strategy(2, 2, 1.0), 0.2..0.9f64).prop_filter_map("nonzero", |(a, n)| {
        let s = a.spectral_norm();
        (s > 1e-3).then(|| a.scale(n / s))
    })
}

/// Channel with `H_i = A_i F_i`, `‖A_i‖ < 1`: strong in the classical sense.
fn strong_channel() -> impl Strategy<Value = ChannelMimo> {
    (
        contraction(),
        contraction(),
        mat_strategy(2, 2, 2.0),
        mat_strategy(2, 2, 2.0),
        0.5..10.0f64,
        0.5..10.0f64,
    )
        .prop_filter("well-conditioned cross links", |(_, _, f1, f2, _, _)| {
            f1.spectral_norm() > 0.5 && f2.spectral_norm() > 0.5
        })
        .prop_map(|(a1, a2, f1, f2, p1, p2)| {
            ChannelMimo::new(a1.matmul(&f1), f1, a2.matmul(&f2), f2, p1, p2)
        })
}

fn any_channel() -> impl Strategy<Value = ChannelMimo> {
    (
        mat_strategy(2, 2, 2.0),
        mat_strategy(2, 2, 3.0),
        mat_strategy(2, 2, 2.0),
        mat_strategy(2, 2, 3.0),
        0.5..10.0f64,
        0.5..10.0f64,
    )
        .prop_filter("well-conditioned direct links", |(h1, _, h2, _, _, _)| {
            h1.frobenius() > 0.3 && h2.frobenius() > 0.3
        })
        .prop_map(|(h1, f1, h2, f2, p1, p2)| ChannelMimo::new(h1, f1, h2, f2, p1, p2))
}

fn half_logdet(m: &SymMatrix) -> f64 {
    0.5 * linalg::logdet(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certified_sum_rate_meets_outer_bound(ch in prop_oneof![any_channel(), strong_channel()]) {
        let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
        if an.verdict.is_certified() {
            let outer = OptKind::OuterSum { genie: an.verdict.outer_genie() };
            let res = solver::solve(&OptProblem::new(outer, ch.clone()), &opts()).unwrap();
            prop_assert!(
                (res.objective - an.result.objective).abs() <= 1e-6,
                "inner {} outer {}", an.result.objective, res.objective
            );
            // receivers can decode the interference at the optimum
            for u in User::BOTH {
                if an.verdict.genie.get(u).is_some() {
                    let s = solver::clean_covariance(an.result.pair.get(u)).unwrap();
                    let own = half_logdet(&s.congruence(ch.h(u)).add_identity(1.0));
                    let cross = half_logdet(&s.congruence(ch.f(u)).add_identity(1.0));
                    prop_assert!(own <= cross + 1e-8, "user {}: {own} > {cross}", u.number());
                }
            }
        }
    }

    #[test]
    fn loosening_tolerances_never_revokes_a_certificate(ch in any_channel(), k in 1.0..1e3f64) {
        let problem = OptProblem::new(OptKind::InnerSum, ch.clone());
        let res = solver::solve(&problem, &opts()).unwrap();
        let cert = solver::recover_kkt(&problem, &res).unwrap();
        let tight = CertTolerances::default();
        let loose = CertTolerances { psd: tight.psd * k, ..tight };
        let a = gsi::certify_sum_rate_with(&ch, &res, &cert, &tight);
        let b = gsi::certify_sum_rate_with(&ch, &res, &cert, &loose);
        if a.status == GsiStatus::Certified {
            prop_assert_eq!(b.status, GsiStatus::Certified);
        }
    }

    #[test]
    fn classically_strong_channels_are_certified(ch in strong_channel()) {
        let tol = CertTolerances::default();
        prop_assert!(gsi::strong_classical_condition(&ch, User::One, &tol).unwrap());
        prop_assert!(gsi::strong_classical_condition(&ch, User::Two, &tol).unwrap());
        let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
        prop_assert!(an.verdict.is_certified(), "{:?}", an.verdict.note);
    }

    #[test]
    fn exact_factorization_zeroes_the_penalty(a in contraction(), f in mat_strategy(2, 2, 2.0)) {
        let ch = ChannelMimo::new(a.matmul(&f), f.clone(), Mat::identity(2), f.clone(), 1.0, 1.0);
        let o = gsi::genie_penalty(&ch, &a, User::One).unwrap();
        prop_assert_eq!(o.max_abs(), 0.0);
        let sol = gsi::exact_a(ch.h(User::One), ch.f(User::One)).unwrap();
        if linalg::sym_eigen(&f.gram_rows()).unwrap().values[1] > 1e-3 {
            prop_assert!(sol.a.sub(&a).max_abs() <= 1e-8);
        }
    }
}

#[test]
fn reference_mimo_channel_is_certified() {
    let ch = scenarios::channel(1).unwrap();
    let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
    assert_eq!(an.verdict.status, GsiStatus::Certified);
    assert!(
        !gsi::strong_classical_condition(&ch, User::One, &CertTolerances::default()).unwrap()
            || !gsi::strong_classical_condition(&ch, User::Two, &CertTolerances::default())
                .unwrap()
    );
    let (r1, r2) = an.verdict.point;
    assert!((r1 + r2 - an.result.objective).abs() <= 1e-12);
    assert!(an.verdict.conditions.iter().all(|c| c.passed));
}

#[test]
fn weak_scalar_channel_is_not_certified() {
    let ch = ChannelMimo::scalar(0.2, 0.2, 5.0, 5.0);
    let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
    assert_eq!(an.verdict.status, GsiStatus::NotCertified);
}

#[test]
fn very_strong_scalar_channel() {
    let ch = ChannelMimo::scalar(20.0, 20.0, 1.0, 1.0);
    assert!(gsi::very_strong_condition(&ch, User::One).unwrap().unwrap() >= 0.0);
    let an = gsi::analyze_sum_rate(&ch, &opts()).unwrap();
    assert!(an.verdict.is_certified());
    assert!((an.result.objective - 2.0 * 0.5 * 2f64.ln()).abs() <= 1e-7);
}

#[test]
fn simo_norm_condition_matches_classification() {
    let strong = ChannelMimo::new(
        Mat::column(&[1.0, 0.5]),
        Mat::column(&[1.5, 1.0]),
        Mat::column(&[0.8, -0.2]),
        Mat::column(&[0.9, 1.1]),
        1.0,
        2.0,
    );
    let rep = miso::simo_conditions_of(&strong).unwrap();
    assert!(rep.gsi_full_region);
    let report = gsi::classify_regime(&strong, 5, &opts()).unwrap();
    assert!(report.gsi_sum_rate);
    assert!(report.gsi_full_region);
    assert_eq!(report.simo.unwrap(), rep);

    let weak = ChannelMimo::new(
        Mat::column(&[1.0, 0.5]),
        Mat::column(&[0.3, 0.1]),
        Mat::column(&[0.8, -0.2]),
        Mat::column(&[0.9, 1.1]),
        1.0,
        2.0,
    );
    assert!(!miso::simo_conditions_of(&weak).unwrap().gsi_full_region);
}

#[test]
fn scalar_classification_at_twice_the_direct_gain() {
    let ch = ChannelMimo::scalar(2.0, 2.0, 1.0, 1.0);
    let report = gsi::classify_regime(&ch, 5, &opts()).unwrap();
    assert!(report.strong_classical);
    assert!(report.gsi_sum_rate);
    assert!(report.gsi_full_region);
    assert_eq!(report.fraction_of_boundary_certified, 1.0);
    let want = (2.0 * 0.5 * 2f64.ln()).min(0.5 * 4f64.ln());
    assert!((report.sum_rate - want).abs() <= 1e-7);
}
