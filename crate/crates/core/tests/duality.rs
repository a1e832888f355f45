use cdk_core::cones::ConeSpec;
use cdk_core::duality::*;
use cdk_core::error::Error;
use cdk_core::instances::{lorentz, small_ip};
use cdk_core::mip::{solve_mip, BnbConfig};
use cdk_core::model::{ConicMip, Matrix, RhsSense, Tol, Vector};
use cdk_core::structure::{build_fiber_hull, IntBox};
use proptest::prelude::*;

const ALPHA: f64 = 10445.0;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn tight() -> BnbConfig {
    BnbConfig::with_tol(Tol {
        gap_eps: 1e-10,
        ..Tol::default()
    })
}

fn lorentz_cert(alpha: f64) -> GeneratorCertificate {
    GeneratorCertificate::new(&lorentz(), v(&[alpha]), CertificateOrigin::UserGiven).unwrap()
}

/// `F_α(ω)` for the Lorentz instance in closed form: for each integer `x` the
/// inner maximum of `(α−1) y1 − y2` over the disk `|y| <= x` cut by
/// `y1 <= ω − 4x` is attained either at the unconstrained disk maximiser or
/// on the cut.
fn lorentz_oracle(alpha: f64, omega: f64) -> f64 {
    let r = (alpha - 1.0).hypot(1.0);
    let mut best = f64::NEG_INFINITY;
    for x in 0..=(omega.max(0.0) as i64 + 1) {
        let x = x as f64;
        let cut = omega - 4.0 * x;
        if cut < -x {
            continue;
        }
        let free = x * (alpha - 1.0) / r;
        let inner = if free <= cut {
            x * r
        } else {
            (alpha - 1.0) * cut + (x * x - cut * cut).max(0.0).sqrt()
        };
        best = best.max((4.0 * alpha - 1.0) * x + inner);
    }
    alpha * omega - best
}

/// The piecewise description of `F_10445`.
fn lorentz_piecewise(omega: f64) -> f64 {
    if omega == 0.0 {
        0.0
    } else if omega < 3.0 {
        ALPHA * omega
    } else if omega <= 5.0 {
        -3.0 + omega - (1.0 - (omega - 4.0).powi(2)).sqrt()
    } else if omega < 6.0 {
        2.0 + ALPHA * (omega - 5.0)
    } else {
        let xp = (0.06f64.sqrt() + 1.6) / 6.0 * omega;
        [xp.floor(), xp.ceil()]
            .iter()
            .filter_map(|&x| {
                let r = x * x - (omega - 4.0 * x).powi(2);
                (r >= 0.0).then(|| -3.0 * x + omega - r.sqrt())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[test]
fn lorentz_generator_matches_closed_forms() {
    let cert = lorentz_cert(ALPHA);
    for w in [0.0, 1.0, 2.0, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0] {
        let f = eval_generator(&cert, &v(&[w]), &tight()).unwrap();
        let oracle = lorentz_oracle(ALPHA, w);
        assert!(
            (f - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()),
            "omega {w}: {f} vs {oracle}"
        );
        assert!((f - lorentz_piecewise(w)).abs() <= 1e-4, "omega {w}: {f}");
    }
}

#[test]
fn lorentz_generator_outside_omega_le() {
    let cert = lorentz_cert(ALPHA);
    assert_eq!(
        eval_generator(&cert, &v(&[-1.0]), &tight()),
        Err(Error::OmegaInfeasible)
    );
}

#[test]
fn sweep_records_failures_and_relaxation_lies_below() {
    let cert = lorentz_cert(ALPHA);
    assert!(sweep_generator(&cert, &[], &tight()).is_empty());
    let grid: Vec<Vector> = [-1.0, 3.0, 4.0, 5.0, 7.0]
        .iter()
        .map(|&w| v(&[w]))
        .collect();
    let rows = sweep_generator(&cert, &grid, &tight());
    assert_eq!(rows[0].status, SweepStatus::OmegaInfeasible);
    assert_eq!(rows[0].value, None);
    let expect = [0.0, 0.0, 2.0];
    for (row, want) in rows[1..4].iter().zip(expect) {
        assert_eq!(row.status, SweepStatus::Ok);
        assert!((row.value.unwrap() - want).abs() < 1e-4);
    }
    for row in &rows[1..] {
        let (f, fr) = (row.value.unwrap(), row.relaxed.unwrap());
        assert!(fr <= f + 1e-6 * (1.0 + f.abs()), "{fr} > {f}");
    }
}

#[test]
fn lagrangian_matches_generator_at_b() {
    for alpha in [0.0, 0.5, 3.0, ALPHA] {
        let l = lagrangian_value(&lorentz(), &v(&[alpha]), &tight()).unwrap();
        let f = eval_generator(&lorentz_cert(alpha), &v(&[5.0]), &tight()).unwrap();
        // both sides cancel terms of size alpha*b
        assert!(
            (l - f).abs() <= 1e-10 * (1.0 + 5.0 * alpha),
            "alpha {alpha}: {l} vs {f}"
        );
    }
    assert!((lagrangian_value(&lorentz(), &v(&[ALPHA]), &tight()).unwrap() - 2.0).abs() < 1e-4);
}

#[test]
fn lagrangian_of_small_ip() {
    // L(0.5) = 1.5 + min over {x1 + 2 x2 <= 3} of 0.5 x1 = 1.5
    let l = lagrangian_value(&small_ip(), &v(&[0.5]), &tight()).unwrap();
    assert!((l - 1.5).abs() < 1e-9);
}

/// `max_α L(α)` for the small IP by grid search on `[-5, 5]` with step 0.01,
/// `L` evaluated by enumerating `{x in Z^2_+ : x1 + 2 x2 <= 3}`.
fn small_ip_dual_bound() -> f64 {
    let pts = [
        (0.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (3.0, 0.0),
        (0.0, 1.0),
        (1.0, 1.0),
    ];
    (0..=1000)
        .map(|k| -5.0 + 0.01 * k as f64)
        .map(|a| {
            pts.iter()
                .map(|&(x1, x2)| x1 + x2 + a * (3.0 - x1 - 2.0 * x2))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn ascent_closes_the_gap_on_small_ip() {
    let oracle = small_ip_dual_bound();
    assert!((oracle - 2.0).abs() < 1e-9);
    let cert =
        maximize_lagrangian(&small_ip(), &v(&[0.0]), DEFAULT_ASCENT_ITERS, &tight()).unwrap();
    assert_eq!(cert.origin, CertificateOrigin::Lagrangian);
    let l = lagrangian_value(&small_ip(), &cert.alpha, &tight()).unwrap();
    assert!(l >= lagrangian_value(&small_ip(), &v(&[0.0]), &tight()).unwrap());
    assert!((l - oracle).abs() < 1e-2, "{l}");
}

#[test]
fn ascent_on_lorentz_stays_below_the_optimum() {
    let cert = maximize_lagrangian(&lorentz(), &v(&[0.0]), 50, &tight()).unwrap();
    let l = lagrangian_value(&lorentz(), &cert.alpha, &tight()).unwrap();
    assert!((0.0..=2.0 + 1e-9).contains(&l), "{l}");
}

#[test]
fn hull_dual_certifies_lorentz() {
    // the dual is not attained; the IPM's last multipliers certify to 1e-4
    let cfg = BnbConfig::with_tol(Tol {
        gap_eps: 1e-4,
        ..Tol::default()
    });
    let hull = build_fiber_hull(&lorentz(), &IntBox::uniform(1, 0, 1).unwrap(), &cfg).unwrap();
    let cert = alpha_star_from_hull(&lorentz(), &hull, &cfg).unwrap();
    assert_eq!(cert.origin, CertificateOrigin::ConicDual);
    let f = eval_generator(&cert, &v(&[5.0]), &tight()).unwrap();
    assert!((f - 2.0).abs() <= 1e-4, "alpha {} gives {f}", cert.alpha[0]);
}

#[test]
fn hull_dual_certifies_small_ip() {
    let cfg = tight();
    let inst = small_ip();
    let hull = build_fiber_hull(&inst, &IntBox::uniform(2, 0, 3).unwrap(), &cfg).unwrap();
    let cert = alpha_star_from_hull(&inst, &hull, &cfg).unwrap();
    let f = eval_generator(&cert, &v(&[3.0]), &cfg).unwrap();
    assert!((f - 2.0).abs() < 1e-6, "{f}");
}

#[test]
fn hull_dual_on_a_singleton() {
    // x1 = 2 forced by x1 <= 2 and x1 >= 2 written as two rows
    let inst = ConicMip::new(
        Matrix::from_row_slice(2, 1, &[1.0, -1.0]),
        Matrix::zeros(2, 0),
        v(&[2.0, -2.0]),
        v(&[3.0]),
        Vector::zeros(0),
        ConeSpec::nonneg(1),
        RhsSense::Equal,
    )
    .unwrap();
    let cfg = tight();
    let hull = build_fiber_hull(&inst, &IntBox::uniform(1, 0, 4).unwrap(), &cfg).unwrap();
    assert_eq!(hull.fibers(), &[v(&[2.0])]);
    let cert = alpha_star_from_hull(&inst, &hull, &cfg).unwrap();
    let f = eval_generator(&cert, inst.b(), &cfg).unwrap();
    assert!((f - 6.0).abs() < 1e-7);
}

fn lorentz_optimum() -> cdk_core::model::Solution {
    solve_mip(&lorentz(), &BnbConfig::default())
        .unwrap()
        .solution
}

#[test]
fn certificate_checks_on_lorentz() {
    let cfg = BnbConfig::with_tol(Tol {
        gap_eps: 1e-4,
        ..Tol::default()
    });
    let opt = lorentz_optimum();
    let cert = lorentz_cert(ALPHA);
    let wd = check_weak_duality(&lorentz(), &cert, &opt, &cfg).unwrap();
    assert!(wd.holds && (wd.primal_value - 2.0).abs() < 1e-9);
    assert!(check_complementary_slackness(&lorentz(), &cert, &opt, &cfg).unwrap());
    let gens = GeneratingSet::cone_samples(&lorentz(), 20, 42, &cfg.tol);
    assert_eq!(gens.len(), 20);
    let df = check_dual_feasibility(&lorentz(), &cert, &gens, &cfg).unwrap();
    assert!(df.holds, "{df:?}");
    assert_eq!(df.generators_checked, 20);

    let zero = lorentz_cert(0.0);
    assert!(
        check_weak_duality(&lorentz(), &zero, &opt, &cfg)
            .unwrap()
            .holds
    );
    assert!(!check_complementary_slackness(&lorentz(), &zero, &opt, &cfg).unwrap());
    let f0 = eval_generator(&zero, &v(&[5.0]), &tight()).unwrap();
    assert!((f0 - (1.0 - 2f64.sqrt())).abs() < 1e-7, "{f0}");
    assert!(
        check_dual_feasibility(&lorentz(), &zero, &gens, &cfg)
            .unwrap()
            .holds
    );
}

#[test]
fn certificate_checks_reject_bad_points() {
    let cfg = BnbConfig::default();
    let mut bad = lorentz_optimum();
    bad.x[0] = 0.5;
    assert!(matches!(
        check_weak_duality(&lorentz(), &lorentz_cert(ALPHA), &bad, &cfg),
        Err(Error::InfeasiblePoint(_))
    ));
    let outside = vec![(v(&[0.0]), v(&[1.0, 0.0]))];
    assert!(matches!(
        GeneratingSet::new(&lorentz(), outside, &cfg.tol),
        Err(Error::NotInMonoid(_))
    ));
    assert!(
        GeneratorCertificate::new(&lorentz(), v(&[1.0, 2.0]), CertificateOrigin::UserGiven)
            .is_err()
    );
}

#[test]
fn zero_generator_only() {
    let cfg = BnbConfig::default();
    let gens = GeneratingSet::new(
        &small_ip(),
        vec![(v(&[0.0, 0.0]), Vector::zeros(0))],
        &cfg.tol,
    )
    .unwrap();
    let cert =
        GeneratorCertificate::new(&small_ip(), v(&[0.7]), CertificateOrigin::UserGiven).unwrap();
    let rep = check_dual_feasibility(&small_ip(), &cert, &gens, &cfg).unwrap();
    assert!(rep.holds && rep.value_at_zero.abs() < 1e-12);
}

#[test]
fn degenerate_zero_optimum() {
    // min x s.t. x = 0 over Z_+ with alpha = 0
    let inst = ConicMip::new(
        Matrix::from_row_slice(1, 1, &[1.0]),
        Matrix::zeros(1, 0),
        v(&[0.0]),
        v(&[1.0]),
        Vector::zeros(0),
        ConeSpec::nonneg(1),
        RhsSense::Equal,
    )
    .unwrap();
    let cfg = BnbConfig::default();
    let opt = solve_mip(&inst, &cfg).unwrap().solution;
    let cert = GeneratorCertificate::new(&inst, v(&[0.0]), CertificateOrigin::UserGiven).unwrap();
    assert!(check_complementary_slackness(&inst, &cert, &opt, &cfg).unwrap());
}

/// `F_α(3)` for the small IP by enumeration of `{x1 + 2 x2 <= 3}`.
fn small_ip_generator(alpha: f64) -> f64 {
    let pts = [
        (0.0, 0.0),
        (1.0, 0.0),
        (2.0, 0.0),
        (3.0, 0.0),
        (0.0, 1.0),
        (1.0, 1.0),
    ];
    3.0 * alpha
        + pts
            .iter()
            .map(|&(x1, x2)| (1.0 - alpha) * x1 + (1.0 - 2.0 * alpha) * x2)
            .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weak_duality_on_small_ip(alpha in -10.0f64..10.0) {
        let cert = GeneratorCertificate::new(&small_ip(), v(&[alpha]), CertificateOrigin::UserGiven).unwrap();
        let f = eval_generator(&cert, &v(&[3.0]), &tight()).unwrap();
        prop_assert!((f - small_ip_generator(alpha)).abs() <= 1e-9 * (1.0 + f.abs()));
        prop_assert!(f <= 2.0 + 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lorentz_generator_is_subadditive(w1 in 0.0f64..4.0, w2 in 0.0f64..4.0) {
        let cert = lorentz_cert(ALPHA);
        let f = |w: f64| eval_generator(&cert, &v(&[w]), &tight()).unwrap();
        prop_assert!(f(w1 + w2) <= f(w1) + f(w2) + 1e-6);
    }

    #[test]
    fn lagrangian_identity(alpha in 0.0f64..20.0) {
        let l = lagrangian_value(&lorentz(), &v(&[alpha]), &tight()).unwrap();
        let f = eval_generator(&lorentz_cert(alpha), &v(&[5.0]), &tight()).unwrap();
        prop_assert!((l - f).abs() <= 1e-8 * (1.0 + f.abs()), "{} vs {}", l, f);
    }
}
