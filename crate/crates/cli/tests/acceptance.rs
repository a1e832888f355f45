//! Acceptance suite. Prints one PASS/FAIL line per criterion straight to
//! stderr (so the lines survive output capture) and fails the test when a
//! criterion outside `KNOWN_RED` is red.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use cdk_cli::commands::{cmd_certify, cmd_solve, AlphaSource, GeneratorSource};
use cdk_core::cones::{Cone, ConeSpec};
use cdk_core::duality::{
    check_dual_feasibility, eval_generator, sweep_generator, CertificateOrigin, GeneratingSet,
    GeneratorCertificate, SweepStatus,
};
use cdk_core::instances::lorentz;
use cdk_core::mip::{solve_mip, BnbConfig};
use cdk_core::model::{ConicMip, Matrix, RhsSense, Status, Tol, Vector};
use cdk_core::structure::{
    build_fiber_hull, check_packing_bounded, eval_generator_blocked, solve_clustering, Block,
    BlockMip, IntBox, PackingVerdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Criteria whose stated target is wrong; each prints its analysis.
const KNOWN_RED: [usize; 2] = [9, 10];

const ALPHA: f64 = 10445.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn say(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn tight() -> BnbConfig {
    BnbConfig::with_tol(Tol {
        gap_eps: 1e-10,
        ..Tol::default()
    })
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn c1_lorentz_solve() -> Verdict {
    let t = Instant::now();
    let out = cmd_solve(&data("lorentz.json"), &BnbConfig::default()).unwrap();
    let dt = t.elapsed();
    let r: Value = serde_json::from_str(&out.stdout).unwrap();
    let num = |v: &Value| v.as_f64().unwrap();
    let obj = num(&r["obj"]);
    let xy = [num(&r["x"][0]), num(&r["y"][0]), num(&r["y"][1])];
    let err = xy
        .iter()
        .zip([1.0, 1.0, 0.0])
        .map(|(a, b)| (a - b).abs())
        .fold((obj - 2.0).abs(), f64::max);
    verdict(
        out.code == 0 && err <= 1e-6 && dt < Duration::from_secs(1),
        format!("obj {obj}, (x,y) = {xy:?}, max error {err:.1e}, {dt:?}"),
    )
}

/// The five-case description of `F_10445`; for ω >= 6 the larger of the
/// values at ⌊x'⌋ and ⌈x'⌉ among those with a real square root.
fn piecewise(w: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else if w < 3.0 {
        ALPHA * w
    } else if w <= 5.0 {
        -3.0 + w - (1.0 - (w - 4.0).powi(2)).sqrt()
    } else if w < 6.0 {
        2.0 + ALPHA * (w - 5.0)
    } else {
        let xp = (0.06f64.sqrt() + 1.6) / 6.0 * w;
        [xp.floor(), xp.ceil()]
            .iter()
            .filter_map(|&x| {
                let r = x * x - (w - 4.0 * x).powi(2);
                (r >= 0.0).then(|| -3.0 * x + w - r.sqrt())
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn c2_generator_sweep() -> Verdict {
    let grid = [0.0, 1.0, 2.0, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0];
    let cert =
        GeneratorCertificate::new(&lorentz(), v(&[ALPHA]), CertificateOrigin::UserGiven).unwrap();
    let omegas: Vec<Vector> = grid.iter().map(|&w| v(&[w])).collect();
    let t = Instant::now();
    let rows = sweep_generator(&cert, &omegas, &tight());
    let dt = t.elapsed();
    let mut worst = 0.0f64;
    let mut relaxed_ok = true;
    for (row, &w) in rows.iter().zip(&grid) {
        match (row.status, row.value, row.relaxed) {
            (SweepStatus::Ok, Some(f), Some(fr)) => {
                worst = worst.max((f - piecewise(w)).abs());
                relaxed_ok &= fr <= f + 1e-9 * (1.0 + f.abs());
            }
            _ => return verdict(false, format!("omega {w}: status {}", row.status.as_str())),
        }
    }
    verdict(
        worst <= 1e-4 && relaxed_ok && dt < Duration::from_secs(30),
        format!("max |F - piecewise| {worst:.2e}, F' <= F: {relaxed_ok}, {dt:?}"),
    )
}

fn c3_auto_certificate() -> Verdict {
    let out = cmd_certify(
        &data("lorentz.json"),
        &AlphaSource::Auto {
            u_box: "0:1".into(),
        },
        &GeneratorSource::Sample(8),
        42,
        &BnbConfig::default(),
    )
    .unwrap();
    let r: Value = serde_json::from_str(&out.stdout).unwrap();
    let f = r["F_alpha_b"].as_f64().unwrap();
    let strong = r["strong_duality"].as_bool().unwrap();
    verdict(
        out.code == 0 && strong && (f - 2.0).abs() <= 1e-4,
        format!(
            "alpha* = {}, F(5) = {f:.10}, strong_duality {strong}",
            r["alpha"][0]
        ),
    )
}

/// `min c'x  s.t.  Ax = b, x + s = 10, x ∈ Z^n_+, s ≥ 0` with `b = A x0`.
struct IntInstance {
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
    c: Vec<i64>,
}

impl IntInstance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=4);
        let a: Vec<Vec<i64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-5..=5)).collect())
            .collect();
        let x0: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=10)).collect();
        let b = a
            .iter()
            .map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum())
            .collect();
        let c = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
        IntInstance { a, b, c }
    }

    fn m(&self) -> usize {
        self.a.len()
    }
    fn n(&self) -> usize {
        self.c.len()
    }

    fn mip(&self) -> ConicMip {
        let (m, n) = (self.m(), self.n());
        let a = Matrix::from_fn(m + n, n, |i, j| {
            if i < m {
                self.a[i][j] as f64
            } else {
                (i - m == j) as u8 as f64
            }
        });
        let g = Matrix::from_fn(m + n, n, |i, j| (i >= m && i - m == j) as u8 as f64);
        let b = Vector::from_fn(m + n, |i, _| if i < m { self.b[i] as f64 } else { 10.0 });
        let c = Vector::from_fn(n, |j, _| self.c[j] as f64);
        ConicMip::new(
            a,
            g,
            b,
            c,
            Vector::zeros(n),
            ConeSpec::nonneg(2 * n),
            RhsSense::Equal,
        )
        .unwrap()
    }

    /// `Ax = b, x ∈ Z^n_+` without the box; `F_α` can be `-inf` here.
    fn unboxed(&self) -> ConicMip {
        let (m, n) = (self.m(), self.n());
        let a = Matrix::from_fn(m, n, |i, j| self.a[i][j] as f64);
        let b = Vector::from_fn(m, |i, _| self.b[i] as f64);
        let c = Vector::from_fn(n, |j, _| self.c[j] as f64);
        ConicMip::new(
            a,
            Matrix::zeros(m, 0),
            b,
            c,
            Vector::zeros(0),
            ConeSpec::nonneg(n),
            RhsSense::Equal,
        )
        .unwrap()
    }

    /// The same lattice set as `Ax <= b, -Ax <= -b, x <= 10` without slacks.
    fn pure_le(&self) -> ConicMip {
        let (m, n) = (self.m(), self.n());
        let a = Matrix::from_fn(2 * m + n, n, |i, j| match i {
            i if i < m => self.a[i][j] as f64,
            i if i < 2 * m => -self.a[i - m][j] as f64,
            i => (i - 2 * m == j) as u8 as f64,
        });
        let b = Vector::from_fn(2 * m + n, |i, _| match i {
            i if i < m => self.b[i] as f64,
            i if i < 2 * m => -self.b[i - m] as f64,
            _ => 10.0,
        });
        let c = Vector::from_fn(n, |j, _| self.c[j] as f64);
        ConicMip::new(
            a,
            Matrix::zeros(2 * m + n, 0),
            b,
            c,
            Vector::zeros(0),
            ConeSpec::nonneg(n),
            RhsSense::LessEqual,
        )
        .unwrap()
    }

    fn lattice(&self) -> Vec<Vec<i64>> {
        let n = self.n();
        (0..11i64.pow(n as u32))
            .map(|code| (0..n).map(|j| code / 11i64.pow(j as u32) % 11).collect())
            .collect()
    }

    fn row(&self, i: usize, x: &[i64]) -> i64 {
        self.a[i].iter().zip(x).map(|(p, q)| p * q).sum()
    }

    /// Exhaustive `min c'x` over the feasible lattice points.
    fn enumerate(&self) -> i64 {
        self.lattice()
            .iter()
            .filter(|x| (0..self.m()).all(|i| self.row(i, x) == self.b[i]))
            .map(|x| x.iter().zip(&self.c).map(|(p, q)| p * q).sum())
            .min()
            .expect("x0 is feasible")
    }

    /// `F_α(b)` by enumeration: for each lattice `x` with `Ax <= b` the slack
    /// part `s ∈ [0, 10 − x]` is optimised coordinate-wise in closed form.
    fn generator_at_b(&self, alpha: &[f64]) -> f64 {
        let (m, n) = (self.m(), self.n());
        let shift: f64 = (0..m).map(|i| alpha[i] * self.b[i] as f64).sum::<f64>()
            + 10.0 * alpha[m..].iter().sum::<f64>();
        let inner = self
            .lattice()
            .iter()
            .filter(|x| (0..m).all(|i| self.row(i, x) <= self.b[i]))
            .map(|x| {
                (0..n)
                    .map(|j| {
                        let ax: f64 = (0..m).map(|i| alpha[i] * self.a[i][j] as f64).sum();
                        let rc = self.c[j] as f64 - ax - alpha[m + j];
                        let room = (10 - x[j]) as f64;
                        rc * x[j] as f64 + (-alpha[m + j] * room).min(0.0)
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        shift + inner
    }
}

fn int_instances() -> Vec<IntInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..50).map(|_| IntInstance::random(&mut rng)).collect()
}

fn c4_hull_oracle(insts: &[IntInstance]) -> Verdict {
    let mut hull_err = 0.0f64;
    let mut max_fibers = 0;
    for (k, inst) in insts.iter().enumerate() {
        let z = inst.enumerate();
        let res = solve_mip(&inst.mip(), &tight()).unwrap();
        if res.solution.status != Status::Optimal {
            return verdict(
                false,
                format!("instance {k}: status {}", res.solution.status.as_str()),
            );
        }
        let at_x: i64 = res
            .solution
            .x
            .iter()
            .zip(&inst.c)
            .map(|(x, c)| x.round() as i64 * c)
            .sum();
        if at_x != z || (res.solution.obj - z as f64).abs() > 1e-6 {
            return verdict(
                false,
                format!("instance {k}: MIP {} vs enumeration {z}", res.solution.obj),
            );
        }
        let le = inst.pure_le();
        let hull =
            build_fiber_hull(&le, &IntBox::uniform(inst.n(), 0, 10).unwrap(), &tight()).unwrap();
        max_fibers = max_fibers.max(hull.fibers().len());
        let h = hull.minimize(le.c(), le.d(), &Tol::default()).unwrap();
        hull_err = hull_err.max((h - z as f64).abs());
    }
    verdict(
        hull_err <= 1e-6,
        format!("50/50 MIP values equal enumeration; max |hull LP - z*| {hull_err:.1e} (up to {max_fibers} fibers)"),
    )
}

fn c5_weak_duality(insts: &[IntInstance]) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_weak, mut worst_agree) = (f64::NEG_INFINITY, 0.0f64);
    for inst in insts {
        let mip = inst.mip();
        let z = inst.enumerate() as f64;
        for _ in 0..20 {
            let alpha: Vec<f64> = (0..mip.m()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let oracle = inst.generator_at_b(&alpha);
            let cert = GeneratorCertificate::new(
                &mip,
                Vector::from_vec(alpha),
                CertificateOrigin::UserGiven,
            )
            .unwrap();
            let f = eval_generator(&cert, mip.b(), &tight()).unwrap();
            worst_weak = worst_weak.max(oracle - z).max(f - z);
            worst_agree = worst_agree.max((f - oracle).abs() / (1.0 + oracle.abs()));
        }
    }
    verdict(
        worst_weak <= 1e-6 && worst_agree <= 1e-9,
        format!("max F(b) - z* {worst_weak:.2e}; max relative |F_mip - F_enum| {worst_agree:.1e}"),
    )
}

fn c6_subadditivity() -> Verdict {
    let cert =
        GeneratorCertificate::new(&lorentz(), v(&[ALPHA]), CertificateOrigin::UserGiven).unwrap();
    let f = |w: f64| eval_generator(&cert, &v(&[w]), &tight());
    let f0 = f(0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    while pairs < 50 {
        let (w1, w2) = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0));
        // Ω^≤ membership: F is defined exactly there
        let (Ok(a), Ok(b), Ok(s)) = (f(w1), f(w2), f(w1 + w2)) else {
            continue;
        };
        worst = worst.max(s - a - b);
        pairs += 1;
    }
    verdict(
        worst <= 1e-6 && f0.abs() <= 1e-9,
        format!("max F(w1+w2) - F(w1) - F(w2) {worst:.2e} over {pairs} pairs; F(0) = {f0:e}"),
    )
}

fn c7_generating_sets(insts: &[IntInstance]) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = BnbConfig::default();
    let (mut held, mut same) = (0, 0);
    for (k, inst) in insts.iter().take(20).enumerate() {
        let mip = if k % 2 == 0 {
            inst.mip()
        } else {
            inst.unboxed()
        };
        let (n1, n2) = (mip.n1(), mip.n2());
        let n = n1 + n2;
        let unit = |j: usize| {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            e
        };
        let split = |e: Vector| (e.rows(0, n1).into_owned(), e.rows(n1, n2).into_owned());
        let singles: Vec<_> = (0..n).map(|j| split(unit(j))).collect();
        let mut pairs = singles.clone();
        for j in 0..n {
            for k in j + 1..n {
                pairs.push(split(unit(j) + unit(k)));
            }
        }
        let alpha = Vector::from_fn(mip.m(), |_, _| rng.gen_range(-3.0..3.0));
        let cert = GeneratorCertificate::new(&mip, alpha, CertificateOrigin::UserGiven).unwrap();
        let tol = Tol::default();
        let a = check_dual_feasibility(
            &mip,
            &cert,
            &GeneratingSet::new(&mip, singles, &tol).unwrap(),
            &cfg,
        )
        .unwrap();
        let b = check_dual_feasibility(
            &mip,
            &cert,
            &GeneratingSet::new(&mip, pairs, &tol).unwrap(),
            &cfg,
        )
        .unwrap();
        held += a.holds as usize;
        same += (a.holds == b.holds) as usize;
    }
    verdict(
        same == 20,
        format!(
            "{same}/20 verdicts identical ({held} dual feasible, {} not)",
            20 - held
        ),
    )
}

fn nonneg_block(rng: &mut ChaCha8Rng, m: usize, cheap: bool) -> Block {
    let col = |r: &mut ChaCha8Rng| Matrix::from_fn(m, 1, |_, _| r.gen_range(0.5..3.0));
    let (a, g) = (col(rng), col(rng));
    let (c, d) = if cheap {
        (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    } else {
        (10.0, 10.0)
    };
    Block {
        a,
        g,
        c: v(&[c]),
        d: v(&[d]),
        cone: ConeSpec::nonneg(2),
    }
}

/// Integer head, two continuous tails, every row strictly inside Soc(3).
fn soc_block(rng: &mut ChaCha8Rng, m: usize, cheap: bool) -> Block {
    let g = Matrix::from_fn(m, 2, |_, _| rng.gen_range(-1.0..1.0));
    let a = Matrix::from_fn(m, 1, |i, _| g.row(i).norm() + rng.gen_range(0.5..2.0));
    let (c, d) = if cheap {
        (
            rng.gen_range(-2.0..2.0),
            v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]),
        )
    } else {
        (20.0, v(&[0.0, 0.0]))
    };
    Block {
        a,
        g,
        c: v(&[c]),
        d,
        cone: ConeSpec::soc(3),
    }
}

fn c8_block_reduction() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = rng.gen_range(1..=2);
        let kinds = [false, true, rng.gen_bool(0.5)];
        let blocks = kinds
            .iter()
            .map(|&soc| {
                let cheap = rng.gen_bool(0.5);
                if soc {
                    soc_block(&mut rng, m, cheap)
                } else {
                    nonneg_block(&mut rng, m, cheap)
                }
            })
            .collect();
        let inst =
            BlockMip::new(blocks, Vector::from_element(m, 4.0), RhsSense::LessEqual).unwrap();
        let alpha = Vector::from_fn(m, |_, _| rng.gen_range(0.0..1.0));
        let omega = Vector::from_fn(m, |_, _| rng.gen_range(2.0..6.0));
        let cert = GeneratorCertificate::new(
            &inst.to_mip().unwrap(),
            alpha.clone(),
            CertificateOrigin::UserGiven,
        )
        .unwrap();
        let full = eval_generator(&cert, &omega, &tight()).unwrap();
        let reduced = eval_generator_blocked(&inst, &alpha, &omega, &tight()).unwrap();
        worst = worst.max((full - reduced).abs());
    }
    verdict(
        worst <= 1e-8,
        format!("max |blocked - unreduced| {worst:.1e} over 20 instances"),
    )
}

fn packing(rows: &[Vec<f64>], n1: usize, cone: ConeSpec) -> ConicMip {
    let m = rows.len();
    let n = cone.dim();
    let full = Matrix::from_fn(m, n, |i, j| rows[i][j]);
    ConicMip::new(
        full.columns(0, n1).into_owned(),
        full.columns(n1, n - n1).into_owned(),
        Vector::from_element(m, 1.0),
        Vector::from_element(n1, -1.0),
        Vector::from_element(n - n1, -1.0),
        cone,
        RhsSense::LessEqual,
    )
    .unwrap()
}

fn c9_packing() -> Verdict {
    let tol = Tol::default();
    let examples = [
        (
            "identity rows, NonNeg(2)",
            packing(&[vec![1.0, 0.0], vec![0.0, 1.0]], 0, ConeSpec::nonneg(2)),
            PackingVerdict::Bounded,
        ),
        (
            "row (1,0), NonNeg(2)",
            packing(&[vec![1.0, 0.0]], 0, ConeSpec::nonneg(2)),
            PackingVerdict::Unbounded,
        ),
        (
            "row (1,0,0), Soc(3)",
            packing(&[vec![1.0, 0.0, 0.0]], 0, ConeSpec::soc(3)),
            PackingVerdict::Unbounded,
        ),
    ];
    let mut notes = Vec::new();
    let mut all = true;
    for (name, inst, want) in &examples {
        let got = check_packing_bounded(inst, &tol).unwrap();
        // independent check: B&B on -Σy over the set
        let direct = solve_mip(inst, &BnbConfig::default())
            .unwrap()
            .solution
            .status;
        let ok = got == *want;
        all &= ok;
        notes.push(format!(
            "{name}: {} (expected {}, maximising Σy gives {})",
            got.as_str(),
            want.as_str(),
            direct.as_str()
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut optimal = 0;
    let mut tried = 0;
    while tried < 10 {
        let m = rng.gen_range(1..=3);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let t: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let head = t[0].hypot(t[1]) + rng.gen_range(0.0..1.0);
                let mut nn = || {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(0.1..2.0)
                    }
                };
                vec![nn(), nn(), head, t[0], t[1]]
            })
            .collect();
        let mut cone = ConeSpec::nonneg(2);
        cone.push(Cone::Soc(3));
        let inst = packing(&rows, 1, cone);
        if check_packing_bounded(&inst, &tol).unwrap() != PackingVerdict::Bounded {
            continue;
        }
        tried += 1;
        optimal += (solve_mip(&inst, &BnbConfig::default())
            .unwrap()
            .solution
            .status
            == Status::Optimal) as usize;
    }
    notes.push(format!(
        "{optimal}/10 random Bounded instances solve Optimal"
    ));
    if !all {
        notes.push(
            "analysis: (1,0,0) is interior to Soc(3)_* = Soc(3), so {y in Soc(3): y0 <= 1} is bounded \
             (|(y1,y2)| <= y0 <= 1); the proposed ray (1,1,0) has row product 1 > 0 and is not a recession direction"
                .into(),
        );
    }
    verdict(all && optimal == 10, notes.join("; "))
}

fn median_cost(pts: &[&Vector]) -> f64 {
    let cost = |z: &Vector| pts.iter().map(|p| (*p - z).norm()).sum::<f64>();
    let mut z = pts
        .iter()
        .fold(Vector::zeros(pts[0].len()), |acc, p| acc + *p)
        / pts.len() as f64;
    for _ in 0..5000 {
        let (mut num, mut den) = (Vector::zeros(z.len()), 0.0);
        for p in pts {
            let w = 1.0 / (*p - &z).norm().max(1e-14);
            num += *p * w;
            den += w;
        }
        z = num / den;
    }
    pts.iter().map(|p| cost(p)).fold(cost(&z), f64::min)
}

/// Minimum over all assignments of the summed geometric-median costs.
fn brute_force_clustering(points: &[Vector], q: usize) -> f64 {
    let n = points.len();
    (0..q.pow(n as u32))
        .map(|code| {
            (0..q)
                .map(|k| {
                    let members: Vec<&Vector> = (0..n)
                        .filter(|&i| code / q.pow(i as u32) % q == k)
                        .map(|i| &points[i])
                        .collect();
                    if members.is_empty() {
                        0.0
                    } else {
                        median_cost(&members)
                    }
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn c10_clustering() -> Verdict {
    let square = [
        v(&[0.0, 0.0]),
        v(&[1.0, 0.0]),
        v(&[0.0, 1.0]),
        v(&[1.0, 1.0]),
    ];
    let t = Instant::now();
    let res = solve_clustering(&square, 2, &tight()).unwrap();
    let dt = t.elapsed();
    let oracle = brute_force_clustering(&square, 2);
    let vs_oracle = (res.objective - oracle).abs();
    let vs_stated = (res.objective - 2.0).abs();
    verdict(
        vs_stated <= 1e-4 && vs_oracle <= 1e-4 && dt < Duration::from_secs(60),
        format!(
            "objective {:.7}, brute-force oracle {oracle:.7} (|diff| {vs_oracle:.1e}), target 2 (|diff| {vs_stated:.1e}), {dt:?}; \
             analysis: the 3+1 split with the Fermat point of three corners costs sqrt(2+sqrt(3)) = 1.9318517 < 2",
            res.objective
        ),
    )
}

#[test]
fn acceptance() {
    let insts = int_instances();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("Lorentz primal solve", Box::new(c1_lorentz_solve)),
        (
            "generator sweep at alpha = 10445",
            Box::new(c2_generator_sweep),
        ),
        (
            "hull multiplier certifies strong duality",
            Box::new(c3_auto_certificate),
        ),
        (
            "MIP and hull LP against enumeration",
            Box::new(|| c4_hull_oracle(&insts)),
        ),
        (
            "weak duality, enumeration and MIP paths",
            Box::new(|| c5_weak_duality(&insts)),
        ),
        ("subadditivity of F_10445", Box::new(c6_subadditivity)),
        (
            "generating-set invariance",
            Box::new(|| c7_generating_sets(&insts)),
        ),
        ("block reduction", Box::new(c8_block_reduction)),
        ("packing boundedness", Box::new(c9_packing)),
        ("clustering of the unit square", Box::new(c10_clustering)),
    ];
    let mut unexpected = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        let t = Instant::now();
        let r = run();
        let tag = if r.pass { "PASS" } else { "FAIL" };
        say(&format!(
            "criterion {id:>2} {tag} {name} [{:.2?}]: {}",
            t.elapsed(),
            r.detail
        ));
        if !r.pass && !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
