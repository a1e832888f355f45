//! Generator subadditive functions
//! `F_α(ω) = α'ω − sup{(A'α − c)'x + (G'α − d)'y : Ax + Gy ≤ ω, (x, y) ∈ M}`,
//! the Lagrangian dual and certificate checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::{self, Cone};
use crate::error::{Error, Result};
use crate::mip::{finite_or_limit, solve_mip, solve_program, BnbConfig};
use crate::model::{concat, residual, ConicMip, Matrix, RhsSense, Solution, Status, Tol, Vector};
use crate::solver::{solve_continuous, ContinuousProgram};
use crate::structure::{hull_program, FiberHull};

/// Default number of boundary samples per second-order cone block.
pub const DEFAULT_SOC_SAMPLES: usize = 64;
/// Default number of supergradient steps.
pub const DEFAULT_ASCENT_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateOrigin {
    UserGiven,
    Lagrangian,
    ConicDual,
}

/// The multiplier `α` of a generator function together with its instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCertificate {
    pub alpha: Vector,
    pub origin: CertificateOrigin,
    instance: ConicMip,
}

impl GeneratorCertificate {
    pub fn new(inst: &ConicMip, alpha: Vector, origin: CertificateOrigin) -> Result<Self> {
        if alpha.len() != inst.m() {
            return Err(Error::DimensionMismatch {
                what: "alpha",
                expected: inst.m(),
                got: alpha.len(),
            });
        }
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("alpha"));
        }
        Ok(GeneratorCertificate {
            alpha,
            origin,
            instance: inst.clone(),
        })
    }

    pub fn instance(&self) -> &ConicMip {
        &self.instance
    }

    /// `F_α(ω) = α'ω + inf{(c − A'α)'x + (d − G'α)'y : Ax + Gy ≤ ω}` as a program.
    fn program(&self, omega: &Vector) -> Result<ContinuousProgram> {
        let inst = &self.instance;
        let rc = inst.c() - inst.a().transpose() * &self.alpha;
        let rd = inst.d() - inst.g().transpose() * &self.alpha;
        ContinuousProgram::from_mip(inst)
            .with_rhs(omega.clone())?
            .with_sense(RhsSense::LessEqual)
            .with_objective(rc, rd, self.alpha.dot(omega))
    }
}

/// Finite set of points asserted to lie in `M = K ∩ (Z^n1 × R^n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSet {
    points: Vec<(Vector, Vector)>,
}

impl GeneratingSet {
    pub fn new(inst: &ConicMip, points: Vec<(Vector, Vector)>, tol: &Tol) -> Result<Self> {
        for (u, v) in &points {
            monoid_check(inst, u, v, tol)?;
        }
        Ok(GeneratingSet { points })
    }

    pub fn points(&self) -> &[(Vector, Vector)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Extreme rays of every cone block: unit vectors on NonNeg blocks, signed
    /// unit vectors on Free blocks and `soc_samples` boundary points
    /// `(1, t)`, `|t| = 1`, on each Soc block (equi-angular for `Soc(3)`,
    /// seeded random directions in higher dimension). Points whose integer
    /// coordinates are not integral are left out.
    pub fn cone_samples(inst: &ConicMip, soc_samples: usize, seed: u64, tol: &Tol) -> Self {
        let n = inst.n1() + inst.n2();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw: Vec<Vector> = Vec::new();
        for (off, blk) in inst.cone().offsets() {
            let unit = |i: usize, s: f64| {
                let mut e = Vector::zeros(n);
                e[off + i] = s;
                e
            };
            match blk {
                Cone::NonNeg(k) => raw.extend((0..k).map(|i| unit(i, 1.0))),
                Cone::Free(k) => raw.extend((0..k).flat_map(|i| [unit(i, 1.0), unit(i, -1.0)])),
                Cone::Zero(_) => {}
                Cone::Soc(k) => {
                    for s in 0..soc_samples {
                        let mut e = Vector::zeros(n);
                        e[off] = 1.0;
                        match k {
                            2 => e[off + 1] = if s % 2 == 0 { 1.0 } else { -1.0 },
                            3 => {
                                let t = 2.0 * PI * s as f64 / soc_samples as f64;
                                e[off + 1] = t.cos();
                                e[off + 2] = t.sin();
                            }
                            _ => {
                                let dir: Vec<f64> =
                                    (1..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
                                let norm = dir.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-12);
                                for (i, t) in dir.iter().enumerate() {
                                    e[off + 1 + i] = t / norm;
                                }
                            }
                        }
                        raw.push(e);
                    }
                }
            }
        }
        let points = raw
            .into_iter()
            .map(|e| inst.from_cone_order(&e))
            .map(|xy| {
                (
                    xy.rows(0, inst.n1()).into_owned(),
                    xy.rows(inst.n1(), inst.n2()).into_owned(),
                )
            })
            .filter(|(u, v)| monoid_check(inst, u, v, tol).is_ok())
            .collect();
        GeneratingSet { points }
    }
}

fn monoid_check(inst: &ConicMip, u: &Vector, v: &Vector, tol: &Tol) -> Result<()> {
    if u.len() != inst.n1() || v.len() != inst.n2() {
        return Err(Error::NotInMonoid("wrong dimension".into()));
    }
    if let Some(j) = u.iter().position(|t| (t - t.round()).abs() > tol.int_eps) {
        return Err(Error::NotInMonoid(format!(
            "x[{j}] = {} is not integral",
            u[j]
        )));
    }
    let xy = inst.to_cone_order(&concat(u, v));
    let eps = tol.feas_eps * (1.0 + xy.amax());
    if !cones::contains(inst.cone(), &xy, eps)? {
        return Err(Error::NotInMonoid("point is outside the cone".into()));
    }
    Ok(())
}

/// Feasibility of `(x, y)` for the instance rows, cone and integrality.
fn point_check(inst: &ConicMip, x: &Vector, y: &Vector, tol: &Tol) -> Result<()> {
    let r = residual(inst, x, y)?;
    let eps = tol.feas_eps * (1.0 + inst.b().amax());
    let bad = match inst.sense() {
        RhsSense::Equal => r.amax() > eps,
        RhsSense::LessEqual => r.max() > eps,
    };
    if bad {
        return Err(Error::InfeasiblePoint(format!(
            "row residual {:.3e}",
            r.amax()
        )));
    }
    monoid_check(inst, x, y, tol).map_err(|e| Error::InfeasiblePoint(e.to_string()))
}

/// Inner gap tightened so that `F` itself, not the inner maximum, meets
/// `gap_eps` relative accuracy.
fn inner_cfg(cert: &GeneratorCertificate, omega: &Vector, cfg: &BnbConfig) -> BnbConfig {
    let mut inner = *cfg;
    let shift = 1.0 + cert.alpha.dot(omega).abs();
    inner.tol.gap_eps = (cfg.tol.gap_eps / shift).max(1e-15);
    inner
}

/// `F_α(ω)`; `-inf` where the inner maximisation is unbounded.
pub fn eval_generator(cert: &GeneratorCertificate, omega: &Vector, cfg: &BnbConfig) -> Result<f64> {
    let p = cert.program(omega)?;
    let res = solve_program(&p, &inner_cfg(cert, omega, cfg))?;
    match finite_or_limit(&res)? {
        v if v == f64::INFINITY => Err(Error::OmegaInfeasible),
        v => Ok(v),
    }
}

/// `F'_α(ω)`: the same with integrality dropped.
pub fn eval_generator_relaxed(
    cert: &GeneratorCertificate,
    omega: &Vector,
    tol: &Tol,
) -> Result<f64> {
    let (sol, _) = solve_continuous(&cert.program(omega)?, tol)?;
    match sol.status {
        Status::Optimal => Ok(sol.obj),
        Status::Unbounded => Ok(f64::NEG_INFINITY),
        Status::Infeasible => Err(Error::OmegaInfeasible),
        s => Err(Error::Solver(s)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Ok,
    /// `F_α(ω) = -inf`.
    Unbounded,
    OmegaInfeasible,
    NodeLimit,
    IterLimit,
    Failed,
}

impl SweepStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepStatus::Ok => "ok",
            SweepStatus::Unbounded => "unbounded",
            SweepStatus::OmegaInfeasible => "omega_infeasible",
            SweepStatus::NodeLimit => "node_limit",
            SweepStatus::IterLimit => "iter_limit",
            SweepStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub omega: Vector,
    /// `F_α(ω)`, `None` when it could not be evaluated.
    pub value: Option<f64>,
    /// `F'_α(ω)` of the relaxation.
    pub relaxed: Option<f64>,
    pub status: SweepStatus,
}

/// Evaluates `F_α` and `F'_α` over a grid; failures are recorded per entry.
pub fn sweep_generator(
    cert: &GeneratorCertificate,
    omegas: &[Vector],
    cfg: &BnbConfig,
) -> Vec<SweepEntry> {
    omegas
        .iter()
        .map(|omega| {
            let (value, status) = match eval_generator(cert, omega, cfg) {
                Ok(v) if v == f64::NEG_INFINITY => (Some(v), SweepStatus::Unbounded),
                Ok(v) => (Some(v), SweepStatus::Ok),
                Err(Error::OmegaInfeasible) => (None, SweepStatus::OmegaInfeasible),
                Err(Error::NodeLimit { .. }) => (None, SweepStatus::NodeLimit),
                Err(Error::IterLimit) => (None, SweepStatus::IterLimit),
                Err(_) => (None, SweepStatus::Failed),
            };
            let relaxed = match status {
                SweepStatus::OmegaInfeasible => None,
                _ => eval_generator_relaxed(cert, omega, &cfg.tol).ok(),
            };
            SweepEntry {
                omega: omega.clone(),
                value,
                relaxed,
                status,
            }
        })
        .collect()
}

/// The Lagrangian relaxation over `S = M^≤(b)` written with explicit slacks:
/// `min c'x + d'y + α's  s.t.  Ax + Gy + s = b, s ≥ 0, (x, y) ∈ M`.
fn lagrangian_instance(inst: &ConicMip, alpha: &Vector) -> Result<ConicMip> {
    let (m, n1, n2) = (inst.m(), inst.n1(), inst.n2());
    if alpha.len() != m {
        return Err(Error::DimensionMismatch {
            what: "alpha",
            expected: m,
            got: alpha.len(),
        });
    }
    let mut g = Matrix::zeros(m, n2 + m);
    g.view_mut((0, 0), (m, n2)).copy_from(inst.g());
    g.view_mut((0, n2), (m, m)).fill_with_identity();
    let mut cone = inst.cone().clone();
    cone.push(Cone::NonNeg(m));
    let mut order = inst.cone_order().to_vec();
    order.extend(n1 + n2..n1 + n2 + m);
    let lag = ConicMip::new(
        inst.a().clone(),
        g,
        inst.b().clone(),
        inst.c().clone(),
        concat(inst.d(), alpha),
        cone,
        RhsSense::Equal,
    )?;
    Ok(lag.with_cone_order(order))
}

fn lagrangian_solve(inst: &ConicMip, alpha: &Vector, cfg: &BnbConfig) -> Result<(f64, Solution)> {
    let lag = lagrangian_instance(inst, alpha)?;
    let mut inner = *cfg;
    inner.tol.gap_eps = (cfg.tol.gap_eps / (1.0 + alpha.dot(inst.b()).abs())).max(1e-15);
    let res = solve_mip(&lag, &inner)?;
    match finite_or_limit(&res)? {
        v if v == f64::INFINITY => Err(Error::OmegaInfeasible),
        v => Ok((v, res.solution)),
    }
}

/// `L(α) = inf{c'x + d'y + α'(b − Ax − Gy) : (x, y) ∈ M^≤(b)}`.
pub fn lagrangian_value(inst: &ConicMip, alpha: &Vector, cfg: &BnbConfig) -> Result<f64> {
    lagrangian_solve(inst, alpha, cfg).map(|(v, _)| v)
}

/// Supergradient ascent on `L` from `alpha0` with steps `1/√k` along
/// `b − Ax* − Gy*`. Returns the best multiplier seen.
pub fn maximize_lagrangian(
    inst: &ConicMip,
    alpha0: &Vector,
    iters: usize,
    cfg: &BnbConfig,
) -> Result<GeneratorCertificate> {
    let (l0, mut sol) = lagrangian_solve(inst, alpha0, cfg)?;
    if l0 == f64::NEG_INFINITY {
        return Err(Error::Invalid("L(alpha0) is -inf".into()));
    }
    let (mut best, mut best_val) = (alpha0.clone(), l0);
    let mut alpha = alpha0.clone();
    for k in 1..=iters {
        let slack = sol.y.rows(inst.n2(), inst.m()).into_owned();
        if slack.amax() == 0.0 {
            break; // zero supergradient: alpha is optimal
        }
        let trial = &alpha + slack * (1.0 / (k as f64).sqrt());
        match lagrangian_solve(inst, &trial, cfg) {
            Ok((v, s)) if v > f64::NEG_INFINITY => {
                alpha = trial;
                sol = s;
                if v > best_val {
                    best_val = v;
                    best = alpha.clone();
                }
            }
            Ok(_) => {} // stepped out of the domain of L; retry with a shorter step
            Err(e) => return Err(e),
        }
    }
    GeneratorCertificate::new(inst, best, CertificateOrigin::Lagrangian)
}

/// `α*` from the dual of `min c'x + d'y  s.t.  Ax + Gy = b, (x, y) ∈ hull`,
/// verified by `F_α*(b) ≥ z*` up to the gap tolerance.
pub fn alpha_star_from_hull(
    inst: &ConicMip,
    hull: &FiberHull,
    cfg: &BnbConfig,
) -> Result<GeneratorCertificate> {
    let p = hull_program(inst, hull)?;
    let (sol, report) = solve_continuous(&p, &cfg.tol)?;
    let attained = match sol.status {
        Status::Optimal => true,
        // an unattained dual still leaves large multipliers that may certify
        // within tolerance; the check below decides
        Status::IterLimit if report.primal_res <= cfg.tol.feas_eps => false,
        s => return Err(Error::Solver(s)),
    };
    let cert = GeneratorCertificate::new(inst, sol.dual_eq, CertificateOrigin::ConicDual)?;
    let z = finite_or_limit(&solve_mip(inst, cfg)?)?;
    let f = eval_generator(&cert, inst.b(), cfg)?;
    if !(f >= z - cfg.tol.gap_abs(z)) {
        return Err(if attained {
            Error::VerificationFailed {
                value: f,
                target: z,
            }
        } else {
            Error::NoStrongDuality { gap: z - f }
        });
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakDualityReport {
    /// `F_α(b)`.
    pub dual_value: f64,
    /// `c'x + d'y` at the supplied point.
    pub primal_value: f64,
    pub holds: bool,
}

/// `F_α(b) ≤ c'x + d'y` at a feasible point.
pub fn check_weak_duality(
    inst: &ConicMip,
    cert: &GeneratorCertificate,
    xy: &Solution,
    cfg: &BnbConfig,
) -> Result<WeakDualityReport> {
    point_check(inst, &xy.x, &xy.y, &cfg.tol)?;
    let primal = inst.objective_value(&xy.x, &xy.y);
    let dual = eval_generator(cert, inst.b(), cfg)?;
    Ok(WeakDualityReport {
        dual_value: dual,
        primal_value: primal,
        holds: dual <= primal + cfg.tol.gap_abs(primal),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualFeasibilityReport {
    pub holds: bool,
    /// Largest `F_α(Au + Gv) − (c'u + d'v)` over the generators, and `|F_α(0)|`.
    pub worst_violation: f64,
    /// `F_α(0)`.
    pub value_at_zero: f64,
    pub generators_checked: usize,
}

/// `F_α(0) = 0` and `F_α(Au + Gv) ≤ c'u + d'v` for every listed generator.
pub fn check_dual_feasibility(
    inst: &ConicMip,
    cert: &GeneratorCertificate,
    gens: &GeneratingSet,
    cfg: &BnbConfig,
) -> Result<DualFeasibilityReport> {
    let f0 = eval_generator(cert, &Vector::zeros(inst.m()), cfg)?;
    let mut holds = f0.abs() <= cfg.tol.gap_abs(0.0);
    let mut worst = f0.abs();
    for (u, v) in gens.points() {
        monoid_check(inst, u, v, &cfg.tol)?;
        let omega = inst.a() * u + inst.g() * v;
        let lhs = eval_generator(cert, &omega, cfg)?;
        let rhs = inst.objective_value(u, v);
        let viol = lhs - rhs;
        worst = worst.max(viol);
        holds &= viol <= cfg.tol.gap_abs(rhs);
    }
    Ok(DualFeasibilityReport {
        holds,
        worst_violation: worst,
        value_at_zero: f0,
        generators_checked: gens.len(),
    })
}

/// `F_α(Ax + Gy) = c'x + d'y` within the gap tolerance.
pub fn check_complementary_slackness(
    inst: &ConicMip,
    cert: &GeneratorCertificate,
    xy: &Solution,
    cfg: &BnbConfig,
) -> Result<bool> {
    point_check(inst, &xy.x, &xy.y, &cfg.tol)?;
    let omega = inst.a() * &xy.x + inst.g() * &xy.y;
    let obj = inst.objective_value(&xy.x, &xy.y);
    let f = eval_generator(cert, &omega, cfg)?;
    Ok((f - obj).abs() <= cfg.tol.gap_abs(obj))
}
