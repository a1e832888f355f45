//! Primal-dual interior-point method on the homogeneous self-dual embedding of
//!
//! ```text
//! min c'x  s.t.  Ax = b,  Gx + s = h,  s in K     (K a product of NonNeg and Soc)
//! ```
//!
//! Each iteration factors the quasi-definite KKT matrix once and uses a
//! Mehrotra predictor-corrector step. Linear solves are refined against the
//! unregularized matrix.

use nalgebra::linalg::LU;
use nalgebra::Dyn;

use super::cone_ops::{self, Scaling, StdCone};
use crate::model::{Matrix, Tol, Vector};

#[derive(Debug, Clone)]
pub(crate) struct StdForm {
    pub c: Vector,
    pub a: Matrix,
    pub b: Vector,
    pub g: Matrix,
    pub h: Vector,
    pub cones: Vec<StdCone>,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    /// For `Optimal`/`IterLimit` the best iterate; for `Unbounded` a ray with `c'x = -1`.
    pub x: Vector,
    /// Multipliers of `Ax = b`; for `Infeasible` a Farkas ray with `b'y + h'z = -1`.
    pub y: Vector,
    pub z: Vector,
    #[allow(dead_code)] // read by tests
    pub s: Vector,
    pub iterations: usize,
}

const STEP_FRACTION: f64 = 0.99;
/// Iterations allowed after the requested tolerances are met while chasing
/// tighter residuals.
const POLISH_ITERS: usize = 12;
const STRICT: f64 = 1e-14;

/// Factored Newton system in the scaled dual `ẑ = W z`:
///
/// ```text
/// [ 0       A'  (W⁻¹G)' ] [x]   [r_x     ]
/// [ A       0   0       ] [y] = [r_y     ]
/// [ W⁻¹G    0   -I      ] [ẑ]   [W⁻¹ r_z ]
/// ```
///
/// which is equivalent to the usual `G x − W² z = r_z` block but has
/// condition growing like `1/μ` rather than `1/μ²`.
struct Kkt {
    k0: Matrix,
    /// `W⁻¹ h`, so that `h'z = hw'ẑ`.
    hw: Vector,
    /// Symmetric equilibration: `lu` factors `D (K0 + reg) D`.
    d: Vector,
    lu: LU<f64, Dyn, Dyn>,
}

impl Kkt {
    fn raw_solve(&self, rhs: &Vector) -> Option<Vector> {
        let mut t = self.lu.solve(&rhs.component_mul(&self.d))?;
        t.component_mul_assign(&self.d);
        Some(t)
    }

    /// Solves for `(x, y, ẑ)`; the last block of `rhs` is already `W⁻¹ r_z`.
    fn solve(&self, rhs: &Vector) -> Option<Vector> {
        let mut sol = self.raw_solve(&rhs)?;
        let scale = 1.0 + rhs.amax();
        let mut err = (rhs - &self.k0 * &sol).amax();
        for _ in 0..10 {
            if err <= 1e-15 * scale {
                break;
            }
            let corr = self.raw_solve(&(rhs - &self.k0 * &sol))?;
            let cand = &sol + corr;
            let cerr = (rhs - &self.k0 * &cand).amax();
            if !(cerr < err) {
                break;
            }
            sol = cand;
            err = cerr;
        }
        if sol.iter().all(|v| v.is_finite()) {
            Some(sol)
        } else {
            None
        }
    }
}

struct Metrics {
    pres: f64,
    dres: f64,
    relgap: f64,
}

impl Metrics {
    fn merit(&self, tol: &Tol) -> f64 {
        (self.pres / tol.feas_eps)
            .max(self.dres / tol.feas_eps)
            .max(self.relgap / tol.dual_eps)
    }

    fn converged(&self, tol: &Tol) -> bool {
        self.pres <= tol.feas_eps && self.dres <= tol.feas_eps && self.relgap <= tol.dual_eps
    }

    fn strict(&self) -> bool {
        self.pres <= STRICT && self.dres <= STRICT && self.relgap <= STRICT
    }
}

pub(crate) struct Ipm<'a> {
    p: &'a StdForm,
    tol: Tol,
    max_iter: usize,
    nb: f64,
    nh: f64,
    nc: f64,
}

struct Iterate {
    x: Vector,
    y: Vector,
    z: Vector,
    s: Vector,
    tau: f64,
    kappa: f64,
}

struct Direction {
    x: Vector,
    y: Vector,
    z: Vector,
    s: Vector,
    tau: f64,
    kappa: f64,
}

impl<'a> Ipm<'a> {
    pub(crate) fn new(p: &'a StdForm, tol: Tol, max_iter: usize) -> Self {
        Ipm {
            p,
            tol,
            max_iter,
            nb: p.b.amax(),
            nh: p.h.amax(),
            nc: p.c.amax(),
        }
    }

    fn metrics(&self, it: &Iterate) -> Metrics {
        let p = self.p;
        let t = it.tau;
        let x = &it.x / t;
        let y = &it.y / t;
        let z = &it.z / t;
        let s = &it.s / t;
        let pr1 = if p.b.is_empty() {
            0.0
        } else {
            (&p.a * &x - &p.b).amax()
        };
        let pr2 = if p.h.is_empty() {
            0.0
        } else {
            (&p.g * &x + &s - &p.h).amax()
        };
        let pres = (pr1 / (1.0 + self.nb)).max(pr2 / (1.0 + self.nh));
        let dvec = p.a.tr_mul(&y) + p.g.tr_mul(&z) + &p.c;
        let dres = if dvec.is_empty() {
            0.0
        } else {
            dvec.amax() / (1.0 + self.nc)
        };
        let pcost = p.c.dot(&x) + p.offset;
        let dcost = -p.b.dot(&y) - p.h.dot(&z) + p.offset;
        let gap = s.dot(&z).abs().max((pcost - dcost).abs());
        Metrics {
            pres,
            dres,
            relgap: gap / (1.0 + pcost.abs()),
        }
    }

    fn infeasibility_ratio(&self, it: &Iterate) -> Option<f64> {
        let p = self.p;
        let bt = p.b.dot(&it.y) + p.h.dot(&it.z);
        if bt >= 0.0 {
            return None;
        }
        let r = p.a.tr_mul(&it.y) + p.g.tr_mul(&it.z);
        let res = if r.is_empty() { 0.0 } else { r.amax() };
        Some(res / -bt)
    }

    fn unboundedness_ratio(&self, it: &Iterate) -> Option<f64> {
        let p = self.p;
        let ct = p.c.dot(&it.x);
        if ct >= 0.0 {
            return None;
        }
        let r1 = if p.b.is_empty() {
            0.0
        } else {
            (&p.a * &it.x).amax()
        };
        let r2 = if p.h.is_empty() {
            0.0
        } else {
            (&p.g * &it.x + &it.s).amax()
        };
        Some(r1.max(r2) / -ct)
    }

    fn factor(&self, sc: &Scaling) -> Option<Kkt> {
        let p = self.p;
        let (n, m, q) = (p.c.len(), p.b.len(), p.h.len());
        let dim = n + m + q;
        let mut wg = Matrix::zeros(q, n);
        for j in 0..n {
            wg.set_column(j, &sc.apply(&p.g.column(j).into_owned(), true));
        }
        let mut k0 = Matrix::zeros(dim, dim);
        k0.view_mut((n, 0), (m, n)).copy_from(&p.a);
        k0.view_mut((0, n), (n, m)).copy_from(&p.a.transpose());
        k0.view_mut((n + m, 0), (q, n)).copy_from(&wg);
        k0.view_mut((0, n + m), (n, q)).copy_from(&wg.transpose());
        for i in n + m..dim {
            k0[(i, i)] = -1.0;
        }
        let scale = 1.0 + p.a.amax().max(p.g.amax());
        let mut reg = 1e-13 * scale;
        for _ in 0..6 {
            let mut k = k0.clone();
            for i in 0..n {
                k[(i, i)] += reg;
            }
            for i in n..n + m {
                k[(i, i)] -= reg;
            }
            let d = ruiz(&k);
            for i in 0..dim {
                for j in 0..dim {
                    k[(i, j)] *= d[i] * d[j];
                }
            }
            let lu = k.lu();
            if lu.is_invertible() {
                return Some(Kkt {
                    k0,
                    hw: sc.apply(&p.h, true),
                    d,
                    lu,
                });
            }
            reg *= 100.0;
        }
        None
    }

    /// Solves the Newton system for residuals `d` (scaled by the caller),
    /// complementarity right-hand side `ds`, and `dkappa`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate,
        kkt: &Kkt,
        sc: &Scaling,
        sol1: &Vector,
        d: (&Vector, &Vector, &Vector, f64),
        ds: &Vector,
        dkappa: f64,
    ) -> Option<Direction> {
        let p = self.p;
        let (n, m, q) = (p.c.len(), p.b.len(), p.h.len());
        let cones = &p.cones;
        let lds = cone_ops::jordan_div(cones, &sc.lambda, ds);
        let mut rhs = Vector::zeros(n + m + q);
        rhs.rows_mut(0, n).copy_from(&(-d.0));
        rhs.rows_mut(n, m).copy_from(&(-d.1));
        rhs.rows_mut(n + m, q)
            .copy_from(&(&lds - sc.apply(d.2, true)));
        let sol2 = kkt.solve(&rhs)?;
        let (x1, y1, z1) = (sol1.rows(0, n), sol1.rows(n, m), sol1.rows(n + m, q));
        let (x2, y2, z2) = (sol2.rows(0, n), sol2.rows(n, m), sol2.rows(n + m, q));
        let num = -d.3 + dkappa / it.tau - p.c.dot(&x2) - p.b.dot(&y2) - kkt.hw.dot(&z2);
        let den = p.c.dot(&x1) + p.b.dot(&y1) + kkt.hw.dot(&z1) - it.kappa / it.tau;
        let dtau = num / den;
        let dx = x2 + x1 * dtau;
        let dy = y2 + y1 * dtau;
        let wdz: Vector = z2 + z1 * dtau;
        let dz = sc.apply(&wdz, true);
        let ds_vec = -sc.apply(&(&lds + wdz), false);
        let dkap = -(dkappa + it.kappa * dtau) / it.tau;
        let dir = Direction {
            x: dx.into_owned(),
            y: dy.into_owned(),
            z: dz,
            s: ds_vec,
            tau: dtau,
            kappa: dkap,
        };
        if dir.tau.is_finite() && dir.kappa.is_finite() && dir.s.iter().all(|v| v.is_finite()) {
            Some(dir)
        } else {
            None
        }
    }

    fn step_length(&self, it: &Iterate, dir: &Direction) -> f64 {
        let cones = &self.p.cones;
        let mut a =
            cone_ops::max_step(cones, &it.s, &dir.s).min(cone_ops::max_step(cones, &it.z, &dir.z));
        if dir.tau < 0.0 {
            a = a.min(-it.tau / dir.tau);
        }
        if dir.kappa < 0.0 {
            a = a.min(-it.kappa / dir.kappa);
        }
        a
    }

    pub(crate) fn run(&self) -> IpmResult {
        let p = self.p;
        let (n, m, q) = (p.c.len(), p.b.len(), p.h.len());
        let cones = &p.cones;
        let start = start_point(cones, q);
        let mut it = Iterate {
            x: Vector::zeros(n),
            y: Vector::zeros(m),
            z: start.clone(),
            s: start,
            tau: 1.0,
            kappa: 1.0,
        };
        let degree = cone_ops::degree(cones) as f64;
        let e = cone_ops::identity(cones, q);
        let mut best: Option<(f64, Iterate)> = None;
        let mut polish = 0usize;
        let mut stagnant = 0usize;
        let mut iterations = 0usize;
        let mut certificate: Option<IpmStatus> = None;

        for iter in 0..=self.max_iter {
            iterations = iter;
            let met = self.metrics(&it);
            let merit = met.merit(&self.tol);
            if !merit.is_finite() {
                break;
            }
            let improved = best.as_ref().map_or(true, |(b, _)| merit < *b);
            if improved {
                if best.as_ref().map_or(false, |(b, _)| merit > 0.5 * *b) {
                    stagnant += 1;
                } else {
                    stagnant = 0;
                }
                best = Some((merit, clone_iterate(&it)));
            } else {
                stagnant += 1;
            }
            if met.converged(&self.tol) {
                certificate = None;
                if met.strict() || polish >= POLISH_ITERS || stagnant >= 4 {
                    break;
                }
                polish += 1;
            } else if best.as_ref().map_or(true, |(b, _)| *b > 1.0) {
                let infeas = self
                    .infeasibility_ratio(&it)
                    .is_some_and(|r| r <= self.tol.feas_eps);
                let unb = self
                    .unboundedness_ratio(&it)
                    .is_some_and(|r| r <= self.tol.feas_eps);
                if infeas && it.kappa > it.tau * 1e-3 {
                    certificate = Some(IpmStatus::Infeasible);
                    break;
                }
                if unb && it.kappa > it.tau * 1e-3 {
                    certificate = Some(IpmStatus::Unbounded);
                    break;
                }
                if stagnant >= 30 {
                    break;
                }
            }
            if iter == self.max_iter {
                break;
            }

            let Some(sc) = Scaling::new(cones, &it.s, &it.z) else {
                break;
            };
            let Some(kkt) = self.factor(&sc) else { break };
            let mut rhs1 = Vector::zeros(n + m + q);
            rhs1.rows_mut(0, n).copy_from(&(-&p.c));
            rhs1.rows_mut(n, m).copy_from(&p.b);
            rhs1.rows_mut(n + m, q).copy_from(&kkt.hw);
            let Some(sol1) = kkt.solve(&rhs1) else { break };

            let rx = p.a.tr_mul(&it.y) + p.g.tr_mul(&it.z) + &p.c * it.tau;
            let ry = &p.a * &it.x - &p.b * it.tau;
            let rz = &it.s + &p.g * &it.x - &p.h * it.tau;
            let rt = it.kappa + p.c.dot(&it.x) + p.b.dot(&it.y) + p.h.dot(&it.z);
            let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (degree + 1.0);

            let ll = cone_ops::jordan_product(cones, &sc.lambda, &sc.lambda);
            let Some(aff) = self.direction(
                &it,
                &kkt,
                &sc,
                &sol1,
                (&rx, &ry, &rz, rt),
                &ll,
                it.tau * it.kappa,
            ) else {
                break;
            };
            let alpha_aff = self.step_length(&it, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            let ws = sc.apply(&aff.s, true);
            let wz = sc.apply(&aff.z, false);
            let ds = ll + cone_ops::jordan_product(cones, &ws, &wz) - &e * (sigma * mu);
            let dk = it.tau * it.kappa + aff.tau * aff.kappa - sigma * mu;
            let f = 1.0 - sigma;
            let Some(dir) = self.direction(
                &it,
                &kkt,
                &sc,
                &sol1,
                (&(&rx * f), &(&ry * f), &(&rz * f), rt * f),
                &ds,
                dk,
            ) else {
                break;
            };
            let alpha = (STEP_FRACTION * self.step_length(&it, &dir)).min(1.0);
            if !(alpha > 1e-12) {
                break;
            }
            it.x += &dir.x * alpha;
            it.y += &dir.y * alpha;
            it.z += &dir.z * alpha;
            it.s += &dir.s * alpha;
            it.tau += dir.tau * alpha;
            it.kappa += dir.kappa * alpha;
            // keep the embedding scale bounded
            let norm = it.tau.max(it.kappa).max(1e-300);
            if !(1e-100..=1e100).contains(&norm) {
                break;
            }
        }

        match certificate {
            Some(IpmStatus::Infeasible) => {
                let bt = -(p.b.dot(&it.y) + p.h.dot(&it.z));
                IpmResult {
                    status: IpmStatus::Infeasible,
                    x: Vector::zeros(n),
                    y: &it.y / bt,
                    z: &it.z / bt,
                    s: Vector::zeros(q),
                    iterations,
                }
            }
            Some(IpmStatus::Unbounded) => {
                let ct = -p.c.dot(&it.x);
                IpmResult {
                    status: IpmStatus::Unbounded,
                    x: &it.x / ct,
                    y: Vector::zeros(m),
                    z: Vector::zeros(q),
                    s: &it.s / ct,
                    iterations,
                }
            }
            _ => {
                let Some((_, b)) = best else {
                    return IpmResult {
                        status: IpmStatus::IterLimit,
                        x: Vector::zeros(n),
                        y: Vector::zeros(m),
                        z: Vector::zeros(q),
                        s: Vector::zeros(q),
                        iterations,
                    };
                };
                let status = if self.metrics(&b).converged(&self.tol) {
                    IpmStatus::Optimal
                } else {
                    IpmStatus::IterLimit
                };
                IpmResult {
                    status,
                    x: &b.x / b.tau,
                    y: &b.y / b.tau,
                    z: &b.z / b.tau,
                    s: &b.s / b.tau,
                    iterations,
                }
            }
        }
    }
}

/// Diagonal `d` making the rows of `d K d` close to unit max-norm.
fn ruiz(k: &Matrix) -> Vector {
    let n = k.nrows();
    let mut d = Vector::from_element(n, 1.0);
    for _ in 0..10 {
        let mut worst = 0.0f64;
        let mut step = Vector::from_element(n, 1.0);
        for i in 0..n {
            let r = (0..n)
                .map(|j| (k[(i, j)] * d[i] * d[j]).abs())
                .fold(0.0, f64::max);
            if r > 0.0 {
                step[i] = 1.0 / r.sqrt();
                worst = worst.max((1.0 - r).abs());
            }
        }
        d.component_mul_assign(&step);
        if worst < 0.1 {
            break;
        }
    }
    d
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        x: it.x.clone(),
        y: it.y.clone(),
        z: it.z.clone(),
        s: it.s.clone(),
        tau: it.tau,
        kappa: it.kappa,
    }
}

/// Canonical interior start: ones on NonNeg coordinates, `(2, 0, ..)` on Soc blocks.
fn start_point(cones: &[StdCone], q: usize) -> Vector {
    let mut v = Vector::zeros(q);
    for (off, c) in cone_ops::offsets(cones) {
        match c {
            StdCone::NonNeg(k) => v.rows_mut(off, k).fill(1.0),
            StdCone::Soc(_) => v[off] = 2.0,
        }
    }
    v
}

/// Runs the IPM on a copy with `c` and `(b, h)` scaled to unit max-norm.
/// Without this a large objective swamps the primal part of every KKT solve.
pub(crate) fn solve(p: &StdForm, tol: &Tol, max_iter: usize) -> IpmResult {
    let unit = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
    let cs = unit(p.c.amax());
    let bs = unit(p.b.amax().max(p.h.amax()));
    let scaled = StdForm {
        c: &p.c / cs,
        a: p.a.clone(),
        b: &p.b / bs,
        g: p.g.clone(),
        h: &p.h / bs,
        cones: p.cones.clone(),
        offset: p.offset / (cs * bs),
    };
    let mut r = Ipm::new(&scaled, *tol, max_iter).run();
    match r.status {
        // rays keep their normalisation b'y + h'z = -1 and c'x = -1
        IpmStatus::Infeasible => {
            r.y /= bs;
            r.z /= bs;
        }
        IpmStatus::Unbounded => {
            r.x /= cs;
            r.s /= cs;
        }
        IpmStatus::Optimal | IpmStatus::IterLimit => {
            r.x *= bs;
            r.s *= bs;
            r.y *= cs;
            r.z *= cs;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], a: &[f64], b: &[f64]) -> StdForm {
        let n = c.len();
        let m = b.len();
        StdForm {
            c: Vector::from_column_slice(c),
            a: Matrix::from_row_slice(m, n, a),
            b: Vector::from_column_slice(b),
            g: -Matrix::identity(n, n),
            h: Vector::zeros(n),
            cones: vec![StdCone::NonNeg(n)],
            offset: 0.0,
        }
    }

    #[test]
    fn small_lp() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0  -> x = (1, 0), obj 1
        let p = lp(&[1.0, 2.0], &[1.0, 1.0], &[1.0]);
        let r = solve(&p, &Tol::default(), 200);
        assert_eq!(r.status, IpmStatus::Optimal);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-8 && r.x[1].abs() < 1e-8,
            "{:?}",
            r.x
        );
        // y is the multiplier in A'y + G'z + c = 0
        assert!((r.y[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_lp() {
        // x1 + x2 = -1 with x >= 0
        let p = lp(&[1.0, 1.0], &[1.0, 1.0], &[-1.0]);
        let r = solve(&p, &Tol::default(), 200);
        assert_eq!(r.status, IpmStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        // min -x1 s.t. x1 - x2 = 0, x >= 0
        let p = lp(&[-1.0, 0.0], &[1.0, -1.0], &[0.0]);
        let r = solve(&p, &Tol::default(), 200);
        assert_eq!(r.status, IpmStatus::Unbounded);
    }

    #[test]
    fn small_socp() {
        // min t2 s.t. (1, t2, t3) in Soc with t3 = 0.6 -> t2 = -0.8
        let p = StdForm {
            c: Vector::from_column_slice(&[1.0, 0.0]),
            a: Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
            b: Vector::from_column_slice(&[0.6]),
            g: Matrix::from_row_slice(3, 2, &[0.0, 0.0, -1.0, 0.0, 0.0, -1.0]),
            h: Vector::from_column_slice(&[1.0, 0.0, 0.0]),
            cones: vec![StdCone::Soc(3)],
            offset: 0.0,
        };
        let r = solve(&p, &Tol::default(), 200);
        assert_eq!(r.status, IpmStatus::Optimal);
        assert!((r.x[0] + 0.8).abs() < 1e-8, "{:?}", r.x);
        assert!((&p.g * &r.x + &r.s - &p.h).amax() < 1e-8);
        assert!(r.s[0] >= r.s.rows(1, 2).norm() - 1e-9);
    }
}
