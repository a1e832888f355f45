//! Continuous conic solver.
//!
//! A [`ContinuousProgram`] is the relaxation of a [`ConicMip`] (integrality
//! dropped), optionally extended with auxiliary variables `w`, extra conic rows
//! `Pi x + Phi y + Psi w - pi in C`, extra equality rows and variable bounds.
//! It is lowered to the standard form `min c'x, Ax = b, Gx + s = h, s in K`,
//! presolved, and handed to a homogeneous self-dual interior-point method.

pub(crate) mod cone_ops;
pub(crate) mod ipm;
mod lower;

use crate::cones::{self, ConeSpec};
use crate::error::{Error, Result};
use crate::model::{
    check_finite_mat, check_finite_vec, check_len, concat, ConicMip, Matrix, RhsSense, Solution,
    Status, Tol, Vector,
};

/// Iteration limit of one interior-point solve.
pub const DEFAULT_MAX_ITER: usize = 200;

/// Rows `Pi x + Phi y + Psi w - pi in C` and `Pi_e x + Phi_e y + Psi_e w = pi_e`
/// over auxiliary variables `w` of dimension `n_aux`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraRows {
    pub n_aux: usize,
    pub pi: Matrix,
    pub phi: Matrix,
    pub psi: Matrix,
    pub rhs: Vector,
    pub cone: ConeSpec,
    pub eq_pi: Matrix,
    pub eq_phi: Matrix,
    pub eq_psi: Matrix,
    pub eq_rhs: Vector,
}

impl ExtraRows {
    /// Conic rows only, no equality rows.
    pub fn conic(pi: Matrix, phi: Matrix, psi: Matrix, rhs: Vector, cone: ConeSpec) -> Self {
        let (n1, n2, n3) = (pi.ncols(), phi.ncols(), psi.ncols());
        ExtraRows {
            n_aux: n3,
            pi,
            phi,
            psi,
            rhs,
            cone,
            eq_pi: Matrix::zeros(0, n1),
            eq_phi: Matrix::zeros(0, n2),
            eq_psi: Matrix::zeros(0, n3),
            eq_rhs: Vector::zeros(0),
        }
    }

    pub fn n_conic(&self) -> usize {
        self.rhs.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub(crate) fn validate(&self, n1: usize, n2: usize) -> Result<()> {
        let (k, e, n3) = (self.n_conic(), self.n_eq(), self.n_aux);
        check_len("rows of Pi", k, self.pi.nrows())?;
        check_len("rows of Phi", k, self.phi.nrows())?;
        check_len("rows of Psi", k, self.psi.nrows())?;
        check_len("columns of Pi", n1, self.pi.ncols())?;
        check_len("columns of Phi", n2, self.phi.ncols())?;
        check_len("columns of Psi", n3, self.psi.ncols())?;
        check_len("extra cone dimension", k, self.cone.dim())?;
        check_len("extra equality rows", e, self.eq_pi.nrows())?;
        check_len("extra equality rows", e, self.eq_phi.nrows())?;
        check_len("extra equality rows", e, self.eq_psi.nrows())?;
        check_len("extra equality columns", n1, self.eq_pi.ncols())?;
        check_len("extra equality columns", n2, self.eq_phi.ncols())?;
        check_len("extra equality columns", n3, self.eq_psi.ncols())?;
        if self.cone.has_zero_block() {
            return Err(Error::InvalidCone(
                "extra rows need a cone without zero blocks".into(),
            ));
        }
        for (m, name) in [
            (&self.pi, "Pi"),
            (&self.phi, "Phi"),
            (&self.psi, "Psi"),
            (&self.eq_pi, "Pi_e"),
            (&self.eq_phi, "Phi_e"),
            (&self.eq_psi, "Psi_e"),
        ] {
            check_finite_mat(m, name)?;
        }
        check_finite_vec(&self.rhs, "pi")?;
        check_finite_vec(&self.eq_rhs, "pi_e")
    }

    /// Conic row values `Pi x + Phi y + Psi w - pi`.
    pub fn conic_slack(&self, x: &Vector, y: &Vector, w: &Vector) -> Vector {
        &self.pi * x + &self.phi * y + &self.psi * w - &self.rhs
    }

    /// Equality residual `Pi_e x + Phi_e y + Psi_e w - pi_e`.
    pub fn eq_residual(&self, x: &Vector, y: &Vector, w: &Vector) -> Vector {
        &self.eq_pi * x + &self.eq_phi * y + &self.eq_psi * w - &self.eq_rhs
    }
}

/// The continuous relaxation of a conic MIP with optional extra rows and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousProgram {
    pub(crate) a: Matrix,
    pub(crate) g: Matrix,
    pub(crate) b: Vector,
    pub(crate) c: Vector,
    pub(crate) d: Vector,
    pub(crate) cone: ConeSpec,
    pub(crate) cone_order: Vec<usize>,
    pub(crate) sense: RhsSense,
    pub(crate) offset: f64,
    pub(crate) extra: Option<ExtraRows>,
    pub(crate) lower: Vector,
    pub(crate) upper: Vector,
    pub(crate) max_iter: usize,
}

impl ContinuousProgram {
    /// The relaxation of `inst` (integrality dropped).
    pub fn from_mip(inst: &ConicMip) -> Self {
        let n = inst.n1() + inst.n2();
        ContinuousProgram {
            a: inst.a.clone(),
            g: inst.g.clone(),
            b: inst.b.clone(),
            c: inst.c.clone(),
            d: inst.d.clone(),
            cone: inst.cone.clone(),
            cone_order: inst.cone_order.clone(),
            sense: inst.sense,
            offset: 0.0,
            extra: None,
            lower: Vector::from_element(n, f64::NEG_INFINITY),
            upper: Vector::from_element(n, f64::INFINITY),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn n1(&self) -> usize {
        self.c.len()
    }
    pub fn n2(&self) -> usize {
        self.d.len()
    }
    pub fn n3(&self) -> usize {
        self.extra.as_ref().map_or(0, |e| e.n_aux)
    }
    pub fn m(&self) -> usize {
        self.b.len()
    }
    pub fn n_total(&self) -> usize {
        self.n1() + self.n2() + self.n3()
    }
    pub fn offset(&self) -> f64 {
        self.offset
    }
    pub fn extra(&self) -> Option<&ExtraRows> {
        self.extra.as_ref()
    }
    pub fn sense(&self) -> RhsSense {
        self.sense
    }

    /// Replaces the objective by `c'x + d'y + offset`.
    pub fn with_objective(mut self, c: Vector, d: Vector, offset: f64) -> Result<Self> {
        check_len("c", self.n1(), c.len())?;
        check_len("d", self.n2(), d.len())?;
        check_finite_vec(&c, "c")?;
        check_finite_vec(&d, "d")?;
        if !offset.is_finite() {
            return Err(Error::NonFinite("objective offset"));
        }
        self.c = c;
        self.d = d;
        self.offset = offset;
        Ok(self)
    }

    pub fn with_sense(mut self, sense: RhsSense) -> Self {
        self.sense = sense;
        self
    }

    pub fn with_rhs(mut self, b: Vector) -> Result<Self> {
        check_len("right-hand side", self.m(), b.len())?;
        check_finite_vec(&b, "b")?;
        self.b = b;
        Ok(self)
    }

    /// Drops the cone on `(x, y)`; the extra rows then carry all conic structure.
    pub fn without_cone(mut self) -> Self {
        let n = self.n1() + self.n2();
        self.cone = ConeSpec::free(n);
        self.cone_order = (0..n).collect();
        self
    }

    pub fn with_extra(mut self, extra: ExtraRows) -> Result<Self> {
        extra.validate(self.n1(), self.n2())?;
        let n = self.n1() + self.n2();
        let mut lower = Vector::from_element(n + extra.n_aux, f64::NEG_INFINITY);
        let mut upper = Vector::from_element(n + extra.n_aux, f64::INFINITY);
        lower.rows_mut(0, n).copy_from(&self.lower.rows(0, n));
        upper.rows_mut(0, n).copy_from(&self.upper.rows(0, n));
        self.lower = lower;
        self.upper = upper;
        self.extra = Some(extra);
        Ok(self)
    }

    /// Bounds on `(x, y, w)`; infinite entries mean no bound.
    pub fn with_bounds(mut self, lower: Vector, upper: Vector) -> Result<Self> {
        check_len("lower bounds", self.n_total(), lower.len())?;
        check_len("upper bounds", self.n_total(), upper.len())?;
        if lower.iter().chain(upper.iter()).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("bounds"));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }
    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    /// Objective value at `(x, y)` including the offset.
    pub fn objective_value(&self, x: &Vector, y: &Vector) -> f64 {
        self.c.dot(x) + self.d.dot(y) + self.offset
    }
}

/// Residuals of a primal-dual pair, all relative to data magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub primal_res: f64,
    pub dual_res: f64,
    pub comp_gap: f64,
    pub iterations: usize,
}

/// Recomputes the KKT residuals of `sol` against `p` from scratch.
///
/// Primal: row residuals, cone and bound violations over `1 + max|rhs|`.
/// Dual: stationarity `cost - A'alpha - dual_cone - Pi'gamma - Pi_e'beta - bound`
/// plus dual-cone and sign violations, over `1 + max|cost|`.
/// Gap: `|primal objective - dual objective| / (1 + |primal objective|)`.
pub fn kkt_report(p: &ContinuousProgram, sol: &Solution, iterations: usize) -> KktReport {
    let (x, y, w) = (&sol.x, &sol.y, &sol.w);
    let xy = concat(x, y);
    let n = xy.len();
    let v = concat(&xy, w);
    let mut rhs_scale = p.b.amax_or0();
    let mut pres: f64 = 0.0;
    let row = &p.a * x + &p.g * y - &p.b;
    for r in row.iter() {
        pres = pres.max(match p.sense {
            RhsSense::Equal => r.abs(),
            RhsSense::LessEqual => r.max(0.0),
        });
    }
    let xy_cone = Vector::from_iterator(n, p.cone_order.iter().map(|&j| xy[j]));
    pres = pres.max(cones::violation(&p.cone, &xy_cone).unwrap_or(f64::INFINITY));
    if let Some(e) = &p.extra {
        rhs_scale = rhs_scale.max(e.rhs.amax_or0()).max(e.eq_rhs.amax_or0());
        let s = e.conic_slack(x, y, w);
        pres = pres.max(cones::violation(&e.cone, &s).unwrap_or(f64::INFINITY));
        pres = pres.max(e.eq_residual(x, y, w).amax_or0());
    }
    for j in 0..v.len() {
        pres = pres.max(p.lower[j] - v[j]).max(v[j] - p.upper[j]);
    }

    let cost = concat(&concat(&p.c, &p.d), &Vector::zeros(p.n3()));
    let mut stat = cost.clone();
    let ag_t_alpha = concat(&p.a.tr_mul(&sol.dual_eq), &p.g.tr_mul(&sol.dual_eq));
    {
        let mut head = stat.rows_mut(0, n);
        head -= &ag_t_alpha;
        head -= &sol.dual_cone;
    }
    let mut dviol: f64 = 0.0;
    let dual_cone_ordered =
        Vector::from_iterator(n, p.cone_order.iter().map(|&j| sol.dual_cone[j]));
    dviol = dviol
        .max(cones::violation(&cones::dual(&p.cone), &dual_cone_ordered).unwrap_or(f64::INFINITY));
    if p.sense == RhsSense::LessEqual {
        dviol = dviol.max(sol.dual_eq.max().max(0.0));
    }
    let mut dobj = p.b.dot(&sol.dual_eq) + p.offset;
    if let Some(e) = &p.extra {
        let g = &sol.dual_aux;
        let be = &sol.dual_aux_eq;
        let mut t = concat(&concat(&e.pi.tr_mul(g), &e.phi.tr_mul(g)), &e.psi.tr_mul(g));
        t += concat(
            &concat(&e.eq_pi.tr_mul(be), &e.eq_phi.tr_mul(be)),
            &e.eq_psi.tr_mul(be),
        );
        stat -= t;
        dviol = dviol.max(cones::violation(&cones::dual(&e.cone), g).unwrap_or(f64::INFINITY));
        dobj += e.rhs.dot(g) + e.eq_rhs.dot(be);
    }
    stat -= &sol.dual_bound;
    for j in 0..v.len() {
        let db = sol.dual_bound[j];
        if db > 0.0 {
            if p.lower[j].is_finite() {
                dobj += db * p.lower[j];
            } else {
                dviol = dviol.max(db);
            }
        } else if db < 0.0 {
            if p.upper[j].is_finite() {
                dobj += db * p.upper[j];
            } else {
                dviol = dviol.max(-db);
            }
        }
    }
    let pobj = cost.dot(&v) + p.offset;
    let cscale = cost.amax_or0();
    KktReport {
        primal_res: pres.max(0.0) / (1.0 + rhs_scale),
        dual_res: stat.amax_or0().max(dviol) / (1.0 + cscale),
        comp_gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        iterations,
    }
}

trait AmaxOr0 {
    fn amax_or0(&self) -> f64;
}

impl AmaxOr0 for Vector {
    fn amax_or0(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.amax()
        }
    }
}

/// Solves `p`. Non-optimal outcomes are reported through `Solution::status`
/// (`IterLimit` when the iteration limit is reached without convergence).
pub fn solve_continuous(p: &ContinuousProgram, tol: &Tol) -> Result<(Solution, KktReport)> {
    tol.validate()?;
    let (sol, iterations) = lower::solve(p, tol);
    let report = kkt_report(p, &sol, iterations);
    Ok((sol, report))
}

/// Multipliers `alpha` of the main rows at an optimal primal-dual pair.
pub fn solve_for_dual(p: &ContinuousProgram, tol: &Tol) -> Result<Vector> {
    let (sol, report) = solve_continuous(p, tol)?;
    match sol.status {
        Status::Optimal => Ok(sol.dual_eq),
        Status::IterLimit if report.primal_res <= tol.feas_eps => Err(Error::NoStrongDuality {
            gap: report.comp_gap.max(report.dual_res),
        }),
        s => Err(Error::Solver(s)),
    }
}
