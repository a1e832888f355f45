//! Lowering of a [`ContinuousProgram`] to standard form, a light presolve,
//! and recovery of primal and dual values in the caller's variables.
//!
//! Rows live in standard orientation: equality rows `a'v = r`, conic rows
//! `g'v + s = r` with `s` in a NonNeg or Soc block. Every row remembers where
//! it came from (`Origin`) and with which sign its multiplier maps back.
//!
//! Presolve removes fixed variables, constant rows, dominated single-variable
//! inequalities, zero-head second-order blocks (whose tails must vanish),
//! singleton equality rows and dependent equality rows. Multipliers of removed
//! rows are recovered from column stationarity in reverse order of removal.

use super::cone_ops::StdCone;
use super::ipm::{self, IpmStatus, StdForm};
use super::ContinuousProgram;
use crate::cones::Cone;
use crate::model::{Matrix, RhsSense, Solution, Status, Tol, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    Main(usize),
    Cone(usize),
    Aux(usize),
    AuxEq(usize),
    Bound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Eq,
    NonNeg,
    Soc(usize),
}

#[derive(Debug, Clone)]
struct Row {
    coef: Vec<(usize, f64)>,
    rhs: f64,
    origin: (Origin, f64),
    kind: Kind,
}

#[derive(Debug, Clone, Copy)]
enum FixCause {
    EqRow(usize),
    Bounds {
        lo: Option<usize>,
        hi: Option<usize>,
    },
}

struct Infeasible;

struct Presolve<'a> {
    tol: &'a Tol,
    cost: Vec<f64>,
    rows: Vec<Row>,
    work: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    alive: Vec<bool>,
    socs: Vec<Vec<usize>>,
    soc_alive: Vec<bool>,
    fixed: Vec<Option<f64>>,
    fixes: Vec<(usize, FixCause)>,
    head_from_tails: Vec<(usize, Vec<usize>)>,
    ray_vars: Vec<usize>,
    rhs_scale: f64,
}

fn sparse(row: impl Iterator<Item = f64>) -> Vec<(usize, f64)> {
    row.enumerate().filter(|(_, v)| *v != 0.0).collect()
}

impl<'a> Presolve<'a> {
    fn build(p: &ContinuousProgram, tol: &'a Tol) -> Self {
        let (n1, n2, n3) = (p.n1(), p.n2(), p.n3());
        let n = n1 + n2 + n3;
        let mut cost = vec![0.0; n];
        for j in 0..n1 {
            cost[j] = p.c[j];
        }
        for j in 0..n2 {
            cost[n1 + j] = p.d[j];
        }
        let mut pre = Presolve {
            tol,
            cost,
            rows: Vec::new(),
            work: Vec::new(),
            rhs: Vec::new(),
            alive: Vec::new(),
            socs: Vec::new(),
            soc_alive: Vec::new(),
            fixed: vec![None; n],
            fixes: Vec::new(),
            head_from_tails: Vec::new(),
            ray_vars: Vec::new(),
            rhs_scale: 0.0,
        };

        for i in 0..p.m() {
            let coef = sparse(p.a.row(i).iter().chain(p.g.row(i).iter()).copied());
            let kind = match p.sense {
                RhsSense::Equal => Kind::Eq,
                RhsSense::LessEqual => Kind::NonNeg,
            };
            pre.push(coef, p.b[i], (Origin::Main(i), -1.0), kind);
        }
        let mut k = 0;
        for b in p.cone.blocks() {
            match *b {
                Cone::Free(d) | Cone::Zero(d) => k += d,
                Cone::NonNeg(d) => {
                    for _ in 0..d {
                        let j = p.cone_order[k];
                        pre.push(vec![(j, -1.0)], 0.0, (Origin::Cone(k), 1.0), Kind::NonNeg);
                        k += 1;
                    }
                }
                Cone::Soc(d) => {
                    let id = pre.socs.len();
                    pre.socs.push(Vec::new());
                    pre.soc_alive.push(true);
                    for _ in 0..d {
                        let j = p.cone_order[k];
                        let r =
                            pre.push(vec![(j, -1.0)], 0.0, (Origin::Cone(k), 1.0), Kind::Soc(id));
                        pre.socs[id].push(r);
                        k += 1;
                    }
                }
            }
        }
        if let Some(e) = &p.extra {
            let mut i = 0;
            for b in e.cone.blocks() {
                let d = b.dim();
                let soc = matches!(b, Cone::Soc(_)).then(|| {
                    pre.socs.push(Vec::new());
                    pre.soc_alive.push(true);
                    pre.socs.len() - 1
                });
                for _ in 0..d {
                    if !matches!(b, Cone::Free(_)) {
                        let coef = sparse(
                            e.pi.row(i)
                                .iter()
                                .chain(e.phi.row(i).iter())
                                .chain(e.psi.row(i).iter())
                                .map(|v| -v),
                        );
                        let kind = soc.map_or(Kind::NonNeg, Kind::Soc);
                        let r = pre.push(coef, -e.rhs[i], (Origin::Aux(i), 1.0), kind);
                        if let Some(id) = soc {
                            pre.socs[id].push(r);
                        }
                    }
                    i += 1;
                }
            }
            for i in 0..e.n_eq() {
                let coef = sparse(
                    e.eq_pi
                        .row(i)
                        .iter()
                        .chain(e.eq_phi.row(i).iter())
                        .chain(e.eq_psi.row(i).iter())
                        .copied(),
                );
                pre.push(coef, e.eq_rhs[i], (Origin::AuxEq(i), -1.0), Kind::Eq);
            }
        }
        for j in 0..n {
            if p.lower[j].is_finite() {
                pre.push(
                    vec![(j, -1.0)],
                    -p.lower[j],
                    (Origin::Bound(j), 1.0),
                    Kind::NonNeg,
                );
            }
            if p.upper[j].is_finite() {
                pre.push(
                    vec![(j, 1.0)],
                    p.upper[j],
                    (Origin::Bound(j), -1.0),
                    Kind::NonNeg,
                );
            }
        }
        pre.rhs_scale = pre.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        pre
    }

    fn push(
        &mut self,
        coef: Vec<(usize, f64)>,
        rhs: f64,
        origin: (Origin, f64),
        kind: Kind,
    ) -> usize {
        self.work.push(coef.clone());
        self.rhs.push(rhs);
        self.alive.push(true);
        self.rows.push(Row {
            coef,
            rhs,
            origin,
            kind,
        });
        self.rows.len() - 1
    }

    fn feas(&self, scale: f64) -> f64 {
        self.tol.feas_eps * (1.0 + scale.abs().max(self.rhs_scale))
    }

    fn fix(&mut self, j: usize, val: f64, cause: FixCause) {
        self.fixed[j] = Some(val);
        self.fixes.push((j, cause));
        for r in 0..self.rows.len() {
            if !self.alive[r] {
                continue;
            }
            if let Some(pos) = self.work[r].iter().position(|&(c, _)| c == j) {
                let (_, v) = self.work[r].remove(pos);
                self.rhs[r] -= v * val;
            }
        }
    }

    fn kill(&mut self, r: usize) {
        self.alive[r] = false;
    }

    /// Runs presolve to a fixed point.
    fn run(&mut self) -> Result<(), Infeasible> {
        loop {
            let mut changed = false;
            changed |= self.constant_rows()?;
            changed |= self.soc_blocks()?;
            changed |= self.bounds_and_singletons()?;
            changed |= self.empty_columns();
            if !changed {
                break;
            }
        }
        self.dependent_rows()
    }

    fn constant_rows(&mut self) -> Result<bool, Infeasible> {
        let mut changed = false;
        for r in 0..self.rows.len() {
            if !self.alive[r] || !self.work[r].is_empty() {
                continue;
            }
            match self.rows[r].kind {
                Kind::Eq => {
                    if self.rhs[r].abs() > self.feas(self.rows[r].rhs) {
                        return Err(Infeasible);
                    }
                }
                Kind::NonNeg => {
                    if self.rhs[r] < -self.feas(self.rows[r].rhs) {
                        return Err(Infeasible);
                    }
                }
                Kind::Soc(_) => continue,
            }
            self.kill(r);
            changed = true;
        }
        Ok(changed)
    }

    fn soc_blocks(&mut self) -> Result<bool, Infeasible> {
        let mut changed = false;
        for id in 0..self.socs.len() {
            if !self.soc_alive[id] {
                continue;
            }
            // zero tails carry no information
            let head = self.socs[id][0];
            let before = self.socs[id].len();
            let members: Vec<usize> = self.socs[id].clone();
            let kept: Vec<usize> = members
                .iter()
                .copied()
                .enumerate()
                .filter(|&(pos, r)| pos == 0 || !(self.work[r].is_empty() && self.rhs[r] == 0.0))
                .map(|(_, r)| r)
                .collect();
            for &r in &members {
                if !kept.contains(&r) {
                    self.kill(r);
                }
            }
            self.socs[id] = kept;
            if self.socs[id].len() != before {
                changed = true;
            }
            if self.socs[id].len() == 1 {
                self.rows[head].kind = Kind::NonNeg;
                self.soc_alive[id] = false;
                changed = true;
                continue;
            }
            if !self.work[head].is_empty() {
                continue;
            }
            let h0 = self.rhs[head];
            let tails: Vec<usize> = self.socs[id][1..].to_vec();
            let const_sq: f64 = tails
                .iter()
                .filter(|&&r| self.work[r].is_empty())
                .map(|&r| self.rhs[r] * self.rhs[r])
                .sum();
            let varying: Vec<usize> = tails
                .iter()
                .copied()
                .filter(|&r| !self.work[r].is_empty())
                .collect();
            let slack = self.feas(h0);
            if h0 < -slack || const_sq.sqrt() > h0.max(0.0) + slack {
                return Err(Infeasible);
            }
            if varying.is_empty() {
                for r in self.socs[id].clone() {
                    self.kill(r);
                }
                self.soc_alive[id] = false;
                changed = true;
                continue;
            }
            let h0p = h0.max(0.0);
            let r2 = h0p * h0p - const_sq;
            if r2 <= 1e-14 * (1.0 + h0p * h0p) {
                // the varying tails must vanish
                for &r in &varying {
                    self.rows[r].kind = Kind::Eq;
                }
                self.kill(head);
                for &r in &tails {
                    if self.work[r].is_empty() {
                        self.kill(r);
                    }
                }
                self.head_from_tails.push((head, varying));
                self.soc_alive[id] = false;
                changed = true;
            }
        }
        Ok(changed)
    }

    /// Tightest single-variable bounds, implied bounds from Soc blocks, fixing
    /// of variables with coinciding bounds and of singleton equality rows.
    fn bounds_and_singletons(&mut self) -> Result<bool, Infeasible> {
        let n = self.fixed.len();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        let mut lo_row: Vec<Option<usize>> = vec![None; n];
        let mut hi_row: Vec<Option<usize>> = vec![None; n];
        let mut changed = false;
        for r in 0..self.rows.len() {
            if !self.alive[r] || self.rows[r].kind != Kind::NonNeg || self.work[r].len() != 1 {
                continue;
            }
            let (j, g) = self.work[r][0];
            let val = self.rhs[r] / g;
            if g > 0.0 {
                if val < hi[j] {
                    if let Some(old) = hi_row[j] {
                        self.kill(old);
                        changed = true;
                    }
                    hi[j] = val;
                    hi_row[j] = Some(r);
                } else {
                    self.kill(r);
                    changed = true;
                }
            } else if val > lo[j] {
                if let Some(old) = lo_row[j] {
                    self.kill(old);
                    changed = true;
                }
                lo[j] = val;
                lo_row[j] = Some(r);
            } else {
                self.kill(r);
                changed = true;
            }
        }
        let (mut ilo, mut ihi) = (lo.clone(), hi.clone());
        let (mut slo, mut shi) = (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]);
        for id in 0..self.socs.len() {
            if !self.soc_alive[id] {
                continue;
            }
            let head = self.socs[id][0];
            if self.work[head].len() == 1 {
                let (j, g) = self.work[head][0];
                let val = self.rhs[head] / g;
                if g > 0.0 {
                    ihi[j] = ihi[j].min(val);
                } else {
                    ilo[j] = ilo[j].max(val);
                }
                // a bounded head bounds every single-variable tail
                let top = self.rhs[head] - g * if g < 0.0 { ihi[j] } else { ilo[j] };
                if top.is_finite() {
                    for &r in &self.socs[id][1..] {
                        if self.work[r].len() == 1 && self.work[r][0].0 != j {
                            let (k, gk) = self.work[r][0];
                            let (a, b) = ((self.rhs[r] - top) / gk, (self.rhs[r] + top) / gk);
                            ilo[k] = ilo[k].max(a.min(b));
                            ihi[k] = ihi[k].min(a.max(b));
                        }
                    }
                }
            } else if self.work[head].is_empty() {
                let h0 = self.rhs[head].max(0.0);
                let const_sq: f64 = self.socs[id][1..]
                    .iter()
                    .filter(|&&r| self.work[r].is_empty())
                    .map(|&r| self.rhs[r] * self.rhs[r])
                    .sum();
                let radius = (h0 * h0 - const_sq).max(0.0).sqrt();
                for &r in &self.socs[id][1..] {
                    if self.work[r].len() == 1 {
                        let (j, g) = self.work[r][0];
                        let (a, b) = ((self.rhs[r] - radius) / g, (self.rhs[r] + radius) / g);
                        slo[j] = slo[j].max(a.min(b));
                        shi[j] = shi[j].min(a.max(b));
                    }
                }
            }
        }
        // a bound row implied by a constant-head Soc block is degenerate at
        // the optimum (both slack and multiplier vanish) and only slows the IPM
        for j in 0..n {
            if let Some(r) = hi_row[j].filter(|_| hi[j] >= shi[j]) {
                self.kill(r);
                hi_row[j] = None;
                changed = true;
            }
            if let Some(r) = lo_row[j].filter(|_| lo[j] <= slo[j]) {
                self.kill(r);
                lo_row[j] = None;
                changed = true;
            }
            ilo[j] = ilo[j].max(slo[j]);
            ihi[j] = ihi[j].min(shi[j]);
        }
        for j in 0..n {
            if self.fixed[j].is_some() {
                continue;
            }
            let (l, h) = (ilo[j], ihi[j]);
            if !(l.is_finite() && h.is_finite()) {
                continue;
            }
            if l > h + self.feas(l.abs().max(h.abs())) {
                return Err(Infeasible);
            }
            if h - l <= 1e-12 * (1.0 + l.abs() + h.abs()) {
                let val = 0.5 * (l + h);
                self.fix(
                    j,
                    val,
                    FixCause::Bounds {
                        lo: lo_row[j],
                        hi: hi_row[j],
                    },
                );
                changed = true;
            }
        }
        changed |= self.forcing_rows(&ilo, &ihi, &lo_row, &hi_row)?;
        for r in 0..self.rows.len() {
            if !self.alive[r] || self.rows[r].kind != Kind::Eq || self.work[r].len() != 1 {
                continue;
            }
            let (j, g) = self.work[r][0];
            if self.fixed[j].is_some() {
                continue;
            }
            let val = self.rhs[r] / g;
            let slack = self.feas(val);
            if val < ilo[j] - slack || val > ihi[j] + slack {
                return Err(Infeasible);
            }
            self.fix(j, val, FixCause::EqRow(r));
            self.kill(r);
            changed = true;
        }
        Ok(changed)
    }

    /// An equality row whose rhs equals its largest (or smallest) activity
    /// over the implied box pins every variable to the matching bound. Such
    /// programs have no interior and often no attained dual, so the IPM
    /// cannot be trusted with them. Multipliers of these fixes are only
    /// partially recoverable.
    fn forcing_rows(
        &mut self,
        ilo: &[f64],
        ihi: &[f64],
        lo_row: &[Option<usize>],
        hi_row: &[Option<usize>],
    ) -> Result<bool, Infeasible> {
        let mut changed = false;
        for r in 0..self.rows.len() {
            if !self.alive[r] || self.rows[r].kind != Kind::Eq || self.work[r].len() < 2 {
                continue;
            }
            let terms = self.work[r].clone();
            if terms.iter().any(|&(j, _)| self.fixed[j].is_some()) {
                continue;
            }
            let at = |up: bool| -> Vec<f64> {
                terms
                    .iter()
                    .map(|&(j, a)| if (a > 0.0) == up { ihi[j] } else { ilo[j] })
                    .collect()
            };
            let rhs = self.rhs[r];
            for up in [true, false] {
                let vals = at(up);
                if vals.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                let act: f64 = terms.iter().zip(&vals).map(|(&(_, a), v)| a * v).sum();
                let size: f64 = terms
                    .iter()
                    .zip(&vals)
                    .map(|(&(_, a), v)| (a * v).abs())
                    .sum();
                let excess = if up { rhs - act } else { act - rhs };
                if excess > self.feas(size.max(rhs.abs())) {
                    return Err(Infeasible);
                }
                if excess.abs() <= 1e-12 * (1.0 + size + rhs.abs()) {
                    for (i, (&(j, _), &v)) in terms.iter().zip(&vals).enumerate() {
                        let cause = if i == 0 {
                            FixCause::EqRow(r)
                        } else {
                            FixCause::Bounds {
                                lo: lo_row[j],
                                hi: hi_row[j],
                            }
                        };
                        self.fix(j, v, cause);
                    }
                    self.kill(r);
                    changed = true;
                    break;
                }
            }
        }
        Ok(changed)
    }

    /// Columns that appear in no row except their own bounds are moved to
    /// the bound their cost prefers (zero cost: the point of the box closest
    /// to 0). A column improving without limit becomes a ray variable.
    fn empty_columns(&mut self) -> bool {
        let n = self.fixed.len();
        let mut coupled = vec![false; n];
        let mut lo = vec![(f64::NEG_INFINITY, None); n];
        let mut hi = vec![(f64::INFINITY, None); n];
        for r in 0..self.rows.len() {
            if !self.alive[r] {
                continue;
            }
            if self.rows[r].kind == Kind::NonNeg && self.work[r].len() == 1 {
                let (j, g) = self.work[r][0];
                let val = self.rhs[r] / g;
                if g > 0.0 && val < hi[j].0 {
                    hi[j] = (val, Some(r));
                } else if g < 0.0 && val > lo[j].0 {
                    lo[j] = (val, Some(r));
                }
                continue;
            }
            for &(j, _) in &self.work[r] {
                coupled[j] = true;
            }
        }
        let mut changed = false;
        for j in 0..n {
            if self.fixed[j].is_some() || coupled[j] {
                continue;
            }
            let ((l, lr), (h, hr)) = (lo[j], hi[j]);
            let cost = self.cost[j];
            let target = if cost > 0.0 {
                l
            } else if cost < 0.0 {
                h
            } else {
                0f64.clamp(l.min(h), h.max(l))
            };
            let val = if target.is_finite() {
                target
            } else {
                self.ray_vars.push(j);
                0f64.clamp(l.min(h), h.max(l))
            };
            self.fix(j, val, FixCause::Bounds { lo: lr, hi: hr });
            changed = true;
        }
        changed
    }

    /// Drops linearly dependent equality rows; inconsistent ones make the program infeasible.
    fn dependent_rows(&mut self) -> Result<(), Infeasible> {
        let eqs: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.alive[r] && self.rows[r].kind == Kind::Eq)
            .collect();
        if eqs.is_empty() {
            return Ok(());
        }
        let n = self.fixed.len();
        let dense = |r: usize| {
            let mut v = Vector::zeros(n);
            for &(j, a) in &self.work[r] {
                v[j] = a;
            }
            v
        };
        let mut basis: Vec<Vector> = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        let mut dependent: Vec<usize> = Vec::new();
        for &r in &eqs {
            let row = dense(r);
            let mut res = row.clone();
            for _ in 0..2 {
                for q in &basis {
                    let d = q.dot(&res);
                    res -= q * d;
                }
            }
            let nr = res.norm();
            if nr > 1e-9 * row.norm() {
                basis.push(res / nr);
                chosen.push(r);
            } else {
                dependent.push(r);
            }
        }
        if dependent.is_empty() {
            return Ok(());
        }
        let k = chosen.len();
        let mut a = Matrix::zeros(k, n);
        let mut b = Vector::zeros(k);
        for (i, &r) in chosen.iter().enumerate() {
            a.row_mut(i).copy_from(&dense(r).transpose());
            b[i] = self.rhs[r];
        }
        let z0 = match (&a * a.transpose()).cholesky() {
            Some(ch) => a.tr_mul(&ch.solve(&b)),
            None => return Ok(()),
        };
        let mut drop = Vec::new();
        for r in dependent {
            let row = dense(r);
            let resid = row.dot(&z0) - self.rhs[r];
            let scale = 1.0 + self.rhs[r].abs() + row.norm() * z0.norm();
            if resid.abs() > 1e-9 * scale {
                return Err(Infeasible);
            }
            drop.push(r);
        }
        for r in drop {
            self.kill(r);
        }
        Ok(())
    }

    fn free_columns(&self) -> Vec<usize> {
        (0..self.fixed.len())
            .filter(|&j| self.fixed[j].is_none())
            .collect()
    }

    fn to_std(&self, offset: f64) -> (StdForm, Vec<usize>, Vec<usize>, Vec<usize>) {
        let free = self.free_columns();
        let mut col = vec![usize::MAX; self.fixed.len()];
        for (k, &j) in free.iter().enumerate() {
            col[j] = k;
        }
        let n = free.len();
        let c = Vector::from_iterator(n, free.iter().map(|&j| self.cost[j]));
        let off = offset
            + self
                .fixed
                .iter()
                .enumerate()
                .filter_map(|(j, v)| v.map(|v| self.cost[j] * v))
                .sum::<f64>();
        let eq_rows: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.alive[r] && self.rows[r].kind == Kind::Eq)
            .collect();
        let mut g_rows: Vec<usize> = (0..self.rows.len())
            .filter(|&r| self.alive[r] && self.rows[r].kind == Kind::NonNeg)
            .collect();
        let mut cones = Vec::new();
        if !g_rows.is_empty() {
            cones.push(StdCone::NonNeg(g_rows.len()));
        }
        for id in 0..self.socs.len() {
            if self.soc_alive[id] {
                cones.push(StdCone::Soc(self.socs[id].len()));
                g_rows.extend(&self.socs[id]);
            }
        }
        let fill = |rows: &[usize]| {
            let mut m = Matrix::zeros(rows.len(), n);
            let mut v = Vector::zeros(rows.len());
            for (i, &r) in rows.iter().enumerate() {
                for &(j, a) in &self.work[r] {
                    m[(i, col[j])] = a;
                }
                v[i] = self.rhs[r];
            }
            (m, v)
        };
        let (a, b) = fill(&eq_rows);
        let (g, h) = fill(&g_rows);
        (
            StdForm {
                c,
                a,
                b,
                g,
                h,
                cones,
                offset: off,
            },
            free,
            eq_rows,
            g_rows,
        )
    }

    /// Fills multipliers of removed rows from column stationarity
    /// `cost + sum_r coef_r mult_r = 0`, newest removal first.
    fn postsolve(&self, mult: &mut [f64], extra_bound: &mut [f64]) {
        for &(j, cause) in self.fixes.iter().rev() {
            let t = self.column_residual(j, mult);
            match cause {
                FixCause::EqRow(r) => {
                    let g = self.coef(r, j);
                    if g != 0.0 {
                        mult[r] -= t / g;
                    }
                }
                FixCause::Bounds { lo, hi } => {
                    let row = if t > 0.0 { lo } else { hi };
                    match row {
                        Some(r) if self.coef(r, j) != 0.0 => mult[r] -= t / self.coef(r, j),
                        _ => extra_bound[j] += t,
                    }
                }
            }
        }
        for (head, tails) in &self.head_from_tails {
            let norm = tails.iter().map(|&r| mult[r] * mult[r]).sum::<f64>().sqrt();
            mult[*head] = norm;
        }
    }

    fn coef(&self, r: usize, j: usize) -> f64 {
        self.rows[r]
            .coef
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, v)| v)
    }

    fn column_residual(&self, j: usize, mult: &[f64]) -> f64 {
        let mut t = self.cost[j];
        for (r, row) in self.rows.iter().enumerate() {
            if mult[r] != 0.0 {
                for &(c, v) in &row.coef {
                    if c == j {
                        t += v * mult[r];
                    }
                }
            }
        }
        t
    }
}

/// Primal values and row multipliers mapped back to the caller's layout.
fn assemble(
    p: &ContinuousProgram,
    pre: &Presolve,
    v: &Vector,
    mult: &[f64],
    extra_bound: &[f64],
    status: Status,
) -> Solution {
    let (n1, n2, n3) = (p.n1(), p.n2(), p.n3());
    let mut sol = Solution::empty(n1, n2, n3, p.m(), status);
    sol.x = v.rows(0, n1).into_owned();
    sol.y = v.rows(n1, n2).into_owned();
    sol.w = v.rows(n1 + n2, n3).into_owned();
    let (nk, ne) = p.extra.as_ref().map_or((0, 0), |e| (e.n_conic(), e.n_eq()));
    sol.dual_aux = Vector::zeros(nk);
    sol.dual_aux_eq = Vector::zeros(ne);
    for (r, row) in pre.rows.iter().enumerate() {
        let val = row.origin.1 * mult[r];
        if val == 0.0 {
            continue;
        }
        match row.origin.0 {
            Origin::Main(i) => sol.dual_eq[i] += val,
            Origin::Cone(k) => sol.dual_cone[p.cone_order[k]] += val,
            Origin::Aux(i) => sol.dual_aux[i] += val,
            Origin::AuxEq(i) => sol.dual_aux_eq[i] += val,
            Origin::Bound(j) => sol.dual_bound[j] += val,
        }
    }
    for (j, e) in extra_bound.iter().enumerate() {
        sol.dual_bound[j] += e;
    }
    sol
}

/// Solves `p` and returns the solution together with the iteration count.
pub(crate) fn solve(p: &ContinuousProgram, tol: &Tol) -> (Solution, usize) {
    let (n1, n2, n3, m) = (p.n1(), p.n2(), p.n3(), p.m());
    let mut pre = Presolve::build(p, tol);
    if pre.run().is_err() {
        return (Solution::empty(n1, n2, n3, m, Status::Infeasible), 0);
    }
    let n = pre.fixed.len();
    let (std, free, eq_rows, g_rows) = pre.to_std(p.offset);
    let mut v = Vector::from_iterator(n, pre.fixed.iter().map(|f| f.unwrap_or(0.0)));
    let mut mult = vec![0.0; pre.rows.len()];
    let mut extra_bound = vec![0.0; n];

    let (status, iterations) = if free.is_empty() {
        (Status::Optimal, 0)
    } else {
        let res = ipm::solve(&std, tol, p.max_iter);
        match res.status {
            IpmStatus::Infeasible => {
                for (i, &r) in eq_rows.iter().enumerate() {
                    mult[r] = res.y[i];
                }
                for (i, &r) in g_rows.iter().enumerate() {
                    mult[r] = res.z[i];
                }
                let mut sol = assemble(
                    p,
                    &pre,
                    &Vector::zeros(n),
                    &mult,
                    &extra_bound,
                    Status::Infeasible,
                );
                sol.obj = f64::INFINITY;
                return (sol, res.iterations);
            }
            IpmStatus::Unbounded => {
                let mut ray = Vector::zeros(n);
                for (k, &j) in free.iter().enumerate() {
                    ray[j] = res.x[k];
                }
                let mut sol = assemble(p, &pre, &ray, &mult, &extra_bound, Status::Unbounded);
                sol.obj = f64::NEG_INFINITY;
                return (sol, res.iterations);
            }
            s => {
                for (k, &j) in free.iter().enumerate() {
                    v[j] = res.x[k];
                }
                for (i, &r) in eq_rows.iter().enumerate() {
                    mult[r] = res.y[i];
                }
                for (i, &r) in g_rows.iter().enumerate() {
                    mult[r] = res.z[i];
                }
                let st = if s == IpmStatus::Optimal {
                    Status::Optimal
                } else {
                    Status::IterLimit
                };
                (st, res.iterations)
            }
        }
    };

    if status == Status::Optimal && !pre.ray_vars.is_empty() {
        let mut ray = Vector::zeros(n);
        for &j in &pre.ray_vars {
            ray[j] = -pre.cost[j].signum();
        }
        let mut sol = assemble(p, &pre, &ray, &mult, &extra_bound, Status::Unbounded);
        sol.obj = f64::NEG_INFINITY;
        return (sol, iterations);
    }
    pre.postsolve(&mut mult, &mut extra_bound);
    let mut sol = assemble(p, &pre, &v, &mult, &extra_bound, status);
    sol.obj = pre
        .cost
        .iter()
        .zip(v.iter())
        .map(|(c, x)| c * x)
        .sum::<f64>()
        + p.offset;
    (sol, iterations)
}
