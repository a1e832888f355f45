//! Branch and bound over `K ∩ (Z^n1 × R^n2)`, the value function and
//! right-hand-side feasibility.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cones;
use crate::error::{Error, Result};
use crate::model::{ConicMip, RhsSense, Solution, Status, Tol, Vector};
use crate::solver::{solve_continuous, ContinuousProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchRule {
    /// Fractional part closest to 0.5, lowest index on ties.
    #[default]
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeOrder {
    /// Smallest relaxation bound first, oldest node on ties.
    #[default]
    BestBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    pub node_limit: usize,
    pub branch_rule: BranchRule,
    pub node_order: NodeOrder,
    pub tol: Tol,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            node_limit: 100_000,
            branch_rule: BranchRule::MostFractional,
            node_order: NodeOrder::BestBound,
            tol: Tol::default(),
        }
    }
}

impl BnbConfig {
    pub fn with_tol(tol: Tol) -> Self {
        BnbConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_limit == 0 {
            return Err(Error::Invalid("node_limit must be at least 1".into()));
        }
        self.tol.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub solution: Solution,
    pub nodes_explored: usize,
    /// Proven lower bound on the optimum (`+inf` when infeasible).
    pub best_bound: f64,
}

/// Relaxation points this close to the lattice get a rounding attempt even
/// when they are not integral within `int_eps`; on relaxations without an
/// interior the IPM only resolves `x` to about the square root of machine
/// precision.
const ROUND_EPS: f64 = 1e-3;

/// Largest multiplier tried when scaling an unbounded ray to an integral one.
const MAX_RAY_SCALE: usize = 1000;

struct Node {
    bound: f64,
    id: usize,
    lower: Vector,
    upper: Vector,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed so that BinaryHeap pops the smallest bound, then the smallest id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solves `inst` to global optimality.
///
/// Limits are reported through the solution status (`NodeLimit`, `IterLimit`)
/// together with the best bound, not as errors.
pub fn solve_mip(inst: &ConicMip, cfg: &BnbConfig) -> Result<BnbResult> {
    solve_program(&ContinuousProgram::from_mip(inst), cfg)
}

/// Branch and bound on a continuous program whose `x` block is integral.
pub fn solve_program(p: &ContinuousProgram, cfg: &BnbConfig) -> Result<BnbResult> {
    cfg.validate()?;
    Search::new(p, cfg).run()
}

/// `ν(ω)`: the optimal value with right-hand side `omega`; `+inf` when
/// infeasible, `-inf` when unbounded.
pub fn value_function(inst: &ConicMip, omega: &Vector, cfg: &BnbConfig) -> Result<f64> {
    let res = solve_mip(&inst.with_rhs(omega.clone())?, cfg)?;
    finite_or_limit(&res)
}

/// Whether some lattice point satisfies the rows with right-hand side `omega`
/// under `sense`.
pub fn feasible_rhs(
    inst: &ConicMip,
    omega: &Vector,
    sense: RhsSense,
    cfg: &BnbConfig,
) -> Result<bool> {
    let p = ContinuousProgram::from_mip(inst)
        .with_rhs(omega.clone())?
        .with_sense(sense);
    let (c, d) = (Vector::zeros(p.n1()), Vector::zeros(p.n2()));
    let res = solve_program(&p.with_objective(c, d, 0.0)?, cfg)?;
    Ok(finite_or_limit(&res)? < f64::INFINITY)
}

/// Maps a result to its value, turning limits into errors.
pub(crate) fn finite_or_limit(res: &BnbResult) -> Result<f64> {
    match res.solution.status {
        Status::Optimal => Ok(res.solution.obj),
        Status::Infeasible => Ok(f64::INFINITY),
        Status::Unbounded => Ok(f64::NEG_INFINITY),
        Status::IterLimit => Err(Error::IterLimit),
        Status::NodeLimit => Err(Error::NodeLimit {
            best_bound: res.best_bound,
            incumbent: res.solution.obj.is_finite().then_some(res.solution.obj),
        }),
    }
}

struct Search<'a> {
    p: &'a ContinuousProgram,
    cfg: &'a BnbConfig,
    n1: usize,
    incumbent: Option<Solution>,
    heap: BinaryHeap<Node>,
    next_id: usize,
    nodes: usize,
    /// Lowest bound among nodes discarded without a proof (failed solves).
    failed_bound: f64,
    /// Lowest bound among nodes pruned against the incumbent.
    pruned_bound: f64,
}

impl<'a> Search<'a> {
    fn new(p: &'a ContinuousProgram, cfg: &'a BnbConfig) -> Self {
        Search {
            p,
            cfg,
            n1: p.n1(),
            incumbent: None,
            heap: BinaryHeap::new(),
            next_id: 0,
            nodes: 0,
            failed_bound: f64::INFINITY,
            pruned_bound: f64::INFINITY,
        }
    }

    fn tol(&self) -> &Tol {
        &self.cfg.tol
    }

    fn incumbent_obj(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |s| s.obj)
    }

    fn push(&mut self, bound: f64, lower: Vector, upper: Vector) {
        let id = self.next_id;
        self.next_id += 1;
        self.heap.push(Node {
            bound,
            id,
            lower,
            upper,
        });
    }

    fn relax(&self, lower: &Vector, upper: &Vector) -> Result<Solution> {
        let q = self.p.clone().with_bounds(lower.clone(), upper.clone())?;
        Ok(solve_continuous(&q, self.tol())?.0)
    }

    fn dominated(&self, bound: f64) -> bool {
        let inc = self.incumbent_obj();
        inc.is_finite() && bound >= inc - self.tol().gap_abs(inc)
    }

    fn run(mut self) -> Result<BnbResult> {
        let (lo, hi) = self.integral_bounds();
        if (0..self.n1).any(|j| lo[j] > hi[j]) {
            return Ok(self.finish());
        }
        self.push(f64::NEG_INFINITY, lo, hi);
        let mut root = true;
        while let Some(node) = self.heap.pop() {
            if self.dominated(node.bound) {
                self.pruned_bound = self.pruned_bound.min(node.bound);
                continue;
            }
            if self.nodes >= self.cfg.node_limit {
                self.heap.push(node);
                return Ok(self.finish());
            }
            self.nodes += 1;
            let sol = self.relax(&node.lower, &node.upper)?;
            match sol.status {
                Status::Infeasible => {}
                Status::Unbounded if root => return self.unbounded_root(&sol),
                Status::Optimal => self.process(&node, &sol)?,
                _ => self.split_blind(node, &sol),
            }
            root = false;
        }
        Ok(self.finish())
    }

    /// Integer bounds rounded inward.
    fn integral_bounds(&self) -> (Vector, Vector) {
        let (mut lo, mut hi) = (self.p.lower().clone(), self.p.upper().clone());
        let eps = self.tol().int_eps;
        for j in 0..self.n1 {
            lo[j] = (lo[j] - eps).ceil();
            hi[j] = (hi[j] + eps).floor();
        }
        (lo, hi)
    }

    fn process(&mut self, node: &Node, sol: &Solution) -> Result<()> {
        let bound = sol.obj.max(node.bound);
        if self.dominated(bound) {
            self.pruned_bound = self.pruned_bound.min(bound);
            return Ok(());
        }
        // the IPM may leave the box by a few ulps; branching on such a value
        // would recreate the node itself
        let x = Vector::from_iterator(
            self.n1,
            (0..self.n1).map(|j| sol.x[j].clamp(node.lower[j], node.upper[j])),
        );
        let frac = most_fractional(&x, self.tol().int_eps);
        let close = (0..self.n1).all(|j| (x[j] - x[j].round()).abs() <= ROUND_EPS);
        if let (Some(j), false) = (frac, close) {
            self.branch(node, j, x[j], bound);
            return Ok(());
        }
        // near-integral: verify the rounded point by solving its fiber exactly
        let (mut lo, mut hi) = (node.lower.clone(), node.upper.clone());
        for j in 0..self.n1 {
            let r = x[j].round();
            lo[j] = r;
            hi[j] = r;
        }
        let fixed = self.relax(&lo, &hi)?;
        let failed = !matches!(
            fixed.status,
            Status::Optimal | Status::Infeasible | Status::Unbounded
        );
        if fixed.status == Status::Optimal {
            let tight = fixed.obj <= bound + self.tol().gap_abs(fixed.obj);
            if fixed.obj < self.incumbent_obj() {
                self.incumbent = Some(fixed);
            }
            if tight {
                return Ok(());
            }
        }
        // the rounding lost too much: branch on any residual fractionality
        if let Some(j) = frac.or_else(|| most_fractional(&x, 0.0)) {
            self.branch(node, j, x[j], bound);
            return Ok(());
        }
        if failed {
            self.failed_bound = self.failed_bound.min(bound);
        }
        Ok(())
    }

    fn branch(&mut self, node: &Node, j: usize, v: f64, bound: f64) {
        let (fl, ce) = (v.floor(), v.ceil());
        let mut hi = node.upper.clone();
        hi[j] = fl;
        let mut lo = node.lower.clone();
        lo[j] = if ce > fl { ce } else { fl + 1.0 };
        if node.lower[j] <= hi[j] {
            self.push(bound, node.lower.clone(), hi);
        }
        if lo[j] <= node.upper[j] {
            self.push(bound, lo, node.upper.clone());
        }
    }

    /// A node whose relaxation could not be solved. If the failed iterate
    /// sits near a lattice value `r` of some unfixed `x_j`, split into
    /// `x_j <= r-1`, `x_j = r` and `x_j >= r+1`: relaxations without interior
    /// typically fail in the IPM but become exact once fixed. Otherwise split
    /// a bounded range at its midpoint, or give up on the node.
    fn split_blind(&mut self, node: Node, sol: &Solution) {
        let near = (0..self.n1).find(|&j| {
            let v = sol.x[j];
            node.lower[j] < node.upper[j] && v.is_finite() && (v - v.round()).abs() <= ROUND_EPS
        });
        if let Some(j) = near {
            let r = sol.x[j].round().clamp(node.lower[j], node.upper[j]);
            let mut hi = node.upper.clone();
            hi[j] = r - 1.0;
            if node.lower[j] <= hi[j] {
                self.push(node.bound, node.lower.clone(), hi);
            }
            let (mut lo, mut hi) = (node.lower.clone(), node.upper.clone());
            lo[j] = r;
            hi[j] = r;
            self.push(node.bound, lo, hi);
            let mut lo = node.lower.clone();
            lo[j] = r + 1.0;
            if lo[j] <= node.upper[j] {
                self.push(node.bound, lo, node.upper.clone());
            }
            return;
        }
        let j = (0..self.n1).find(|&j| {
            node.lower[j].is_finite() && node.upper[j].is_finite() && node.lower[j] < node.upper[j]
        });
        match j {
            Some(j) => {
                let mid = ((node.lower[j] + node.upper[j]) / 2.0).floor() + 0.5;
                self.branch(&node, j, mid, node.bound);
            }
            None => self.failed_bound = self.failed_bound.min(node.bound),
        }
    }

    fn finish(self) -> BnbResult {
        let open = self
            .heap
            .iter()
            .map(|n| n.bound)
            .fold(f64::INFINITY, f64::min);
        let inc = self.incumbent_obj();
        let cutoff = if inc.is_finite() {
            inc - self.tol().gap_abs(inc)
        } else {
            f64::INFINITY
        };
        let status = if !self.heap.is_empty() {
            Status::NodeLimit
        } else if self.failed_bound < cutoff {
            Status::IterLimit
        } else if self.incumbent.is_some() {
            Status::Optimal
        } else {
            Status::Infeasible
        };
        let best_bound = match status {
            Status::Infeasible => f64::INFINITY,
            _ => inc.min(open).min(self.failed_bound).min(self.pruned_bound),
        };
        let solution = match self.incumbent {
            Some(mut s) => {
                s.status = status;
                s
            }
            None => {
                let mut s = Solution::empty(self.n1, self.p.n2(), self.p.n3(), self.p.m(), status);
                s.obj = f64::INFINITY;
                s
            }
        };
        BnbResult {
            solution,
            nodes_explored: self.nodes,
            best_bound,
        }
    }

    /// The root relaxation is unbounded: look for an improving ray with an
    /// integral `x` part, then for one lattice-feasible point.
    fn unbounded_root(mut self, relax: &Solution) -> Result<BnbResult> {
        let nodes = self.nodes;
        let Some(ray) = self.integral_ray(relax).or_else(|| self.vertex_ray()) else {
            let mut s = Solution::empty(
                self.n1,
                self.p.n2(),
                self.p.n3(),
                self.p.m(),
                Status::NodeLimit,
            );
            s.obj = f64::INFINITY;
            return Ok(BnbResult {
                solution: s,
                nodes_explored: nodes,
                best_bound: f64::NEG_INFINITY,
            });
        };
        let zero = self.p.clone().with_objective(
            Vector::zeros(self.n1),
            Vector::zeros(self.p.n2()),
            0.0,
        )?;
        let feas = Search::new(&zero, self.cfg).run()?;
        self.nodes = nodes + feas.nodes_explored;
        let mut s = Solution::empty(
            self.n1,
            self.p.n2(),
            self.p.n3(),
            self.p.m(),
            feas.solution.status,
        );
        let best_bound = match feas.solution.status {
            Status::Optimal => {
                s.status = Status::Unbounded;
                s.obj = f64::NEG_INFINITY;
                s.x = ray.0;
                s.y = ray.1;
                s.w = ray.2;
                f64::NEG_INFINITY
            }
            Status::Infeasible => f64::INFINITY,
            _ => {
                s.obj = f64::INFINITY;
                f64::NEG_INFINITY
            }
        };
        Ok(BnbResult {
            solution: s,
            nodes_explored: self.nodes,
            best_bound,
        })
    }

    fn integral_ray(&self, relax: &Solution) -> Option<(Vector, Vector, Vector)> {
        let scale = relax.x.amax().max(relax.y.amax()).max(relax.w.amax());
        if !(scale > 0.0) {
            return None;
        }
        let (x, y, w) = (&relax.x / scale, &relax.y / scale, &relax.w / scale);
        let xmax = x.amax();
        let eps = self.tol().int_eps;
        if xmax <= eps {
            let r = (Vector::zeros(self.n1), y, w);
            return self.is_ray(&r).then_some(r);
        }
        let (x, y, w) = (x / xmax, y / xmax, w / xmax);
        for k in 1..=MAX_RAY_SCALE {
            let kx = &x * k as f64;
            // is_ray re-checks the rounded candidate, so rounding may be loose
            if kx.iter().all(|v| (v - v.round()).abs() <= ROUND_EPS) {
                let r = (kx.map(f64::round), &y * k as f64, &w * k as f64);
                if self.is_ray(&r) {
                    return Some(r);
                }
            }
        }
        None
    }

    /// An IPM certificate of unboundedness is an interior ray, rarely a
    /// rational one. Minimising the cost over the recession cone cut by the
    /// unit box lands on a vertex, which for rational data scales to a lattice ray.
    fn vertex_ray(&self) -> Option<(Vector, Vector, Vector)> {
        let p = self.p;
        let lower = p
            .lower()
            .map(|l| if l == f64::NEG_INFINITY { -1.0 } else { 0.0 });
        let upper = p
            .upper()
            .map(|u| if u == f64::INFINITY { 1.0 } else { 0.0 });
        let mut q = p.clone().with_rhs(Vector::zeros(p.m())).ok()?;
        q.offset = 0.0;
        if let Some(e) = q.extra.as_mut() {
            e.rhs.fill(0.0);
            e.eq_rhs.fill(0.0);
        }
        let q = q.with_bounds(lower, upper).ok()?;
        let sol = solve_continuous(&q, self.tol()).ok()?.0;
        if sol.status != Status::Optimal || !(sol.obj < -self.tol().feas_eps) {
            return None;
        }
        self.integral_ray(&sol)
    }

    /// Recession direction with negative cost.
    fn is_ray(&self, (x, y, w): &(Vector, Vector, Vector)) -> bool {
        let p = self.p;
        let size = 1.0 + x.amax().max(y.amax()).max(w.amax());
        let eps = self.tol().feas_eps * size * 10.0;
        if p.c.dot(x) + p.d.dot(y) >= 0.0 {
            return false;
        }
        let v = crate::model::concat(x, y);
        let in_cone = {
            let ordered = Vector::from_iterator(v.len(), p.cone_order.iter().map(|&i| v[i]));
            cones::contains(&p.cone, &ordered, eps).unwrap_or(false)
        };
        if !in_cone {
            return false;
        }
        let row = &p.a * x + &p.g * y;
        let rows_ok = match p.sense() {
            RhsSense::Equal => row.amax() <= eps,
            RhsSense::LessEqual => row.max() <= eps,
        };
        if !rows_ok {
            return false;
        }
        if let Some(e) = p.extra() {
            let slack = &e.pi * x + &e.phi * y + &e.psi * w;
            if !cones::contains(&e.cone, &slack, eps).unwrap_or(false) {
                return false;
            }
            let eq = &e.eq_pi * x + &e.eq_phi * y + &e.eq_psi * w;
            if eq.amax() > eps {
                return false;
            }
        }
        let all = Vector::from_iterator(v.len() + w.len(), v.iter().chain(w.iter()).copied());
        (0..all.len()).all(|j| {
            (p.lower()[j] == f64::NEG_INFINITY || all[j] >= -eps)
                && (p.upper()[j] == f64::INFINITY || all[j] <= eps)
        })
    }
}

/// Integer index whose fractional part is closest to 0.5, if any exceeds `eps`.
fn most_fractional(x: &Vector, eps: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in x.iter().enumerate() {
        let f = v - v.floor();
        let dist = f.min(1.0 - f);
        if dist > eps && best.map_or(true, |(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}
