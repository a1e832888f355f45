//! Dense data model shared by every solver: tolerances, instances and solutions.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::cones::ConeSpec;
use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Numeric tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    /// Constraint residual.
    pub feas_eps: f64,
    /// Integrality rounding.
    pub int_eps: f64,
    /// Relative branch-and-bound gap, also used by certificate comparisons.
    pub gap_eps: f64,
    /// Complementarity in continuous solves.
    pub dual_eps: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            feas_eps: 1e-8,
            int_eps: 1e-6,
            gap_eps: 1e-6,
            dual_eps: 1e-7,
        }
    }
}

impl Tol {
    pub fn validate(&self) -> Result<()> {
        let all = [self.feas_eps, self.int_eps, self.gap_eps, self.dual_eps];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidTol("tolerances must be finite and positive"));
        }
        if self.int_eps >= 0.5 {
            return Err(Error::InvalidTol("int_eps must be below 0.5"));
        }
        Ok(())
    }

    /// Absolute slack for a relative gap test around `value`.
    pub fn gap_abs(&self, value: f64) -> f64 {
        self.gap_eps * (1.0 + value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhsSense {
    Equal,
    LessEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    NodeLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterLimit => "iter_limit",
            Status::NodeLimit => "node_limit",
        }
    }
}

/// One block of a block-structured instance: the columns `x[x_cols]` and
/// `y[y_cols]` form `(x^l, y^l)`, which must lie in `cone`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub x_cols: Range<usize>,
    pub y_cols: Range<usize>,
    pub cone: ConeSpec,
}

/// `min c'x + d'y  s.t.  Ax + Gy = b (or <= b),  (x, y) in K,  x integral`.
///
/// When a block partition is present the cone is stated in block order
/// `(x^1, y^1, x^2, y^2, ...)`; `cone_order` maps cone coordinates to
/// variable indices (x first, then y).
#[derive(Debug, Clone, PartialEq)]
pub struct ConicMip {
    pub(crate) a: Matrix,
    pub(crate) g: Matrix,
    pub(crate) b: Vector,
    pub(crate) c: Vector,
    pub(crate) d: Vector,
    pub(crate) cone: ConeSpec,
    pub(crate) sense: RhsSense,
    pub(crate) blocks: Option<Vec<BlockSpec>>,
    pub(crate) cone_order: Vec<usize>,
}

pub(crate) fn check_finite_mat(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_finite_vec(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

impl ConicMip {
    pub fn new(
        a: Matrix,
        g: Matrix,
        b: Vector,
        c: Vector,
        d: Vector,
        cone: ConeSpec,
        sense: RhsSense,
    ) -> Result<Self> {
        let m = b.len();
        let (n1, n2) = (c.len(), d.len());
        check_len("rows of A", m, a.nrows())?;
        check_len("columns of A", n1, a.ncols())?;
        check_len("rows of G", m, g.nrows())?;
        check_len("columns of G", n2, g.ncols())?;
        check_len("cone dimension", n1 + n2, cone.dim())?;
        check_finite_mat(&a, "A")?;
        check_finite_mat(&g, "G")?;
        check_finite_vec(&b, "b")?;
        check_finite_vec(&c, "c")?;
        check_finite_vec(&d, "d")?;
        Ok(ConicMip {
            a,
            g,
            b,
            c,
            d,
            cone,
            sense,
            blocks: None,
            cone_order: (0..n1 + n2).collect(),
        })
    }

    /// Attaches a block partition. The instance cone must equal the
    /// concatenation of the block cones.
    pub fn with_blocks(mut self, blocks: Vec<BlockSpec>) -> Result<Self> {
        let (n1, n2) = (self.n1(), self.n2());
        let mut seen_x = vec![false; n1];
        let mut seen_y = vec![false; n2];
        let mut order = Vec::with_capacity(n1 + n2);
        let mut joined = ConeSpec::empty();
        for (l, blk) in blocks.iter().enumerate() {
            if blk.x_cols.end > n1 || blk.y_cols.end > n2 {
                return Err(Error::InvalidBlocks(format!(
                    "block {l} exceeds the columns"
                )));
            }
            let width = blk.x_cols.len() + blk.y_cols.len();
            if blk.cone.dim() != width {
                return Err(Error::InvalidBlocks(format!(
                    "block {l} cone has dimension {} but covers {width} columns",
                    blk.cone.dim()
                )));
            }
            for j in blk.x_cols.clone() {
                if std::mem::replace(&mut seen_x[j], true) {
                    return Err(Error::InvalidBlocks(format!("x column {j} covered twice")));
                }
                order.push(j);
            }
            for j in blk.y_cols.clone() {
                if std::mem::replace(&mut seen_y[j], true) {
                    return Err(Error::InvalidBlocks(format!("y column {j} covered twice")));
                }
                order.push(n1 + j);
            }
            joined.push_all(&blk.cone);
        }
        if seen_x.iter().chain(&seen_y).any(|s| !s) {
            return Err(Error::InvalidBlocks("some columns are not covered".into()));
        }
        if joined.normalized() != self.cone.normalized() {
            return Err(Error::InvalidBlocks(format!(
                "instance cone {} differs from the block cones {}",
                self.cone, joined
            )));
        }
        self.cone = joined;
        self.cone_order = order;
        self.blocks = Some(blocks);
        Ok(self)
    }

    /// Explicit cone order without block metadata.
    pub(crate) fn with_cone_order(mut self, order: Vec<usize>) -> Self {
        debug_assert_eq!(order.len(), self.cone.dim());
        self.cone_order = order;
        self.blocks = None;
        self
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }
    pub fn n1(&self) -> usize {
        self.c.len()
    }
    pub fn n2(&self) -> usize {
        self.d.len()
    }
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn g(&self) -> &Matrix {
        &self.g
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn c(&self) -> &Vector {
        &self.c
    }
    pub fn d(&self) -> &Vector {
        &self.d
    }
    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }
    pub fn sense(&self) -> RhsSense {
        self.sense
    }
    pub fn blocks(&self) -> Option<&[BlockSpec]> {
        self.blocks.as_deref()
    }
    pub fn cone_order(&self) -> &[usize] {
        &self.cone_order
    }

    pub fn with_rhs(&self, b: Vector) -> Result<Self> {
        check_len("right-hand side", self.m(), b.len())?;
        check_finite_vec(&b, "b")?;
        Ok(ConicMip { b, ..self.clone() })
    }

    pub fn with_sense(&self, sense: RhsSense) -> Self {
        ConicMip {
            sense,
            ..self.clone()
        }
    }

    pub fn with_objective(&self, c: Vector, d: Vector) -> Result<Self> {
        check_len("c", self.n1(), c.len())?;
        check_len("d", self.n2(), d.len())?;
        check_finite_vec(&c, "c")?;
        check_finite_vec(&d, "d")?;
        Ok(ConicMip {
            c,
            d,
            ..self.clone()
        })
    }

    /// `[A G]` as one matrix.
    pub fn constraint_matrix(&self) -> Matrix {
        let mut out = Matrix::zeros(self.m(), self.n1() + self.n2());
        out.columns_mut(0, self.n1()).copy_from(&self.a);
        out.columns_mut(self.n1(), self.n2()).copy_from(&self.g);
        out
    }

    pub fn objective(&self) -> Vector {
        concat(&self.c, &self.d)
    }

    /// Reorders a variable-space vector `(x, y)` into cone order.
    pub fn to_cone_order(&self, xy: &Vector) -> Vector {
        Vector::from_iterator(xy.len(), self.cone_order.iter().map(|&j| xy[j]))
    }

    /// Inverse of [`ConicMip::to_cone_order`].
    pub fn from_cone_order(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for (k, &j) in self.cone_order.iter().enumerate() {
            out[j] = v[k];
        }
        out
    }

    pub fn objective_value(&self, x: &Vector, y: &Vector) -> f64 {
        self.c.dot(x) + self.d.dot(y)
    }
}

pub fn concat(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// `Ax + Gy - b`.
pub fn residual(inst: &ConicMip, x: &Vector, y: &Vector) -> Result<Vector> {
    check_len("x", inst.n1(), x.len())?;
    check_len("y", inst.n2(), y.len())?;
    Ok(&inst.a * x + &inst.g * y - &inst.b)
}

/// Primal point, multipliers and status of a solve.
///
/// For `Unbounded` the primal part holds an improving ray; for `Infeasible`
/// `dual_eq` holds a Farkas ray when one is available.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vector,
    pub y: Vector,
    /// Auxiliary variables of extra conic rows (empty when there are none).
    pub w: Vector,
    pub obj: f64,
    pub status: Status,
    /// Row multipliers: `c - A'alpha` is the reduced cost. Non-positive on `<=` rows.
    pub dual_eq: Vector,
    /// Multiplier of the cone constraint, an element of the dual cone, in variable order.
    pub dual_cone: Vector,
    /// Multipliers of extra conic rows, an element of the dual of their cone.
    pub dual_aux: Vector,
    /// Multipliers of extra equality rows.
    pub dual_aux_eq: Vector,
    /// Multipliers of variable bounds: positive for active lower bounds,
    /// negative for active upper bounds.
    pub dual_bound: Vector,
}

impl Solution {
    pub(crate) fn empty(n1: usize, n2: usize, n3: usize, m: usize, status: Status) -> Self {
        let obj = match status {
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Solution {
            x: Vector::zeros(n1),
            y: Vector::zeros(n2),
            w: Vector::zeros(n3),
            obj,
            status,
            dual_eq: Vector::zeros(m),
            dual_cone: Vector::zeros(n1 + n2),
            dual_aux: Vector::zeros(0),
            dual_aux_eq: Vector::zeros(0),
            dual_bound: Vector::zeros(n1 + n2 + n3),
        }
    }
}
