//! Structural transforms: block reduction, finite-fiber hulls, the packing
//! boundedness test and the clustering model.

use crate::cones::{self, Cone, ConeSpec};
use crate::duality::{eval_generator, CertificateOrigin, GeneratorCertificate};
use crate::error::{BoxSide, Error, Result};
use crate::mip::{finite_or_limit, solve_program, BnbConfig};
use crate::model::{
    check_finite_mat, check_finite_vec, check_len, BlockSpec, ConicMip, Matrix, RhsSense, Status,
    Tol, Vector,
};
use crate::solver::{solve_continuous, ContinuousProgram, ExtraRows};

/// Lattice points enumerated at most by [`build_fiber_hull`].
pub const MAX_BOX_POINTS: u128 = 1 << 20;

/// One block `(A^l, G^l, c^l, d^l, K^l)` over variables `(x^l, y^l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub a: Matrix,
    pub g: Matrix,
    pub c: Vector,
    pub d: Vector,
    pub cone: ConeSpec,
}

/// `sum_l A^l x^l + G^l y^l (= or <=) b` with `(x^l, y^l) in K^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMip {
    blocks: Vec<Block>,
    b: Vector,
    sense: RhsSense,
}

impl BlockMip {
    pub fn new(blocks: Vec<Block>, b: Vector, sense: RhsSense) -> Result<Self> {
        let m = b.len();
        check_finite_vec(&b, "b")?;
        for blk in &blocks {
            check_len("block rows of A", m, blk.a.nrows())?;
            check_len("block rows of G", m, blk.g.nrows())?;
            check_len("block columns of A", blk.c.len(), blk.a.ncols())?;
            check_len("block columns of G", blk.d.len(), blk.g.ncols())?;
            check_len(
                "block cone dimension",
                blk.c.len() + blk.d.len(),
                blk.cone.dim(),
            )?;
            check_finite_mat(&blk.a, "A")?;
            check_finite_mat(&blk.g, "G")?;
            check_finite_vec(&blk.c, "c")?;
            check_finite_vec(&blk.d, "d")?;
            if blk.cone.has_zero_block() {
                return Err(Error::InvalidCone(
                    "block cones may not contain zero blocks".into(),
                ));
            }
        }
        Ok(BlockMip { blocks, b, sense })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// The instance restricted to `keep` (other blocks fixed at zero), with
    /// `x = (x^l)_l`, `y = (y^l)_l` in block order.
    pub fn sub_instance(&self, keep: &[usize]) -> Result<ConicMip> {
        let m = self.m();
        let n1: usize = keep.iter().map(|&l| self.blocks[l].c.len()).sum();
        let n2: usize = keep.iter().map(|&l| self.blocks[l].d.len()).sum();
        let (mut a, mut g) = (Matrix::zeros(m, n1), Matrix::zeros(m, n2));
        let (mut c, mut d) = (Vector::zeros(n1), Vector::zeros(n2));
        let mut specs = Vec::with_capacity(keep.len());
        let mut cone = ConeSpec::empty();
        let (mut ox, mut oy) = (0, 0);
        for &l in keep {
            let blk = &self.blocks[l];
            let (k1, k2) = (blk.c.len(), blk.d.len());
            a.view_mut((0, ox), (m, k1)).copy_from(&blk.a);
            g.view_mut((0, oy), (m, k2)).copy_from(&blk.g);
            c.rows_mut(ox, k1).copy_from(&blk.c);
            d.rows_mut(oy, k2).copy_from(&blk.d);
            cone.push_all(&blk.cone);
            specs.push(BlockSpec {
                x_cols: ox..ox + k1,
                y_cols: oy..oy + k2,
                cone: blk.cone.clone(),
            });
            ox += k1;
            oy += k2;
        }
        ConicMip::new(a, g, self.b.clone(), c, d, cone, self.sense)?.with_blocks(specs)
    }

    pub fn to_mip(&self) -> Result<ConicMip> {
        self.sub_instance(&(0..self.blocks.len()).collect::<Vec<_>>())
    }
}

/// Splits the blocks into `E` (kept) and `E'` (provably zero in the inner
/// maximisation of `F_α`): `l ∈ E'` iff the reduced cost `[c; d] − [A; G]'α`
/// and every row `[a_i; g_i]` of the block lie in `K^l_*`.
pub fn block_reduce(inst: &BlockMip, alpha: &Vector, eps: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    check_len("alpha", inst.m(), alpha.len())?;
    let (mut e, mut e_prime) = (Vec::new(), Vec::new());
    for (l, blk) in inst.blocks.iter().enumerate() {
        let dual = cones::dual(&blk.cone);
        let rc = crate::model::concat(
            &(&blk.c - blk.a.transpose() * alpha),
            &(&blk.d - blk.g.transpose() * alpha),
        );
        let mut zeroable = cones::contains(&dual, &rc, eps)?;
        for i in 0..inst.m() {
            if !zeroable {
                break;
            }
            let row = crate::model::concat(&blk.a.row(i).transpose(), &blk.g.row(i).transpose());
            zeroable = cones::contains(&dual, &row, eps)?;
        }
        if zeroable {
            e_prime.push(l);
        } else {
            e.push(l);
        }
    }
    Ok((e, e_prime))
}

/// `F_α(ω)` computed over the `E` blocks only.
pub fn eval_generator_blocked(
    inst: &BlockMip,
    alpha: &Vector,
    omega: &Vector,
    cfg: &BnbConfig,
) -> Result<f64> {
    check_len("omega", inst.m(), omega.len())?;
    let (e, _) = block_reduce(inst, alpha, cfg.tol.feas_eps)?;
    if e.is_empty() {
        let slack = cfg.tol.feas_eps * (1.0 + omega.amax());
        return if omega.min() >= -slack {
            Ok(alpha.dot(omega))
        } else {
            Err(Error::OmegaInfeasible)
        };
    }
    let sub = inst.sub_instance(&e)?;
    let cert = GeneratorCertificate::new(&sub, alpha.clone(), CertificateOrigin::UserGiven)?;
    eval_generator(&cert, omega, cfg)
}

/// Integer box `lo <= u <= hi` for fiber enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl IntBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        check_len("box bounds", lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Invalid("box has lo > hi".into()));
        }
        Ok(IntBox { lo, hi })
    }

    /// Same bounds on every coordinate.
    pub fn uniform(n: usize, lo: i64, hi: i64) -> Result<Self> {
        IntBox::new(vec![lo; n], vec![hi; n])
    }

    pub fn count(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1) as u128)
            .fold(1u128, |acc, k| acc.saturating_mul(k))
    }

    /// Lattice points in lexicographic order (first coordinate fastest).
    pub fn points(&self) -> Vec<Vector> {
        let n = self.lo.len();
        let mut out = Vec::new();
        let mut u = self.lo.clone();
        loop {
            out.push(Vector::from_iterator(n, u.iter().map(|&t| t as f64)));
            let mut k = 0;
            while k < n && u[k] == self.hi[k] {
                u[k] = self.lo[k];
                k += 1;
            }
            if k == n {
                return out;
            }
            u[k] += 1;
        }
    }
}

/// Disjunctive formulation of `conv(M^≤(b))` over the finitely many integer
/// fibers `U`: auxiliaries `w = (y^u, λ^u)_u` with
/// `x = Σ u λ^u`, `y = Σ y^u`, `Σ λ^u = 1`, `(u λ^u, y^u) ∈ K`,
/// `(b − Au) λ^u − G y^u ≥ 0` and `λ^u ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberHull {
    rows: ExtraRows,
    fibers: Vec<Vector>,
}

impl FiberHull {
    /// The rows `Π x + Φ y + Ψ w − π ∈ C` plus the coupling equalities.
    pub fn extra_rows(&self) -> ExtraRows {
        self.rows.clone()
    }
    pub fn pi(&self) -> &Matrix {
        &self.rows.pi
    }
    pub fn phi(&self) -> &Matrix {
        &self.rows.phi
    }
    pub fn psi(&self) -> &Matrix {
        &self.rows.psi
    }
    pub fn rhs(&self) -> &Vector {
        &self.rows.rhs
    }
    pub fn cone(&self) -> &ConeSpec {
        &self.rows.cone
    }
    /// The fiber index set `U`.
    pub fn fibers(&self) -> &[Vector] {
        &self.fibers
    }

    /// Minimises `c'x + d'y` over the hull alone (the instance rows are not imposed).
    pub fn minimize(&self, c: &Vector, d: &Vector, tol: &Tol) -> Result<f64> {
        let (n1, n2) = (c.len(), d.len());
        let shell = ConicMip::new(
            Matrix::zeros(0, n1),
            Matrix::zeros(0, n2),
            Vector::zeros(0),
            c.clone(),
            d.clone(),
            ConeSpec::free(n1 + n2),
            RhsSense::Equal,
        )?;
        let p = ContinuousProgram::from_mip(&shell).with_extra(self.extra_rows())?;
        let (sol, _) = solve_continuous(&p, tol)?;
        match sol.status {
            Status::Optimal => Ok(sol.obj),
            Status::Infeasible => Ok(f64::INFINITY),
            Status::Unbounded => Ok(f64::NEG_INFINITY),
            s => Err(Error::Solver(s)),
        }
    }
}

/// `min c'x + d'y` over the instance rows intersected with the hull; its row
/// multipliers are the `α*` of a generator certificate.
pub fn hull_program(inst: &ConicMip, hull: &FiberHull) -> Result<ContinuousProgram> {
    ContinuousProgram::from_mip(inst)
        .without_cone()
        .with_extra(hull.extra_rows())
}

fn fiber_feasible(inst: &ConicMip, u: &Vector, tol: &Tol) -> Result<bool> {
    let p = ContinuousProgram::from_mip(inst)
        .with_sense(RhsSense::LessEqual)
        .with_objective(Vector::zeros(inst.n1()), Vector::zeros(inst.n2()), 0.0)?;
    let n = inst.n1() + inst.n2();
    let (mut lo, mut hi) = (
        Vector::from_element(n, f64::NEG_INFINITY),
        Vector::from_element(n, f64::INFINITY),
    );
    lo.rows_mut(0, inst.n1()).copy_from(u);
    hi.rows_mut(0, inst.n1()).copy_from(u);
    let (sol, _) = solve_continuous(&p.with_bounds(lo, hi)?, tol)?;
    match sol.status {
        Status::Optimal => Ok(true),
        Status::Infeasible => Ok(false),
        s => Err(Error::Solver(s)),
    }
}

/// Whether some lattice point of `M^≤(b)` has `x_j <= bound` (`Below`) or
/// `x_j >= bound` (`Above`).
fn escapes(inst: &ConicMip, j: usize, side: BoxSide, bound: f64, cfg: &BnbConfig) -> Result<bool> {
    let p = ContinuousProgram::from_mip(inst)
        .with_sense(RhsSense::LessEqual)
        .with_objective(Vector::zeros(inst.n1()), Vector::zeros(inst.n2()), 0.0)?;
    let n = inst.n1() + inst.n2();
    let (mut lo, mut hi) = (
        Vector::from_element(n, f64::NEG_INFINITY),
        Vector::from_element(n, f64::INFINITY),
    );
    match side {
        BoxSide::Below => hi[j] = bound,
        BoxSide::Above => lo[j] = bound,
    }
    let res = solve_program(&p.with_bounds(lo, hi)?, cfg)?;
    Ok(finite_or_limit(&res)? < f64::INFINITY)
}

/// Enumerates the nonempty fibers `R^≤(b, u)` for `u` in `u_box` and emits
/// the disjunctive hull formulation. Fails with `BoxTooSmall` when a lattice
/// point of `M^≤(b)` lies outside the box.
pub fn build_fiber_hull(inst: &ConicMip, u_box: &IntBox, cfg: &BnbConfig) -> Result<FiberHull> {
    cfg.validate()?;
    let (m, n1, n2) = (inst.m(), inst.n1(), inst.n2());
    check_len("box dimension", n1, u_box.lo.len())?;
    let count = u_box.count();
    if count > MAX_BOX_POINTS {
        return Err(Error::BoxTooLarge(count));
    }
    for j in 0..n1 {
        if escapes(inst, j, BoxSide::Below, u_box.lo[j] as f64 - 1.0, cfg)? {
            return Err(Error::BoxTooSmall {
                var: j,
                side: BoxSide::Below,
            });
        }
        if escapes(inst, j, BoxSide::Above, u_box.hi[j] as f64 + 1.0, cfg)? {
            return Err(Error::BoxTooSmall {
                var: j,
                side: BoxSide::Above,
            });
        }
    }
    let mut fibers = Vec::new();
    for u in u_box.points() {
        if fiber_feasible(inst, &u, &cfg.tol)? {
            fibers.push(u);
        }
    }
    if fibers.is_empty() {
        return Err(Error::EmptyU);
    }

    let nu = fibers.len();
    let width = n2 + 1; // (y^u, λ^u)
    let n3 = nu * width;
    let n = n1 + n2;
    let k_rows = n + m + 1;
    let mut psi = Matrix::zeros(nu * k_rows, n3);
    let mut cone = ConeSpec::empty();
    let order = inst.cone_order();
    for (f, u) in fibers.iter().enumerate() {
        let (r0, c0) = (f * k_rows, f * width);
        let lam = c0 + n2;
        // (u λ, y^u) ∈ K in cone order
        for (k, &j) in order.iter().enumerate() {
            if j < n1 {
                psi[(r0 + k, lam)] = u[j];
            } else {
                psi[(r0 + k, c0 + j - n1)] = 1.0;
            }
        }
        // (b − Au) λ − G y^u ≥ 0
        let slack = inst.b() - inst.a() * u;
        for i in 0..m {
            psi[(r0 + n + i, lam)] = slack[i];
            for j in 0..n2 {
                psi[(r0 + n + i, c0 + j)] = -inst.g()[(i, j)];
            }
        }
        psi[(r0 + n + m, lam)] = 1.0;
        cone.push_all(inst.cone());
        cone.push(Cone::NonNeg(m + 1));
    }
    let rows_c = nu * k_rows;
    let mut extra = ExtraRows::conic(
        Matrix::zeros(rows_c, n1),
        Matrix::zeros(rows_c, n2),
        psi,
        Vector::zeros(rows_c),
        cone.normalized(),
    );
    // x − Σ u λ^u = 0, y − Σ y^u = 0, Σ λ^u = 1
    let n_eq = n1 + n2 + 1;
    let (mut ep, mut eph, mut eps_) = (
        Matrix::zeros(n_eq, n1),
        Matrix::zeros(n_eq, n2),
        Matrix::zeros(n_eq, n3),
    );
    let mut erhs = Vector::zeros(n_eq);
    for j in 0..n1 {
        ep[(j, j)] = 1.0;
        for (f, u) in fibers.iter().enumerate() {
            eps_[(j, f * width + n2)] = -u[j];
        }
    }
    for j in 0..n2 {
        eph[(n1 + j, j)] = 1.0;
        for f in 0..nu {
            eps_[(n1 + j, f * width + j)] = -1.0;
        }
    }
    for f in 0..nu {
        eps_[(n1 + n2, f * width + n2)] = 1.0;
    }
    erhs[n1 + n2] = 1.0;
    extra.eq_pi = ep;
    extra.eq_phi = eph;
    extra.eq_psi = eps_;
    extra.eq_rhs = erhs;
    Ok(FiberHull {
        rows: extra,
        fibers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PackingVerdict {
    Bounded,
    Unbounded,
    NotPacking,
}

impl PackingVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PackingVerdict::Bounded => "bounded",
            PackingVerdict::Unbounded => "unbounded",
            PackingVerdict::NotPacking => "not-packing",
        }
    }
}

/// Packing test for `{(x, y) ∈ K : Ax + Gy ≤ b}`: every row of `[A G]` must
/// lie in `K_*`; the set is bounded iff some `μ ≥ 0` puts `[A G]'μ` in the
/// interior of `K_*`, decided by maximising the margin `t ≤ 1` in
/// `[A G]'μ − t p ∈ K_*` for a fixed interior point `p`.
pub fn check_packing_bounded(inst: &ConicMip, tol: &Tol) -> Result<PackingVerdict> {
    let dual = cones::dual(inst.cone());
    let m = inst.m();
    let mat = inst.constraint_matrix();
    let rows: Vec<Vector> = (0..m)
        .map(|i| inst.to_cone_order(&mat.row(i).transpose()))
        .collect();
    for r in &rows {
        if !cones::contains(&dual, r, tol.feas_eps * (1.0 + r.amax()))? {
            return Ok(PackingVerdict::NotPacking);
        }
    }
    if dual.has_zero_block() {
        return Ok(PackingVerdict::Unbounded);
    }
    let n = dual.dim();
    let p = cones::strict_interior_point(&dual)?;
    // variables y = (μ, t); rows Σ μ_i r_i − t p ∈ K_*
    let mut phi = Matrix::zeros(n, m + 1);
    for (i, r) in rows.iter().enumerate() {
        phi.column_mut(i).copy_from(r);
    }
    phi.column_mut(m).copy_from(&(-p));
    let mut cone = ConeSpec::nonneg(m);
    cone.push(Cone::Free(1));
    let mut d = Vector::zeros(m + 1);
    d[m] = -1.0;
    let shell = ConicMip::new(
        Matrix::zeros(0, 0),
        Matrix::zeros(0, m + 1),
        Vector::zeros(0),
        Vector::zeros(0),
        d,
        cone,
        RhsSense::Equal,
    )?;
    let mut upper = Vector::from_element(m + 1, f64::INFINITY);
    upper[m] = 1.0;
    let lower = Vector::from_element(m + 1, f64::NEG_INFINITY);
    let prog = ContinuousProgram::from_mip(&shell)
        .with_extra(ExtraRows::conic(
            Matrix::zeros(n, 0),
            phi,
            Matrix::zeros(n, 0),
            Vector::zeros(n),
            dual,
        ))?
        .with_bounds(lower, upper)?;
    let (sol, _) = solve_continuous(&prog, tol)?;
    match sol.status {
        Status::Optimal if sol.y[m] >= tol.dual_eps => Ok(PackingVerdict::Bounded),
        Status::Optimal => Ok(PackingVerdict::Unbounded),
        s => Err(Error::Solver(s)),
    }
}

/// Big-M clustering model with one block per cluster `q`:
/// `x^q = (ζ^q, ζ̄^q) ∈ Z_+^{2I}`, `y^q = (χ^q, δ^q, (η̄^q_ι, η^q_ι)_ι)` in
/// `Free(p) × NonNeg(I) × Soc(p+1)^I`, rows `Σ_q ζ^q_ι = 1`,
/// `η^q_ι − χ^q = −ξ_ι`, `η̄^q_ι − δ^q_ι + M ζ^q_ι = M`, `ζ^q_ι + ζ̄^q_ι = 1`,
/// objective `Σ δ`, with `M` the largest pairwise distance.
pub fn build_clustering_instance(points: &[Vector], q: usize) -> Result<BlockMip> {
    if q == 0 {
        return Err(Error::Invalid("at least one cluster is required".into()));
    }
    let n_pts = points.len();
    if n_pts == 0 {
        return Err(Error::Invalid("no points".into()));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::Invalid(
            "points must have at least one coordinate".into(),
        ));
    }
    for pt in points {
        check_len("point dimension", dim, pt.len())?;
        check_finite_vec(pt, "points")?;
    }
    let big_m = points
        .iter()
        .flat_map(|a| points.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);

    let per_block = dim * n_pts + 2 * n_pts;
    let m = n_pts + q * per_block;
    let n1 = 2 * n_pts;
    let soc_off = dim + n_pts;
    let n2 = soc_off + n_pts * (dim + 1);
    let mut b = Vector::zeros(m);
    b.rows_mut(0, n_pts).fill(1.0);
    let mut blocks = Vec::with_capacity(q);
    for l in 0..q {
        let (mut a, mut g) = (Matrix::zeros(m, n1), Matrix::zeros(m, n2));
        let base = n_pts + l * per_block;
        for i in 0..n_pts {
            a[(i, i)] = 1.0;
            let soc = soc_off + i * (dim + 1);
            for k in 0..dim {
                let r = base + i * dim + k;
                g[(r, soc + 1 + k)] = 1.0;
                g[(r, k)] = -1.0;
                b[r] = -points[i][k];
            }
            let r = base + dim * n_pts + i;
            g[(r, soc)] = 1.0;
            g[(r, dim + i)] = -1.0;
            a[(r, i)] = big_m;
            b[r] = big_m;
            let r = base + dim * n_pts + n_pts + i;
            a[(r, i)] = 1.0;
            a[(r, n_pts + i)] = 1.0;
            b[r] = 1.0;
        }
        let mut d = Vector::zeros(n2);
        d.rows_mut(dim, n_pts).fill(1.0);
        let mut cone = ConeSpec::nonneg(n1);
        cone.push(Cone::Free(dim));
        cone.push(Cone::NonNeg(n_pts));
        for _ in 0..n_pts {
            cone.push(Cone::Soc(dim + 1));
        }
        blocks.push(Block {
            a,
            g,
            c: Vector::zeros(n1),
            d,
            cone,
        });
    }
    BlockMip::new(blocks, b, RhsSense::Equal)
}

/// Cluster assignment and representatives read off a solution of the
/// clustering model.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `assignment[ι]` is the cluster of point `ι`.
    pub assignment: Vec<usize>,
    pub representatives: Vec<Vector>,
    pub objective: f64,
}

/// Solves the clustering model and decodes it.
pub fn solve_clustering(points: &[Vector], q: usize, cfg: &BnbConfig) -> Result<Clustering> {
    let inst = build_clustering_instance(points, q)?;
    let mip = inst.to_mip()?;
    let res = crate::mip::solve_mip(&mip, cfg)?;
    if res.solution.status != Status::Optimal {
        finite_or_limit(&res)?;
        return Err(Error::Solver(res.solution.status));
    }
    let (n_pts, dim) = (points.len(), points[0].len());
    let (n1, n2) = (2 * n_pts, dim + n_pts + n_pts * (dim + 1));
    let s = &res.solution;
    let mut assignment = vec![0; n_pts];
    for (i, slot) in assignment.iter_mut().enumerate() {
        *slot = (0..q)
            .max_by(|&a, &b| s.x[a * n1 + i].total_cmp(&s.x[b * n1 + i]))
            .unwrap_or(0);
    }
    let representatives = (0..q).map(|l| s.y.rows(l * n2, dim).into_owned()).collect();
    Ok(Clustering {
        assignment,
        representatives,
        objective: s.obj,
    })
}
