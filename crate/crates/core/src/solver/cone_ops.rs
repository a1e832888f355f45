//! Nesterov-Todd scaling, Jordan algebra and step lengths for the slack cone
//! of the standard form (products of NonNeg and Soc blocks).

#[cfg(test)]
use nalgebra::DMatrix;

use crate::model::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StdCone {
    NonNeg(usize),
    Soc(usize),
}

impl StdCone {
    pub(crate) fn dim(&self) -> usize {
        match *self {
            StdCone::NonNeg(k) | StdCone::Soc(k) => k,
        }
    }
}

pub(crate) fn offsets(cones: &[StdCone]) -> impl Iterator<Item = (usize, StdCone)> + '_ {
    cones.iter().scan(0, |off, &c| {
        let start = *off;
        *off += c.dim();
        Some((start, c))
    })
}

/// Number of cone "degrees" (NonNeg coordinates count one each, an Soc block counts one).
pub(crate) fn degree(cones: &[StdCone]) -> usize {
    cones
        .iter()
        .map(|c| match c {
            StdCone::NonNeg(k) => *k,
            StdCone::Soc(_) => 1,
        })
        .sum()
}

/// Jordan identity: ones on NonNeg, `(1, 0, ..)` on Soc.
pub(crate) fn identity(cones: &[StdCone], q: usize) -> Vector {
    let mut e = Vector::zeros(q);
    for (off, c) in offsets(cones) {
        match c {
            StdCone::NonNeg(k) => e.rows_mut(off, k).fill(1.0),
            StdCone::Soc(_) => e[off] = 1.0,
        }
    }
    e
}

fn soc_res(v: &[f64]) -> f64 {
    let t: f64 = v[1..].iter().map(|u| u * u).sum();
    (v[0] - t.sqrt()) * (v[0] + t.sqrt())
}

/// Jordan product `u o v`.
pub(crate) fn jordan_product(cones: &[StdCone], u: &Vector, v: &Vector) -> Vector {
    let mut out = Vector::zeros(u.len());
    for (off, c) in offsets(cones) {
        match c {
            StdCone::NonNeg(k) => {
                for i in off..off + k {
                    out[i] = u[i] * v[i];
                }
            }
            StdCone::Soc(k) => {
                let uu = u.rows(off, k);
                let vv = v.rows(off, k);
                out[off] = uu.dot(&vv);
                for i in 1..k {
                    out[off + i] = uu[0] * vv[i] + vv[0] * uu[i];
                }
            }
        }
    }
    out
}

/// Solves `lambda o x = v` for `x`.
pub(crate) fn jordan_div(cones: &[StdCone], lambda: &Vector, v: &Vector) -> Vector {
    let mut out = Vector::zeros(v.len());
    for (off, c) in offsets(cones) {
        match c {
            StdCone::NonNeg(k) => {
                for i in off..off + k {
                    out[i] = v[i] / lambda[i];
                }
            }
            StdCone::Soc(k) => {
                let l = lambda.rows(off, k);
                let vv = v.rows(off, k);
                let rho = soc_res(l.as_slice());
                let nu = l.rows(1, k - 1).dot(&vv.rows(1, k - 1));
                out[off] = (l[0] * vv[0] - nu) / rho;
                let coef = (nu / l[0] - vv[0]) / rho;
                for i in 1..k {
                    out[off + i] = coef * l[i] + vv[i] / l[0];
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
enum BlockScaling {
    NonNeg(Vec<f64>),
    Soc { eta: f64, w: Vector },
}

/// Nesterov-Todd scaling `W` with `W z = W^{-1} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    cones: Vec<StdCone>,
    blocks: Vec<BlockScaling>,
    pub(crate) lambda: Vector,
}

impl Scaling {
    /// Returns `None` when `s` or `z` is not strictly interior.
    pub(crate) fn new(cones: &[StdCone], s: &Vector, z: &Vector) -> Option<Self> {
        let mut blocks = Vec::with_capacity(cones.len());
        for (off, c) in offsets(cones) {
            match c {
                StdCone::NonNeg(k) => {
                    let mut w = Vec::with_capacity(k);
                    for i in off..off + k {
                        if !(s[i] > 0.0 && z[i] > 0.0) {
                            return None;
                        }
                        w.push((s[i] / z[i]).sqrt());
                    }
                    blocks.push(BlockScaling::NonNeg(w));
                }
                StdCone::Soc(k) => {
                    let sv = s.rows(off, k);
                    let zv = z.rows(off, k);
                    let sres = soc_res(sv.as_slice());
                    let zres = soc_res(zv.as_slice());
                    if !(sres > 0.0 && zres > 0.0 && sv[0] > 0.0 && zv[0] > 0.0) {
                        return None;
                    }
                    let (sn, zn) = (sres.sqrt(), zres.sqrt());
                    let sb = sv / sn;
                    let zb = zv / zn;
                    let gamma = ((1.0 + sb.dot(&zb)) / 2.0).sqrt();
                    let mut w = Vector::zeros(k);
                    w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                    for i in 1..k {
                        w[i] = (sb[i] - zb[i]) / (2.0 * gamma);
                    }
                    let eta = (sn / zn).sqrt();
                    blocks.push(BlockScaling::Soc { eta, w });
                }
            }
        }
        let mut sc = Scaling {
            cones: cones.to_vec(),
            blocks,
            lambda: Vector::zeros(0),
        };
        sc.lambda = sc.apply(z, false);
        Some(sc)
    }

    /// `W v` (or `W^{-1} v` when `inverse`).
    pub(crate) fn apply(&self, v: &Vector, inverse: bool) -> Vector {
        let mut out = Vector::zeros(v.len());
        for ((off, _), b) in offsets(&self.cones).zip(&self.blocks) {
            match b {
                BlockScaling::NonNeg(w) => {
                    for (i, wi) in w.iter().enumerate() {
                        out[off + i] = if inverse {
                            v[off + i] / wi
                        } else {
                            v[off + i] * wi
                        };
                    }
                }
                BlockScaling::Soc { eta, w } => {
                    let k = w.len();
                    let vv = v.rows(off, k);
                    let w1 = w.rows(1, k - 1);
                    let v1 = vv.rows(1, k - 1);
                    let d = w1.dot(&v1);
                    let sign = if inverse { -1.0 } else { 1.0 };
                    let scale = if inverse { 1.0 / eta } else { *eta };
                    out[off] = scale * (w[0] * vv[0] + sign * d);
                    let coef = sign * vv[0] + d / (1.0 + w[0]);
                    for i in 1..k {
                        out[off + i] = scale * (vv[i] + coef * w[i]);
                    }
                }
            }
        }
        out
    }

    #[cfg(test)]
    /// Writes `-(W^T W) - reg I` into the diagonal block of `kkt` starting at `start`.
    pub(crate) fn write_neg_w2(&self, kkt: &mut DMatrix<f64>, start: usize, reg: f64) {
        for ((off, _), b) in offsets(&self.cones).zip(&self.blocks) {
            match b {
                BlockScaling::NonNeg(w) => {
                    for (i, wi) in w.iter().enumerate() {
                        let r = start + off + i;
                        kkt[(r, r)] = -(wi * wi) - reg;
                    }
                }
                BlockScaling::Soc { eta, w } => {
                    let k = w.len();
                    // W^2 = eta^2 (2 w w' - J)
                    let e2 = eta * eta;
                    for i in 0..k {
                        for j in 0..k {
                            let mut v = 2.0 * w[i] * w[j];
                            if i == j {
                                v += if i == 0 { -1.0 } else { 1.0 };
                            }
                            kkt[(start + off + i, start + off + j)] = -e2 * v;
                        }
                        kkt[(start + off + i, start + off + i)] -= reg;
                    }
                }
            }
        }
    }

    /// `W^T W v`.
    #[cfg(test)]
    pub(crate) fn apply_w2(&self, v: &Vector) -> Vector {
        self.apply(&self.apply(v, false), false)
    }
}

/// Largest `alpha` such that `x + alpha d` stays in the cone (may be infinite).
pub(crate) fn max_step(cones: &[StdCone], x: &Vector, d: &Vector) -> f64 {
    let mut best = f64::INFINITY;
    for (off, c) in offsets(cones) {
        match c {
            StdCone::NonNeg(k) => {
                for i in off..off + k {
                    if d[i] < 0.0 {
                        best = best.min(-x[i] / d[i]);
                    }
                }
            }
            StdCone::Soc(k) => {
                let xv = x.rows(off, k);
                let dv = d.rows(off, k);
                let xn = soc_res(xv.as_slice()).max(0.0).sqrt();
                if xn <= 0.0 {
                    return 0.0;
                }
                let xb = xv / xn;
                let rho0 = (xb[0] * dv[0] - xb.rows(1, k - 1).dot(&dv.rows(1, k - 1))) / xn;
                let factor = (rho0 + dv[0] / xn) / (xb[0] + 1.0);
                let mut r1 = 0.0;
                for i in 1..k {
                    let v = dv[i] / xn - factor * xb[i];
                    r1 += v * v;
                }
                let denom = r1.sqrt() - rho0;
                if denom > 0.0 {
                    best = best.min(1.0 / denom);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn soc_member(v: &Vector) -> bool {
        v[0] >= v.rows(1, v.len() - 1).norm()
    }

    fn interior_soc() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0f64..2.0, 3).prop_flat_map(|tail| {
            let n = tail.iter().map(|t| t * t).sum::<f64>().sqrt();
            (0.05f64..3.0).prop_map(move |extra| {
                let mut v = vec![n + extra];
                v.extend(&tail);
                v
            })
        })
    }

    proptest! {
        #[test]
        fn nt_scaling_maps_z_to_w_inverse_s(s in interior_soc(), z in interior_soc(), p in proptest::collection::vec(0.1f64..3.0, 2), q in proptest::collection::vec(0.1f64..3.0, 2)) {
            let cones = [StdCone::Soc(4), StdCone::NonNeg(2)];
            let s = Vector::from_iterator(6, s.into_iter().chain(p));
            let z = Vector::from_iterator(6, z.into_iter().chain(q));
            let sc = Scaling::new(&cones, &s, &z).unwrap();
            let wz = sc.apply(&z, false);
            let wis = sc.apply(&s, true);
            prop_assert!((&wz - &wis).amax() <= 1e-9 * (1.0 + wz.amax()));
            let round = sc.apply(&sc.apply(&s, false), true);
            prop_assert!((round - &s).amax() <= 1e-9 * (1.0 + s.amax()));
            let mut k = DMatrix::zeros(6, 6);
            sc.write_neg_w2(&mut k, 0, 0.0);
            let w2s = -(k * &s);
            prop_assert!((w2s - sc.apply_w2(&s)).amax() <= 1e-8 * (1.0 + s.amax()));
        }

        #[test]
        fn jordan_division_inverts_product(l in interior_soc(), v in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let cones = [StdCone::Soc(4)];
            let l = Vector::from_vec(l);
            let v = Vector::from_vec(v);
            let x = jordan_div(&cones, &l, &v);
            let back = jordan_product(&cones, &l, &x);
            prop_assert!((back - &v).amax() <= 1e-8 * (1.0 + x.amax()));
        }

        #[test]
        fn soc_step_matches_bisection(x in interior_soc(), d in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let cones = [StdCone::Soc(4)];
            let x = Vector::from_vec(x);
            let d = Vector::from_vec(d);
            let a = max_step(&cones, &x, &d);
            let inside = |t: f64| soc_member(&(&x + &d * t));
            if a.is_finite() {
                prop_assert!(inside(a * (1.0 - 1e-7)));
                prop_assert!(!inside(a * (1.0 + 1e-6) + 1e-9));
            } else {
                prop_assert!(inside(1e6));
            }
        }
    }
}
