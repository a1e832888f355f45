//! Products of primitive cones: membership, duals and canonical interior points.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::Vector;

/// A primitive cone block. `Soc(k)` is `{(t, u) in R x R^(k-1) : t >= |u|}`.
/// `Zero` only arises as the dual of `Free`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cone {
    Free(usize),
    NonNeg(usize),
    Soc(usize),
    Zero(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Free(k) | Cone::NonNeg(k) | Cone::Soc(k) | Cone::Zero(k) => k,
        }
    }

    pub fn dual(&self) -> Cone {
        match *self {
            Cone::Free(k) => Cone::Zero(k),
            Cone::Zero(k) => Cone::Free(k),
            other => other,
        }
    }

    fn with_dim(&self, k: usize) -> Cone {
        match self {
            Cone::Free(_) => Cone::Free(k),
            Cone::NonNeg(_) => Cone::NonNeg(k),
            Cone::Soc(_) => Cone::Soc(k),
            Cone::Zero(_) => Cone::Zero(k),
        }
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cone::Free(k) => write!(f, "Free({k})"),
            Cone::NonNeg(k) => write!(f, "NonNeg({k})"),
            Cone::Soc(k) => write!(f, "Soc({k})"),
            Cone::Zero(k) => write!(f, "Zero({k})"),
        }
    }
}

/// Ordered product of primitive cones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ConeSpec {
    blocks: Vec<Cone>,
}

impl ConeSpec {
    pub fn new(blocks: Vec<Cone>) -> Result<Self> {
        for b in &blocks {
            match *b {
                Cone::Soc(k) if k < 2 => {
                    return Err(Error::InvalidCone(format!("{b} needs size >= 2")))
                }
                _ if b.dim() == 0 => return Err(Error::InvalidCone(format!("{b} is empty"))),
                _ => {}
            }
        }
        Ok(ConeSpec { blocks })
    }

    pub fn nonneg(k: usize) -> Self {
        Self::single(Cone::NonNeg(k))
    }

    pub fn free(k: usize) -> Self {
        Self::single(Cone::Free(k))
    }

    pub fn soc(k: usize) -> Self {
        Self::single(Cone::Soc(k))
    }

    fn single(c: Cone) -> Self {
        if c.dim() == 0 {
            ConeSpec::default()
        } else {
            ConeSpec { blocks: vec![c] }
        }
    }

    pub fn empty() -> Self {
        ConeSpec::default()
    }

    pub fn blocks(&self) -> &[Cone] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Cone::dim).sum()
    }

    /// Blocks paired with their starting coordinate.
    pub fn offsets(&self) -> impl Iterator<Item = (usize, Cone)> + '_ {
        self.blocks.iter().scan(0, |off, &b| {
            let start = *off;
            *off += b.dim();
            Some((start, b))
        })
    }

    /// Regular means closed, convex, pointed and full-dimensional: no Free or Zero blocks.
    pub fn is_regular(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| matches!(b, Cone::NonNeg(_) | Cone::Soc(_)))
    }

    pub fn has_zero_block(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, Cone::Zero(_)))
    }

    pub fn has_free_block(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, Cone::Free(_)))
    }

    pub fn concat(&self, other: &ConeSpec) -> ConeSpec {
        let mut out = self.clone();
        out.push_all(other);
        out
    }

    pub fn push(&mut self, c: Cone) {
        if c.dim() > 0 {
            self.blocks.push(c);
        }
    }

    pub fn push_all(&mut self, other: &ConeSpec) {
        self.blocks.extend_from_slice(&other.blocks);
    }

    /// Merges adjacent blocks of the same separable kind (Free, NonNeg, Zero).
    pub fn normalized(&self) -> ConeSpec {
        let mut out: Vec<Cone> = Vec::new();
        for &b in &self.blocks {
            match (out.last_mut(), b) {
                (Some(last), b)
                    if !matches!(b, Cone::Soc(_))
                        && std::mem::discriminant(last) == std::mem::discriminant(&b) =>
                {
                    *last = last.with_dim(last.dim() + b.dim());
                }
                _ => out.push(b),
            }
        }
        ConeSpec { blocks: out }
    }
}

impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.blocks.iter().map(Cone::to_string).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

fn check_dim(spec: &ConeSpec, v: &Vector) -> Result<()> {
    if spec.dim() != v.len() {
        return Err(Error::DimensionMismatch {
            what: "cone vector",
            expected: spec.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Signed distance-like margin of `v` inside each block, minimised over blocks.
/// `margin >= -eps` is membership, `margin >= eps` is interior membership.
fn min_margin(spec: &ConeSpec, v: &Vector) -> f64 {
    let mut worst = f64::INFINITY;
    for (off, b) in spec.offsets() {
        let s = v.rows(off, b.dim());
        let m = match b {
            Cone::Free(_) => f64::INFINITY,
            Cone::NonNeg(_) => s.min(),
            Cone::Soc(k) => s[0] - s.rows(1, k - 1).norm(),
            Cone::Zero(_) => -s.amax(),
        };
        worst = worst.min(m);
    }
    worst
}

/// Blockwise membership with slack `-eps`.
pub fn contains(spec: &ConeSpec, v: &Vector, eps: f64) -> Result<bool> {
    check_dim(spec, v)?;
    Ok(min_margin(spec, v) >= -eps)
}

/// Blockwise interior membership with margin `+eps`. Zero blocks have no interior.
pub fn in_interior(spec: &ConeSpec, v: &Vector, eps: f64) -> Result<bool> {
    check_dim(spec, v)?;
    if spec.has_zero_block() {
        return Ok(false);
    }
    Ok(min_margin(spec, v) >= eps)
}

/// How far `v` is from satisfying membership (0 when inside).
pub fn violation(spec: &ConeSpec, v: &Vector) -> Result<f64> {
    check_dim(spec, v)?;
    Ok((-min_margin(spec, v)).max(0.0))
}

pub fn dual(spec: &ConeSpec) -> ConeSpec {
    ConeSpec {
        blocks: spec.blocks.iter().map(Cone::dual).collect(),
    }
}

/// Canonical interior point: ones on NonNeg, `(2, 0, ..)` on Soc, zeros on Free.
pub fn strict_interior_point(spec: &ConeSpec) -> Result<Vector> {
    if spec.has_zero_block() {
        return Err(Error::ZeroBlock);
    }
    let mut v = Vector::zeros(spec.dim());
    for (off, b) in spec.offsets() {
        match b {
            Cone::NonNeg(k) => v.rows_mut(off, k).fill(1.0),
            Cone::Soc(_) => v[off] = 2.0,
            Cone::Free(_) | Cone::Zero(_) => {}
        }
    }
    Ok(v)
}
