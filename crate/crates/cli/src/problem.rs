//! JSON problem files.

use std::path::Path;

use cdk_core::cones::{Cone, ConeSpec};
use cdk_core::model::{BlockSpec, ConicMip, Matrix, RhsSense, Vector};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeType {
    Nonneg,
    Soc,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeEntry {
    #[serde(rename = "type")]
    pub kind: ConeType,
    pub dim: usize,
}

/// Half-open column ranges `[start, end)` of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub x_cols: [usize; 2],
    pub y_cols: [usize; 2],
    pub cone: Vec<ConeEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SenseEntry {
    #[default]
    Eq,
    Le,
}

/// On-disk instance. `A` and `G` are row-major lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub cone: Vec<ConeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockEntry>>,
    #[serde(default)]
    pub sense: SenseEntry,
}

fn cone_spec(entries: &[ConeEntry]) -> Result<ConeSpec, CliError> {
    let blocks = entries
        .iter()
        .map(|e| match e.kind {
            ConeType::Nonneg => Cone::NonNeg(e.dim),
            ConeType::Soc => Cone::Soc(e.dim),
            ConeType::Free => Cone::Free(e.dim),
        })
        .collect();
    Ok(ConeSpec::new(blocks)?)
}

pub(crate) fn cone_entries(spec: &ConeSpec) -> Result<Vec<ConeEntry>, CliError> {
    spec.blocks()
        .iter()
        .map(|c| {
            let (kind, dim) = match *c {
                Cone::NonNeg(k) => (ConeType::Nonneg, k),
                Cone::Soc(k) => (ConeType::Soc, k),
                Cone::Free(k) => (ConeType::Free, k),
                Cone::Zero(_) => {
                    return Err(CliError::Parse(
                        "zero cones have no file representation".into(),
                    ))
                }
            };
            Ok(ConeEntry { kind, dim })
        })
        .collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], m: usize, n: usize) -> Result<Matrix, CliError> {
    if rows.len() != m {
        return Err(CliError::Parse(format!(
            "{name} has {} rows, expected {m}",
            rows.len()
        )));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(CliError::Parse(format!(
            "row {i} of {name} has {} entries, expected {n}",
            r.len()
        )));
    }
    Ok(Matrix::from_fn(m, n, |i, j| rows[i][j]))
}

fn vector(name: &str, xs: &[f64], n: usize) -> Result<Vector, CliError> {
    if xs.len() != n {
        return Err(CliError::Parse(format!(
            "{name} has {} entries, expected {n}",
            xs.len()
        )));
    }
    Ok(Vector::from_column_slice(xs))
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialise")
    }

    pub fn to_mip(&self) -> Result<ConicMip, CliError> {
        let (m, n1, n2) = (self.m, self.n1, self.n2);
        let sense = match self.sense {
            SenseEntry::Eq => RhsSense::Equal,
            SenseEntry::Le => RhsSense::LessEqual,
        };
        let inst = ConicMip::new(
            matrix("A", &self.a, m, n1)?,
            matrix("G", &self.g, m, n2)?,
            vector("b", &self.b, m)?,
            vector("c", &self.c, n1)?,
            vector("d", &self.d, n2)?,
            cone_spec(&self.cone)?,
            sense,
        )?;
        match &self.blocks {
            None => Ok(inst),
            Some(blocks) => {
                let specs = blocks
                    .iter()
                    .map(|b| {
                        if b.x_cols[0] > b.x_cols[1] || b.y_cols[0] > b.y_cols[1] {
                            return Err(CliError::Parse(
                                "block column range has start > end".into(),
                            ));
                        }
                        Ok(BlockSpec {
                            x_cols: b.x_cols[0]..b.x_cols[1],
                            y_cols: b.y_cols[0]..b.y_cols[1],
                            cone: cone_spec(&b.cone)?,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(inst.with_blocks(specs)?)
            }
        }
    }

    pub fn from_mip(inst: &ConicMip) -> Result<Self, CliError> {
        let blocks = match inst.blocks() {
            None => None,
            Some(bs) => Some(
                bs.iter()
                    .map(|b| {
                        Ok(BlockEntry {
                            x_cols: [b.x_cols.start, b.x_cols.end],
                            y_cols: [b.y_cols.start, b.y_cols.end],
                            cone: cone_entries(&b.cone)?,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
            ),
        };
        Ok(ProblemFile {
            m: inst.m(),
            n1: inst.n1(),
            n2: inst.n2(),
            a: rows(inst.a()),
            g: rows(inst.g()),
            b: inst.b().iter().copied().collect(),
            c: inst.c().iter().copied().collect(),
            d: inst.d().iter().copied().collect(),
            cone: cone_entries(inst.cone())?,
            blocks,
            sense: match inst.sense() {
                RhsSense::Equal => SenseEntry::Eq,
                RhsSense::LessEqual => SenseEntry::Le,
            },
        })
    }
}
