//! The `cdk` subcommands. Each returns the text for stdout and an exit code;
//! errors carry their own exit code through [`CliError::exit_code`].

use std::path::Path;

use cdk_core::duality::{
    alpha_star_from_hull, check_complementary_slackness, check_dual_feasibility,
    check_weak_duality, eval_generator, sweep_generator, CertificateOrigin, GeneratingSet,
    GeneratorCertificate,
};
use cdk_core::mip::{solve_mip, BnbConfig};
use cdk_core::model::{ConicMip, Matrix, RhsSense, Status, Tol, Vector};
use cdk_core::structure::{build_fiber_hull, check_packing_bounded, solve_clustering, IntBox};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::problem::{cone_entries, ProblemFile};
use crate::sweep::{parse_grid, parse_vector, write_sweep};
use crate::{status_exit_code, CliError, EXIT_OK};

/// Relative tolerance of every certificate comparison in `certify`. Hull
/// multipliers of an unattained dual certify only to about this accuracy.
pub const CERTIFY_GAP: f64 = 1e-4;

/// Generators sampled per Soc block when `certify` gets neither `--gens`
/// nor `--sample`.
pub const DEFAULT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x + 0.0)
    } else {
        Value::Null
    }
}

fn vec_json(v: &Vector) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn mat_json(m: &Matrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|&x| num(x)).collect()))
            .collect(),
    )
}

fn load(path: &Path) -> Result<ConicMip, CliError> {
    ProblemFile::read(path)?.to_mip()
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialise") + "\n"
}

/// Parses `lo:hi` per coordinate, coordinates separated by commas.
pub fn parse_box(spec: &str, n1: usize) -> Result<IntBox, CliError> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in spec.split(',') {
        let (l, h) = part
            .split_once(':')
            .ok_or_else(|| CliError::Parse(format!("box range `{part}` is not lo:hi")))?;
        let int = |s: &str| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Parse(format!("`{s}` is not an integer")))
        };
        lo.push(int(l)?);
        hi.push(int(h)?);
    }
    if lo.len() == 1 && n1 > 1 {
        lo = vec![lo[0]; n1];
        hi = vec![hi[0]; n1];
    }
    if lo.len() != n1 {
        return Err(CliError::Parse(format!(
            "box has {} ranges, the instance has {n1} integer variables",
            lo.len()
        )));
    }
    Ok(IntBox::new(lo, hi)?)
}

pub fn cmd_solve(path: &Path, cfg: &BnbConfig) -> Result<Outcome, CliError> {
    let inst = load(path)?;
    let res = solve_mip(&inst, cfg)?;
    let s = &res.solution;
    let found = s.status == Status::Optimal || (s.status == Status::NodeLimit && s.obj.is_finite());
    let out = json!({
        "status": s.status.as_str(),
        "obj": if found { num(s.obj) } else { Value::Null },
        "x": if found { vec_json(&s.x) } else { Value::Null },
        "y": if found { vec_json(&s.y) } else { Value::Null },
        "nodes": res.nodes_explored,
        "best_bound": num(res.best_bound),
    });
    Ok(Outcome {
        code: status_exit_code(s.status),
        stdout: pretty(&out),
    })
}

/// `F_α` and `F'_α` over a grid. The CSV goes to `out` when given, to
/// stdout otherwise.
pub fn cmd_gen_sweep(
    path: &Path,
    alpha: &str,
    grid: &str,
    out: Option<&Path>,
    cfg: &BnbConfig,
) -> Result<Outcome, CliError> {
    let inst = load(path)?;
    let alpha = parse_vector(alpha, inst.m())?;
    let omegas = parse_grid(grid, inst.m())?;
    let cert = GeneratorCertificate::new(&inst, alpha, CertificateOrigin::UserGiven)?;
    let rows = sweep_generator(&cert, &omegas, cfg);
    let mut buf = Vec::new();
    write_sweep(&mut buf, &rows)?;
    let stdout = match out {
        Some(p) => {
            std::fs::write(p, &buf).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            String::new()
        }
        None => String::from_utf8(buf).expect("csv output is utf-8"),
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSource {
    Given(String),
    /// Hull multipliers over the fibers in the box `lo:hi[,lo:hi...]`.
    Auto {
        u_box: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSource {
    File(std::path::PathBuf),
    Sample(usize),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenPoint {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn load_generators(path: &Path, inst: &ConicMip, tol: &Tol) -> Result<GeneratingSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw: Vec<GenPoint> =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let points = raw
        .into_iter()
        .map(|p| {
            if p.x.len() != inst.n1() || p.y.len() != inst.n2() {
                return Err(CliError::Parse("generator has the wrong dimension".into()));
            }
            Ok((Vector::from_vec(p.x), Vector::from_vec(p.y)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GeneratingSet::new(inst, points, tol)?)
}

/// Dual feasibility, weak and strong duality and complementary slackness of
/// `F_α` at the optimum found by branch and bound.
pub fn cmd_certify(
    path: &Path,
    alpha: &AlphaSource,
    gens: &GeneratorSource,
    seed: u64,
    base: &BnbConfig,
) -> Result<Outcome, CliError> {
    let inst = load(path)?;
    let mut cfg = *base;
    cfg.tol.gap_eps = CERTIFY_GAP;
    let res = solve_mip(&inst, &cfg)?;
    if res.solution.status != Status::Optimal {
        let out = json!({ "status": res.solution.status.as_str() });
        return Ok(Outcome {
            code: status_exit_code(res.solution.status),
            stdout: pretty(&out),
        });
    }
    let opt = &res.solution;
    let z = opt.obj;
    let cert = match alpha {
        AlphaSource::Given(s) => GeneratorCertificate::new(
            &inst,
            parse_vector(s, inst.m())?,
            CertificateOrigin::UserGiven,
        )?,
        AlphaSource::Auto { u_box } => {
            let bx = parse_box(u_box, inst.n1())?;
            let hull = build_fiber_hull(&inst.with_sense(RhsSense::LessEqual), &bx, &cfg)?;
            alpha_star_from_hull(&inst, &hull, &cfg)?
        }
    };
    let gens = match gens {
        GeneratorSource::File(p) => load_generators(p, &inst, &cfg.tol)?,
        GeneratorSource::Sample(n) => GeneratingSet::cone_samples(&inst, *n, seed, &cfg.tol),
    };
    let feas = check_dual_feasibility(&inst, &cert, &gens, &cfg)?;
    let weak = check_weak_duality(&inst, &cert, opt, &cfg)?;
    let f_b = eval_generator(&cert, inst.b(), &cfg)?;
    let gap = (f_b - z).abs();
    let comp = check_complementary_slackness(&inst, &cert, opt, &cfg)?;
    let out = json!({
        "status": "optimal",
        "alpha": vec_json(&cert.alpha),
        "z_star": num(z),
        "F_alpha_b": num(f_b),
        "dual_feasible": feas.holds,
        "worst_violation": num(feas.worst_violation),
        "generators_checked": feas.generators_checked,
        "weak_duality": weak.holds,
        "strong_duality": gap <= CERTIFY_GAP * (1.0 + z.abs()),
        "gap": num(gap),
        "comp_slack": comp,
    });
    Ok(Outcome {
        code: EXIT_OK,
        stdout: pretty(&out),
    })
}

pub fn cmd_pack_check(path: &Path, tol: &Tol) -> Result<Outcome, CliError> {
    let inst = load(path)?;
    let verdict = check_packing_bounded(&inst, tol)?;
    Ok(Outcome {
        code: EXIT_OK,
        stdout: format!("{}\n", verdict.as_str()),
    })
}

/// Points CSV without a header, one point per row.
pub fn read_points(path: &Path) -> Result<Vec<Vector>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
        let xs = rec
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Parse(format!("`{s}` is not a finite number"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        points.push(Vector::from_vec(xs));
    }
    if points.is_empty() {
        return Err(CliError::Parse("no points".into()));
    }
    Ok(points)
}

pub fn cmd_cluster(
    points: &Path,
    q: usize,
    out: Option<&Path>,
    cfg: &BnbConfig,
) -> Result<Outcome, CliError> {
    let pts = read_points(points)?;
    let res = solve_clustering(&pts, q, cfg)?;
    let value = json!({
        "objective": num(res.objective),
        "assignment": res.assignment,
        "representatives": res.representatives.iter().map(vec_json).collect::<Vec<_>>(),
    });
    let text = pretty(&value);
    if let Some(p) = out {
        std::fs::write(p, &text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout: text,
    })
}

/// The hull rows `Π x + Φ y + Ψ w − π ∈ C` and the coupling equalities.
pub fn cmd_fiber_hull(path: &Path, u_box: &str, cfg: &BnbConfig) -> Result<Outcome, CliError> {
    let inst = load(path)?;
    let bx = parse_box(u_box, inst.n1())?;
    let hull = build_fiber_hull(&inst.with_sense(RhsSense::LessEqual), &bx, cfg)?;
    let rows = hull.extra_rows();
    let value = json!({
        "fibers": hull.fibers().iter().map(vec_json).collect::<Vec<_>>(),
        "n_aux": rows.n_aux,
        "Pi": mat_json(&rows.pi),
        "Phi": mat_json(&rows.phi),
        "Psi": mat_json(&rows.psi),
        "pi": vec_json(&rows.rhs),
        "cone": serde_json::to_value(cone_entries(&rows.cone)?).expect("cone entries serialise"),
        "eq": {
            "Pi": mat_json(&rows.eq_pi),
            "Phi": mat_json(&rows.eq_phi),
            "Psi": mat_json(&rows.eq_psi),
            "rhs": vec_json(&rows.eq_rhs),
        },
    });
    Ok(Outcome {
        code: EXIT_OK,
        stdout: pretty(&value),
    })
}
