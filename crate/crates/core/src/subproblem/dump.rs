//! Plain-text dump of a canonicalized subproblem, one constraint per line,
//! for cross-checking against an external conic solver.
//!
//! Line grammar:
//!
//! ```text
//! subproblem m=<M> sigma2=<f> power=<f> objective=<max_omega|max_slack>
//! block <w_c|w_e> psd <M>
//! bound <omega|zeta|slack> lower=<f> upper=<f|inf>
//! lograte <label> log=<affine> log=<affine> minus=<affine>      # sum ln(log) - minus >= 0
//! quadratic <label> square=<affine> ... linear=<affine>          # 0.5 sum square^2 + linear <= 0
//! linear <label> expr=<affine>                                   # expr <= 0
//! ```
//!
//! An `<affine>` is `{const=<f> omega=<f> zeta=<f> slack=<f> w_c=[...] w_e=[...]}`
//! where matrices are written row-major as `re:im` pairs separated by
//! commas, or `none` when the block is absent. Reals use 17 significant
//! digits.

use std::io::{self, Write};

use super::{AffineExpr, Constraint, Objective, SubproblemSpec, Var};
use crate::linalg::CMat;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn matrix(m: &Option<CMat>) -> String {
    match m {
        None => "none".into(),
        Some(a) => {
            let mut parts = Vec::with_capacity(a.len());
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    let z = a[(i, j)];
                    parts.push(format!("{}:{}", num(z.re), num(z.im)));
                }
            }
            format!("[{}]", parts.join(","))
        }
    }
}

fn affine(e: &AffineExpr) -> String {
    format!(
        "{{const={} omega={} zeta={} slack={} w_c={} w_e={}}}",
        num(e.constant),
        num(e.omega),
        num(e.zeta),
        num(e.slack),
        matrix(&e.w_c),
        matrix(&e.w_e)
    )
}

pub(super) fn write_spec<W: Write>(spec: &SubproblemSpec, out: &mut W) -> io::Result<()> {
    let objective = match spec.objective {
        Objective::MaxOmega => "max_omega",
        Objective::MaxSlack => "max_slack",
    };
    writeln!(
        out,
        "subproblem m={} sigma2={} power={} objective={objective}",
        spec.m,
        num(spec.sigma2),
        num(spec.power)
    )?;
    if spec.shape.beam_c {
        writeln!(out, "block w_c psd {}", spec.m)?;
    }
    if spec.shape.beam_e {
        writeln!(out, "block w_e psd {}", spec.m)?;
    }
    for b in &spec.bounds {
        let name = match b.var {
            Var::Omega => "omega",
            Var::Zeta => "zeta",
            Var::Slack => "slack",
        };
        let upper = b.upper.map_or_else(|| "inf".to_string(), num);
        writeln!(out, "bound {name} lower={} upper={upper}", num(b.lower))?;
    }
    for c in &spec.constraints {
        match c {
            Constraint::LogRate { label, logs, minus } => {
                let logs: Vec<String> = logs.iter().map(|l| format!("log={}", affine(l))).collect();
                writeln!(out, "lograte {label} {} minus={}", logs.join(" "), affine(minus))?;
            }
            Constraint::Quadratic { label, squares, linear } => {
                let sq: Vec<String> = squares.iter().map(|l| format!("square={}", affine(l))).collect();
                writeln!(out, "quadratic {label} {} linear={}", sq.join(" "), affine(linear))?;
            }
            Constraint::Linear { label, expr } => {
                writeln!(out, "linear {label} expr={}", affine(expr))?;
            }
        }
    }
    Ok(())
}
