use std::io::Write;
use std::path::Path;

use padic_uncertainty::{delta, Exponent, Instance, Prime, ReportFormat, Verdict};
use serde::Serialize;

use crate::{CliError, EXIT_OK, EXIT_VIOLATION};

#[derive(Serialize)]
struct EvalOutput<'a> {
    p: Prime,
    delta_a: Exponent,
    delta_b: Exponent,
    verdicts: &'a [Verdict],
}

/// `p^e` for display: `0`, `5^3`, `2^(-7/2)`.
fn magnitude(e: Exponent, p: Prime) -> String {
    match e {
        Exponent::NegInfinity => "0".to_string(),
        Exponent::Finite { twice } if twice % 2 == 0 => format!("{p}^{}", twice / 2),
        Exponent::Finite { twice } => format!("{p}^({twice}/2)"),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn cmd_eval(path: &Path, format: ReportFormat, out: &mut dyn Write) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read instance {}: {e}", path.display())))?;
    let instance: Instance = serde_json::from_str(&text)
        .map_err(|e| CliError(format!("malformed instance {}: {e}", path.display())))?;
    instance.validate()?;
    let delta_a = delta(&instance.a, &instance.x)?;
    let delta_b = delta(&instance.b, &instance.x)?;
    let verdicts = instance.evaluate()?;
    let p = instance.p;

    match format {
        ReportFormat::Json => {
            let doc = EvalOutput { p, delta_a, delta_b, verdicts: &verdicts };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        ReportFormat::Text | ReportFormat::Csv => {
            writeln!(out, "p = {p}, dim = {}", instance.x.dim())?;
            for (name, d) in [("A", delta_a), ("B", delta_b)] {
                let value = d.to_rational(p).map(|r| format!(" = {r}")).unwrap_or_default();
                writeln!(out, "Δ_x({name}) = {}{value} (exponent {d})", magnitude(d, p))?;
            }
            writeln!(
                out,
                "{:<22} {:<6} {:<6} {:<11} {:<12} rhs",
                "check", "holds", "tight", "degenerate", "lhs"
            )?;
            for v in &verdicts {
                writeln!(
                    out,
                    "{:<22} {:<6} {:<6} {:<11} {:<12} {}",
                    v.check.name(),
                    yes_no(v.holds),
                    yes_no(v.tight),
                    yes_no(v.degenerate),
                    magnitude(v.lhs, p),
                    magnitude(v.rhs, p)
                )?;
            }
        }
    }
    let violations = verdicts.iter().filter(|v| !v.holds).count();
    Ok(if violations == 0 { EXIT_OK } else { EXIT_VIOLATION })
}
