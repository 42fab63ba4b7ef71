//! Command-line front end: theory selection, fan I/O, subcommand dispatch,
//! deterministic JSON and text reports.
//!
//! Exit codes: 0 success, 1 domain errors (non-smooth input where
//! smoothness is required, unsupported descent, incompleteness), 2 for
//! I/O and parse errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use toric_obm::calculus::{
    check_gluing, equivariant_presentation, graded_invariants, restrict_to_orbit, simplify, sr_ring,
};
use toric_obm::descent::singular_presentation_seeded;
use toric_obm::duality::{check_kunneth, dual_module};
use toric_obm::error::{Error, Result};
use toric_obm::fan::{fan_to_json, parse_fan, Cone, Fan};
use toric_obm::report::{
    dual_to_json, invariants_to_json, kunneth_to_json, plan_to_json, presentation_to_json,
    presentation_to_text, sr_ring_to_json,
};
use toric_obm::ring::{poly_from_json, poly_to_json, Theory};

#[derive(Parser)]
#[command(
    name = "toric-obm",
    version,
    about = "Oriented Borel-Moore homology of toric varieties from fans"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryName {
    Chow,
    Ktheory,
    Cobordism,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Args)]
struct TheoryOpts {
    /// Homology theory (formal group law).
    #[arg(long, value_enum, default_value = "cobordism")]
    theory: TheoryName,
    /// Truncation degree; defaults to the fan rank (product rank for
    /// kunneth-check).
    #[arg(long)]
    truncation: Option<u32>,
    /// Multiplicative-law scale for --theory ktheory.
    #[arg(long, default_value_t = 1)]
    beta: i64,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    output: OutputFormat,
}

impl TheoryOpts {
    fn build(&self, default_trunc: u32) -> Result<Theory> {
        let d = self.truncation.unwrap_or(default_trunc);
        if d > 9 {
            return Err(Error::BadInput(format!(
                "truncation degree {} exceeds the supported bound 9",
                d
            )));
        }
        Ok(match self.theory {
            TheoryName::Chow => Theory::additive(d),
            TheoryName::Ktheory => Theory::multiplicative(d, self.beta),
            TheoryName::Cobordism => Theory::universal(d),
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Module presentation of the homology of the toric variety.
    Present {
        #[command(flatten)]
        opts: TheoryOpts,
        /// Equivariant presentation (smooth fans only).
        #[arg(long)]
        equivariant: bool,
        fan: PathBuf,
    },
    /// Stanley-Reisner cohomology ring of a smooth fan.
    SrRing {
        #[command(flatten)]
        opts: TheoryOpts,
        /// Drop the linear-form relations (equivariant cohomology).
        #[arg(long)]
        equivariant: bool,
        fan: PathBuf,
    },
    /// Toric resolution of the fan.
    Resolve {
        #[arg(long, value_enum, default_value = "json")]
        output: OutputFormat,
        fan: PathBuf,
    },
    /// Descent presentation for a (possibly singular) fan.
    Descent {
        #[command(flatten)]
        opts: TheoryOpts,
        /// Also emit the descent plan.
        #[arg(long)]
        explain: bool,
        fan: PathBuf,
    },
    /// Kronecker-dual module of the presentation.
    Dual {
        #[command(flatten)]
        opts: TheoryOpts,
        /// Proceed on non-complete fans (recorded as a caveat).
        #[arg(long)]
        allow_noncomplete_dual: bool,
        fan: PathBuf,
    },
    /// Compare the tensor presentation with the product-fan presentation.
    KunnethCheck {
        #[command(flatten)]
        opts: TheoryOpts,
        fan_x: PathBuf,
        fan_y: PathBuf,
    },
    /// Restrict a Stanley-Reisner class to an orbit ring.
    OrbitRestrict {
        #[command(flatten)]
        opts: TheoryOpts,
        /// Comma-separated ray indices of the cone (empty for the zero cone).
        #[arg(long, default_value = "")]
        cone: String,
        /// Ring element JSON (monomial -> coefficient).
        #[arg(long)]
        class: String,
        /// Check the glued family over all cones instead of one restriction.
        #[arg(long)]
        glue_check: bool,
        fan: PathBuf,
    },
}

fn read_fan(path: &PathBuf) -> Result<Fan> {
    let text = std::fs::read_to_string(path)?;
    parse_fan(&text)
}

fn seed_from_env() -> Option<u64> {
    std::env::var("TORIC_OBM_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}

fn truncation_caveat(theory: &Theory) -> String {
    format!(
        "all results are computed modulo terms above coefficient degree {}",
        theory.trunc.lazard
    )
}

fn emit(value: serde_json::Value, text: Option<String>, fmt: OutputFormat) {
    match fmt {
        OutputFormat::Json => println!("{}", serde_json::to_string(&value).unwrap()),
        OutputFormat::Text => match text {
            Some(t) => print!("{}", t),
            None => println!("{}", serde_json::to_string_pretty(&value).unwrap()),
        },
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Present {
            opts,
            equivariant,
            fan,
        } => {
            let fan = read_fan(&fan)?;
            let theory = opts.build(fan.rank as u32)?;
            let pres = if equivariant {
                simplify(&equivariant_presentation(&fan, &theory)?, &theory)
            } else {
                singular_presentation_seeded(&fan, &theory, seed_from_env())?.0
            };
            let mut value = presentation_to_json(&pres);
            let obj = value.as_object_mut().unwrap();
            if !pres.desc.equivariant {
                obj.insert(
                    "invariants".into(),
                    invariants_to_json(&graded_invariants(&pres, &theory)),
                );
            }
            obj.insert("caveats".into(), json!([truncation_caveat(&theory)]));
            emit(value, Some(presentation_to_text(&pres)), opts.output);
        }
        Cmd::SrRing {
            opts,
            equivariant,
            fan,
        } => {
            let fan = read_fan(&fan)?;
            let theory = opts.build(fan.rank as u32)?;
            let ring = sr_ring(&fan, &theory, equivariant)?;
            let mut value = sr_ring_to_json(&ring);
            value
                .as_object_mut()
                .unwrap()
                .insert("caveats".into(), json!([truncation_caveat(&theory)]));
            let mut text = format!(
                "Stanley-Reisner ring on {} ray variables\nideal generators (non-faces):\n",
                ring.ray_count
            );
            for nf in &ring.ideal {
                let mono: Vec<String> = nf.iter().map(|i| format!("r{}", i)).collect();
                text.push_str(&format!("  {}\n", mono.join("*")));
            }
            if !ring.linear_relations.is_empty() {
                text.push_str("linear relations (set to zero):\n");
                for (m, p) in &ring.linear_relations {
                    let mv: Vec<String> = m.iter().map(|x| x.to_string()).collect();
                    text.push_str(&format!("  form ({}): {}\n", mv.join(","), p));
                }
            }
            emit(value, Some(text), opts.output);
        }
        Cmd::Resolve { output, fan } => {
            let fan = read_fan(&fan)?;
            let (resolved, map) = fan.resolve_seeded(seed_from_env())?;
            let images: Vec<serde_json::Value> = map
                .cone_image
                .iter()
                .map(|(s, t)| json!({ "source": s.0, "target": t.0 }))
                .collect();
            let value = json!({
                "fan": fan_to_json(&resolved),
                "cone_image": images,
            });
            let mut text = String::from("resolved fan rays:\n");
            for (i, r) in resolved.rays.iter().enumerate() {
                let cs: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                text.push_str(&format!("  {}: ({})\n", i, cs.join(",")));
            }
            text.push_str("maximal cones:\n");
            for c in &resolved.maximal {
                text.push_str(&format!("  {}\n", c.label()));
            }
            emit(value, Some(text), output);
        }
        Cmd::Descent { opts, explain, fan } => {
            let fan = read_fan(&fan)?;
            let theory = opts.build(fan.rank as u32)?;
            let (pres, plan) = singular_presentation_seeded(&fan, &theory, seed_from_env())?;
            let mut value = presentation_to_json(&pres);
            let obj = value.as_object_mut().unwrap();
            obj.insert(
                "invariants".into(),
                invariants_to_json(&graded_invariants(&pres, &theory)),
            );
            obj.insert("caveats".into(), json!([truncation_caveat(&theory)]));
            if explain {
                match &plan {
                    Some(p) => obj.insert("plan".into(), plan_to_json(p)),
                    None => obj.insert("plan".into(), json!(null)),
                };
            }
            let mut text = presentation_to_text(&pres);
            if explain {
                if let Some(p) = &plan {
                    text.push_str(&format!(
                        "descent plan: {} extra relations over {} representatives\n",
                        p.extra_relations.len(),
                        p.representatives.len()
                    ));
                }
            }
            emit(value, Some(text), opts.output);
        }
        Cmd::Dual {
            opts,
            allow_noncomplete_dual,
            fan,
        } => {
            let fan = read_fan(&fan)?;
            let theory = opts.build(fan.rank as u32)?;
            let complete = fan.is_complete();
            let (pres, _) = singular_presentation_seeded(&fan, &theory, seed_from_env())?;
            let dual = dual_module(&pres, &theory, complete, allow_noncomplete_dual)?;
            let mut caveats = vec![
                truncation_caveat(&theory),
                "Hom groups are computed degreewise in integer coordinates at finite truncation"
                    .to_string(),
            ];
            if !complete {
                caveats.push(
                    "fan is not complete: the duality hypothesis fails; output is exploratory"
                        .to_string(),
                );
            }
            let value = dual_to_json(&dual, &caveats);
            let mut text = String::from("dual module:\n");
            for (k, (free, _)) in &dual.degrees {
                text.push_str(&format!("  degree {}: free rank {}\n", k, free));
            }
            emit(value, Some(text), opts.output);
        }
        Cmd::KunnethCheck { opts, fan_x, fan_y } => {
            let fx = read_fan(&fan_x)?;
            let fy = read_fan(&fan_y)?;
            let theory = opts.build((fx.rank + fy.rank) as u32)?;
            let report = check_kunneth(&fx, &fy, &theory)?;
            let value = kunneth_to_json(&report);
            let text = format!(
                "kunneth comparison: {}\n",
                if report.holds {
                    "isomorphic"
                } else {
                    "MISMATCH"
                }
            );
            emit(value, Some(text), opts.output);
            if !report.holds {
                return Err(Error::Mismatch("Künneth comparison failed".into()));
            }
        }
        Cmd::OrbitRestrict {
            opts,
            cone,
            class,
            glue_check,
            fan,
        } => {
            let fan = read_fan(&fan)?;
            let theory = opts.build(fan.rank as u32)?;
            let class_json: serde_json::Value = serde_json::from_str(&class)?;
            let class = poly_from_json(&class_json)?;
            if glue_check {
                let mut family = BTreeMap::new();
                for c in &fan.cones {
                    family.insert(c.clone(), restrict_to_orbit(&fan, &theory, &class, c)?);
                }
                let ok = check_gluing(&fan, &family)?;
                emit(
                    json!({ "glues": ok }),
                    Some(format!("gluing: {}\n", ok)),
                    opts.output,
                );
                return Ok(());
            }
            let ids: Vec<usize> = if cone.trim().is_empty() {
                Vec::new()
            } else {
                cone.split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::BadInput(format!("bad ray index `{}`", s)))
                    })
                    .collect::<Result<_>>()?
            };
            let cone = Cone::new(ids);
            if !fan.cones.contains(&cone) {
                return Err(Error::BadInput(format!(
                    "cone {} is not in the fan",
                    cone.label()
                )));
            }
            let elem = restrict_to_orbit(&fan, &theory, &class, &cone)?;
            let value = json!({
                "cone": elem.cone.0,
                "value": poly_to_json(&elem.value),
            });
            emit(
                value,
                Some(format!(
                    "restriction to O{}: {}\n",
                    elem.cone.label(),
                    elem.value
                )),
                opts.output,
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
