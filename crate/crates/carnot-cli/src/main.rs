//! Command-line front end: group inspection, rigidity/pliability verdicts,
//! reachability probes, Whitney-data tooling, curve integration, and the
//! Lusin-type approximation, all with deterministic JSON reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use carnot::curve::{ControlPath, HorizontalCurve};
use carnot::pliability::{pliability_test, reachability_probe};
use carnot::presets::{preset, resolve_group, table_from_json, table_to_json, PresetGroup};
use carnot::rigidity::{rigidity_test, RigidityVerdict};
use carnot::scalar::parse_rat;
use carnot::whitney::{
    build_counterexample, extend_step2, lusin_demo, modulus_report, telescoping_check,
    ExtensionOptions, ExtensionResult, WhitneyData,
};
use carnot::{Error, Group, LieVectorQ, Result, Scalar};

#[derive(Parser)]
#[command(name = "carnot", version, about = "Carnot-group rigidity, pliability and Whitney-extension toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolved group: layers, basis, structure-constant digest.
    Group { group: String },
    /// Decide rigidity of a horizontal vector.
    Rigidity {
        group: String,
        /// Comma-separated coordinates (horizontal or full-dimension; exact
        /// rationals like 1/3 are accepted).
        #[arg(long, value_delimiter = ',')]
        vector: Vec<String>,
    },
    /// Decide pliability of a horizontal vector.
    Pliability {
        group: String,
        #[arg(long, value_delimiter = ',')]
        vector: Vec<String>,
        /// Bracket-length bound for the parity check (default 2*step+2).
        #[arg(long)]
        lmax: Option<usize>,
    },
    /// Sample the C1 reachable cloud around exp(X) and look for a separating
    /// obstruction direction.
    Probe {
        group: String,
        #[arg(long, value_delimiter = ',')]
        vector: Vec<String>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Whitney-data commands.
    #[command(subcommand)]
    Whitney(WhitneyCmd),
    /// Curve commands.
    #[command(subcommand)]
    Curve(CurveCmd),
    /// Replace a piecewise-C1 control by a C1 one off windows around its
    /// velocity jumps (step <= 2 groups).
    Lusin {
        group: String,
        /// Control path JSON file.
        control: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum WhitneyCmd {
    /// Evaluate the first-order compatibility modulus of Whitney data on a
    /// shrinking window grid.
    Check {
        group: String,
        /// Whitney data JSON file ({"K": [...], "f": [[...]], "X": [[...]]}).
        data: PathBuf,
        /// Comma-separated window widths (default 1/2 .. 1/64).
        #[arg(long, value_delimiter = ',')]
        etas: Vec<f64>,
    },
    /// Interpolate Whitney data by a C1 horizontal curve (step <= 2).
    Extend {
        group: String,
        data: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Solve the layer-1/2 equations even on deeper groups (diagnostic).
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Build non-extendable Whitney data along a straight curve by pushing
    /// shrinking hops into the unreachable side of the group's obstruction.
    Counterexample {
        group: String,
        /// Straight direction (defaults to the obstruction's anchor axis).
        #[arg(long, value_delimiter = ',')]
        vector: Vec<String>,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Integrate a control path from the identity and report the endpoint.
    Integrate {
        group: String,
        /// Control path JSON file.
        control: PathBuf,
        #[arg(long = "step-size", default_value_t = 1e-3)]
        step_size: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({ "error": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

fn algebra_digest(a: &carnot::StratifiedAlgebra) -> String {
    let mut h = Sha256::new();
    h.update(table_to_json(a).as_bytes());
    format!("{:x}", h.finalize())
}

/// Resolve a group spec, memoizing the structure table under
/// `CARNOT_CACHE_DIR` when set.
fn load_group(spec: &str) -> Result<PresetGroup> {
    let dir = match std::env::var("CARNOT_CACHE_DIR") {
        Ok(d) if !d.is_empty() => d,
        _ => return resolve_group(spec),
    };
    let mut h = Sha256::new();
    h.update(spec.as_bytes());
    let path = std::path::Path::new(&dir).join(format!("{:x}.json", h.finalize()));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(algebra) = table_from_json(&text) {
            // Obstruction registrations are tied to the preset name; the two
            // groups carrying one are small enough to rebuild for it.
            let obstructions = match spec {
                "engel" | "superengel" => preset(spec)?.obstructions,
                _ => Vec::new(),
            };
            return Ok(PresetGroup {
                algebra,
                obstructions,
            });
        }
    }
    let pg = resolve_group(spec)?;
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&path, table_to_json(&pg.algebra))?;
    Ok(pg)
}

/// Parse coordinates given either on the horizontal layer or in full
/// dimension; horizontal input is zero-padded.
fn parse_vector_rat(pg: &PresetGroup, parts: &[String]) -> Result<LieVectorQ> {
    let n = pg.algebra.dim();
    let m = pg.algebra.horizontal_dim();
    if parts.len() != m && parts.len() != n {
        return Err(Error::InvalidArgument(format!(
            "vector needs {m} (horizontal) or {n} (full) coordinates, got {}",
            parts.len()
        )));
    }
    let mut v = LieVectorQ::zero(n);
    for (i, s) in parts.iter().enumerate() {
        v.0[i] = parse_rat(s)
            .ok_or_else(|| Error::InvalidArgument(format!("bad coordinate {s:?}")))?;
    }
    Ok(v)
}

fn parse_vector_f64(pg: &PresetGroup, parts: &[String]) -> Result<Vec<f64>> {
    Ok(parse_vector_rat(pg, parts)?
        .0
        .iter()
        .map(Scalar::to_f64)
        .collect())
}

fn emit(command: &str, group: Option<&PresetGroup>, seed: Option<u64>, report: Value) {
    let envelope = json!({
        "tool": "carnot",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "group": group.map(|pg| pg.algebra.name().to_string()),
        "group_digest": group.map(algebra_digest_of),
        "seed": seed,
        "report": report,
    });
    println!("{}", serde_json::to_string_pretty(&envelope).unwrap());
}

fn algebra_digest_of(pg: &PresetGroup) -> String {
    algebra_digest(&pg.algebra)
}

fn rigidity_json(v: &RigidityVerdict) -> Value {
    json!({
        "tag": v.tag.as_str(),
        "reason": v.reason,
        "family_dim": v.family_dim,
        "witness": v.witness.as_ref().map(|w| {
            w.0.iter().map(|c| c.to_string()).collect::<Vec<_>>()
        }),
        "q_margin": v.q_margin,
    })
}

fn write_artifact(out: &Option<PathBuf>, text: String) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => Ok(()),
    }
}

fn csv_rows(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn trace_csv(g: &Group, start: &[f64], control: &ControlPath, steps_hint: usize) -> Result<String> {
    let (t0, t1) = control.domain();
    let h = (t1 - t0) / steps_hint.max(1) as f64;
    let curve = HorizontalCurve::new(start.to_vec(), control.clone());
    let (_, trace) = curve.integrate_magnus4(g, h)?;
    let names: Vec<String> = g.algebra().basis_names().to_vec();
    Ok(csv_rows(
        &format!("t,{}", names.join(",")),
        trace.into_iter().map(|(t, x)| {
            let mut row = vec![t];
            row.extend(x);
            row
        }),
    ))
}

fn extension_artifact(
    g: &Group,
    res: &ExtensionResult,
    out: &Option<PathBuf>,
    format: Format,
) -> Result<()> {
    match format {
        Format::Json => write_artifact(out, res.control.to_json()),
        Format::Csv => write_artifact(out, trace_csv(g, &res.start, &res.control, 2000)?),
    }
}

fn extension_json(res: &ExtensionResult) -> Value {
    json!({
        "domain": res.control.domain(),
        "pieces": res.control.pieces().len(),
        "all_converged": res.all_converged,
        "max_node_residual": res.max_node_residual,
        "node_residuals": res.node_residuals,
        "boundary_velocity_mismatch": res.boundary_velocity_mismatch,
        "gaps": res.gaps.iter().map(|r| json!({
            "a": r.a,
            "b": r.b,
            "converged": r.converged,
            "newton_iterations": r.newton_iterations,
            "equation_residual": r.equation_residual,
            "endpoint_gauge": r.endpoint_gauge,
            "sup_deviation": r.sup_deviation,
        })).collect::<Vec<_>>(),
    })
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Group { group } => {
            let pg = load_group(&group)?;
            let a = &pg.algebra;
            emit(
                "group",
                Some(&pg),
                None,
                json!({
                    "name": a.name(),
                    "layer_dims": a.layer_dims(),
                    "dim": a.dim(),
                    "step": a.step(),
                    "horizontal_dim": a.horizontal_dim(),
                    "homogeneous_dim": a.homogeneous_dim(),
                    "basis": a.basis_names(),
                    "obstructions": pg.obstructions.iter().map(|o| o.name).collect::<Vec<_>>(),
                }),
            );
            Ok(0)
        }
        Command::Rigidity { group, vector } => {
            let pg = load_group(&group)?;
            let x = parse_vector_rat(&pg, &vector)?;
            let verdict = rigidity_test(&pg.algebra, &x)?;
            let code = if verdict.tag.as_str() == "Unknown" { 2 } else { 0 };
            emit("rigidity", Some(&pg), None, rigidity_json(&verdict));
            Ok(code)
        }
        Command::Pliability {
            group,
            vector,
            lmax,
        } => {
            let pg = load_group(&group)?;
            let x = parse_vector_rat(&pg, &vector)?;
            let verdict = pliability_test(&pg.algebra, &x, lmax)?;
            let code = if verdict.tag.as_str() == "Unknown" { 2 } else { 0 };
            let bs = verdict.bs.as_ref().map(|b| {
                json!({
                    "lmax": b.lmax,
                    "kept": b.kept,
                    "even_checked": b.even_checked,
                    "stabilized": b.stabilized,
                    "capped": b.capped,
                    "offender": b.offender,
                    "span_rank": b.span_rank,
                    "full_rank": b.full_rank,
                    "pliable": b.pliable,
                })
            });
            emit(
                "pliability",
                Some(&pg),
                None,
                json!({
                    "tag": verdict.tag.as_str(),
                    "certificate": verdict.certificate.as_str(),
                    "bracket_parity": bs,
                    "rigidity": verdict.rigidity.as_ref().map(rigidity_json),
                }),
            );
            Ok(code)
        }
        Command::Probe {
            group,
            vector,
            epsilon,
            samples,
            seed,
            out,
            format,
        } => {
            let pg = load_group(&group)?;
            let x = parse_vector_f64(&pg, &vector)?;
            let report = reachability_probe(&pg, &x, epsilon, samples, seed)?;
            match format {
                Format::Json => write_artifact(
                    &out,
                    serde_json::to_string_pretty(&json!({ "endpoints": report.endpoints }))
                        .unwrap(),
                )?,
                Format::Csv => write_artifact(
                    &out,
                    csv_rows(
                        &pg.algebra.basis_names().join(","),
                        report.endpoints.iter().cloned(),
                    ),
                )?,
            }
            let code = if report.separating { 0 } else { 2 };
            emit(
                "probe",
                Some(&pg),
                Some(seed),
                json!({
                    "vector": report.vector,
                    "epsilon": report.epsilon,
                    "samples": report.samples,
                    "separating": report.separating,
                    "method": report.method,
                    "functional": report.functional,
                    "direction": report.direction,
                    "min_side": report.min_side,
                    "max_side": report.max_side,
                    "coverage_radius": report.coverage_radius,
                    "endpoint_count": report.endpoints.len(),
                }),
            );
            Ok(code)
        }
        Command::Whitney(cmd) => run_whitney(cmd),
        Command::Curve(CurveCmd::Integrate {
            group,
            control,
            step_size,
            out,
            format,
        }) => {
            let pg = load_group(&group)?;
            let g = Group::new(pg.algebra.clone());
            let path = ControlPath::from_json(&std::fs::read_to_string(&control)?)?;
            let curve = HorizontalCurve::anchored(path.clone());
            let (end, trace) = curve.integrate(&g, step_size)?;
            match format {
                Format::Json => write_artifact(
                    &out,
                    serde_json::to_string_pretty(&json!({
                        "samples": trace.iter().map(|(t, x)| {
                            let mut row = vec![*t];
                            row.extend(x.iter().cloned());
                            row
                        }).collect::<Vec<_>>(),
                    }))
                    .unwrap(),
                )?,
                Format::Csv => {
                    let names = pg.algebra.basis_names().join(",");
                    write_artifact(
                        &out,
                        csv_rows(
                            &format!("t,{names}"),
                            trace.iter().map(|(t, x)| {
                                let mut row = vec![*t];
                                row.extend(x.iter().cloned());
                                row
                            }),
                        ),
                    )?
                }
            }
            emit(
                "curve-integrate",
                Some(&pg),
                None,
                json!({
                    "domain": path.domain(),
                    "endpoint": end,
                    "endpoint_gauge": g.gauge(&end),
                    "steps": trace.len() - 1,
                    "c1h": curve.is_c1h(),
                }),
            );
            Ok(0)
        }
        Command::Lusin {
            group,
            control,
            epsilon,
            tol,
            out,
            format,
        } => {
            let pg = load_group(&group)?;
            let g = Group::new(pg.algebra.clone());
            let path = ControlPath::from_json(&std::fs::read_to_string(&control)?)?;
            let start = vec![0.0; g.dim()];
            let opts = ExtensionOptions {
                tol,
                ..ExtensionOptions::default()
            };
            let res = lusin_demo(&g, &start, &path, epsilon, &opts)?;
            match format {
                Format::Json => write_artifact(&out, res.control.to_json())?,
                Format::Csv => {
                    write_artifact(&out, trace_csv(&g, &res.start, &res.control, 2000)?)?
                }
            }
            let ok = res.gaps.iter().all(|r| r.converged);
            emit(
                "lusin",
                Some(&pg),
                None,
                json!({
                    "kept_intervals": res.intervals,
                    "jump_times": res.jump_times,
                    "complement_measure": res.complement_measure,
                    "agreement_residual": res.agreement_residual,
                    "gaps": res.gaps.iter().map(|r| json!({
                        "a": r.a,
                        "b": r.b,
                        "converged": r.converged,
                        "equation_residual": r.equation_residual,
                    })).collect::<Vec<_>>(),
                }),
            );
            Ok(if ok { 0 } else { 2 })
        }
    }
}

fn run_whitney(cmd: WhitneyCmd) -> Result<u8> {
    match cmd {
        WhitneyCmd::Check { group, data, etas } => {
            let pg = load_group(&group)?;
            let g = Group::new(pg.algebra.clone());
            let data = WhitneyData::from_json(&std::fs::read_to_string(&data)?)?;
            let etas = if etas.is_empty() {
                (1..=6).map(|k| 0.5f64.powi(k)).collect()
            } else {
                etas
            };
            let report = modulus_report(&g, &data, &etas);
            let code = if report.pass { 0 } else { 2 };
            emit(
                "whitney-check",
                Some(&pg),
                None,
                json!({
                    "nodes": data.len(),
                    "etas": report.etas,
                    "values": report.values,
                    "decay_exponent": report.decay_exponent,
                    "nonincreasing": report.nonincreasing,
                    "pass": report.pass,
                }),
            );
            Ok(code)
        }
        WhitneyCmd::Extend {
            group,
            data,
            tol,
            force,
            out,
            format,
        } => {
            let pg = load_group(&group)?;
            let g = Group::new(pg.algebra.clone());
            let data = WhitneyData::from_json(&std::fs::read_to_string(&data)?)?;
            let opts = ExtensionOptions {
                tol,
                force_truncated: force,
                ..ExtensionOptions::default()
            };
            let res = extend_step2(&g, &data, &opts)?;
            extension_artifact(&g, &res, &out, format)?;
            let ok = res.all_converged && res.max_node_residual <= 1e-6;
            emit("whitney-extend", Some(&pg), None, extension_json(&res));
            Ok(if ok { 0 } else { 2 })
        }
        WhitneyCmd::Counterexample {
            group,
            vector,
            nmax,
            out,
            format,
        } => {
            let pg = load_group(&group)?;
            let g = Group::new(pg.algebra.clone());
            let v = if vector.is_empty() {
                let anchor = pg
                    .obstructions
                    .first()
                    .ok_or(Error::NoObstructionDirection)?
                    .anchor;
                let mut v = vec![0.0; pg.algebra.dim()];
                v[anchor] = 1.0;
                v
            } else {
                parse_vector_f64(&pg, &vector)?
            };
            let report = build_counterexample(&pg, &v, nmax)?;
            let (tele_ok, tele_slack) = telescoping_check(&g, &report.data, &v);
            let etas: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
            let modulus = modulus_report(&g, &report.data, &etas);
            match format {
                Format::Json => write_artifact(&out, report.data.to_json())?,
                Format::Csv => {
                    let m = pg.algebra.horizontal_dim();
                    let names = pg.algebra.basis_names();
                    let mut header = String::from("t");
                    for n in names {
                        header.push_str(&format!(",f_{n}"));
                    }
                    for n in &names[..m] {
                        header.push_str(&format!(",X_{n}"));
                    }
                    let rows = (0..report.data.len()).map(|i| {
                        let mut row = vec![report.data.k[i]];
                        row.extend(report.data.f[i].iter().cloned());
                        row.extend(report.data.x[i].iter().cloned());
                        row
                    });
                    write_artifact(&out, csv_rows(&header, rows))?;
                }
            }
            emit(
                "whitney-counterexample",
                Some(&pg),
                None,
                json!({
                    "nmax": nmax,
                    "direction": report.direction,
                    "sigmas": report.sigmas,
                    "hop_gauges": report.hop_gauges,
                    "thresholds": report.thresholds,
                    "tail_bound": report.tail_bound,
                    "telescoping_ok": tele_ok,
                    "telescoping_slack": tele_slack,
                    "modulus": {
                        "etas": modulus.etas,
                        "values": modulus.values,
                        "decay_exponent": modulus.decay_exponent,
                        "nonincreasing": modulus.nonincreasing,
                    },
                    "data": if out.is_none() {
                        serde_json::from_str::<Value>(&report.data.to_json()).unwrap()
                    } else {
                        Value::Null
                    },
                }),
            );
            Ok(0)
        }
    }
}
