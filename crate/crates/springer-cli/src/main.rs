//! Command-line front end: parse diagrams, load fixtures, run checks and
//! decompositions, and print deterministic JSON (CSV for count tables).
//!
//! Exit codes: 0 on success, 1 when a mathematical check fails (the
//! report is still printed), 2 on usage errors.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use springer_fibers::bundle::{build_flag, verify_bundle_point, BundleError};
use springer_fibers::diagram::{
    enumerate_type_a, enumerate_type_d, fold_closure, parse_diagram, unfolds_to, CupDiagram,
    Diagram, MarkedCupDiagram,
};
use springer_fibers::flag::{in_type_a_component, in_type_d_component, TwoBlockNilpotent};
use springer_fibers::json::{
    parse_field, parse_scalar, to_json_string, BundleReportWire, DecompositionWire, FlagFixture,
    QuiverFixture, RelationReportWire,
};
use springer_fibers::oracle::{
    count_component, decompose_type_a, decompose_type_d, EnumerationTask,
};
use springer_fibers::quiver::{maffei_flag, ThetaFixed};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "springer",
    about = "Exact computations with two-row Springer fiber components"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "D", alias = "d")]
    D,
}

#[derive(Subcommand)]
enum Cmd {
    /// List all cup diagrams of a shape.
    Enumerate {
        #[arg(long = "type", value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Fold a symmetric type A diagram into its set of marked diagrams.
    Fold {
        /// The diagram, e.g. "A n=6 k=3: 1-2, 3-6, 4-5".
        #[arg(long)]
        diagram: String,
    },
    /// Decide whether a marked diagram folds out to a type A diagram.
    Unfold {
        /// The marked (type D) diagram.
        #[arg(long)]
        marked: String,
        /// The symmetric type A diagram.
        #[arg(long)]
        symmetric: String,
    },
    /// Shape summary: diagram count and feature histograms.
    Stats {
        #[arg(long = "type", value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Check a quiver representation fixture: admissibility, stability,
    /// the duality involution, and component membership.
    CheckQuiver {
        #[arg(long)]
        fixture: PathBuf,
        /// Search budget for the involution fixed-point witness
        /// (default: the SPRINGER_THETA_TRIALS environment variable,
        /// then 64).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Map a quiver representation fixture to its flag.
    Maffei {
        #[arg(long)]
        fixture: PathBuf,
    },
    /// Test a flag fixture against one component's relations.
    CheckFlag {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        diagram: String,
    },
    /// Build the flag of a component point from cup parameters.
    BuildFlag {
        #[arg(long)]
        diagram: String,
        #[arg(long, default_value = "Fp:5")]
        field: String,
        /// One "a,b" pair per cup, separated by semicolons, in cup
        /// order; e.g. "1,2;0,1".
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Verify a flag fixture against the recursive bundle structure.
    VerifyBundle {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        diagram: String,
    },
    /// Exhaustively decompose a Springer fiber over a prime field.
    Decompose {
        #[arg(long = "type", value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        max_count: Option<u64>,
    },
    /// Point counts per component as CSV, against the expected
    /// (q+1)^cups.
    Count {
        #[arg(long = "type", value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_type_a(src: &str) -> Result<CupDiagram> {
    match parse_diagram(src).map_err(|e| anyhow!("{e}"))? {
        Diagram::TypeA(a) => Ok(a),
        _ => bail!("{src:?} is not a type A diagram"),
    }
}

fn parse_type_d(src: &str) -> Result<MarkedCupDiagram> {
    match parse_diagram(src).map_err(|e| anyhow!("{e}"))? {
        Diagram::TypeD(d) => Ok(d),
        _ => bail!("{src:?} is not a marked (type D) diagram"),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: serde::Serialize>(value: &T) -> Result<()> {
    print!("{}", to_json_string(value).map_err(|e| anyhow!("{e}"))?);
    Ok(())
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Enumerate { kind, n, k } => {
            let diagrams: Vec<String> = match kind {
                Kind::A => enumerate_type_a(n, k)
                    .map_err(|e| anyhow!("{e}"))?
                    .iter()
                    .map(|d| d.to_string())
                    .collect(),
                Kind::D => enumerate_type_d(n - k, k)
                    .map_err(|e| anyhow!("{e}"))?
                    .iter()
                    .map(|d| d.to_string())
                    .collect(),
            };
            let mut out = BTreeMap::new();
            out.insert("count".to_string(), serde_json::json!(diagrams.len()));
            out.insert("diagrams".to_string(), serde_json::json!(diagrams));
            emit(&out)?;
            Ok(0)
        }
        Cmd::Fold { diagram } => {
            let a = parse_type_a(&diagram)?;
            let folded = fold_closure(&a).map_err(|e| anyhow!("{e}"))?;
            let names: Vec<String> = folded.iter().map(|d| d.to_string()).collect();
            let mut out = BTreeMap::new();
            out.insert("input".to_string(), serde_json::json!(a.to_string()));
            out.insert("count".to_string(), serde_json::json!(names.len()));
            out.insert("folded".to_string(), serde_json::json!(names));
            emit(&out)?;
            Ok(0)
        }
        Cmd::Unfold { marked, symmetric } => {
            let half = parse_type_d(&marked)?;
            let a = parse_type_a(&symmetric)?;
            let ok = unfolds_to(&half, &a).map_err(|e| anyhow!("{e}"))?;
            let mut out = BTreeMap::new();
            out.insert("marked".to_string(), serde_json::json!(half.to_string()));
            out.insert("symmetric".to_string(), serde_json::json!(a.to_string()));
            out.insert("unfolds".to_string(), serde_json::json!(ok));
            emit(&out)?;
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::Stats { kind, n, k } => {
            let mut by_cups: BTreeMap<usize, usize> = BTreeMap::new();
            let mut by_marks: BTreeMap<usize, usize> = BTreeMap::new();
            let count = match kind {
                Kind::A => {
                    let diagrams = enumerate_type_a(n, k).map_err(|e| anyhow!("{e}"))?;
                    for d in &diagrams {
                        *by_cups.entry(d.cups().len()).or_insert(0) += 1;
                    }
                    diagrams.len()
                }
                Kind::D => {
                    let diagrams = enumerate_type_d(n - k, k).map_err(|e| anyhow!("{e}"))?;
                    for d in &diagrams {
                        *by_cups.entry(d.num_cups()).or_insert(0) += 1;
                        let marks = d.cups().iter().filter(|&&(_, _, m)| m).count()
                            + d.rays().iter().filter(|&&(_, m)| m).count();
                        *by_marks.entry(marks).or_insert(0) += 1;
                    }
                    diagrams.len()
                }
            };
            let mut out = BTreeMap::new();
            out.insert("count".to_string(), serde_json::json!(count));
            out.insert("by_cups".to_string(), serde_json::json!(by_cups));
            if kind == Kind::D {
                out.insert("by_marks".to_string(), serde_json::json!(by_marks));
            }
            emit(&out)?;
            Ok(0)
        }
        Cmd::CheckQuiver {
            fixture,
            trials,
            seed,
        } => {
            let fx: QuiverFixture = load_json(&fixture)?;
            let rep = fx.to_rep().map_err(|e| anyhow!("{e}"))?;
            let trials = trials
                .or_else(|| {
                    std::env::var("SPRINGER_THETA_TRIALS")
                        .ok()
                        .and_then(|v| v.parse().ok())
                })
                .unwrap_or(64);
            let theta = match rep.is_theta_fixed(trials, seed) {
                ThetaFixed::FixedWith(_) => "fixed",
                ThetaFixed::NotFixed => "not fixed",
                ThetaFixed::Undetermined => "undetermined",
            };
            let (nk, k) = (rep.n() - rep.k(), rep.k());
            let mut components = BTreeMap::new();
            for a in enumerate_type_a(rep.n(), rep.k()).map_err(|e| anyhow!("{e}"))? {
                components.insert(
                    a.to_string(),
                    rep.in_type_a_component(&a).map_err(|e| anyhow!("{e}"))?,
                );
            }
            if springer_fibers::diagram::is_type_d_shape(nk, k) {
                for d in enumerate_type_d(nk, k).map_err(|e| anyhow!("{e}"))? {
                    components.insert(
                        d.to_string(),
                        rep.in_type_d_component(&d)
                            .map_err(|e| anyhow!("{e}"))?
                            .all_hold,
                    );
                }
            }
            let ok = rep.is_springer_point();
            let mut out = BTreeMap::new();
            out.insert("admissible".to_string(), serde_json::json!(rep.is_admissible()));
            out.insert("delta_zero".to_string(), serde_json::json!(rep.delta_is_zero()));
            out.insert("stable".to_string(), serde_json::json!(rep.is_stable()));
            out.insert("springer_point".to_string(), serde_json::json!(ok));
            out.insert("theta".to_string(), serde_json::json!(theta));
            out.insert("components".to_string(), serde_json::json!(components));
            emit(&out)?;
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::Maffei { fixture } => {
            let fx: QuiverFixture = load_json(&fixture)?;
            let rep = fx.to_rep().map_err(|e| anyhow!("{e}"))?;
            match maffei_flag(&rep) {
                Ok(fl) => {
                    let shape = (rep.n() - rep.k(), rep.k());
                    emit(&FlagFixture::from_flag(shape, &fl))?;
                    Ok(0)
                }
                Err(e) => {
                    let mut out = BTreeMap::new();
                    out.insert("ok".to_string(), serde_json::json!(false));
                    out.insert("error".to_string(), serde_json::json!(e.to_string()));
                    emit(&out)?;
                    Ok(1)
                }
            }
        }
        Cmd::CheckFlag { fixture, diagram } => {
            let fx: FlagFixture = load_json(&fixture)?;
            let fl = fx.to_flag().map_err(|e| anyhow!("{e}"))?;
            match parse_diagram(&diagram).map_err(|e| anyhow!("{e}"))? {
                Diagram::TypeA(a) => {
                    let x = TwoBlockNilpotent::new(fl.field(), a.n() - a.k(), a.k());
                    let ok = in_type_a_component(&fl, &x, &a).map_err(|e| anyhow!("{e}"))?;
                    let wire = RelationReportWire {
                        items: vec![("component membership".to_string(), ok)],
                        all_hold: ok,
                    };
                    emit(&wire)?;
                    Ok(if ok { 0 } else { 1 })
                }
                Diagram::TypeD(d) => {
                    let (nk, k) = d.shape();
                    let x = TwoBlockNilpotent::new(fl.field(), nk, k);
                    let report =
                        in_type_d_component(&fl, &x, &d).map_err(|e| anyhow!("{e}"))?;
                    let ok = report.all_hold;
                    emit(&RelationReportWire::from_report(&report))?;
                    Ok(if ok { 0 } else { 1 })
                }
                Diagram::Symmetric(_) => bail!("partially folded diagrams have no components"),
            }
        }
        Cmd::BuildFlag {
            diagram,
            field,
            params,
        } => {
            let d = parse_type_d(&diagram)?;
            let field = parse_field(&field).map_err(|e| anyhow!("{e}"))?;
            let mut pairs = Vec::new();
            for chunk in params.split(';').filter(|c| !c.trim().is_empty()) {
                let (a, b) = chunk
                    .split_once(',')
                    .ok_or_else(|| anyhow!("parameter {chunk:?} is not of the form a,b"))?;
                pairs.push((
                    parse_scalar(field, a.trim()).map_err(|e| anyhow!("{e}"))?,
                    parse_scalar(field, b.trim()).map_err(|e| anyhow!("{e}"))?,
                ));
            }
            let fl = build_flag(field, &d, &pairs).map_err(|e| anyhow!("{e}"))?;
            emit(&FlagFixture::from_flag(d.shape(), &fl))?;
            Ok(0)
        }
        Cmd::VerifyBundle { fixture, diagram } => {
            let d = parse_type_d(&diagram)?;
            let fx: FlagFixture = load_json(&fixture)?;
            let fl = fx.to_flag().map_err(|e| anyhow!("{e}"))?;
            match verify_bundle_point(&d, &fl) {
                Ok(report) => {
                    let ok = report.all_hold;
                    emit(&BundleReportWire::from_report(&report))?;
                    Ok(if ok { 0 } else { 1 })
                }
                Err(BundleError::NotInComponent(why)) => {
                    let mut out = BTreeMap::new();
                    out.insert("ok".to_string(), serde_json::json!(false));
                    out.insert("error".to_string(), serde_json::json!(why));
                    emit(&out)?;
                    Ok(1)
                }
                Err(e) => bail!("{e}"),
            }
        }
        Cmd::Decompose {
            kind,
            n,
            k,
            q,
            max_count,
        } => {
            let mut task = EnumerationTask::new((n - k, k), q, kind == Kind::D);
            if let Some(cap) = max_count {
                task.max_count = cap;
            }
            let report = match kind {
                Kind::A => {
                    let diagrams = enumerate_type_a(n, k).map_err(|e| anyhow!("{e}"))?;
                    decompose_type_a(&task, &diagrams).map_err(|e| anyhow!("{e}"))?
                }
                Kind::D => {
                    let diagrams = enumerate_type_d(n - k, k).map_err(|e| anyhow!("{e}"))?;
                    decompose_type_d(&task, &diagrams).map_err(|e| anyhow!("{e}"))?
                }
            };
            let ok = report.uncovered.is_empty();
            emit(&DecompositionWire::from_report(task.lambda, &report))?;
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::Count { kind, n, k, q } => {
            let mut rows = Vec::new();
            let mut ok = true;
            match kind {
                Kind::A => {
                    for a in enumerate_type_a(n, k).map_err(|e| anyhow!("{e}"))? {
                        let points = count_component(&Diagram::TypeA(a.clone()), q)
                            .map_err(|e| anyhow!("{e}"))?;
                        let expected = (q + 1).pow(a.cups().len() as u32);
                        ok &= points == expected;
                        rows.push((a.to_string(), points, expected));
                    }
                }
                Kind::D => {
                    for d in enumerate_type_d(n - k, k).map_err(|e| anyhow!("{e}"))? {
                        let points = count_component(&Diagram::TypeD(d.clone()), q)
                            .map_err(|e| anyhow!("{e}"))?;
                        let expected = (q + 1).pow(d.num_cups() as u32);
                        ok &= points == expected;
                        rows.push((d.to_string(), points, expected));
                    }
                }
            }
            let mut csv = String::from("diagram,points,expected\n");
            for (name, points, expected) in rows {
                csv.push_str(&format!("\"{name}\",{points},{expected}\n"));
            }
            print!("{csv}");
            Ok(if ok { 0 } else { 1 })
        }
    }
}
