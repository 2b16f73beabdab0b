//! `subdiv` — exact subdivision invariants from the command line.
//!
//! Reads a JSON description of a ranked poset, a strong formal subdivision,
//! a lattice polytope, or a polyhedral cell complex, and prints polynomial
//! invariants (`gpoly`, `hpoly`, `local-h`, `mixed-h`, `hstar`,
//! `local-hstar`, `mixed-hstar`, `limit-mixed`, `refined`), coefficient
//! diamonds (`diamond`), a barycentric subdivision instance (`bary`), or a
//! property report (`check`, `corpus`).
//!
//! Exit codes: 0 success; 2 unreadable or malformed input; 3 input that
//! fails a validity axiom, with a witness in the message; 4 an identity
//! that is a theorem failed on valid input, which indicates a bug.

/// stdout writes that exit quietly when the reader closes the pipe, so
/// `subdiv ... | head` is not a crash.
macro_rules! outln {
    () => { crate::render::outln(format_args!("")) };
    ($($arg:tt)*) => { crate::render::outln(format_args!($($arg)*)) };
}
macro_rules! outp {
    ($($arg:tt)*) => { crate::render::out(format_args!($($arg)*)) };
}

mod corpus;
mod input;
mod render;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::Zero;
use subdiv::ehrhart::{
    self, hstar_box_oracle, hstar_data, hstar_polynomial, local_hstar_polynomial,
    mixed_hstar_polynomial, refined_limit_mixed_hstar, ComplexData, DiamondKind, DiamondTable,
};
use subdiv::kls;
use subdiv::polytope::CellComplex;
use subdiv::subdivision::{self, CheckResult, SfsInvariants, StrongFormalSubdivision};

use crate::input::{CliError, Input};

#[derive(Parser)]
#[command(
    name = "subdiv",
    version,
    about = "Exact subdivision invariants of posets, polytopes, and cell complexes"
)]
struct Cli {
    /// Output format (svg is available for diamond tables).
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// The g-polynomial of an Eulerian poset.
    Gpoly { input: PathBuf },
    /// The h-polynomial of a lower Eulerian poset.
    Hpoly { input: PathBuf },
    /// The local h-polynomial of a subdivision or cell complex.
    LocalH {
        input: PathBuf,
        /// Require a regular-subdivision height witness.
        #[arg(long)]
        regular: bool,
    },
    /// The mixed h-polynomial of a subdivision or cell complex.
    MixedH {
        input: PathBuf,
        /// Require a regular-subdivision height witness.
        #[arg(long)]
        regular: bool,
    },
    /// The h*-polynomial of a lattice polytope.
    Hstar {
        input: PathBuf,
        /// Recompute through the box-point decomposition (simplices only).
        #[arg(long)]
        oracle: bool,
    },
    /// The local h*-polynomial of a lattice polytope.
    LocalHstar {
        input: PathBuf,
        /// Recompute through the box-point decomposition (simplices only).
        #[arg(long)]
        oracle: bool,
    },
    /// The mixed h*-polynomial of a lattice polytope.
    MixedHstar { input: PathBuf },
    /// The limit mixed and local limit mixed h*-polynomials of a subdivided
    /// polytope.
    LimitMixed {
        input: PathBuf,
        /// Require a regular-subdivision height witness.
        #[arg(long)]
        regular: bool,
    },
    /// The refined limit mixed h*-polynomial of a subdivided polytope.
    Refined {
        input: PathBuf,
        /// Require a regular-subdivision height witness.
        #[arg(long)]
        regular: bool,
    },
    /// Coefficient diamonds: the h*-diamond, the local h*-diamond, and one
    /// r-local diamond per refined layer.
    Diamond {
        input: PathBuf,
        /// Require a regular-subdivision height witness.
        #[arg(long)]
        regular: bool,
    },
    /// Every identity the input must satisfy, one line per property.
    Check {
        input: PathBuf,
        /// Check as a regular subdivision (needs a height witness).
        #[arg(long)]
        regular: bool,
    },
    /// The barycentric subdivision of a poset, as a subdivision instance.
    Bary { input: PathBuf },
    /// Check every .json case in a directory, then seeded random instances.
    Corpus {
        dir: PathBuf,
        /// Seed for the randomized instances (printed with the report).
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let format = cli.format;
    match cli.command {
        Command::Gpoly { input } => {
            let poset = input::load(&input)?.into_poset("gpoly")?;
            let g = kls::g_poly(&poset).map_err(input::kls_err)?;
            render::emit_polys(format, &[("", "", &g)])
        }
        Command::Hpoly { input } => {
            let poset = input::load(&input)?.into_poset("hpoly")?;
            let h = kls::h_poly(&poset).map_err(input::kls_err)?;
            render::emit_polys(format, &[("", "", &h)])
        }
        Command::LocalH { input, regular } => {
            let sfs = load_sfs(&input, regular, "local-h")?;
            let inv = SfsInvariants::new(&sfs).map_err(input::subdivision_err)?;
            let l = inv.local_h().map_err(input::subdivision_err)?;
            render::emit_polys(format, &[("", "", &l)])
        }
        Command::MixedH { input, regular } => {
            let sfs = load_sfs(&input, regular, "mixed-h")?;
            let inv = SfsInvariants::new(&sfs).map_err(input::subdivision_err)?;
            let m = inv.mixed_h().map_err(input::subdivision_err)?;
            render::emit_polys(format, &[("", "", &m)])
        }
        Command::Hstar { input, oracle } => {
            let p = input::load(&input)?.into_polytope("hstar")?;
            let h = if oracle {
                hstar_box_oracle(&p).map_err(input::ehrhart_err)?.1
            } else {
                hstar_polynomial(&p)
            };
            render::emit_polys(format, &[("", "", &h)])
        }
        Command::LocalHstar { input, oracle } => {
            let p = input::load(&input)?.into_polytope("local-hstar")?;
            let l = if oracle {
                hstar_box_oracle(&p).map_err(input::ehrhart_err)?.0
            } else {
                local_hstar_polynomial(&p).map_err(input::ehrhart_err)?
            };
            render::emit_polys(format, &[("", "", &l)])
        }
        Command::MixedHstar { input } => {
            let p = input::load(&input)?.into_polytope("mixed-hstar")?;
            let m = mixed_hstar_polynomial(&p).map_err(input::ehrhart_err)?;
            render::emit_polys(format, &[("", "", &m)])
        }
        Command::LimitMixed { input, regular } => {
            let loaded = input::load(&input)?;
            if let Input::Polytope(p) = &loaded {
                if p.is_empty() {
                    let data = hstar_data(p).map_err(input::ehrhart_err)?;
                    return render::emit_polys(
                        format,
                        &[
                            ("limit_mixed_hstar", "limit mixed h*", &data.mixed),
                            ("local_limit_mixed_hstar", "local limit mixed h*", &data.local_hstar),
                        ],
                    );
                }
            }
            let c = complexify(loaded, regular, "limit-mixed")?;
            let data = ComplexData::new(&c).map_err(input::ehrhart_err)?;
            let (lim, loc) = data.limit_mixed_pair().map_err(input::ehrhart_err)?;
            render::emit_polys(
                format,
                &[
                    ("limit_mixed_hstar", "limit mixed h*", &lim),
                    ("local_limit_mixed_hstar", "local limit mixed h*", &loc),
                ],
            )
        }
        Command::Refined { input, regular } => {
            let loaded = input::load(&input)?;
            if let Input::Polytope(p) = &loaded {
                if p.is_empty() {
                    let one = subdiv::laurent::LaurentPoly::one();
                    return render::emit_polys(format, &[("", "", &one)]);
                }
            }
            let c = complexify(loaded, regular, "refined")?;
            let r = refined_limit_mixed_hstar(&c).map_err(input::ehrhart_err)?;
            render::emit_polys(format, &[("", "", &r)])
        }
        Command::Diamond { input, regular } => {
            let loaded = input::load(&input)?;
            if let Input::Polytope(p) = &loaded {
                if p.is_empty() {
                    return emit_empty_diamonds(format);
                }
            }
            let c = complexify(loaded, regular, "diamond")?;
            let tables = diamond_tables(&c)?;
            render::emit_diamonds(format, &tables)
        }
        Command::Check { input, regular } => {
            let loaded = input::load(&input)?;
            let loaded = if regular {
                Input::Complex(complexify(loaded, true, "check --regular")?)
            } else {
                loaded
            };
            let results = battery(&loaded)?;
            render::emit_checks(format, &results)
        }
        Command::Bary { input } => {
            let poset = input::load(&input)?.into_poset("bary")?;
            let sfs =
                StrongFormalSubdivision::barycentric(&poset).map_err(input::subdivision_err)?;
            emit_bary(format, &sfs)
        }
        Command::Corpus { dir, seed } => {
            corpus::run(&dir, seed.unwrap_or(corpus::DEFAULT_SEED), format)
        }
    }
}

/// Loads a subdivision directly or through the subdivision map of a cell
/// complex. `--regular` insists on a height witness, which only a complex
/// built from points and heights carries.
fn load_sfs(
    path: &Path,
    regular: bool,
    command: &str,
) -> Result<StrongFormalSubdivision, CliError> {
    match input::load(path)? {
        Input::Subdivision(s) => {
            if regular {
                Err(CliError::Validation(
                    "--regular needs a cell complex with a height witness, \
                     got a bare subdivision"
                        .into(),
                ))
            } else {
                Ok(s)
            }
        }
        Input::Complex(c) => {
            require_witness(&c, regular)?;
            c.to_sfs().map_err(input::polytope_err)
        }
        other => Err(CliError::Parse(format!(
            "{command} expects a subdivision or cell complex, got a {}",
            other.kind()
        ))),
    }
}

fn require_witness(c: &CellComplex, regular: bool) -> Result<(), CliError> {
    if regular && !c.is_regular() {
        return Err(CliError::Validation(
            "--regular: the complex carries no height witness \
             (describe it with \"points\" and \"heights\")"
                .into(),
        ));
    }
    Ok(())
}

/// Turns any geometric input into a cell complex: a complex passes through,
/// a polytope becomes its trivial subdivision (with an all-zero height
/// witness when `--regular` is set).
fn complexify(loaded: Input, regular: bool, command: &str) -> Result<CellComplex, CliError> {
    match loaded {
        Input::Complex(c) => {
            require_witness(&c, regular)?;
            Ok(c)
        }
        Input::Polytope(p) => {
            if regular {
                let points = p.vertices().to_vec();
                let heights = vec![BigInt::zero(); points.len()];
                CellComplex::regular_from_heights(points, heights).map_err(input::polytope_err)
            } else {
                CellComplex::trivial(&p).map_err(input::polytope_err)
            }
        }
        other => Err(CliError::Parse(format!(
            "{command} expects a cell complex or polytope, got a {}",
            other.kind()
        ))),
    }
}

/// The check battery appropriate to the input kind. A cell complex gets both
/// the h*-family battery and the poset-level battery of its subdivision map.
pub fn battery(input: &Input) -> Result<Vec<CheckResult>, CliError> {
    match input {
        Input::Poset(_) => Err(CliError::Parse(
            "check expects a subdivision, polytope, or cell complex, got a poset".into(),
        )),
        Input::Subdivision(sfs) => {
            let inv = SfsInvariants::new(sfs).map_err(input::subdivision_err)?;
            subdivision::run_battery(&inv).map_err(input::subdivision_err)
        }
        Input::Polytope(p) => {
            if p.is_empty() {
                let data = hstar_data(p).map_err(input::ehrhart_err)?;
                let ok = data.hstar.is_one() && data.local_hstar.is_one() && data.mixed.is_one();
                return Ok(vec![CheckResult::of(
                    "empty polytope: h* family is identically 1",
                    ok,
                    || format!("h* = {}, l* = {}", data.hstar, data.local_hstar),
                )]);
            }
            ehrhart::run_polytope_battery(p).map_err(input::ehrhart_err)
        }
        Input::Complex(c) => {
            let mut out = ehrhart::run_complex_battery(c).map_err(input::ehrhart_err)?;
            let sfs = c.to_sfs().map_err(input::polytope_err)?;
            let inv = SfsInvariants::new(&sfs).map_err(input::subdivision_err)?;
            out.extend(subdivision::run_battery(&inv).map_err(input::subdivision_err)?);
            Ok(out)
        }
    }
}

fn diamond_tables(c: &CellComplex) -> Result<Vec<(String, DiamondTable)>, CliError> {
    let data = ComplexData::new(c).map_err(input::ehrhart_err)?;
    let (lim, loc) = data.limit_mixed_pair().map_err(input::ehrhart_err)?;
    let d = c.polytope().dim();
    let refined = refined_limit_mixed_hstar(c).map_err(input::ehrhart_err)?;
    let mut out = vec![
        (
            "h*-diamond".to_string(),
            ehrhart::hstar_diamond(&lim, d).map_err(input::ehrhart_err)?,
        ),
        (
            "local h*-diamond".to_string(),
            ehrhart::local_hstar_diamond(&loc, d).map_err(input::ehrhart_err)?,
        ),
    ];
    for (r, table) in
        ehrhart::r_local_diamonds(&refined, d).map_err(input::ehrhart_err)?.into_iter().enumerate()
    {
        out.push((format!("{r}-local diamond"), table));
    }
    Ok(out)
}

fn emit_empty_diamonds(format: Format) -> Result<(), CliError> {
    match format {
        Format::Text => {
            outln!("1");
            Ok(())
        }
        _ => {
            let tables = vec![
                (
                    "h*-diamond".to_string(),
                    DiamondTable { kind: DiamondKind::HStar, entries: Vec::new() },
                ),
                (
                    "local h*-diamond".to_string(),
                    DiamondTable { kind: DiamondKind::LocalHStar, entries: Vec::new() },
                ),
            ];
            render::emit_diamonds(format, &tables)
        }
    }
}

fn emit_bary(format: Format, sfs: &StrongFormalSubdivision) -> Result<(), CliError> {
    match format {
        Format::Text => {
            let inv = SfsInvariants::new(sfs).map_err(input::subdivision_err)?;
            outln!("base: {} elements", sfs.base().len());
            outln!("gamma: {} elements", sfs.gamma().len());
            outln!("h: {}", inv.h_gamma().map_err(input::subdivision_err)?);
            outln!("local h: {}", inv.local_h().map_err(input::subdivision_err)?);
            outln!("mixed h: {}", inv.mixed_h().map_err(input::subdivision_err)?);
            Ok(())
        }
        Format::Json => {
            outln!("{:#}", sfs.to_json());
            Ok(())
        }
        Format::Svg => Err(render::svg_unsupported()),
    }
}
