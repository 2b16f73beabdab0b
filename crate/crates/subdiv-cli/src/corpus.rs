//! Corpus runs: the full check battery over every JSON case in a directory,
//! followed by randomized small instances generated from a printed seed, so
//! a reported failure can always be replayed.

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use serde_json::{json, Value};
use subdiv::polytope::CellComplex;
use subdiv::subdivision::{run_battery, SfsInvariants};

use crate::input::{self, CliError, Input};
use crate::Format;

pub const DEFAULT_SEED: u64 = 112358;

const RANDOM_SEGMENTS: usize = 3;
const RANDOM_GRIDS: usize = 3;
const RANDOM_SUBS_PER_GRID: usize = 3;

/// xorshift64. A full PRNG crate buys nothing here: the corpus only needs a
/// small deterministic stream that is reproducible from the printed seed.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Rng {
        Rng(if seed == 0 { 0x9e37_79b9_7f4a_7c15 } else { seed })
    }

    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

struct CaseReport {
    name: String,
    checks: usize,
    failures: Vec<String>,
}

impl CaseReport {
    fn from_results(name: String, results: &[subdiv::subdivision::CheckResult]) -> CaseReport {
        CaseReport {
            name,
            checks: results.len(),
            failures: results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| format!("{}: {}", r.name, r.detail))
                .collect(),
        }
    }

    fn from_error(name: String, e: &CliError) -> CaseReport {
        CaseReport { name, checks: 0, failures: vec![e.to_string()] }
    }
}

pub fn run(dir: &Path, seed: u64, format: Format) -> Result<(), CliError> {
    if format == Format::Svg {
        return Err(crate::render::svg_unsupported());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Parse(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        match format {
            Format::Text => outln!("warning: no .json cases in {}", dir.display()),
            Format::Json => outln!(
                "{:#}",
                json!({ "warning": format!("no .json cases in {}", dir.display()) })
            ),
            Format::Svg => unreachable!(),
        }
        return Ok(());
    }

    let mut reports = Vec::new();
    for file in &files {
        let name = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        match input::load(file).and_then(|input| crate::battery(&input)) {
            Ok(results) => reports.push(CaseReport::from_results(name, &results)),
            Err(e) => reports.push(CaseReport::from_error(name, &e)),
        }
    }

    let mut rng = Rng::new(seed);
    for i in 1..=RANDOM_SEGMENTS {
        reports.push(random_segment_case(&mut rng, i));
    }
    for i in 1..=RANDOM_GRIDS {
        let (grid, subs) = random_grid_cases(&mut rng, i);
        reports.push(grid);
        reports.extend(subs);
    }

    report(seed, &reports, format)
}

fn report(seed: u64, reports: &[CaseReport], format: Format) -> Result<(), CliError> {
    let failed = reports.iter().filter(|r| !r.failures.is_empty()).count();
    let checks: usize = reports.iter().map(|r| r.checks).sum();
    match format {
        Format::Text => {
            outln!("seed: {seed}");
            for r in reports {
                if r.failures.is_empty() {
                    outln!("ok {} ({} checks)", r.name, r.checks);
                } else {
                    for f in &r.failures {
                        outln!("FAIL {}: {f}", r.name);
                    }
                }
            }
            if failed == 0 {
                outln!("{} cases, {checks} checks, all passed", reports.len());
            } else {
                outln!("{} cases, {checks} checks, {failed} case(s) FAILED", reports.len());
            }
        }
        Format::Json => {
            let cases: Vec<Value> = reports
                .iter()
                .map(|r| {
                    json!({
                        "name": r.name,
                        "checks": r.checks,
                        "failures": r.failures,
                    })
                })
                .collect();
            outln!(
                "{:#}",
                json!({
                    "seed": seed,
                    "cases": cases,
                    "total_checks": checks,
                    "failed_cases": failed,
                })
            );
        }
        Format::Svg => unreachable!(),
    }
    if failed > 0 {
        Err(CliError::CheckFailed { failed, total: reports.len() })
    } else {
        Ok(())
    }
}

fn battery_report(name: String, input: &Input) -> CaseReport {
    match crate::battery(input) {
        Ok(results) => CaseReport::from_results(name, &results),
        Err(e) => CaseReport::from_error(name, &e),
    }
}

/// A segment [0, L] cut at a random subset of its interior lattice points.
fn random_segment_case(rng: &mut Rng, i: usize) -> CaseReport {
    let length = 2 + rng.below(3) as i64;
    let mut cuts = vec![0];
    for x in 1..length {
        if rng.below(2) == 0 {
            cuts.push(x);
        }
    }
    cuts.push(length);
    let cells: Vec<Vec<Vec<BigInt>>> = cuts
        .windows(2)
        .map(|w| vec![vec![BigInt::from(w[0])], vec![BigInt::from(w[1])]])
        .collect();
    let name = format!("random-segment-{i} (length {length}, {} cell(s))", cells.len());
    match CellComplex::new(cells) {
        Ok(c) => battery_report(name, &Input::Complex(c)),
        Err(e) => CaseReport::from_error(name, &input::polytope_err(e)),
    }
}

/// A regular subdivision of the square [0, 2]^2 from random heights on the
/// 3 x 3 grid, plus a few random up-restrictions of its subdivision map,
/// whose batteries exercise the small-symmetry-degree closed forms.
fn random_grid_cases(rng: &mut Rng, i: usize) -> (CaseReport, Vec<CaseReport>) {
    let mut points = Vec::new();
    let mut heights = Vec::new();
    for x in 0..3 {
        for y in 0..3 {
            points.push(vec![BigInt::from(x), BigInt::from(y)]);
            heights.push(BigInt::from(rng.below(6)));
        }
    }
    let complex = match CellComplex::regular_from_heights(points, heights) {
        Ok(c) => c,
        Err(e) => {
            return (
                CaseReport::from_error(format!("random-grid-{i}"), &input::polytope_err(e)),
                Vec::new(),
            )
        }
    };
    let name = format!("random-grid-{i} ({} cell(s))", complex.maximal_cells().len());
    let grid_report = battery_report(name, &Input::Complex(complex.clone()));

    let mut subs = Vec::new();
    if let Ok(sfs) = complex.to_sfs() {
        let mut pairs = Vec::new();
        for y in 0..sfs.gamma().len() {
            for x in 0..sfs.base().len() {
                if sfs.is_admissible(y, x) && (1..=3).contains(&sfs.pair_excess(y, x)) {
                    pairs.push((y, x));
                }
            }
        }
        for j in 1..=RANDOM_SUBS_PER_GRID.min(pairs.len()) {
            let (y, x) = pairs[rng.below(pairs.len() as u64) as usize];
            let name = format!(
                "random-grid-{i}-sub-{j} ({} over {})",
                sfs.gamma().id(y),
                sfs.base().id(x)
            );
            match sfs.sub_sfs(y, x) {
                Ok(sub) => match SfsInvariants::new(&sub) {
                    Ok(inv) => match run_battery(&inv) {
                        Ok(results) => subs.push(CaseReport::from_results(name, &results)),
                        Err(e) => {
                            subs.push(CaseReport::from_error(name, &input::subdivision_err(e)))
                        }
                    },
                    Err(e) => subs.push(CaseReport::from_error(name, &input::subdivision_err(e))),
                },
                Err(e) => subs.push(CaseReport::from_error(name, &input::subdivision_err(e))),
            }
        }
    }
    (grid_report, subs)
}
