//! Input loading and error classification.
//!
//! Every command reads one JSON file. The top-level keys decide what the
//! file describes: `"gamma"` a strong formal subdivision, `"cells"` or
//! `"points"`/`"heights"` a cell complex, `"vertices"` a lattice polytope,
//! `"elements"` a ranked poset. Errors carry the exit code they map to.

use std::fmt;
use std::fs;
use std::path::Path;

use serde_json::Value;
use subdiv::ehrhart::EhrhartError;
use subdiv::kls::KlsError;
use subdiv::laurent::LaurentError;
use subdiv::polytope::{CellComplex, LatticePolytope, PolytopeError};
use subdiv::poset::{PosetError, RankedPoset};
use subdiv::subdivision::{StrongFormalSubdivision, SubdivisionError};

/// Failure modes, split by exit code: input that cannot be read or parsed
/// (2), input that parses but violates a validity axiom (3), and identity
/// checks that failed on valid input (4).
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Validation(String),
    CheckFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::CheckFailed { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "error: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::CheckFailed { failed, total } => write!(
                f,
                "{failed} of {total} checks failed; every checked identity \
                 is a theorem, so a failure indicates a bug and should be reported"
            ),
        }
    }
}

/// One parsed input file. A single value exists per invocation and is
/// consumed immediately, so the variant size spread is harmless.
#[allow(clippy::large_enum_variant)]
pub enum Input {
    Poset(RankedPoset),
    Subdivision(StrongFormalSubdivision),
    Polytope(LatticePolytope),
    Complex(CellComplex),
}

impl Input {
    pub fn kind(&self) -> &'static str {
        match self {
            Input::Poset(_) => "poset",
            Input::Subdivision(_) => "subdivision",
            Input::Polytope(_) => "polytope",
            Input::Complex(_) => "cell complex",
        }
    }

    pub fn into_poset(self, command: &str) -> Result<RankedPoset, CliError> {
        match self {
            Input::Poset(p) => Ok(p),
            other => Err(CliError::Parse(format!(
                "{command} expects a poset (top-level key \"elements\"), got a {}",
                other.kind()
            ))),
        }
    }

    pub fn into_polytope(self, command: &str) -> Result<LatticePolytope, CliError> {
        match self {
            Input::Polytope(p) => Ok(p),
            other => Err(CliError::Parse(format!(
                "{command} expects a polytope (top-level key \"vertices\"), got a {}",
                other.kind()
            ))),
        }
    }
}

pub fn load(path: &Path) -> Result<Input, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| locate(path, e))
}

/// Prefixes the file name so corpus runs and scripts can tell cases apart.
fn locate(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn parse(text: &str) -> Result<Input, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Parse("top-level JSON value must be an object".into()))?;
    if obj.contains_key("gamma") {
        StrongFormalSubdivision::from_json(&value)
            .map(Input::Subdivision)
            .map_err(subdivision_err)
    } else if obj.contains_key("cells") || obj.contains_key("points") {
        CellComplex::from_json(&value).map(Input::Complex).map_err(polytope_err)
    } else if obj.contains_key("vertices") {
        LatticePolytope::from_json(&value).map(Input::Polytope).map_err(polytope_err)
    } else if obj.contains_key("elements") {
        RankedPoset::from_json(&value).map(Input::Poset).map_err(poset_err)
    } else {
        Err(CliError::Parse(
            "unrecognized input: expected one of the top-level keys \"gamma\" (subdivision), \
             \"cells\" or \"points\" (cell complex), \"vertices\" (polytope), \
             \"elements\" (poset)"
                .into(),
        ))
    }
}

// Schema-shape failures exit with 2 like any other parse error; everything
// else from the library is a validity failure carrying a witness, exit 3.

pub fn poset_err(e: PosetError) -> CliError {
    match e {
        PosetError::Json(m) => CliError::Parse(format!("poset: {m}")),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn subdivision_err(e: SubdivisionError) -> CliError {
    match e {
        SubdivisionError::Json(m) => CliError::Parse(format!("subdivision: {m}")),
        SubdivisionError::Poset(p) => poset_err(p),
        SubdivisionError::Laurent(LaurentError::Json(m)) => {
            CliError::Parse(format!("polynomial: {m}"))
        }
        other => CliError::Validation(other.to_string()),
    }
}

pub fn polytope_err(e: PolytopeError) -> CliError {
    match e {
        PolytopeError::Json(m) => CliError::Parse(format!("polytope: {m}")),
        PolytopeError::Poset(p) => poset_err(p),
        PolytopeError::Subdivision(s) => subdivision_err(s),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn kls_err(e: KlsError) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn ehrhart_err(e: EhrhartError) -> CliError {
    match e {
        EhrhartError::Polytope(p) => polytope_err(p),
        EhrhartError::Subdivision(s) => subdivision_err(s),
        EhrhartError::Kls(k) => kls_err(k),
        other => CliError::Validation(other.to_string()),
    }
}
