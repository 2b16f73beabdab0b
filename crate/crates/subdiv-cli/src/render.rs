//! Output rendering. Text goes line by line to stdout; JSON is pretty-printed
//! with sorted keys; SVG is assembled from integer coordinates only, so all
//! three formats are deterministic byte for byte.

use std::fmt::Write as _;
use std::io::Write as _;

use serde_json::{json, Value};
use subdiv::ehrhart::{DiamondKind, DiamondTable};
use subdiv::laurent::LaurentPoly;
use subdiv::subdivision::CheckResult;

use crate::input::CliError;
use crate::Format;

pub fn svg_unsupported() -> CliError {
    CliError::Parse("svg output is only available for the diamond command".into())
}

/// Best-effort stdout write; a closed pipe ends the program quietly.
pub fn out(args: std::fmt::Arguments<'_>) {
    let mut stdout = std::io::stdout().lock();
    if stdout.write_fmt(args).is_err() {
        std::process::exit(0);
    }
}

pub fn outln(args: std::fmt::Arguments<'_>) {
    let mut stdout = std::io::stdout().lock();
    if stdout.write_fmt(args).and_then(|()| stdout.write_all(b"\n")).is_err() {
        std::process::exit(0);
    }
}

/// Prints one or more named polynomials. A single polynomial with an empty
/// key prints bare, so `hstar unit-simplex.json` is exactly `1`.
pub fn emit_polys(format: Format, polys: &[(&str, &str, &LaurentPoly)]) -> Result<(), CliError> {
    match format {
        Format::Text => {
            if let [("", _, p)] = polys {
                outln!("{p}");
            } else {
                for (_, label, p) in polys {
                    outln!("{label}: {p}");
                }
            }
            Ok(())
        }
        Format::Json => {
            if let [("", _, p)] = polys {
                outln!("{:#}", p.to_json());
            } else {
                let mut obj = serde_json::Map::new();
                for (key, _, p) in polys {
                    obj.insert((*key).to_string(), p.to_json());
                }
                outln!("{:#}", Value::Object(obj));
            }
            Ok(())
        }
        Format::Svg => Err(svg_unsupported()),
    }
}

/// Prints the check report and turns any failure into the exit-4 error.
pub fn emit_checks(format: Format, results: &[CheckResult]) -> Result<(), CliError> {
    let failed = results.iter().filter(|r| !r.passed).count();
    match format {
        Format::Text => {
            for r in results {
                if r.passed {
                    outln!("PASS {}", r.name);
                } else {
                    outln!("FAIL {}: {}", r.name, r.detail);
                }
            }
            if failed == 0 {
                outln!("{} properties checked, all passed", results.len());
            } else {
                outln!("{} properties checked, {failed} FAILED", results.len());
            }
        }
        Format::Json => {
            outln!(
                "{:#}",
                json!({
                    "checks": results.iter().map(CheckResult::to_json).collect::<Vec<_>>(),
                    "total": results.len(),
                    "failed": failed,
                })
            );
        }
        Format::Svg => return Err(svg_unsupported()),
    }
    if failed > 0 {
        Err(CliError::CheckFailed { failed, total: results.len() })
    } else {
        Ok(())
    }
}

pub fn emit_diamonds(format: Format, tables: &[(String, DiamondTable)]) -> Result<(), CliError> {
    match format {
        Format::Text => {
            for (i, (label, t)) in tables.iter().enumerate() {
                if i > 0 {
                    outln!();
                }
                outp!("{}", diamond_block(label, t));
            }
        }
        Format::Json => outln!("{:#}", diamonds_json(tables)),
        Format::Svg => outp!("{}", diamonds_svg(tables)),
    }
    Ok(())
}

pub fn diamonds_json(tables: &[(String, DiamondTable)]) -> Value {
    let mut obj = serde_json::Map::new();
    let mut layers = Vec::new();
    for (_, t) in tables {
        match t.kind {
            DiamondKind::HStar => {
                obj.insert("hstar".into(), t.to_json());
            }
            DiamondKind::LocalHStar => {
                obj.insert("local_hstar".into(), t.to_json());
            }
            DiamondKind::RLocal(_) => layers.push(t.to_json()),
        }
    }
    obj.insert("layers".into(), Value::Array(layers));
    Value::Object(obj)
}

/// One captioned diamond. Entry (p, q) sits at horizontal offset q − p and
/// height p + q, so each text row is one height, top row first; a table of
/// side 0 is the constant and prints as a bare 1.
pub fn diamond_block(label: &str, t: &DiamondTable) -> String {
    let mut out = format!("{label}:\n");
    let s = t.side();
    if s == 0 {
        out.push_str("1\n");
        return out;
    }
    let widest =
        (0..s).flat_map(|p| (0..s).map(move |q| t.entry(p, q).to_string().len())).max().unwrap();
    let unit = widest + 1;
    for y in (0..=2 * (s - 1)).rev() {
        let mut line = vec![' '; (2 * s - 1) * unit];
        for p in y.saturating_sub(s - 1)..=y.min(s - 1) {
            let q = y - p;
            let column = q + (s - 1) - p;
            let text = t.entry(p, q).to_string();
            let start = column * unit + (unit - text.len()) / 2;
            for (i, ch) in text.chars().enumerate() {
                line[start + i] = ch;
            }
        }
        let line: String = line.into_iter().collect();
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn diamonds_svg(tables: &[(String, DiamondTable)]) -> String {
    // Horizontal half-step and row height, in integer pixels.
    const CELL: usize = 28;
    const PAD: usize = 12;
    const CAPTION: usize = 22;
    const GAP: usize = 16;
    let mut body = String::new();
    let mut y = PAD;
    let mut width: usize = 0;
    for (label, t) in tables {
        y += CAPTION;
        let _ = writeln!(
            body,
            "  <text x=\"{PAD}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" \
             font-weight=\"bold\">{}</text>",
            y - 7,
            xml_escape(label)
        );
        width = width.max(2 * PAD + 8 * label.chars().count());
        let s = t.side();
        if s == 0 {
            let _ = writeln!(
                body,
                "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" \
                 text-anchor=\"middle\">1</text>",
                PAD + CELL / 2,
                y + CELL * 2 / 3
            );
            y += CELL;
        } else {
            for p in 0..s {
                for q in 0..s {
                    let (dx, dy) = DiamondTable::position(p, q);
                    let column = usize::try_from(dx + (s as i64 - 1)).unwrap();
                    let row = 2 * (s - 1) - usize::try_from(dy).unwrap();
                    let _ = writeln!(
                        body,
                        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" \
                         text-anchor=\"middle\">{}</text>",
                        PAD + column * CELL + CELL / 2,
                        y + row * CELL + CELL * 2 / 3,
                        t.entry(p, q)
                    );
                }
            }
            y += (2 * s - 1) * CELL;
            width = width.max(2 * PAD + (2 * s - 1) * CELL);
        }
        y += GAP;
    }
    let height = y - GAP + PAD;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n{body}</svg>\n"
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
