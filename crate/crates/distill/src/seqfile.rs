//! Plain-text sequence files.
//!
//! One step per line:
//!
//! ```text
//! # comment
//! code t15
//! Z 3 7 8 12 ; stage=1a ; destab X 0 2 8 10 14 15
//! -Z 0 4 8 ; destab X 0 3 7 9
//! ```
//!
//! A header line `code t15` or `code ccz` selects the code context before
//! any step appears. Measurement supports are checked against the stabilizer
//! span at load time.

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::codes::{build_code, CodeId, MeasurementSequence, PauliKind, PauliProduct, Step};
use crate::gf2::BitVec;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected `code t15` or `code ccz` before the first step")]
    MissingHeader { line: usize },
    #[error("line {line}: unknown code `{name}`")]
    UnknownCode { line: usize, name: String },
    #[error("line {line}: duplicate code header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: malformed step: {reason}")]
    MalformedStep { line: usize, reason: String },
    #[error("line {line}: tile {tile} out of range (code has {n_tiles} tiles)")]
    TileOutOfRange {
        line: usize,
        tile: usize,
        n_tiles: usize,
    },
    #[error("line {line}: duplicate tile {tile} in one product")]
    DuplicateTile { line: usize, tile: usize },
    #[error("line {line}: measurement support is outside the stabilizer span")]
    OutsideSpan { line: usize },
    #[error("line {line}: empty measurement support")]
    EmptySupport { line: usize },
    #[error("sequence has {got} steps; at most {max} are supported")]
    TooManySteps { got: usize, max: usize },
    #[error("file contains no measurement steps")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_tiles(line_no: usize, n_tiles: usize, tokens: &[&str]) -> Result<BitVec, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::EmptySupport { line: line_no });
    }
    let mut v = BitVec::zeros(n_tiles);
    for t in tokens {
        let tile: usize = t.parse().map_err(|_| ParseError::MalformedStep {
            line: line_no,
            reason: format!("bad tile index `{t}`"),
        })?;
        if tile >= n_tiles {
            return Err(ParseError::TileOutOfRange {
                line: line_no,
                tile,
                n_tiles,
            });
        }
        if v.get(tile) {
            return Err(ParseError::DuplicateTile {
                line: line_no,
                tile,
            });
        }
        v.set(tile, true);
    }
    Ok(v)
}

/// Parses sequence file text into a loaded sequence.
pub fn parse(text: &str) -> Result<MeasurementSequence, ParseError> {
    let mut code: Option<Arc<crate::codes::CodeSpec>> = None;
    let mut steps: Vec<Step> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("code ") {
            if code.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            let id = match rest.trim() {
                "t15" => CodeId::T15,
                "ccz" => CodeId::Ccz,
                name => {
                    return Err(ParseError::UnknownCode {
                        line: line_no,
                        name: name.to_string(),
                    })
                }
            };
            code = Some(Arc::new(build_code(id)));
            continue;
        }
        let code = code
            .as_ref()
            .ok_or(ParseError::MissingHeader { line: line_no })?;
        let mut fields = line.split(';').map(str::trim);
        let head = fields.next().unwrap();
        let mut tokens = head.split_whitespace();
        let op = tokens.next().ok_or_else(|| ParseError::MalformedStep {
            line: line_no,
            reason: "missing operator".into(),
        })?;
        let negated = match op {
            "Z" => false,
            "-Z" => true,
            other => {
                return Err(ParseError::MalformedStep {
                    line: line_no,
                    reason: format!("expected `Z` or `-Z`, got `{other}`"),
                })
            }
        };
        let tiles: Vec<&str> = tokens.collect();
        let support = parse_tiles(line_no, code.n_tiles, &tiles)?;
        if code.decompose_support(&support).is_none() {
            return Err(ParseError::OutsideSpan { line: line_no });
        }
        let mut step = Step {
            measurement: PauliProduct {
                kind: PauliKind::Z,
                support,
                negated,
            },
            stage: None,
            destabilizer: None,
        };
        for field in fields {
            if let Some(label) = field.strip_prefix("stage=") {
                step.stage = Some(label.trim().to_string());
            } else if let Some(rest) = field.strip_prefix("destab") {
                let mut toks = rest.split_whitespace();
                match toks.next() {
                    Some("X") => {}
                    _ => {
                        return Err(ParseError::MalformedStep {
                            line: line_no,
                            reason: "destabilizer must start with `X`".into(),
                        })
                    }
                }
                let tiles: Vec<&str> = toks.collect();
                let support = parse_tiles(line_no, code.n_tiles, &tiles)?;
                step.destabilizer = Some(PauliProduct::x(support));
            } else if !field.is_empty() {
                return Err(ParseError::MalformedStep {
                    line: line_no,
                    reason: format!("unknown field `{field}`"),
                });
            }
        }
        steps.push(step);
    }
    if steps.is_empty() {
        return Err(ParseError::Empty);
    }
    if steps.len() > BitVec::MAX_LEN {
        return Err(ParseError::TooManySteps {
            got: steps.len(),
            max: BitVec::MAX_LEN,
        });
    }
    Ok(MeasurementSequence::new(code.unwrap(), steps))
}

pub fn load(path: impl AsRef<Path>) -> Result<MeasurementSequence, ParseError> {
    let text = std::fs::read_to_string(path)?;
    parse(&text)
}

fn format_product(p: &PauliProduct) -> String {
    let mut s = String::new();
    if p.negated {
        s.push('-');
    }
    s.push(match p.kind {
        PauliKind::Z => 'Z',
        PauliKind::X => 'X',
    });
    for t in p.support.iter_ones() {
        s.push(' ');
        s.push_str(&t.to_string());
    }
    s
}

/// Renders a sequence back to file text. `parse(&format(seq))` reproduces
/// the sequence.
pub fn format(seq: &MeasurementSequence) -> String {
    let mut out = format!("code {}\n", seq.code.id);
    for step in &seq.steps {
        out.push_str(&format_step(step));
        out.push('\n');
    }
    out
}

pub fn format_step(step: &Step) -> String {
    let mut line = format_product(&step.measurement);
    if let Some(stage) = &step.stage {
        line.push_str(&format!(" ; stage={stage}"));
    }
    if let Some(d) = &step.destabilizer {
        line.push_str(" ; destab ");
        line.push_str(&format_product(d));
    }
    line
}

pub fn save(seq: &MeasurementSequence, path: impl AsRef<Path>) -> Result<(), ParseError> {
    std::fs::write(path, format(seq))?;
    Ok(())
}
