//! Line-oriented text format for protocol and uncertainty files.
//!
//! A file is a sequence of directives; lines beginning with whitespace are
//! block continuations of the preceding directive, `#` lines are comments.
//! The canonical layout (also produced by the writers) is:
//!
//! ```text
//! schema 1
//! dim 2
//! observable pauli_z: builtin
//! observable tilted:
//!   2
//!   0.6 0.8
//!   0.8 -0.6
//! pre: pauli_z = +1
//! intermediates: tilted
//! post: pauli_z = -1
//! state:
//!   2
//!   1
//!   0
//! mc:
//!   n_trials 10000
//!   seed 7
//! ```
//!
//! Matrix and vector blocks open with the dimension, then one row per
//! line. Complex entries use `re`, `re+imi`, `re-imi`, or `imi` tokens.
//! A `state:` block holding one entry per row is a pure state vector; one
//! holding full rows is a density matrix. `intermediates:` with nothing
//! after the colon means no intermediate measurements. Uncertainty files
//! share the grammar but declare exactly two observables and no
//! pre/intermediates/post/mc sections.

use crate::linalg::{ComplexMatrix, ComplexVector, LinalgError};
use crate::protocol::{McDefaults, Protocol, ProtocolError};
use crate::quantum::{Observable, ObservableSpec, QuantumError, QuantumState};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Render one complex number as a token the parser accepts. Pure reals
/// drop the imaginary part entirely.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}

/// Parse a complex token: `re`, `imi`, or `re±imi`, where either part is a
/// plain decimal or scientific float. The `±` separating the parts must
/// not be part of an exponent.
pub fn parse_complex(token: &str) -> Result<Complex64, String> {
    let t = token.trim();
    if t.is_empty() {
        return Err("empty complex token".into());
    }
    let parse_part = |s: &str, what: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .map_err(|_| format!("invalid {what} part '{s}' in complex token '{t}'"))
    };
    match t.strip_suffix('i') {
        Some(body) => {
            let bytes = body.as_bytes();
            let mut split = None;
            for i in (1..bytes.len()).rev() {
                let b = bytes[i];
                if (b == b'+' || b == b'-') && bytes[i - 1] != b'e' && bytes[i - 1] != b'E' {
                    split = Some(i);
                    break;
                }
            }
            match split {
                Some(i) => {
                    let re = parse_part(&body[..i], "real")?;
                    let im = match &body[i..] {
                        "+" => 1.0,
                        "-" => -1.0,
                        s => parse_part(s, "imaginary")?,
                    };
                    Ok(Complex64::new(re, im))
                }
                None => {
                    let im = match body {
                        "" | "+" => 1.0,
                        "-" => -1.0,
                        s => parse_part(s, "imaginary")?,
                    };
                    Ok(Complex64::new(0.0, im))
                }
            }
        }
        None => Ok(Complex64::new(parse_part(t, "real")?, 0.0)),
    }
}

/// What a `state:` block contained.
enum StateBlock {
    Vector(ComplexVector),
    Matrix(ComplexMatrix),
}

enum ObservableDecl {
    Builtin,
    Matrix(ComplexMatrix),
}

/// Raw parsed document, shared by the protocol and uncertainty adapters.
struct Document {
    dim: Option<(usize, usize)>,
    observables: Vec<(usize, String, ObservableDecl)>,
    pre: Option<(usize, String, String)>,
    intermediates: Option<(usize, Vec<String>)>,
    post: Option<(usize, String, String)>,
    state: Option<(usize, StateBlock)>,
    mc: Option<(usize, McDefaults)>,
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    /// Consume consecutive indented lines (a block body).
    fn block(&mut self) -> Vec<(usize, &'a str)> {
        let mut body = Vec::new();
        while let Some((n, l)) = self.lines.get(self.pos).copied() {
            if l.starts_with(' ') || l.starts_with('\t') {
                body.push((n, l.trim()));
                self.pos += 1;
            } else {
                break;
            }
        }
        body
    }
}

fn parse_usize(s: &str, line: usize, what: &str) -> Result<usize, FormatError> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| syntax(line, format!("invalid {what} '{}'", s.trim())))
}

fn parse_u64(s: &str, line: usize, what: &str) -> Result<u64, FormatError> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| syntax(line, format!("invalid {what} '{}'", s.trim())))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Parse `NAME = LABEL` after a `pre:`/`post:` header.
fn parse_binding(rest: &str, line: usize) -> Result<(String, String), FormatError> {
    let (name, label) = rest
        .split_once('=')
        .ok_or_else(|| syntax(line, "expected 'observable = label'"))?;
    let (name, label) = (name.trim(), label.trim());
    if !valid_name(name) || label.is_empty() {
        return Err(syntax(line, "expected 'observable = label'"));
    }
    Ok((name.to_string(), label.to_string()))
}

/// Parse a block opened by a dimension line. `row_len(dim)` gives the
/// expected token count per row; the block must have exactly `dim` rows.
fn parse_number_block(
    body: &[(usize, &str)],
    header_line: usize,
    row_len: impl Fn(usize) -> usize,
) -> Result<(usize, Vec<Complex64>), FormatError> {
    let Some(&(dim_line, dim_text)) = body.first() else {
        return Err(syntax(header_line, "missing block body"));
    };
    let dim = parse_usize(dim_text, dim_line, "block dimension")?;
    if dim == 0 {
        return Err(syntax(dim_line, "block dimension must be >= 1"));
    }
    let rows = &body[1..];
    if rows.len() != dim {
        return Err(syntax(
            dim_line,
            format!("expected {} block rows, found {}", dim, rows.len()),
        ));
    }
    let expected = row_len(dim);
    let mut entries = Vec::with_capacity(dim * expected);
    for &(line, row) in rows {
        let tokens: Vec<&str> = row.split_whitespace().collect();
        if tokens.len() != expected {
            return Err(syntax(
                line,
                format!("expected {} entries per row, found {}", expected, tokens.len()),
            ));
        }
        for token in tokens {
            entries.push(parse_complex(token).map_err(|m| syntax(line, m))?);
        }
    }
    Ok((dim, entries))
}

fn parse_document(text: &str) -> Result<Document, FormatError> {
    let mut lines = Lines::new(text);
    let mut doc = Document {
        dim: None,
        observables: Vec::new(),
        pre: None,
        intermediates: None,
        post: None,
        state: None,
        mc: None,
    };

    let Some((first_line, first)) = lines.next() else {
        return Err(syntax(0, "empty file"));
    };
    match first.strip_prefix("schema ") {
        Some(v) if v.trim() == "1" => {}
        Some(v) => {
            return Err(syntax(
                first_line,
                format!("unsupported schema '{}', expected 1", v.trim()),
            ))
        }
        None => return Err(syntax(first_line, "first directive must be 'schema 1'")),
    }

    while let Some((line, raw)) = lines.next() {
        if raw.starts_with(' ') || raw.starts_with('\t') {
            return Err(syntax(line, "unexpected indented line outside a block"));
        }
        if let Some(rest) = raw.strip_prefix("dim ") {
            if doc.dim.is_some() {
                return Err(syntax(line, "duplicate 'dim' directive"));
            }
            doc.dim = Some((line, parse_usize(rest, line, "dimension")?));
        } else if let Some(rest) = raw.strip_prefix("observable ") {
            let (name, tail) = rest
                .split_once(':')
                .ok_or_else(|| syntax(line, "expected 'observable NAME:'"))?;
            let name = name.trim();
            if !valid_name(name) {
                return Err(syntax(line, format!("invalid observable name '{name}'")));
            }
            if doc.observables.iter().any(|(_, n, _)| n == name) {
                return Err(syntax(line, format!("observable '{name}' declared twice")));
            }
            let decl = match tail.trim() {
                "builtin" => ObservableDecl::Builtin,
                "" => {
                    let body = lines.block();
                    let (dim, entries) = parse_number_block(&body, line, |d| d)?;
                    ObservableDecl::Matrix(
                        ComplexMatrix::new(dim, entries).map_err(FormatError::Linalg)?,
                    )
                }
                other => {
                    return Err(syntax(
                        line,
                        format!("expected 'builtin' or a matrix block, found '{other}'"),
                    ))
                }
            };
            doc.observables.push((line, name.to_string(), decl));
        } else if let Some(rest) = raw.strip_prefix("pre:") {
            if doc.pre.is_some() {
                return Err(syntax(line, "duplicate 'pre' directive"));
            }
            let (name, label) = parse_binding(rest, line)?;
            doc.pre = Some((line, name, label));
        } else if let Some(rest) = raw.strip_prefix("post:") {
            if doc.post.is_some() {
                return Err(syntax(line, "duplicate 'post' directive"));
            }
            let (name, label) = parse_binding(rest, line)?;
            doc.post = Some((line, name, label));
        } else if let Some(rest) = raw.strip_prefix("intermediates:") {
            if doc.intermediates.is_some() {
                return Err(syntax(line, "duplicate 'intermediates' directive"));
            }
            let names: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            for n in &names {
                if !valid_name(n) {
                    return Err(syntax(line, format!("invalid observable name '{n}'")));
                }
            }
            doc.intermediates = Some((line, names));
        } else if raw.trim() == "state:" {
            if doc.state.is_some() {
                return Err(syntax(line, "duplicate 'state' directive"));
            }
            let body = lines.block();
            // Peek at the first row to decide vector vs matrix form.
            let per_row = body
                .get(1)
                .map(|&(_, r)| r.split_whitespace().count())
                .unwrap_or(1);
            let block = if per_row <= 1 {
                let (_, entries) = parse_number_block(&body, line, |_| 1)?;
                StateBlock::Vector(ComplexVector::new(entries))
            } else {
                let (dim, entries) = parse_number_block(&body, line, |d| d)?;
                StateBlock::Matrix(ComplexMatrix::new(dim, entries).map_err(FormatError::Linalg)?)
            };
            doc.state = Some((line, block));
        } else if raw.trim() == "mc:" {
            if doc.mc.is_some() {
                return Err(syntax(line, "duplicate 'mc' directive"));
            }
            let mut mc = McDefaults::default();
            for (bline, body) in lines.block() {
                let (key, value) = body
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| syntax(bline, "expected 'n_trials N' or 'seed N'"))?;
                match key {
                    "n_trials" if mc.n_trials.is_none() => {
                        mc.n_trials = Some(parse_u64(value, bline, "n_trials")?)
                    }
                    "seed" if mc.seed.is_none() => {
                        mc.seed = Some(parse_u64(value, bline, "seed")?)
                    }
                    "n_trials" | "seed" => {
                        return Err(syntax(bline, format!("duplicate mc key '{key}'")))
                    }
                    other => return Err(syntax(bline, format!("unknown mc key '{other}'"))),
                }
            }
            doc.mc = Some((line, mc));
        } else {
            return Err(syntax(line, format!("unknown directive '{raw}'")));
        }
    }
    Ok(doc)
}

fn build_observables(doc: &Document) -> Result<Vec<Observable>, FormatError> {
    let (dim_line, dim) = doc
        .dim
        .ok_or_else(|| syntax(0, "missing 'dim' directive"))?;
    let mut out = Vec::with_capacity(doc.observables.len());
    for (line, name, decl) in &doc.observables {
        let obs = match decl {
            ObservableDecl::Builtin => Observable::builtin(name).map_err(FormatError::Quantum)?,
            ObservableDecl::Matrix(m) => {
                if !m.is_self_adjoint(crate::linalg::DEFAULT_TOL) {
                    return Err(syntax(
                        *line,
                        format!("observable '{name}' matrix is not self-adjoint"),
                    ));
                }
                Observable::from_matrix(name.clone(), m).map_err(FormatError::Quantum)?
            }
        };
        if obs.dim() != dim {
            return Err(syntax(
                *line,
                format!(
                    "observable '{}' has dimension {}, file declares dim {} (line {})",
                    name,
                    obs.dim(),
                    dim,
                    dim_line
                ),
            ));
        }
        out.push(obs);
    }
    Ok(out)
}

fn build_state(doc: &Document) -> Result<Option<QuantumState>, FormatError> {
    match &doc.state {
        None => Ok(None),
        Some((_, StateBlock::Vector(v))) => {
            let state = QuantumState::pure(v.normalized().map_err(FormatError::Linalg)?)
                .map_err(FormatError::Quantum)?;
            Ok(Some(state))
        }
        Some((_, StateBlock::Matrix(m))) => Ok(Some(
            QuantumState::mixed(m.clone()).map_err(FormatError::Quantum)?,
        )),
    }
}

/// Parse a protocol file from text.
pub fn parse_protocol_str(text: &str) -> Result<Protocol, FormatError> {
    let doc = parse_document(text)?;
    let observables = build_observables(&doc)?;
    let (_, pre_name, pre_label) = doc
        .pre
        .as_ref()
        .ok_or_else(|| syntax(0, "missing 'pre' directive"))?;
    let (_, post_name, post_label) = doc
        .post
        .as_ref()
        .ok_or_else(|| syntax(0, "missing 'post' directive"))?;
    let (_, intermediates) = doc
        .intermediates
        .as_ref()
        .ok_or_else(|| syntax(0, "missing 'intermediates' directive"))?;
    let inter_refs: Vec<&str> = intermediates.iter().map(String::as_str).collect();
    let mut protocol = Protocol::new(
        observables,
        (pre_name, pre_label),
        &inter_refs,
        (post_name, post_label),
    )?;
    if let Some(state) = build_state(&doc)? {
        protocol = protocol.with_initial_state(state)?;
    }
    if let Some((_, mc)) = doc.mc {
        protocol = protocol.with_mc_defaults(mc);
    }
    Ok(protocol)
}

/// Input for an uncertainty-bound check: an ordered observable pair and a
/// state (maximally mixed when the file has no `state:` block).
#[derive(Debug, Clone)]
pub struct UncertaintyInput {
    pub first: Observable,
    pub second: Observable,
    pub state: QuantumState,
}

/// Parse an uncertainty file: same grammar, exactly two observables, no
/// protocol sections.
pub fn parse_uncertainty_str(text: &str) -> Result<UncertaintyInput, FormatError> {
    let doc = parse_document(text)?;
    for (present, what) in [
        (doc.pre.is_some(), "pre"),
        (doc.post.is_some(), "post"),
        (doc.intermediates.is_some(), "intermediates"),
        (doc.mc.is_some(), "mc"),
    ] {
        if present {
            return Err(syntax(
                0,
                format!("'{what}' is a protocol directive, not valid in uncertainty files"),
            ));
        }
    }
    let observables = build_observables(&doc)?;
    let [first, second]: [Observable; 2] = observables
        .try_into()
        .map_err(|v: Vec<Observable>| {
            syntax(
                0,
                format!("uncertainty files declare exactly 2 observables, found {}", v.len()),
            )
        })?;
    let dim = first.dim();
    if second.dim() != dim {
        return Err(syntax(0, "observables have mismatched dimensions"));
    }
    let state = match build_state(&doc)? {
        Some(s) => {
            if s.dim() != dim {
                return Err(syntax(0, "state dimension does not match observables"));
            }
            s
        }
        None => QuantumState::Mixed(
            ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        ),
    };
    Ok(UncertaintyInput {
        first,
        second,
        state,
    })
}

fn write_matrix_block(out: &mut String, m: &ComplexMatrix) {
    let d = m.dim();
    let _ = writeln!(out, "  {d}");
    for i in 0..d {
        let row: Vec<String> = (0..d).map(|j| format_complex(m.get(i, j))).collect();
        let _ = writeln!(out, "  {}", row.join(" "));
    }
}

fn write_vector_block(out: &mut String, v: &ComplexVector) {
    let _ = writeln!(out, "  {}", v.dim());
    for i in 0..v.dim() {
        let _ = writeln!(out, "  {}", format_complex(v.get(i)));
    }
}

fn write_observable(out: &mut String, obs: &Observable) {
    match obs.spec() {
        ObservableSpec::Builtin => {
            let _ = writeln!(out, "observable {}: builtin", obs.name());
        }
        ObservableSpec::Matrix(m) => {
            let _ = writeln!(out, "observable {}:", obs.name());
            write_matrix_block(out, m);
        }
    }
}

/// Canonical serialization of a protocol; `parse_protocol_str` of the
/// output reproduces the protocol, and serializing again is byte-identical.
pub fn protocol_to_string(p: &Protocol) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema 1");
    let _ = writeln!(out, "dim {}", p.dim());
    for obs in p.observables() {
        write_observable(&mut out, obs);
    }
    let _ = writeln!(
        out,
        "pre: {} = {}",
        p.pre_observable().name(),
        p.pre_label()
    );
    if p.n_intermediates() == 0 {
        let _ = writeln!(out, "intermediates:");
    } else {
        let _ = writeln!(out, "intermediates: {}", p.intermediate_names().join(", "));
    }
    let _ = writeln!(
        out,
        "post: {} = {}",
        p.post_observable().name(),
        p.post_label()
    );
    if let Some(state) = p.explicit_initial_state() {
        let _ = writeln!(out, "state:");
        match state {
            QuantumState::Pure(v) => write_vector_block(&mut out, v),
            QuantumState::Mixed(m) => write_matrix_block(&mut out, m),
        }
    }
    let mc = p.mc_defaults();
    if mc.n_trials.is_some() || mc.seed.is_some() {
        let _ = writeln!(out, "mc:");
        if let Some(n) = mc.n_trials {
            let _ = writeln!(out, "  n_trials {n}");
        }
        if let Some(s) = mc.seed {
            let _ = writeln!(out, "  seed {s}");
        }
    }
    out
}

/// Canonical serialization of an uncertainty input.
pub fn uncertainty_to_string(input: &UncertaintyInput) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema 1");
    let _ = writeln!(out, "dim {}", input.first.dim());
    write_observable(&mut out, &input.first);
    write_observable(&mut out, &input.second);
    let _ = writeln!(out, "state:");
    match &input.state {
        QuantumState::Pure(v) => write_vector_block(&mut out, v),
        QuantumState::Mixed(m) => write_matrix_block(&mut out, m),
    }
    out
}

pub fn read_protocol_file(path: &Path) -> Result<Protocol, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_protocol_str(&text)
}

pub fn read_uncertainty_file(path: &Path) -> Result<UncertaintyInput, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_uncertainty_str(&text)
}

pub fn write_text_file(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Write {
        path: path.display().to_string(),
        source,
    })
}
