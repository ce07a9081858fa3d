//! Line-oriented instance and solution files.
//!
//! ```text
//! # comments run to end of line; blank lines are ignored
//! kind uncertain-q
//! n 2
//! h 0
//! M
//! 4 10
//! 1 2
//! qbar -100 -22
//! ubar 1 1
//! ```
//!
//! The first line names the kind. Every other line starts with a key. Counts, reals and
//! booleans take one value; vectors list their entries on the key's line; matrices put
//! the key alone on its line and one row per following line. Dimensions must be given
//! before any field that uses them. Index lists are 1-based.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::aar_m::{AffineSolutionM, UncertainLcpM};
use crate::aar_q::{AffineSolutionQ, UncertainLcpQ};
use crate::dense::{IndexSet, Matrix};
use crate::error::{Error, ParseError};
use crate::market::MarketModel;

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    UncertainQ(UncertainLcpQ),
    UncertainM(UncertainLcpM),
    Market(MarketModel),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::UncertainQ(_) => "uncertain-q",
            Instance::UncertainM(_) => "uncertain-m",
            Instance::Market(_) => "market",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolutionFile {
    UncertainQ(AffineSolutionQ),
    UncertainM(AffineSolutionM),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Instance(Instance),
    Solution(SolutionFile),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FieldType {
    Count,
    Real,
    Bool,
    Vector(&'static str),
    Matrix(&'static str, &'static str),
    Indices(&'static str),
}

#[derive(Clone, Debug)]
enum Value {
    Count(usize),
    Real(f64),
    Bool(bool),
    Vector(Vec<f64>),
    Matrix(Matrix),
    Indices(IndexSet),
}

const KINDS: [&str; 5] = ["uncertain-q", "uncertain-m", "market", "solution-q", "solution-m"];

fn field_type(kind: &str, key: &str) -> Option<FieldType> {
    use FieldType::*;
    let t = match (kind, key) {
        (_, "n") if kind != "market" => Count,
        ("uncertain-m" | "solution-m", "k") => Count,
        ("uncertain-q" | "uncertain-m", "h") => Count,
        ("uncertain-q", "M") => Matrix("n", "n"),
        ("uncertain-q", "qbar" | "ubar") => Vector("n"),
        ("uncertain-m", "q") => Vector("n"),
        ("uncertain-m", _) if is_perturbation_key(key) => Matrix("n", "n"),
        ("solution-q", "D") => Matrix("n", "n"),
        ("solution-m", "D") => Matrix("n", "k"),
        ("solution-q" | "solution-m", "r") => Vector("n"),
        ("market", "producers" | "technology" | "demand") => Count,
        ("market", "c") => Vector("producers"),
        ("market", "A") => Matrix("technology", "producers"),
        ("market", "b") => Vector("technology"),
        ("market", "B") => Matrix("demand", "producers"),
        ("market", "D") => Matrix("demand", "demand"),
        ("market", "d" | "d_halfwidth") => Vector("demand"),
        ("market", "fixed_producers") => Indices("producers"),
        ("market", "lambda_here_and_now" | "prices_here_and_now") => Bool,
        ("market", "min_halfwidth") => Real,
        _ => return None,
    };
    Some(t)
}

/// `M0`, `M1`, … without leading zeros.
fn is_perturbation_key(key: &str) -> bool {
    let Some(digits) = key.strip_prefix('M') else {
        return false;
    };
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && (digits == "0" || !digits.starts_with('0'))
}

#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

#[derive(Clone, Debug)]
struct Line<'a> {
    no: usize,
    tokens: Vec<Token<'a>>,
    /// Column just past the last token.
    end_col: usize,
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start: Option<(usize, usize)> = None; // (byte, col)
        let mut col = 0;
        for (byte, ch) in content.char_indices() {
            col += 1;
            if ch.is_whitespace() {
                if let Some((b, c)) = start.take() {
                    tokens.push(Token {
                        text: &content[b..byte],
                        col: c,
                    });
                }
            } else if start.is_none() {
                start = Some((byte, col));
            }
        }
        if let Some((b, c)) = start {
            tokens.push(Token {
                text: &content[b..],
                col: c,
            });
        }
        if !tokens.is_empty() {
            lines.push(Line {
                no: idx + 1,
                tokens,
                end_col: col + 1,
            });
        }
    }
    lines
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::new(line, col, msg)
}

fn parse_real(tok: &Token, line: usize) -> Result<f64, ParseError> {
    match tok.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(err(line, tok.col, format!("`{}` is not a finite number", tok.text))),
        Err(_) => Err(err(line, tok.col, format!("`{}` is not a number", tok.text))),
    }
}

fn parse_count(tok: &Token, line: usize) -> Result<usize, ParseError> {
    tok.text
        .parse::<usize>()
        .map_err(|_| err(line, tok.col, format!("`{}` is not a nonnegative integer", tok.text)))
}

fn expect_values<'a>(line: &'a Line, want: usize) -> Result<&'a [Token<'a>], ParseError> {
    let vals = &line.tokens[1..];
    if vals.len() > want {
        return Err(err(
            line.no,
            vals[want].col,
            format!(
                "expected {want} value(s) after `{}`, found {}",
                line.tokens[0].text,
                vals.len()
            ),
        ));
    }
    if vals.len() < want {
        return Err(err(
            line.no,
            line.end_col,
            format!(
                "expected {want} value(s) after `{}`, found {}",
                line.tokens[0].text,
                vals.len()
            ),
        ));
    }
    Ok(vals)
}

struct Fields {
    values: HashMap<String, Value>,
    positions: HashMap<String, (usize, usize)>,
    end_line: usize,
}

impl Fields {
    fn count(&self, key: &str) -> usize {
        match self.values.get(key) {
            Some(Value::Count(v)) => *v,
            _ => unreachable!("count `{key}` checked as required"),
        }
    }

    fn require(&self, keys: &[&str]) -> Result<(), ParseError> {
        for key in keys {
            if !self.values.contains_key(*key) {
                return Err(err(self.end_line, 1, format!("missing required field `{key}`")));
            }
        }
        Ok(())
    }

    fn take_vector(&mut self, key: &str) -> Vec<f64> {
        match self.values.remove(key) {
            Some(Value::Vector(v)) => v,
            _ => unreachable!(),
        }
    }

    fn take_matrix(&mut self, key: &str) -> Matrix {
        match self.values.remove(key) {
            Some(Value::Matrix(m)) => m,
            _ => unreachable!(),
        }
    }

    fn pos(&self, key: &str) -> (usize, usize) {
        self.positions.get(key).copied().unwrap_or((1, 1))
    }

    /// Re-anchors a construction error at the line of `key`.
    fn at(&self, key: &str, e: Error) -> ParseError {
        let (l, c) = self.pos(key);
        match e {
            Error::Parse(p) => p,
            other => err(l, c, other.to_string()),
        }
    }
}

/// Parses any supported document.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let lines = tokenize(text);
    let Some(first) = lines.first() else {
        return Err(err(1, 1, "empty input: expected `kind <name>`"));
    };
    if first.tokens[0].text != "kind" {
        return Err(err(
            first.no,
            first.tokens[0].col,
            "the first line must be `kind <name>`",
        ));
    }
    let kind_tok = expect_values(first, 1)?[0];
    let kind = kind_tok.text;
    if !KINDS.contains(&kind) {
        return Err(err(
            first.no,
            kind_tok.col,
            format!("unknown kind `{kind}`; expected one of {}", KINDS.join(", ")),
        ));
    }

    let mut f = Fields {
        values: HashMap::new(),
        positions: HashMap::new(),
        end_line: lines.last().map_or(1, |l| l.no + 1),
    };
    let mut i = 1;
    while i < lines.len() {
        let line = &lines[i];
        i += 1;
        let key_tok = line.tokens[0];
        let key = key_tok.text;
        let Some(ty) = field_type(kind, key) else {
            return Err(err(
                line.no,
                key_tok.col,
                format!("unknown field `{key}` for kind {kind}"),
            ));
        };
        if f.values.contains_key(key) {
            return Err(err(line.no, key_tok.col, format!("field `{key}` given twice")));
        }
        let dim = |f: &Fields, name: &str| -> Result<usize, ParseError> {
            match f.values.get(name) {
                Some(Value::Count(v)) => Ok(*v),
                _ => Err(err(
                    line.no,
                    key_tok.col,
                    format!("`{name}` must be given before `{key}`"),
                )),
            }
        };
        let value = match ty {
            FieldType::Count => Value::Count(parse_count(&expect_values(line, 1)?[0], line.no)?),
            FieldType::Real => Value::Real(parse_real(&expect_values(line, 1)?[0], line.no)?),
            FieldType::Bool => {
                let t = expect_values(line, 1)?[0];
                match t.text {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    other => return Err(err(line.no, t.col, format!("expected true or false, found `{other}`"))),
                }
            }
            FieldType::Vector(d) => {
                let n = dim(&f, d)?;
                let vals = expect_values(line, n)?;
                Value::Vector(vals.iter().map(|t| parse_real(t, line.no)).collect::<Result<_, _>>()?)
            }
            FieldType::Indices(d) => {
                let n = dim(&f, d)?;
                let mut out = Vec::new();
                for t in &line.tokens[1..] {
                    let v = parse_count(t, line.no)?;
                    if v == 0 || v > n {
                        return Err(err(line.no, t.col, format!("index {v} outside 1..={n}")));
                    }
                    if out.last().is_some_and(|&p| p >= v - 1) {
                        return Err(err(line.no, t.col, "indices must be strictly increasing"));
                    }
                    out.push(v - 1);
                }
                Value::Indices(IndexSet::new(out, n).expect("checked above"))
            }
            FieldType::Matrix(rd, cd) => {
                let (rows, cols) = (dim(&f, rd)?, dim(&f, cd)?);
                if key.starts_with('M') && key != "M" && kind == "uncertain-m" {
                    let idx: usize = key[1..].parse().unwrap_or(usize::MAX);
                    let k = dim(&f, "k")?;
                    if idx > k {
                        return Err(err(line.no, key_tok.col, format!("`{key}` exceeds k = {k}")));
                    }
                }
                expect_values(line, 0)?;
                let mut data = Vec::with_capacity(rows * cols);
                if cols > 0 {
                    for r in 0..rows {
                        let Some(row) = lines.get(i) else {
                            return Err(err(f.end_line, 1, format!("`{key}` needs {rows} rows, found {r}")));
                        };
                        if row.tokens.len() != cols {
                            let col = row.tokens.get(cols).map_or(row.end_col, |t| t.col);
                            return Err(err(
                                row.no,
                                col,
                                format!(
                                    "row {} of `{key}` needs {cols} entries, found {}",
                                    r + 1,
                                    row.tokens.len()
                                ),
                            ));
                        }
                        for t in &row.tokens {
                            data.push(parse_real(t, row.no)?);
                        }
                        i += 1;
                    }
                }
                Value::Matrix(Matrix::from_row_major(rows, cols, data).expect("entries finite"))
            }
        };
        f.positions.insert(key.to_string(), (line.no, key_tok.col));
        f.values.insert(key.to_string(), value);
    }
    build(kind, f)
}

fn build(kind: &str, mut f: Fields) -> Result<Document, ParseError> {
    match kind {
        "uncertain-q" => {
            f.require(&["n", "h", "M", "qbar", "ubar"])?;
            let h = f.count("h");
            let (m, qbar, ubar) = (f.take_matrix("M"), f.take_vector("qbar"), f.take_vector("ubar"));
            if let Some(j) = ubar.iter().position(|&v| v < 0.0) {
                let (l, _) = f.pos("ubar");
                return Err(err(l, 1, format!("ubar entry {} is negative", j + 1)));
            }
            let inst = UncertainLcpQ::new(m, qbar, ubar, h).map_err(|e| f.at("h", e))?;
            Ok(Document::Instance(Instance::UncertainQ(inst)))
        }
        "uncertain-m" => {
            f.require(&["n", "k", "h", "M0", "q"])?;
            let k = f.count("k");
            if k == 0 {
                let (l, c) = f.pos("k");
                return Err(err(l, c, "k must be at least 1"));
            }
            let keys: Vec<String> = (1..=k).map(|i| format!("M{i}")).collect();
            f.require(&keys.iter().map(String::as_str).collect::<Vec<_>>())?;
            let h = f.count("h");
            let m0 = f.take_matrix("M0");
            let perts = keys.iter().map(|key| f.take_matrix(key)).collect();
            let q = f.take_vector("q");
            let inst = UncertainLcpM::new(m0, perts, q, h).map_err(|e| f.at("h", e))?;
            Ok(Document::Instance(Instance::UncertainM(inst)))
        }
        "market" => {
            f.require(&[
                "producers",
                "technology",
                "demand",
                "c",
                "A",
                "b",
                "B",
                "D",
                "d",
                "d_halfwidth",
            ])?;
            let mut mm = MarketModel::new(
                f.take_vector("c"),
                f.take_matrix("A"),
                f.take_vector("b"),
                f.take_matrix("B"),
                f.take_matrix("D"),
                f.take_vector("d"),
                f.take_vector("d_halfwidth"),
            )
            .map_err(|e| f.at("d_halfwidth", e))?;
            if let Some(Value::Indices(s)) = f.values.remove("fixed_producers") {
                mm.nonadjustable_producers = s;
            }
            if let Some(Value::Bool(b)) = f.values.remove("lambda_here_and_now") {
                mm.lambda_here_and_now = b;
            }
            if let Some(Value::Bool(b)) = f.values.remove("prices_here_and_now") {
                mm.prices_here_and_now = b;
            }
            if let Some(Value::Real(v)) = f.values.remove("min_halfwidth") {
                mm.min_halfwidth = v;
            }
            mm.validate().map_err(|e| f.at("min_halfwidth", e))?;
            Ok(Document::Instance(Instance::Market(mm)))
        }
        "solution-q" => {
            f.require(&["n", "D", "r"])?;
            let sol = AffineSolutionQ::new(f.take_matrix("D"), f.take_vector("r")).map_err(|e| f.at("r", e))?;
            Ok(Document::Solution(SolutionFile::UncertainQ(sol)))
        }
        "solution-m" => {
            f.require(&["n", "k", "D", "r"])?;
            let sol = AffineSolutionM::new(f.take_matrix("D"), f.take_vector("r")).map_err(|e| f.at("r", e))?;
            Ok(Document::Solution(SolutionFile::UncertainM(sol)))
        }
        _ => unreachable!("kind validated"),
    }
}

/// Parses an instance file (uncertain-q, uncertain-m or market).
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    match parse_document(text)? {
        Document::Instance(i) => Ok(i),
        Document::Solution(_) => Err(err(1, 1, "expected an instance, found a solution file")),
    }
}

/// Parses a solution file (solution-q or solution-m).
pub fn parse_solution(text: &str) -> Result<SolutionFile, ParseError> {
    match parse_document(text)? {
        Document::Solution(s) => Ok(s),
        Document::Instance(_) => Err(err(1, 1, "expected a solution file, found an instance")),
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_vector(out: &mut String, key: &str, v: &[f64]) {
    out.push_str(key);
    for x in v {
        out.push(' ');
        out.push_str(&num(*x));
    }
    out.push('\n');
}

fn write_matrix(out: &mut String, key: &str, m: &Matrix) {
    out.push_str(key);
    out.push('\n');
    if m.cols() == 0 {
        return;
    }
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| num(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "kind {}", inst.kind());
    match inst {
        Instance::UncertainQ(p) => {
            let _ = writeln!(out, "n {}\nh {}", p.dim(), p.h());
            write_matrix(&mut out, "M", p.m());
            write_vector(&mut out, "qbar", p.qbar());
            write_vector(&mut out, "ubar", p.ubar());
        }
        Instance::UncertainM(p) => {
            let _ = writeln!(out, "n {}\nk {}\nh {}", p.dim(), p.k(), p.h());
            write_matrix(&mut out, "M0", p.m0());
            for (i, m) in p.perturbations().iter().enumerate() {
                write_matrix(&mut out, &format!("M{}", i + 1), m);
            }
            write_vector(&mut out, "q", p.q());
        }
        Instance::Market(mm) => {
            let _ = writeln!(
                out,
                "producers {}\ntechnology {}\ndemand {}",
                mm.producers(),
                mm.technology_rows(),
                mm.demand_rows()
            );
            write_vector(&mut out, "c", &mm.c);
            write_matrix(&mut out, "A", &mm.a);
            write_vector(&mut out, "b", &mm.b);
            write_matrix(&mut out, "B", &mm.b_demand);
            write_matrix(&mut out, "D", &mm.d_sensitivity);
            write_vector(&mut out, "d", &mm.d);
            write_vector(&mut out, "d_halfwidth", &mm.d_halfwidth);
            out.push_str("fixed_producers");
            for i in mm.nonadjustable_producers.to_one_based() {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
            let _ = writeln!(out, "lambda_here_and_now {}", mm.lambda_here_and_now);
            let _ = writeln!(out, "prices_here_and_now {}", mm.prices_here_and_now);
            let _ = writeln!(out, "min_halfwidth {}", num(mm.min_halfwidth));
        }
    }
    out
}

pub fn serialize_solution(sol: &SolutionFile) -> String {
    let mut out = String::new();
    match sol {
        SolutionFile::UncertainQ(s) => {
            let _ = writeln!(out, "kind solution-q\nn {}", s.dim());
            write_matrix(&mut out, "D", &s.d);
            write_vector(&mut out, "r", &s.r);
        }
        SolutionFile::UncertainM(s) => {
            let _ = writeln!(out, "kind solution-m\nn {}\nk {}", s.dim(), s.d.cols());
            write_matrix(&mut out, "D", &s.d);
            write_vector(&mut out, "r", &s.r);
        }
    }
    out
}
