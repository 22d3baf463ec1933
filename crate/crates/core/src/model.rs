//! Model files, scan specifications and state specifications.
//!
//! A model file is TOML:
//!
//! ```toml
//! basis = "tensor_pauli"   # "pauli", "gellmann" (needs `d`) or "tensor_pauli" (needs `qubits`)
//! qubits = 2
//!
//! [params]
//! x = 0.2
//!
//! [kossakowski]
//! A = [[1, [0, "x"], 0], [[0, "-x"], 1, 0], [0, 0, 0]]   # dense, n × n
//! B = { entries = [["XI", "IX", "x"], [2, 5, "-x"]] }    # sparse, 1-based or labels
//! C = "A"                                               # copy of another block
//!
//! [hamiltonian]
//! h1 = [0, 0, 0.5]
//! h12 = { entries = [[1, 1, 0.5]] }
//! ```
//!
//! Entries are numbers, `[re, im]` pairs, or expressions over the named
//! parameters using `+`, `-`, `*` and parentheses. Missing blocks are zero.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{gellmann_basis, pauli_basis, tensor_pauli_basis, BasisKind, BasisSet};
use crate::generator::{GeneratorModel, HamiltonianSpec, KossakowskiBlocks};
use crate::linalg::{c, CMatrix, CVector};
use crate::witness::ProductState;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn eval(&self, params: &BTreeMap<String, f64>, field: &str) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Expr(e) => eval_expr(e, params).map_err(|m| Error::model(field, m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Complex([Scalar; 2]),
    Real(Scalar),
}

impl Entry {
    fn eval(&self, params: &BTreeMap<String, f64>, field: &str) -> Result<Complex64> {
        match self {
            Entry::Real(s) => Ok(c(s.eval(params, field)?, 0.0)),
            Entry::Complex([a, b]) => Ok(c(a.eval(params, field)?, b.eval(params, field)?)),
        }
    }
}

/// Row/column reference: 1-based position or basis label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Index {
    Position(usize),
    Label(String),
}

impl Index {
    fn resolve(&self, basis: &BasisSet, field: &str) -> Result<usize> {
        match self {
            Index::Position(p) if *p >= 1 && *p <= basis.len() => Ok(p - 1),
            Index::Position(p) => Err(Error::model(
                field,
                format!("index {p} outside 1..={}", basis.len()),
            )),
            Index::Label(l) => basis
                .index_of(l)
                .ok_or_else(|| Error::model(field, format!("unknown basis label {l:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseMatrix {
    pub entries: Vec<(Index, Index, Entry)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Dense(Vec<Vec<Entry>>),
    Sparse(SparseMatrix),
    /// Name of another block in the same table.
    Alias(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KossakowskiSection {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixSpec>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixSpec>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h12: Option<MatrixSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisName {
    Pauli,
    #[serde(alias = "gell_mann")]
    Gellmann,
    TensorPauli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub basis: BasisName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub kossakowski: KossakowskiSection,
    #[serde(default)]
    pub hamiltonian: HamiltonianSection,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::model("model", e.to_string()))?;
        file.basis_set()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::model("model", e.to_string()))
    }

    pub fn basis_set(&self) -> Result<BasisSet> {
        match self.basis {
            BasisName::Pauli => match self.d {
                None | Some(2) => Ok(pauli_basis()),
                Some(d) => Err(Error::model("d", format!("pauli basis has d = 2, got {d}"))),
            },
            BasisName::Gellmann => {
                let d = self.d.ok_or_else(|| Error::model("d", "gellmann basis needs d"))?;
                gellmann_basis(d).map_err(|e| Error::model("d", e.to_string()))
            }
            BasisName::TensorPauli => {
                let n = self
                    .qubits
                    .ok_or_else(|| Error::model("qubits", "tensor_pauli basis needs qubits"))?;
                tensor_pauli_basis(n).map_err(|e| Error::model("qubits", e.to_string()))
            }
        }
    }

    pub fn has_h12(&self) -> bool {
        self.hamiltonian.h12.is_some()
    }

    /// File parameters with `overrides` applied; overriding an undeclared
    /// parameter is an error.
    pub fn parameters(&self, overrides: &[(&str, f64)]) -> Result<BTreeMap<String, f64>> {
        let mut params = self.params.clone();
        for (name, value) in overrides {
            match params.get_mut(*name) {
                Some(slot) => *slot = *value,
                None => {
                    return Err(Error::model(
                        "params",
                        format!("unknown parameter {name:?}"),
                    ))
                }
            }
        }
        Ok(params)
    }

    pub fn to_model(&self) -> Result<GeneratorModel> {
        self.to_model_with(&[])
    }

    pub fn to_model_with(&self, overrides: &[(&str, f64)]) -> Result<GeneratorModel> {
        let basis = self.basis_set()?;
        let params = self.parameters(overrides)?;
        let n = basis.len();
        let k = &self.kossakowski;
        let lookup = |name: &str| -> Option<&MatrixSpec> {
            match name {
                "A" | "a" => k.a.as_ref(),
                "B" | "b" => k.b.as_ref(),
                "C" | "c" => k.c.as_ref(),
                _ => None,
            }
        };
        let block = |name: &str, spec: Option<&MatrixSpec>| -> Result<CMatrix> {
            let field = format!("kossakowski.{name}");
            let spec = match spec {
                Some(MatrixSpec::Alias(target)) => match lookup(target) {
                    Some(MatrixSpec::Alias(_)) => {
                        return Err(Error::model(field, "alias must name a concrete block"))
                    }
                    Some(s) => Some(s),
                    None => return Err(Error::model(field, format!("unknown block {target:?}"))),
                },
                other => other,
            };
            match spec {
                Some(s) => eval_matrix(s, &basis, &params, &field),
                None => Ok(CMatrix::zeros(n, n)),
            }
        };
        let a = block("A", k.a.as_ref())?;
        let b = block("B", k.b.as_ref())?;
        let cm = block("C", k.c.as_ref())?;
        let blocks = KossakowskiBlocks::new(a, b, cm).map_err(|e| Error::model("kossakowski", e.to_string()))?;

        let h = &self.hamiltonian;
        let vector = |name: &str, v: &Option<Vec<Scalar>>| -> Result<Vec<f64>> {
            let field = format!("hamiltonian.{name}");
            match v {
                None => Ok(vec![0.0; n]),
                Some(v) if v.len() != n => Err(Error::model(field, format!("expected {n} entries, got {}", v.len()))),
                Some(v) => v.iter().map(|s| s.eval(&params, &field)).collect(),
            }
        };
        let h12 = match &h.h12 {
            None => DMatrix::zeros(n, n),
            Some(MatrixSpec::Alias(_)) => return Err(Error::model("hamiltonian.h12", "aliases are only allowed for A, B, C")),
            Some(spec) => {
                let m = eval_matrix(spec, &basis, &params, "hamiltonian.h12")?;
                if m.iter().any(|z| z.im != 0.0) {
                    return Err(Error::model("hamiltonian.h12", "entries must be real"));
                }
                m.map(|z| z.re)
            }
        };
        let ham = HamiltonianSpec::new(vector("h1", &h.h1)?, vector("h2", &h.h2)?, h12)
            .map_err(|e| Error::model("hamiltonian", e.to_string()))?;
        GeneratorModel::new(basis, blocks, ham).map_err(|e| Error::model("model", e.to_string()))
    }
}

fn eval_matrix(spec: &MatrixSpec, basis: &BasisSet, params: &BTreeMap<String, f64>, field: &str) -> Result<CMatrix> {
    let n = basis.len();
    match spec {
        MatrixSpec::Dense(rows) => {
            if rows.len() != n {
                return Err(Error::model(field, format!("expected {n} rows, got {}", rows.len())));
            }
            let mut m = CMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::model(
                        format!("{field}[{}]", i + 1),
                        format!("expected {n} columns, got {}", row.len()),
                    ));
                }
                for (j, e) in row.iter().enumerate() {
                    m[(i, j)] = e.eval(params, &format!("{field}[{}][{}]", i + 1, j + 1))?;
                }
            }
            Ok(m)
        }
        MatrixSpec::Sparse(sparse) => {
            let mut m = CMatrix::zeros(n, n);
            for (k, (r, col, e)) in sparse.entries.iter().enumerate() {
                let f = format!("{field}.entries[{}]", k + 1);
                let (i, j) = (r.resolve(basis, &f)?, col.resolve(basis, &f)?);
                m[(i, j)] += e.eval(params, &f)?;
            }
            Ok(m)
        }
        MatrixSpec::Alias(_) => Err(Error::model(field, "unexpected alias")),
    }
}

/// Evaluates `+ - *` expressions with parentheses over numbers and named
/// parameters.
pub fn eval_expr(text: &str, params: &BTreeMap<String, f64>) -> std::result::Result<f64, String> {
    let tokens = tokenize(text)?;
    let mut p = ExprParser { tokens: &tokens, pos: 0, params };
    let v = p.sum()?;
    if p.pos != tokens.len() {
        return Err(format!("unexpected {:?} in {text:?}", tokens[p.pos]));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Name(String),
    Op(char),
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if "+-*()".contains(ch) {
            out.push(Token::Op(ch));
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token::Num(s.parse().map_err(|_| format!("bad number {s:?}"))?));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Name(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {ch:?} in {text:?}"));
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl ExprParser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.product()?;
            v = if op == '+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.unary()?;
        while self.peek_op() == Some('*') {
            self.pos += 1;
            v *= self.unary()?;
        }
        Ok(v)
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        match tok {
            Some(Token::Num(v)) => Ok(v),
            Some(Token::Name(n)) => self
                .params
                .get(&n)
                .copied()
                .ok_or_else(|| format!("unknown parameter {n:?}")),
            Some(Token::Op('(')) => {
                let v = self.sum()?;
                if self.peek_op() != Some(')') {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(t) => Err(format!("unexpected {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ParamRange {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + i as f64 * h })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOutput {
    Cp,
    Minors,
    Verdict,
    Onset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnsetGrid {
    pub tmax: f64,
    pub steps: usize,
}

fn default_outputs() -> Vec<ScanOutput> {
    vec![ScanOutput::Cp, ScanOutput::Minors, ScanOutput::Verdict]
}

fn default_state() -> String {
    "search".into()
}

fn default_budget() -> usize {
    16
}

/// Maximum number of grid points in a scan.
pub const MAX_SCAN_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub p1: ParamRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<ParamRange>,
    /// A state specification, or `"search"`.
    #[serde(default = "default_state")]
    pub state: String,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<ScanOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<OnsetGrid>,
}

impl ScanSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ScanSpec = toml::from_str(text).map_err(|e| Error::model("scan", e.to_string()))?;
        for (field, r) in std::iter::once(("p1", &spec.p1)).chain(spec.p2.as_ref().map(|r| ("p2", r))) {
            if r.steps == 0 {
                return Err(Error::model(field, "steps must be at least 1"));
            }
            if !(r.min.is_finite() && r.max.is_finite()) {
                return Err(Error::model(field, "range must be finite"));
            }
        }
        let points = spec.p1.steps.saturating_mul(spec.p2.as_ref().map_or(1, |r| r.steps));
        if points > MAX_SCAN_POINTS {
            return Err(Error::model("scan", format!("{points} grid points exceed {MAX_SCAN_POINTS}")));
        }
        if spec.budget == 0 {
            return Err(Error::model("budget", "must be at least 1"));
        }
        if let Some(g) = &spec.onset {
            if !(g.tmax > 0.0) || g.steps < 2 {
                return Err(Error::model("onset", "needs tmax > 0 and steps >= 2"));
            }
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn wants(&self, output: ScanOutput) -> bool {
        self.outputs.contains(&output)
    }

    /// Grid points in row-major order (`p2` varies fastest).
    pub fn points(&self) -> Vec<(f64, Option<f64>)> {
        let xs = self.p1.values();
        match &self.p2 {
            None => xs.into_iter().map(|x| (x, None)).collect(),
            Some(r2) => {
                let ys = r2.values();
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| (x, Some(y))))
                    .collect()
            }
        }
    }
}

/// Parses a product state.
///
/// * `"01"`: one computational level per party.
/// * For a tensor-Pauli basis with `n` qubits, `2n` binary digits, the first
///   `n` for party 1 (e.g. `"0000"`).
/// * `"psi=1,0;phi=0.6,0.8i"`: explicit amplitudes, normalized on parsing.
pub fn parse_state(spec: &str, basis: &BasisSet) -> Result<ProductState> {
    let d = basis.d;
    let spec = spec.trim();
    let bad = |m: String| Error::InvalidArgument(format!("state {spec:?}: {m}"));
    if spec.contains('=') {
        let mut psi = None;
        let mut phi = None;
        for part in spec.split(';') {
            let (key, values) = part.split_once('=').ok_or_else(|| bad("expected key=values".into()))?;
            let v: Vec<Complex64> = values
                .split(',')
                .map(|s| s.trim().parse::<Complex64>().map_err(|_| bad(format!("bad amplitude {s:?}"))))
                .collect::<Result<_>>()?;
            if v.len() != d {
                return Err(bad(format!("expected {d} amplitudes, got {}", v.len())));
            }
            let v = CVector::from_vec(v);
            match key.trim() {
                "psi" => psi = Some(v),
                "phi" => phi = Some(v),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let (psi, phi) = psi.zip(phi).ok_or_else(|| bad("needs both psi and phi".into()))?;
        return ProductState::from_unnormalized(psi, phi);
    }
    let digits: Vec<usize> = spec
        .chars()
        .map(|ch| ch.to_digit(10).map(|x| x as usize).ok_or_else(|| bad(format!("bad digit {ch:?}"))))
        .collect::<Result<_>>()?;
    if digits.len() == 2 {
        return ProductState::basis_state(d, digits[0], digits[1]).map_err(|e| bad(e.to_string()));
    }
    if let BasisKind::TensorPauli { qubits } = basis.kind {
        if digits.len() == 2 * qubits {
            if digits.iter().any(|&b| b > 1) {
                return Err(bad("qubit digits must be 0 or 1".into()));
            }
            let level = |bits: &[usize]| bits.iter().fold(0, |acc, b| 2 * acc + b);
            return ProductState::basis_state(d, level(&digits[..qubits]), level(&digits[qubits..]));
        }
    }
    Err(bad("unrecognized state specification".into()))
}
