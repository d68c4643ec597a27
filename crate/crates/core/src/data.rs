//! Tabular ingestion, a small formula language and the bundled datasets.
//!
//! Formulas read `response ~ terms`. The response is a sum of column
//! expressions, optionally followed by `| trials_column` for grouped
//! binomial data. Terms are separated by `+`; `1` is the intercept and `a:b`
//! multiplies two column expressions. A column expression is either a bare
//! column name or one of `log(c)`, `log10(c)`, `sqrt(c)`, `scale(c, k)`,
//! `eq(c, v)` and `ge(c, v)`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::ModelSpec;

const MANIFEST: &str = include_str!("../datasets/manifest.csv");

const FILES: &[(&str, &str)] = &[
    ("aids", include_str!("../datasets/aids.csv")),
    ("carrots", include_str!("../datasets/carrots.csv")),
    ("epilepsy", include_str!("../datasets/epilepsy.csv")),
    ("leukemia", include_str!("../datasets/leukemia.csv")),
    ("skin", include_str!("../datasets/skin.csv")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    pub source: String,
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Formula(format!("unknown column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest() -> Vec<DatasetInfo> {
    let mut rdr = csv::Reader::from_reader(MANIFEST.as_bytes());
    rdr.deserialize().map(|r| r.expect("bundled manifest is well formed")).collect()
}

/// Raw CSV text of a bundled dataset.
pub fn bundled_text(name: &str) -> Result<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| Error::UnknownDataset(name.to_string()))
}

/// Loads a bundled dataset after re-checking its checksum against the manifest.
pub fn bundled(name: &str) -> Result<Table> {
    let text = bundled_text(name)?;
    let info =
        manifest().into_iter().find(|d| d.name == name).ok_or_else(|| Error::UnknownDataset(name.to_string()))?;
    let digest = sha256_hex(text.as_bytes());
    if digest != info.sha256 {
        return Err(Error::Input(format!("checksum mismatch for bundled dataset '{name}'")));
    }
    parse_csv(text)
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text)
}

/// Parses a headed CSV of numeric columns. Missing or non-numeric cells are
/// reported with their 1-based line number.
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if columns.is_empty() {
        return Err(Error::Ingestion { line: 1, message: "empty header".into() });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Ingestion {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut row = Vec::with_capacity(columns.len());
        for (j, cell) in rec.iter().enumerate() {
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                return Err(Error::Ingestion { line, message: format!("missing value in column '{}'", columns[j]) });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Ingestion {
                line,
                message: format!("non-numeric value '{cell}' in column '{}'", columns[j]),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    Log,
    Log10,
    Sqrt,
    Scale(f64),
    Equals(f64),
    AtLeast(f64),
}

impl Transform {
    fn apply(&self, v: f64) -> f64 {
        match *self {
            Transform::Identity => v,
            Transform::Log => v.ln(),
            Transform::Log10 => v.log10(),
            Transform::Sqrt => v.sqrt(),
            Transform::Scale(k) => v * k,
            Transform::Equals(c) => f64::from(u8::from(v == c)),
            Transform::AtLeast(c) => f64::from(u8::from(v >= c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnExpr {
    pub column: String,
    pub transform: Transform,
}

impl ColumnExpr {
    fn eval(&self, table: &Table) -> Result<Vec<f64>> {
        let out: Vec<f64> = table.column(&self.column)?.into_iter().map(|v| self.transform.apply(v)).collect();
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Formula(format!(
                "transform of column '{}' is not finite at row {}",
                self.column,
                i + 1
            )));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Intercept,
    /// Product of one or more column expressions.
    Product(Vec<ColumnExpr>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaSpec {
    pub response: Vec<ColumnExpr>,
    pub trials: Option<String>,
    pub terms: Vec<(String, Term)>,
}

fn parse_expr(src: &str) -> Result<ColumnExpr> {
    let s = src.trim();
    let bad = || Error::Formula(format!("cannot parse '{s}'"));
    if let Some(open) = s.find('(') {
        if !s.ends_with(')') {
            return Err(bad());
        }
        let func = s[..open].trim();
        let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
        let col = args.first().filter(|c| !c.is_empty()).ok_or_else(bad)?.to_string();
        let num = |k: usize| -> Result<f64> { args.get(k).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let transform = match (func, args.len()) {
            ("log", 1) => Transform::Log,
            ("log10", 1) => Transform::Log10,
            ("sqrt", 1) => Transform::Sqrt,
            ("scale", 2) => Transform::Scale(num(1)?),
            ("eq", 2) => Transform::Equals(num(1)?),
            ("ge", 2) => Transform::AtLeast(num(1)?),
            _ => return Err(Error::Formula(format!("unknown function or arity in '{s}'"))),
        };
        Ok(ColumnExpr { column: col, transform })
    } else if !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
        Ok(ColumnExpr { column: s.to_string(), transform: Transform::Identity })
    } else {
        Err(bad())
    }
}

/// Splits on `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl FormulaSpec {
    pub fn parse(src: &str) -> Result<FormulaSpec> {
        let parts: Vec<&str> = src.split('~').collect();
        if parts.len() != 2 {
            return Err(Error::Formula("formula must contain exactly one '~'".into()));
        }
        let (lhs, trials) = match parts[0].split_once('|') {
            Some((l, t)) => (l, Some(t.trim().to_string())),
            None => (parts[0], None),
        };
        let response = split_top(lhs, '+').into_iter().map(parse_expr).collect::<Result<Vec<_>>>()?;
        let mut terms = Vec::new();
        for t in split_top(parts[1], '+') {
            let t = t.trim();
            if t == "1" {
                terms.push(("(Intercept)".to_string(), Term::Intercept));
            } else {
                let factors = split_top(t, ':').into_iter().map(parse_expr).collect::<Result<Vec<_>>>()?;
                terms.push((t.to_string(), Term::Product(factors)));
            }
        }
        if terms.is_empty() {
            return Err(Error::Formula("no terms on the right-hand side".into()));
        }
        Ok(FormulaSpec { response, trials, terms })
    }
}

/// Builds a model from a table. Without an explicit family, a response in
/// {0, 1} is treated as Bernoulli, a `| trials` response as binomial and
/// anything else as Poisson.
pub fn build_model(table: &Table, formula: &FormulaSpec, family: Option<Family>) -> Result<ModelSpec> {
    let n = table.nrows();
    if n == 0 {
        return Err(Error::Input("table has no rows".into()));
    }
    let mut y = vec![0.0; n];
    for e in &formula.response {
        for (acc, v) in y.iter_mut().zip(e.eval(table)?) {
            *acc += v;
        }
    }
    let p = formula.terms.len();
    let mut x = DMatrix::zeros(n, p);
    for (j, (_, term)) in formula.terms.iter().enumerate() {
        match term {
            Term::Intercept => x.column_mut(j).fill(1.0),
            Term::Product(fs) => {
                let mut col = vec![1.0; n];
                for f in fs {
                    for (c, v) in col.iter_mut().zip(f.eval(table)?) {
                        *c *= v;
                    }
                }
                x.column_mut(j).copy_from_slice(&col);
            }
        }
    }
    let names = formula.terms.iter().map(|(l, _)| l.clone()).collect();
    let spec = match &formula.trials {
        Some(tc) => {
            if family.is_some_and(|f| f != Family::Binomial) {
                return Err(Error::Formula("a trials column implies the binomial family".into()));
            }
            let t = table.column(tc)?;
            let trials = t
                .iter()
                .map(|&v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as u32)
                    } else {
                        Err(Error::Input(format!("invalid trial count {v}")))
                    }
                })
                .collect::<Result<Vec<u32>>>()?;
            ModelSpec::binomial(x, y, trials)?
        }
        None => {
            let fam = family.unwrap_or_else(|| {
                if y.iter().all(|&v| v == 0.0 || v == 1.0) {
                    Family::Bernoulli
                } else {
                    Family::Poisson
                }
            });
            ModelSpec::new(x, y, fam)?
        }
    };
    spec.with_coef_names(names)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub dataset: &'static str,
    pub formula: &'static str,
    pub coef_names: &'static [&'static str],
    pub description: &'static str,
    /// 1-based rows removed after the model is built.
    pub drop_rows: &'static [usize],
    /// 1-based response replacements applied before fitting.
    pub edits: &'static [(usize, f64)],
    /// Fit grouped binomial rows as individual Bernoulli trials.
    pub expand: bool,
}

const AIDS_F: &str = "cases ~ 1 + log10(quarter)";
const AIDS_N: &[&str] = &["Intercept", "log10(quarter)"];
const LEUK_F: &str = "ge(time, 52) ~ 1 + ag + scale(wbc, 1e-4)";
const LEUK_N: &[&str] = &["Intercept", "AG", "WBC"];
const SKIN_F: &str = "y ~ 1 + log(rate) + log(volume)";
const SKIN_N: &[&str] = &["Intercept", "log(Rate)", "log(Volume)"];
const CARROTS_F: &str = "success | total ~ 1 + logdose + eq(block, 1) + eq(block, 2)";
const CARROTS_N: &[&str] = &["Intercept", "logdose", "Block1", "Block2"];

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "epilepsy",
        dataset: "epilepsy",
        formula: "y1 + y2 + y3 + y4 ~ 1 + trt + scale(base, 0.25) + scale(age, 0.1) + trt:scale(base, 0.25)",
        coef_names: &["Intercept", "Trt", "Base", "Age", "Trt:Base"],
        description: "Poisson: total seizures on treatment, baseline/4, age/10 and interaction",
        drop_rows: &[],
        edits: &[],
        expand: false,
    },
    Preset {
        name: "aids",
        dataset: "aids",
        formula: AIDS_F,
        coef_names: AIDS_N,
        description: "Poisson: quarterly AIDS cases on log10 of the quarter index",
        drop_rows: &[],
        edits: &[],
        expand: false,
    },
    Preset {
        name: "aids-one-outlier",
        dataset: "aids",
        formula: AIDS_F,
        coef_names: AIDS_N,
        description: "AIDS counts with the first quarter replaced by 10",
        drop_rows: &[],
        edits: &[(1, 10.0)],
        expand: false,
    },
    Preset {
        name: "aids-two-outliers",
        dataset: "aids",
        formula: AIDS_F,
        coef_names: AIDS_N,
        description: "AIDS counts with quarter 1 set to 10 and quarter 20 set to 15",
        drop_rows: &[],
        edits: &[(1, 10.0), (20, 15.0)],
        expand: false,
    },
    Preset {
        name: "leukemia",
        dataset: "leukemia",
        formula: LEUK_F,
        coef_names: LEUK_N,
        description: "Logistic: survival past 52 weeks on AG and WBC/10^4",
        drop_rows: &[],
        edits: &[],
        expand: false,
    },
    Preset {
        name: "leukemia-without-15",
        dataset: "leukemia",
        formula: LEUK_F,
        coef_names: LEUK_N,
        description: "Leukemia data without observation 15",
        drop_rows: &[15],
        edits: &[],
        expand: false,
    },
    Preset {
        name: "skin",
        dataset: "skin",
        formula: SKIN_F,
        coef_names: SKIN_N,
        description: "Logistic: vasoconstriction on log rate and log volume of inspired air",
        drop_rows: &[],
        edits: &[],
        expand: false,
    },
    Preset {
        name: "skin-without-4-18",
        dataset: "skin",
        formula: SKIN_F,
        coef_names: SKIN_N,
        description: "Skin data without observations 4 and 18",
        drop_rows: &[4, 18],
        edits: &[],
        expand: false,
    },
    Preset {
        name: "carrots",
        dataset: "carrots",
        formula: CARROTS_F,
        coef_names: CARROTS_N,
        description: "Logistic: carrot fly damage on log dose and block, one row per carrot",
        drop_rows: &[],
        edits: &[],
        expand: true,
    },
    Preset {
        name: "carrots-grouped",
        dataset: "carrots",
        formula: CARROTS_F,
        coef_names: CARROTS_N,
        description: "Carrot data fitted as grouped binomial counts",
        drop_rows: &[],
        edits: &[],
        expand: false,
    },
];

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownDataset(name.to_string()))
}

impl Preset {
    pub fn table(&self) -> Result<Table> {
        bundled(self.dataset)
    }

    pub fn checksum(&self) -> Result<String> {
        Ok(sha256_hex(bundled_text(self.dataset)?.as_bytes()))
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let table = self.table()?;
        let formula = FormulaSpec::parse(self.formula)?;
        let mut spec = build_model(&table, &formula, None)?;
        if !self.edits.is_empty() {
            let mut y = spec.response().to_vec();
            for &(row, v) in self.edits {
                y[row - 1] = v;
            }
            spec = spec.with_response(y)?;
        }
        if !self.drop_rows.is_empty() {
            let drop: Vec<usize> = self.drop_rows.iter().map(|r| r - 1).collect();
            spec = spec.without_rows(&drop)?;
        }
        if self.expand {
            spec = spec.expand_to_bernoulli()?;
        }
        spec.with_coef_names(self.coef_names.iter().map(|s| s.to_string()).collect())
    }
}
