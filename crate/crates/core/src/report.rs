//! Aggregation arithmetic over computational-accuracy scores: per-language
//! comprehension/generation averages, score tables and base-vs-tuned
//! deltas, plus deterministic CSV and Markdown rendering.
//!
//! Values are kept at full precision and rounded half-up to two decimals
//! only when rendered.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floating-point type usable for scores.
pub trait Scalar: Float + FromPrimitive + Display + Debug + Default + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Display + Debug + Default + Send + Sync + 'static {}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("unknown language {0}")]
    UnknownLanguage(String),
    #[error("score keys differ: only in base {only_base:?}, only in tuned {only_tuned:?}")]
    KeyMismatch {
        only_base: Vec<String>,
        only_tuned: Vec<String>,
    },
    #[error("diagonal entry {0}->{0}")]
    DiagonalEntry(String),
    #[error("score {value} for {key} is outside [0, 100]")]
    OutOfRange { key: String, value: String },
    #[error("nothing to aggregate")]
    Empty,
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub(crate) fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("representable constant")
}

/// Arithmetic mean; `None` for an empty input.
pub fn mean<S: Scalar>(xs: impl IntoIterator<Item = S>) -> Option<S> {
    let mut sum = S::zero();
    let mut n = 0usize;
    for x in xs {
        sum = sum + x;
        n += 1;
    }
    (n > 0).then(|| sum / S::from_usize(n).expect("count fits"))
}

/// Rounds half-up to `digits` decimals. A tiny epsilon absorbs binary
/// representation error so that e.g. 0.125 rounds to 0.13.
pub fn round_half_up<S: Scalar>(x: S, digits: u32) -> S {
    let scale = lit::<S>(10f64.powi(digits as i32));
    ((x * scale + lit(0.5) + lit(1e-9)).floor()) / scale
}

/// Two-decimal rendering.
pub fn format2<S: Scalar>(x: S) -> String {
    let r = round_half_up(x, 2).to_f64().unwrap_or(f64::NAN);
    let s = format!("{r:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Two-decimal rendering with an explicit sign; zero renders as `+0.00`.
pub fn format_signed<S: Scalar>(x: S) -> String {
    let s = format2(x);
    if s.starts_with('-') {
        s
    } else {
        format!("+{s}")
    }
}

fn check_range<S: Scalar>(key: &str, v: S) -> Result<(), ReportError> {
    if v.is_nan() || v < S::zero() || v > lit(100.0) {
        return Err(ReportError::OutOfRange {
            key: key.into(),
            value: format!("{v}"),
        });
    }
    Ok(())
}

/// CA per ordered (source, target) language pair, diagonal excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct CaMatrix<S> {
    pub label: String,
    entries: BTreeMap<(String, String), S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EntryRecord<S> {
    source: String,
    target: String,
    ca: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MatrixFile<S> {
    label: String,
    entries: Vec<EntryRecord<S>>,
}

impl<S: Scalar> CaMatrix<S> {
    pub fn new(label: impl Into<String>) -> Self {
        CaMatrix {
            label: label.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, source: &str, target: &str, ca: S) -> Result<(), ReportError> {
        if source == target {
            return Err(ReportError::DiagonalEntry(source.into()));
        }
        check_range(&format!("{source}->{target}"), ca)?;
        self.entries.insert((source.into(), target.into()), ca);
        Ok(())
    }

    pub fn get(&self, source: &str, target: &str) -> Option<S> {
        self.entries.get(&(source.to_string(), target.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, S)> {
        self.entries.iter().map(|((s, t), v)| (s.as_str(), t.as_str(), *v))
    }

    /// Every language appearing as source or target, alphabetically.
    pub fn languages(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.keys().flat_map(|(s, t)| [s, t]).collect();
        set.into_iter().cloned().collect()
    }

    /// Mean CA over the tasks where `lang` is the source.
    pub fn comprehension_avg(&self, lang: &str) -> Result<S, ReportError> {
        mean(self.entries().filter(|(s, _, _)| *s == lang).map(|(_, _, v)| v))
            .ok_or_else(|| ReportError::UnknownLanguage(lang.into()))
    }

    /// Mean CA over the tasks where `lang` is the target.
    pub fn generation_avg(&self, lang: &str) -> Result<S, ReportError> {
        mean(self.entries().filter(|(_, t, _)| *t == lang).map(|(_, _, v)| v))
            .ok_or_else(|| ReportError::UnknownLanguage(lang.into()))
    }

    pub fn to_json(&self) -> String
    where
        S: Serialize,
    {
        let file = MatrixFile {
            label: self.label.clone(),
            entries: self
                .entries()
                .map(|(s, t, ca)| EntryRecord {
                    source: s.into(),
                    target: t.into(),
                    ca,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError>
    where
        S: for<'de> Deserialize<'de>,
    {
        let file: MatrixFile<S> = serde_json::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))?;
        let mut m = CaMatrix::new(file.label);
        for e in file.entries {
            m.insert(&e.source, &e.target, e.ca)?;
        }
        Ok(m)
    }

    /// Reads long-form CSV with `source,target,ca` columns.
    pub fn from_csv(label: &str, text: &str) -> Result<Self, ReportError> {
        let mut m = CaMatrix::new(label);
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| ReportError::Malformed(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| ReportError::Malformed(format!("missing column {name}")))
        };
        let (si, ti, ci) = (col("source")?, col("target")?, col("ca")?);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ReportError::Malformed(e.to_string()))?;
            let v: f64 = rec[ci]
                .trim()
                .parse()
                .map_err(|_| ReportError::Malformed(format!("bad score {:?}", &rec[ci])))?;
            m.insert(&rec[si], &rec[ti], lit(v))?;
        }
        Ok(m)
    }

    /// Long-form CSV, rows ordered by (source, target).
    pub fn to_long_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["source", "target", "ca"]).expect("in-memory write");
        for (s, t, v) in self.entries() {
            w.write_record([s, t, &format2(v)]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    fn grid(&self) -> Grid {
        let langs = self.languages();
        let sources: Vec<&String> = langs.iter().filter(|l| self.comprehension_avg(l).is_ok()).collect();
        let targets: Vec<&String> = langs.iter().filter(|l| self.generation_avg(l).is_ok()).collect();
        let mut header = vec![r"Source\Target".to_string()];
        header.extend(targets.iter().map(|t| t.to_string()));
        header.push("Und. Avg.".into());
        let mut rows = Vec::new();
        for s in &sources {
            let mut cells: Vec<Option<f64>> = targets
                .iter()
                .map(|t| self.get(s, t).and_then(|v| v.to_f64()))
                .collect();
            cells.push(self.comprehension_avg(s).ok().and_then(|v| v.to_f64()));
            rows.push((s.to_string(), cells));
        }
        let mut gen: Vec<Option<f64>> = targets
            .iter()
            .map(|t| self.generation_avg(t).ok().and_then(|v| v.to_f64()))
            .collect();
        gen.push(None);
        Grid {
            header,
            rows,
            footer: Some(("Gen. Avg.".into(), gen)),
        }
    }

    /// Source-by-target grid with an `Und. Avg.` column and a `Gen. Avg.` row.
    pub fn to_grid_csv(&self) -> String {
        self.grid().csv()
    }

    /// Like [`CaMatrix::to_grid_csv`], with the best value of each column
    /// (and of the average row) in bold.
    pub fn to_markdown(&self) -> String {
        self.grid().markdown()
    }
}

/// Rows of named configurations scored per language, e.g. one row per
/// prompt design or model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable<S> {
    pub title: String,
    rows: Vec<(String, BTreeMap<String, S>)>,
}

impl<S: Scalar> ScoreTable<S> {
    pub fn new(title: impl Into<String>) -> Self {
        ScoreTable {
            title: title.into(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, name: impl Into<String>, scores: BTreeMap<String, S>) -> Result<(), ReportError> {
        for (k, v) in &scores {
            check_range(k, *v)?;
        }
        self.rows.push((name.into(), scores));
        Ok(())
    }

    pub fn row(&self, name: &str) -> Option<&BTreeMap<String, S>> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    pub fn row_avg(&self, name: &str) -> Result<S, ReportError> {
        let row = self.row(name).ok_or_else(|| ReportError::Malformed(format!("no row {name}")))?;
        mean(row.values().copied()).ok_or(ReportError::Empty)
    }

    fn grid(&self) -> Grid {
        let cols: BTreeSet<&String> = self.rows.iter().flat_map(|(_, r)| r.keys()).collect();
        let mut header = vec![self.title.clone()];
        header.extend(cols.iter().map(|c| c.to_string()));
        header.push("Avg.".into());
        let rows = self
            .rows
            .iter()
            .map(|(name, r)| {
                let mut cells: Vec<Option<f64>> = cols.iter().map(|c| r.get(*c).and_then(|v| v.to_f64())).collect();
                cells.push(mean(r.values().copied()).and_then(|v| v.to_f64()));
                (name.clone(), cells)
            })
            .collect();
        Grid {
            header,
            rows,
            footer: None,
        }
    }

    pub fn to_csv(&self) -> String {
        self.grid().csv()
    }

    pub fn to_markdown(&self) -> String {
        self.grid().markdown()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow<S> {
    pub key: String,
    pub base: S,
    pub tuned: S,
    pub delta: S,
}

/// Per-key `tuned - base` plus averages.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport<S> {
    pub rows: Vec<DeltaRow<S>>,
    pub base_avg: S,
    pub tuned_avg: S,
    pub delta_avg: S,
}

/// Reads `key,ca` rows (header required; extra columns ignored).
pub fn scores_from_csv<S: Scalar>(text: &str) -> Result<BTreeMap<String, S>, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| ReportError::Malformed(e.to_string()))?.clone();
    let ci = headers
        .iter()
        .position(|h| h == "ca")
        .ok_or_else(|| ReportError::Malformed("missing column ca".into()))?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ReportError::Malformed(e.to_string()))?;
        let v: f64 = rec[ci]
            .trim()
            .parse()
            .map_err(|_| ReportError::Malformed(format!("bad score {:?}", &rec[ci])))?;
        let v = lit(v);
        check_range(&rec[0], v)?;
        if out.insert(rec[0].to_string(), v).is_some() {
            return Err(ReportError::Malformed(format!("duplicate key {:?}", &rec[0])));
        }
    }
    if out.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(out)
}

pub fn delta_report<S: Scalar>(base: &BTreeMap<String, S>, tuned: &BTreeMap<String, S>) -> Result<DeltaReport<S>, ReportError> {
    let only_base: Vec<String> = base.keys().filter(|k| !tuned.contains_key(*k)).cloned().collect();
    let only_tuned: Vec<String> = tuned.keys().filter(|k| !base.contains_key(*k)).cloned().collect();
    if !only_base.is_empty() || !only_tuned.is_empty() {
        return Err(ReportError::KeyMismatch { only_base, only_tuned });
    }
    let rows: Vec<DeltaRow<S>> = base
        .iter()
        .map(|(k, b)| DeltaRow {
            key: k.clone(),
            base: *b,
            tuned: tuned[k],
            delta: tuned[k] - *b,
        })
        .collect();
    let base_avg = mean(rows.iter().map(|r| r.base)).ok_or(ReportError::Empty)?;
    let tuned_avg = mean(rows.iter().map(|r| r.tuned)).ok_or(ReportError::Empty)?;
    Ok(DeltaReport {
        base_avg,
        tuned_avg,
        delta_avg: tuned_avg - base_avg,
        rows,
    })
}

impl<S: Scalar> DeltaReport<S> {
    fn table(&self) -> (Vec<&'static str>, Vec<[String; 4]>) {
        let mut rows: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| [r.key.clone(), format2(r.base), format2(r.tuned), format_signed(r.delta)])
            .collect();
        rows.push([
            "Avg.".into(),
            format2(self.base_avg),
            format2(self.tuned_avg),
            format_signed(self.delta_avg),
        ]);
        (vec!["task", "base", "tuned", "delta"], rows)
    }

    pub fn to_csv(&self) -> String {
        let (header, rows) = self.table();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_markdown(&self) -> String {
        let (header, rows) = self.table();
        let mut out = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
        for r in rows {
            out.push_str(&format!("| {} |\n", r.join(" | ")));
        }
        out
    }
}

struct Grid {
    header: Vec<String>,
    rows: Vec<(String, Vec<Option<f64>>)>,
    footer: Option<(String, Vec<Option<f64>>)>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), format2)
}

impl Grid {
    fn all_rows(&self) -> impl Iterator<Item = &(String, Vec<Option<f64>>)> {
        self.rows.iter().chain(self.footer.iter())
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for (name, cells) in self.all_rows() {
            let mut rec = vec![name.clone()];
            rec.extend(cells.iter().map(|v| cell(*v)));
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    fn markdown(&self) -> String {
        let ncols = self.header.len() - 1;
        let best: Vec<Option<String>> = (0..ncols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|(_, cells)| cells[c])
                    .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
                    .map(format2)
            })
            .collect();
        let footer_best = self.footer.as_ref().and_then(|(_, cells)| {
            cells
                .iter()
                .flatten()
                .fold(None, |m: Option<f64>, v| Some(m.map_or(*v, |m| m.max(*v))))
                .map(format2)
        });
        let mut out = format!("| {} |\n|{}\n", self.header.join(" | "), "---|".repeat(self.header.len()));
        let mut line = |name: &str, cells: &[Option<f64>], marks: &dyn Fn(usize, &str) -> bool| {
            let rendered: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let s = cell(*v);
                    if v.is_some() && marks(i, &s) {
                        format!("**{s}**")
                    } else {
                        s
                    }
                })
                .collect();
            out.push_str(&format!("| {name} | {} |\n", rendered.join(" | ")));
        };
        for (name, cells) in &self.rows {
            line(name, cells, &|i, s| best[i].as_deref() == Some(s));
        }
        if let Some((name, cells)) = &self.footer {
            line(name, cells, &|_, s| footer_best.as_deref() == Some(s));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> CaMatrix<f64> {
        let mut m = CaMatrix::new("t");
        m.insert("python", "go", 50.0).unwrap();
        m.insert("go", "python", 75.0).unwrap();
        m
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(format2(0.125f64), "0.13");
        assert_eq!(format2(86.1638f64), "86.16");
        assert_eq!(format2(66.935f64), "66.94");
        assert_eq!(format2(-0.001f64), "0.00");
        assert_eq!(format_signed(56.38f64 - 67.35), "-10.97");
        assert_eq!(format_signed(82.69f64 - 76.83), "+5.86");
        assert_eq!(format_signed(0.0f64), "+0.00");
    }

    #[test]
    fn averages() {
        let m = m2();
        assert_eq!(m.comprehension_avg("python").unwrap(), 50.0);
        assert_eq!(m.generation_avg("python").unwrap(), 75.0);
        assert_eq!(m.comprehension_avg("rust"), Err(ReportError::UnknownLanguage("rust".into())));
    }

    #[test]
    fn matrix_guards() {
        let mut m = CaMatrix::<f64>::new("t");
        assert_eq!(m.insert("go", "go", 1.0), Err(ReportError::DiagonalEntry("go".into())));
        assert!(matches!(m.insert("go", "py", 100.5), Err(ReportError::OutOfRange { .. })));
        assert!(matches!(m.insert("go", "py", f64::NAN), Err(ReportError::OutOfRange { .. })));
    }

    #[test]
    fn grid_csv_for_two_languages() {
        let csv = m2().to_grid_csv();
        assert_eq!(
            csv,
            "Source\\Target,go,python,Und. Avg.\ngo,-,75.00,75.00\npython,50.00,-,50.00\nGen. Avg.,50.00,75.00,-\n"
        );
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn markdown_marks_best() {
        let md = m2().to_markdown();
        assert!(md.contains("| go | - | **75.00** | **75.00** |"));
        assert!(md.contains("| Gen. Avg. | 50.00 | **75.00** | - |"));
    }

    #[test]
    fn json_and_csv_round_trip() {
        let m = m2();
        assert_eq!(CaMatrix::<f64>::from_json(&m.to_json()).unwrap(), m);
        assert_eq!(CaMatrix::<f64>::from_csv("t", &m.to_long_csv()).unwrap(), m);
    }

    #[test]
    fn deltas() {
        let base: BTreeMap<String, f64> = [("a".to_string(), 76.83), ("b".to_string(), 66.93)].into();
        let tuned: BTreeMap<String, f64> = [("a".to_string(), 82.69), ("b".to_string(), 62.43)].into();
        let r = delta_report(&base, &tuned).unwrap();
        assert_eq!(format_signed(r.rows[0].delta), "+5.86");
        assert_eq!(format_signed(r.rows[1].delta), "-4.50");
        assert!(r.to_csv().ends_with("Avg.,71.88,72.56,+0.68\n"));
        let same = delta_report(&base, &base).unwrap();
        assert!(same.rows.iter().all(|r| r.delta == 0.0));
        let mut other = base.clone();
        other.insert("c".into(), 1.0);
        assert!(matches!(delta_report(&base, &other), Err(ReportError::KeyMismatch { .. })));
    }

    #[test]
    fn generic_over_f32() {
        let mut m = CaMatrix::<f32>::new("f32");
        m.insert("a", "b", 50.0).unwrap();
        m.insert("a", "c", 75.0).unwrap();
        assert_eq!(format2(m.comprehension_avg("a").unwrap()), "62.50");
    }

    #[test]
    fn score_table() {
        let mut t = ScoreTable::<f64>::new("Prompt");
        t.push_row("basic", [("go".to_string(), 50.0), ("rust".to_string(), 60.0)].into()).unwrap();
        t.push_row("sig", [("go".to_string(), 70.0), ("rust".to_string(), 40.0)].into()).unwrap();
        assert_eq!(t.row_avg("sig").unwrap(), 55.0);
        assert_eq!(t.to_csv(), "Prompt,go,rust,Avg.\nbasic,50.00,60.00,55.00\nsig,70.00,40.00,55.00\n");
        assert!(t.to_markdown().contains("| basic | 50.00 | **60.00** | **55.00** |"));
    }

    #[test]
    fn scores_csv() {
        let m: BTreeMap<String, f64> = scores_from_csv("task,ca\ncpp,50\ngo,75.5\n").unwrap();
        assert_eq!(m["go"], 75.5);
        assert!(scores_from_csv::<f64>("task,ca\ncpp,150\n").is_err());
        assert!(scores_from_csv::<f64>("task,ca\ncpp,1\ncpp,2\n").is_err());
        assert_eq!(scores_from_csv::<f64>("task,ca\n"), Err(ReportError::Empty));
    }
}
