//! File formats.
//!
//! * corpus: header `N=<int> V=<int>`, then `doc<TAB>word<TAB>count` lines
//! * ontology: header `V=<int>`, then `parent<TAB>child` lines
//! * checkpoint: one JSON object with dense row-major arrays, masks as 0/1
//! * trace: CSV with one row per iteration
//!
//! Blank lines and lines starting with `#` are ignored in the text formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::{ComparisonReport, TraceRow};
use crate::matrix::{Mask, Matrix};
use crate::model_state::ModelState;
use crate::ontology::Ontology;
use crate::scalar::Real;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header_value(path: &Path, line: usize, field: &str, key: &str) -> Result<usize> {
    let value = field
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| parse_err(path, line, format!("expected `{key}=<int>`, found `{field}`")))?;
    value
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{key}` is not a nonnegative integer: `{value}`")))
}

fn parse_fields<const N: usize>(path: &Path, line: usize, text: &str) -> Result<[usize; N]> {
    let parts: Vec<&str> = text.split('\t').map(str::trim).collect();
    if parts.len() != N {
        return Err(parse_err(
            path,
            line,
            format!("expected {N} tab-separated fields, found {}", parts.len()),
        ));
    }
    let mut out = [0usize; N];
    for (dst, p) in out.iter_mut().zip(&parts) {
        *dst = p
            .parse()
            .map_err(|_| parse_err(path, line, format!("`{p}` is not a nonnegative integer")))?;
    }
    Ok(out)
}

pub fn parse_corpus(text: &str, path: &Path) -> Result<Corpus> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing `N=<int> V=<int>` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(path, hl, "header must be `N=<int> V=<int>`"));
    }
    let n = header_value(path, hl, fields[0], "N")?;
    let v = header_value(path, hl, fields[1], "V")?;
    let mut triplets = Vec::new();
    for (ln, l) in lines {
        let [d, w, c] = parse_fields::<3>(path, ln, l)?;
        if d >= n {
            return Err(parse_err(path, ln, format!("doc id {d} out of range for N={n}")));
        }
        if w >= v {
            return Err(parse_err(path, ln, format!("word id {w} out of range for V={v}")));
        }
        let c = u32::try_from(c).map_err(|_| parse_err(path, ln, format!("count {c} too large")))?;
        triplets.push((d, w, c));
    }
    Corpus::from_triplets(n, v, triplets)
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    parse_corpus(&read_to_string(path)?, path)
}

/// Training counts only; held-out tokens are not written.
pub fn format_corpus(corpus: &Corpus) -> String {
    let mut out = format!("N={} V={}\n", corpus.num_docs(), corpus.vocab_size());
    for (n, w, c) in corpus.triplets() {
        out.push_str(&format!("{n}\t{w}\t{c}\n"));
    }
    out
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_string(path, &format_corpus(corpus))
}

pub fn parse_ontology(text: &str, path: &Path) -> Result<Ontology> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing `V=<int>` header"))?;
    let v = header_value(path, hl, header, "V")?;
    let mut edges = Vec::new();
    for (ln, l) in lines {
        let [p, c] = parse_fields::<2>(path, ln, l)?;
        for id in [p, c] {
            if id >= v {
                return Err(parse_err(path, ln, format!("id {id} out of range for V={v}")));
            }
        }
        if p == c {
            return Err(parse_err(path, ln, format!("self-loop on {p}")));
        }
        edges.push((p, c));
    }
    Ontology::from_edges(v, &edges)
}

pub fn read_ontology(path: &Path) -> Result<Ontology> {
    parse_ontology(&read_to_string(path)?, path)
}

pub fn format_ontology(ontology: &Ontology) -> String {
    let mut out = format!("V={}\n", ontology.num_words());
    for &(p, c) in ontology.edges() {
        out.push_str(&format!("{p}\t{c}\n"));
    }
    out
}

pub fn write_ontology(path: &Path, ontology: &Ontology) -> Result<()> {
    write_string(path, &format_ontology(ontology))
}

/// On-disk form of a [`ModelState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub seed: u64,
    pub lida: bool,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Bbar")]
    pub bbar: Vec<Vec<u8>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Abar")]
    pub abar: Vec<Vec<u8>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
}

fn mask_rows(m: &Mask) -> Vec<Vec<u8>> {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(u8::from).collect())
        .collect()
}

fn rows_mask(name: &str, rows: &[Vec<u8>], cols: usize) -> Result<Mask> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let mut row = Vec::with_capacity(r.len());
        for (j, &x) in r.iter().enumerate() {
            match x {
                0 => row.push(false),
                1 => row.push(true),
                _ => {
                    return Err(Error::DimensionMismatch(format!(
                        "{name}[{i}][{j}] = {x}, masks hold 0 or 1"
                    )))
                }
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Ok(Mask::zeros(0, cols));
    }
    Mask::from_rows(out)
}

fn rows_matrix<T: Real>(rows: &[Vec<f64>], cols: usize) -> Result<Matrix<T>> {
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, cols));
    }
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| T::of(x)).collect()).collect())
}

impl Checkpoint {
    pub fn from_state<T: Real>(state: &ModelState<T>, iteration: usize, seed: u64) -> Self {
        let dense = |m: &Matrix<T>| {
            m.to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(|x| x.as_f64()).collect())
                .collect()
        };
        Self {
            iteration,
            seed,
            lida: state.lida,
            b: dense(&state.b),
            bbar: mask_rows(&state.bbar),
            a: dense(&state.a),
            abar: mask_rows(&state.abar),
            p: dense(&state.p),
        }
    }

    /// Rebuilds the state. Shapes are checked only for rectangularity; use
    /// [`ModelState::validate`] for the full invariants.
    pub fn to_state<T: Real>(&self) -> Result<ModelState<T>> {
        let k = self.a.len();
        let v = self.p.len();
        Ok(ModelState {
            b: rows_matrix(&self.b, k)?,
            bbar: rows_mask("Bbar", &self.bbar, k)?,
            a: rows_matrix(&self.a, v)?,
            abar: rows_mask("Abar", &self.abar, v)?,
            p: rows_matrix(&self.p, v)?,
            lida: self.lida,
        })
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_string(path, &text)
}

pub fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    write_json(path, checkpoint)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_json(path)
}

/// Trace CSV. The `mh_accept_rate` column is written only when every row
/// carries a rate.
pub fn format_trace(rows: &[TraceRow]) -> Result<String> {
    let with_mh = !rows.is_empty() && rows.iter().all(|r| r.mh_accept_rate.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration", "train_ll", "heldout_ll", "K", "nonzero_A"];
    if with_mh {
        header.push("mh_accept_rate");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.iteration.to_string(),
            r.train_ll.to_string(),
            r.heldout_ll.to_string(),
            r.k.to_string(),
            r.nonzero_a.to_string(),
        ];
        if with_mh {
            rec.push(r.mh_accept_rate.unwrap_or(0.0).to_string());
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_string(path, &format_trace(rows)?)
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    parse_trace(&read_to_string(path)?)
}

/// Per-iteration wall-clock seconds.
pub fn write_timing(path: &Path, seconds: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "seconds"])?;
    for (i, s) in seconds.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{s:.6}")])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// One row per kept sample.
pub fn format_comparison_csv(report: &ComparisonReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "rel_ll_diff", "gs_nonzeros", "lida_nonzeros"])?;
    for i in 0..report.samples_kept {
        w.write_record([
            report.iterations[i].to_string(),
            report.rel_ll_diff[i].to_string(),
            report.gs_nonzeros[i].to_string(),
            report.lida_nonzeros[i].to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
