//! Canonical corpus files and importers for the released ViGGO and RNNLG
//! layouts.
//!
//! The canonical format is CSV with a `mr,ref` header and one row per
//! (MR, reference) pair. Rows whose MR text is identical are grouped into
//! one item with several references, in first-occurrence order.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use darank_core::{parse_mr, CorpusItem, MrError, Ontology, Split};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: row {row}: {message}", path.display())]
    Parse { path: PathBuf, row: u64, message: String },
    #[error("{}: row {row}: {source}", path.display())]
    OntologyMismatch {
        path: PathBuf,
        row: u64,
        #[source]
        source: MrError,
    },
}

fn csv_error(path: &Path, e: csv::Error) -> CorpusError {
    let row = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CorpusError::Io { path: path.to_path_buf(), source },
        other => CorpusError::Parse { path: path.to_path_buf(), row, message: format!("{other:?}") },
    }
}

fn header_index(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize, CorpusError> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name)).ok_or_else(|| CorpusError::Parse {
        path: path.to_path_buf(),
        row: 1,
        message: format!("missing `{name}` column"),
    })
}

/// Reads `(line, mr, ref)` triples from a CSV file with `mr` and `ref`
/// columns; other columns are ignored.
fn read_pairs(path: &Path) -> Result<Vec<(u64, String, String)>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let (mr_col, ref_col) = (header_index(path, &headers, "mr")?, header_index(path, &headers, "ref")?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| {
            record.get(i).map(str::to_string).ok_or_else(|| CorpusError::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("expected at least {} fields", i + 1),
            })
        };
        out.push((row, field(mr_col)?, field(ref_col)?));
    }
    Ok(out)
}

fn group(
    path: &Path,
    pairs: Vec<(u64, String, String)>,
    ontology: &Ontology,
    split: Split,
) -> Result<Vec<CorpusItem>, CorpusError> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut items: Vec<CorpusItem> = Vec::new();
    for (row, mr_text, reference) in pairs {
        let key = mr_text.trim().to_string();
        let slot = match index.get(&key) {
            Some(&i) => i,
            None => {
                let mr = parse_mr(&key, ontology)
                    .map_err(|source| CorpusError::OntologyMismatch { path: path.to_path_buf(), row, source })?;
                index.insert(key, items.len());
                items.push(CorpusItem { row: row as usize, mr, references: Vec::new(), split });
                items.len() - 1
            }
        };
        if !reference.trim().is_empty() {
            items[slot].references.push(reference);
        }
    }
    if split == Split::Train {
        if let Some(item) = items.iter().find(|i| i.references.is_empty()) {
            return Err(CorpusError::Parse {
                path: path.to_path_buf(),
                row: item.row as u64,
                message: "training item without a reference".into(),
            });
        }
    }
    Ok(items)
}

/// Loads a canonical corpus file, validating every MR against the
/// ontology. `row` on each item is the line of its first occurrence.
pub fn load_corpus(path: &Path, ontology: &Ontology, split: Split) -> Result<Vec<CorpusItem>, CorpusError> {
    group(path, read_pairs(path)?, ontology, split)
}

/// Writes items in canonical form: one row per reference, MRs printed
/// canonically. Items without references get one row with an empty `ref`.
pub fn save_corpus(path: &Path, items: &[CorpusItem]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["mr", "ref"]).map_err(|e| csv_error(path, e))?;
    for item in items {
        let mr = item.mr.to_string();
        if item.references.is_empty() {
            w.write_record([mr.as_str(), ""]).map_err(|e| csv_error(path, e))?;
        }
        for r in &item.references {
            w.write_record([mr.as_str(), r.as_str()]).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(io)
}

/// Dialogue-act histogram in act name order.
pub fn da_histogram(items: &[CorpusItem]) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for i in items {
        *h.entry(i.mr.dialogue_act.clone()).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportFormat {
    /// CSV with `mr` and `ref` columns and MRs already in `da(slot[value])`
    /// form.
    Viggo,
    /// JSON array of `[mr, ref, ...]` rows with `da(slot=value;slot='value')`
    /// MRs.
    Rnnlg,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportSummary {
    pub rows: usize,
    pub items: usize,
    /// Rows dropped because their act is not in the ontology, per act.
    pub skipped: BTreeMap<String, usize>,
}

/// Converts an RNNLG MR such as `?inform(name='x';type=laptop;memory)` to
/// `inform(name[x], type[laptop], memory[])`. Repeated slots (as in
/// `compare`) are numbered `name_2`, `name_3`, ...
pub fn convert_rnnlg_mr(raw: &str) -> Result<String, String> {
    let raw = raw.trim().trim_start_matches('?');
    let open = raw.find('(').ok_or("missing `(`")?;
    let body = raw[open + 1..].strip_suffix(')').ok_or("missing closing `)`")?;
    let da = raw[..open].trim();
    if da.is_empty() {
        return Err("missing dialogue act".into());
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut parts = Vec::new();
    for pair in split_rnnlg(body) {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (slot, value) = match pair.split_once('=') {
            Some((s, v)) => (s.trim(), v.trim().trim_matches(|c| c == '\'' || c == '"')),
            None => (pair, ""),
        };
        let n = seen.entry(slot.to_string()).or_insert(0);
        *n += 1;
        let slot = if *n == 1 { slot.to_string() } else { format!("{slot}_{n}") };
        let value = value.replace('\\', "\\\\").replace(']', "\\]");
        parts.push(format!("{slot}[{value}]"));
    }
    Ok(format!("{da}({})", parts.join(", ")))
}

/// Splits on `;` outside single quotes.
fn split_rnnlg(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut start, mut quoted) = (0, false);
    for (i, c) in body.char_indices() {
        match c {
            '\'' => quoted = !quoted,
            ';' if !quoted => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&body[start..]);
    out
}

/// Reads a released corpus file and returns items in canonical form.
/// Act names are folded through the ontology's aliases; rows whose act the
/// ontology does not know are skipped and counted.
pub fn import_corpus(
    path: &Path,
    format: ImportFormat,
    ontology: &Ontology,
    split: Split,
) -> Result<(Vec<CorpusItem>, ImportSummary), CorpusError> {
    let pairs: Vec<(u64, String, String)> = match format {
        ImportFormat::Viggo => read_pairs(path)?,
        ImportFormat::Rnnlg => read_rnnlg(path)?,
    };
    let mut summary = ImportSummary { rows: pairs.len(), ..Default::default() };
    let mut kept = Vec::new();
    for (row, mr, reference) in pairs {
        let mr = mr.trim();
        let da_end = mr.find('(').unwrap_or(mr.len());
        let da = mr[..da_end].trim();
        let canonical = ontology.canonical_da(da);
        if !ontology.has_dialogue_act(canonical) {
            *summary.skipped.entry(da.to_string()).or_insert(0) += 1;
            continue;
        }
        kept.push((row, format!("{canonical}{}", &mr[da_end..]), reference));
    }
    let items = group(path, kept, ontology, split)?;
    summary.items = items.len();
    Ok((items, summary))
}

fn read_rnnlg(path: &Path) -> Result<Vec<(u64, String, String)>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    // Released files open with `#` comment lines.
    let body: String = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n");
    let rows: Vec<Vec<String>> = serde_json::from_str(&body).map_err(|e| CorpusError::Parse {
        path: path.to_path_buf(),
        row: e.line() as u64,
        message: e.to_string(),
    })?;
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| {
            let row_no = i as u64 + 1;
            let parse = |message: String| CorpusError::Parse { path: path.to_path_buf(), row: row_no, message };
            let (mr, reference) = match row.as_slice() {
                [mr, reference, ..] => (mr, reference),
                _ => return Err(parse("expected [mr, ref, ...]".into())),
            };
            Ok((row_no, convert_rnnlg_mr(mr).map_err(parse)?, reference.clone()))
        })
        .collect()
}

/// Exemplar pool for prompting: every reference of every item.
pub fn exemplar_pool(items: &[CorpusItem]) -> Vec<darank_core::Exemplar> {
    items.iter().flat_map(CorpusItem::exemplars).collect()
}
