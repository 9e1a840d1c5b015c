//! Text inputs: document directories, sentence-label files, lexicon files.

use std::collections::BTreeSet;
use std::path::Path;

use super::{Document, Lexicon, SentenceLabels, Sentiment};
use crate::error::{Error, Result};

/// Loads documents from a `<firm>/<year>.txt` directory layout, sorted by
/// (firm, year).
pub fn load_documents(dir: &Path, abbreviations: &BTreeSet<String>) -> Result<Vec<Document>> {
    if !dir.is_dir() {
        return Err(Error::Data(format!("{} is not a directory", dir.display())));
    }
    let mut docs = Vec::new();
    let mut firm_dirs: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .collect();
    firm_dirs.sort_by_key(|e| e.file_name());
    for firm_dir in firm_dirs {
        let firm_id = firm_dir.file_name().to_string_lossy().to_string();
        let mut files: Vec<_> = std::fs::read_dir(firm_dir.path())?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|e| e.path().extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort_by_key(|e| e.file_name());
        for file in files {
            let stem = file.path().file_stem().unwrap().to_string_lossy().to_string();
            let year: i32 = stem.parse().map_err(|_| {
                Error::Data(format!("document file {} is not <year>.txt", file.path().display()))
            })?;
            let text = std::fs::read_to_string(file.path())?;
            docs.push(Document::tokenize(&firm_id, year, &text, abbreviations)?);
        }
    }
    Ok(docs)
}

/// Loads sentence labels from delimited text with columns
/// `firm_id,year,sentence_index,label`. Indices must be 0-based and
/// contiguous per document.
pub fn load_sentence_labels(path: &Path) -> Result<Vec<SentenceLabels>> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let headers = reader.headers()?.clone();
    let expect = ["firm_id", "year", "sentence_index", "label"];
    for name in expect {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::Data(format!(
                "{}: header lacks column `{name}`",
                path.display()
            )));
        }
    }
    let idx = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (fi, yi, si, li) = (idx("firm_id"), idx("year"), idx("sentence_index"), idx("label"));

    let mut rows: Vec<(String, i32, usize, Sentiment)> = Vec::new();
    for row in reader.records() {
        let row = row?;
        rows.push((
            row[fi].to_string(),
            row[yi]
                .parse()
                .map_err(|_| Error::Data(format!("bad year `{}`", &row[yi])))?,
            row[si]
                .parse()
                .map_err(|_| Error::Data(format!("bad sentence index `{}`", &row[si])))?,
            row[li].parse()?,
        ));
    }
    rows.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));

    let mut out: Vec<SentenceLabels> = Vec::new();
    for (firm_id, year, index, label) in rows {
        let need_new = out
            .last()
            .map(|l| l.firm_id != firm_id || l.year != year)
            .unwrap_or(true);
        if need_new {
            out.push(SentenceLabels {
                firm_id: firm_id.clone(),
                year,
                labels: Vec::new(),
            });
        }
        let current = out.last_mut().unwrap();
        if index != current.labels.len() {
            return Err(Error::Data(format!(
                "({firm_id}, {year}): sentence index {index} out of order (expected {})",
                current.labels.len()
            )));
        }
        current.labels.push(label);
    }
    Ok(out)
}

/// Loads a lexicon from two-column delimited text `word,tag`. Tags are the
/// four category names, `negator`, `valence=<v>` for polarity words, or
/// `booster=<multiplier>`.
pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut lex = Lexicon::default();
    for row in reader.records() {
        let row = row?;
        if row.len() != 2 {
            return Err(Error::Data(format!(
                "{}: lexicon rows need exactly two columns",
                path.display()
            )));
        }
        let word = row[0].to_lowercase();
        let tag = row[1].trim();
        match tag {
            "positive" => {
                lex.positive.insert(word);
            }
            "negative" => {
                lex.negative.insert(word);
            }
            "uncertainty" => {
                lex.uncertainty.insert(word);
            }
            "litigious" => {
                lex.litigious.insert(word);
            }
            "negator" => {
                lex.negators.insert(word);
            }
            other => {
                if let Some(v) = other.strip_prefix("valence=") {
                    let value: f64 = v
                        .parse()
                        .map_err(|_| Error::Data(format!("bad valence `{v}` for `{word}`")))?;
                    lex.polarity.insert(word, value);
                } else if let Some(m) = other.strip_prefix("booster=") {
                    let value: f64 = m
                        .parse()
                        .map_err(|_| Error::Data(format!("bad booster `{m}` for `{word}`")))?;
                    lex.boosters.insert(word, value);
                } else {
                    return Err(Error::Data(format!(
                        "{}: unknown lexicon tag `{other}`",
                        path.display()
                    )));
                }
            }
        }
    }
    lex.validate()?;
    Ok(lex)
}
