//! Filing text measures: category word counts, readability, sentence-level
//! polarity, and the aggregation of externally supplied sentence sentiment
//! labels.

mod io;
mod measures;

pub use io::{load_documents, load_lexicon, load_sentence_labels};
pub use measures::{
    finbert_aggregate, gunning_fog, lexicon_counts, mean_sentence_polarity, LexiconCounts,
    POLARITY_SQUASH_ALPHA,
};

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// A tokenized document: ordered sentences of lower-cased words with
/// punctuation stripped.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub firm_id: String,
    pub year: i32,
    pub sentences: Vec<Vec<String>>,
    pub total_words: usize,
}

impl Document {
    /// Tokenizes raw text. Sentences break on `.`, `?`, or `!` followed by
    /// whitespace and an uppercase letter, unless the word before the period
    /// is a known abbreviation; words are maximal alphanumeric runs,
    /// lower-cased.
    pub fn tokenize(
        firm_id: &str,
        year: i32,
        text: &str,
        abbreviations: &BTreeSet<String>,
    ) -> Result<Document> {
        let chars: Vec<char> = text.chars().collect();
        let mut sentence_texts: Vec<String> = Vec::new();
        let mut current = String::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            current.push(c);
            if c == '.' || c == '?' || c == '!' {
                // look ahead: whitespace then uppercase starts a new sentence
                let mut j = i + 1;
                let mut saw_space = false;
                while j < chars.len() && chars[j].is_whitespace() {
                    saw_space = true;
                    j += 1;
                }
                let next_upper = j < chars.len() && chars[j].is_uppercase();
                let prev_word: String = current
                    .trim_end_matches(['.', '?', '!'])
                    .rsplit(|ch: char| !ch.is_alphanumeric())
                    .next()
                    .unwrap_or("")
                    .to_lowercase();
                let is_abbrev = c == '.' && abbreviations.contains(&prev_word);
                if saw_space && next_upper && !is_abbrev {
                    sentence_texts.push(std::mem::take(&mut current));
                }
            }
            i += 1;
        }
        if !current.trim().is_empty() {
            sentence_texts.push(current);
        }

        let sentences: Vec<Vec<String>> = sentence_texts
            .iter()
            .map(|s| {
                s.split(|ch: char| !ch.is_alphanumeric())
                    .filter(|w| !w.is_empty())
                    .map(|w| w.to_lowercase())
                    .collect::<Vec<String>>()
            })
            .filter(|words: &Vec<String>| !words.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(Error::Data(format!(
                "document ({firm_id}, {year}) has no sentences"
            )));
        }
        let total_words = sentences.iter().map(Vec::len).sum();
        Ok(Document {
            firm_id: firm_id.to_string(),
            year,
            sentences,
            total_words,
        })
    }
}

/// Word-category identifiers for the four count measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LexCategory {
    Positive,
    Negative,
    Uncertainty,
    Litigious,
}

impl LexCategory {
    pub const ALL: [LexCategory; 4] = [
        LexCategory::Positive,
        LexCategory::Negative,
        LexCategory::Uncertainty,
        LexCategory::Litigious,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LexCategory::Positive => "positive",
            LexCategory::Negative => "negative",
            LexCategory::Uncertainty => "uncertainty",
            LexCategory::Litigious => "litigious",
        }
    }
}

/// Word lists and polarity rules. Category sets may overlap.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
    pub uncertainty: BTreeSet<String>,
    pub litigious: BTreeSet<String>,
    /// Word valence in [-1, 1].
    pub polarity: HashMap<String, f64>,
    pub negators: BTreeSet<String>,
    /// Word -> multiplier applied to valenced words in scope.
    pub boosters: HashMap<String, f64>,
}

impl Lexicon {
    pub fn category(&self, cat: LexCategory) -> &BTreeSet<String> {
        match cat {
            LexCategory::Positive => &self.positive,
            LexCategory::Negative => &self.negative,
            LexCategory::Uncertainty => &self.uncertainty,
            LexCategory::Litigious => &self.litigious,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (word, &v) in &self.polarity {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Data(format!(
                    "valence of `{word}` is {v}, outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Tiny built-in lexicon for tests and the bundled pipeline.
    pub fn builtin_test() -> Lexicon {
        let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect::<BTreeSet<_>>();
        Lexicon {
            positive: set(&["good", "strong", "gain", "improve", "profit", "growth"]),
            negative: set(&["bad", "weak", "loss", "decline", "impairment", "default"]),
            uncertainty: set(&["uncertain", "may", "approximate", "risk", "possibly"]),
            litigious: set(&["lawsuit", "litigation", "plaintiff", "defendant", "courts"]),
            polarity: [
                ("good", 0.6),
                ("strong", 0.5),
                ("gain", 0.5),
                ("improve", 0.4),
                ("bad", -0.6),
                ("weak", -0.4),
                ("loss", -0.5),
                ("decline", -0.4),
            ]
            .into_iter()
            .map(|(w, v)| (w.to_string(), v))
            .collect(),
            negators: set(&["not", "no", "never", "without"]),
            boosters: [("very", 1.5), ("extremely", 2.0), ("slightly", 0.5)]
                .into_iter()
                .map(|(w, v)| (w.to_string(), v))
                .collect(),
        }
    }
}

/// Sentence-level sentiment label from an external classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl std::str::FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Sentiment> {
        match s {
            "positive" => Ok(Sentiment::Positive),
            "negative" => Ok(Sentiment::Negative),
            "neutral" => Ok(Sentiment::Neutral),
            other => Err(Error::Data(format!("unknown sentiment label `{other}`"))),
        }
    }
}

/// Sentence labels for one document; every sentence gets exactly one label.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceLabels {
    pub firm_id: String,
    pub year: i32,
    pub labels: Vec<Sentiment>,
}

impl SentenceLabels {
    /// Checks the labels line up with the paired document.
    pub fn check_pairing(&self, doc: &Document) -> Result<()> {
        if self.firm_id != doc.firm_id || self.year != doc.year {
            return Err(Error::Data(format!(
                "labels ({}, {}) paired with document ({}, {})",
                self.firm_id, self.year, doc.firm_id, doc.year
            )));
        }
        if self.labels.len() != doc.sentences.len() {
            return Err(Error::Data(format!(
                "({}, {}): {} labels for {} sentences",
                self.firm_id,
                self.year,
                self.labels.len(),
                doc.sentences.len()
            )));
        }
        Ok(())
    }
}
