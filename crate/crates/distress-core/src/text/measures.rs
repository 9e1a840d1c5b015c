//! The seven text measures.

use super::{Document, LexCategory, Lexicon, SentenceLabels, Sentiment};
use crate::error::{Error, Result};

/// Squash constant for sentence polarity: raw / sqrt(raw^2 + alpha).
pub const POLARITY_SQUASH_ALPHA: f64 = 15.0;

/// How many tokens back a negator or booster reaches.
const MODIFIER_WINDOW: usize = 3;

/// Word-count scores per 1,000 words for the four lexicon categories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexiconCounts {
    pub positive: f64,
    pub negative: f64,
    pub uncertainty: f64,
    pub litigious: f64,
}

impl LexiconCounts {
    pub fn get(&self, cat: LexCategory) -> f64 {
        match cat {
            LexCategory::Positive => self.positive,
            LexCategory::Negative => self.negative,
            LexCategory::Uncertainty => self.uncertainty,
            LexCategory::Litigious => self.litigious,
        }
    }
}

/// Counts matching tokens per category, normalized by total words and scaled
/// by 1,000.
pub fn lexicon_counts(doc: &Document, lex: &Lexicon) -> Result<LexiconCounts> {
    if doc.total_words == 0 {
        return Err(Error::Data(format!(
            "document ({}, {}) has no words",
            doc.firm_id, doc.year
        )));
    }
    let mut counts = [0usize; 4];
    for sentence in &doc.sentences {
        for word in sentence {
            for (slot, cat) in LexCategory::ALL.iter().enumerate() {
                if lex.category(*cat).contains(word) {
                    counts[slot] += 1;
                }
            }
        }
    }
    for cat in LexCategory::ALL {
        if lex.category(cat).is_empty() {
            log::warn!("lexicon category `{}` is empty; score is 0", cat.as_str());
        }
    }
    let scale = 1000.0 / doc.total_words as f64;
    Ok(LexiconCounts {
        positive: counts[0] as f64 * scale,
        negative: counts[1] as f64 * scale,
        uncertainty: counts[2] as f64 * scale,
        litigious: counts[3] as f64 * scale,
    })
}

/// Syllable count by vowel groups: maximal runs of `aeiouy`, with a trailing
/// silent `e` stripped first (words longer than two letters), floor of one.
pub(crate) fn syllables(word: &str) -> usize {
    let w = if word.len() > 2 && word.ends_with('e') {
        &word[..word.len() - 1]
    } else {
        word
    };
    let mut count = 0;
    let mut in_group = false;
    for c in w.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            count += 1;
        }
        in_group = vowel;
    }
    count.max(1)
}

/// Gunning-Fog readability: 0.4 * (words per sentence + 100 * complex word
/// share), where complex means three or more syllables.
pub fn gunning_fog(doc: &Document) -> Result<f64> {
    if doc.total_words == 0 || doc.sentences.is_empty() {
        return Err(Error::Data(format!(
            "document ({}, {}) is empty",
            doc.firm_id, doc.year
        )));
    }
    let words = doc.total_words as f64;
    let complex = doc
        .sentences
        .iter()
        .flatten()
        .filter(|w| syllables(w) >= 3)
        .count() as f64;
    Ok(0.4 * (words / doc.sentences.len() as f64 + 100.0 * complex / words))
}

/// Mean sentence polarity in [-1, 1].
///
/// Per sentence, each valenced token contributes its valence multiplied by
/// any booster multipliers and flipped once per negator in the three tokens
/// before it; the sentence sum is squashed by x / sqrt(x^2 + alpha) and the
/// document score is the mean over sentences.
pub fn mean_sentence_polarity(doc: &Document, lex: &Lexicon) -> Result<f64> {
    if doc.sentences.is_empty() {
        return Err(Error::Data(format!(
            "document ({}, {}) has no sentences",
            doc.firm_id, doc.year
        )));
    }
    let mut total = 0.0;
    for sentence in &doc.sentences {
        let mut raw = 0.0;
        for (i, word) in sentence.iter().enumerate() {
            let Some(&valence) = lex.polarity.get(word) else {
                continue;
            };
            let window_start = i.saturating_sub(MODIFIER_WINDOW);
            let mut adjusted = valence;
            for prior in &sentence[window_start..i] {
                if lex.negators.contains(prior) {
                    adjusted = -adjusted;
                }
                if let Some(&mult) = lex.boosters.get(prior) {
                    adjusted *= mult;
                }
            }
            raw += adjusted;
        }
        total += raw / (raw * raw + POLARITY_SQUASH_ALPHA).sqrt();
    }
    Ok(total / doc.sentences.len() as f64)
}

/// Document sentiment from sentence labels:
/// (positive - negative) / total sentences.
pub fn finbert_aggregate(labels: &SentenceLabels) -> Result<f64> {
    if labels.labels.is_empty() {
        return Err(Error::Data(format!(
            "({}, {}): no sentence labels",
            labels.firm_id, labels.year
        )));
    }
    let pos = labels
        .labels
        .iter()
        .filter(|l| **l == Sentiment::Positive)
        .count() as f64;
    let neg = labels
        .labels
        .iter()
        .filter(|l| **l == Sentiment::Negative)
        .count() as f64;
    Ok((pos - neg) / labels.labels.len() as f64)
}
