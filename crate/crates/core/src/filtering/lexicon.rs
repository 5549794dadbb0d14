//! Tokenization and the alias / relation-trigger lexicons.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::types::RelationLabel;

const DEFAULT_SYNONYMS: &str = include_str!("../../data/synonyms.json");
const DEFAULT_RELATION_LEXICON: &str = include_str!("../../data/relation_lexicon.json");
const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown relation label `{0}` in relation lexicon")]
    UnknownRelation(String),
    #[error("relation `{0}` has no trigger phrases")]
    MissingRelation(&'static str),
    #[error("empty alias for `{0}`")]
    EmptyAlias(String),
}

/// Lowercase, split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Start positions where `needle` occurs as a contiguous token run in `haystack`.
pub fn find_phrase(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn content_tokens<'a>(&self, tokens: &'a [String]) -> Vec<&'a str> {
        tokens
            .iter()
            .map(String::as_str)
            .filter(|t| !self.contains(t))
            .collect()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

/// Canonical class label -> aliases. The canonical label is always an alias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(text)?;
        let mut entries = BTreeMap::new();
        for (label, aliases) in raw {
            let canonical = label.trim().to_lowercase();
            let mut list = vec![canonical.clone()];
            for alias in aliases {
                let alias = alias.trim().to_lowercase();
                if alias.is_empty() {
                    return Err(LexiconError::EmptyAlias(canonical));
                }
                if !list.contains(&alias) {
                    list.push(alias);
                }
            }
            entries.insert(canonical, list);
        }
        Ok(Self { entries })
    }

    /// Aliases of `class_label`, itself included (also for unknown labels).
    pub fn aliases(&self, class_label: &str) -> Vec<String> {
        self.entries
            .get(class_label)
            .cloned()
            .unwrap_or_else(|| vec![class_label.to_string()])
    }
}

impl Default for SynonymLexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_SYNONYMS).expect("bundled synonym lexicon is valid")
    }
}

/// Relation label -> trigger phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationLexicon {
    triggers: BTreeMap<RelationLabel, Vec<String>>,
}

impl RelationLexicon {
    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(text)?;
        let mut triggers = BTreeMap::new();
        for (label, phrases) in raw {
            let rel = RelationLabel::parse(label.trim())
                .ok_or_else(|| LexiconError::UnknownRelation(label.clone()))?;
            let phrases: Vec<String> = phrases
                .into_iter()
                .map(|p| p.trim().to_lowercase())
                .filter(|p| !p.is_empty())
                .collect();
            triggers.insert(rel, phrases);
        }
        for label in RelationLabel::ALL {
            if triggers.get(&label).is_none_or(|p| p.is_empty()) {
                return Err(LexiconError::MissingRelation(label.as_str()));
            }
        }
        Ok(Self { triggers })
    }

    pub fn triggers(&self, label: RelationLabel) -> &[String] {
        self.triggers.get(&label).map_or(&[], Vec::as_slice)
    }
}

impl Default for RelationLexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_RELATION_LEXICON).expect("bundled relation lexicon is valid")
    }
}
