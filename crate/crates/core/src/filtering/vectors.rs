//! Word embedding table in the plain-text `token v1 ... vd` format.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: bad component {text:?}")]
    Number { line: usize, text: String },
    #[error("line {line}: zero-norm vector for {token:?}")]
    ZeroNorm { line: usize, token: String },
}

#[derive(Debug, Clone, Default)]
pub struct WordVectorTable {
    dim: usize,
    /// Unit-normalized vectors.
    vectors: HashMap<String, Vec<f32>>,
}

impl WordVectorTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parse the text format. A leading `count dim` header line is skipped.
    pub fn parse(text: &str) -> Result<Self, VectorError> {
        let mut table = Self::default();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if i == 0
                && rest.len() == 1
                && token.parse::<u64>().is_ok()
                && rest[0].parse::<u64>().is_ok()
            {
                continue;
            }
            let mut v = Vec::with_capacity(rest.len());
            for text in &rest {
                let x: f32 = text.parse().map_err(|_| VectorError::Number {
                    line: i + 1,
                    text: text.to_string(),
                })?;
                if !x.is_finite() {
                    return Err(VectorError::Number {
                        line: i + 1,
                        text: text.to_string(),
                    });
                }
                v.push(x);
            }
            if table.dim == 0 {
                table.dim = v.len();
            }
            if v.len() != table.dim || v.is_empty() {
                return Err(VectorError::Dimension {
                    line: i + 1,
                    expected: table.dim,
                    found: v.len(),
                });
            }
            table.insert_at(token, v, i + 1)?;
        }
        Ok(table)
    }

    fn insert_at(&mut self, token: &str, mut v: Vec<f32>, line: usize) -> Result<(), VectorError> {
        let norm = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(VectorError::ZeroNorm {
                line,
                token: token.to_string(),
            });
        }
        for x in &mut v {
            *x = (*x as f64 / norm) as f32;
        }
        self.vectors.insert(token.to_lowercase(), v);
        Ok(())
    }

    pub fn insert(&mut self, token: &str, v: Vec<f32>) -> Result<(), VectorError> {
        if self.dim == 0 {
            self.dim = v.len();
        }
        if v.len() != self.dim {
            return Err(VectorError::Dimension {
                line: 0,
                expected: self.dim,
                found: v.len(),
            });
        }
        self.insert_at(token, v, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Cosine similarity, `None` if either token is missing.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let va = self.vectors.get(a)?;
        let vb = self.vectors.get(b)?;
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| *x as f64 * *y as f64).sum();
        // Unit vectors are stored in f32; rounding can push the dot past 1.
        Some(dot.clamp(-1.0, 1.0))
    }

    /// Highest cosine over all pairs, `None` if no pair is covered.
    pub fn max_cosine<'a>(
        &self,
        left: impl IntoIterator<Item = &'a str>,
        right: &[&str],
    ) -> Option<f64> {
        left.into_iter()
            .flat_map(|l| right.iter().filter_map(move |r| self.cosine(l, r)))
            .reduce(f64::max)
    }
}
