use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{LexicalError, Result};

/// An immutable vocabulary of word vectors.
#[derive(Debug, Clone)]
pub struct WordVectorTable {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<Vec<f64>>,
    norms: Vec<f64>,
    index: HashMap<String, usize>,
}

impl WordVectorTable {
    /// Load a GloVe-style text file (`word v1 v2 ... vd` per line).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| LexicalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(BufReader::new(file)).map_err(|e| match e {
            LexicalError::Io { source, .. } => LexicalError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = Self::empty(0);
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|source| LexicalError::Io {
                path: Default::default(),
                source,
            })?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else {
                continue;
            };
            let mut vector = Vec::with_capacity(table.dim);
            for token in parts {
                let v: f64 = token.parse().map_err(|_| LexicalError::BadFloat {
                    line: lineno,
                    token: token.to_string(),
                })?;
                vector.push(v);
            }
            if vector.is_empty() {
                return Err(LexicalError::MissingVector {
                    line: lineno,
                    word: word.to_string(),
                });
            }
            if table.words.is_empty() {
                table.dim = vector.len();
            } else if vector.len() != table.dim {
                return Err(LexicalError::DimensionMismatch {
                    line: lineno,
                    expected: table.dim,
                    found: vector.len(),
                });
            }
            table.insert(word, vector, lineno)?;
        }
        if table.words.is_empty() {
            return Err(LexicalError::EmptyFile);
        }
        Ok(table)
    }

    /// Build a table from in-memory entries. The first occurrence of a
    /// duplicated word wins.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::empty(0);
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            let word = word.into();
            if table.words.is_empty() {
                table.dim = vector.len();
            }
            if vector.is_empty() {
                return Err(LexicalError::MissingVector { line: i + 1, word });
            }
            if vector.len() != table.dim {
                return Err(LexicalError::DimensionMismatch {
                    line: i + 1,
                    expected: table.dim,
                    found: vector.len(),
                });
            }
            table.insert(&word, vector, i + 1)?;
        }
        if table.words.is_empty() {
            return Err(LexicalError::EmptyFile);
        }
        Ok(table)
    }

    fn empty(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, word: &str, vector: Vec<f64>, line: usize) -> Result<()> {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(LexicalError::InvalidWord(word.to_string()));
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(LexicalError::ZeroVector {
                line,
                word: word.to_string(),
            });
        }
        if self.index.contains_key(word) {
            return Ok(());
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.vectors.push(vector);
        self.norms.push(norm);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    /// Words in load order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// The `k` words most cosine-similar to `word`, excluding `word` itself.
    /// Ties are broken by ascending lexicographic order.
    pub fn nearest_words(&self, word: &str, k: usize) -> Result<Vec<String>> {
        let &qi = self
            .index
            .get(word)
            .ok_or_else(|| LexicalError::UnknownWord(word.to_string()))?;
        let query = &self.vectors[qi];
        let qn = self.norms[qi];
        let mut scored: Vec<(f64, usize)> = (0..self.words.len())
            .filter(|&i| i != qi)
            .map(|i| {
                let dot: f64 = query.iter().zip(&self.vectors[i]).map(|(a, b)| a * b).sum();
                (dot / (qn * self.norms[i]), i)
            })
            .collect();
        scored.sort_by(|a, b| match b.0.total_cmp(&a.0) {
            Ordering::Equal => self.words[a.1].cmp(&self.words[b.1]),
            o => o,
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(_, i)| self.words[i].clone())
            .collect())
    }
}
