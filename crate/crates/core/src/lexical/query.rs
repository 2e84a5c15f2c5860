use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use sha2::{Digest, Sha256};

use super::tokenize::{detokenize, tokenize, tokenize_spans};
use super::{LexicalError, Result, WordVectorTable};
use crate::rng;

pub const DEFAULT_PREFIX: &str = "Complete the following code: ";

const FORMAT_VERSION: u32 = 1;

/// Parameters of query-set construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    /// Base queries.
    pub n: usize,
    /// Perturbed queries per base query.
    pub m: usize,
    /// Words replaced per perturbation.
    pub r: usize,
    /// Candidate neighbourhood size.
    pub k: usize,
    pub words_per_snippet: usize,
    pub prefix: String,
    pub seed: u64,
}

impl Default for QuerySpec {
    fn default() -> Self {
        Self {
            n: 2,
            m: 4,
            r: 3,
            k: 10,
            words_per_snippet: 20,
            prefix: DEFAULT_PREFIX.to_string(),
            seed: 0,
        }
    }
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n", self.n),
            ("m", self.m),
            ("r", self.r),
            ("k", self.k),
            ("words_per_snippet", self.words_per_snippet),
        ] {
            if v == 0 {
                return Err(LexicalError::InvalidSpec(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Total number of distinct queries, `n * (m + 1)`.
    pub fn total_queries(&self) -> usize {
        self.n * (self.m + 1)
    }
}

/// Identifies one query: a base query (`variant == None`) or its `j`-th
/// perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryId {
    pub base: usize,
    pub variant: Option<usize>,
}

impl QueryId {
    pub fn base(i: usize) -> Self {
        Self { base: i, variant: None }
    }

    pub fn perturbed(i: usize, j: usize) -> Self {
        Self { base: i, variant: Some(j) }
    }

    /// Position in the flat layout `[x_0, x'_0_0 .. x'_0_m-1, x_1, ...]`.
    pub fn flat(&self, m: usize) -> usize {
        self.base * (m + 1) + self.variant.map_or(0, |j| j + 1)
    }
}

/// Base queries, their perturbations and a digest over all query strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySet {
    pub spec: QuerySpec,
    pub base: Vec<String>,
    pub perturbed: Vec<Vec<String>>,
    pub content_hash: String,
}

impl QuerySet {
    /// Assemble a query set from its strings. Shapes must match `spec`.
    pub fn from_parts(spec: QuerySpec, base: Vec<String>, perturbed: Vec<Vec<String>>) -> Result<Self> {
        spec.validate()?;
        if base.len() != spec.n || perturbed.len() != spec.n {
            return Err(LexicalError::InvalidSpec(format!(
                "expected {} base queries, got {} base / {} perturbed groups",
                spec.n,
                base.len(),
                perturbed.len()
            )));
        }
        if let Some(bad) = perturbed.iter().position(|g| g.len() != spec.m) {
            return Err(LexicalError::InvalidSpec(format!(
                "base query {bad} has {} perturbations, expected {}",
                perturbed[bad].len(),
                spec.m
            )));
        }
        let content_hash = content_hash(&base, &perturbed);
        Ok(Self {
            spec,
            base,
            perturbed,
            content_hash,
        })
    }

    pub fn total(&self) -> usize {
        self.base.len() + self.perturbed.iter().map(Vec::len).sum::<usize>()
    }

    /// Query ids in flat order (see [`QueryId::flat`]).
    pub fn ids(&self) -> Vec<QueryId> {
        let mut ids = Vec::with_capacity(self.total());
        for i in 0..self.base.len() {
            ids.push(QueryId::base(i));
            ids.extend((0..self.perturbed[i].len()).map(|j| QueryId::perturbed(i, j)));
        }
        ids
    }

    pub fn text(&self, id: QueryId) -> &str {
        match id.variant {
            None => &self.base[id.base],
            Some(j) => &self.perturbed[id.base][j],
        }
    }

    /// Serialize to the line-oriented text document.
    pub fn to_text(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serializes");
        let s = &self.spec;
        let mut out = String::from("# gradprint query set\n");
        let _ = writeln!(out, "version = {FORMAT_VERSION}");
        let _ = writeln!(out, "n = {}", s.n);
        let _ = writeln!(out, "m = {}", s.m);
        let _ = writeln!(out, "r = {}", s.r);
        let _ = writeln!(out, "k = {}", s.k);
        let _ = writeln!(out, "words_per_snippet = {}", s.words_per_snippet);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "prefix = {}", q(&s.prefix));
        let _ = writeln!(out, "content_hash = {}", self.content_hash);
        for (i, b) in self.base.iter().enumerate() {
            let _ = writeln!(out, "base[{i}] = {}", q(b));
        }
        for (i, group) in self.perturbed.iter().enumerate() {
            for (j, p) in group.iter().enumerate() {
                let _ = writeln!(out, "perturbed[{i}][{j}] = {}", q(p));
            }
        }
        out
    }

    /// Parse a document produced by [`QuerySet::to_text`]. The stored digest
    /// must match the recomputed one.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = QuerySpec::default();
        let mut stored_hash = None;
        let mut base: Vec<(usize, String)> = Vec::new();
        let mut pert: Vec<(usize, usize, String)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| LexicalError::Format { line, msg };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = raw
                .split_once(" = ")
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let int = |v: &str| -> Result<usize> {
                v.trim().parse().map_err(|_| err(format!("bad integer `{v}`")))
            };
            let string = |v: &str| -> Result<String> {
                serde_json::from_str(v).map_err(|e| err(format!("bad string literal: {e}")))
            };
            match key.trim() {
                "version" => {
                    let v = int(value)?;
                    if v != FORMAT_VERSION as usize {
                        return Err(err(format!("unsupported version {v}")));
                    }
                }
                "n" => spec.n = int(value)?,
                "m" => spec.m = int(value)?,
                "r" => spec.r = int(value)?,
                "k" => spec.k = int(value)?,
                "words_per_snippet" => spec.words_per_snippet = int(value)?,
                "seed" => {
                    spec.seed = value
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad seed `{value}`")))?
                }
                "prefix" => spec.prefix = string(value)?,
                "content_hash" => stored_hash = Some(value.trim().to_string()),
                k if k.starts_with("base[") => {
                    let idx = parse_indices(k, "base")
                        .filter(|v| v.len() == 1)
                        .ok_or_else(|| err(format!("bad key `{k}`")))?;
                    base.push((idx[0], string(value)?));
                }
                k if k.starts_with("perturbed[") => {
                    let idx = parse_indices(k, "perturbed")
                        .filter(|v| v.len() == 2)
                        .ok_or_else(|| err(format!("bad key `{k}`")))?;
                    pert.push((idx[0], idx[1], string(value)?));
                }
                k => return Err(err(format!("unknown key `{k}`"))),
            }
        }

        let shape_err = |msg: String| LexicalError::Format { line: 0, msg };
        let mut base_strs = vec![None; spec.n];
        for (i, s) in base {
            *base_strs
                .get_mut(i)
                .ok_or_else(|| shape_err(format!("base index {i} out of range")))? = Some(s);
        }
        let mut pert_strs = vec![vec![None; spec.m]; spec.n];
        for (i, j, s) in pert {
            *pert_strs
                .get_mut(i)
                .and_then(|g| g.get_mut(j))
                .ok_or_else(|| shape_err(format!("perturbed index [{i}][{j}] out of range")))? = Some(s);
        }
        let base: Vec<String> = base_strs
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| shape_err(format!("missing base[{i}]"))))
            .collect::<Result<_>>()?;
        let perturbed: Vec<Vec<String>> = pert_strs
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                g.into_iter()
                    .enumerate()
                    .map(|(j, s)| s.ok_or_else(|| shape_err(format!("missing perturbed[{i}][{j}]"))))
                    .collect()
            })
            .collect::<Result<_>>()?;

        let qs = Self::from_parts(spec, base, perturbed)?;
        match stored_hash {
            Some(h) if h == qs.content_hash => Ok(qs),
            Some(h) => Err(shape_err(format!(
                "content_hash mismatch: stored {h}, computed {}",
                qs.content_hash
            ))),
            None => Err(shape_err("missing content_hash".into())),
        }
    }
}

fn parse_indices(key: &str, name: &str) -> Option<Vec<usize>> {
    let rest = key.strip_prefix(name)?;
    let mut out = Vec::new();
    for part in rest.split_terminator(']') {
        out.push(part.strip_prefix('[')?.parse().ok()?);
    }
    rest.ends_with(']').then_some(out)
}

/// SHA-256 over every query string (length-prefixed), base queries first,
/// then perturbations in `(i, j)` order.
fn content_hash(base: &[String], perturbed: &[Vec<String>]) -> String {
    let mut h = Sha256::new();
    for s in base.iter().chain(perturbed.iter().flatten()) {
        h.update((s.len() as u64).to_le_bytes());
        h.update(s.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Escape a snippet for the one-snippet-per-line corpus format.
pub fn escape_snippet(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_snippet(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Parse a line-delimited corpus. Blank lines are skipped.
pub fn parse_corpus(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(unescape_snippet)
        .collect()
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LexicalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_corpus(&text))
}

/// Sample `n` distinct snippets, keep their first `words_per_snippet`
/// whitespace-delimited words and prepend the instruction prefix.
pub fn build_base_queries<S: AsRef<str>>(corpus: &[S], spec: &QuerySpec) -> Result<Vec<String>> {
    spec.validate()?;
    if corpus.len() < spec.n {
        return Err(LexicalError::CorpusTooSmall {
            have: corpus.len(),
            need: spec.n,
        });
    }
    let mut rng = rng::stream(spec.seed, "base-queries", &[]);
    let picks = index::sample(&mut rng, corpus.len(), spec.n);
    Ok(picks
        .into_iter()
        .map(|i| {
            let words: Vec<&str> = corpus[i]
                .as_ref()
                .split_whitespace()
                .take(spec.words_per_snippet)
                .collect();
            format!("{}{}", spec.prefix, words.join(" "))
        })
        .collect())
}

/// Replace up to `r` content words of `base` with near neighbours.
///
/// A token is replaceable when it is letters-only, at least two characters
/// long, present in the table after lowercasing, outside the instruction
/// prefix, and has at least one single-token neighbour distinct from itself.
pub fn perturb_query(
    base: &str,
    table: &WordVectorTable,
    spec: &QuerySpec,
    draw_index: u64,
) -> Result<String> {
    if base.trim().is_empty() {
        return Err(LexicalError::NothingToReplace {
            query: base.to_string(),
        });
    }
    let prefix_len = if base.starts_with(&spec.prefix) {
        spec.prefix.len()
    } else {
        0
    };
    let spans = tokenize_spans(base);
    let mut tokens: Vec<String> = spans.iter().map(|(_, t)| t.to_string()).collect();

    let mut replaceable: Vec<(usize, Vec<String>)> = Vec::new();
    for (pos, (start, tok)) in spans.iter().enumerate() {
        if *start < prefix_len || tok.chars().count() < 2 || !tok.chars().all(char::is_alphabetic) {
            continue;
        }
        let lower = tok.to_lowercase();
        if !table.contains(&lower) {
            continue;
        }
        let candidates: Vec<String> = table
            .nearest_words(&lower, spec.k)?
            .into_iter()
            .filter(|c| c != tok && tokenize(c).len() == 1)
            .collect();
        if !candidates.is_empty() {
            replaceable.push((pos, candidates));
        }
    }
    if replaceable.is_empty() {
        return Err(LexicalError::NothingToReplace {
            query: base.to_string(),
        });
    }

    let mut rng = rng::stream(spec.seed, "perturb", &[draw_index]);
    let count = spec.r.min(replaceable.len());
    let mut chosen = index::sample(&mut rng, replaceable.len(), count).into_vec();
    chosen.sort_unstable();
    for c in chosen {
        let (pos, candidates) = &replaceable[c];
        let pick = rng.random_range(0..candidates.len());
        tokens[*pos] = candidates[pick].clone();
    }
    Ok(detokenize(&tokens))
}

/// Build the full query set: `n` base queries and `m` perturbations each,
/// perturbation `(i, j)` drawn with index `i * m + j`.
pub fn build_query_set<S: AsRef<str>>(
    corpus: &[S],
    table: &WordVectorTable,
    spec: &QuerySpec,
) -> Result<QuerySet> {
    let base = build_base_queries(corpus, spec)?;
    let perturbed = base
        .iter()
        .enumerate()
        .map(|(i, b)| {
            (0..spec.m)
                .map(|j| perturb_query(b, table, spec, (i * spec.m + j) as u64))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    QuerySet::from_parts(spec.clone(), base, perturbed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> WordVectorTable {
        WordVectorTable::from_entries([
            ("fly", vec![1.0, 0.1, 0.0]),
            ("flies", vec![0.9, 0.2, 0.0]),
            ("soar", vec![0.8, 0.0, 0.3]),
            ("code", vec![0.0, 1.0, 0.0]),
            ("program", vec![0.1, 0.9, 0.1]),
        ])
        .unwrap()
    }

    #[test]
    fn truncates_and_prefixes() {
        let spec = QuerySpec {
            n: 1,
            words_per_snippet: 2,
            prefix: "P: ".into(),
            ..QuerySpec::default()
        };
        assert_eq!(build_base_queries(&["a b c d"], &spec).unwrap(), ["P: a b"]);
    }

    #[test]
    fn base_queries_deterministic() {
        let corpus = ["a", "b", "c", "d", "e"];
        let spec = QuerySpec { seed: 9, ..QuerySpec::default() };
        let a = build_base_queries(&corpus, &spec).unwrap();
        let b = build_base_queries(&corpus, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn corpus_too_small() {
        let spec = QuerySpec { n: 3, ..QuerySpec::default() };
        assert!(matches!(
            build_base_queries(&["x", "y"], &spec),
            Err(LexicalError::CorpusTooSmall { have: 2, need: 3 })
        ));
    }

    #[test]
    fn humaneval_style_query() {
        let spec = QuerySpec { n: 1, ..QuerySpec::default() };
        let q = build_base_queries(&["def will_it_fly(q,w):\n    '''Return True"], &spec).unwrap();
        assert!(q[0].starts_with("Complete the following code: def will_it_fly"));
    }

    #[test]
    fn single_replaceable_word() {
        let spec = QuerySpec { r: 3, ..QuerySpec::default() };
        let base = "x = fly ( 1 )";
        let out = perturb_query(base, &table(), &spec, 0).unwrap();
        let (a, b) = (tokenize(base), tokenize(&out));
        assert_eq!(a.len(), b.len());
        let diffs: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
        assert_eq!(diffs, [2]);
        assert_eq!(perturb_query(base, &table(), &spec, 0).unwrap(), out);
    }

    #[test]
    fn prefix_is_protected() {
        let spec = QuerySpec {
            prefix: "code fly: ".into(),
            ..QuerySpec::default()
        };
        let err = perturb_query("code fly: 1 + 2", &table(), &spec, 0).unwrap_err();
        assert!(matches!(err, LexicalError::NothingToReplace { .. }));
        let out = perturb_query("code fly: fly", &table(), &spec, 0).unwrap();
        assert!(out.starts_with("code fly :"));
        assert!(!out.ends_with(" fly"));
    }

    #[test]
    fn lookup_is_lowercased() {
        let spec = QuerySpec { r: 1, ..QuerySpec::default() };
        let out = perturb_query("Fly", &table(), &spec, 3).unwrap();
        assert!(["flies", "soar", "code", "program"].contains(&out.as_str()));
    }

    #[test]
    fn total_counts() {
        let corpus = ["fly code", "code fly fly", "program soar"];
        let spec = QuerySpec { n: 1, m: 1, ..QuerySpec::default() };
        assert_eq!(build_query_set(&corpus, &table(), &spec).unwrap().total(), 2);
        let spec = QuerySpec::default();
        let qs = build_query_set(&corpus, &table(), &spec).unwrap();
        assert_eq!(qs.total(), 10);
        assert_eq!(qs.ids().len(), 10);
    }

    #[test]
    fn text_document_round_trip() {
        let corpus = ["fly code\n\"quoted\"", "code fly fly", "program soar"];
        let qs = build_query_set(&corpus, &table(), &QuerySpec::default()).unwrap();
        let back = QuerySet::from_text(&qs.to_text()).unwrap();
        assert_eq!(back, qs);
        let tampered = qs.to_text().replacen("base[0] = \"", "base[0] = \"X", 1);
        assert!(QuerySet::from_text(&tampered).is_err());
    }

    #[test]
    fn corpus_escapes() {
        let s = "a\nb\\n\tc";
        assert_eq!(parse_corpus(&escape_snippet(s)), [s]);
    }

    #[test]
    fn flat_ids() {
        assert_eq!(QueryId::base(1).flat(4), 5);
        assert_eq!(QueryId::perturbed(1, 3).flat(4), 9);
    }
}
