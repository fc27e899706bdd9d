//! Word-vector table, sentence embedding by mean pooling, and cosine similarity.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

pub const DEFAULT_DIMENSION: usize = 300;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding file line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("embedding file is empty")]
    Empty,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable token → vector map. Tokens are stored lowercase.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            entries: HashMap::new(),
        }
    }

    /// Inserts a vector; returns false (and leaves the table alone) when the
    /// token is already present.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool, EmbeddingError> {
        if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch(self.dimension, vector.len()));
        }
        let key = token.to_lowercase();
        if self.entries.contains_key(&key) {
            return Ok(false);
        }
        self.entries.insert(key, vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Tokens in lexicographic order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }

    /// Reads the plain-text format: one token per line followed by its
    /// components, whitespace separated. A leading `<count> <dim>` header line
    /// is tolerated. Every line must have the same dimension.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut table: Option<EmbeddingTable> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();
            if lineno == 1
                && values.len() == 1
                && token.parse::<usize>().is_ok()
                && values[0].parse::<usize>().is_ok()
            {
                continue;
            }
            let vector = values
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::BadLine {
                    line: lineno,
                    reason: e.to_string(),
                })?;
            if vector.is_empty() {
                return Err(EmbeddingError::BadLine {
                    line: lineno,
                    reason: "token without components".into(),
                });
            }
            let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            if vector.len() != t.dimension {
                return Err(EmbeddingError::BadLine {
                    line: lineno,
                    reason: format!("expected {} components, found {}", t.dimension, vector.len()),
                });
            }
            if !t.insert(token, vector)? {
                log::warn!("embedding file line {lineno}: duplicate token {token:?} ignored");
            }
        }
        table.ok_or(EmbeddingError::Empty)
    }

    pub fn load_path(path: &std::path::Path) -> Result<Self, EmbeddingError> {
        let f = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(f))
    }

    /// Writes tokens in lexicographic order with `precision` decimals.
    pub fn save<W: Write>(&self, mut w: W, precision: usize) -> std::io::Result<()> {
        for token in self.tokens() {
            w.write_all(token.as_bytes())?;
            for v in &self.entries[token] {
                write!(w, " {v:.precision$}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Splits text into lowercase word tokens: breaks on any non-alphanumeric
/// character and on camelCase boundaries (`departCity`, `URLField`).
pub fn embedding_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split(|c: char| !c.is_alphanumeric()) {
        if chunk.is_empty() {
            continue;
        }
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = cur.is_uppercase()
                && (prev.is_lowercase() || prev.is_numeric() || (prev.is_uppercase() && next_lower));
            if boundary {
                tokens.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        tokens.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    tokens
}

/// Mean of the in-vocabulary token vectors; zero vector when none are known.
pub fn embed_sentence(text: &str, table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dimension()];
    let mut count = 0usize;
    for token in embedding_tokens(text) {
        if let Some(v) = table.get(&token) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            count += 1;
        }
    }
    if count > 0 {
        let n = count as f64;
        for s in &mut sum {
            *s /= n;
        }
    }
    sum
}

/// Cosine similarity, 0 when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    fn small_table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(4);
        t.insert("city", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        t.insert("depart", vec![3.0, 0.0, -1.0, 2.0]).unwrap();
        t
    }

    #[test]
    fn tokens_split_camel_and_underscore() {
        assert_eq!(embedding_tokens("depart_city"), vec!["depart", "city"]);
        assert_eq!(embedding_tokens("departCity"), vec!["depart", "city"]);
        assert_eq!(embedding_tokens("URLField"), vec!["url", "field"]);
        assert_eq!(embedding_tokens("Enter the city!"), vec!["enter", "the", "city"]);
        assert_eq!(embedding_tokens("zip2Code"), vec!["zip2", "code"]);
        assert!(embedding_tokens("  --  ").is_empty());
    }

    #[test]
    fn mean_pooling() {
        let t = small_table();
        assert_eq!(embed_sentence("City", &t), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(embed_sentence("depart city", &t), vec![2.0, 1.0, 1.0, 3.0]);
        assert_eq!(embed_sentence("unknown words", &t), vec![0.0; 4]);
        assert_eq!(embed_sentence("", &t), vec![0.0; 4]);
    }

    #[test]
    fn cosine_conventions() {
        assert_eq!(cosine(&unit(300, 0), &unit(300, 0)).unwrap(), 1.0);
        assert_eq!(cosine(&unit(300, 0), &unit(300, 1)).unwrap(), 0.0);
        assert_eq!(cosine(&vec![0.0; 300], &unit(300, 4)).unwrap(), 0.0);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(EmbeddingError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn load_and_save_round_trip() {
        let text = "2 3\nCity 1 2 3\nname 0.5 -0.25 1e-3\n\n";
        let t = EmbeddingTable::load(text.as_bytes()).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.get("city"), Some(&[1.0, 2.0, 3.0][..]));
        let mut out = Vec::new();
        t.save(&mut out, 4).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "city 1.0000 2.0000 3.0000\nname 0.5000 -0.2500 0.0010\n");
    }

    #[test]
    fn load_rejects_ragged_lines() {
        let err = EmbeddingTable::load("a 1 2\nb 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbeddingError::BadLine { line: 2, .. }));
        assert!(matches!(
            EmbeddingTable::load("".as_bytes()),
            Err(EmbeddingError::Empty)
        ));
        assert!(matches!(
            EmbeddingTable::load("a 1 x\n".as_bytes()),
            Err(EmbeddingError::BadLine { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_self_one(
            a in proptest::collection::vec(-10.0f64..10.0, 16),
            b in proptest::collection::vec(-10.0f64..10.0, 16),
        ) {
            let ab = cosine(&a, &b).unwrap();
            let ba = cosine(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
            if a.iter().any(|x| *x != 0.0) {
                prop_assert!((cosine(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
