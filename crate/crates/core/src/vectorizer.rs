//! Vocabulary construction, sparse count matrices and TF-IDF reweighting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
    doc_frequency: Vec<usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, doc_frequency)` pairs already in
    /// index order.
    pub fn from_entries(entries: Vec<(String, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut token_to_index = HashMap::with_capacity(entries.len());
        let mut index_to_token = Vec::with_capacity(entries.len());
        let mut doc_frequency = Vec::with_capacity(entries.len());
        for (idx, (token, df)) in entries.into_iter().enumerate() {
            if token_to_index.insert(token.clone(), idx).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token {token:?}")));
            }
            index_to_token.push(token);
            doc_frequency.push(df);
        }
        Ok(Vocabulary {
            token_to_index,
            index_to_token,
            doc_frequency,
        })
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.index_to_token[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn doc_frequency(&self, index: usize) -> usize {
        self.doc_frequency[index]
    }

    /// TSV lines `token<TAB>index<TAB>doc_frequency`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (idx, (tok, df)) in self.index_to_token.iter().zip(&self.doc_frequency).enumerate() {
            writeln!(out, "{tok}\t{idx}\t{df}").unwrap();
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Parse {
                path: "vocabulary".into(),
                line: lineno + 1,
                message: message.into(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad("expected 3 tab-separated fields"));
            }
            let idx: usize = fields[1].parse().map_err(|_| bad("bad index"))?;
            if idx != entries.len() {
                return Err(bad("indices must be consecutive from 0"));
            }
            let df: usize = fields[2].parse().map_err(|_| bad("bad doc frequency"))?;
            entries.push((fields[0].to_string(), df));
        }
        Vocabulary::from_entries(entries)
    }
}

/// Keeps the tokens that occur in at least `min_df` documents, indexed in
/// lexicographic order.
pub fn build_vocabulary(docs: &[Document], min_df: usize) -> Result<Vocabulary> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for tok in unique {
            *df.entry(tok).or_default() += 1;
        }
    }
    let entries = df
        .into_iter()
        .filter(|&(_, count)| count >= min_df.max(1))
        .map(|(tok, count)| (tok.to_string(), count))
        .collect();
    Vocabulary::from_entries(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Counts,
    Tfidf,
}

/// Row-major sparse matrix with strictly positive stored values and column
/// indices ascending within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    kind: MatrixKind,
}

impl DocTermMatrix {
    /// Assembles a matrix from per-row `(column, value)` lists. Zero values are
    /// dropped and columns within a row are sorted.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>, kind: MatrixKind) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let n = rows.len();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Dimension(format!("duplicate column {} in a row", w[0].0)));
            }
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::Dimension(format!("column {c} out of range for width {cols}")));
                }
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::Dimension(format!("invalid entry {v} at column {c}")));
                }
                if v > 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(DocTermMatrix {
            rows: n,
            cols,
            indptr,
            indices,
            values,
            kind,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (i, j, v) in self.iter() {
            out[i][j] = v;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mean(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / (self.rows * self.cols) as f64
    }

    /// Copy with every value multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Coordinate text: header `n w nnz`, then one `row col value` per entry.
    pub fn to_coordinate(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz()).unwrap();
        for (i, j, v) in self.iter() {
            writeln!(out, "{i} {j} {v}").unwrap();
        }
        out
    }

    pub fn from_coordinate(text: &str, kind: MatrixKind) -> Result<Self> {
        let (rows, cols, entries) = parse_coordinate(text)?;
        let mut by_row = vec![Vec::new(); rows];
        for (i, j, v) in entries {
            if i >= rows {
                return Err(Error::Dimension(format!("row {i} out of range for {rows} rows")));
            }
            by_row[i].push((j, v));
        }
        DocTermMatrix::from_rows(cols, by_row, kind)
    }
}

/// Parses coordinate text into `(rows, cols, entries)`.
pub(crate) fn parse_coordinate(text: &str) -> Result<(usize, usize, Vec<(usize, usize, f64)>)> {
    let bad = |line: usize, message: &str| Error::Parse {
        path: "coordinate matrix".into(),
        line,
        message: message.into(),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse().map_err(|_| bad(1, "bad header")))
        .collect::<Result<_>>()?;
    if head.len() != 3 {
        return Err(bad(1, "header must be `rows cols nnz`"));
    }
    let mut entries = Vec::with_capacity(head[2]);
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad(idx + 1, "expected `row col value`"));
        }
        let i = f[0].parse().map_err(|_| bad(idx + 1, "bad row"))?;
        let j = f[1].parse().map_err(|_| bad(idx + 1, "bad column"))?;
        let v = f[2].parse().map_err(|_| bad(idx + 1, "bad value"))?;
        entries.push((i, j, v));
    }
    if entries.len() != head[2] {
        return Err(bad(1, "entry count does not match header"));
    }
    Ok((head[0], head[1], entries))
}

/// Raw term counts. Out-of-vocabulary tokens are skipped; documents with no
/// in-vocabulary tokens become all-zero rows.
pub fn count_matrix(docs: &[Document], vocab: &Vocabulary) -> DocTermMatrix {
    let rows = docs
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for tok in &doc.tokens {
                if let Some(j) = vocab.index(tok) {
                    *counts.entry(j).or_default() += 1.0;
                }
            }
            counts.into_iter().collect()
        })
        .collect();
    DocTermMatrix::from_rows(vocab.len(), rows, MatrixKind::Counts).expect("counts are valid")
}

/// Smooth inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
pub fn smooth_idf(n: usize, df: usize) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// TF-IDF with smooth idf and L2-normalized rows. Document frequencies are
/// taken from the columns of `counts`.
pub fn tfidf(counts: &DocTermMatrix) -> Result<DocTermMatrix> {
    if counts.kind != MatrixKind::Counts {
        return Err(Error::Dimension("tfidf expects a count matrix".into()));
    }
    let mut df = vec![0usize; counts.cols];
    for &j in &counts.indices {
        df[j] += 1;
    }
    let idf: Vec<f64> = df.iter().map(|&d| smooth_idf(counts.rows, d)).collect();

    let mut out = counts.clone();
    out.kind = MatrixKind::Tfidf;
    for i in 0..out.rows {
        let (a, b) = (out.indptr[i], out.indptr[i + 1]);
        let row = &mut out.values[a..b];
        for (v, &j) in row.iter_mut().zip(&out.indices[a..b]) {
            *v *= idf[j];
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(out)
}
