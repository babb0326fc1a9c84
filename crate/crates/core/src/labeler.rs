//! Transfers hashtag communities onto documents and builds the constraint
//! matrix for the masked factorization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::hashgraph::{parse_tag_ids, top_communities, Partition};

/// Hashtag → community id, restricted to the selected communities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommunityLookup {
    table: BTreeMap<String, usize>,
}

impl CommunityLookup {
    /// Keeps the tags whose community is among the `c` largest.
    pub fn from_partition(partition: &Partition, c: usize) -> Self {
        let selected = top_communities(partition, c).len();
        let table = partition
            .iter()
            .filter(|&(_, id)| id < selected)
            .map(|(t, id)| (t.to_string(), id))
            .collect();
        CommunityLookup { table }
    }

    pub fn get(&self, tag: &str) -> Option<usize> {
        self.table.get(tag).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (tag, id) in &self.table {
            writeln!(out, "{tag}\t{id}").unwrap();
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        Ok(CommunityLookup {
            table: parse_tag_ids(text, "lookup")?.into_iter().collect(),
        })
    }
}

impl<S: Into<String>> FromIterator<(S, usize)> for CommunityLookup {
    fn from_iter<I: IntoIterator<Item = (S, usize)>>(iter: I) -> Self {
        CommunityLookup {
            table: iter.into_iter().map(|(t, c)| (t.into(), c)).collect(),
        }
    }
}

/// Replaces each document's labels with the communities of its hashtags.
pub fn label_documents(docs: &[Document], lookup: &CommunityLookup) -> Vec<Document> {
    docs.iter()
        .map(|doc| {
            let mut doc = doc.clone();
            doc.labels = doc.hashtags.iter().filter_map(|h| lookup.get(h)).collect();
            doc
        })
        .collect()
}

/// Binary n×k mask L. Unlabeled documents get all-ones rows; a labeled
/// document may only load on its own communities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    k: usize,
    rows: Vec<Vec<bool>>,
    labeled: Vec<bool>,
}

impl ConstraintMatrix {
    pub fn all_ones(n: usize, k: usize) -> Self {
        ConstraintMatrix {
            k,
            rows: vec![vec![true; k]; n],
            labeled: vec![false; n],
        }
    }

    /// Builds L from explicit label sets, one per document.
    pub fn from_label_sets<'a>(
        sets: impl IntoIterator<Item = &'a [usize]>,
        k: usize,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labeled = Vec::new();
        for (i, set) in sets.into_iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&c| c >= k) {
                return Err(Error::LabelOutOfRange {
                    doc: i.to_string(),
                    label: bad,
                    k,
                });
            }
            let mut row = vec![set.is_empty(); k];
            for &c in set {
                row[c] = true;
            }
            rows.push(row);
            labeled.push(!set.is_empty());
        }
        Ok(ConstraintMatrix { k, rows, labeled })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.labeled[i]
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled
    }

    /// Row-major 0/1 values.
    pub fn to_dense(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }))
            .collect()
    }

    /// Header `n k lines`, then either `row *` for an all-ones row or one
    /// `row col` line per 1-entry.
    pub fn to_coordinate(&self) -> String {
        let mut body = String::new();
        let mut lines = 0;
        for (i, row) in self.rows.iter().enumerate() {
            if row.iter().all(|&b| b) {
                writeln!(body, "{i} *").unwrap();
                lines += 1;
            } else {
                for (j, _) in row.iter().enumerate().filter(|(_, &b)| b) {
                    writeln!(body, "{i} {j}").unwrap();
                    lines += 1;
                }
            }
        }
        format!("{} {} {lines}\n{body}", self.n(), self.k)
    }

    /// Parses [`Self::to_coordinate`] output. A row written as `row *` is
    /// unlabeled; any other row is labeled with the listed columns.
    pub fn from_coordinate(text: &str) -> Result<Self> {
        let bad = |line: usize, message: &str| Error::Parse {
            path: "constraint matrix".into(),
            line,
            message: message.into(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| bad(1, "bad header")))
            .collect::<Result<_>>()?;
        let [n, k, count] = head[..] else {
            return Err(bad(1, "header must be `n k lines`"));
        };
        let mut sets: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut seen = 0;
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            seen += 1;
            let (row, col) = line.split_once(' ').ok_or_else(|| bad(idx + 1, "expected `row col`"))?;
            let row: usize = row.parse().map_err(|_| bad(idx + 1, "bad row"))?;
            if row >= n {
                return Err(bad(idx + 1, "row out of range"));
            }
            let entry = sets[row].get_or_insert_with(Vec::new);
            if col == "*" {
                continue;
            }
            let col: usize = col.parse().map_err(|_| bad(idx + 1, "bad column"))?;
            if col >= k {
                return Err(bad(idx + 1, "column out of range"));
            }
            entry.push(col);
        }
        if seen != count {
            return Err(bad(1, "line count does not match header"));
        }
        let sets: Vec<Vec<usize>> = sets
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| bad(1, &format!("row {i} missing"))))
            .collect::<Result<_>>()?;
        ConstraintMatrix::from_label_sets(sets.iter().map(Vec::as_slice), k)
    }
}

/// L_ij = 1 iff j is one of document i's labels or document i is unlabeled.
pub fn build_constraint_matrix(docs: &[Document], k: usize) -> Result<ConstraintMatrix> {
    for doc in docs {
        if let Some(&bad) = doc.labels.iter().find(|&&c| c >= k) {
            return Err(Error::LabelOutOfRange {
                doc: doc.id.clone(),
                label: bad,
                k,
            });
        }
    }
    let sets: Vec<Vec<usize>> = docs.iter().map(|d| d.labels.iter().copied().collect()).collect();
    ConstraintMatrix::from_label_sets(sets.iter().map(Vec::as_slice), k)
}

/// Drops a seeded uniform subset of unlabeled documents so that labeled
/// documents make up at least `target_ratio` of the result. Labeled documents
/// are always kept and input order is preserved.
pub fn downsample_unlabeled(docs: &[Document], target_ratio: f64, seed: u64) -> Result<Vec<Document>> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::Config(format!("target ratio must be in (0, 1], got {target_ratio}")));
    }
    let labeled = docs.iter().filter(|d| d.is_labeled()).count();
    let unlabeled = docs.len() - labeled;
    let exact = labeled as f64 * (1.0 - target_ratio) / target_ratio;
    let mut keep = (exact + 1e-9 * exact.max(1.0)).floor() as usize;
    // Guard the tolerance above: the labeled share must never fall below target.
    while keep > 0 && (labeled as f64) < target_ratio * (labeled + keep) as f64 {
        keep -= 1;
    }
    if unlabeled <= keep {
        return Ok(docs.to_vec());
    }
    if labeled == 0 {
        return Err(Error::UnreachableRatio { target: target_ratio });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; unlabeled];
    for idx in rand::seq::index::sample(&mut rng, unlabeled, keep) {
        chosen[idx] = true;
    }
    let mut next_unlabeled = 0;
    Ok(docs
        .iter()
        .filter(|d| {
            if d.is_labeled() {
                return true;
            }
            next_unlabeled += 1;
            chosen[next_unlabeled - 1]
        })
        .cloned()
        .collect())
}

/// Share of documents carrying at least one label; 0 for an empty corpus.
pub fn labeled_fraction(docs: &[Document]) -> f64 {
    if docs.is_empty() {
        return 0.0;
    }
    docs.iter().filter(|d| d.is_labeled()).count() as f64 / docs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn doc(id: usize, tags: &[&str], labels: &[usize]) -> Document {
        Document {
            id: id.to_string(),
            tokens: tags.iter().map(|s| s.to_string()).collect(),
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
            labels: labels.iter().copied().collect(),
        }
    }

    fn lookup() -> CommunityLookup {
        [("#brexit", 3), ("#eu", 3), ("#trump", 0), ("#nhs", 4)].into_iter().collect()
    }

    #[test]
    fn label_examples() {
        let out = label_documents(
            &[doc(0, &["#brexit", "#eu"], &[]), doc(1, &["#trump", "#nhs"], &[]), doc(2, &["#cats"], &[7])],
            &lookup(),
        );
        assert_eq!(out[0].labels, BTreeSet::from([3]));
        assert_eq!(out[1].labels, BTreeSet::from([0, 4]));
        assert!(out[2].labels.is_empty());
    }

    #[test]
    fn lookup_restricted_to_top_communities() {
        let p = Partition::from_groups([("#a", 0), ("#b", 0), ("#c", 1), ("#d", 2)]);
        let l = CommunityLookup::from_partition(&p, 2);
        assert_eq!(l.len(), 3);
        assert_eq!(l.get("#d"), None);
        assert_eq!(CommunityLookup::from_tsv(&l.to_tsv()).unwrap(), l);
    }

    #[test]
    fn constraint_examples() {
        let docs = [doc(0, &[], &[2]), doc(1, &[], &[]), doc(2, &[], &[0, 3])];
        let l = build_constraint_matrix(&docs, 4).unwrap();
        let dense = l.to_dense();
        assert_eq!(&dense[0..4], [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(&dense[4..8], [1.0; 4]);
        assert_eq!(&dense[8..12], [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(l.labeled_mask(), [true, false, true]);

        assert!(matches!(
            build_constraint_matrix(&[doc(9, &[], &[4])], 4),
            Err(Error::LabelOutOfRange { label: 4, k: 4, .. })
        ));
    }

    #[test]
    fn constraint_coordinate_format() {
        let docs = [doc(0, &[], &[2]), doc(1, &[], &[]), doc(2, &[], &[0, 3])];
        let l = build_constraint_matrix(&docs, 4).unwrap();
        let text = l.to_coordinate();
        assert_eq!(text, "3 4 4\n0 2\n1 *\n2 0\n2 3\n");
        assert_eq!(ConstraintMatrix::from_coordinate(&text).unwrap(), l);
    }

    fn corpus(labeled: usize, unlabeled: usize) -> Vec<Document> {
        // Interleave so that order preservation is observable.
        let mut out = Vec::new();
        let (mut l, mut u) = (0, 0);
        while l < labeled || u < unlabeled {
            if u < unlabeled {
                out.push(doc(out.len(), &[], &[]));
                u += 1;
            }
            if l < labeled {
                out.push(doc(out.len(), &[], &[1]));
                l += 1;
            }
        }
        out
    }

    #[test]
    fn downsample_examples() {
        let docs = corpus(100, 300);
        let out = downsample_unlabeled(&docs, 0.5, 42).unwrap();
        assert_eq!(out.len(), 200);
        assert_eq!(out.iter().filter(|d| d.is_labeled()).count(), 100);
        let ids: Vec<usize> = out.iter().map(|d| d.id.parse().unwrap()).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(out, downsample_unlabeled(&docs, 0.5, 42).unwrap());
        assert_ne!(out, downsample_unlabeled(&docs, 0.5, 43).unwrap());

        let docs = corpus(100, 50);
        assert_eq!(downsample_unlabeled(&docs, 0.5, 1).unwrap(), docs);

        assert!(matches!(
            downsample_unlabeled(&corpus(0, 10), 0.5, 1),
            Err(Error::UnreachableRatio { .. })
        ));
    }

    #[test]
    fn downsample_never_below_target() {
        for (l, u, r) in [(100, 900, 0.2), (7, 100, 0.3), (3, 10, 1.0), (10, 10, 0.9)] {
            let out = downsample_unlabeled(&corpus(l, u), r, 5).unwrap();
            let frac = labeled_fraction(&out);
            assert!(frac >= r, "{l} {u} {r}: {frac}");
        }
        // 100 * 0.8 / 0.2 = 400 despite 0.8 / 0.2 rounding below 4 in floating point.
        assert_eq!(downsample_unlabeled(&corpus(100, 900), 0.2, 5).unwrap().len(), 500);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn label_monotone(extra in "#[a-e]") {
                let base = doc(0, &["#brexit"], &[]);
                let mut more = base.clone();
                more.hashtags.insert(extra);
                let a = &label_documents(&[base], &lookup())[0];
                let b = &label_documents(&[more], &lookup())[0];
                prop_assert!(a.labels.is_subset(&b.labels));
            }

            #[test]
            fn rows_all_ones_iff_unlabeled(sets in proptest::collection::vec(
                proptest::collection::btree_set(0usize..5, 0..3), 1..20)) {
                let docs: Vec<Document> = sets.iter().enumerate()
                    .map(|(i, s)| doc(i, &[], &s.iter().copied().collect::<Vec<_>>()))
                    .collect();
                let l = build_constraint_matrix(&docs, 6).unwrap();
                for i in 0..l.n() {
                    let ones = (0..6).all(|j| l.allows(i, j));
                    prop_assert_eq!(ones, !l.is_labeled(i));
                }
            }

            #[test]
            fn downsample_keeps_labeled(l in 1usize..40, u in 0usize..120, seed in 0u64..1000) {
                let docs = corpus(l, u);
                let out = downsample_unlabeled(&docs, 0.5, seed).unwrap();
                prop_assert_eq!(out.iter().filter(|d| d.is_labeled()).count(), l);
                prop_assert!(labeled_fraction(&out) >= 0.5);
            }
        }
    }
}
