//! Hashtag co-occurrence graph, modularity and community detection.

mod louvain;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::corpus::Document;
use crate::error::{Error, Result};

pub use louvain::louvain;

/// Weighted undirected graph over hashtags. Node indices follow the
/// lexicographic order of the tags. Each row of `adjacency` holds the
/// neighbours of that node; an edge is stored in both endpoint rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashtagGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<BTreeMap<usize, u64>>,
    tau: u64,
}

impl HashtagGraph {
    /// Builds a graph from explicit nodes and undirected edges. Edges lighter
    /// than `tau` are dropped; edge endpoints are added as nodes if missing.
    pub fn from_edges<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        edges: impl IntoIterator<Item = (S, S, u64)>,
        tau: u64,
    ) -> Result<Self> {
        let mut names: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        let edges: Vec<(String, String, u64)> = edges
            .into_iter()
            .map(|(a, b, w)| (a.as_ref().to_string(), b.as_ref().to_string(), w))
            .collect();
        for (a, b, _) in &edges {
            names.insert(a.clone());
            names.insert(b.clone());
        }
        let nodes: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut adjacency = vec![BTreeMap::new(); nodes.len()];
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Config(format!("self-edge on {a:?}")));
            }
            let (i, j) = (index[&a], index[&b]);
            if adjacency[i].contains_key(&j) {
                return Err(Error::Config(format!("duplicate edge {a:?} -- {b:?}")));
            }
            if w >= tau.max(1) {
                adjacency[i].insert(j, w);
                adjacency[j].insert(i, w);
            }
        }
        Ok(HashtagGraph {
            nodes,
            index,
            adjacency,
            tau,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn node_index(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.adjacency[node].iter().map(|(&j, &w)| (j, w))
    }

    /// φ between two tags, 0 when no edge survives.
    pub fn weight(&self, a: &str, b: &str) -> u64 {
        match (self.node_index(a), self.node_index(b)) {
            (Some(i), Some(j)) => self.adjacency[i].get(&j).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Each undirected edge once as `(i, j, φ)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, row)| {
            row.range(i + 1..).map(move |(&j, &w)| (i, j, w))
        })
    }

    /// Weighted degree k_i.
    pub fn degree(&self, node: usize) -> u64 {
        self.adjacency[node].values().sum()
    }

    /// Total undirected edge weight m.
    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// TSV `tag_i<TAB>tag_j<TAB>weight` with `tag_i < tag_j`, sorted.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, j, w) in self.edges() {
            writeln!(out, "{}\t{}\t{w}", self.nodes[i], self.nodes[j]).unwrap();
        }
        out
    }

    /// One tag per line, including nodes without edges.
    pub fn nodes_to_text(&self) -> String {
        self.nodes.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn from_tsv(edges_tsv: &str, nodes_text: &str, tau: u64) -> Result<Self> {
        let mut edges = Vec::new();
        for (idx, line) in edges_tsv.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Parse {
                path: "graph".into(),
                line: idx + 1,
                message: message.into(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad("expected `tag_i<TAB>tag_j<TAB>weight`"));
            }
            let w: u64 = f[2].parse().map_err(|_| bad("bad weight"))?;
            edges.push((f[0].to_string(), f[1].to_string(), w));
        }
        let nodes: Vec<String> = nodes_text
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        HashtagGraph::from_edges(nodes, edges, tau)
    }
}

/// Co-occurrence graph: φ_ij counts the documents whose hashtag sets contain
/// both tags. Every hashtag becomes a node, even if truncation by `tau`
/// leaves it isolated.
pub fn build_graph(docs: &[Document], tau: u64) -> HashtagGraph {
    let mut nodes = BTreeSet::new();
    let mut counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for doc in docs {
        let tags: Vec<&str> = doc.hashtags.iter().map(String::as_str).collect();
        nodes.extend(tags.iter().copied());
        for (a, &ta) in tags.iter().enumerate() {
            for &tb in &tags[a + 1..] {
                *counts.entry((ta, tb)).or_default() += 1;
            }
        }
    }
    HashtagGraph::from_edges(nodes, counts.into_iter().map(|((a, b), w)| (a, b, w)), tau)
        .expect("co-occurrence edges are well formed")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityParams {
    /// γ, scaling the degree null-model term. Must be positive.
    pub resolution: f64,
}

impl Default for ModularityParams {
    fn default() -> Self {
        ModularityParams { resolution: 0.3 }
    }
}

impl ModularityParams {
    pub fn new(resolution: f64) -> Result<Self> {
        if resolution > 0.0 && resolution.is_finite() {
            Ok(ModularityParams { resolution })
        } else {
            Err(Error::Config(format!("resolution must be positive, got {resolution}")))
        }
    }
}

/// Assignment of every hashtag to a community. Ids are dense, numbered by
/// decreasing community size with ties broken by the smallest member tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    community_of: BTreeMap<String, usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Renumbers an arbitrary grouping into canonical ids.
    pub fn from_groups<S: AsRef<str>>(assignment: impl IntoIterator<Item = (S, usize)>) -> Self {
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (tag, c) in assignment {
            groups.entry(c).or_default().push(tag.as_ref().to_string());
        }
        let mut groups: Vec<Vec<String>> = groups
            .into_values()
            .map(|mut g| {
                g.sort();
                g
            })
            .collect();
        groups.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
        let mut community_of = BTreeMap::new();
        let mut sizes = Vec::with_capacity(groups.len());
        for (id, members) in groups.into_iter().enumerate() {
            sizes.push(members.len());
            for tag in members {
                community_of.insert(tag, id);
            }
        }
        Partition { community_of, sizes }
    }

    pub fn community(&self, tag: &str) -> Option<usize> {
        self.community_of.get(tag).copied()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_communities(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self) -> usize {
        self.community_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.community_of.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.community_of.iter().map(|(t, &c)| (t.as_str(), c))
    }

    /// TSV `tag<TAB>community_id`, sorted by tag.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (tag, c) in self.iter() {
            writeln!(out, "{tag}\t{c}").unwrap();
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let pairs = parse_tag_ids(text, "partition")?;
        Ok(Partition::from_groups(pairs))
    }
}

pub(crate) fn parse_tag_ids(text: &str, what: &str) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(t, c)| c.parse::<usize>().ok().map(|c| (t.to_string(), c)));
        match parsed {
            Some(pair) => out.push(pair),
            None => {
                return Err(Error::Parse {
                    path: what.into(),
                    line: idx + 1,
                    message: "expected `tag<TAB>community_id`".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Q_γ = Σ_c [ in_c / 2m − γ (tot_c / 2m)² ], where in_c sums φ over ordered
/// pairs inside community c, tot_c sums the degrees of its members and m is
/// the total undirected edge weight. An edgeless graph scores 0.
pub fn modularity(graph: &HashtagGraph, partition: &Partition, params: &ModularityParams) -> Result<f64> {
    let labels = graph
        .nodes()
        .iter()
        .map(|t| partition.community(t).ok_or_else(|| Error::MissingNode(t.clone())))
        .collect::<Result<Vec<_>>>()?;
    let two_m = 2.0 * graph.total_weight() as f64;
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let count = labels.iter().copied().max().map_or(0, |c| c + 1);
    let mut inside = vec![0.0; count];
    let mut total = vec![0.0; count];
    for (i, &ci) in labels.iter().enumerate() {
        for (j, w) in graph.neighbors(i) {
            total[ci] += w as f64;
            if labels[j] == ci {
                inside[ci] += w as f64;
            }
        }
    }
    Ok(inside
        .iter()
        .zip(&total)
        .map(|(&a, &t)| a / two_m - params.resolution * (t / two_m) * (t / two_m))
        .sum())
}

/// The `c` largest community ids. Ids are already ordered by size.
pub fn top_communities(partition: &Partition, c: usize) -> Vec<usize> {
    (0..c.min(partition.num_communities())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tags: &[&str]) -> Document {
        Document {
            id: String::new(),
            tokens: tags.iter().map(|s| s.to_string()).collect(),
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
            labels: Default::default(),
        }
    }

    #[test]
    fn build_examples() {
        let g = build_graph(&[doc(&["#a", "#b"]), doc(&["#b", "#a"])], 1);
        assert_eq!(g.weight("#a", "#b"), 2);
        assert_eq!(g.weight("#b", "#a"), 2);

        let g = build_graph(&[doc(&["#a", "#b", "#c"])], 1);
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().all(|(_, _, w)| w == 1));

        let g = build_graph(&[doc(&["#a", "#b", "#c"])], 2);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn repeated_tokens_count_once() {
        let mut d = doc(&["#a", "#b"]);
        d.tokens.extend(["#a".to_string(), "#b".to_string()]);
        assert_eq!(build_graph(&[d], 1).weight("#a", "#b"), 1);
    }

    #[test]
    fn export_sorted_with_lexicographic_endpoints() {
        let g = build_graph(&[doc(&["#z", "#b", "#m"]), doc(&["#m", "#z"])], 1);
        assert_eq!(g.to_tsv(), "#b\t#m\t1\n#b\t#z\t1\n#m\t#z\t2\n");
        let back = HashtagGraph::from_tsv(&g.to_tsv(), &g.nodes_to_text(), 1).unwrap();
        assert_eq!(back, g);
    }

    fn single_edge() -> HashtagGraph {
        HashtagGraph::from_edges(["a", "b"], [("a", "b", 1)], 1).unwrap()
    }

    #[test]
    fn modularity_examples() {
        let p1 = ModularityParams::new(1.0).unwrap();
        let empty = HashtagGraph::from_edges(["a", "b"], [], 1).unwrap();
        let part = Partition::from_groups([("a", 0), ("b", 1)]);
        assert_eq!(modularity(&empty, &part, &p1).unwrap(), 0.0);

        let g = single_edge();
        let together = Partition::from_groups([("a", 0), ("b", 0)]);
        assert!(modularity(&g, &together, &p1).unwrap().abs() < 1e-15);
        assert_eq!(modularity(&g, &part, &p1).unwrap(), -0.5);

        let missing = Partition::from_groups([("a", 0)]);
        assert!(matches!(modularity(&g, &missing, &p1), Err(Error::MissingNode(t)) if t == "b"));
    }

    #[test]
    fn resolution_must_be_positive() {
        assert!(ModularityParams::new(0.0).is_err());
        assert!(ModularityParams::new(-1.0).is_err());
        assert_eq!(ModularityParams::default().resolution, 0.3);
    }

    #[test]
    fn partition_renumbering() {
        let p = Partition::from_groups([("#x", 7), ("#y", 7), ("#c", 2), ("#a", 9), ("#b", 9)]);
        // {a,b} and {x,y} both have two members; {a,b} has the smaller tag.
        assert_eq!(p.community("#a"), Some(0));
        assert_eq!(p.community("#x"), Some(1));
        assert_eq!(p.community("#c"), Some(2));
        assert_eq!(p.sizes(), [2, 2, 1]);
        assert_eq!(Partition::from_tsv(&p.to_tsv()).unwrap(), p);
    }

    #[test]
    fn top_community_examples() {
        let tags: Vec<(String, usize)> = (0..17)
            .map(|i| (format!("#t{i:02}"), if i < 10 { 0 } else if i < 15 { 1 } else { 2 }))
            .collect();
        let p = Partition::from_groups(tags);
        assert_eq!(p.sizes(), [10, 5, 2]);
        assert_eq!(top_communities(&p, 2), [0, 1]);
        assert_eq!(top_communities(&p, 9), [0, 1, 2]);
    }

    #[test]
    fn scaling_weights_keeps_modularity() {
        let edges = [("a", "b", 3), ("b", "c", 1), ("c", "d", 2), ("a", "c", 1)];
        let g = HashtagGraph::from_edges(["a"], edges, 1).unwrap();
        let g5 = HashtagGraph::from_edges(["a"], edges.map(|(a, b, w)| (a, b, 5 * w)), 1).unwrap();
        let p = Partition::from_groups([("a", 0), ("b", 0), ("c", 1), ("d", 1)]);
        let params = ModularityParams::new(0.7).unwrap();
        let q = modularity(&g, &p, &params).unwrap();
        let q5 = modularity(&g5, &p, &params).unwrap();
        assert!((q - q5).abs() < 1e-12);
    }
}
