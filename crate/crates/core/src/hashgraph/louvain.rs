use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{HashtagGraph, ModularityParams, Partition};

/// Stop aggregating once a level improves Q by less than this.
const MIN_LEVEL_GAIN: f64 = 1e-7;
/// A move must beat staying put by at least this much (in edge-weight units).
const MIN_MOVE_GAIN: f64 = 1e-12;

/// Graph at one aggregation level, stored over ordered pairs: `adj[i]` holds
/// `(j, A_ij)` with A symmetric, and a self-loop `A_ii` carries twice the
/// internal weight of the community that node `i` stands for.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_graph(graph: &HashtagGraph) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..graph.node_count())
            .map(|i| graph.neighbors(i).map(|(j, w)| (j, w as f64)).collect())
            .collect();
        Level::new(adj)
    }

    fn new(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let degree: Vec<f64> = adj.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        let two_m = degree.iter().sum();
        Level { adj, degree, two_m }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, comm: &[usize], gamma: f64) -> f64 {
        let mut inside = vec![0.0; self.len()];
        let mut total = vec![0.0; self.len()];
        for (i, row) in self.adj.iter().enumerate() {
            total[comm[i]] += self.degree[i];
            for &(j, w) in row {
                if comm[j] == comm[i] {
                    inside[comm[i]] += w;
                }
            }
        }
        inside
            .iter()
            .zip(&total)
            .map(|(&a, &t)| a / self.two_m - gamma * (t / self.two_m) * (t / self.two_m))
            .sum()
    }

    /// Collapses each community into a single node.
    fn aggregate(&self, comm: &[usize], count: usize) -> Level {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, w) in row {
                *rows[comm[i]].entry(comm[j]).or_default() += w;
            }
        }
        Level::new(rows.into_iter().map(|r| r.into_iter().collect()).collect())
    }

    /// Local-moving phase: visits nodes in a shuffled order, moving each to
    /// the neighbouring community with the largest modularity gain, until a
    /// full sweep moves nothing. Returns dense community ids and whether any
    /// node moved.
    fn local_moves(&self, gamma: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_moved = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let home = comm[i];
                let ki = self.degree[i];
                for &(j, w) in &self.adj[i] {
                    if j == i {
                        continue;
                    }
                    let c = comm[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[home] -= ki;

                let gain = |c: usize, link: &[f64]| link[c] - gamma * tot[c] * ki / self.two_m;
                let mut best = home;
                let mut best_gain = gain(home, &link);
                touched.sort_unstable();
                for &c in &touched {
                    let g = gain(c, &link);
                    if g > best_gain + MIN_MOVE_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }

                tot[best] += ki;
                if best != home {
                    comm[i] = best;
                    moved = true;
                }
                for c in touched.drain(..) {
                    link[c] = 0.0;
                }
            }
            if !moved {
                break;
            }
            any_moved = true;
        }
        (renumber(&comm), any_moved)
    }
}

fn renumber(comm: &[usize]) -> Vec<usize> {
    let mut map = vec![usize::MAX; comm.len()];
    let mut next = 0;
    comm.iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

/// Two-phase Louvain modularity maximisation at resolution γ.
///
/// The visit order of each level is a shuffle drawn from `seed`, so a fixed
/// `(graph, params, seed)` always yields the same partition. Nodes without
/// edges end up in singleton communities.
pub fn louvain(graph: &HashtagGraph, params: &ModularityParams, seed: u64) -> Partition {
    let gamma = params.resolution;
    let nodes = graph.nodes();
    let mut membership: Vec<usize> = (0..nodes.len()).collect();
    let mut level = Level::from_graph(graph);
    if level.two_m > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let singletons: Vec<usize> = (0..level.len()).collect();
        let mut q_prev = level.modularity(&singletons, gamma);
        loop {
            let (comm, moved) = level.local_moves(gamma, &mut rng);
            if !moved {
                break;
            }
            membership.iter_mut().for_each(|m| *m = comm[*m]);
            let q = level.modularity(&comm, gamma);
            let count = comm.iter().max().map_or(0, |c| c + 1);
            if q - q_prev < MIN_LEVEL_GAIN || count == 1 {
                break;
            }
            level = level.aggregate(&comm, count);
            q_prev = q;
        }
    }
    Partition::from_groups(nodes.iter().zip(membership))
}
