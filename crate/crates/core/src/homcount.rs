//! Exact homomorphism counting from catalog queries into data graphs.
//! This is the ground-truth oracle the bounds are tested against.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::catalog::QueryGraph;
use crate::error::{Error, Result};
use crate::relation::Relation;

const MATRIX_NODE_GUARD: usize = 2000;
pub const DEFAULT_VISIT_BUDGET: u64 = 1_000_000_000;

/// Undirected data graph with nodes remapped to 0..n and sorted adjacency
/// lists. Built from a symmetric relation; an asymmetric one is symmetrized
/// on ingestion so the undirected view is well defined.
#[derive(Clone, Debug)]
pub struct DataGraph {
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

impl DataGraph {
    pub fn from_relation(rel: &Relation) -> Self {
        let sym;
        let rel = if rel.is_symmetric() {
            rel
        } else {
            sym = rel.clone().symmetrize();
            &sym
        };
        let mut index: HashMap<i64, u32> = HashMap::new();
        let mut ids: Vec<i64> = rel
            .pairs()
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        ids.sort_unstable();
        ids.dedup();
        for (k, &id) in ids.iter().enumerate() {
            index.insert(id, k as u32);
        }
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &(a, b) in rel.pairs() {
            adjacency[index[&a] as usize].push(index[&b]);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        // Directed pairs of a symmetric relation double-count undirected
        // edges except for self-loops, which the ingest layer already drops.
        let edge_count = rel.pairs().len() / 2;
        DataGraph {
            adjacency,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }
}

/// A BFS order of the query's vertices so that every vertex after the first
/// has at least one earlier neighbor (queries are connected).
fn bfs_order(query: &QueryGraph) -> Vec<usize> {
    let mut adj = vec![Vec::new(); query.n];
    for &(u, v) in &query.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut order = vec![0usize];
    let mut seen = vec![false; query.n];
    seen[0] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                order.push(w);
            }
        }
    }
    order
}

struct SearchPlan {
    order: Vec<usize>,
    /// For each position k > 0: indices into `order[..k]` of already-mapped
    /// query neighbors of `order[k]`.
    back_edges: Vec<Vec<usize>>,
}

fn plan(query: &QueryGraph) -> SearchPlan {
    let order = bfs_order(query);
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut back_edges = vec![Vec::new(); order.len()];
    for &(u, v) in &query.edges {
        let (a, b) = (pos[&u], pos[&v]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        back_edges[hi].push(lo);
    }
    SearchPlan { order, back_edges }
}

fn extend(
    data: &DataGraph,
    plan: &SearchPlan,
    image: &mut Vec<u32>,
    budget: Option<u64>,
    visits: &mut u64,
) -> Result<BigUint> {
    let k = image.len();
    if k == plan.order.len() {
        return Ok(BigUint::from(1u32));
    }
    // Iterate candidates from the smallest mapped-neighbor adjacency list
    // and check the remaining back edges by membership.
    let anchors = &plan.back_edges[k];
    let pivot = anchors
        .iter()
        .copied()
        .min_by_key(|&a| data.neighbors(image[a]).len())
        .expect("connected query: every non-root has a mapped neighbor");
    let mut total = BigUint::zero();
    for &cand in data.neighbors(image[pivot]) {
        *visits += 1;
        if let Some(limit) = budget {
            if *visits > limit {
                return Err(Error::Resource(format!(
                    "homomorphism count exceeded the visit budget of {limit}"
                )));
            }
        }
        if anchors
            .iter()
            .all(|&a| a == pivot || data.has_edge(image[a], cand))
        {
            image.push(cand);
            total += extend(data, plan, image, budget, visits)?;
            image.pop();
        }
    }
    Ok(total)
}

/// Count maps V(query) -> V(data) sending every query edge to a data edge.
/// Non-injective: repeated images are allowed.
pub fn count_homomorphisms(query: &QueryGraph, data: &DataGraph) -> BigUint {
    count_homomorphisms_budgeted(query, data, None).expect("no budget to exceed")
}

/// Budgeted variant for ground-truth computation at experiment scale; the
/// budget caps candidate visits across the whole search.
pub fn count_homomorphisms_budgeted(
    query: &QueryGraph,
    data: &DataGraph,
    budget: Option<u64>,
) -> Result<BigUint> {
    if data.node_count() == 0 {
        return Ok(BigUint::zero());
    }
    let plan = plan(query);
    let roots: Vec<u32> = (0..data.node_count() as u32).collect();
    let partials: Vec<Result<BigUint>> = roots
        .par_iter()
        .map(|&root| {
            let mut image = vec![root];
            let mut visits = 0u64;
            extend(data, &plan, &mut image, budget, &mut visits)
        })
        .collect();
    let mut total = BigUint::zero();
    for partial in partials {
        total += partial?;
    }
    Ok(total)
}

/// Independent cross-check for cycle queries: trace(A^k).
pub fn cycle_count_via_matrix(k: usize, data: &DataGraph) -> Result<BigUint> {
    if !(3..=5).contains(&k) {
        return Err(Error::domain(format!("cycle length must be in [3, 5], got {k}")));
    }
    let n = data.node_count();
    if n > MATRIX_NODE_GUARD {
        return Err(Error::Resource(format!(
            "matrix cross-check limited to {MATRIX_NODE_GUARD} nodes, got {n}"
        )));
    }
    // Entries of A^k for k <= 5 and n <= 2000 fit u128 comfortably
    // (bounded by n^(k-1) <= 2000^4 < 2^45).
    let mut power: Vec<Vec<u128>> = (0..n)
        .map(|i| {
            let mut row = vec![0u128; n];
            for &j in data.neighbors(i as u32) {
                row[j as usize] = 1;
            }
            row
        })
        .collect();
    for _ in 1..k {
        let mut next = vec![vec![0u128; n]; n];
        for i in 0..n {
            for (l, &p) in power[i].iter().enumerate() {
                if p == 0 {
                    continue;
                }
                for &j in data.neighbors(l as u32) {
                    next[i][j as usize] += p;
                }
            }
        }
        power = next;
    }
    let trace: u128 = (0..n).map(|i| power[i][i]).sum();
    Ok(BigUint::from(trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{enumerate_connected_graphs, lookup_named_query};
    use crate::relation::z_relation;

    fn graph(pairs: &[(i64, i64)]) -> DataGraph {
        DataGraph::from_relation(&Relation::from_pairs(pairs.to_vec()).unwrap().symmetrize())
    }

    fn k3_graph() -> DataGraph {
        graph(&[(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn triangle_into_single_edge_is_zero() {
        let q = lookup_named_query("K3").unwrap();
        assert!(count_homomorphisms(&q, &graph(&[(0, 1)])).is_zero());
    }

    #[test]
    fn triangle_into_triangle_is_six() {
        let q = lookup_named_query("K3").unwrap();
        assert_eq!(count_homomorphisms(&q, &k3_graph()), BigUint::from(6u32));
    }

    #[test]
    fn path3_into_symmetrized_z() {
        // Degrees 1, 2, 2, 1 so sum of squares is 10.
        let data = DataGraph::from_relation(&z_relation().symmetrize());
        let q = lookup_named_query("path3").unwrap();
        assert_eq!(count_homomorphisms(&q, &data), BigUint::from(10u32));
    }

    #[test]
    fn cycle4_into_single_edge() {
        let q = lookup_named_query("cycle4").unwrap();
        let data = graph(&[(0, 1)]);
        assert_eq!(count_homomorphisms(&q, &data), BigUint::from(2u32));
        assert_eq!(cycle_count_via_matrix(4, &data).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn matrix_trace_examples() {
        assert_eq!(cycle_count_via_matrix(3, &k3_graph()).unwrap(), BigUint::from(6u32));
        let edgeless = DataGraph {
            adjacency: vec![Vec::new(); 4],
            edge_count: 0,
        };
        assert!(cycle_count_via_matrix(3, &edgeless).unwrap().is_zero());
        assert!(cycle_count_via_matrix(6, &k3_graph()).is_err());
    }

    #[test]
    fn cycles_agree_with_matrix_trace() {
        let data = graph(&[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (2, 4), (4, 5)]);
        for (name, k) in [("K3", 3), ("cycle4", 4), ("cycle5", 5)] {
            let q = lookup_named_query(name).unwrap();
            assert_eq!(
                count_homomorphisms(&q, &data),
                cycle_count_via_matrix(k, &data).unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn edge_addition_is_monotone() {
        let before = graph(&[(0, 1), (1, 2), (2, 3)]);
        let after = graph(&[(0, 1), (1, 2), (2, 3), (1, 3)]);
        for q in enumerate_connected_graphs(4).unwrap() {
            let a = count_homomorphisms(&q, &before);
            let b = count_homomorphisms(&q, &after);
            assert!(a <= b, "{}", q.name);
        }
    }

    #[test]
    fn visit_budget_trips() {
        let q = lookup_named_query("path5").unwrap();
        let data = k3_graph();
        assert!(matches!(
            count_homomorphisms_budgeted(&q, &data, Some(1)),
            Err(Error::Resource(_))
        ));
        assert_eq!(
            count_homomorphisms_budgeted(&q, &data, Some(1_000_000)).unwrap(),
            count_homomorphisms(&q, &data)
        );
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let directed = Relation::from_pairs(vec![(0, 1), (1, 2)]).unwrap();
        let data = DataGraph::from_relation(&directed);
        assert_eq!(data.node_count(), 3);
        assert_eq!(data.edge_count(), 2);
        let q = lookup_named_query("path3").unwrap();
        // Path graph on 3 nodes: degrees 1, 2, 1 so hom(path3) = 6.
        assert_eq!(count_homomorphisms(&q, &data), BigUint::from(6u32));
    }
}
