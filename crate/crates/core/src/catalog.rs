//! Join templates: simple connected graphs on up to five vertices.
//!
//! Enumeration generates every edge subset of `K_n`, filters connectivity,
//! and canonicalizes by the minimum adjacency code over all vertex
//! permutations; `n <= 5` keeps that exact approach trivial. The naming
//! table pins the display names used in report columns.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A small simple connected query graph; vertices `0..n-1` are the join
/// attributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGraph {
    pub n: usize,
    /// Unordered edges with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub name: String,
    /// Isomorphism-invariant encoding (minimum adjacency bitmask).
    pub canonical_code: u32,
}

impl QueryGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

fn pair_index(n: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < n);
    let mut idx = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if (i, j) == (u, v) {
                return idx;
            }
            idx += 1;
        }
    }
    unreachable!()
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

fn edges_to_mask(n: usize, edges: &[(usize, usize)]) -> u32 {
    let mut mask = 0u32;
    for &(u, v) in edges {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        mask |= 1 << pair_index(n, u, v);
    }
    mask
}

fn mask_to_edges(n: usize, mask: u32) -> Vec<(usize, usize)> {
    all_pairs(n)
        .into_iter()
        .enumerate()
        .filter(|&(idx, _)| mask & (1 << idx) != 0)
        .map(|(_, pair)| pair)
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(current: &mut Vec<usize>, remaining: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(current.clone());
            return;
        }
        for i in 0..remaining.len() {
            let x = remaining.remove(i);
            current.push(x);
            rec(current, remaining, out);
            current.pop();
            remaining.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Minimum edge bitmask over all vertex relabelings.
pub fn canonical_code(n: usize, edges: &[(usize, usize)]) -> u32 {
    let mut best = u32::MAX;
    for perm in permutations(n) {
        let relabeled: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (perm[u], perm[v]);
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        best = best.min(edges_to_mask(n, &relabeled));
    }
    best
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let other = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Display names keyed by the graph they label. The two entries whose
/// names encode complements (`K3u2K1c`, `wheel4`) are spelled out from
/// those definitions.
type NamedEdgeList = (&'static str, usize, Vec<(usize, usize)>);

fn named_edge_lists() -> Vec<NamedEdgeList> {
    vec![
        ("K1", 1, vec![]),
        ("K2", 2, vec![(0, 1)]),
        ("path3", 3, vec![(0, 1), (0, 2)]),
        ("K3", 3, vec![(0, 1), (0, 2), (1, 2)]),
        ("claw", 4, vec![(0, 1), (0, 2), (0, 3)]),
        ("path4", 4, vec![(0, 1), (1, 2), (2, 3)]),
        ("pan3", 4, vec![(1, 2), (1, 3), (2, 3), (0, 3)]),
        ("cycle4", 4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]),
        ("fan2", 4, vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]),
        (
            "K4",
            4,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        ),
        ("K14", 5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]),
        ("chair", 5, vec![(1, 2), (2, 3), (3, 4), (0, 2)]),
        ("path5", 5, vec![(3, 4), (0, 4), (0, 1), (1, 2)]),
        ("cricket", 5, vec![(2, 3), (0, 3), (0, 2), (0, 1), (0, 4)]),
        ("pan4", 5, vec![(3, 4), (0, 4), (0, 1), (1, 2), (1, 3)]),
        ("bull", 5, vec![(3, 4), (0, 4), (0, 1), (1, 2), (1, 4)]),
        ("pan4c", 5, vec![(3, 4), (0, 4), (0, 1), (1, 2), (0, 3)]),
        ("cycle5", 5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
        (
            "dart",
            5,
            vec![(3, 4), (0, 4), (0, 1), (1, 2), (1, 4), (2, 4)],
        ),
        (
            "K23",
            5,
            vec![(3, 4), (0, 4), (0, 1), (1, 2), (1, 3), (2, 4)],
        ),
        (
            "butterfly",
            5,
            vec![(3, 4), (0, 4), (0, 1), (1, 2), (0, 2), (0, 3)],
        ),
        (
            "house",
            5,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 4)],
        ),
        (
            "kite",
            5,
            vec![(3, 4), (0, 4), (0, 1), (1, 2), (0, 2), (2, 4)],
        ),
        (
            "K3u2K1c",
            5,
            vec![(0, 3), (0, 4), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)],
        ),
        (
            "fan3",
            5,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 2), (0, 3)],
        ),
        (
            "clawuK1c",
            5,
            vec![(3, 4), (0, 4), (0, 1), (1, 2), (0, 3), (1, 3), (1, 4)],
        ),
        (
            "P2uP3c",
            5,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3), (2, 4)],
        ),
        (
            "P3u2K1c",
            5,
            vec![
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (0, 4),
                (2, 4),
                (1, 4),
                (1, 3),
            ],
        ),
        (
            "wheel4",
            5,
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (2, 3),
                (3, 4),
                (1, 4),
            ],
        ),
        (
            "K5_e",
            5,
            vec![
                (1, 2),
                (2, 3),
                (3, 4),
                (0, 4),
                (0, 1),
                (1, 3),
                (0, 3),
                (0, 2),
                (2, 4),
            ],
        ),
        (
            "K5",
            5,
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
            ],
        ),
    ]
}

fn name_by_code() -> HashMap<(usize, u32), &'static str> {
    named_edge_lists()
        .into_iter()
        .map(|(name, n, edges)| ((n, canonical_code(n, &edges)), name))
        .collect()
}

/// The 29 catalog names (three to five vertices) in edge-count order.
pub fn catalog_names() -> Vec<&'static str> {
    enumerate_all_queries()
        .iter()
        .map(|g| {
            named_edge_lists()
                .iter()
                .find(|(name, _, _)| *name == g.name)
                .map(|(name, _, _)| *name)
                .expect("catalog graph has a table name")
        })
        .collect()
}

/// One representative per isomorphism class of simple connected graphs on
/// `n` vertices, ordered by edge count then canonical code.
pub fn enumerate_connected_graphs(n: usize) -> Result<Vec<QueryGraph>> {
    if !(1..=5).contains(&n) {
        return Err(Error::domain(format!(
            "graph enumeration supports 1 <= n <= 5, got {n}"
        )));
    }
    let pair_count = n * (n - 1) / 2;
    let names = name_by_code();
    let mut by_code: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    for mask in 0u32..(1 << pair_count) {
        let edges = mask_to_edges(n, mask);
        if !is_connected(n, &edges) {
            continue;
        }
        let code = canonical_code(n, &edges);
        by_code.entry(code).or_insert_with(|| mask_to_edges(n, code));
    }
    let mut graphs: Vec<QueryGraph> = by_code
        .into_iter()
        .map(|(code, edges)| {
            let name = names
                .get(&(n, code))
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("g{n}_{code:03x}"));
            QueryGraph {
                n,
                edges,
                name,
                canonical_code: code,
            }
        })
        .collect();
    graphs.sort_by(|a, b| {
        (a.edge_count(), a.canonical_code).cmp(&(b.edge_count(), b.canonical_code))
    });
    Ok(graphs)
}

/// The experiment catalog: every connected query on 3, 4, and 5 vertices.
pub fn enumerate_all_queries() -> Vec<QueryGraph> {
    (3..=5)
        .flat_map(|n| enumerate_connected_graphs(n).unwrap())
        .collect()
}

pub fn lookup_named_query(name: &str) -> Result<QueryGraph> {
    let table = named_edge_lists();
    for (candidate, n, edges) in &table {
        if *candidate == name {
            let code = canonical_code(*n, edges);
            let mut edges = mask_to_edges(*n, code);
            edges.sort_unstable();
            return Ok(QueryGraph {
                n: *n,
                edges,
                name: name.to_string(),
                canonical_code: code,
            });
        }
    }
    let mut valid: Vec<&str> = table.iter().map(|(name, _, _)| *name).collect();
    valid.sort_unstable();
    Err(Error::UnknownQuery {
        name: name.to_string(),
        valid: valid.join(", "),
    })
}

/// Brute-force isomorphism test, used by tests to validate canonical codes.
pub fn isomorphic(a: &QueryGraph, b: &QueryGraph) -> bool {
    if a.n != b.n || a.edge_count() != b.edge_count() {
        return false;
    }
    let target = edges_to_mask(b.n, &b.edges);
    permutations(a.n).into_iter().any(|perm| {
        let relabeled: Vec<(usize, usize)> = a
            .edges
            .iter()
            .map(|&(u, v)| {
                let (x, y) = (perm[u], perm[v]);
                if x < y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        edges_to_mask(a.n, &relabeled) == target
    })
}
