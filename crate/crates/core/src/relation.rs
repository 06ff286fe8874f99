//! Binary relations (directed pair sets) with degree statistics.
//!
//! A `Relation` is the immutable, indexed form of an edge list: a
//! deduplicated set of `(left, right)` pairs together with per-side degree
//! maps and the bi-degree histogram that every moment computation runs on.

use std::collections::HashMap;
use std::io::BufRead;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Options for [`parse_edge_list`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Insert both orientations of every edge.
    pub symmetrize: bool,
    /// Remove pairs `(a, a)` before symmetrization.
    pub drop_self_loops: bool,
}

/// An immutable set of directed pairs with degree statistics.
#[derive(Clone, Debug)]
pub struct Relation {
    pairs: Vec<(i64, i64)>,
    left_degree: HashMap<i64, u64>,
    right_degree: HashMap<i64, u64>,
    bidegree: HashMap<(u64, u64), u64>,
    symmetric: bool,
}

impl Relation {
    /// Build a relation from raw pairs. Duplicates are removed; an empty
    /// result is rejected because every downstream moment takes logs of
    /// degree data.
    pub fn from_pairs(mut pairs: Vec<(i64, i64)>) -> Result<Relation> {
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.is_empty() {
            return Err(Error::EmptyRelation);
        }

        let mut left_degree: HashMap<i64, u64> = HashMap::new();
        let mut right_degree: HashMap<i64, u64> = HashMap::new();
        for &(a, b) in &pairs {
            *left_degree.entry(a).or_insert(0) += 1;
            *right_degree.entry(b).or_insert(0) += 1;
        }

        let mut bidegree: HashMap<(u64, u64), u64> = HashMap::new();
        for &(a, b) in &pairs {
            let key = (left_degree[&a], right_degree[&b]);
            *bidegree.entry(key).or_insert(0) += 1;
        }

        // pairs are sorted, so the transpose test is a binary search.
        let symmetric = pairs
            .iter()
            .all(|&(a, b)| pairs.binary_search(&(b, a)).is_ok())
            && left_degree == right_degree;

        Ok(Relation {
            pairs,
            left_degree,
            right_degree,
            bidegree,
            symmetric,
        })
    }

    /// Union of the relation with its transpose.
    pub fn symmetrize(&self) -> Relation {
        let mut pairs = self.pairs.clone();
        pairs.extend(self.pairs.iter().map(|&(a, b)| (b, a)));
        Relation::from_pairs(pairs).expect("symmetrize of a nonempty relation is nonempty")
    }

    pub fn pairs(&self) -> &[(i64, i64)] {
        &self.pairs
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty relations
    }

    pub fn left_degree(&self) -> &HashMap<i64, u64> {
        &self.left_degree
    }

    pub fn right_degree(&self) -> &HashMap<i64, u64> {
        &self.right_degree
    }

    pub fn bidegree_histogram(&self) -> &HashMap<(u64, u64), u64> {
        &self.bidegree
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Number of distinct left values, `|A|`.
    pub fn left_support(&self) -> usize {
        self.left_degree.len()
    }

    /// Number of distinct right values, `|B|`.
    pub fn right_support(&self) -> usize {
        self.right_degree.len()
    }

    pub fn max_left_degree(&self) -> u64 {
        *self.left_degree.values().max().unwrap()
    }

    pub fn max_right_degree(&self) -> u64 {
        *self.right_degree.values().max().unwrap()
    }

    /// Stable content hash over the sorted pair list; keys the moment cache.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for &(a, b) in &self.pairs {
            hasher.update(a.to_le_bytes());
            hasher.update(b.to_le_bytes());
        }
        let out = hasher.finalize();
        let mut hex = String::with_capacity(32);
        for byte in &out[..16] {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Parse a SNAP-style edge list: one edge per line, two integer fields,
/// `#`-prefixed comment lines ignored.
pub fn parse_edge_list<R: BufRead>(input: R, options: ParseOptions) -> Result<Relation> {
    let mut pairs: Vec<(i64, i64)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let a = parse_token(tokens.next(), lineno)?;
        let b = parse_token(tokens.next(), lineno)?;
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected exactly two fields".into(),
            });
        }
        if options.drop_self_loops && a == b {
            continue;
        }
        pairs.push((a, b));
        if options.symmetrize {
            pairs.push((b, a));
        }
    }
    Relation::from_pairs(pairs)
}

fn parse_token(token: Option<&str>, line: usize) -> Result<i64> {
    let token = token.ok_or_else(|| Error::Parse {
        line,
        msg: "expected two fields, found fewer".into(),
    })?;
    token.parse::<i64>().map_err(|_| Error::Parse {
        line,
        msg: format!("non-integer token '{token}'"),
    })
}

/// The Z-shaped running example: `Z = {(1,2), (3,2), (3,4)}`.
pub fn z_relation() -> Relation {
    Relation::from_pairs(vec![(1, 2), (3, 2), (3, 4)]).unwrap()
}
