//! Bivariate moments of bi-degree sequences and single-sided degree norms.
//!
//! The central quantity is `M_p(R)_q = sum over pairs (a,b) of
//! deg(a)^(p-1) * deg(b)^(q-1)`, computed in the log domain from the
//! bi-degree histogram so a full parameter grid costs
//! O(#distinct degree pairs) per point instead of O(#pairs).

use std::collections::HashMap;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::relation::Relation;

/// Which column of the relation roots a dexterous norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Default tuple budget for the brute-force oracle.
pub const DEFAULT_CLAW_BUDGET: u64 = 1_000_000_000;

/// Two-pass max-shifted log-sum-exp; `terms` are natural logs of the summands.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `ln M_p(R)_q` for `p, q >= 1`.
pub fn ln_bivariate_moment(rel: &Relation, p: f64, q: f64) -> Result<f64> {
    if p < 1.0 || q < 1.0 || p.is_nan() || q.is_nan() {
        return Err(Error::domain(format!(
            "bivariate moment requires p, q >= 1, got p={p}, q={q}"
        )));
    }
    let terms: Vec<f64> = rel
        .bidegree_histogram()
        .iter()
        .map(|(&(dl, dr), &count)| {
            // Grouped so that swapping both (dl, dr) and (p, q) yields the
            // bit-identical term: symmetric relations get exactly
            // symmetric moments.
            (count as f64).ln() + ((p - 1.0) * (dl as f64).ln() + (q - 1.0) * (dr as f64).ln())
        })
        .collect();
    Ok(stable_sorted_lse(terms))
}

/// `ln sum_a deg(a)^p` over the chosen side, for `p >= 0`.
pub fn ln_dexterous_norm(rel: &Relation, p: f64, side: Side) -> Result<f64> {
    if p < 0.0 || p.is_nan() {
        return Err(Error::domain(format!(
            "dexterous norm requires p >= 0, got p={p}"
        )));
    }
    let degrees = match side {
        Side::Left => rel.left_degree(),
        Side::Right => rel.right_degree(),
    };
    // Aggregate equal degrees first; the degree multiset of a large graph
    // has far fewer distinct values than nodes.
    let mut by_degree: HashMap<u64, u64> = HashMap::new();
    for &d in degrees.values() {
        *by_degree.entry(d).or_insert(0) += 1;
    }
    let terms: Vec<f64> = by_degree
        .iter()
        .map(|(&d, &count)| (count as f64).ln() + p * (d as f64).ln())
        .collect();
    Ok(stable_sorted_lse(terms))
}

/// Sort terms before summation so results are independent of hash order.
fn stable_sorted_lse(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    log_sum_exp(&terms)
}

/// Precomputed `ln`-moments of one relation over parameter grids.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentGrid {
    pub relation_digest: String,
    /// `(p, ln sum_a deg(a)^p)` rooted on the left column.
    pub dex_left: Vec<(f64, f64)>,
    /// Same, rooted on the right column.
    pub dex_right: Vec<(f64, f64)>,
    /// `(p, q, ln M_p(R)_q)`.
    pub ambi: Vec<(f64, f64, f64)>,
    pub max_left_degree: u64,
    pub max_right_degree: u64,
}

fn normalize_grid(values: &[f64]) -> Result<Vec<f64>> {
    let mut out = values.to_vec();
    if out.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("grid contains NaN"));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    Ok(out)
}

fn normalize_pq_grid(values: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut out = values.to_vec();
    if out.iter().any(|(p, q)| p.is_nan() || q.is_nan()) {
        return Err(Error::domain("grid contains NaN"));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    Ok(out)
}

/// Evaluate the dexterous and ambidextrous grids for `rel`. Grid points are
/// independent pure computations; they are evaluated in parallel with a
/// fixed summation order inside each point.
pub fn build_moment_grid(
    rel: &Relation,
    dex_ps: &[f64],
    ambi_pqs: &[(f64, f64)],
) -> Result<MomentGrid> {
    let dex_ps = normalize_grid(dex_ps)?;
    let ambi_pqs = normalize_pq_grid(ambi_pqs)?;
    if let Some(&p) = dex_ps.iter().find(|&&p| p < 0.0) {
        return Err(Error::domain(format!("dexterous grid point p={p} < 0")));
    }
    if let Some(&(p, q)) = ambi_pqs.iter().find(|&&(p, q)| p < 1.0 || q < 1.0) {
        return Err(Error::domain(format!(
            "ambidextrous grid point ({p}, {q}) outside [1, inf)^2"
        )));
    }

    let dex_left: Vec<(f64, f64)> = dex_ps
        .par_iter()
        .map(|&p| Ok((p, ln_dexterous_norm(rel, p, Side::Left)?)))
        .collect::<Result<_>>()?;
    let dex_right: Vec<(f64, f64)> = dex_ps
        .par_iter()
        .map(|&p| Ok((p, ln_dexterous_norm(rel, p, Side::Right)?)))
        .collect::<Result<_>>()?;
    let ambi: Vec<(f64, f64, f64)> = ambi_pqs
        .par_iter()
        .map(|&(p, q)| Ok((p, q, ln_bivariate_moment(rel, p, q)?)))
        .collect::<Result<_>>()?;

    Ok(MomentGrid {
        relation_digest: rel.digest(),
        dex_left,
        dex_right,
        ambi,
        max_left_degree: rel.max_left_degree(),
        max_right_degree: rel.max_right_degree(),
    })
}

/// A named grid specification: step sizes over the standard parameter ranges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dex_max: f64,
    pub dex_step: f64,
    pub ambi_max: f64,
    pub ambi_step: f64,
}

impl GridSpec {
    /// Coarse default: convexity of `ln M` means little is lost at step 0.5.
    pub fn default_grid() -> GridSpec {
        GridSpec {
            dex_max: 50.0,
            dex_step: 0.5,
            ambi_max: 10.0,
            ambi_step: 0.5,
        }
    }

    /// Fine 0.1-step grids: dexterous p in [0, 50], ambidextrous [1, 10]^2.
    pub fn paper_grid() -> GridSpec {
        GridSpec {
            dex_max: 50.0,
            dex_step: 0.1,
            ambi_max: 10.0,
            ambi_step: 0.1,
        }
    }

    pub fn with_step(step: f64) -> GridSpec {
        GridSpec {
            dex_step: step,
            ambi_step: step,
            ..GridSpec::default_grid()
        }
    }

    /// Dexterous points `{0, step, ..., dex_max}`, generated from integer
    /// multiples so the grid is reproducible.
    pub fn dex_points(&self) -> Vec<f64> {
        let n = (self.dex_max / self.dex_step).round() as usize;
        (0..=n).map(|i| i as f64 * self.dex_step).collect()
    }

    /// Ambidextrous points `{1, 1+step, ..., ambi_max}^2`.
    pub fn ambi_points(&self) -> Vec<(f64, f64)> {
        let n = ((self.ambi_max - 1.0) / self.ambi_step).round() as usize;
        let axis: Vec<f64> = (0..=n).map(|i| 1.0 + i as f64 * self.ambi_step).collect();
        let mut out = Vec::with_capacity(axis.len() * axis.len());
        for &p in &axis {
            for &q in &axis {
                out.push((p, q));
            }
        }
        out
    }

    /// Stable token used in cache file names.
    pub fn cache_token(&self) -> String {
        format!(
            "d{}x{}a{}x{}",
            self.dex_max, self.dex_step, self.ambi_max, self.ambi_step
        )
    }
}

pub fn build_grid_with_spec(rel: &Relation, spec: &GridSpec) -> Result<MomentGrid> {
    build_moment_grid(rel, &spec.dex_points(), &spec.ambi_points())
}

/// Exact number of claw-pair tuples
/// `(a_1, ..., a_{q-1}, b, a, b_1, ..., b_{p-1})` with `(a_i, b)`, `(a, b)`,
/// and `(a, b_j)` all in the relation. Brute-force enumeration over node
/// tuples; the independent oracle for `M_p(R)_q` at integer parameters.
pub fn enumerate_claw_pairs(rel: &Relation, p: u32, q: u32) -> Result<BigUint> {
    enumerate_claw_pairs_with_budget(rel, p, q, DEFAULT_CLAW_BUDGET)
}

pub fn enumerate_claw_pairs_with_budget(
    rel: &Relation,
    p: u32,
    q: u32,
    budget: u64,
) -> Result<BigUint> {
    if p < 1 || q < 1 {
        return Err(Error::domain("claw-pair enumeration requires p, q >= 1"));
    }
    let exponent = (p + q - 1) as f64;
    let work = (rel.len() as f64).powf(exponent);
    if work > budget as f64 {
        return Err(Error::Resource(format!(
            "claw-pair enumeration needs ~{work:.3e} tuples, budget is {budget}"
        )));
    }

    let member: std::collections::HashSet<(i64, i64)> = rel.pairs().iter().cloned().collect();
    let mut lefts: Vec<i64> = rel.left_degree().keys().cloned().collect();
    let mut rights: Vec<i64> = rel.right_degree().keys().cloned().collect();
    lefts.sort_unstable();
    rights.sort_unstable();

    // Count by nested enumeration: center pair (a, b), then q-1 left slots
    // attached to b, then p-1 right slots attached to a.
    fn count_slots(
        candidates: &[i64],
        slots: u32,
        accept: &dyn Fn(i64) -> bool,
    ) -> u128 {
        if slots == 0 {
            return 1;
        }
        let mut total: u128 = 0;
        for &x in candidates {
            if accept(x) {
                total += count_slots(candidates, slots - 1, accept);
            }
        }
        total
    }

    let mut total: u128 = 0;
    for &(a, b) in rel.pairs() {
        let left_count = count_slots(&lefts, q - 1, &|x| member.contains(&(x, b)));
        let right_count = count_slots(&rights, p - 1, &|y| member.contains(&(a, y)));
        total += left_count * right_count;
    }
    Ok(BigUint::from(total))
}
