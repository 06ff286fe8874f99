//! The entropic linear program behind the pessimistic bound.
//!
//! Variables are joint entropies `h_S` for nonempty subsets `S` of query
//! vertices (`h_emptyset` is zero and eliminated). The program maximizes
//! `h_V` subject to Shannon elemental inequalities plus moment-derived
//! statistics rows; the optimum is the log of the cardinality bound.

mod simplex;

pub use simplex::{SimplexStatus, SparseRow as Row};

use std::collections::BTreeMap;
use std::io::Write;

use crate::catalog::QueryGraph;
use crate::error::{Error, Result};
use crate::moments::MomentGrid;

/// Which statistics family constrains the program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Dexterous,
    Ambidextrous,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Dexterous => "dexterous",
            Mode::Ambidextrous => "ambidextrous",
        }
    }
}

/// Knobs for program construction. `include_max_degree_rows` exists so the
/// closed-form reproductions (pure AGM) can drop the max-degree rows.
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub include_max_degree_rows: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            include_max_degree_rows: true,
        }
    }
}

/// LP over entropic coordinates; rows encode `coeffs . h <= rhs`.
#[derive(Clone, Debug)]
pub struct EntropicProgram {
    pub n: usize,
    pub rows: Vec<Row>,
}

/// Variable slot for the nonempty subset `mask`.
pub fn slot(mask: u32) -> usize {
    debug_assert!(mask != 0);
    (mask - 1) as usize
}

pub fn num_vars(n: usize) -> usize {
    (1usize << n) - 1
}

impl EntropicProgram {
    pub fn full_set_slot(&self) -> usize {
        slot((1u32 << self.n) - 1)
    }
}

fn push_coeff(coeffs: &mut Vec<(usize, f64)>, mask: u32, value: f64) {
    if mask == 0 || value == 0.0 {
        return;
    }
    let s = slot(mask);
    if let Some(entry) = coeffs.iter_mut().find(|(slot, _)| *slot == s) {
        entry.1 += value;
        return;
    }
    coeffs.push((s, value));
}

fn finish_row(mut coeffs: Vec<(usize, f64)>, rhs: f64) -> Row {
    coeffs.retain(|&(_, v)| v != 0.0);
    coeffs.sort_by_key(|&(slot, _)| slot);
    Row { coeffs, rhs }
}

/// Shannon elemental inequalities for `n` variables as `<=`-rows:
/// monotonicity `h_{V \ i} - h_V <= 0` and elemental submodularity
/// `h_{S+ij} + h_S - h_{S+i} - h_{S+j} <= 0`. Count: `n + C(n,2) 2^(n-2)`.
pub fn elemental_inequalities(n: usize) -> Result<Vec<Row>> {
    if !(1..=8).contains(&n) {
        return Err(Error::domain(format!(
            "elemental inequalities support 1 <= n <= 8, got {n}"
        )));
    }
    let full = (1u32 << n) - 1;
    let mut rows = Vec::new();
    for i in 0..n {
        let mut coeffs = Vec::new();
        push_coeff(&mut coeffs, full & !(1 << i), 1.0);
        push_coeff(&mut coeffs, full, -1.0);
        rows.push(finish_row(coeffs, 0.0));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let rest = full & !(1 << i) & !(1 << j);
            let mut s = rest;
            loop {
                let mut coeffs = Vec::new();
                push_coeff(&mut coeffs, s | (1 << i) | (1 << j), 1.0);
                push_coeff(&mut coeffs, s, 1.0);
                push_coeff(&mut coeffs, s | (1 << i), -1.0);
                push_coeff(&mut coeffs, s | (1 << j), -1.0);
                rows.push(finish_row(coeffs, 0.0));
                if s == 0 {
                    break;
                }
                s = (s - 1) & rest;
            }
        }
    }
    Ok(rows)
}

/// Statistics rows for one query edge `(u, v)` carrying the relation whose
/// moments are in `grid`. Both orientations are emitted: `u` as the left
/// column and `v` as the left column.
///
/// Per orientation with root `x` and leaf `y`:
///   - dexterous: `(1-p) h_x + p h_xy <= ln sum deg^p` for every grid `p`;
///   - max degree: `h_xy - h_x <= ln max_deg`;
///   - ambidextrous: `(p+q-1) h_xy + (1-p) h_x + (1-q) h_y <= ln M_p(R)_q`.
pub fn statistics_constraints(
    edge: (usize, usize),
    grid: &MomentGrid,
    mode: Mode,
) -> Result<Vec<Row>> {
    statistics_constraints_with(edge, grid, mode, BuildOptions::default())
}

pub fn statistics_constraints_with(
    edge: (usize, usize),
    grid: &MomentGrid,
    mode: Mode,
    opts: BuildOptions,
) -> Result<Vec<Row>> {
    let (u, v) = edge;
    if grid.dex_left.is_empty() || grid.dex_right.is_empty() {
        return Err(Error::Config(
            "moment grid has no dexterous points".into(),
        ));
    }
    if mode == Mode::Ambidextrous && grid.ambi.is_empty() {
        return Err(Error::Config(
            "ambidextrous mode requires ambidextrous grid points".into(),
        ));
    }

    let u_mask = 1u32 << u;
    let v_mask = 1u32 << v;
    let uv_mask = u_mask | v_mask;
    let mut rows = Vec::new();

    let orientations = [
        (u_mask, v_mask, &grid.dex_left, grid.max_left_degree),
        (v_mask, u_mask, &grid.dex_right, grid.max_right_degree),
    ];
    for (root, leaf, dex, max_degree) in orientations {
        for &(p, ln_norm) in dex.iter() {
            let mut coeffs = Vec::new();
            push_coeff(&mut coeffs, root, 1.0 - p);
            push_coeff(&mut coeffs, uv_mask, p);
            rows.push(finish_row(coeffs, ln_norm));
        }
        if opts.include_max_degree_rows {
            let mut coeffs = Vec::new();
            push_coeff(&mut coeffs, uv_mask, 1.0);
            push_coeff(&mut coeffs, root, -1.0);
            rows.push(finish_row(coeffs, (max_degree as f64).ln()));
        }
        if mode == Mode::Ambidextrous {
            for &(p, q, ln_m) in grid.ambi.iter() {
                let mut coeffs = Vec::new();
                push_coeff(&mut coeffs, uv_mask, p + q - 1.0);
                push_coeff(&mut coeffs, root, 1.0 - p);
                push_coeff(&mut coeffs, leaf, 1.0 - q);
                rows.push(finish_row(coeffs, ln_m));
            }
        }
    }
    Ok(rows)
}

/// Keep only the minimal rhs per coefficient pattern. Many grid points
/// collapse to the same pattern on degree-poor relations, and the two
/// orientations coincide on symmetric relations.
fn prune_rows(rows: Vec<Row>) -> Vec<Row> {
    let mut best: BTreeMap<Vec<(usize, u64)>, Row> = BTreeMap::new();
    for row in rows {
        let key: Vec<(usize, u64)> = row
            .coeffs
            .iter()
            .map(|&(slot, coeff)| (slot, coeff.to_bits()))
            .collect();
        match best.get(&key) {
            Some(existing) if existing.rhs <= row.rhs => {}
            _ => {
                best.insert(key, row);
            }
        }
    }
    best.into_values().collect()
}

/// Assemble the program for a query; `grids` holds one moment grid per
/// query edge, aligned with `query.edges` (pass the same grid repeatedly
/// for a self-join).
pub fn build_program(
    query: &QueryGraph,
    grids: &[&MomentGrid],
    mode: Mode,
    opts: BuildOptions,
) -> Result<EntropicProgram> {
    if grids.len() != query.edges.len() {
        return Err(Error::Config(format!(
            "expected {} moment grids, got {}",
            query.edges.len(),
            grids.len()
        )));
    }
    let mut rows = elemental_inequalities(query.n)?;
    let mut stats = Vec::new();
    for (&edge, grid) in query.edges.iter().zip(grids) {
        stats.extend(statistics_constraints_with(edge, grid, mode, opts)?);
    }
    rows.extend(prune_rows(stats));
    Ok(EntropicProgram { n: query.n, rows })
}

/// Outcome of one LP solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    NumericFailure,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub ln_value: f64,
    pub entropies: Vec<f64>,
    pub tight_rows: Vec<usize>,
}

pub fn solve_lp(program: &EntropicProgram) -> LpSolution {
    let nv = num_vars(program.n);
    let mut objective = vec![0.0; nv];
    objective[program.full_set_slot()] = 1.0;
    let outcome = simplex::maximize(nv, &program.rows, &objective);
    let status = match outcome.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Unbounded => LpStatus::Unbounded,
        SimplexStatus::NumericFailure => LpStatus::NumericFailure,
    };
    LpSolution {
        status,
        ln_value: if status == LpStatus::Optimal {
            outcome.objective
        } else {
            f64::INFINITY
        },
        entropies: outcome.solution,
        tight_rows: outcome.tight_rows,
    }
}

/// A solved pessimistic bound with its certificate.
#[derive(Clone, Debug)]
pub struct BoundResult {
    pub query_name: String,
    pub mode: Mode,
    pub ln_bound: f64,
    pub bound: f64,
    pub status: LpStatus,
    pub tight_rows: Vec<usize>,
}

/// Compute the bound for a query whose every edge carries the same relation
/// (the homomorphism-count self-join).
pub fn compute_bound(query: &QueryGraph, grid: &MomentGrid, mode: Mode) -> Result<BoundResult> {
    let grids: Vec<&MomentGrid> = query.edges.iter().map(|_| grid).collect();
    compute_bound_per_edge(query, &grids, mode)
}

/// General form: one moment grid per query edge.
pub fn compute_bound_per_edge(
    query: &QueryGraph,
    grids: &[&MomentGrid],
    mode: Mode,
) -> Result<BoundResult> {
    let program = build_program(query, grids, mode, BuildOptions::default())?;
    let solution = solve_lp(&program);
    Ok(BoundResult {
        query_name: query.name.clone(),
        mode,
        ln_bound: solution.ln_value,
        bound: solution.ln_value.exp(),
        status: solution.status,
        tight_rows: solution.tight_rows,
    })
}

/// Dump a program in the CPLEX LP text format for external cross-checking.
pub fn write_lp_format<W: Write>(program: &EntropicProgram, mut out: W) -> std::io::Result<()> {
    writeln!(out, "Maximize")?;
    writeln!(out, " obj: h{}", program.full_set_slot() + 1)?;
    writeln!(out, "Subject To")?;
    for (i, row) in program.rows.iter().enumerate() {
        let mut terms = String::new();
        for (k, &(slot, coeff)) in row.coeffs.iter().enumerate() {
            if k == 0 {
                terms.push_str(&format!("{coeff} h{}", slot + 1));
            } else if coeff >= 0.0 {
                terms.push_str(&format!(" + {coeff} h{}", slot + 1));
            } else {
                terms.push_str(&format!(" - {} h{}", -coeff, slot + 1));
            }
        }
        writeln!(out, " r{i}: {terms} <= {}", row.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for s in 0..num_vars(program.n) {
        writeln!(out, " h{} free", s + 1)?;
    }
    writeln!(out, "End")
}
