//! End-to-end experiment pipeline: run both bounds and the exact count
//! over datasets x query shapes, emit CSV, aggregate geometric means, and
//! fit the origin-passing regression of log relative errors.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::cache;
use crate::catalog::lookup_named_query;
use crate::error::{Error, Result};
use crate::homcount::{count_homomorphisms_budgeted, DataGraph};
use crate::lp::{compute_bound, LpStatus, Mode};
use crate::moments::GridSpec;
use crate::relation::{parse_edge_list, ParseOptions};

/// One (dataset, shape) measurement. Relative errors are log10(bound/true)
/// and only defined when the true count is positive and within budget.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub dataset: String,
    pub shape: String,
    pub true_count: Option<BigUint>,
    pub dex: f64,
    pub ambi: f64,
    pub dex_rel: Option<f64>,
    pub ambi_rel: Option<f64>,
}

impl ExperimentRow {
    pub fn defined(&self) -> bool {
        self.dex_rel.is_some() && self.ambi_rel.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub visit_budget: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub parse: ParseOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridSpec::default_grid(),
            visit_budget: Some(crate::homcount::DEFAULT_VISIT_BUDGET),
            cache_dir: None,
            parse: ParseOptions {
                symmetrize: true,
                drop_self_loops: true,
            },
        }
    }
}

fn ln_biguint(n: &BigUint) -> f64 {
    // Counts beyond f64 range get their top 64 bits converted and the
    // discarded bits folded back in as a multiple of ln 2.
    if let Some(v) = n.to_f64() {
        if v.is_finite() {
            return v.ln();
        }
    }
    let shift = n.bits() - 64;
    let top = (n >> shift).to_f64().expect("64-bit value fits f64");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn log10_ratio(bound: f64, true_count: &BigUint) -> f64 {
    (bound.ln() - ln_biguint(true_count)) / std::f64::consts::LN_10
}

/// Run every requested shape against every dataset. Per-dataset failures
/// are isolated: the dataset is skipped with a warning on stderr and the
/// remaining rows are still produced.
pub fn run_experiment(
    datasets: &[PathBuf],
    queries: &[String],
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::new();
    for path in datasets {
        match run_dataset(path, queries, config) {
            Ok(mut dataset_rows) => rows.append(&mut dataset_rows),
            Err(err) => eprintln!("warning: skipping {}: {err}", path.display()),
        }
    }
    rows.sort_by(|a, b| (&a.dataset, &a.shape).cmp(&(&b.dataset, &b.shape)));
    Ok(rows)
}

fn run_dataset(
    path: &Path,
    queries: &[String],
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let rel = parse_edge_list(text.as_bytes(), config.parse)?;
    let dataset = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let grid = cache::load_or_build(&rel, &config.grid, config.cache_dir.as_deref())?;
    let data = DataGraph::from_relation(&rel);

    let mut rows = Vec::new();
    for name in queries {
        let query = lookup_named_query(name)?;
        let dex = compute_bound(&query, &grid, Mode::Dexterous)?;
        let ambi = compute_bound(&query, &grid, Mode::Ambidextrous)?;
        if dex.status != LpStatus::Optimal || ambi.status != LpStatus::Optimal {
            return Err(Error::DegenerateInput(format!(
                "bound LP did not reach an optimum for shape {name}"
            )));
        }
        let true_count = match count_homomorphisms_budgeted(&query, &data, config.visit_budget) {
            Ok(count) => Some(count),
            Err(Error::Resource(msg)) => {
                eprintln!("warning: {}/{name}: {msg}; exact count skipped", dataset);
                None
            }
            Err(err) => return Err(err),
        };
        let (dex_rel, ambi_rel) = match &true_count {
            Some(count) if !count.is_zero() => (
                Some(log10_ratio(dex.bound, count)),
                Some(log10_ratio(ambi.bound, count)),
            ),
            _ => (None, None),
        };
        rows.push(ExperimentRow {
            dataset: dataset.clone(),
            shape: name.clone(),
            true_count,
            dex: dex.bound,
            ambi: ambi.bound,
            dex_rel,
            ambi_rel,
        });
    }
    Ok(rows)
}

/// Per-shape aggregate across datasets: geometric means of the counts and
/// bounds, arithmetic means of the log10 relative errors (the geometric
/// mean of the ratios).
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub shape: String,
    pub geomean_true: Option<f64>,
    pub geomean_dex: f64,
    pub geomean_ambi: f64,
    pub mean_dex_rel: Option<f64>,
    pub mean_ambi_rel: Option<f64>,
    pub n_rows: usize,
    pub n_defined: usize,
}

pub fn aggregate_geomean(rows: &[ExperimentRow]) -> Vec<AggregateRow> {
    let mut shapes: Vec<String> = rows.iter().map(|r| r.shape.clone()).collect();
    shapes.sort();
    shapes.dedup();

    let mut out = Vec::new();
    for shape in shapes {
        let group: Vec<&ExperimentRow> = rows.iter().filter(|r| r.shape == shape).collect();
        let n_rows = group.len();
        let geomean = |values: Vec<f64>| -> f64 {
            (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
        };
        let geomean_dex = geomean(group.iter().map(|r| r.dex).collect());
        let geomean_ambi = geomean(group.iter().map(|r| r.ambi).collect());

        let defined: Vec<&&ExperimentRow> = group.iter().filter(|r| r.defined()).collect();
        let n_defined = defined.len();
        if n_defined == 0 {
            eprintln!("warning: shape {shape}: no defined rows; relative errors omitted");
        }
        let mean = |pick: fn(&ExperimentRow) -> Option<f64>| -> Option<f64> {
            if defined.is_empty() {
                None
            } else {
                Some(defined.iter().filter_map(|r| pick(r)).sum::<f64>() / defined.len() as f64)
            }
        };
        let geomean_true = if defined.is_empty() {
            None
        } else {
            Some(
                (defined
                    .iter()
                    .map(|r| ln_biguint(r.true_count.as_ref().unwrap()))
                    .sum::<f64>()
                    / defined.len() as f64)
                    .exp(),
            )
        };
        out.push(AggregateRow {
            shape,
            geomean_true,
            geomean_dex,
            geomean_ambi,
            mean_dex_rel: mean(|r| r.dex_rel),
            mean_ambi_rel: mean(|r| r.ambi_rel),
            n_rows,
            n_defined,
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least squares through the origin: slope = sum(xy)/sum(x^2), with
/// r^2 = 1 - sum((y - slope x)^2)/sum(y^2) (origin-model convention).
pub fn fit_origin_slope(points: &[(f64, f64)]) -> Result<FitResult> {
    let sum_xx: f64 = points.iter().map(|&(x, _)| x * x).sum();
    if points.is_empty() || sum_xx == 0.0 {
        return Err(Error::DegenerateInput(
            "origin fit needs at least one point with nonzero x".into(),
        ));
    }
    let sum_xy: f64 = points.iter().map(|&(x, y)| x * y).sum();
    let slope = sum_xy / sum_xx;
    let sum_yy: f64 = points.iter().map(|&(_, y)| y * y).sum();
    let residual: f64 = points
        .iter()
        .map(|&(x, y)| {
            let e = y - slope * x;
            e * e
        })
        .sum();
    let r_squared = if sum_yy == 0.0 {
        1.0
    } else {
        1.0 - residual / sum_yy
    };
    Ok(FitResult {
        slope,
        r_squared,
        n_points: points.len(),
    })
}

pub const CSV_HEADER: &str = "dataset,shape,true,dex,ambi,dex_rel,ambi_rel";

pub fn write_csv(rows: &[ExperimentRow], destination: &Path) -> Result<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let true_field = row
            .true_count
            .as_ref()
            .map(|c| c.to_string())
            .unwrap_or_default();
        let rel_field = |v: Option<f64>| v.map(|v| format!("{v:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.16e},{:.16e},{},{}\n",
            row.dataset,
            row.shape,
            true_field,
            row.dex,
            row.ambi,
            rel_field(row.dex_rel),
            rel_field(row.ambi_rel),
        ));
    }
    fs::write(destination, out).map_err(|e| Error::io(destination.display().to_string(), e))
}

/// Parse a file produced by `write_csv`; used for round-trip checks and by
/// the report subcommand.
pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let display = path.display().to_string();
    let bad = |msg: String| Error::CacheFormat {
        path: display.clone(),
        msg,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(bad("missing experiment CSV header".into())),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 fields, got {}", fields.len())));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(format!("bad real '{s}'")))
            }
        };
        let true_count = if fields[2].is_empty() {
            None
        } else {
            Some(
                fields[2]
                    .parse::<BigUint>()
                    .map_err(|_| bad(format!("bad count '{}'", fields[2])))?,
            )
        };
        rows.push(ExperimentRow {
            dataset: fields[0].to_string(),
            shape: fields[1].to_string(),
            true_count,
            dex: fields[3]
                .parse()
                .map_err(|_| bad(format!("bad real '{}'", fields[3])))?,
            ambi: fields[4]
                .parse()
                .map_err(|_| bad(format!("bad real '{}'", fields[4])))?,
            dex_rel: opt(fields[5])?,
            ambi_rel: opt(fields[6])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_dataset(dir: &Path, name: &str, pairs: &[(i64, i64)]) -> PathBuf {
        let path = dir.join(name);
        let mut file = fs::File::create(&path).unwrap();
        for (a, b) in pairs {
            writeln!(file, "{a}\t{b}").unwrap();
        }
        path
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            grid: GridSpec::with_step(1.0),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn z_dataset_two_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_dataset(dir.path(), "z.txt", &[(1, 2), (3, 2), (3, 4)]);
        let rows = run_experiment(
            &[path],
            &["K3".into(), "path3".into()],
            &small_config(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let k3 = rows.iter().find(|r| r.shape == "K3").unwrap();
        assert_eq!(k3.true_count, Some(BigUint::zero()));
        assert!(!k3.defined());
        let path3 = rows.iter().find(|r| r.shape == "path3").unwrap();
        assert_eq!(path3.true_count, Some(BigUint::from(10u32)));
        assert!(path3.defined());
        assert!(path3.dex >= 10.0 - 1e-6);
        assert!(path3.ambi <= path3.dex + 1e-6);
        assert!(path3.dex_rel.unwrap() >= -1e-9);
        assert!(path3.ambi_rel.unwrap() <= path3.dex_rel.unwrap() + 1e-9);
    }

    #[test]
    fn triangle_dataset_dominance() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_dataset(dir.path(), "tri.txt", &[(0, 1), (1, 2), (0, 2)]);
        let rows = run_experiment(&[path], &["K3".into()], &small_config()).unwrap();
        let row = &rows[0];
        assert_eq!(row.true_count, Some(BigUint::from(6u32)));
        assert!(row.dex >= row.ambi - 1e-9);
        assert!(row.ambi >= 6.0 - 1e-6);
    }

    #[test]
    fn empty_dataset_list() {
        assert!(run_experiment(&[], &["K3".into()], &small_config())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unreadable_dataset_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_dataset(dir.path(), "tri.txt", &[(0, 1), (1, 2), (0, 2)]);
        let missing = dir.path().join("missing.txt");
        let rows =
            run_experiment(&[missing, good], &["K3".into()], &small_config()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].dataset, "tri");
    }

    fn sample_rows() -> Vec<ExperimentRow> {
        vec![
            ExperimentRow {
                dataset: "a".into(),
                shape: "K3".into(),
                true_count: Some(BigUint::from(10u32)),
                dex: 100.0,
                ambi: 50.0,
                dex_rel: Some(1.0),
                ambi_rel: Some((50f64 / 10.0).log10()),
            },
            ExperimentRow {
                dataset: "b".into(),
                shape: "K3".into(),
                true_count: Some(BigUint::from(1000u32)),
                dex: 4000.0,
                ambi: 2000.0,
                dex_rel: Some(4f64.log10()),
                ambi_rel: Some(2f64.log10()),
            },
            ExperimentRow {
                dataset: "c".into(),
                shape: "K3".into(),
                true_count: Some(BigUint::zero()),
                dex: 3.0,
                ambi: 2.0,
                dex_rel: None,
                ambi_rel: None,
            },
        ]
    }

    #[test]
    fn aggregate_geomean_examples() {
        let agg = aggregate_geomean(&sample_rows());
        assert_eq!(agg.len(), 1);
        let row = &agg[0];
        assert_eq!(row.n_rows, 3);
        assert_eq!(row.n_defined, 2);
        // Geomean of true counts {10, 1000} is 100; zero row excluded from
        // relative statistics but not from the bound geomeans.
        assert!((row.geomean_true.unwrap() - 100.0).abs() < 1e-9);
        assert!((row.geomean_dex - (100.0f64 * 4000.0 * 3.0).cbrt()).abs() < 1e-9);
        let want_rel = 0.5 * (1.0 + 4f64.log10());
        assert!((row.mean_dex_rel.unwrap() - want_rel).abs() < 1e-12);
    }

    #[test]
    fn aggregate_single_row_is_identity() {
        let rows = vec![sample_rows().remove(0)];
        let agg = aggregate_geomean(&rows);
        assert!((agg[0].geomean_dex - 100.0).abs() < 1e-9);
        assert_eq!(agg[0].mean_dex_rel, Some(1.0));
    }

    #[test]
    fn aggregate_all_undefined_group() {
        let rows = vec![sample_rows().remove(2)];
        let agg = aggregate_geomean(&rows);
        assert_eq!(agg[0].n_defined, 0);
        assert_eq!(agg[0].mean_dex_rel, None);
        assert_eq!(agg[0].geomean_true, None);
    }

    #[test]
    fn origin_fit_examples() {
        let fit = fit_origin_slope(&[(1.0, 0.5), (2.0, 1.0)]).unwrap();
        assert_eq!(fit.slope, 0.5);
        assert_eq!(fit.r_squared, 1.0);

        let fit = fit_origin_slope(&[(1.0, 1.0), (1.0, -1.0)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);

        assert!(fit_origin_slope(&[]).is_err());
        assert!(fit_origin_slope(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn origin_fit_scale_equivariance() {
        let points = [(1.0, 0.7), (2.0, 1.9), (3.0, 2.2), (-1.0, -0.6)];
        let base = fit_origin_slope(&points).unwrap();
        let scaled: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, 3.5 * y)).collect();
        let fit = fit_origin_slope(&scaled).unwrap();
        assert!((fit.slope - 3.5 * base.slope).abs() < 1e-12);
        assert!((fit.r_squared - base.r_squared).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = sample_rows();
        write_csv(&rows, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(rows, back);

        write_csv(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn large_count_logarithm_is_accurate() {
        let big = BigUint::from(10u32).pow(30);
        assert!((ln_biguint(&big) - 30.0 * 10f64.ln()).abs() < 1e-9);
        let huge = BigUint::from(7u32).pow(500);
        assert!((ln_biguint(&huge) - 500.0 * 7f64.ln()).abs() < 1e-6 * 500.0);
    }
}
