use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ambibound::cache;
use ambibound::catalog::{catalog_names, lookup_named_query};
use ambibound::experiment::{
    aggregate_geomean, fit_origin_slope, read_csv, run_experiment, write_csv, ExperimentConfig,
};
use ambibound::homcount::{count_homomorphisms_budgeted, DataGraph};
use ambibound::lp::{build_program, compute_bound, write_lp_format, BuildOptions, LpStatus, Mode};
use ambibound::moments::GridSpec;
use ambibound::relation::{parse_edge_list, ParseOptions, Relation};
use ambibound::venn::{check_cover, refine_single_term, VennCover, BASIS_NAMES, DEFAULT_REFINE_TOL};

#[derive(Parser)]
#[command(
    name = "ambibound",
    about = "Pessimistic cardinality bounds from degree statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Dexterous,
    Ambidextrous,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Dexterous => Mode::Dexterous,
            ModeArg::Ambidextrous => Mode::Ambidextrous,
        }
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Use the fine 0.1-step statistics grid instead of the default 0.5.
    #[arg(long, global = true)]
    paper_grid: bool,
    /// Override the grid step for both statistic families.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Directory for cached moment grids.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        if let Some(step) = self.grid_step {
            GridSpec::with_step(step)
        } else if self.paper_grid {
            GridSpec::paper_grid()
        } else {
            GridSpec::default_grid()
        }
    }
}

#[derive(Args, Clone)]
struct IngestArgs {
    /// Add the transpose of every pair (undirected view).
    #[arg(long)]
    symmetrize: bool,
    /// Keep self-loops instead of dropping them.
    #[arg(long)]
    keep_self_loops: bool,
}

impl IngestArgs {
    fn options(&self) -> ParseOptions {
        ParseOptions {
            symmetrize: self.symmetrize,
            drop_self_loops: !self.keep_self_loops,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse an edge list and print summary statistics.
    Ingest {
        dataset: PathBuf,
        #[command(flatten)]
        ingest: IngestArgs,
    },
    /// Compute (and cache) the moment grid for a dataset.
    Moments {
        dataset: PathBuf,
        #[command(flatten)]
        ingest: IngestArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Write the grid to this file as well as the cache.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the entropic LP bound for a query shape on a dataset.
    Bound {
        dataset: PathBuf,
        /// Catalog shape name, e.g. K3, path4, cycle5.
        query: String,
        #[arg(long, value_enum, default_value = "ambidextrous")]
        mode: ModeArg,
        #[command(flatten)]
        ingest: IngestArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Dump the LP in text form to this path before solving.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Exactly count homomorphisms of a query shape into a dataset.
    Count {
        dataset: PathBuf,
        query: String,
        #[command(flatten)]
        ingest: IngestArgs,
        /// Abort if the backtracking search visits more candidates.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Check a nine-coefficient three-variable covering.
    CoverCheck {
        /// Nine comma-separated rationals: lines XY, YZ, ZX; within a line
        /// H(Y|X), I(X;Y), H(X|Y).
        coefficients: String,
    },
    /// Optimize the single-term moment bound w * ln M(p/w, q/w) for a dataset.
    Refine {
        dataset: PathBuf,
        p: f64,
        q: f64,
        #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
        tol: f64,
        #[command(flatten)]
        ingest: IngestArgs,
    },
    /// Run bounds and exact counts over datasets x shapes; emit CSV.
    Experiment {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Comma-separated catalog names; defaults to the full catalog.
        #[arg(long)]
        queries: Option<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        grid: GridArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate an experiment CSV: per-shape geometric means and the
    /// origin-passing fit of ambidextrous vs dexterous log errors.
    Report { csv: PathBuf },
}

fn load_relation(path: &PathBuf, opts: ParseOptions) -> Result<Relation> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_edge_list(text.as_bytes(), opts)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { dataset, ingest } => {
            let rel = load_relation(&dataset, ingest.options())?;
            println!("pairs: {}", rel.pairs().len());
            println!("left support: {}", rel.left_support());
            println!("right support: {}", rel.right_support());
            println!("max left degree: {}", rel.max_left_degree());
            println!("max right degree: {}", rel.max_right_degree());
            println!("symmetric: {}", rel.is_symmetric());
            println!("digest: {}", rel.digest());
        }
        Command::Moments {
            dataset,
            ingest,
            grid,
            out,
        } => {
            let rel = load_relation(&dataset, ingest.options())?;
            let spec = grid.spec();
            let moments = cache::load_or_build(&rel, &spec, grid.cache_dir.as_deref())?;
            if let Some(path) = &out {
                cache::write_grid(&moments, path)?;
            }
            println!(
                "dexterous points: {} per side; ambidextrous points: {}",
                moments.dex_left.len(),
                moments.ambi.len()
            );
            if let Some(dir) = &grid.cache_dir {
                println!(
                    "cached at {}",
                    cache::cache_path(dir, &rel.digest(), &spec).display()
                );
            }
        }
        Command::Bound {
            dataset,
            query,
            mode,
            ingest,
            grid,
            dump_lp,
        } => {
            let rel = load_relation(&dataset, ingest.options())?;
            let shape = lookup_named_query(&query)?;
            let moments = cache::load_or_build(&rel, &grid.spec(), grid.cache_dir.as_deref())?;
            let mode: Mode = mode.into();
            if let Some(path) = &dump_lp {
                let grids: Vec<_> = shape.edges.iter().map(|_| &moments).collect();
                let program = build_program(&shape, &grids, mode, BuildOptions::default())?;
                let file = fs::File::create(path)
                    .with_context(|| format!("creating {}", path.display()))?;
                write_lp_format(&program, file)?;
            }
            let bound = compute_bound(&shape, &moments, mode)?;
            match bound.status {
                LpStatus::Optimal => {
                    println!("{} {} ln_bound {:.12}", query, mode.label(), bound.ln_bound);
                    println!("{} {} bound {:.6e}", query, mode.label(), bound.bound);
                    println!("tight rows: {:?}", bound.tight_rows);
                }
                LpStatus::Unbounded => bail!("LP unbounded: statistics do not bound this shape"),
                LpStatus::NumericFailure => bail!("LP solve failed numerically"),
            }
        }
        Command::Count {
            dataset,
            query,
            ingest,
            budget,
        } => {
            let mut opts = ingest.options();
            opts.symmetrize = true;
            let rel = load_relation(&dataset, opts)?;
            let shape = lookup_named_query(&query)?;
            let data = DataGraph::from_relation(&rel);
            let count = count_homomorphisms_budgeted(&shape, &data, budget)?;
            println!("{count}");
        }
        Command::CoverCheck { coefficients } => {
            let cover = VennCover::parse(&coefficients)?;
            let verdict = check_cover(&cover);
            for (name, value) in BASIS_NAMES.iter().zip(verdict.basis) {
                println!("{name}: {value}");
            }
            if !verdict.applicable {
                bail!("inapplicable: an I coefficient exceeds its line's H coefficients");
            }
            if verdict.covering {
                println!("covering: yes");
            } else {
                bail!("covering: no (witness {})", verdict.witness.unwrap());
            }
        }
        Command::Refine {
            dataset,
            p,
            q,
            tol,
            ingest,
        } => {
            let rel = load_relation(&dataset, ingest.options())?;
            let (w, ln_bound) = refine_single_term(&rel, p, q, tol)?;
            println!("w_star {w:.9}");
            println!("ln_bound {ln_bound:.12}");
            println!("bound {:.6e}", ln_bound.exp());
        }
        Command::Experiment {
            datasets,
            queries,
            budget,
            grid,
            out,
        } => {
            let names: Vec<String> = match queries {
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
                None => catalog_names().into_iter().map(str::to_string).collect(),
            };
            for name in &names {
                lookup_named_query(name)?;
            }
            let mut config = ExperimentConfig {
                grid: grid.spec(),
                cache_dir: grid.cache_dir.clone(),
                ..ExperimentConfig::default()
            };
            if budget.is_some() {
                config.visit_budget = budget;
            }
            let rows = run_experiment(&datasets, &names, &config)?;
            write_csv(&rows, &out)?;
            let expected = datasets.len() * names.len();
            println!("wrote {} rows to {}", rows.len(), out.display());
            if rows.len() != expected {
                bail!("{} of {expected} rows missing (see warnings)", expected - rows.len());
            }
        }
        Command::Report { csv } => {
            let rows = read_csv(&csv)?;
            let skipped = rows.iter().filter(|r| r.true_count.is_none()).count();
            for agg in aggregate_geomean(&rows) {
                let fmt = |v: Option<f64>| {
                    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
                };
                println!(
                    "{}: n={} defined={} geomean_true={} geomean_dex={:.4e} geomean_ambi={:.4e} dex_rel={} ambi_rel={}",
                    agg.shape,
                    agg.n_rows,
                    agg.n_defined,
                    agg.geomean_true
                        .map(|v| format!("{v:.4e}"))
                        .unwrap_or_else(|| "-".into()),
                    agg.geomean_dex,
                    agg.geomean_ambi,
                    fmt(agg.mean_dex_rel),
                    fmt(agg.mean_ambi_rel),
                );
            }
            println!("rows with skipped exact counts: {skipped}");
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| Some((r.dex_rel?, r.ambi_rel?)))
                .collect();
            match fit_origin_slope(&points) {
                Ok(fit) => println!(
                    "origin fit: slope {:.4}, R^2 {:.4}, n {}",
                    fit.slope, fit.r_squared, fit.n_points
                ),
                Err(err) => println!("origin fit unavailable: {err}"),
            }
        }
    }
    Ok(())
}
