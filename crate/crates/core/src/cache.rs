//! Disk cache for moment grids.
//!
//! Format: one versioned header line, then CSV rows `kind,p,q,ln_value`
//! with `kind` in `{dex_left, dex_right, ambi}`. Values are printed with 17
//! significant digits so a round trip is bit-stable.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::moments::{GridSpec, MomentGrid};

const HEADER_TAG: &str = "ambibound-moments v1";

pub fn cache_file_name(digest: &str, spec: &GridSpec) -> String {
    format!("{digest}-{}.moments", spec.cache_token())
}

pub fn cache_path(dir: &Path, digest: &str, spec: &GridSpec) -> PathBuf {
    dir.join(cache_file_name(digest, spec))
}

pub fn write_grid(grid: &MomentGrid, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "{HEADER_TAG} digest={} max_left={} max_right={}\n",
        grid.relation_digest, grid.max_left_degree, grid.max_right_degree
    ));
    out.push_str("kind,p,q,ln_value\n");
    for &(p, v) in &grid.dex_left {
        out.push_str(&format!("dex_left,{},1,{:.16e}\n", fmt_param(p), v));
    }
    for &(p, v) in &grid.dex_right {
        out.push_str(&format!("dex_right,{},1,{:.16e}\n", fmt_param(p), v));
    }
    for &(p, q, v) in &grid.ambi {
        out.push_str(&format!(
            "ambi,{},{},{:.16e}\n",
            fmt_param(p),
            fmt_param(q),
            v
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn fmt_param(p: f64) -> String {
    // Grid parameters are small decimals; 17 significant digits round-trip.
    format!("{p:.16e}")
}

pub fn read_grid(path: &Path) -> Result<MomentGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let display = path.display().to_string();
    let bad = |msg: &str| Error::CacheFormat {
        path: display.clone(),
        msg: msg.to_string(),
    };

    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if !header.starts_with(HEADER_TAG) {
        return Err(bad("unrecognized header"));
    }
    let mut digest = None;
    let mut max_left = None;
    let mut max_right = None;
    for token in header.split_whitespace() {
        if let Some(v) = token.strip_prefix("digest=") {
            digest = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("max_left=") {
            max_left = v.parse::<u64>().ok();
        } else if let Some(v) = token.strip_prefix("max_right=") {
            max_right = v.parse::<u64>().ok();
        }
    }
    let relation_digest = digest.ok_or_else(|| bad("missing digest"))?;
    let max_left_degree = max_left.ok_or_else(|| bad("missing max_left"))?;
    let max_right_degree = max_right.ok_or_else(|| bad("missing max_right"))?;

    let columns = lines.next().ok_or_else(|| bad("missing column line"))?;
    if columns != "kind,p,q,ln_value" {
        return Err(bad("unexpected column line"));
    }

    let mut grid = MomentGrid {
        relation_digest,
        dex_left: Vec::new(),
        dex_right: Vec::new(),
        ambi: Vec::new(),
        max_left_degree,
        max_right_degree,
    };
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("row does not have four fields"));
        }
        let p: f64 = fields[1].parse().map_err(|_| bad("bad p"))?;
        let q: f64 = fields[2].parse().map_err(|_| bad("bad q"))?;
        let v: f64 = fields[3].parse().map_err(|_| bad("bad ln_value"))?;
        match fields[0] {
            "dex_left" => grid.dex_left.push((p, v)),
            "dex_right" => grid.dex_right.push((p, v)),
            "ambi" => grid.ambi.push((p, q, v)),
            other => return Err(bad(&format!("unknown kind '{other}'"))),
        }
    }
    Ok(grid)
}

/// Load a matching cached grid or compute and cache one. Digest or grid-spec
/// mismatches fall through to recomputation.
pub fn load_or_build(
    rel: &crate::relation::Relation,
    spec: &GridSpec,
    cache_dir: Option<&Path>,
) -> Result<MomentGrid> {
    let digest = rel.digest();
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, &digest, spec);
        if path.exists() {
            if let Ok(grid) = read_grid(&path) {
                if grid.relation_digest == digest {
                    return Ok(grid);
                }
            }
        }
    }
    let grid = crate::moments::build_grid_with_spec(rel, spec)?;
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        write_grid(&grid, &cache_path(dir, &digest, spec))?;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::build_moment_grid;
    use crate::relation::z_relation;

    #[test]
    fn cache_round_trip_is_bit_stable() {
        let z = z_relation();
        let grid = build_moment_grid(
            &z,
            &[0.0, 0.5, 1.0, 3.0],
            &[(1.0, 1.0), (2.5, 4.0), (4.0, 4.0)],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.moments");
        write_grid(&grid, &path).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn load_or_build_uses_cache(){
        let z = z_relation();
        let spec = GridSpec::with_step(5.0);
        let dir = tempfile::tempdir().unwrap();
        let first = load_or_build(&z, &spec, Some(dir.path())).unwrap();
        let path = cache_path(dir.path(), &z.digest(), &spec);
        assert!(path.exists());
        let second = load_or_build(&z, &spec, Some(dir.path())).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.moments");
        std::fs::write(&path, "not a cache\n").unwrap();
        assert!(read_grid(&path).is_err());
    }
}
