//! Instance and data-file loading.

use std::path::Path;

use anyhow::{bail, Context};
use lagrange_ising::ising::{parse_gset, parse_instance_json};
use lagrange_ising::ising::random_instance;
use lagrange_ising::IsingInstance;

use crate::UsageError;

/// Loads `random:N:DENSITY:SEED` (±1 couplings), a `.json` instance, or a
/// Gset file. Gset instances are named after the file stem.
pub fn load_instance(spec: &str) -> anyhow::Result<IsingInstance> {
    if let Some(rest) = spec.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [n, density, seed] = parts[..] else {
            return Err(UsageError(format!("random instance spec must be random:N:DENSITY:SEED, got `{spec}`")).into());
        };
        let bad = |what: &str| UsageError(format!("bad {what} in `{spec}`"));
        let n: usize = n.parse().map_err(|_| bad("N"))?;
        let density: f64 = density.parse().map_err(|_| bad("DENSITY"))?;
        let seed: u64 = seed.parse().map_err(|_| bad("SEED"))?;
        if n == 0 {
            return Err(bad("N").into());
        }
        return Ok(random_instance(n, density, &[1.0, -1.0], seed)
            .map_err(|e| UsageError(e.to_string()))?
            .with_name(spec));
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading instance {spec}"))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
    let ctx = || format!("parsing instance {spec}");
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let inst = parse_instance_json(&text).with_context(ctx)?;
        Ok(if inst.name().is_empty() { inst.with_name(stem) } else { inst })
    } else {
        Ok(parse_gset(&text).with_context(ctx)?.with_name(stem))
    }
}

/// Reads numeric rows; the last column is the target. A first row that does
/// not parse as numbers is taken as a header.
pub fn load_regression_csv(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed CSV {}", path.display()))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => bail!("malformed CSV {} at record {}: {e}", path.display(), i + 1),
        }
    }
    if rows.is_empty() {
        bail!("no data rows in {}", path.display());
    }
    let width = rows[0].len();
    if width < 2 {
        bail!("{} needs at least one feature column and a target column", path.display());
    }
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        bail!("malformed CSV {}: record {} has {} fields, expected {width}", path.display(), i + 1, rows[i].len());
    }
    Ok(rows)
}
