//! Gset text format and the canonical JSON form of an instance.

use serde::{Deserialize, Serialize};

use super::{IsingError, IsingInstance};

fn format_err(line: usize, msg: impl Into<String>) -> IsingError {
    IsingError::Format { line, msg: msg.into() }
}

/// Parses a Gset document: a header `n m` followed by `m` lines `u v w` with
/// 1-based endpoints. Blank lines and lines starting with `#` are skipped.
pub fn parse_gset(text: &str) -> Result<IsingInstance, IsingError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| format_err(0, "missing header line"))?;
    let mut fields = header.split_whitespace();
    let n: usize = parse_field(fields.next(), hline, "node count")?;
    let m: usize = parse_field(fields.next(), hline, "edge count")?;
    if fields.next().is_some() {
        return Err(format_err(hline, "header must be `n m`"));
    }
    if n == 0 {
        return Err(format_err(hline, "node count must be positive"));
    }

    let mut couplings = vec![0.0; n * n];
    let mut seen = vec![false; n * n];
    let mut count = 0usize;
    for (lineno, line) in lines {
        let mut f = line.split_whitespace();
        let u: usize = parse_field(f.next(), lineno, "endpoint u")?;
        let v: usize = parse_field(f.next(), lineno, "endpoint v")?;
        let w: f64 = parse_field(f.next(), lineno, "weight")?;
        if f.next().is_some() {
            return Err(format_err(lineno, "edge line must be `u v w`"));
        }
        if u == 0 || v == 0 || u > n || v > n {
            return Err(format_err(lineno, format!("endpoint out of range 1..={n}: {u} {v}")));
        }
        if u == v {
            return Err(format_err(lineno, format!("self-loop on node {u}")));
        }
        if !w.is_finite() {
            return Err(format_err(lineno, "non-finite weight"));
        }
        let (a, b) = if u < v { (u - 1, v - 1) } else { (v - 1, u - 1) };
        if seen[a * n + b] {
            return Err(format_err(lineno, format!("duplicate edge {u} {v}")));
        }
        seen[a * n + b] = true;
        couplings[a * n + b] = w;
        couplings[b * n + a] = w;
        count += 1;
    }
    if count != m {
        return Err(format_err(hline, format!("header declares {m} edges, found {count}")));
    }
    IsingInstance::from_dense("gset", n, couplings, None, 0.0)
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, IsingError> {
    let tok = tok.ok_or_else(|| format_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| format_err(line, format!("bad {what}: {tok:?}")))
}

/// Emits the Gset form of a field-free instance. Zero-weight pairs are omitted,
/// so re-parsing yields an identical coupling matrix.
pub fn to_gset(inst: &IsingInstance) -> Result<String, IsingError> {
    if inst.has_field() {
        return Err(IsingError::Unsupported("Gset cannot carry a linear field"));
    }
    let edges = inst.edges();
    let mut out = format!("{} {}\n", inst.n(), edges.len());
    for (i, j, w) in edges {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, w));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    name: String,
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Vec<f64>>,
    #[serde(default)]
    offset: f64,
}

/// Canonical JSON: `{name, n, edges: [[i, j, w], ...], h?, offset}` with 0-based `i < j`.
pub fn to_instance_json(inst: &IsingInstance) -> String {
    let doc = InstanceJson {
        name: inst.name().to_string(),
        n: inst.n(),
        edges: inst.edges(),
        h: inst.field().map(|h| h.to_vec()),
        offset: inst.offset(),
    };
    serde_json::to_string_pretty(&doc).expect("instance serializes")
}

pub fn parse_instance_json(text: &str) -> Result<IsingInstance, IsingError> {
    let doc: InstanceJson = serde_json::from_str(text)
        .map_err(|e| format_err(e.line(), e.to_string()))?;
    for &(i, j, _) in &doc.edges {
        if i >= j {
            return Err(format_err(0, format!("edge ({i}, {j}) must satisfy i < j")));
        }
    }
    IsingInstance::from_edges(doc.name, doc.n, &doc.edges, doc.h, doc.offset)
        .map_err(|e| match e {
            IsingError::Argument(msg) => format_err(0, msg),
            other => other,
        })
}
