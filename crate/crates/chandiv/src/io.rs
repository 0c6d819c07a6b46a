//! JSON channel and generator specifications.
//!
//! The channel-spec file is the interchange format of the CLI:
//!
//! ```json
//! { "dim": 2, "representation": "ptm", "data": [[1,0,0,0], ...] }
//! ```
//!
//! PTM data is real; `choi`, `superop` and each `kraus` operator are nested
//! arrays of `[re, im]` pairs. Generator specs carry a Hamiltonian and a
//! Kossakowski matrix in the same complex encoding:
//!
//! ```json
//! { "dim": 2, "hamiltonian": [[[0,0],[0,0]],[[0,0],[0,0]]],
//!   "kossakowski": [[...]], "basis": "gellmann" }
//! ```

use serde_json::{json, Value};

use crate::chanrep::{Body, ChannelRep, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, RMat};
use crate::lindblad::LindbladGenerator;

fn spec_err(details: impl Into<String>) -> Error {
    Error::Spec { details: details.into() }
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| spec_err(format!("{what}: expected a number, got {v}")))
}

fn complex_entry(v: &Value, what: &str) -> Result<crate::linalg::C64> {
    let pair = v.as_array().ok_or_else(|| spec_err(format!("{what}: expected [re, im], got {v}")))?;
    if pair.len() != 2 {
        return Err(spec_err(format!("{what}: expected [re, im], got {} entries", pair.len())));
    }
    Ok(c(as_f64(&pair[0], what)?, as_f64(&pair[1], what)?))
}

fn real_matrix(v: &Value, n: usize, what: &str) -> Result<RMat> {
    let rows = v.as_array().ok_or_else(|| spec_err(format!("{what}: expected a matrix")))?;
    if rows.len() != n {
        return Err(spec_err(format!("{what}: expected {n} rows, got {}", rows.len())));
    }
    let mut m = RMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let cols = row.as_array().ok_or_else(|| spec_err(format!("{what}: row {i} is not an array")))?;
        if cols.len() != n {
            return Err(spec_err(format!("{what}: row {i} has {} entries, expected {n}", cols.len())));
        }
        for (j, x) in cols.iter().enumerate() {
            m[(i, j)] = as_f64(x, what)?;
        }
    }
    Ok(m)
}

fn complex_matrix(v: &Value, rows_n: usize, cols_n: usize, what: &str) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| spec_err(format!("{what}: expected a matrix")))?;
    if rows.len() != rows_n {
        return Err(spec_err(format!("{what}: expected {rows_n} rows, got {}", rows.len())));
    }
    let mut m = CMat::zeros(rows_n, cols_n);
    for (i, row) in rows.iter().enumerate() {
        let cols = row.as_array().ok_or_else(|| spec_err(format!("{what}: row {i} is not an array")))?;
        if cols.len() != cols_n {
            return Err(spec_err(format!("{what}: row {i} has {} entries, expected {cols_n}", cols.len())));
        }
        for (j, x) in cols.iter().enumerate() {
            m[(i, j)] = complex_entry(x, what)?;
        }
    }
    Ok(m)
}

/// Parses a channel-spec JSON value.
pub fn channel_from_value(v: &Value) -> Result<ChannelRep> {
    let obj = v.as_object().ok_or_else(|| spec_err("channel spec must be an object"))?;
    let dim = obj
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| spec_err("missing or invalid \"dim\""))? as usize;
    if !(2..=16).contains(&dim) {
        return Err(spec_err(format!("dim {dim} outside the supported range 2..=16")));
    }
    let repr = obj
        .get("representation")
        .and_then(Value::as_str)
        .ok_or_else(|| spec_err("missing or invalid \"representation\""))?;
    let data = obj.get("data").ok_or_else(|| spec_err("missing \"data\""))?;
    let n = dim * dim;
    match repr {
        "ptm" => ChannelRep::from_ptm(dim, real_matrix(data, n, "ptm data")?),
        "choi" => ChannelRep::from_choi(dim, complex_matrix(data, n, n, "choi data")?),
        "superop" => ChannelRep::from_superop(dim, complex_matrix(data, n, n, "superop data")?),
        "kraus" => {
            let ops = data.as_array().ok_or_else(|| spec_err("kraus data must be a list of operators"))?;
            let mut kraus = Vec::with_capacity(ops.len());
            for (k, op) in ops.iter().enumerate() {
                kraus.push(complex_matrix(op, dim, dim, &format!("kraus operator {k}"))?);
            }
            ChannelRep::from_kraus(dim, kraus)
        }
        other => Err(spec_err(format!("unknown representation {other:?}"))),
    }
}

/// Serializes a channel in its stored representation.
pub fn channel_to_value(ch: &ChannelRep) -> Value {
    let (repr, data) = match ch.body() {
        Body::Ptm(m) => ("ptm", real_matrix_value(m)),
        Body::Choi(m) => ("choi", complex_matrix_value(m)),
        Body::Superop(m) => ("superop", complex_matrix_value(m)),
        Body::Kraus(ks) => ("kraus", Value::Array(ks.iter().map(complex_matrix_value).collect())),
    };
    json!({ "dim": ch.dim(), "representation": repr, "data": data })
}

/// Serializes a channel converted to the requested representation.
pub fn channel_to_value_as(ch: &ChannelRep, repr: &str, tol: &Tolerances) -> Result<Value> {
    let data = match repr {
        "ptm" => real_matrix_value(&ch.to_ptm()),
        "choi" => complex_matrix_value(&ch.to_choi()),
        "superop" => complex_matrix_value(&ch.to_superop()),
        "kraus" => Value::Array(ch.to_kraus(tol)?.iter().map(complex_matrix_value).collect()),
        other => return Err(spec_err(format!("unknown representation {other:?}"))),
    };
    Ok(json!({ "dim": ch.dim(), "representation": repr, "data": data }))
}

fn real_matrix_value(m: &RMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Complex matrix as nested [re, im] pairs.
pub fn complex_matrix_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Parses a generator-spec JSON value.
pub fn generator_from_value(v: &Value, tol: &Tolerances) -> Result<LindbladGenerator> {
    let obj = v.as_object().ok_or_else(|| spec_err("generator spec must be an object"))?;
    let dim = obj
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| spec_err("missing or invalid \"dim\""))? as usize;
    if let Some(basis) = obj.get("basis").and_then(Value::as_str) {
        if basis != "gellmann" {
            return Err(spec_err(format!("unsupported basis {basis:?}; only \"gellmann\" is defined")));
        }
    }
    let h = complex_matrix(
        obj.get("hamiltonian").ok_or_else(|| spec_err("missing \"hamiltonian\""))?,
        dim,
        dim,
        "hamiltonian",
    )?;
    let n = dim * dim - 1;
    let g = complex_matrix(
        obj.get("kossakowski").ok_or_else(|| spec_err("missing \"kossakowski\""))?,
        n,
        n,
        "kossakowski",
    )?;
    LindbladGenerator::new(dim, h, g, tol)
}

/// Serializes a generator spec.
pub fn generator_to_value(g: &LindbladGenerator) -> Value {
    json!({
        "dim": g.dim(),
        "hamiltonian": complex_matrix_value(g.hamiltonian()),
        "kossakowski": complex_matrix_value(g.kossakowski()),
        "basis": "gellmann",
    })
}
