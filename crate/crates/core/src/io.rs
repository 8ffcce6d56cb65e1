//! JSON containers: tuple files, report files and dilation model files.
//!
//! Complex entries are `[re, im]` pairs of JSON numbers written in shortest
//! round-trip form, so every `f64` survives a write/read cycle bit for bit.
//! Readers also accept decimal strings in place of numbers.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::builder::{self, assemble_model, BuildError, CouplingData, DilationModel};
use crate::linalg::{c, residual, ComplexMatrix, C64};
use crate::tuple::{AlgebraStructure, ClassReport, TupleError, TupleSpec};
use crate::verifier::{ResidualEntry, VerificationReport, TOL_LINEAR};

pub const SCHEMA_VERSION: u64 = 1;
pub const MODEL_KIND: &str = "dilation_model";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] TupleError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

fn field_err(path: &str, message: impl Into<String>) -> IoError {
    IoError::Field { path: path.to_string(), message: message.into() }
}

pub fn parse_json(text: &str) -> Result<Value, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })
}

pub fn read_file(path: &str) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_string(), source })
}

pub fn write_file(path: &str, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|source| IoError::File { path: path.to_string(), source })
}

// ---------------------------------------------------------------------------
// Field-addressed readers.

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, IoError> {
    v.as_object().ok_or_else(|| field_err(path, "expected an object"))
}

fn array<'a>(v: &'a Value, path: &str, len: Option<usize>) -> Result<&'a Vec<Value>, IoError> {
    let a = v.as_array().ok_or_else(|| field_err(path, "expected an array"))?;
    if let Some(n) = len {
        if a.len() != n {
            return Err(field_err(path, format!("expected {n} entries, found {}", a.len())));
        }
    }
    Ok(a)
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, IoError> {
    obj.get(key).ok_or_else(|| field_err(path, format!("missing required field \"{key}\"")))
}

fn as_usize(v: &Value, path: &str) -> Result<usize, IoError> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| field_err(path, "expected a non-negative integer"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64, IoError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(field_err(path, "expected a finite number")),
    }
}

fn as_complex(v: &Value, path: &str) -> Result<C64, IoError> {
    let pair = array(v, path, Some(2)).map_err(|_| field_err(path, "expected a [re, im] pair"))?;
    Ok(c(as_f64(&pair[0], &format!("{path}[0]"))?, as_f64(&pair[1], &format!("{path}[1]"))?))
}

fn as_usize_list(v: &Value, path: &str, len: Option<usize>) -> Result<Vec<usize>, IoError> {
    array(v, path, len)?.iter().enumerate().map(|(i, x)| as_usize(x, &format!("{path}[{i}]"))).collect()
}

/// A `rows x cols` matrix given as an array of rows of `[re, im]` pairs.
fn as_matrix(v: &Value, path: &str, rows: usize, cols: usize) -> Result<ComplexMatrix, IoError> {
    let rs = array(v, path, Some(rows))?;
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (i, row) in rs.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        for (j, z) in array(row, &rp, Some(cols))?.iter().enumerate() {
            m[(i, j)] = as_complex(z, &format!("{rp}[{j}]"))?;
        }
    }
    Ok(m)
}

fn complex_value(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_rows(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_value(m[(i, j)])).collect())).collect())
}

/// Shaped container for matrices whose shape is not implied by context.
fn shaped(m: &ComplexMatrix) -> Value {
    json!({ "rows": m.nrows(), "cols": m.ncols(), "entries": matrix_rows(m) })
}

fn as_shaped(v: &Value, path: &str) -> Result<ComplexMatrix, IoError> {
    let obj = object(v, path)?;
    let rows = as_usize(required(obj, "rows", path)?, &format!("{path}.rows"))?;
    let cols = as_usize(required(obj, "cols", path)?, &format!("{path}.cols"))?;
    as_matrix(required(obj, "entries", path)?, &format!("{path}.entries"), rows, cols)
}

fn check_schema(obj: &Map<String, Value>, path: &str, mandatory: bool) -> Result<(), IoError> {
    match obj.get("schema_version") {
        None if mandatory => Err(field_err(path, "missing required field \"schema_version\"")),
        None => Ok(()),
        Some(v) => {
            let version = as_usize(v, &format!("{path}.schema_version"))? as u64;
            if version != SCHEMA_VERSION {
                return Err(field_err(&format!("{path}.schema_version"), format!("unsupported version {version}, expected {SCHEMA_VERSION}")));
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Tuple files.

/// Read a tuple from its JSON value and validate it. A missing
/// `schema_version` is accepted for hand-written inputs.
pub fn tuple_from_value(v: &Value, path: &str) -> Result<TupleSpec, IoError> {
    let obj = object(v, path)?;
    check_schema(obj, path, false)?;
    let n = as_usize(required(obj, "n", path)?, &format!("{path}.n"))?;
    let dim_h = as_usize(required(obj, "dimH", path)?, &format!("{path}.dimH"))?;
    let d = match obj.get("d") {
        Some(x) => as_usize(x, &format!("{path}.d"))?,
        None => 1,
    };
    if n == 0 {
        return Err(field_err(&format!("{path}.n"), "must be at least 1"));
    }
    if d == 0 {
        return Err(field_err(&format!("{path}.d"), "must be at least 1"));
    }
    let mp = format!("{path}.matrices");
    let rows = array(required(obj, "matrices", path)?, &mp, Some(n))?;
    let mut blocks = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let ip = format!("{mp}[{i}]");
        let entries = array(row, &ip, Some(d))?;
        let mut ops = Vec::with_capacity(d);
        for (k, m) in entries.iter().enumerate() {
            ops.push(as_matrix(m, &format!("{ip}[{k}]"), dim_h, dim_h)?);
        }
        blocks.push(ops);
    }
    let phases = match obj.get("phases") {
        None | Some(Value::Null) => crate::tuple::trivial_phases(n),
        Some(p) => {
            let pp = format!("{path}.phases");
            let m = as_matrix(p, &pp, n, n)?;
            (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect()
        }
    };
    let algebra = match obj.get("algebra") {
        None | Some(Value::Null) => None,
        Some(a) => {
            let ap = format!("{path}.algebra");
            let ao = object(a, &ap)?;
            let k = as_usize(required(ao, "k", &ap)?, &format!("{ap}.k"))?;
            let block_of = as_usize_list(required(ao, "block_of", &ap)?, &format!("{ap}.block_of"), Some(dim_h))?;
            let autp = format!("{ap}.automorphisms");
            let auts = array(required(ao, "automorphisms", &ap)?, &autp, Some(n))?;
            let automorphisms = auts
                .iter()
                .enumerate()
                .map(|(i, x)| as_usize_list(x, &format!("{autp}[{i}]"), Some(k)))
                .collect::<Result<Vec<_>, _>>()?;
            Some(AlgebraStructure { k, block_of, automorphisms })
        }
    };
    let spec = TupleSpec { n, dim_h, d, blocks, phases, algebra };
    spec.validate()?;
    Ok(spec)
}

pub fn parse_tuple(text: &str) -> Result<TupleSpec, IoError> {
    tuple_from_value(&parse_json(text)?, "$")
}

pub fn tuple_to_value(spec: &TupleSpec) -> Value {
    let mut obj = Map::new();
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("n".into(), json!(spec.n));
    obj.insert("dimH".into(), json!(spec.dim_h));
    obj.insert("d".into(), json!(spec.d));
    obj.insert(
        "matrices".into(),
        Value::Array(spec.blocks.iter().map(|row| Value::Array(row.iter().map(matrix_rows).collect())).collect()),
    );
    if !spec.has_trivial_phases() {
        let rows = spec.phases.iter().map(|r| Value::Array(r.iter().map(|&z| complex_value(z)).collect())).collect();
        obj.insert("phases".into(), Value::Array(rows));
    }
    if let Some(alg) = &spec.algebra {
        obj.insert("algebra".into(), json!({ "k": alg.k, "block_of": alg.block_of, "automorphisms": alg.automorphisms }));
    }
    Value::Object(obj)
}

pub fn tuple_to_string(spec: &TupleSpec) -> String {
    let mut s = serde_json::to_string_pretty(&tuple_to_value(spec)).expect("tuple values serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Report files.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Classification(ClassReport),
    Verification(VerificationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u64,
    #[serde(flatten)]
    pub body: ReportBody,
}

impl ReportFile {
    pub fn new(body: ReportBody) -> Self {
        ReportFile { schema_version: SCHEMA_VERSION, body }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let v = parse_json(text)?;
        check_schema(object(&v, "$")?, "$", true)?;
        serde_json::from_value(v).map_err(|e| field_err("$", e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Model files.

/// Everything needed to rebuild a model, plus the derived operators for
/// consumers that only read them.
pub fn model_to_value(model: &DilationModel) -> Value {
    let d = &model.defects;
    let cp = &model.coupling;
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": MODEL_KIND,
        "degree": model.degree(),
        "tuple": tuple_to_value(&model.spec),
        "index_map": {
            "generators": model.fock.m,
            "coeff_dim": model.coeff_dim(),
            "cells": model.fock.indices,
            "coeff_labels": model.coeff_labels,
        },
        "defects": {
            "b1": shaped(&d.b1),
            "bn": shaped(&d.bn),
            "b1n": shaped(&d.b1n),
            "labels1": d.labels1,
            "labelsn": d.labelsn,
            "labels1n": d.labels1n,
        },
        "coupling": {
            "aux_dim": cp.aux_dim,
            "u": shaped(&cp.u),
            "v": shaped(&cp.v),
            "v0": shaped(&cp.v0),
            "u1_aux": shaped(&cp.u1_aux),
            "u2_aux": shaped(&cp.u2_aux),
            "complement_dims1": cp.complement_dims1,
            "complement_dims2": cp.complement_dims2,
            "aux_labels1": cp.aux_labels1,
            "aux_labels2": cp.aux_labels2,
        },
        "derived": {
            "pi": shaped(&model.pi),
            "transfer_first": shaped(&model.transfer.first.full()),
            "transfer_last": shaped(&model.transfer.last.full()),
            "isometries": model.isometries.iter().map(shaped).collect::<Vec<_>>(),
        },
    })
}

pub fn model_to_string(model: &DilationModel) -> String {
    let mut s = serde_json::to_string(&model_to_value(model)).expect("model values serialize");
    s.push('\n');
    s
}

/// A model read back from disk: the rebuilt model and the agreement of the
/// stored operators with it.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: DilationModel,
    pub consistency: Vec<ResidualEntry>,
}

/// Rebuild a model from the stored tuple, defect bases and coupling data.
/// Defect roots are recomputed from the tuple; stored bases and derived
/// operators are compared against the rebuilt ones.
pub fn model_from_value(v: &Value) -> Result<LoadedModel, IoError> {
    let root = object(v, "$")?;
    check_schema(root, "$", true)?;
    match root.get("kind").and_then(Value::as_str) {
        Some(MODEL_KIND) => {}
        _ => return Err(field_err("$.kind", format!("expected \"{MODEL_KIND}\""))),
    }
    let degree = as_usize(required(root, "degree", "$")?, "$.degree")?;
    let spec = tuple_from_value(required(root, "tuple", "$")?, "$.tuple")?;
    if spec.n < 2 {
        return Err(field_err("$.tuple.n", "model tuples have at least two operators"));
    }
    if spec.d != 1 {
        return Err(BuildError::UnsupportedMultiplicity(spec.d).into());
    }

    let dp = "$.defects";
    let dv = object(required(root, "defects", "$")?, dp)?;
    let mut defects = builder::build_defects(&spec)?;
    let recomputed = [defects.b1.clone(), defects.bn.clone(), defects.b1n.clone()];
    defects.b1 = as_shaped(required(dv, "b1", dp)?, "$.defects.b1")?;
    defects.bn = as_shaped(required(dv, "bn", dp)?, "$.defects.bn")?;
    defects.b1n = as_shaped(required(dv, "b1n", dp)?, "$.defects.b1n")?;
    defects.labels1 = as_usize_list(required(dv, "labels1", dp)?, "$.defects.labels1", Some(defects.b1.ncols()))?;
    defects.labelsn = as_usize_list(required(dv, "labelsn", dp)?, "$.defects.labelsn", Some(defects.bn.ncols()))?;
    defects.labels1n = as_usize_list(required(dv, "labels1n", dp)?, "$.defects.labels1n", Some(defects.b1n.ncols()))?;
    let mut basis_res = 0.0f64;
    for (stored, fresh) in [&defects.b1, &defects.bn, &defects.b1n].into_iter().zip(recomputed.iter()) {
        if stored.shape() != fresh.shape() || stored.nrows() != spec.dim_h {
            return Err(field_err(dp, "stored defect bases do not match the tuple's defect ranks"));
        }
        basis_res = basis_res.max(residual(stored, fresh));
    }

    let cpath = "$.coupling";
    let co = object(required(root, "coupling", "$")?, cpath)?;
    let aux_dim = as_usize(required(co, "aux_dim", cpath)?, "$.coupling.aux_dim")?;
    let delta = defects.r1() + defects.rn() + aux_dim;
    let get = |key: &str, rows: usize, cols: usize| -> Result<ComplexMatrix, IoError> {
        let p = format!("{cpath}.{key}");
        let m = as_shaped(required(co, key, cpath)?, &p)?;
        if m.shape() != (rows, cols) {
            return Err(field_err(&p, format!("expected shape {rows}x{cols}, found {}x{}", m.nrows(), m.ncols())));
        }
        Ok(m)
    };
    let (frame_x0, frame_y0) = builder::frames(&spec, &defects);
    let pad = |m: ComplexMatrix| crate::linalg::vstack(&[&m, &ComplexMatrix::zeros(aux_dim, spec.dim_h)]);
    let coupling = CouplingData {
        aux_dim,
        frame_x: pad(frame_x0),
        frame_y: pad(frame_y0),
        v: get("v", delta, defects.r1n())?,
        v0: get("v0", defects.r1() + defects.rn(), defects.r1() + defects.rn())?,
        u: get("u", delta, delta)?,
        u1_aux: get("u1_aux", aux_dim, aux_dim)?,
        u2_aux: get("u2_aux", aux_dim, aux_dim)?,
        complement_dims1: as_usize_list(required(co, "complement_dims1", cpath)?, "$.coupling.complement_dims1", None)?,
        complement_dims2: as_usize_list(required(co, "complement_dims2", cpath)?, "$.coupling.complement_dims2", None)?,
        aux_labels1: as_usize_list(required(co, "aux_labels1", cpath)?, "$.coupling.aux_labels1", Some(aux_dim))?,
        aux_labels2: as_usize_list(required(co, "aux_labels2", cpath)?, "$.coupling.aux_labels2", Some(aux_dim))?,
    };
    let model = assemble_model(&spec, defects, coupling, degree);

    let ip = "$.index_map";
    let im = object(required(root, "index_map", "$")?, ip)?;
    let cells = array(required(im, "cells", ip)?, "$.index_map.cells", Some(model.fock.num_cells()))?;
    for (k, cell) in cells.iter().enumerate() {
        let alpha = as_usize_list(cell, &format!("$.index_map.cells[{k}]"), Some(model.fock.m))?;
        if alpha != model.fock.indices[k] {
            return Err(field_err(&format!("$.index_map.cells[{k}]"), format!("expected {:?}", model.fock.indices[k])));
        }
    }

    let xp = "$.derived";
    let dr = object(required(root, "derived", "$")?, xp)?;
    let compare = |key: &str, fresh: &ComplexMatrix| -> Result<f64, IoError> {
        let p = format!("{xp}.{key}");
        let stored = as_shaped(required(dr, key, xp)?, &p)?;
        if stored.shape() != fresh.shape() {
            return Err(field_err(&p, "shape does not match the rebuilt model"));
        }
        Ok(residual(&stored, fresh))
    };
    let mut consistency = vec![
        ResidualEntry::gated("stored_defect_bases", basis_res, TOL_LINEAR),
        ResidualEntry::gated("stored_pi", compare("pi", &model.pi)?, TOL_LINEAR),
        ResidualEntry::gated("stored_transfer_first", compare("transfer_first", &model.transfer.first.full())?, TOL_LINEAR),
        ResidualEntry::gated("stored_transfer_last", compare("transfer_last", &model.transfer.last.full())?, TOL_LINEAR),
    ];
    let isos = array(required(dr, "isometries", xp)?, "$.derived.isometries", Some(model.isometries.len()))?;
    let mut iso_res = 0.0f64;
    for (g, stored) in isos.iter().enumerate() {
        let p = format!("$.derived.isometries[{g}]");
        let stored = as_shaped(stored, &p)?;
        if stored.shape() != model.isometries[g].shape() {
            return Err(field_err(&p, "shape does not match the rebuilt model"));
        }
        iso_res = iso_res.max(residual(&stored, &model.isometries[g]));
    }
    consistency.push(ResidualEntry::gated("stored_isometries", iso_res, TOL_LINEAR));
    Ok(LoadedModel { model, consistency })
}

pub fn parse_model(text: &str) -> Result<LoadedModel, IoError> {
    model_from_value(&parse_json(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_is_addressed() {
        let err = parse_tuple(r#"{"n": 1, "dimH": 1, "matrices": [[[[[0.5, "x"]]]]]}"#).unwrap_err();
        assert_eq!(err.to_string(), "$.matrices[0][0][0][0][1]: expected a finite number");
        let err = parse_tuple(r#"{"n": 2, "dimH": 1}"#).unwrap_err();
        assert!(err.to_string().contains("\"matrices\""));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_tuple("{\"n\": 1,\n \"dimH\": ").unwrap_err();
        assert!(matches!(err, IoError::Syntax { line: 2, .. }));
    }

    #[test]
    fn string_numbers_are_accepted() {
        let t = parse_tuple(r#"{"n": 1, "dimH": 1, "matrices": [[[[["0.25", "0"]]]]]}"#).unwrap();
        assert_eq!(t.op(0)[(0, 0)], c(0.25, 0.0));
    }
}
