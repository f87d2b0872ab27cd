//! JSON documents for plants, controllers, lifted points, certificates and
//! results. Reals are written as shortest round-trip decimal strings and
//! matrices as row-major nested arrays with explicit dimensions, so every
//! document reads back bit for bit. Plain JSON numbers are accepted on input.

use serde_json::{json, Map, Value};

use crate::analysis::NormResult;
use crate::certify::{H2Certificate, HinfCertificate};
use crate::error::{Error, Result};
use crate::homotopy::{PathResult, PathSample};
use crate::liftmap::{ComponentSign, FPoint, LiftedPoint};
use crate::lmi::{FeasibilityResult, FeasibilityStatus, GammaStar, Synthesis};
use crate::model::{Controller, Plant};
use crate::numerics::{Mat, SymMatrix};

pub trait JsonDoc: Sized {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;

    fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializing a JSON value cannot fail")
    }

    fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("malformed JSON: {e}")))?;
        Self::from_json(&v)
    }
}

pub fn real(v: f64) -> Value {
    Value::String(format!("{v:?}"))
}

pub fn parse_real(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::String(s) => s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("{what}: '{s}' is not a real"))),
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::InvalidInput(format!("{what}: unrepresentable number"))),
        _ => Err(Error::InvalidInput(format!("{what}: expected a real"))),
    }
}

pub fn mat(m: &Mat) -> Value {
    let data: Vec<Value> = (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| real(m[(i, j)])).collect())).collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "data": data })
}

fn parse_usize(v: Option<&Value>, what: &str) -> Result<usize> {
    v.and_then(Value::as_u64)
        .map(|n| n as usize)
        .ok_or_else(|| Error::InvalidInput(format!("{what}: missing or invalid dimension")))
}

pub fn parse_mat(v: &Value, what: &str) -> Result<Mat> {
    let (rows_v, cols_v, data) = match v {
        Value::Object(o) => (o.get("rows"), o.get("cols"), o.get("data")),
        Value::Array(_) => (None, None, Some(v)),
        _ => return Err(Error::InvalidInput(format!("{what}: expected a matrix"))),
    };
    let data = data
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput(format!("{what}: missing data array")))?;
    let rows = match rows_v {
        Some(_) => parse_usize(rows_v, what)?,
        None => data.len(),
    };
    let cols = match cols_v {
        Some(_) => parse_usize(cols_v, what)?,
        None => data.first().and_then(Value::as_array).map_or(0, Vec::len),
    };
    if data.len() != rows {
        return Err(Error::InvalidInput(format!("{what}: expected {rows} rows, found {}", data.len())));
    }
    let mut m = Mat::zeros(rows, cols);
    for (i, row) in data.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| Error::InvalidInput(format!("{what}: row {i} is not an array")))?;
        if row.len() != cols {
            return Err(Error::InvalidInput(format!("{what}: row {i} has {} entries, expected {cols}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = parse_real(x, &format!("{what}[{i},{j}]"))?;
        }
    }
    Ok(m)
}

fn field<'a>(o: &'a Value, key: &str) -> Result<&'a Value> {
    o.get(key).ok_or_else(|| Error::InvalidInput(format!("missing field '{key}'")))
}

fn get_mat(o: &Value, key: &str) -> Result<Mat> {
    parse_mat(field(o, key)?, key)
}

fn get_sym(o: &Value, key: &str) -> Result<SymMatrix> {
    let m = get_mat(o, key)?;
    if m.is_square() && m != m.transpose() {
        return Err(Error::InvalidInput(format!("{key} must be symmetric")));
    }
    SymMatrix::new(m)
}

fn get_real(o: &Value, key: &str) -> Result<f64> {
    parse_real(field(o, key)?, key)
}

fn check_kind(v: &Value, kind: &str) -> Result<()> {
    match v.get("kind").and_then(Value::as_str) {
        None => Ok(()),
        Some(k) if k == kind => Ok(()),
        Some(k) => Err(Error::InvalidInput(format!("expected a '{kind}' document, found '{k}'"))),
    }
}

impl JsonDoc for Plant {
    fn to_json(&self) -> Value {
        let d = self.dims();
        json!({
            "kind": "plant",
            "dims": { "n_x": d.n_x, "n_w": d.n_w, "n_u": d.n_u, "n_y": d.n_y, "n_z": d.n_z },
            "A": mat(&self.a), "B1": mat(&self.b1), "B2": mat(&self.b2),
            "C1": mat(&self.c1), "C2": mat(&self.c2),
            "D11": mat(&self.d11), "D12": mat(&self.d12), "D21": mat(&self.d21),
        })
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_kind(v, "plant")?;
        let p = Plant::new(
            get_mat(v, "A")?,
            get_mat(v, "B1")?,
            get_mat(v, "B2")?,
            get_mat(v, "C1")?,
            get_mat(v, "C2")?,
            get_mat(v, "D11")?,
            get_mat(v, "D12")?,
            get_mat(v, "D21")?,
        )?;
        if let Some(dims) = v.get("dims") {
            let d = p.dims();
            for (key, actual) in [("n_x", d.n_x), ("n_w", d.n_w), ("n_u", d.n_u), ("n_y", d.n_y), ("n_z", d.n_z)] {
                if let Some(stated) = dims.get(key) {
                    if stated.as_u64() != Some(actual as u64) {
                        return Err(Error::InvalidInput(format!("dims.{key} = {stated} disagrees with the matrices ({actual})")));
                    }
                }
            }
        }
        Ok(p)
    }
}

impl JsonDoc for Controller {
    fn to_json(&self) -> Value {
        json!({
            "kind": "controller",
            "dims": { "order": self.order(), "n_u": self.n_u(), "n_y": self.n_y() },
            "A_K": mat(&self.a_k), "B_K": mat(&self.b_k), "C_K": mat(&self.c_k), "D_K": mat(&self.d_k),
        })
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_kind(v, "controller")?;
        Controller::new(get_mat(v, "A_K")?, get_mat(v, "B_K")?, get_mat(v, "C_K")?, get_mat(v, "D_K")?)
    }
}

impl JsonDoc for LiftedPoint {
    fn to_json(&self) -> Value {
        json!({
            "kind": "lifted",
            "X": mat(&self.x), "Y": mat(&self.y),
            "A_hat": mat(&self.a_hat), "B_hat": mat(&self.b_hat),
            "C_hat": mat(&self.c_hat), "D_hat": mat(&self.d_hat),
            "Pi": mat(&self.pi), "Xi": mat(&self.xi),
        })
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_kind(v, "lifted")?;
        Ok(LiftedPoint {
            x: get_sym(v, "X")?,
            y: get_sym(v, "Y")?,
            a_hat: get_mat(v, "A_hat")?,
            b_hat: get_mat(v, "B_hat")?,
            c_hat: get_mat(v, "C_hat")?,
            d_hat: get_mat(v, "D_hat")?,
            pi: get_mat(v, "Pi")?,
            xi: get_mat(v, "Xi")?,
        })
    }
}

impl JsonDoc for HinfCertificate {
    fn to_json(&self) -> Value {
        json!({
            "kind": "hinf-certificate",
            "P": mat(&self.p),
            "gamma": real(self.gamma),
            "lmi_margin_achieved": real(self.lmi_margin_achieved),
            "pos_def_margin": real(self.pos_def_margin),
            "epsilon": real(self.epsilon),
        })
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_kind(v, "hinf-certificate")?;
        Ok(HinfCertificate {
            p: get_sym(v, "P")?,
            gamma: get_real(v, "gamma")?,
            lmi_margin_achieved: get_real(v, "lmi_margin_achieved")?,
            pos_def_margin: get_real(v, "pos_def_margin")?,
            epsilon: get_real(v, "epsilon")?,
        })
    }
}

impl JsonDoc for H2Certificate {
    fn to_json(&self) -> Value {
        json!({
            "kind": "h2-certificate",
            "P": mat(&self.p),
            "Gamma": mat(&self.gamma_mat),
            "gamma": real(self.gamma),
            "lmi_margin_achieved": real(self.lmi_margin_achieved),
            "pos_def_margin": real(self.pos_def_margin),
            "trace_slack": real(self.trace_slack),
        })
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_kind(v, "h2-certificate")?;
        Ok(H2Certificate {
            p: get_sym(v, "P")?,
            gamma_mat: get_sym(v, "Gamma")?,
            gamma: get_real(v, "gamma")?,
            lmi_margin_achieved: get_real(v, "lmi_margin_achieved")?,
            pos_def_margin: get_real(v, "pos_def_margin")?,
            trace_slack: get_real(v, "trace_slack")?,
        })
    }
}

pub fn f_point(f: &FPoint) -> Value {
    json!({
        "kind": "f-point",
        "X": mat(&f.x), "Y": mat(&f.y),
        "A_hat": mat(&f.a_hat), "B_hat": mat(&f.b_hat),
        "C_hat": mat(&f.c_hat), "D_hat": mat(&f.d_hat),
    })
}

pub fn norm_result(r: &NormResult) -> Value {
    json!({
        "value": real(r.value),
        "lo": real(r.lo),
        "hi": real(r.hi),
        "method": serde_json::to_value(r.method).unwrap_or(Value::Null),
    })
}

fn sign_str(s: ComponentSign) -> &'static str {
    match s {
        ComponentSign::Plus => "plus",
        ComponentSign::Minus => "minus",
    }
}

pub fn component_sign(s: ComponentSign) -> Value {
    Value::String(sign_str(s).into())
}

fn path_sample(s: &PathSample) -> Value {
    json!({
        "t": real(s.t),
        "controller": s.controller.to_json(),
        "hinf": real(s.hinf),
        "sign": sign_str(s.sign),
        "verified": s.verified,
    })
}

pub fn path_result(p: &PathResult) -> Value {
    let mut o = Map::new();
    o.insert("kind".into(), "path".into());
    o.insert("status".into(), serde_json::to_value(p.status).unwrap_or(Value::Null));
    o.insert("samples".into(), Value::Array(p.samples.iter().map(path_sample).collect()));
    o.insert("witness_T".into(), p.witness_t.as_ref().map_or(Value::Null, mat));
    o.insert("endpoint_errors".into(), json!([real(p.endpoint_errors.0), real(p.endpoint_errors.1)]));
    o.insert("failed_at".into(), p.failed_at.map_or(Value::Null, real));
    o.insert("min_slack".into(), real(p.min_slack));
    Value::Object(o)
}

pub fn feasibility(f: &FeasibilityResult) -> Value {
    json!({
        "status": match f.status {
            FeasibilityStatus::Feasible => "feasible",
            FeasibilityStatus::InfeasibleWithinBudget => "infeasible-within-budget",
        },
        "margin": real(f.margin),
        "iterations": f.iterations,
    })
}

pub fn synthesis(s: &Synthesis) -> Value {
    json!({
        "controller": s.controller.to_json(),
        "point": f_point(&s.point),
        "feasibility": feasibility(&s.feasibility),
    })
}

pub fn gamma_star(g: &GammaStar) -> Value {
    json!({
        "lo": real(g.lo),
        "hi": real(g.hi),
        "witness": g.witness.to_json(),
        "budget_exhausted": g.budget_exhausted,
        "evaluations": g.evaluations,
    })
}
