//! Membership scans of `K_γ` over two-parameter slices of controller space.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::in_kgamma;
use crate::error::{Error, Result};
use crate::model::{Controller, Plant};
use crate::numerics::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerBlock {
    #[serde(rename = "A_K")]
    A,
    #[serde(rename = "B_K")]
    B,
    #[serde(rename = "C_K")]
    C,
    #[serde(rename = "D_K")]
    D,
}

/// One entry of a controller block, written `B_K` (entry (0,0)) or `B_K[i,j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParamRef {
    pub block: ControllerBlock,
    pub row: usize,
    pub col: usize,
}

impl ParamRef {
    pub const fn scalar(block: ControllerBlock) -> Self {
        Self { block, row: 0, col: 0 }
    }

    fn set(&self, k: &mut Controller, v: f64) -> Result<()> {
        let m = match self.block {
            ControllerBlock::A => &mut k.a_k,
            ControllerBlock::B => &mut k.b_k,
            ControllerBlock::C => &mut k.c_k,
            ControllerBlock::D => &mut k.d_k,
        };
        if self.row >= m.nrows() || self.col >= m.ncols() {
            return Err(Error::InvalidInput(format!("parameter {self} out of range for a {}×{} block", m.nrows(), m.ncols())));
        }
        m[(self.row, self.col)] = v;
        Ok(())
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.block {
            ControllerBlock::A => "A_K",
            ControllerBlock::B => "B_K",
            ControllerBlock::C => "C_K",
            ControllerBlock::D => "D_K",
        };
        if self.row == 0 && self.col == 0 {
            write!(f, "{name}")
        } else {
            write!(f, "{name}[{},{}]", self.row, self.col)
        }
    }
}

impl FromStr for ParamRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown controller parameter '{s}'"));
        let s = s.trim();
        let (name, idx) = match s.find('[') {
            Some(p) => (&s[..p], Some(s[p..].strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?)),
            None => (s, None),
        };
        let block = match name.to_ascii_uppercase().as_str() {
            "A_K" | "AK" => ControllerBlock::A,
            "B_K" | "BK" => ControllerBlock::B,
            "C_K" | "CK" => ControllerBlock::C,
            "D_K" | "DK" => ControllerBlock::D,
            _ => return Err(bad()),
        };
        let (row, col) = match idx {
            None => (0, 0),
            Some(ix) => {
                let mut it = ix.split(',').map(|p| p.trim().parse::<usize>());
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(r)), Some(Ok(c)), None) => (r, c),
                    _ => return Err(bad()),
                }
            }
        };
        Ok(Self { block, row, col })
    }
}

impl TryFrom<String> for ParamRef {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParamRef> for String {
    fn from(p: ParamRef) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: ParamRef,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: ParamRef, min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidInput(format!("invalid axis {param} [{min}, {max}] × {count}")));
        }
        Ok(Self { param, min, max, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + h * i as f64 }).collect()
    }
}

/// Two-axis slice through controller space; every other entry of the base
/// controller is zero unless set in `fixed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub x: Axis,
    pub y: Axis,
    pub fixed: Vec<(ParamRef, f64)>,
    pub gamma: f64,
}

impl ScanSpec {
    /// `(B_K, C_K) ∈ [−10, 10]²` on a `count × count` grid with `A_K = −2`.
    pub fn default_slice(gamma: f64, count: usize) -> Result<Self> {
        Ok(Self {
            x: Axis::new(ParamRef::scalar(ControllerBlock::B), -10.0, 10.0, count)?,
            y: Axis::new(ParamRef::scalar(ControllerBlock::C), -10.0, 10.0, count)?,
            fixed: vec![(ParamRef::scalar(ControllerBlock::A), DEFAULT_A_K)],
            gamma,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.x.param == self.y.param {
            return Err(Error::InvalidInput("scan axes must be distinct parameters".into()));
        }
        if self.fixed.iter().any(|(p, _)| *p == self.x.param || *p == self.y.param) {
            return Err(Error::InvalidInput("a scanned parameter is also fixed".into()));
        }
        Axis::new(self.x.param, self.x.min, self.x.max, self.x.count)?;
        Axis::new(self.y.param, self.y.min, self.y.max, self.y.count)?;
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidInput(format!("γ must be positive, got {}", self.gamma)));
        }
        Ok(())
    }
}

pub const DEFAULT_A_K: f64 = -2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub spec: ScanSpec,
    /// `membership[iy][ix]`.
    pub membership: Vec<Vec<bool>>,
    pub component_count: usize,
}

/// Evaluates strictly proper membership on every grid cell.
pub fn scan(plant: &Plant, spec: &ScanSpec, tol: &Tolerances) -> Result<ScanGrid> {
    spec.validate()?;
    let d = plant.dims();
    let mut base = Controller::zeros(d.n_x, d.n_u, d.n_y);
    for (p, v) in &spec.fixed {
        p.set(&mut base, *v)?;
    }
    let xs = spec.x.values();
    let ys = spec.y.values();
    // Catch out-of-range axes before the parallel loop.
    spec.x.param.set(&mut base.clone(), 0.0)?;
    spec.y.param.set(&mut base.clone(), 0.0)?;
    let membership: Vec<Vec<bool>> = ys
        .par_iter()
        .map(|&yv| {
            xs.iter()
                .map(|&xv| {
                    let mut k = base.clone();
                    spec.x.param.set(&mut k, xv)?;
                    spec.y.param.set(&mut k, yv)?;
                    Ok(in_kgamma(plant, &k, spec.gamma, true, tol).unwrap_or(false))
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let component_count = count_components(&membership);
    Ok(ScanGrid { spec: spec.clone(), membership, component_count })
}

/// Number of 4-connected components of the `true` cells.
pub fn count_components(grid: &[Vec<bool>]) -> usize {
    let rows = grid.len();
    let cols = grid.first().map_or(0, Vec::len);
    let mut seen = vec![vec![false; cols]; rows];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for r in 0..rows {
        for c in 0..cols {
            if !grid[r][c] || seen[r][c] {
                continue;
            }
            count += 1;
            seen[r][c] = true;
            queue.push_back((r, c));
            while let Some((i, j)) = queue.pop_front() {
                let nbrs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
                for (a, b) in nbrs {
                    if a < rows && b < cols && grid[a][b] && !seen[a][b] {
                        seen[a][b] = true;
                        queue.push_back((a, b));
                    }
                }
            }
        }
    }
    count
}

impl ScanGrid {
    /// CSV with the x values in the first row and the y values in the first
    /// column; cells are 0 or 1.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        let mut header = vec![format!("{}\\{}", self.spec.y.param, self.spec.x.param)];
        header.extend(self.spec.x.values().iter().map(|v| format!("{v:?}")));
        w.write_record(&header).map_err(io)?;
        for (yv, row) in self.spec.y.values().iter().zip(&self.membership) {
            let mut rec = vec![format!("{yv:?}")];
            rec.extend(row.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Sidecar summary `{gamma, component_count, axes}`.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "gamma": format!("{:?}", self.spec.gamma),
            "component_count": self.component_count,
            "axes": [axis_json(&self.spec.x), axis_json(&self.spec.y)],
            "fixed": self.spec.fixed.iter().map(|(p, v)| serde_json::json!({"param": p.to_string(), "value": format!("{v:?}")})).collect::<Vec<_>>(),
        })
    }
}

fn axis_json(a: &Axis) -> serde_json::Value {
    serde_json::json!({
        "param": a.param.to_string(),
        "min": format!("{:?}", a.min),
        "max": format!("{:?}", a.max),
        "count": a.count,
    })
}

/// Parses a grid written by [`ScanGrid::to_csv`] into `(xs, ys, membership)`.
pub fn read_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<bool>>)> {
    let bad = |m: String| Error::InvalidInput(format!("scan csv: {m}"));
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut rows = r.records();
    let header = rows.next().ok_or_else(|| bad("empty file".into()))?.map_err(|e| bad(e.to_string()))?;
    let xs = header.iter().skip(1).map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string()))).collect::<Result<Vec<_>>>()?;
    let mut ys = Vec::new();
    let mut grid = Vec::new();
    for rec in rows {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut it = rec.iter();
        ys.push(it.next().ok_or_else(|| bad("empty row".into()))?.parse::<f64>().map_err(|e| bad(e.to_string()))?);
        let row = it
            .map(|c| match c {
                "0" => Ok(false),
                "1" => Ok(true),
                o => Err(bad(format!("cell '{o}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != xs.len() {
            return Err(bad("ragged row".into()));
        }
        grid.push(row);
    }
    Ok((xs, ys, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(rows: &[&str]) -> Vec<Vec<bool>> {
        rows.iter().map(|r| r.chars().map(|c| c == '#').collect()).collect()
    }

    #[test]
    fn labelling_is_four_connected() {
        assert_eq!(count_components(&g(&["#.", ".#"])), 2);
        assert_eq!(count_components(&g(&["##", ".#"])), 1);
        assert_eq!(count_components(&g(&["...", "..."])), 0);
        assert_eq!(count_components(&g(&["#.#", "#.#", "###"])), 1);
        assert_eq!(count_components(&[]), 0);
    }

    #[test]
    fn param_parsing() {
        assert_eq!("B_K".parse::<ParamRef>().unwrap(), ParamRef::scalar(ControllerBlock::B));
        let p: ParamRef = "a_k[1,0]".parse().unwrap();
        assert_eq!((p.block, p.row, p.col), (ControllerBlock::A, 1, 0));
        assert_eq!(p.to_string(), "A_K[1,0]");
        assert!("E_K".parse::<ParamRef>().is_err());
        assert!("A_K[1]".parse::<ParamRef>().is_err());
    }

    #[test]
    fn small_scan_splits_and_csv_round_trips() {
        let plant = Plant::scalar_example(1.0);
        let spec = ScanSpec::default_slice(50.0, 21).unwrap();
        let grid = scan(&plant, &spec, &Tolerances::default()).unwrap();
        assert_eq!(grid.component_count, 2);
        let (xs, ys, cells) = read_csv(&grid.to_csv().unwrap()).unwrap();
        assert_eq!(xs, spec.x.values());
        assert_eq!(ys, spec.y.values());
        assert_eq!(cells, grid.membership);
    }

    #[test]
    fn fixed_and_scanned_conflict() {
        let mut spec = ScanSpec::default_slice(50.0, 5).unwrap();
        spec.fixed.push((ParamRef::scalar(ControllerBlock::B), 1.0));
        assert!(scan(&Plant::scalar_example(1.0), &spec, &Tolerances::default()).is_err());
    }
}
