//! Training data generated from exact Riccati solves, and its CSV forms.

use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::model::LtiSystem;
use crate::numkit::{DenseMatrix, DenseVector};
use crate::riccati::{solve_care, CareProblem, RiccatiSolution};

use super::SurrogateError;

/// Solves the CARE for the plant at actuator locations `r`.
pub fn solve_at(sys: &LtiSystem, r: &[f64]) -> Result<RiccatiSolution, SurrogateError> {
    let b = sys.input_matrix(r).map_err(|e| SurrogateError::Model {
        r: r.to_vec(),
        source: e,
    })?;
    let problem = CareProblem::new(sys.a.clone(), b, sys.q.clone(), sys.r.clone());
    solve_care(&problem).map_err(|e| SurrogateError::Solver {
        r: r.to_vec(),
        source: e,
    })
}

/// `{first + k·step : k = 0..count}` as a plain axis.
pub fn axis(count: usize, first: f64, step: f64) -> Vec<f64> {
    (0..count).map(|k| first + k as f64 * step).collect()
}

/// `{iπ/denominator : i = 1..count}`.
pub fn interior_axis(count: usize, denominator: f64) -> Vec<f64> {
    (1..=count).map(|i| i as f64 * PI / denominator).collect()
}

/// Tensor product of one axis with itself `dim` times, last coordinate fastest.
pub fn tensor_grid(axis: &[f64], dim: usize) -> Vec<DenseVector> {
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    grid.into_iter().map(DenseVector::from).collect()
}

/// Midpoints between consecutive axis values.
pub fn midpoints(axis: &[f64]) -> Vec<f64> {
    axis.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Initial-state grid of the value dataset: `{−1 + (i−1)/3.5 : i = 1..8}ⁿ`.
pub fn value_z0_grid(n: usize) -> Vec<DenseVector> {
    tensor_grid(&axis(8, -1.0, 1.0 / 3.5), n)
}

/// Actuator grid of the value dataset: `{iπ/100 : i = 1..99}ᵐ`.
pub fn value_r_grid(m: usize) -> Vec<DenseVector> {
    tensor_grid(&interior_axis(99, 100.0), m)
}

/// Actuator grid of the single-actuator Riccati dataset: `{iπ/120 : i = 1..119}`.
pub fn riccati_r_grid_interior() -> Vec<DenseVector> {
    tensor_grid(&interior_axis(119, 120.0), 1)
}

/// Axis `{(i−1)π/19 : i = 1..20}` of the two-actuator Riccati grid.
pub fn closed_axis_20() -> Vec<f64> {
    axis(20, 0.0, PI / 19.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueRecord {
    pub z0: DenseVector,
    pub r: DenseVector,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueDataset {
    pub n: usize,
    pub m: usize,
    pub records: Vec<ValueRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiRecord {
    pub r: DenseVector,
    pub pi: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiDataset {
    pub n: usize,
    pub m: usize,
    pub records: Vec<RiccatiRecord>,
}

impl ValueDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl RiccatiDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn check_grids(sys: &LtiSystem, z0_grid: Option<&[DenseVector]>, r_grid: &[DenseVector]) -> Result<(), SurrogateError> {
    if r_grid.is_empty() || z0_grid.is_some_and(|g| g.is_empty()) {
        return Err(SurrogateError::EmptyDataset);
    }
    if let Some(bad) = r_grid.iter().find(|r| r.dim() != sys.m()) {
        return Err(SurrogateError::DimensionMismatch(format!(
            "actuator point of dimension {}, model has m = {}",
            bad.dim(),
            sys.m()
        )));
    }
    if let Some(bad) = z0_grid.and_then(|g| g.iter().find(|z| z.dim() != sys.n())) {
        return Err(SurrogateError::DimensionMismatch(format!(
            "initial state of dimension {}, model has n = {}",
            bad.dim(),
            sys.n()
        )));
    }
    Ok(())
}

/// Cartesian product of the grids with targets `z0ᵀ Π(r) z0`, r outermost.
/// Π is solved once per actuator point.
pub fn build_value_dataset(
    sys: &LtiSystem,
    z0_grid: &[DenseVector],
    r_grid: &[DenseVector],
) -> Result<ValueDataset, SurrogateError> {
    check_grids(sys, Some(z0_grid), r_grid)?;
    let mut records = Vec::with_capacity(z0_grid.len() * r_grid.len());
    for r in r_grid {
        let sol = solve_at(sys, r)?;
        for z0 in z0_grid {
            let target = sol.pi.quad_form(z0).expect("dimensions checked");
            records.push(ValueRecord {
                z0: z0.clone(),
                r: r.clone(),
                target,
            });
        }
    }
    Ok(ValueDataset {
        n: sys.n(),
        m: sys.m(),
        records,
    })
}

/// One `(r, Π(r))` record per grid point, in grid order.
pub fn build_riccati_dataset(sys: &LtiSystem, r_grid: &[DenseVector]) -> Result<RiccatiDataset, SurrogateError> {
    check_grids(sys, None, r_grid)?;
    let records = r_grid
        .iter()
        .map(|r| {
            solve_at(sys, r).map(|sol| RiccatiRecord {
                r: r.clone(),
                pi: sol.pi,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RiccatiDataset {
        n: sys.n(),
        m: sys.m(),
        records,
    })
}

/// Full-precision number formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn value_header(n: usize, m: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("z0_{i}"))
        .chain((1..=m).map(|l| format!("r_{l}")))
        .chain(std::iter::once("target".to_string()))
        .collect()
}

pub fn riccati_header(n: usize, m: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=m).map(|l| format!("r_{l}")).collect();
    for i in 1..=n {
        for j in 1..=i {
            h.push(format!("pi_{i}{j}"));
        }
    }
    h
}

fn csv_err(e: csv::Error) -> SurrogateError {
    SurrogateError::Format(e.to_string())
}

fn parse_row(rec: &csv::StringRecord, line: usize) -> Result<Vec<f64>, SurrogateError> {
    rec.iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| SurrogateError::Format(format!("row {line}: {e}")))
        })
        .collect()
}

fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>), SurrogateError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        rows.push(parse_row(&rec, k + 2)?);
    }
    Ok((header, rows))
}

pub fn write_value_csv<W: Write>(data: &ValueDataset, out: W) -> Result<(), SurrogateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(value_header(data.n, data.m)).map_err(csv_err)?;
    for rec in &data.records {
        let row: Vec<String> = rec
            .z0
            .iter()
            .chain(rec.r.iter())
            .chain(std::iter::once(&rec.target))
            .map(|v| fmt_f64(*v))
            .collect();
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| SurrogateError::Format(e.to_string()))
}

pub fn read_value_csv<R: Read>(input: R) -> Result<ValueDataset, SurrogateError> {
    let (header, rows) = read_table(input)?;
    let n = header.iter().filter(|h| h.starts_with("z0_")).count();
    let m = header.iter().filter(|h| h.starts_with("r_")).count();
    if n == 0 || m == 0 || header != value_header(n, m) {
        return Err(SurrogateError::Format(format!("unexpected value-dataset header {header:?}")));
    }
    let records = rows
        .into_iter()
        .map(|row| ValueRecord {
            z0: row[..n].into(),
            r: row[n..n + m].into(),
            target: row[n + m],
        })
        .collect();
    Ok(ValueDataset { n, m, records })
}

pub fn write_riccati_csv<W: Write>(data: &RiccatiDataset, out: W) -> Result<(), SurrogateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(riccati_header(data.n, data.m)).map_err(csv_err)?;
    for rec in &data.records {
        let mut row: Vec<String> = rec.r.iter().map(|v| fmt_f64(*v)).collect();
        for i in 0..data.n {
            for j in 0..=i {
                row.push(fmt_f64(rec.pi[(i, j)]));
            }
        }
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| SurrogateError::Format(e.to_string()))
}

pub fn read_riccati_csv<R: Read>(input: R) -> Result<RiccatiDataset, SurrogateError> {
    let (header, rows) = read_table(input)?;
    let m = header.iter().take_while(|h| h.starts_with("r_")).count();
    let tri = header.len() - m;
    // n(n+1)/2 = tri
    let n = ((((8 * tri + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if m == 0 || n == 0 || n * (n + 1) / 2 != tri || header != riccati_header(n, m) {
        return Err(SurrogateError::Format(format!("unexpected Riccati-dataset header {header:?}")));
    }
    let records = rows
        .into_iter()
        .map(|row| {
            let mut pi = DenseMatrix::zeros(n, n);
            let mut k = m;
            for i in 0..n {
                for j in 0..=i {
                    pi[(i, j)] = row[k];
                    pi[(j, i)] = row[k];
                    k += 1;
                }
            }
            RiccatiRecord { r: row[..m].into(), pi }
        })
        .collect();
    Ok(RiccatiDataset { n, m, records })
}
