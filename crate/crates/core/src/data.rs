//! Dataset container, CSV ingestion and column scaling.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{col, norm2, Matrix};

/// Response `y`, exposure `x` and controls `z` (n × p).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    z: Matrix,
    column_names: Option<ColumnNames>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnNames {
    pub response: String,
    pub exposure: String,
    pub controls: Vec<String>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: Vec<f64>, z: Matrix) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Invalid("dataset needs at least one row".into()));
        }
        if x.len() != n || z.nrows() != n {
            return Err(Error::Invalid(format!(
                "length mismatch: y has {}, x has {}, z has {} rows",
                n,
                x.len(),
                z.nrows()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|a| a.is_finite());
        if !finite(&y) || !finite(&x) || !finite(z.as_slice()) {
            return Err(Error::Invalid("non-finite entry in dataset".into()));
        }
        Ok(Self {
            y,
            x,
            z,
            column_names: None,
        })
    }

    pub fn with_names(mut self, names: ColumnNames) -> Result<Self> {
        if names.controls.len() != self.p() {
            return Err(Error::Invalid("control name count does not match p".into()));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn column_names(&self) -> Option<&ColumnNames> {
        self.column_names.as_ref()
    }

    /// Exchanges the roles of response and exposure.
    pub fn swapped(&self) -> Self {
        Self {
            y: self.x.clone(),
            x: self.y.clone(),
            z: self.z.clone(),
            column_names: self.column_names.as_ref().map(|c| ColumnNames {
                response: c.exposure.clone(),
                exposure: c.response.clone(),
                controls: c.controls.clone(),
            }),
        }
    }

    /// Same exposure and controls, new response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(y, self.x.clone(), self.z.clone())?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    /// Writes `response,exposure,controls...` with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let names = self.column_names.clone().unwrap_or_else(|| ColumnNames {
            response: "y".into(),
            exposure: "x".into(),
            controls: (1..=self.p()).map(|j| format!("z{j}")).collect(),
        });
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![names.response, names.exposure];
        header.extend(names.controls);
        wtr.write_record(&header)?;
        let mut row = Vec::with_capacity(self.p() + 2);
        for i in 0..self.n() {
            row.clear();
            row.push(fmt_f64(self.y[i]));
            row.push(fmt_f64(self.x[i]));
            for j in 0..self.p() {
                row.push(fmt_f64(self.z[(i, j)]));
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

struct Table {
    header: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (row_idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // 1-based data row number, header excluded
        let row = row_idx + 1;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: header[j].clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: header[j].clone(),
                    message: format!("`{field}` is not finite"),
                });
            }
            columns[j].push(v);
        }
    }
    Ok(Table { header, columns })
}

/// Reads a CSV with a header row. `response_col` and `exposure_col` select y
/// and x; every remaining column becomes a control, in file order.
pub fn load_dataset(path: impl AsRef<Path>, response_col: &str, exposure_col: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, response_col, exposure_col)
}

pub fn read_dataset<R: Read>(reader: R, response_col: &str, exposure_col: &str) -> Result<Dataset> {
    let table = read_table(reader)?;
    let find = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let iy = find(response_col)?;
    let ix = find(exposure_col)?;
    if iy == ix {
        return Err(Error::Invalid("response and exposure must be different columns".into()));
    }
    let n = table.columns.first().map_or(0, Vec::len);
    let control_idx: Vec<usize> = (0..table.header.len()).filter(|&j| j != iy && j != ix).collect();
    let mut data = Vec::with_capacity(n * control_idx.len());
    for &j in &control_idx {
        data.extend_from_slice(&table.columns[j]);
    }
    let z = Matrix::from_vec(n, control_idx.len(), data);
    let names = ColumnNames {
        response: table.header[iy].clone(),
        exposure: table.header[ix].clone(),
        controls: control_idx.iter().map(|&j| table.header[j].clone()).collect(),
    };
    Dataset::new(table.columns[iy].clone(), table.columns[ix].clone(), z)?.with_names(names)
}

/// Reads a CSV with a header row, returning the `response_col` column and the
/// remaining columns (in file order) as a design matrix with their names.
pub fn load_regression(path: impl AsRef<Path>, response_col: &str) -> Result<(Vec<f64>, Matrix, Vec<String>)> {
    let mut table = read_table(std::fs::File::open(path)?)?;
    let iy = table
        .header
        .iter()
        .position(|h| h == response_col)
        .ok_or_else(|| Error::MissingColumn(response_col.to_owned()))?;
    let y = table.columns.remove(iy);
    table.header.remove(iy);
    let n = y.len();
    if n == 0 || table.columns.is_empty() {
        return Err(Error::Invalid("need at least one row and one design column".into()));
    }
    let z = Matrix::from_vec(n, table.columns.len(), table.columns.concat());
    Ok((y, z, table.header))
}

/// Reads an all-numeric CSV (header row required) as an n × k matrix.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    read_matrix(std::fs::File::open(path)?)
}

pub fn read_matrix<R: Read>(reader: R) -> Result<Matrix> {
    let table = read_table(reader)?;
    let n = table.columns.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Invalid("matrix CSV has no rows".into()));
    }
    Ok(Matrix::from_vec(n, table.columns.len(), table.columns.concat()))
}

/// Reads a single-column CSV (header row required), or the first column of a wider one.
pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let table = read_table(std::fs::File::open(path)?)?;
    table
        .columns
        .into_iter()
        .next()
        .filter(|c| !c.is_empty())
        .ok_or_else(|| Error::Invalid("vector CSV has no data".into()))
}

/// Rescales each column to unit mean square (‖col‖² = n) without centering.
///
/// Returns the scaled matrix and the per-column multipliers. Columns with zero
/// empirical standard deviation are rejected.
pub fn standardize_columns(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    let mut scales = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let c = col(m, j);
        let mean = c.iter().sum::<f64>() / n;
        let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let max_abs = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if var <= (1e-12 * max_abs).powi(2) {
            return Err(Error::DegenerateColumn(format!("column {}", j + 1)));
        }
        let s = (n).sqrt() / norm2(c);
        out.column_mut(j).scale_mut(s);
        scales.push(s);
    }
    Ok((out, scales))
}
