//! CSV interchange: `#`-prefixed metadata lines, a header row, then records.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// A table with metadata comments, written and read in one fixed dialect.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

fn csv_err(row: usize, e: impl std::fmt::Display) -> Error {
    Error::Csv { row, msg: e.to_string() }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header).map_err(|e| csv_err(0, e))?;
        for (i, r) in self.rows.iter().enumerate() {
            w.write_record(r).map_err(|e| csv_err(i + 1, e))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    /// Parses a table. Row numbers in errors count data records from 1.
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut meta = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rd
            .headers()
            .map_err(|e| csv_err(0, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(i + 1, e))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { meta, header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(0, format!("missing column `{name}`")))
    }

    fn parse<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let raw = &self.rows[row][col];
        raw.parse()
            .map_err(|_| csv_err(row + 1, format!("cannot parse `{raw}` in column `{}`", self.header[col])))
    }
}

/// Reads the `cell,value` schema; cells must be `0, 1, 2, …` in order.
pub fn read_cell_values<R: Read>(input: R) -> Result<Vec<f64>> {
    let t = Table::read_from(input)?;
    let (c, v) = (t.column("cell")?, t.column("value")?);
    let mut out = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        let cell: usize = t.parse(i, c)?;
        if cell != i {
            return Err(csv_err(i + 1, format!("expected cell {i}, found {cell}")));
        }
        out.push(t.parse(i, v)?);
    }
    if out.is_empty() {
        return Err(csv_err(0, "no records"));
    }
    Ok(out)
}

pub fn cell_values_table(values: &[f64]) -> Table {
    let mut t = Table::new(&["cell", "value"]);
    for (i, v) in values.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(*v)]);
    }
    t
}

/// Reads a tensor with index columns `i0, i1, …` and a `value` column, in
/// any row order. Returns the shape and the row-major values.
pub fn read_tensor<R: Read>(input: R) -> Result<(Vec<usize>, Vec<f64>)> {
    let t = Table::read_from(input)?;
    let v = t.column("value")?;
    let idx_cols: Vec<usize> = (0..)
        .map_while(|k| t.header.iter().position(|h| *h == format!("i{k}")))
        .collect();
    if idx_cols.is_empty() {
        return Err(csv_err(0, "missing index column `i0`"));
    }
    let mut entries = Vec::with_capacity(t.rows.len());
    let mut shape = vec![0usize; idx_cols.len()];
    for i in 0..t.rows.len() {
        let idx: Vec<usize> = idx_cols.iter().map(|c| t.parse(i, *c)).collect::<Result<_>>()?;
        for (s, x) in shape.iter_mut().zip(&idx) {
            *s = (*s).max(x + 1);
        }
        entries.push((i, idx, t.parse::<f64>(i, v)?));
    }
    let dim: usize = shape.iter().product();
    if dim == 0 {
        return Err(csv_err(0, "no records"));
    }
    let mut out = vec![f64::NAN; dim];
    for (row, idx, val) in entries {
        let flat = idx.iter().zip(&shape).fold(0, |acc, (i, n)| acc * n + i);
        if !out[flat].is_nan() {
            return Err(csv_err(row + 1, "duplicate index"));
        }
        out[flat] = val;
    }
    if out.iter().any(|x| x.is_nan()) {
        return Err(csv_err(0, "tensor has missing entries"));
    }
    Ok((shape, out))
}

pub fn tensor_table(shape: &[usize], values: &[f64]) -> Table {
    let mut header: Vec<String> = (0..shape.len()).map(|k| format!("i{k}")).collect();
    header.push("value".into());
    let mut t = Table {
        header,
        ..Table::default()
    };
    for (flat, v) in values.iter().enumerate() {
        let mut idx = vec![0; shape.len()];
        let mut rest = flat;
        for k in (0..shape.len()).rev() {
            idx[k] = rest % shape[k];
            rest /= shape[k];
        }
        let mut row: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        row.push(fmt_f64(*v));
        t.push(row);
    }
    t
}

/// Reads the `member,row,col,value` family schema into square matrices of a
/// common size; absent entries are zero.
pub fn read_family<R: Read>(input: R) -> Result<Vec<DMatrix<f64>>> {
    let t = Table::read_from(input)?;
    let cols = [t.column("member")?, t.column("row")?, t.column("col")?, t.column("value")?];
    let mut entries = Vec::with_capacity(t.rows.len());
    let (mut members, mut dim) = (0usize, 0usize);
    for i in 0..t.rows.len() {
        let m: usize = t.parse(i, cols[0])?;
        let r: usize = t.parse(i, cols[1])?;
        let c: usize = t.parse(i, cols[2])?;
        let v: f64 = t.parse(i, cols[3])?;
        members = members.max(m + 1);
        dim = dim.max(r + 1).max(c + 1);
        entries.push((m, r, c, v));
    }
    if members == 0 {
        return Err(csv_err(0, "no records"));
    }
    let mut out = vec![DMatrix::zeros(dim, dim); members];
    for (m, r, c, v) in entries {
        out[m][(r, c)] = v;
    }
    Ok(out)
}

pub fn family_table(mats: &[DMatrix<f64>]) -> Table {
    let mut t = Table::new(&["member", "row", "col", "value"]);
    for (m, a) in mats.iter().enumerate() {
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                t.push(vec![m.to_string(), r.to_string(), c.to_string(), fmt_f64(a[(r, c)])]);
            }
        }
    }
    t
}

pub fn kernel_table(k: &Kernel) -> Table {
    let m = k.half_width() as i64;
    let mut t = Table::new(&["offset", "value"]).with_meta("width", fmt_f64(k.width()));
    for o in -m..=m {
        t.push(vec![o.to_string(), fmt_f64(k.at(o))]);
    }
    t
}
