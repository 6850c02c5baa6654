//! File formats: data vectors (one count per line), CSV workloads `lo,hi`,
//! CSV partitions, CSV points `x,y` and CSV rectangles `xlo,xhi,ylo,yhi`.
//! CSV inputs may start with a header row.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::domain::{DataVector, Interval, Partition, Workload};
use crate::error::{Error, Result};

pub fn parse_data(text: &str) -> Result<DataVector> {
    let counts = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("line {}: '{}': {e}", i + 1, l.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    DataVector::new(counts)
}

pub fn read_data(path: &Path) -> Result<DataVector> {
    parse_data(&std::fs::read_to_string(path)?)
}

pub fn write_data<W: Write>(x: &DataVector, mut out: W) -> Result<()> {
    for c in x.counts() {
        writeln!(out, "{c}")?;
    }
    Ok(())
}

/// Rows of `N` numeric fields. A first row that does not parse is taken
/// as a header.
fn read_rows<T: FromStr, const N: usize, R: Read>(input: R) -> Result<Vec<[T; N]>>
where
    T::Err: std::fmt::Display,
{
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() != N {
            return Err(Error::Parse(format!("row {}: expected {N} fields, got {}", i + 1, record.len())));
        }
        let parsed: std::result::Result<Vec<T>, String> =
            record.iter().map(|f| f.parse::<T>().map_err(|e| format!("'{f}': {e}"))).collect();
        match parsed {
            Ok(v) => rows.push(v.try_into().ok().expect("length checked")),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", i + 1))),
        }
    }
    Ok(rows)
}

pub fn parse_workload<R: Read>(input: R, n: usize) -> Result<Workload> {
    let queries = read_rows::<usize, 2, _>(input)?
        .into_iter()
        .map(|[lo, hi]| Interval::new(lo, hi))
        .collect::<Result<Vec<_>>>()?;
    Workload::new(queries, n)
}

pub fn read_workload(path: &Path, n: usize) -> Result<Workload> {
    parse_workload(std::fs::File::open(path)?, n)
}

fn write_intervals<W: Write>(intervals: &[Interval], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lo", "hi"]).map_err(|e| Error::Parse(e.to_string()))?;
    for iv in intervals {
        w.write_record([iv.lo.to_string(), iv.hi.to_string()])
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_workload<W: Write>(w: &Workload, out: W) -> Result<()> {
    write_intervals(w.queries(), out)
}

pub fn write_partition<W: Write>(p: &Partition, out: W) -> Result<()> {
    write_intervals(p.buckets(), out)
}

pub fn parse_points<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    Ok(read_rows::<f64, 2, _>(input)?.into_iter().map(|[x, y]| (x, y)).collect())
}

pub fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    parse_points(std::fs::File::open(path)?)
}

/// Rectangles as `[xlo, xhi, ylo, yhi]`.
pub fn parse_rectangles<R: Read>(input: R) -> Result<Vec<[f64; 4]>> {
    read_rows::<f64, 4, _>(input)
}

pub fn read_rectangles(path: &Path) -> Result<Vec<[f64; 4]>> {
    parse_rectangles(std::fs::File::open(path)?)
}
