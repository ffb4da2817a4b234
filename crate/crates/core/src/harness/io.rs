//! CSV persistence for point clouds.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::particles::ParticleSet;

/// Header `x0,...,x{d-1}`, one row per point.
pub fn write_points<W: Write>(points: &ParticleSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..points.dim()).map(|i| format!("x{i}")))?;
    for p in points.iter() {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_file(points: &ParticleSet, path: &Path) -> Result<()> {
    write_points(points, std::fs::File::create(path)?)
}

/// Reads numeric rows; a non-numeric first row is treated as a header.
pub fn read_points<R: Read>(input: R) -> Result<ParticleSet> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut data = Vec::new();
    let mut dim = None;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("row {}: {e}", row + 1))),
        };
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::invalid(format!("row {} has {} columns, expected {d}", row + 1, values.len())))
            }
            _ => {}
        }
        data.extend(values);
    }
    match dim {
        Some(d) if d > 0 => ParticleSet::from_flat(data, d),
        _ => Err(Error::invalid("no numeric rows")),
    }
}

pub fn read_points_file(path: &Path) -> Result<ParticleSet> {
    read_points(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let p = ParticleSet::from_rows(&[[0.1, -2.5e-17], [1.0 / 3.0, 7.0]]).unwrap();
        let mut buf = Vec::new();
        write_points(&p, &mut buf).unwrap();
        let back = read_points(buf.as_slice()).unwrap();
        assert_eq!(back.as_flat(), p.as_flat());
        assert_eq!(back.dim(), 2);
    }

    #[test]
    fn headerless_and_ragged() {
        let p = read_points("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        assert!(read_points("1,2\n3\n".as_bytes()).is_err());
        assert!(read_points("a,b\n".as_bytes()).is_err());
        assert!(read_points("1,2\nx,4\n".as_bytes()).is_err());
    }
}
