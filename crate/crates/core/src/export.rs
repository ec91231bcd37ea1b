//! CSV and JSON export of trajectories and sheets.
//!
//! CSV columns are `t1..tp`, `x1..xn`, then `v{i}_{α}` for the jet
//! coordinates, every value written as `{:.16e}` so it reads back exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Sample, Sheet, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Solution {
    Trajectory(Trajectory),
    Sheet(Sheet),
}

pub fn header(p: usize, n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=p).map(|a| format!("t{a}")).collect();
    h.extend((1..=n).map(|i| format!("x{i}")));
    for i in 1..=n {
        for a in 1..=p {
            h.push(format!("v{i}_{a}"));
        }
    }
    h
}

fn fmt_row(values: impl Iterator<Item = f64>) -> Vec<String> {
    values.map(|v| format!("{v:.16e}")).collect()
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(1, traj.n()))?;
    for s in &traj.samples {
        w.write_record(fmt_row(std::iter::once(s.t).chain(s.x.iter().copied()).chain(s.v.iter().copied())))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sheet_csv<W: Write>(sheet: &Sheet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(sheet.p, sheet.n))?;
    for k in 0..sheet.node_count() {
        let t = sheet.t_at(&sheet.multi_index(k));
        w.write_record(fmt_row(
            t.into_iter()
                .chain(sheet.x[k].iter().copied())
                .chain(sheet.v[k].iter().copied()),
        ))?;
    }
    w.flush()?;
    Ok(())
}

/// Header and numeric rows of an exported CSV.
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Problem(format!("bad number {s:?} in CSV: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Rebuild a one-parameter trajectory from CSV written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: Read>(input: R, provenance: &str) -> Result<Trajectory> {
    let (header, rows) = read_csv(input)?;
    let n = header.iter().filter(|h| h.starts_with('x')).count();
    if header != self::header(1, n) {
        return Err(Error::Problem(format!("unexpected trajectory header {header:?}")));
    }
    let samples: Vec<Sample> = rows
        .into_iter()
        .map(|r| Sample {
            t: r[0],
            x: r[1..=n].to_vec(),
            v: r[n + 1..].to_vec(),
        })
        .collect();
    let step = match samples.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => 0.0,
    };
    Ok(Trajectory {
        step,
        provenance: provenance.to_string(),
        samples,
    })
}

pub fn to_json(sol: &Solution) -> String {
    serde_json::to_string(sol).expect("solutions always serialize")
}

pub fn from_json(src: &str) -> Result<Solution> {
    Ok(serde_json::from_str(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DistTensorField;
    use crate::geometry::Metrics;
    use crate::integrate::{integrate_first_order, integrate_sheet};
    use crate::prolong::FirstOrderODESystem;

    fn rotation_traj() -> Trajectory {
        let x = DistTensorField::vector(Metrics::flat(1, 2), &["-x2", "x1"]).unwrap();
        integrate_first_order(&FirstOrderODESystem::from_field(&x).unwrap(), 0.0, &[1.0, 0.0], 1e-3, 1000)
            .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let tr = rotation_traj();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1002);
        assert!(text.starts_with("t1,x1,x2,v1_1,v2_1\n"));
        let back = read_trajectory_csv(buf.as_slice(), &tr.provenance).unwrap();
        assert_eq!(back.samples, tr.samples);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let sol = Solution::Trajectory(rotation_traj());
        assert_eq!(from_json(&to_json(&sol)).unwrap(), sol);

        let x = DistTensorField::parse(Metrics::flat(2, 1), &[&["x1", "x1"]]).unwrap();
        let sheet = integrate_sheet(&x, &[0.0, 0.0], &[1.0], &[0.1, 0.1], &[5, 5]).unwrap();
        let mut buf = Vec::new();
        write_sheet_csv(&sheet, &mut buf).unwrap();
        let (h, rows) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(h, vec!["t1", "t2", "x1", "v1_1", "v1_2"]);
        assert_eq!(rows.len(), 36);
        let sol = Solution::Sheet(sheet);
        assert_eq!(from_json(&to_json(&sol)).unwrap(), sol);
    }
}
