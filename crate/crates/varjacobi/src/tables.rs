//! Plot-ready CSV tables.

use std::io;

use varjacobi_core::conjugacy::subwronskian;
use varjacobi_core::eswaran::eswaran_ratio;
use varjacobi_core::grassmann::RankSample;
use varjacobi_core::{FrameTrajectory, ScalarSolutionSet, TestField};

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// `t, rank, flag_0 … flag_(2k−1), vertical_dim`.
pub fn write_rank<W: io::Write>(out: W, rows: &[RankSample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let flags = rows.first().map_or(0, |r| r.flags.len());
    let mut header = vec!["t".to_string(), "rank".to_string()];
    header.extend((0..flags).map(|i| format!("flag_{i}")));
    header.push("vertical_dim".to_string());
    w.write_record(&header)?;
    for r in rows {
        let mut record = vec![num(r.t), r.rank.to_string()];
        record.extend(r.flags.iter().map(|c| c.as_str().to_string()));
        record.push(r.vertical_dim.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `t, W` with `W = det Y` on the integration grid.
pub fn write_wronskian<W: io::Write>(out: W, traj: &FrameTrajectory) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "W"])?;
    for i in 0..traj.len() {
        w.write_record([num(traj.time(i)), num(subwronskian(traj, i))])?;
    }
    w.flush()?;
    Ok(())
}

/// `t` followed by the entries of `Ψ(t)` in row-major order.
pub fn write_frame<W: io::Write>(out: W, traj: &FrameTrajectory) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let m = traj.frame(0).nrows();
    let mut header = vec!["t".to_string()];
    header.extend((0..m).flat_map(|r| (0..m).map(move |c| format!("psi_{r}_{c}"))));
    w.write_record(&header)?;
    for i in 0..traj.len() {
        let psi = traj.frame(i);
        let mut record = vec![num(traj.time(i))];
        record.extend((0..m).flat_map(|r| (0..m).map(move |c| num(psi[(r, c)]))));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `t, W[σ], ratio` for the scalar route; the ratio column is empty where
/// `W[σ]` vanishes.
pub fn write_scalar<W: io::Write>(out: W, sols: &ScalarSolutionSet, field: &TestField) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "W_sigma", "ratio"])?;
    let k = sols.problem().order();
    for (i, &t) in sols.grid().iter().enumerate() {
        let jet: Vec<f64> = field.jet(t, k).entries().iter().map(|e| e[0]).collect();
        let ratio = eswaran_ratio(&jet, sols, t).map(num).unwrap_or_default();
        w.write_record([num(t), num(sols.wronskian(i)), ratio])?;
    }
    w.flush()?;
    Ok(())
}
