//! Evaluation report files: `report.json` plus the per-point CSVs
//! `mds_coords.csv` and `nn_distances.csv`.

use std::fmt::Write as _;
use std::path::Path;

use pnrsynth_core::evalsuite::EvalReport;

use crate::error::{Error, Result};

pub fn report_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn mds_csv(report: &EvalReport) -> String {
    let mut out = String::from("x,y,label,delta\n");
    for p in &report.mds.coords {
        writeln!(out, "{},{},{},{}", p.x, p.y, p.label, p.delta).unwrap();
    }
    out
}

pub fn nn_csv(report: &EvalReport) -> String {
    let m = &report.memorization;
    let mut out = String::from("d_train,d_test\n");
    for (a, b) in m.d_train.iter().zip(&m.d_test) {
        writeln!(out, "{a},{b}").unwrap();
    }
    out
}

/// Writes the three report files into `dir`, creating it if needed.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    for (name, text) in [
        ("report.json", report_json(report)),
        ("mds_coords.csv", mds_csv(report)),
        ("nn_distances.csv", nn_csv(report)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(Error::io(&path))?;
    }
    Ok(())
}
