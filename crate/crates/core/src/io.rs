//! CSV and JSON output. Floats are written with 17 significant digits so
//! they read back bit-exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::bloch::BlochTrajectory;
use crate::ensemble::PolarizationTrace;
use crate::error::{Error, Result};
use crate::noise::{AutocorrEstimate, NoiseTrace};
use crate::spectrum::SpectrumResult;

pub const ENSEMBLE_COLUMNS: [&str; 7] = [
    "time",
    "rho11_energy",
    "p_x",
    "p_y",
    "p_z",
    "leakage",
    "stderr_rho11",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer_for<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

pub fn write_ensemble_csv<W: Write>(trace: &PolarizationTrace, w: W) -> Result<()> {
    let mut out = writer_for(w);
    out.write_record(ENSEMBLE_COLUMNS)?;
    for k in 0..trace.len() {
        let p = trace.p_vec[k];
        out.write_record([
            fmt_f64(trace.times[k]),
            fmt_f64(trace.rho11_energy[k]),
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            fmt_f64(p[2]),
            fmt_f64(trace.leakage_avg[k]),
            fmt_f64(trace.stderr_rho11[k]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn ensemble_csv_bytes(trace: &PolarizationTrace) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_ensemble_csv(trace, &mut buf)?;
    Ok(buf)
}

/// Columns of an ensemble CSV as read back from disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnsembleSeries {
    pub time: Vec<f64>,
    pub rho11_energy: Vec<f64>,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
    pub p_z: Vec<f64>,
    pub leakage: Vec<f64>,
    pub stderr_rho11: Vec<f64>,
}

pub fn read_ensemble_csv(path: &Path) -> Result<EnsembleSeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            message: format!("missing column \"{name}\""),
        })
    };
    let idx: Vec<usize> = ENSEMBLE_COLUMNS.iter().map(|c| column(c)).collect::<Result<_>>()?;
    let mut s = EnsembleSeries::default();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut vals = [0.0; 7];
        for (slot, &i) in vals.iter_mut().zip(&idx) {
            let field = record.get(i).unwrap_or("");
            *slot = field.trim().parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                message: format!("row {}: bad number \"{field}\"", line + 2),
            })?;
        }
        s.time.push(vals[0]);
        s.rho11_energy.push(vals[1]);
        s.p_x.push(vals[2]);
        s.p_y.push(vals[3]);
        s.p_z.push(vals[4]);
        s.leakage.push(vals[5]);
        s.stderr_rho11.push(vals[6]);
    }
    Ok(s)
}

pub fn write_spectrum_csv<W: Write>(spectrum: &SpectrumResult, w: W) -> Result<()> {
    let mut out = writer_for(w);
    out.write_record(["level_index", "energy"])?;
    for (i, e) in spectrum.energies.iter().enumerate() {
        out.write_record([i.to_string(), fmt_f64(*e)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_noise_csv<W: Write>(trace: &NoiseTrace, w: W) -> Result<()> {
    let mut out = writer_for(w);
    out.write_record(["step", "time", "value"])?;
    for (k, v) in trace.values.iter().enumerate() {
        out.write_record([
            k.to_string(),
            fmt_f64(k as f64 * trace.params.dt),
            fmt_f64(*v),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_autocorr_csv<W: Write>(est: &AutocorrEstimate, dt: f64, w: W) -> Result<()> {
    let mut out = writer_for(w);
    out.write_record(["lag", "time", "correlation"])?;
    for (k, c) in est.correlation.iter().enumerate() {
        out.write_record([k.to_string(), fmt_f64(k as f64 * dt), fmt_f64(*c)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_bloch_csv<W: Write>(traj: &BlochTrajectory, w: W) -> Result<()> {
    let mut out = writer_for(w);
    out.write_record(["time", "p_x", "p_y", "p_z"])?;
    for (t, p) in traj.times.iter().zip(&traj.p) {
        out.write_record([fmt_f64(*t), fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(File::create(path)?)
}
