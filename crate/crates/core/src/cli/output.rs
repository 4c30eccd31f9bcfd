//! CSV / JSON serialization of result rows.

use std::io::{self, Write};

use serde::Serialize;

use super::config::Format;

pub const GRID_HEADER: &str = "x,y,value,method,err_estimate,lower,upper,asymptotic,status";

/// One evaluated node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub value: Option<f64>,
    pub method: Option<String>,
    pub err_estimate: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub asymptotic: Option<f64>,
    pub status: String,
}

impl GridRow {
    pub fn is_ok(&self) -> bool {
        self.status.starts_with("ok")
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[GridRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{GRID_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.x),
            fmt_f64(r.y),
            cell(r.value),
            r.method.as_deref().unwrap_or(""),
            cell(r.err_estimate),
            cell(r.lower),
            cell(r.upper),
            cell(r.asymptotic),
            r.status
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(rows: &T, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, rows).map_err(io::Error::other)?;
    writeln!(w)
}

pub fn write_rows<W: Write>(rows: &[GridRow], format: Format, w: W) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(rows, w),
        Format::Json => write_json(&rows, w),
    }
}

/// Write to `path`, or to stdout when `path` is `None`.
pub fn with_sink<F>(path: Option<&std::path::Path>, write: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(std::fs::File::create(p)?);
            write(&mut file)?;
            file.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()
        }
    }
}
