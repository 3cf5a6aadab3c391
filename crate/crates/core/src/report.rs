//! Error tables: one row per mesh, observed rates, CSV output.

use std::io::Write;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 16] = [
    "level",
    "h_max",
    "dofs_p",
    "dofs_u",
    "err_p_L2",
    "err_p_energy",
    "err_u_L2",
    "err_u_energy",
    "eta_total",
    "cg_iters_p",
    "cg_iters_u",
    "wall_time",
    "rate_p_L2",
    "rate_p_energy",
    "rate_u_L2",
    "rate_u_energy",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorRow {
    pub level: usize,
    pub h_max: f64,
    pub dofs_p: usize,
    pub dofs_u: usize,
    pub err_p_l2: f64,
    pub err_p_energy: f64,
    pub err_u_l2: f64,
    pub err_u_energy: f64,
    pub eta_total: f64,
    pub cg_iters_p: usize,
    pub cg_iters_u: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl ErrorRow {
    /// `(p_L2, p_energy, u_L2, u_energy)`.
    pub fn errors(&self) -> [f64; 4] {
        [self.err_p_l2, self.err_p_energy, self.err_u_l2, self.err_u_energy]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    /// Rates are only meaningful when consecutive rows halve `h`.
    pub uniform: bool,
}

impl ErrorReport {
    pub fn uniform() -> Self {
        Self { rows: Vec::new(), uniform: true }
    }

    pub fn adaptive() -> Self {
        Self { rows: Vec::new(), uniform: false }
    }

    /// `log₂(e_{k−1}/e_k)` per error column for row `k ≥ 1` of a uniform table.
    pub fn rates(&self, k: usize) -> Option<[f64; 4]> {
        if !self.uniform || k == 0 || k >= self.rows.len() {
            return None;
        }
        let (prev, cur) = (self.rows[k - 1].errors(), self.rows[k].errors());
        Some([0, 1, 2, 3].map(|i| (prev[i] / cur[i]).log2()))
    }

    /// Rates between the last two rows.
    pub fn final_rates(&self) -> Option<[f64; 4]> {
        self.rates(self.rows.len().saturating_sub(1))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_error)?;
        for (k, row) in self.rows.iter().enumerate() {
            let mut rec = vec![
                row.level.to_string(),
                sci(row.h_max),
                row.dofs_p.to_string(),
                row.dofs_u.to_string(),
                sci(row.err_p_l2),
                sci(row.err_p_energy),
                sci(row.err_u_l2),
                sci(row.err_u_energy),
                sci(row.eta_total),
                row.cg_iters_p.to_string(),
                row.cg_iters_u.to_string(),
                format!("{:.3}", row.wall_time),
            ];
            match self.rates(k) {
                Some(r) => rec.extend(r.iter().map(|v| format!("{v:.4}"))),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
