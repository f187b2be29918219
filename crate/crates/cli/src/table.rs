//! Scan CSV rows and plot-ready `.dat` files.

use std::fmt::Write as _;

use relzeta::MultiplierBreakdown;

use crate::CliError;

pub const HEADER: &str = "p0,zeta,zeta_err,zetaK,zetaK_err,zeta0,zetaL,tildeZeta,tildeZeta0m,tildeZetaLm,tildeZeta1,m,kernel";

/// Quantities that get their own `.dat` file.
pub const PLOT_COLUMNS: [&str; 8] = ["zeta", "zetaK", "zeta0", "zetaL", "tildeZeta", "tildeZeta0m", "tildeZetaLm", "tildeZeta1"];

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub p0: f64,
    pub zeta: f64,
    pub zeta_err: f64,
    pub zeta_k: f64,
    pub zeta_k_err: f64,
    pub zeta0: f64,
    pub zeta_l: f64,
    pub tilde_zeta: f64,
    pub tilde_zeta0m: f64,
    pub tilde_zeta_lm: f64,
    pub tilde_zeta1: f64,
    pub m: f64,
    pub kernel: String,
}

impl Row {
    pub fn from_breakdown(b: &MultiplierBreakdown) -> Self {
        Row {
            p0: b.p0,
            zeta: b.zeta.value,
            zeta_err: b.zeta.err,
            zeta_k: b.zeta_k.value,
            zeta_k_err: b.zeta_k.err,
            zeta0: b.zeta0_full.value,
            zeta_l: b.zeta_l_full.value,
            tilde_zeta: b.tilde_zeta.value,
            tilde_zeta0m: b.tilde_zeta0m.value,
            tilde_zeta_lm: b.tilde_zeta_lm.value,
            tilde_zeta1: b.tilde_zeta1.value,
            m: b.m,
            kernel: b.cfg.to_string(),
        }
    }

    /// A row whose evaluation failed: every quantity is NaN.
    pub fn failed(p0: f64, m: f64, kernel: String) -> Self {
        let n = f64::NAN;
        Row {
            p0,
            zeta: n,
            zeta_err: n,
            zeta_k: n,
            zeta_k_err: n,
            zeta0: n,
            zeta_l: n,
            tilde_zeta: n,
            tilde_zeta0m: n,
            tilde_zeta_lm: n,
            tilde_zeta1: n,
            m,
            kernel,
        }
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "p0" => self.p0,
            "zeta" => self.zeta,
            "zetaK" => self.zeta_k,
            "zeta0" => self.zeta0,
            "zetaL" => self.zeta_l,
            "tildeZeta" => self.tilde_zeta,
            "tildeZeta0m" => self.tilde_zeta0m,
            "tildeZetaLm" => self.tilde_zeta_lm,
            "tildeZeta1" => self.tilde_zeta1,
            _ => return None,
        })
    }

    fn numbers(&self) -> [f64; 12] {
        [
            self.p0,
            self.zeta,
            self.zeta_err,
            self.zeta_k,
            self.zeta_k_err,
            self.zeta0,
            self.zeta_l,
            self.tilde_zeta,
            self.tilde_zeta0m,
            self.tilde_zeta_lm,
            self.tilde_zeta1,
            self.m,
        ]
    }
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".to_string()
    }
}

pub fn write_csv(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        for x in r.numbers() {
            out.push_str(&fmt17(x));
            out.push(',');
        }
        // kernel specs contain commas
        let _ = writeln!(out, "\"{}\"", r.kernel);
    }
    out
}

pub fn read_csv(text: &str) -> Result<Vec<Row>, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        _ => return Err(CliError::Usage("input is not a scan CSV (header mismatch)".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = || CliError::Usage(format!("malformed CSV row {}", i + 2));
        let fields: Vec<&str> = line.splitn(13, ',').collect();
        if fields.len() != 13 {
            return Err(bad());
        }
        let mut x = [0.0; 12];
        for (k, f) in fields[..12].iter().enumerate() {
            x[k] = f.trim().parse().map_err(|_| bad())?;
        }
        rows.push(Row {
            p0: x[0],
            zeta: x[1],
            zeta_err: x[2],
            zeta_k: x[3],
            zeta_k_err: x[4],
            zeta0: x[5],
            zeta_l: x[6],
            tilde_zeta: x[7],
            tilde_zeta0m: x[8],
            tilde_zeta_lm: x[9],
            tilde_zeta1: x[10],
            m: x[11],
            kernel: fields[12].trim().trim_matches('"').to_string(),
        });
    }
    Ok(rows)
}

/// Whitespace-separated `p0 value` lines, skipping failed points.
pub fn write_dat(rows: &[Row], column: &str) -> String {
    let mut out = format!("# p0 {column}\n");
    for r in rows {
        let y = r.column(column).unwrap_or(f64::NAN);
        if y.is_finite() {
            let _ = writeln!(out, "{} {}", fmt17(r.p0), fmt17(y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut r = Row::failed(10.0, 45.0, "hard:a=1,gamma=0.5".into());
        r.zeta = 1.0 / 3.0;
        let rows = read_csv(&write_csv(&[r.clone()])).unwrap();
        assert_eq!(rows[0].zeta, r.zeta);
        assert_eq!(rows[0].kernel, r.kernel);
        assert!(rows[0].zeta_k.is_nan());
    }
}
