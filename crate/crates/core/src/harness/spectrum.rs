//! Spectrum tables with closed-form and Rayleigh-certified columns.

use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

use crate::error::Result;
use crate::spectral::{
    eigenvalue, lambda_improved, lambda_sharp, rayleigh_lowest, sector_bottom, Constraint,
    RayleighConfig, RayleighProblem,
};

/// Relative deviation above which a certified row fails.
pub const CERTIFY_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub d: usize,
    pub alpha: f64,
    pub l: u32,
    pub k: u32,
    pub lambda: f64,
    pub valid: bool,
    /// Rayleigh minimum of the sector after removing the modes below `(l, k)`.
    pub numeric: Option<f64>,
    /// `min(lambda, sector bottom)` when valid, the sector bottom otherwise.
    pub reference: f64,
    pub sector_bottom: f64,
    /// The Rayleigh minimum is separated from the sector bottom.
    pub certified: bool,
    pub relative_error: Option<f64>,
    pub sharp_branch: String,
    pub improved_branch: String,
}

impl SpectrumRow {
    pub fn within(&self, tol: f64) -> bool {
        self.relative_error.is_none_or(|e| e <= tol)
    }
}

/// Constraints that remove every mode of sector `l` below `(l, k)`, for
/// the rows the verifier can reach.
pub fn certifying_constraints(l: u32, k: u32) -> Option<Vec<Constraint>> {
    match (l, k) {
        (0, 1) => Some(vec![Constraint::Mass]),
        (0, 2) => Some(vec![Constraint::Mass, Constraint::SecondMoment]),
        (1, 0) => Some(vec![]),
        (1, 1) => Some(vec![Constraint::FirstMoment]),
        (_, 0) if l >= 2 => Some(vec![]),
        _ => None,
    }
}

fn label<T: std::fmt::Display>(v: Result<(f64, T)>) -> String {
    v.map_or_else(|_| "unsupported".into(), |(_, b)| b.to_string())
}

/// Rows `(l, k)`, `l <= l_max`, `1 <= k + l`, `k <= k_max` for every
/// `alpha`, in input order. With `rayleigh` set, reachable rows carry a
/// numeric column.
pub fn spectrum_rows(
    d: usize,
    alphas: &[f64],
    l_max: u32,
    k_max: u32,
    rayleigh: Option<&RayleighConfig>,
) -> Result<Vec<SpectrumRow>> {
    let l_max = if d == 1 { l_max.min(1) } else { l_max };
    let mut cells = Vec::new();
    for &alpha in alphas {
        for l in 0..=l_max {
            for k in 0..=k_max {
                if (l, k) != (0, 0) {
                    cells.push((alpha, l, k));
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(alpha, l, k)| {
            let (lambda, valid) = eigenvalue(l, k, alpha, d);
            let bottom = sector_bottom(alpha, d, l);
            let reference = if valid { lambda.min(bottom) } else { bottom };
            let mut row = SpectrumRow {
                d,
                alpha,
                l,
                k,
                lambda,
                valid,
                numeric: None,
                reference,
                sector_bottom: bottom,
                certified: false,
                relative_error: None,
                sharp_branch: label(lambda_sharp(alpha, d)),
                improved_branch: label(lambda_improved(alpha, d)),
            };
            if let (Some(cfg), Some(cons)) = (rayleigh, certifying_constraints(l, k)) {
                let problem = RayleighProblem::new(alpha, d, l, &cons)?;
                let r = rayleigh_lowest(&problem, cfg);
                row.numeric = Some(r.value);
                row.certified = r.certified;
                row.relative_error = Some(((r.value - reference) / reference).abs());
            }
            Ok(row)
        })
        .collect()
}

/// Writes the table; an empty row set gives an empty file.
pub fn write_spectrum(path: &Path, rows: &[SpectrumRow]) -> Result<()> {
    if rows.is_empty() {
        std::fs::write(path, "")?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "d",
        "alpha",
        "l",
        "k",
        "lambda",
        "valid",
        "certified_numeric",
        "relative_error",
        "sector_bottom",
        "numeric",
        "certified",
        "sharp_branch",
        "improved_branch",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.12e}"));
    for r in rows {
        w.write_record([
            r.d.to_string(),
            r.alpha.to_string(),
            r.l.to_string(),
            r.k.to_string(),
            format!("{:.12e}", r.lambda),
            r.valid.to_string(),
            opt(r.numeric.filter(|_| r.certified)),
            opt(r.relative_error),
            format!("{:.12e}", r.sector_bottom),
            opt(r.numeric),
            r.certified.to_string(),
            r.sharp_branch.clone(),
            r.improved_branch.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_rows() {
        let rows = spectrum_rows(5, &[-4.0, -6.0], 2, 2, None).unwrap();
        assert_eq!(rows.len(), 2 * 8);
        let r01 = rows.iter().find(|r| r.alpha == -4.0 && (r.l, r.k) == (0, 1)).unwrap();
        assert_eq!((r01.lambda, r01.valid), (6.0, true));
        assert!(rows.iter().all(|r| r.numeric.is_none() && r.within(0.0)));
        assert_eq!(r01.improved_branch, "continuum");
        let r = rows.iter().find(|r| r.alpha == -6.0).unwrap();
        assert_eq!(r.improved_branch, "lambda_02");
    }

    #[test]
    fn one_dimension_has_two_sectors() {
        let rows = spectrum_rows(1, &[-2.0], 4, 2, None).unwrap();
        assert!(rows.iter().all(|r| r.l <= 1));
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn empty_grid_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let rows = spectrum_rows(5, &[], 2, 2, None).unwrap();
        write_spectrum(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.is_empty());
    }
}
