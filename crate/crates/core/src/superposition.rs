//! Two-configuration superpositions `c1 |A⟩ + c2 |B⟩` with
//! `c2 = sqrt(1 - c1²)`, and scans over `c1²`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::g12;
use crate::information::{InformationReport, System};
use crate::quadrature::QuadratureScheme;
use crate::wavefunction::{Configuration, WaveFunction};

/// Samples in the default `c1²` grid (step 0.05 over [0, 1]).
pub const DEFAULT_GRID_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionSpec {
    pub a: Configuration,
    pub b: Configuration,
    pub c1sq: f64,
    pub interference: bool,
}

impl SuperpositionSpec {
    pub fn coefficients(&self) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&self.c1sq) || self.c1sq.is_nan() {
            return Err(Error::Domain {
                what: "c1^2",
                value: self.c1sq,
                domain: "[0, 1]".into(),
            });
        }
        Ok((self.c1sq.sqrt(), (1.0 - self.c1sq).sqrt()))
    }
}

pub fn build_superposition(spec: &SuperpositionSpec) -> Result<WaveFunction> {
    let (c1, c2) = spec.coefficients()?;
    WaveFunction::superposition(&spec.a, &spec.b, c1, c2, spec.interference)
}

/// `0, 0.05, ..., 1`.
pub fn default_grid() -> Vec<f64> {
    (0..DEFAULT_GRID_POINTS).map(|i| i as f64 / (DEFAULT_GRID_POINTS - 1) as f64).collect()
}

/// Parses `start:step:end` or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("cannot parse c1^2 grid '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let (start, step, end) = (v[0], v[1], v[2]);
        if !(step > 0.0) || end < start {
            return Err(bad());
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

/// Rejects grids that cannot describe a trend.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::invalid("a c1^2 grid needs at least three samples"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("c1^2 grid must be strictly increasing"));
    }
    if grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::invalid("c1^2 grid values must lie in [0, 1]"));
    }
    Ok(())
}

/// One scan sample; `report` is an error when that sample failed.
#[derive(Debug)]
pub struct ScanSample {
    pub c1sq: f64,
    pub report: Result<InformationReport>,
}

#[derive(Debug)]
pub struct ScanResult {
    pub samples: Vec<ScanSample>,
}

impl ScanResult {
    /// `(c1², report)` for the successful samples.
    pub fn ok(&self) -> impl Iterator<Item = (f64, &InformationReport)> {
        self.samples.iter().filter_map(|s| s.report.as_ref().ok().map(|r| (s.c1sq, r)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (f64, &Error)> {
        self.samples.iter().filter_map(|s| s.report.as_ref().err().map(|e| (s.c1sq, e)))
    }

    /// `(c1², value)` for one measure chosen by `f`.
    pub fn series(&self, f: impl Fn(&InformationReport) -> f64) -> Vec<(f64, f64)> {
        self.ok().map(|(c, r)| (c, f(r))).collect()
    }

    /// Sample position of the largest value of a measure.
    pub fn argmax(&self, f: impl Fn(&InformationReport) -> f64) -> Option<f64> {
        self.series(f).into_iter().fold(None, |best: Option<(f64, f64)>, (c, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((c, v)),
        }).map(|(c, _)| c)
    }

    pub fn argmin(&self, f: impl Fn(&InformationReport) -> f64) -> Option<f64> {
        self.argmax(|r| -f(r))
    }

    /// Writes `c1sq,s1,s2,s3,I_pair,I3,I_rho_gamma,I_gamma_gamma,I_higher`;
    /// failed samples get `NaN` values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "c1sq,s1,s2,s3,I_pair,I3,I_rho_gamma,I_gamma_gamma,I_higher")?;
        for s in &self.samples {
            let values = match &s.report {
                Ok(r) => r.table_values(),
                Err(_) => [f64::NAN; 8],
            };
            let row: Vec<String> = std::iter::once(s.c1sq).chain(values).map(g12).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates the information report at each `c1²` in `grid`.
///
/// Samples are computed in parallel; a failing sample is recorded without
/// aborting the others.
pub fn scan_coefficient(
    a: &Configuration,
    b: &Configuration,
    grid: &[f64],
    interference: bool,
    scheme: &QuadratureScheme,
) -> Result<ScanResult> {
    validate_grid(grid)?;
    scheme.validate()?;
    let samples = grid
        .par_iter()
        .map(|&c1sq| {
            let spec = SuperpositionSpec { a: a.clone(), b: b.clone(), c1sq, interference };
            let report = build_superposition(&spec).and_then(|wf| System::new(wf, *scheme)?.report());
            if let Err(e) = &report {
                log::warn!("c1^2 = {c1sq}: {e}");
            }
            ScanSample { c1sq, report }
        })
        .collect();
    Ok(ScanResult { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbitals::{Model, Space};
    use crate::wavefunction::SymmetryClass;
    use approx::assert_abs_diff_eq;

    fn cfg(ns: &[u32], sym: SymmetryClass) -> Configuration {
        Configuration::new(Model::particle_in_box(1.0).unwrap(), ns.to_vec(), sym, Space::Position).unwrap()
    }

    #[test]
    fn grids() {
        let g = default_grid();
        assert_eq!(g.len(), 21);
        assert_abs_diff_eq!(g[10], 0.5);
        assert_eq!(parse_grid("0:0.25:1").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2,0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(parse_grid("a:b").is_err());
        assert!(validate_grid(&[0.0, 0.5]).is_err());
        assert!(validate_grid(&[0.0, 0.5, 0.5]).is_err());
        assert!(validate_grid(&[0.0, 0.5, 1.2]).is_err());
    }

    #[test]
    fn endpoints_reduce_to_single_configurations() {
        let a = cfg(&[1, 2, 3], SymmetryClass::Antisymmetric);
        let b = cfg(&[1, 2, 4], SymmetryClass::Antisymmetric);
        let scheme = QuadratureScheme::finite_default();
        let scan = scan_coefficient(&a, &b, &[0.0, 0.5, 1.0], true, &scheme).unwrap();
        let ra = System::from_configuration(&a, scheme).unwrap().report().unwrap();
        let s3: Vec<f64> = scan.series(|r| r.entropies.s3).into_iter().map(|(_, v)| v).collect();
        assert_abs_diff_eq!(s3[2], ra.entropies.s3, epsilon = 1e-10);
        let mut csv = Vec::new();
        scan.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("c1sq,s1,s2,s3,I_pair,I3,I_rho_gamma,I_gamma_gamma,I_higher\n"));
    }

    #[test]
    fn bad_coefficient() {
        let a = cfg(&[1, 2, 3], SymmetryClass::Symmetric);
        let spec = SuperpositionSpec { a: a.clone(), b: a, c1sq: 1.5, interference: true };
        assert!(matches!(build_superposition(&spec), Err(Error::Domain { .. })));
    }
}
