//! Shannon entropies and mutual-information measures.
//!
//! For three particles the report holds the entropy triple `(s1, s2, s3)`
//! and the measures
//!
//! ```text
//! I      = 2 s1 - s2
//! I3     = 3 s1 - s3
//! I_ρΓ   = s1 + s2 - s3
//! I_ΓΓ   = 2 s2 - s1 - s3
//! I^3    = 3 s2 - 3 s1 - s3
//! ```
//!
//! For distinguishable particles the marginals differ per coordinate; `s1`
//! and `s2` are then the means of the three one-particle and the three pair
//! entropies, which keeps every formula above valid (`I^3` becomes
//! `Σ s_pairs - Σ s_single - s3`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densities::ReducedDensity;
use crate::error::{Error, Result};
use crate::orbitals::{Model, Space};
use crate::quadrature::{entropy_integrand, try_ordered_sum, AxisDomain, AxisRule, QuadratureScheme};
use crate::wavefunction::{Configuration, OrbitalTable, SymmetryClass, WaveFunction};

/// `1 + ln π`, the lower bound on `s_x + s_p`.
pub fn uncertainty_bound() -> f64 {
    1.0 + std::f64::consts::PI.ln()
}

/// Below this `|Ψ|²` the direct-integral integrands are dropped.
const DIRECT_FLOOR: f64 = 1e-18;

/// What a report was computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub model: Model,
    pub space: Space,
    pub symmetry: SymmetryClass,
    pub configurations: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
    pub interference: bool,
}

impl SystemDescriptor {
    fn of(wf: &WaveFunction) -> Self {
        SystemDescriptor {
            model: wf.model(),
            space: wf.space(),
            symmetry: wf.symmetry(),
            configurations: wf.terms().iter().map(|t| t.configuration.ns.clone()).collect(),
            coefficients: wf.terms().iter().map(|t| t.coefficient).collect(),
            interference: wf.interference(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyTriple {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// Error estimates of `s1`, `s2`, `s3`.
    pub errors: [f64; 3],
    pub space: Space,
}

/// Per-coordinate entropies of a distinguishable system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalEntropies {
    /// `s_{x1}, s_{x2}, s_{x3}`.
    pub single: [f64; 3],
    /// Pairs (1,2), (1,3), (2,3).
    pub pairs: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationReport {
    pub system: SystemDescriptor,
    pub entropies: EntropyTriple,
    pub i_pair: f64,
    pub i_total3: f64,
    pub i_one_pair: f64,
    pub i_pair_pair: f64,
    pub i_higher: f64,
    pub marginals: Option<MarginalEntropies>,
    pub tolerance: f64,
    /// Every entropy error estimate is within `tolerance`.
    pub converged: bool,
}

impl InformationReport {
    /// Builds the measures from an entropy triple.
    pub fn from_entropies(
        system: SystemDescriptor,
        entropies: EntropyTriple,
        marginals: Option<MarginalEntropies>,
        tolerance: f64,
    ) -> Result<Self> {
        let EntropyTriple { s1, s2, s3, errors, .. } = entropies;
        let i_pair = checked_pair_information(2.0 * s1 - s2, tolerance)?;
        Ok(InformationReport {
            system,
            entropies,
            i_pair,
            i_total3: 3.0 * s1 - s3,
            i_one_pair: s1 + s2 - s3,
            i_pair_pair: 2.0 * s2 - s1 - s3,
            i_higher: 3.0 * s2 - 3.0 * s1 - s3,
            marginals,
            tolerance,
            converged: errors.iter().all(|&e| e <= tolerance),
        })
    }

    /// The eight table quantities in display order:
    /// `s1, s2, s3, I, I3, I_ρΓ, I_ΓΓ, I^3`.
    pub fn table_values(&self) -> [f64; 8] {
        let e = &self.entropies;
        [e.s1, e.s2, e.s3, self.i_pair, self.i_total3, self.i_one_pair, self.i_pair_pair, self.i_higher]
    }

    /// Largest deviation among the hierarchy identities
    /// `I3 - I_ρΓ = I_ρΓ - I_ΓΓ = I_ΓΓ - I^3 = I`.
    pub fn hierarchy_defect(&self) -> f64 {
        [
            self.i_total3 - self.i_one_pair,
            self.i_one_pair - self.i_pair_pair,
            self.i_pair_pair - self.i_higher,
        ]
        .iter()
        .map(|d| (d - self.i_pair).abs())
        .fold(0.0, f64::max)
    }
}

/// Two-particle systems only have `s1`, `s2` and `I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoParticleReport {
    pub system: SystemDescriptor,
    pub s1: f64,
    pub s2: f64,
    pub errors: [f64; 2],
    pub i_pair: f64,
    pub tolerance: f64,
    pub converged: bool,
}

fn checked_pair_information(value: f64, tolerance: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -tolerance {
        log::warn!("pair mutual information {value:.3e} is negative within tolerance; clamped to 0");
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!(
            "pair mutual information {value:.6e} is negative beyond tolerance {tolerance:.1e}"
        )))
    }
}

/// `s_x + s_p` for one state against the entropic uncertainty bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySum {
    pub s_x: f64,
    pub s_p: f64,
    pub sum: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// A wavefunction together with the quadrature used to analyse it.
#[derive(Debug, Clone)]
pub struct System {
    wf: WaveFunction,
    scheme: QuadratureScheme,
}

impl System {
    pub fn new(wf: WaveFunction, scheme: QuadratureScheme) -> Result<Self> {
        scheme.validate()?;
        Ok(System { wf, scheme })
    }

    pub fn from_configuration(config: &Configuration, scheme: QuadratureScheme) -> Result<Self> {
        Self::new(WaveFunction::build(config)?, scheme)
    }

    /// Uses the default scheme for the configuration's model and space.
    pub fn with_defaults(config: &Configuration) -> Result<Self> {
        let scheme = QuadratureScheme::default_for(&config.model, config.space);
        Self::from_configuration(config, scheme)
    }

    pub fn wavefunction(&self) -> &WaveFunction {
        &self.wf
    }

    pub fn scheme(&self) -> &QuadratureScheme {
        &self.scheme
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::of(&self.wf)
    }

    fn rule(&self, scheme: &QuadratureScheme, dim: usize) -> Result<AxisRule> {
        let domain = AxisDomain::for_model(&self.wf.model(), self.wf.space(), self.wf.nmax(), scheme);
        AxisRule::for_scheme(&domain, scheme, dim)
    }

    fn marginal(&self, kept: &[usize]) -> Result<ReducedDensity> {
        ReducedDensity::new(&self.wf, kept, &self.scheme)
    }

    /// Entropy of the marginal on `kept` at one resolution.
    fn entropy_at(&self, kept: &[usize], scheme: &QuadratureScheme) -> Result<f64> {
        let n = self.wf.n_particles();
        if kept.len() == 3 && n == 3 {
            return self.full_entropy_at(scheme);
        }
        let rule = self.rule(scheme, kept.len())?;
        let rules = vec![&rule; kept.len()];
        let values = self.marginal(kept)?.tabulate_with(&rules, scheme)?;
        let w = rule.weights();
        let m = w.len();
        let mut total = 0.0;
        for (idx, &v) in values.iter().enumerate() {
            let weight = match kept.len() {
                1 => w[idx],
                _ => w[idx / m] * w[idx % m],
            };
            total += weight * entropy_integrand(v)?;
        }
        Ok(total)
    }

    fn full_entropy_at(&self, scheme: &QuadratureScheme) -> Result<f64> {
        let rule = self.rule(scheme, 3)?;
        self.sum3(&rule, |_, _, _, d| entropy_integrand(d))
    }

    /// `Σ w_i w_j w_k f(i, j, k, |Ψ|²)` over the tensor grid of `rule`.
    fn sum3<F>(&self, rule: &AxisRule, f: F) -> Result<f64>
    where
        F: Fn(usize, usize, usize, f64) -> Result<f64> + Sync + Send,
    {
        let wf = &self.wf;
        let table: OrbitalTable = wf.table(rule)?;
        let w = rule.weights();
        let n_terms = wf.terms().len();
        try_ordered_sum(w.len(), |i| {
            let mut partials = vec![[Complex64::new(0.0, 0.0); 3]; n_terms];
            let mut acc = 0.0;
            for j in 0..w.len() {
                wf.pair_partials(table.row(i), table.row(j), &mut partials);
                let mut inner = 0.0;
                for k in 0..w.len() {
                    let d = wf.density_from_partials(&partials, table.row(k));
                    inner += w[k] * f(i, j, k, d)?;
                }
                acc += w[j] * inner;
            }
            Ok(w[i] * acc)
        })
    }

    /// Entropy of a marginal (or of the full density when `kept` lists every
    /// coordinate), with the two-level error estimate.
    pub fn entropy(&self, kept: &[usize]) -> Result<crate::quadrature::IntegralResult> {
        let fine = self.entropy_at(kept, &self.scheme)?;
        let coarse = self.entropy_at(kept, &self.scheme.coarse())?;
        let rule = self.rule(&self.scheme, kept.len())?;
        Ok(crate::quadrature::IntegralResult {
            value: fine,
            error: (fine - coarse).abs(),
            nodes: rule.len().pow(kept.len() as u32),
        })
    }

    fn require_three(&self) -> Result<()> {
        if self.wf.n_particles() != 3 {
            return Err(Error::invalid("this measure needs a three-particle state"));
        }
        Ok(())
    }

    /// `(s1, s2, s3)` and, for distinguishable states, the per-coordinate
    /// entropies.
    pub fn entropies(&self) -> Result<(EntropyTriple, Option<MarginalEntropies>)> {
        self.require_three()?;
        let s3 = self.entropy(&[0, 1, 2])?;
        if self.wf.symmetry().is_indistinguishable() {
            let s1 = self.entropy(&[0])?;
            let s2 = self.entropy(&[0, 1])?;
            let triple = EntropyTriple {
                s1: s1.value,
                s2: s2.value,
                s3: s3.value,
                errors: [s1.error, s2.error, s3.error],
                space: self.wf.space(),
            };
            return Ok((triple, None));
        }
        let singles = [self.entropy(&[0])?, self.entropy(&[1])?, self.entropy(&[2])?];
        let pairs = [self.entropy(&[0, 1])?, self.entropy(&[0, 2])?, self.entropy(&[1, 2])?];
        let mean = |r: &[crate::quadrature::IntegralResult; 3], f: fn(&crate::quadrature::IntegralResult) -> f64| {
            r.iter().map(f).sum::<f64>() / 3.0
        };
        let triple = EntropyTriple {
            s1: mean(&singles, |r| r.value),
            s2: mean(&pairs, |r| r.value),
            s3: s3.value,
            errors: [mean(&singles, |r| r.error), mean(&pairs, |r| r.error), s3.error],
            space: self.wf.space(),
        };
        let marginals = MarginalEntropies {
            single: singles.map(|r| r.value),
            pairs: pairs.map(|r| r.value),
        };
        Ok((triple, Some(marginals)))
    }

    /// Entropies and all five measures.
    pub fn report(&self) -> Result<InformationReport> {
        let (triple, marginals) = self.entropies()?;
        let report = InformationReport::from_entropies(self.descriptor(), triple, marginals, self.scheme.target_abs_tol)?;
        if !report.converged {
            log::warn!(
                "entropy error estimates {:?} exceed tolerance {:.1e}",
                report.entropies.errors,
                report.tolerance
            );
        }
        Ok(report)
    }

    pub fn two_particle_report(&self) -> Result<TwoParticleReport> {
        if self.wf.n_particles() != 2 {
            return Err(Error::invalid("two-particle report needs a two-particle state"));
        }
        let (s1, s2) = if self.wf.symmetry().is_indistinguishable() {
            (self.entropy(&[0])?, self.entropy(&[0, 1])?)
        } else {
            let a = self.entropy(&[0])?;
            let b = self.entropy(&[1])?;
            let s1 = crate::quadrature::IntegralResult {
                value: 0.5 * (a.value + b.value),
                error: 0.5 * (a.error + b.error),
                nodes: a.nodes,
            };
            (s1, self.entropy(&[0, 1])?)
        };
        let tol = self.scheme.target_abs_tol;
        Ok(TwoParticleReport {
            system: self.descriptor(),
            s1: s1.value,
            s2: s2.value,
            errors: [s1.error, s2.error],
            i_pair: checked_pair_information(2.0 * s1.value - s2.value, tol)?,
            tolerance: tol,
            converged: s1.error <= tol && s2.error <= tol,
        })
    }

    fn pairs(&self) -> Vec<[usize; 2]> {
        if self.wf.symmetry().is_indistinguishable() || self.wf.n_particles() == 2 {
            vec![[0, 1]]
        } else {
            vec![[0, 1], [0, 2], [1, 2]]
        }
    }

    /// `∫ Γ ln(Γ / ρ ρ)` evaluated directly (averaged over coordinate pairs
    /// for distinguishable states).
    pub fn direct_pair_information(&self) -> Result<f64> {
        let rule = self.rule(&self.scheme, 2)?;
        let w = rule.weights();
        let m = w.len();
        let pairs = self.pairs();
        let mut total = 0.0;
        for &[a, b] in &pairs {
            let gamma = self.marginal(&[a, b])?.tabulate(&[&rule, &rule])?;
            let ra = self.marginal(&[a])?.tabulate(&[&rule])?;
            let rb = self.marginal(&[b])?.tabulate(&[&rule])?;
            for i in 0..m {
                for j in 0..m {
                    let g = gamma[i * m + j];
                    let denom = ra[i] * rb[j];
                    if g > DIRECT_FLOOR && denom > 0.0 {
                        total += w[i] * w[j] * g * (g / denom).ln();
                    }
                }
            }
        }
        Ok(total / pairs.len() as f64)
    }

    /// `∫ |Ψ|² ln(|Ψ|² ρ1 ρ2 ρ3 / (Γ12 Γ13 Γ23))` evaluated directly.
    pub fn direct_higher_information(&self) -> Result<f64> {
        self.require_three()?;
        let rule = self.rule(&self.scheme, 3)?;
        let m = rule.len();
        let indist = self.wf.symmetry().is_indistinguishable();
        let rho: Vec<Vec<f64>> = if indist {
            vec![self.marginal(&[0])?.tabulate(&[&rule])?; 3]
        } else {
            (0..3).map(|k| self.marginal(&[k])?.tabulate(&[&rule])).collect::<Result<_>>()?
        };
        let gamma: Vec<Vec<f64>> = if indist {
            vec![self.marginal(&[0, 1])?.tabulate(&[&rule, &rule])?]
        } else {
            self.pairs()
                .iter()
                .map(|p| self.marginal(p)?.tabulate(&[&rule, &rule]))
                .collect::<Result<_>>()?
        };
        let g = |pair: usize, a: usize, b: usize| gamma[if indist { 0 } else { pair }][a * m + b];
        self.sum3(&rule, |i, j, k, d| {
            if d <= DIRECT_FLOOR {
                return Ok(0.0);
            }
            let num = d * rho[0][i] * rho[1][j] * rho[2][k];
            let den = g(0, i, j) * g(1, i, k) * g(2, j, k);
            if !(num > 0.0 && den > 0.0) {
                return Ok(0.0);
            }
            Ok(d * (num / den).ln())
        })
    }

    /// Third-order joint cumulant
    /// `⟨x1x2x3⟩ - Σ⟨x_i x_j⟩⟨x_k⟩ + 2⟨x1⟩⟨x2⟩⟨x3⟩`.
    pub fn cumulant3(&self) -> Result<f64> {
        self.require_three()?;
        let rule = self.rule(&self.scheme, 3)?;
        let x = rule.points();
        let w = rule.weights();
        let m = w.len();
        let mean = |k: usize| -> Result<f64> {
            let rho = self.marginal(&[k])?.tabulate(&[&rule])?;
            Ok((0..m).map(|i| w[i] * x[i] * rho[i]).sum())
        };
        let pair = |a: usize, b: usize| -> Result<f64> {
            let gamma = self.marginal(&[a, b])?.tabulate(&[&rule, &rule])?;
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += w[i] * w[j] * x[i] * x[j] * gamma[i * m + j];
                }
            }
            Ok(acc)
        };
        let mu = [mean(0)?, mean(1)?, mean(2)?];
        let (m12, m13, m23) = if self.wf.symmetry().is_indistinguishable() {
            let v = pair(0, 1)?;
            (v, v, v)
        } else {
            (pair(0, 1)?, pair(0, 2)?, pair(1, 2)?)
        };
        let m123 = self.sum3(&rule, |i, j, k, d| Ok(x[i] * x[j] * x[k] * d))?;
        Ok(m123 - m12 * mu[2] - m13 * mu[1] - m23 * mu[0] + 2.0 * mu[0] * mu[1] * mu[2])
    }

    /// `∫ |Ψ|²` over the 3D grid; a quadrature sanity check.
    pub fn normalisation(&self) -> Result<f64> {
        match self.wf.n_particles() {
            3 => {
                let rule = self.rule(&self.scheme, 3)?;
                self.sum3(&rule, |_, _, _, d| Ok(d))
            }
            _ => {
                let rule = self.rule(&self.scheme, 2)?;
                let values = self.marginal(&[0, 1])?.tabulate(&[&rule, &rule])?;
                let w = rule.weights();
                let m = w.len();
                Ok(values.iter().enumerate().map(|(i, v)| w[i / m] * w[i % m] * v).sum())
            }
        }
    }
}

/// One-particle entropies of `config` in both spaces and the uncertainty sum.
pub fn entropy_sum_check(config: &Configuration, position: &QuadratureScheme, momentum: &QuadratureScheme) -> Result<EntropySum> {
    let sx = System::from_configuration(&config.in_space(Space::Position), *position)?.entropy(&[0])?;
    let sp = System::from_configuration(&config.in_space(Space::Momentum), *momentum)?.entropy(&[0])?;
    let sum = sx.value + sp.value;
    let bound = uncertainty_bound();
    Ok(EntropySum {
        s_x: sx.value,
        s_p: sp.value,
        sum,
        bound,
        satisfied: sum >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn box_config(ns: &[u32], sym: SymmetryClass, space: Space) -> Configuration {
        Configuration::new(Model::particle_in_box(1.0).unwrap(), ns.to_vec(), sym, space).unwrap()
    }

    #[test]
    fn single_particle_entropy_closed_form() {
        // A two-particle product (1, 1) has ρ1 = 2 sin²(πx).
        let c = box_config(&[1, 1], SymmetryClass::Distinguishable, Space::Position);
        let sys = System::with_defaults(&c).unwrap();
        let s = sys.entropy(&[0]).unwrap();
        assert_abs_diff_eq!(s.value, 2f64.ln() - 1.0, epsilon = 1e-7);
        let r = sys.two_particle_report().unwrap();
        assert_abs_diff_eq!(r.i_pair, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.s2, 2.0 * (2f64.ln() - 1.0), epsilon = 1e-7);
    }

    #[test]
    fn antisymmetric_123_position() {
        let c = box_config(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Position);
        let sys = System::with_defaults(&c).unwrap();
        let r = sys.report().unwrap();
        assert_abs_diff_eq!(r.entropies.s2, -0.4709, epsilon = 1e-4);
        assert_abs_diff_eq!(r.entropies.s3, -1.2455, epsilon = 1e-4);
        assert_abs_diff_eq!(r.i_pair, 0.2321, epsilon = 1e-4);
        assert_abs_diff_eq!(r.i_total3, 0.8872, epsilon = 1e-4);
        assert!(r.hierarchy_defect() <= 1e-9);
        assert!(r.converged, "{:?}", r.entropies.errors);
        assert_abs_diff_eq!(sys.normalisation().unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn direct_integrals_agree() {
        let c = box_config(&[1, 2, 3], SymmetryClass::Symmetric, Space::Position);
        let sys = System::with_defaults(&c).unwrap();
        let r = sys.report().unwrap();
        assert_abs_diff_eq!(sys.direct_pair_information().unwrap(), r.i_pair, epsilon = 1e-5);
        assert_abs_diff_eq!(sys.direct_higher_information().unwrap(), r.i_higher, epsilon = 1e-5);
    }

    #[test]
    fn product_state_is_uncorrelated() {
        let c = box_config(&[1, 2, 3], SymmetryClass::Distinguishable, Space::Position);
        let sys = System::with_defaults(&c).unwrap();
        let r = sys.report().unwrap();
        for v in [r.i_pair, r.i_total3, r.i_one_pair, r.i_pair_pair, r.i_higher] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-5);
        }
        let m = r.marginals.unwrap();
        // Every box orbital has the same entropy.
        for s in m.single {
            assert_abs_diff_eq!(s, 2f64.ln() - 1.0, epsilon = 1e-7);
        }
        assert_abs_diff_eq!(sys.direct_higher_information().unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn cumulant_vanishes_in_position_space() {
        let c = box_config(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Position);
        let sys = System::with_defaults(&c).unwrap();
        assert!(sys.cumulant3().unwrap().abs() <= 1e-6);
    }

    #[test]
    fn uncertainty_sum() {
        let c = box_config(&[1, 2, 3], SymmetryClass::Symmetric, Space::Position);
        let check = entropy_sum_check(&c, &QuadratureScheme::finite_default(), &QuadratureScheme::line_default()).unwrap();
        assert!(check.satisfied);
        assert_abs_diff_eq!(check.bound, 2.1447298858494, epsilon = 1e-12);
    }

    #[test]
    fn negative_pair_information_policy() {
        assert_eq!(checked_pair_information(-1e-7, 5e-5).unwrap(), 0.0);
        assert!(matches!(checked_pair_information(-1e-3, 5e-5), Err(Error::Consistency(_))));
        assert_eq!(checked_pair_information(0.25, 5e-5).unwrap(), 0.25);
    }

    proptest! {
        #[test]
        fn hierarchy_identity_is_algebraic(s1 in -3.0f64..3.0, ds in 0.0f64..2.0, s3 in -5.0f64..8.0) {
            let triple = EntropyTriple { s1, s2: 2.0 * s1 - ds, s3, errors: [0.0; 3], space: Space::Position };
            let sys = SystemDescriptor {
                model: Model::particle_in_box(1.0).unwrap(),
                space: Space::Position,
                symmetry: SymmetryClass::Symmetric,
                configurations: vec![vec![1, 2, 3]],
                coefficients: vec![1.0],
                interference: true,
            };
            let r = InformationReport::from_entropies(sys, triple, None, 5e-5).unwrap();
            prop_assert!(r.hierarchy_defect() <= 1e-9);
            prop_assert!(r.i_total3 >= r.i_one_pair - 1e-12);
            prop_assert!(r.i_one_pair >= r.i_pair_pair - 1e-12);
            prop_assert!(r.i_pair_pair >= r.i_higher - 1e-12);
        }
    }
}
