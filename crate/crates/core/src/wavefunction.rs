//! Two- and three-particle wavefunctions built from orbitals: permanents,
//! Slater determinants, Hartree products, and real two-term superpositions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbitals::{box_momentum_with_phase, Amplitude, Model, Space};
use crate::quadrature::{AxisNode, AxisRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    Symmetric,
    Antisymmetric,
    Distinguishable,
}

impl SymmetryClass {
    pub fn short(self) -> &'static str {
        match self {
            SymmetryClass::Symmetric => "S",
            SymmetryClass::Antisymmetric => "A",
            SymmetryClass::Distinguishable => "D",
        }
    }

    pub fn is_indistinguishable(self) -> bool {
        self != SymmetryClass::Distinguishable
    }

    fn sign(self, odd: bool) -> f64 {
        if odd && self == SymmetryClass::Antisymmetric {
            -1.0
        } else {
            1.0
        }
    }
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SymmetryClass::Symmetric => "symmetric",
            SymmetryClass::Antisymmetric => "antisymmetric",
            SymmetryClass::Distinguishable => "distinguishable",
        })
    }
}

impl std::str::FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "sym" | "symmetric" => Ok(SymmetryClass::Symmetric),
            "a" | "anti" | "antisym" | "antisymmetric" => Ok(SymmetryClass::Antisymmetric),
            "d" | "dist" | "distinguishable" => Ok(SymmetryClass::Distinguishable),
            other => Err(Error::invalid(format!(
                "unknown symmetry '{other}' (expected s, a or d)"
            ))),
        }
    }
}

/// A single occupation pattern: model, quantum numbers, symmetry and space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub model: Model,
    pub ns: Vec<u32>,
    pub symmetry: SymmetryClass,
    pub space: Space,
}

impl Configuration {
    pub fn new(model: Model, ns: Vec<u32>, symmetry: SymmetryClass, space: Space) -> Result<Self> {
        if !(2..=3).contains(&ns.len()) {
            return Err(Error::invalid(format!(
                "only two or three particles are supported, got {}",
                ns.len()
            )));
        }
        for &n in &ns {
            model.check_quantum_number(n)?;
        }
        let max_mult = multiplicities(&ns).into_iter().max().unwrap_or(1);
        match symmetry {
            SymmetryClass::Antisymmetric if max_mult > 1 => {
                return Err(Error::invalid(
                    "antisymmetric state requires distinct quantum numbers",
                ))
            }
            SymmetryClass::Symmetric if max_mult > 2 => {
                return Err(Error::invalid(
                    "symmetric state with all particles in one orbital is not supported",
                ))
            }
            _ => {}
        }
        Ok(Configuration { model, ns, symmetry, space })
    }

    pub fn n_particles(&self) -> usize {
        self.ns.len()
    }

    pub fn nmax(&self) -> u32 {
        self.ns.iter().copied().max().unwrap_or(0)
    }

    pub fn has_distinct_numbers(&self) -> bool {
        multiplicities(&self.ns).into_iter().all(|m| m == 1)
    }

    /// `1/sqrt(N! Π m_k!)` for (anti)symmetrised states, 1 for products.
    pub fn norm_factor(&self) -> f64 {
        if self.symmetry == SymmetryClass::Distinguishable {
            return 1.0;
        }
        let n_fact = factorial(self.ns.len());
        let mult: f64 = multiplicities(&self.ns).into_iter().map(factorial).product();
        1.0 / (n_fact * mult).sqrt()
    }

    /// Same state in the other space.
    pub fn in_space(&self, space: Space) -> Self {
        Configuration { space, ..self.clone() }
    }

    pub fn label(&self) -> String {
        let ns: Vec<String> = self.ns.iter().map(u32::to_string).collect();
        format!("{}({}) {}", self.symmetry.short(), ns.join(","), self.space)
    }
}

fn multiplicities(ns: &[u32]) -> Vec<usize> {
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        out.push(j);
        i += j;
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Permutations of `0..n` with their parity.
fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    match n {
        2 => vec![(vec![0, 1], false), (vec![1, 0], true)],
        3 => vec![
            (vec![0, 1, 2], false),
            (vec![1, 2, 0], false),
            (vec![2, 0, 1], false),
            (vec![0, 2, 1], true),
            (vec![2, 1, 0], true),
            (vec![1, 0, 2], true),
        ],
        _ => unreachable!("configurations hold two or three particles"),
    }
}

/// One configuration inside a wavefunction: `weight` is the mixing
/// coefficient times the configuration's norm factor, `slots` index the
/// wavefunction's orbital list.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub weight: f64,
    pub slots: Vec<usize>,
    pub configuration: Configuration,
}

/// An evaluatable N-particle state, `Σ_t c_t Ψ_t`.
///
/// Without interference the density is the incoherent sum `Σ c_t² |Ψ_t|²`.
/// With interference it is `|Σ c_t Ψ_t|²` divided by the squared norm of the
/// combination, so the density integrates to one even for overlapping terms.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    model: Model,
    space: Space,
    symmetry: SymmetryClass,
    n_particles: usize,
    orbitals: Vec<u32>,
    terms: Vec<Term>,
    perms: Vec<(Vec<usize>, f64)>,
    interference: bool,
    density_scale: f64,
}

impl WaveFunction {
    pub fn build(config: &Configuration) -> Result<Self> {
        Self::combine(&[(1.0, config.clone())], true)
    }

    /// Real two-term superposition `c1 A + c2 B`.
    pub fn superposition(a: &Configuration, b: &Configuration, c1: f64, c2: f64, interference: bool) -> Result<Self> {
        if a.model != b.model || a.space != b.space || a.symmetry != b.symmetry || a.n_particles() != b.n_particles() {
            return Err(Error::invalid(
                "superposed states must share model, space, symmetry and particle count",
            ));
        }
        Self::combine(&[(c1, a.clone()), (c2, b.clone())], interference)
    }

    fn combine(parts: &[(f64, Configuration)], interference: bool) -> Result<Self> {
        let first = &parts[0].1;
        let mut orbitals: Vec<u32> = Vec::new();
        let mut terms = Vec::new();
        for (c, config) in parts {
            if !c.is_finite() {
                return Err(Error::invalid(format!("coefficient {c} is not finite")));
            }
            let slots = config
                .ns
                .iter()
                .map(|&n| match orbitals.iter().position(|&m| m == n) {
                    Some(i) => i,
                    None => {
                        orbitals.push(n);
                        orbitals.len() - 1
                    }
                })
                .collect();
            terms.push(Term {
                coefficient: *c,
                weight: c * config.norm_factor(),
                slots,
                configuration: config.clone(),
            });
        }
        let n = first.n_particles();
        let perms = if first.symmetry == SymmetryClass::Distinguishable {
            vec![((0..n).collect(), 1.0)]
        } else {
            permutations(n)
                .into_iter()
                .map(|(p, odd)| (p, first.symmetry.sign(odd)))
                .collect()
        };
        let mut wf = WaveFunction {
            model: first.model,
            space: first.space,
            symmetry: first.symmetry,
            n_particles: n,
            orbitals,
            terms,
            perms,
            interference,
            density_scale: 1.0,
        };
        let norm2 = wf.norm_squared();
        if !(norm2 > 1e-12) {
            return Err(Error::invalid("superposition has zero norm"));
        }
        wf.density_scale = 1.0 / norm2;
        Ok(wf)
    }

    /// Exact `∫ unscaled density`, from orbital orthonormality.
    fn norm_squared(&self) -> f64 {
        let mut total = 0.0;
        for (a, ta) in self.terms.iter().enumerate() {
            for (b, tb) in self.terms.iter().enumerate() {
                if a != b && !self.interference {
                    continue;
                }
                total += ta.coefficient * tb.coefficient * overlap(&ta.configuration, &tb.configuration);
            }
        }
        total
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn interference(&self) -> bool {
        self.interference
    }

    /// Factor applied to `|Ψ|²` so the density is normalised.
    pub fn density_scale(&self) -> f64 {
        self.density_scale
    }

    /// Distinct quantum numbers, in slot order.
    pub fn orbital_numbers(&self) -> &[u32] {
        &self.orbitals
    }

    pub fn nmax(&self) -> u32 {
        self.orbitals.iter().copied().max().unwrap_or(0)
    }

    pub fn is_single(&self) -> bool {
        self.terms.len() == 1
    }

    /// The normalisation factor of a single configuration.
    pub fn norm_factor(&self) -> f64 {
        self.terms[0].configuration.norm_factor()
    }

    /// Orbital values at one coordinate, one per slot.
    pub fn orbital_row(&self, coord: f64) -> Result<Vec<Amplitude>> {
        self.orbitals
            .iter()
            .map(|&n| self.model.orbital(n, self.space, coord))
            .collect()
    }

    fn node_row(&self, node: &AxisNode) -> Result<Vec<Amplitude>> {
        match (node.phase, self.model) {
            (Some(phase), Model::Box { length }) if self.space == Space::Momentum => Ok(self
                .orbitals
                .iter()
                .map(|&n| box_momentum_with_phase(n, length, node.x, phase))
                .collect()),
            _ => self.orbital_row(node.x),
        }
    }

    /// Orbital values at every node of `rule`.
    pub fn table(&self, rule: &AxisRule) -> Result<OrbitalTable> {
        let width = self.orbitals.len();
        let mut values = Vec::with_capacity(width * rule.len());
        for node in &rule.nodes {
            values.extend(self.node_row(node)?);
        }
        Ok(OrbitalTable { values, width })
    }

    /// Per-term amplitudes `c_t Ψ_t` (without the density scale).
    pub fn term_amplitudes_from_rows(&self, rows: &[&[Amplitude]]) -> Vec<Amplitude> {
        self.terms
            .iter()
            .map(|t| {
                let sum: Amplitude = self
                    .perms
                    .iter()
                    .map(|(perm, sign)| {
                        let mut prod = Complex64::new(*sign, 0.0);
                        for (k, &slot) in perm.iter().enumerate() {
                            prod *= rows[k][t.slots[slot]];
                        }
                        prod
                    })
                    .sum();
                sum * t.weight
            })
            .collect()
    }

    /// Combines per-term amplitudes into the normalised density.
    pub fn combine_density(&self, amps: &[Amplitude]) -> f64 {
        let raw = if self.interference {
            amps.iter().sum::<Amplitude>().norm_sqr()
        } else {
            amps.iter().map(|a| a.norm_sqr()).sum()
        };
        raw * self.density_scale
    }

    pub fn density_from_rows(&self, rows: &[&[Amplitude]]) -> f64 {
        self.combine_density(&self.term_amplitudes_from_rows(rows))
    }

    fn rows_at(&self, point: &[f64]) -> Result<Vec<Vec<Amplitude>>> {
        if point.len() != self.n_particles {
            return Err(Error::invalid(format!(
                "expected {} coordinates, got {}",
                self.n_particles,
                point.len()
            )));
        }
        point.iter().map(|&x| self.orbital_row(x)).collect()
    }

    /// Coherent amplitude `sqrt(scale) Σ_t c_t Ψ_t(point)`.
    pub fn amplitude(&self, point: &[f64]) -> Result<Amplitude> {
        let rows = self.rows_at(point)?;
        let refs: Vec<&[Amplitude]> = rows.iter().map(Vec::as_slice).collect();
        let amps = self.term_amplitudes_from_rows(&refs);
        Ok(amps.iter().sum::<Amplitude>() * self.density_scale.sqrt())
    }

    /// `|Ψ(point)|²`, normalised.
    pub fn density(&self, point: &[f64]) -> Result<f64> {
        let rows = self.rows_at(point)?;
        let refs: Vec<&[Amplitude]> = rows.iter().map(Vec::as_slice).collect();
        Ok(self.density_from_rows(&refs))
    }

    /// Amplitude at `point` and at `point` with coordinates `i` and `j` swapped.
    pub fn exchange_symmetry_check(&self, point: &[f64], i: usize, j: usize) -> Result<(Amplitude, Amplitude)> {
        if i >= point.len() || j >= point.len() {
            return Err(Error::invalid("swap index out of range"));
        }
        let mut swapped = point.to_vec();
        swapped.swap(i, j);
        Ok((self.amplitude(point)?, self.amplitude(&swapped)?))
    }

    /// The same state with coordinates relabelled so that new coordinate `q`
    /// is old coordinate `order[q]`. Densities of (anti)symmetric states are
    /// unchanged; products have their factors reordered.
    pub fn permuted(&self, order: [usize; 3]) -> WaveFunction {
        let mut out = self.clone();
        if self.n_particles != 3 || self.symmetry != SymmetryClass::Distinguishable {
            return out;
        }
        for term in &mut out.terms {
            let old = term.slots.clone();
            term.slots = order.iter().map(|&k| old[k]).collect();
            term.configuration.ns = order.iter().map(|&k| self.orbitals[old[k]]).collect();
        }
        out
    }

    /// For three particles: partial sums over the first two coordinates,
    /// `out[t][q] = Σ_{π: π(2) = q} sign · φ(x1) φ(x2)`, so that the term
    /// amplitude at any `x3` is `weight_t Σ_q out[t][q] φ_{slot q}(x3)`.
    pub fn pair_partials(&self, ra: &[Amplitude], rb: &[Amplitude], out: &mut [[Amplitude; 3]]) {
        debug_assert_eq!(self.n_particles, 3);
        for (t, term) in self.terms.iter().enumerate() {
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (perm, sign) in &self.perms {
                acc[perm[2]] += ra[term.slots[perm[0]]] * rb[term.slots[perm[1]]] * *sign;
            }
            out[t] = acc;
        }
    }

    /// Density at a third coordinate given [`Self::pair_partials`].
    #[inline]
    pub fn density_from_partials(&self, partials: &[[Amplitude; 3]], rc: &[Amplitude]) -> f64 {
        let mut coherent = Complex64::new(0.0, 0.0);
        let mut incoherent = 0.0;
        for (term, p) in self.terms.iter().zip(partials) {
            let s = &term.slots;
            let amp = (p[0] * rc[s[0]] + p[1] * rc[s[1]] + p[2] * rc[s[2]]) * term.weight;
            coherent += amp;
            incoherent += amp.norm_sqr();
        }
        let raw = if self.interference { coherent.norm_sqr() } else { incoherent };
        raw * self.density_scale
    }
}

/// `⟨A|B⟩` for configurations over one orthonormal orbital set.
pub fn overlap(a: &Configuration, b: &Configuration) -> f64 {
    if a.n_particles() != b.n_particles() || a.symmetry != b.symmetry || a.model != b.model {
        return 0.0;
    }
    let n = a.n_particles();
    let perms: Vec<(Vec<usize>, f64)> = if a.symmetry == SymmetryClass::Distinguishable {
        vec![((0..n).collect(), 1.0)]
    } else {
        permutations(n)
            .into_iter()
            .map(|(p, odd)| (p, a.symmetry.sign(odd)))
            .collect()
    };
    let mut total = 0.0;
    for (pa, sa) in &perms {
        for (pb, sb) in &perms {
            if (0..n).all(|k| a.ns[pa[k]] == b.ns[pb[k]]) {
                total += sa * sb;
            }
        }
    }
    total * a.norm_factor() * b.norm_factor()
}

/// Orbital values at the nodes of one axis rule, node-major.
#[derive(Debug, Clone)]
pub struct OrbitalTable {
    values: Vec<Amplitude>,
    width: usize,
}

impl OrbitalTable {
    #[inline]
    pub fn row(&self, i: usize) -> &[Amplitude] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
