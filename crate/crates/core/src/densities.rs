//! One- and two-particle reduced densities.
//!
//! Single configurations with distinct quantum numbers use the closed forms
//! `ρ = (1/N) Σ|ψ_i|²` and
//! `Γ = [Σ_{i≠j} |ψ_i(x1)|²|ψ_j(x2)|² ± Σ_{i≠j} ψ_i*(x1)ψ_j*(x2)ψ_j(x1)ψ_i(x2)] / (N(N-1))`.
//! Everything else (superpositions, repeated quantum numbers) is reduced by
//! quadrature over the remaining coordinates.

use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::g12;
use crate::orbitals::{Amplitude, Model, Space};
use crate::quadrature::{default_map_scale, momentum_map, AxisDomain, AxisRule, QuadratureScheme};
use crate::wavefunction::{OrbitalTable, SymmetryClass, WaveFunction};

/// Default points per axis of materialised grids.
pub const DEFAULT_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ClosedForm,
    QuadratureReduced,
}

/// A `k`-particle marginal of a wavefunction's density. `kept` lists the
/// particle coordinates that survive, in order.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    wf: WaveFunction,
    kept: Vec<usize>,
    strategy: Strategy,
    scheme: QuadratureScheme,
    grid_points: usize,
    grid: OnceLock<Grid>,
}

impl ReducedDensity {
    /// Marginal over the coordinates not in `kept`. The closed form is used
    /// whenever it applies.
    pub fn new(wf: &WaveFunction, kept: &[usize], scheme: &QuadratureScheme) -> Result<Self> {
        let n = wf.n_particles();
        if kept.is_empty() || kept.len() > n || kept.iter().any(|&k| k >= n) {
            return Err(Error::invalid(format!("cannot keep coordinates {kept:?} of {n}")));
        }
        if kept.len() > 1 && kept.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("kept coordinates must be distinct"));
        }
        scheme.validate()?;
        let strategy = if closed_form_applies(wf, kept.len()) {
            Strategy::ClosedForm
        } else {
            Strategy::QuadratureReduced
        };
        Ok(ReducedDensity {
            wf: wf.clone(),
            kept: kept.to_vec(),
            strategy,
            scheme: *scheme,
            grid_points: DEFAULT_GRID_POINTS,
            grid: OnceLock::new(),
        })
    }

    /// Same marginal, always computed by quadrature.
    pub fn numerical(wf: &WaveFunction, kept: &[usize], scheme: &QuadratureScheme) -> Result<Self> {
        let mut d = Self::new(wf, kept, scheme)?;
        d.strategy = if kept.len() == wf.n_particles() {
            Strategy::ClosedForm
        } else {
            Strategy::QuadratureReduced
        };
        Ok(d)
    }

    pub fn with_grid_points(mut self, points: usize) -> Result<Self> {
        if points < 4 {
            return Err(Error::invalid("interpolation grids need at least 4 points per axis"));
        }
        self.grid_points = points;
        self.grid = OnceLock::new();
        Ok(self)
    }

    pub fn arity(&self) -> usize {
        self.kept.len()
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn space(&self) -> Space {
        self.wf.space()
    }

    pub fn wavefunction(&self) -> &WaveFunction {
        &self.wf
    }

    fn axis(&self, scheme: &QuadratureScheme) -> AxisDomain {
        AxisDomain::for_model(&self.wf.model(), self.wf.space(), self.wf.nmax(), scheme)
    }

    /// Rule used for the integrated-out coordinates.
    fn reduction_rule(&self, scheme: &QuadratureScheme) -> Result<AxisRule> {
        AxisRule::for_scheme(&self.axis(scheme), scheme, 3)
    }

    /// Value at a point. Closed forms are exact; reduced densities are
    /// interpolated from the materialised grid.
    pub fn value(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        match self.strategy {
            Strategy::ClosedForm => self.value_exact(point),
            Strategy::QuadratureReduced => Ok(self.grid()?.interpolate(point)),
        }
    }

    /// Value at a point, by direct quadrature when no closed form applies.
    pub fn value_exact(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        let rows: Vec<Vec<Amplitude>> = point
            .iter()
            .map(|&x| self.wf.orbital_row(x))
            .collect::<Result<_>>()?;
        let refs: Vec<&[Amplitude]> = rows.iter().map(Vec::as_slice).collect();
        match self.strategy {
            Strategy::ClosedForm => Ok(self.closed_form(&refs)),
            Strategy::QuadratureReduced => {
                let rule = self.reduction_rule(&self.scheme)?;
                let table = self.wf.table(&rule)?;
                Ok(self.reduced_at(&refs, &table, &rule.weights()))
            }
        }
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.arity() {
            return Err(Error::invalid(format!(
                "expected {} coordinates, got {}",
                self.arity(),
                point.len()
            )));
        }
        Ok(())
    }

    fn closed_form(&self, rows: &[&[Amplitude]]) -> f64 {
        let wf = &self.wf;
        if self.arity() == wf.n_particles() {
            let ordered = reorder_rows(rows, &self.kept);
            return wf.density_from_rows(&ordered);
        }
        let term = &wf.terms()[0];
        if wf.symmetry() == SymmetryClass::Distinguishable {
            return self
                .kept
                .iter()
                .zip(rows)
                .map(|(&k, row)| row[term.slots[k]].norm_sqr())
                .product();
        }
        let n = wf.n_particles() as f64;
        let slots = &term.slots;
        match rows {
            [a] => slots.iter().map(|&s| a[s].norm_sqr()).sum::<f64>() / n,
            [a, b] => {
                let sign = if wf.symmetry() == SymmetryClass::Antisymmetric { -1.0 } else { 1.0 };
                let mut direct = 0.0;
                let mut exchange = 0.0;
                for &i in slots {
                    for &j in slots {
                        if i == j {
                            continue;
                        }
                        direct += a[i].norm_sqr() * b[j].norm_sqr();
                        exchange += (a[i].conj() * b[j].conj() * a[j] * b[i]).re;
                    }
                }
                (direct + sign * exchange) / (n * (n - 1.0))
            }
            _ => unreachable!("closed forms cover one- and two-particle marginals"),
        }
    }

    /// Quadrature over the dropped coordinates at fixed kept rows.
    fn reduced_at(&self, rows: &[&[Amplitude]], table: &OrbitalTable, weights: &[f64]) -> f64 {
        let wf = &self.wf;
        let n = wf.n_particles();
        let dropped: Vec<usize> = (0..n).filter(|k| !self.kept.contains(k)).collect();
        let mut full: Vec<&[Amplitude]> = vec![&[]; n];
        for (&k, row) in self.kept.iter().zip(rows) {
            full[k] = row;
        }
        match dropped.as_slice() {
            [] => wf.density_from_rows(&full),
            [m] => {
                let mut acc = 0.0;
                for (i, &w) in weights.iter().enumerate() {
                    full[*m] = table.row(i);
                    acc += w * wf.density_from_rows(&full);
                }
                acc
            }
            [m1, m2] => {
                let mut acc = 0.0;
                for (i, &wi) in weights.iter().enumerate() {
                    full[*m1] = table.row(i);
                    let mut inner = 0.0;
                    for (j, &wj) in weights.iter().enumerate() {
                        full[*m2] = table.row(j);
                        inner += wj * wf.density_from_rows(&full);
                    }
                    acc += wi * inner;
                }
                acc
            }
            _ => unreachable!("at most two coordinates are integrated out"),
        }
    }

    /// Values at the tensor nodes of `rules` (one rule per kept coordinate),
    /// row-major, computed exactly (closed form or direct quadrature).
    pub fn tabulate(&self, rules: &[&AxisRule]) -> Result<Vec<f64>> {
        self.tabulate_with(rules, &self.scheme)
    }

    /// As [`Self::tabulate`], reducing with the rules of `scheme`.
    pub fn tabulate_with(&self, rules: &[&AxisRule], scheme: &QuadratureScheme) -> Result<Vec<f64>> {
        if rules.len() != self.arity() {
            return Err(Error::invalid("one rule per kept coordinate is required"));
        }
        let tables: Vec<OrbitalTable> = rules.iter().map(|r| self.wf.table(r)).collect::<Result<_>>()?;
        match self.strategy {
            Strategy::ClosedForm => Ok(self.tabulate_closed(&tables)),
            Strategy::QuadratureReduced => {
                let red_rule = self.reduction_rule(scheme)?;
                let red_table = self.wf.table(&red_rule)?;
                Ok(self.tabulate_reduced(&tables, &red_table, &red_rule.weights()))
            }
        }
    }

    fn tabulate_closed(&self, tables: &[OrbitalTable]) -> Vec<f64> {
        match tables {
            [a] => (0..a.len()).map(|i| self.closed_form(&[a.row(i)])).collect(),
            [a, b] => (0..a.len())
                .into_par_iter()
                .flat_map_iter(|i| (0..b.len()).map(move |j| self.closed_form(&[a.row(i), b.row(j)])))
                .collect(),
            [a, b, c] => (0..a.len())
                .into_par_iter()
                .flat_map_iter(|i| {
                    (0..b.len()).flat_map(move |j| {
                        (0..c.len()).map(move |k| self.closed_form(&[a.row(i), b.row(j), c.row(k)]))
                    })
                })
                .collect(),
            _ => unreachable!(),
        }
    }

    fn tabulate_reduced(&self, tables: &[OrbitalTable], red: &OrbitalTable, weights: &[f64]) -> Vec<f64> {
        match tables {
            [a] => (0..a.len())
                .into_par_iter()
                .map(|i| self.reduced_at(&[a.row(i)], red, weights))
                .collect(),
            [a, b] if self.wf.n_particles() == 3 => {
                // Put the kept pair first so the fast partial-sum kernel applies.
                let m = (0..3).find(|k| !self.kept.contains(k)).expect("one dropped");
                let order = [self.kept[0], self.kept[1], m];
                let wf = self.wf.permuted(order);
                let n_terms = wf.terms().len();
                (0..a.len())
                    .into_par_iter()
                    .flat_map_iter(|i| {
                        let wf = &wf;
                        let mut partials = vec![[Complex64::new(0.0, 0.0); 3]; n_terms];
                        (0..b.len())
                            .map(move |j| {
                                wf.pair_partials(a.row(i), b.row(j), &mut partials);
                                weights
                                    .iter()
                                    .enumerate()
                                    .map(|(k, &w)| w * wf.density_from_partials(&partials, red.row(k)))
                                    .sum::<f64>()
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect()
            }
            [a, b] => (0..a.len())
                .into_par_iter()
                .flat_map_iter(|i| (0..b.len()).map(move |j| self.reduced_at(&[a.row(i), b.row(j)], red, weights)))
                .collect(),
            _ => self.tabulate_closed(tables),
        }
    }

    fn grid(&self) -> Result<&Grid> {
        if let Some(g) = self.grid.get() {
            return Ok(g);
        }
        let g = Grid::materialise(self)?;
        Ok(self.grid.get_or_init(|| g))
    }

    /// Default plotting extent for one axis.
    pub fn default_extent(&self) -> (f64, f64) {
        let model = self.wf.model();
        match (model, self.wf.space()) {
            (Model::Box { length }, Space::Position) => (0.0, length),
            (Model::Box { .. }, Space::Momentum) => {
                let s = default_map_scale(&model, Space::Momentum, self.wf.nmax());
                (-s, s)
            }
            (Model::Oscillator { .. }, space) => {
                let s = 2.0 * default_map_scale(&model, space, self.wf.nmax());
                (-s, s)
            }
        }
    }
}

fn closed_form_applies(wf: &WaveFunction, arity: usize) -> bool {
    if arity == wf.n_particles() {
        return true;
    }
    if !wf.is_single() {
        return false;
    }
    let config = &wf.terms()[0].configuration;
    config.symmetry == SymmetryClass::Distinguishable || config.has_distinct_numbers()
}

fn reorder_rows<'a>(rows: &[&'a [Amplitude]], kept: &[usize]) -> Vec<&'a [Amplitude]> {
    let mut out: Vec<&[Amplitude]> = vec![&[]; rows.len()];
    for (&k, row) in kept.iter().zip(rows) {
        out[k] = row;
    }
    out
}

/// Pair density `Γ(x1, x2)` (particles 1 and 2).
pub fn reduce_to_pair(wf: &WaveFunction, scheme: &QuadratureScheme) -> Result<ReducedDensity> {
    ReducedDensity::new(wf, &[0, 1], scheme)
}

/// One-particle density `ρ(x)` (particle 1).
pub fn reduce_to_one(wf: &WaveFunction, scheme: &QuadratureScheme) -> Result<ReducedDensity> {
    ReducedDensity::new(wf, &[0], scheme)
}

/// Marginal of the given arity obtained by quadrature, whatever the state.
pub fn reduce_numerical(wf: &WaveFunction, arity: usize, scheme: &QuadratureScheme) -> Result<ReducedDensity> {
    let kept: Vec<usize> = (0..arity).collect();
    ReducedDensity::numerical(wf, &kept, scheme)
}

/// Per-axis coordinate of a materialised grid: uniform in `x` on finite
/// domains, uniform in the mapped variable `u` on the line.
#[derive(Debug, Clone, Copy)]
enum GridAxis {
    Uniform { lo: f64, hi: f64 },
    Mapped { scale: f64 },
}

impl GridAxis {
    fn coordinate(&self, t: f64) -> f64 {
        match *self {
            GridAxis::Uniform { lo, hi } => lo + t * (hi - lo),
            GridAxis::Mapped { scale } => {
                momentum_map(-1.0 + 2.0 * t, scale).map(|(p, _)| p).unwrap_or(0.0)
            }
        }
    }

    /// Inverse of `coordinate`, in `[0, 1]`.
    fn unit(&self, x: f64) -> f64 {
        match *self {
            GridAxis::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            GridAxis::Mapped { scale } => {
                // Solve p u² + S u - p = 0 for the root in (-1, 1).
                let u = if x == 0.0 {
                    0.0
                } else {
                    let r = scale / (2.0 * x);
                    -r + r.signum() * (r * r + 1.0).sqrt()
                };
                0.5 * (u + 1.0)
            }
        }
    }
}

/// Materialised tensor grid with Catmull-Rom interpolation.
#[derive(Debug, Clone)]
struct Grid {
    axes: Vec<GridAxis>,
    points: usize,
    values: Vec<f64>,
}

impl Grid {
    fn materialise(d: &ReducedDensity) -> Result<Self> {
        let model = d.wf.model();
        let space = d.wf.space();
        let axis = match (model, space) {
            (Model::Box { length }, Space::Position) => GridAxis::Uniform { lo: 0.0, hi: length },
            _ => GridAxis::Mapped {
                scale: default_map_scale(&model, space, d.wf.nmax()),
            },
        };
        let m = d.grid_points;
        // Mapped axes avoid the endpoints u = ±1.
        let ts: Vec<f64> = match axis {
            GridAxis::Uniform { .. } => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
            GridAxis::Mapped { .. } => (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect(),
        };
        let coords: Vec<f64> = ts.iter().map(|&t| axis.coordinate(t)).collect();
        let rule = AxisRule {
            nodes: coords
                .iter()
                .map(|&x| crate::quadrature::AxisNode { x, w: 1.0, phase: None })
                .collect(),
        };
        let rules: Vec<&AxisRule> = vec![&rule; d.arity()];
        let values = d.tabulate(&rules)?;
        Ok(Grid {
            axes: vec![axis; d.arity()],
            points: m,
            values,
        })
    }

    /// Fractional index of `x` along an axis.
    fn position(&self, axis: &GridAxis, x: f64) -> f64 {
        let t = axis.unit(x);
        let m = self.points as f64;
        match axis {
            GridAxis::Uniform { .. } => t * (m - 1.0),
            GridAxis::Mapped { .. } => (t * m - 0.5).clamp(0.0, m - 1.0),
        }
    }

    fn interpolate(&self, point: &[f64]) -> f64 {
        let pos: Vec<f64> = point
            .iter()
            .zip(&self.axes)
            .map(|(&x, a)| self.position(a, x))
            .collect();
        let v = match pos.as_slice() {
            [s] => catmull_rom_1d(|i| self.values[i], self.points, *s),
            [s, t] => {
                let m = self.points;
                catmull_rom_1d(
                    |i| catmull_rom_1d(|j| self.values[i * m + j], m, *t),
                    m,
                    *s,
                )
            }
            _ => {
                let m = self.points;
                catmull_rom_1d(
                    |i| {
                        catmull_rom_1d(
                            |j| catmull_rom_1d(|k| self.values[(i * m + j) * m + k], m, pos[2]),
                            m,
                            pos[1],
                        )
                    },
                    m,
                    pos[0],
                )
            }
        };
        v.max(0.0)
    }
}

/// Cubic Catmull-Rom interpolation of samples `f(0..m)` at fractional index `s`.
fn catmull_rom_1d<F: Fn(usize) -> f64>(f: F, m: usize, s: f64) -> f64 {
    let s = s.clamp(0.0, (m - 1) as f64);
    let i = (s.floor() as usize).min(m - 2);
    let t = s - i as f64;
    let p1 = f(i);
    let p2 = f(i + 1);
    let p0 = if i == 0 { 2.0 * p1 - p2 } else { f(i - 1) };
    let p3 = if i + 2 >= m { 2.0 * p2 - p1 } else { f(i + 2) };
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}

/// A regular plotting grid for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn coords(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        (0..self.points)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        if self.points > 1 {
            (self.hi - self.lo) / (self.points - 1) as f64
        } else {
            0.0
        }
    }
}

/// Row-major `(x1, x2, Γ)` samples of a pair density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub space: Space,
    pub x1: GridSpec,
    pub x2: GridSpec,
    pub rows: Vec<(f64, f64, f64)>,
}

impl DensityGrid {
    /// Trapezoidal estimate of `∫∫ Γ`.
    pub fn trapezoid_integral(&self) -> f64 {
        let (n1, n2) = (self.x1.points, self.x2.points);
        let mut total = 0.0;
        for (idx, &(_, _, v)) in self.rows.iter().enumerate() {
            let (i, j) = (idx / n2, idx % n2);
            let wi = if i == 0 || i + 1 == n1 { 0.5 } else { 1.0 };
            let wj = if j == 0 || j + 1 == n2 { 0.5 } else { 1.0 };
            total += wi * wj * v;
        }
        total * self.x1.step() * self.x2.step()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let s = self.space.symbol();
        writeln!(out, "{s}1,{s}2,value")?;
        for &(a, b, v) in &self.rows {
            writeln!(out, "{},{},{}", g12(a), g12(b), g12(v))?;
        }
        Ok(())
    }
}

/// Samples a pair density on a regular grid for contour plotting.
pub fn export_density_grid(d: &ReducedDensity, x1: GridSpec, x2: GridSpec) -> Result<DensityGrid> {
    if d.arity() != 2 {
        return Err(Error::invalid("density grids are exported for pair densities only"));
    }
    if x1.points == 0 || x2.points == 0 {
        return Err(Error::invalid("grid needs at least one point per axis"));
    }
    let a = x1.coords();
    let b = x2.coords();
    let rule_a = AxisRule {
        nodes: a.iter().map(|&x| crate::quadrature::AxisNode { x, w: 1.0, phase: None }).collect(),
    };
    let rule_b = AxisRule {
        nodes: b.iter().map(|&x| crate::quadrature::AxisNode { x, w: 1.0, phase: None }).collect(),
    };
    let values = d.tabulate(&[&rule_a, &rule_b])?;
    let rows = a
        .iter()
        .flat_map(|&u| b.iter().map(move |&v| (u, v)))
        .zip(values)
        .map(|((u, v), val)| (u, v, val.max(0.0)))
        .collect();
    Ok(DensityGrid { space: d.space(), x1, x2, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::Configuration;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use super::Strategy;
    use std::f64::consts::PI;

    fn wf(ns: &[u32], sym: SymmetryClass, space: Space) -> WaveFunction {
        let c = Configuration::new(Model::particle_in_box(1.0).unwrap(), ns.to_vec(), sym, space).unwrap();
        WaveFunction::build(&c).unwrap()
    }

    fn scheme() -> QuadratureScheme {
        QuadratureScheme::finite_default()
    }

    #[test]
    fn one_density_midpoint() {
        let a = wf(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Position);
        let rho = reduce_to_one(&a, &scheme()).unwrap();
        assert_eq!(rho.strategy(), Strategy::ClosedForm);
        assert_abs_diff_eq!(rho.value(&[0.5]).unwrap(), 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn one_density_independent_of_symmetry() {
        for space in [Space::Position, Space::Momentum] {
            let a = reduce_to_one(&wf(&[1, 2, 4], SymmetryClass::Antisymmetric, space), &scheme()).unwrap();
            let s = reduce_to_one(&wf(&[1, 2, 4], SymmetryClass::Symmetric, space), &scheme()).unwrap();
            for i in 0..200 {
                let x = match space {
                    Space::Position => i as f64 / 199.0,
                    Space::Momentum => -30.0 + 60.0 * i as f64 / 199.0,
                };
                assert!((a.value(&[x]).unwrap() - s.value(&[x]).unwrap()).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn fermi_hole_and_exchange_in_momentum() {
        let a = reduce_to_pair(&wf(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Momentum), &scheme()).unwrap();
        for &p in &[-9.0, -1.0, 0.0, 2.5, PI, 12.0] {
            assert_abs_diff_eq!(a.value(&[p, p]).unwrap(), 0.0, epsilon = 1e-15);
        }
        let s = reduce_to_pair(&wf(&[1, 2, 3], SymmetryClass::Symmetric, Space::Position), &scheme()).unwrap();
        assert!(s.value(&[0.3, 0.7]).unwrap() > 1e-3);
    }

    #[test]
    fn closed_form_matches_numerical_reduction() {
        for space in [Space::Position, Space::Momentum] {
            for sym in [SymmetryClass::Antisymmetric, SymmetryClass::Symmetric] {
                let w = wf(&[1, 2, 3], sym, space);
                let closed = reduce_to_pair(&w, &scheme()).unwrap();
                let numeric = reduce_numerical(&w, 2, &QuadratureScheme::default_for(&w.model(), space)).unwrap();
                assert_eq!(numeric.strategy(), Strategy::QuadratureReduced);
                let (lo, hi) = closed.default_extent();
                let probe = GridSpec { lo: lo + 0.01, hi: hi - 0.01, points: 50 };
                let a = export_density_grid(&closed, probe, probe).unwrap();
                let b = export_density_grid(&numeric, probe, probe).unwrap();
                for (x, y) in a.rows.iter().zip(&b.rows) {
                    assert!((x.2 - y.2).abs() <= 1e-7, "{space} {sym}: {x:?} vs {y:?}");
                }
                let rho = reduce_to_one(&w, &scheme()).unwrap();
                let rho_n = reduce_numerical(&w, 1, &QuadratureScheme::default_for(&w.model(), space)).unwrap();
                for x in probe.coords() {
                    assert!((rho.value(&[x]).unwrap() - rho_n.value_exact(&[x]).unwrap()).abs() <= 1e-7);
                }
            }
        }
    }

    #[test]
    fn pair_density_integrates_to_one_and_marginalises() {
        let w = wf(&[1, 2, 5], SymmetryClass::Symmetric, Space::Position);
        let gamma = reduce_to_pair(&w, &scheme()).unwrap();
        let rho = reduce_to_one(&w, &scheme()).unwrap();
        let rule = AxisRule::for_scheme(&AxisDomain::for_model(&w.model(), Space::Position, 5, &scheme()), &scheme(), 2)
            .unwrap();
        let tab = gamma.tabulate(&[&rule, &rule]).unwrap();
        let wts = rule.weights();
        let m = wts.len();
        let total: f64 = (0..m * m).map(|k| wts[k / m] * wts[k % m] * tab[k]).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        for (i, node) in rule.nodes.iter().enumerate().step_by(17) {
            let marg: f64 = (0..m).map(|j| wts[j] * tab[i * m + j]).sum();
            assert!((marg - rho.value(&[node.x]).unwrap()).abs() <= 1e-7);
        }
    }

    #[test]
    fn momentum_marginal_consistency() {
        let w = wf(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Momentum);
        let line = QuadratureScheme::line_default();
        let gamma = reduce_to_pair(&w, &line).unwrap();
        let rho = reduce_to_one(&w, &line).unwrap();
        let rule = AxisRule::for_scheme(&AxisDomain::for_model(&w.model(), Space::Momentum, 3, &line), &line, 2).unwrap();
        let probe_rule = AxisRule {
            nodes: [-7.7, -0.3, 0.0, 2.0, PI, 11.1]
                .iter()
                .map(|&x| crate::quadrature::AxisNode { x, w: 1.0, phase: None })
                .collect(),
        };
        let tab = gamma.tabulate(&[&probe_rule, &rule]).unwrap();
        let wts = rule.weights();
        for (i, node) in probe_rule.nodes.iter().enumerate() {
            let marg: f64 = wts.iter().enumerate().map(|(j, w)| w * tab[i * wts.len() + j]).sum();
            assert!((marg - rho.value(&[node.x]).unwrap()).abs() <= 1e-7, "p={}", node.x);
        }
    }

    #[test]
    fn repeated_symmetric_numbers_use_quadrature() {
        let w = wf(&[1, 1, 2], SymmetryClass::Symmetric, Space::Position);
        let gamma = reduce_to_pair(&w, &scheme()).unwrap();
        assert_eq!(gamma.strategy(), Strategy::QuadratureReduced);
        // Direct evaluation of Γ for (1,1,2): |Ψ|² integrated over x3 by hand.
        // Ψ = (2/√12)[ψ1ψ1ψ2 + ψ1ψ2ψ1 + ψ2ψ1ψ1], so
        // Γ = (1/3)[ψ1(a)²ψ1(b)² + ... ] computed from orthonormality:
        let f = |n: f64, x: f64| 2f64.sqrt() * (n * PI * x).sin();
        let (a, b) = (0.23, 0.61);
        let (p1a, p2a, p1b, p2b) = (f(1.0, a), f(2.0, a), f(1.0, b), f(2.0, b));
        // Terms with x3 in ψ2: ψ1(a)ψ1(b); with x3 in ψ1: ψ1(a)ψ2(b) + ψ2(a)ψ1(b).
        let expected = (4.0 / 12.0) * ((p1a * p1b).powi(2) + (p1a * p2b + p2a * p1b).powi(2));
        assert_abs_diff_eq!(gamma.value_exact(&[a, b]).unwrap(), expected, epsilon = 1e-12);
        assert!((gamma.value(&[a, b]).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn superposition_cross_terms_vanish_on_reduction() {
        let model = Model::particle_in_box(1.0).unwrap();
        let a = Configuration::new(model, vec![1, 2, 3], SymmetryClass::Antisymmetric, Space::Position).unwrap();
        let b = Configuration::new(model, vec![4, 5, 6], SymmetryClass::Antisymmetric, Space::Position).unwrap();
        let c = 0.5f64.sqrt();
        let s = WaveFunction::superposition(&a, &b, c, c, true).unwrap();
        let ga = reduce_to_pair(&WaveFunction::build(&a).unwrap(), &scheme()).unwrap();
        let gb = reduce_to_pair(&WaveFunction::build(&b).unwrap(), &scheme()).unwrap();
        let gs = reduce_to_pair(&s, &scheme()).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.33, 0.8), (0.5, 0.51), (0.9, 0.05)] {
            let mixed = 0.5 * ga.value(&[x, y]).unwrap() + 0.5 * gb.value(&[x, y]).unwrap();
            assert_abs_diff_eq!(gs.value_exact(&[x, y]).unwrap(), mixed, epsilon = 1e-10);
        }
        // Degenerate superposition reduces to state A.
        let pure = WaveFunction::superposition(&a, &b, 1.0, 0.0, true).unwrap();
        let gp = reduce_to_pair(&pure, &scheme()).unwrap();
        for &(x, y) in &[(0.1, 0.2), (0.33, 0.8)] {
            assert_abs_diff_eq!(gp.value_exact(&[x, y]).unwrap(), ga.value(&[x, y]).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn interpolated_grid_tracks_exact_values() {
        let model = Model::oscillator(1.0).unwrap();
        let a = Configuration::new(model, vec![0, 1, 2], SymmetryClass::Antisymmetric, Space::Momentum).unwrap();
        let b = Configuration::new(model, vec![3, 4, 5], SymmetryClass::Antisymmetric, Space::Momentum).unwrap();
        let s = WaveFunction::superposition(&a, &b, 0.6, 0.8, false).unwrap();
        let g = reduce_to_pair(&s, &QuadratureScheme::line_default()).unwrap();
        for &(x, y) in &[(0.1, 0.2), (-1.3, 0.8), (2.0, -2.5)] {
            let exact = g.value_exact(&[x, y]).unwrap();
            assert!((g.value(&[x, y]).unwrap() - exact).abs() < 2e-4, "{x},{y}");
        }
    }

    #[test]
    fn exported_grids() {
        let a = reduce_to_pair(&wf(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Position), &scheme()).unwrap();
        let spec = GridSpec { lo: 0.0, hi: 1.0, points: 101 };
        let g = export_density_grid(&a, spec, spec).unwrap();
        for i in 0..101 {
            assert!(g.rows[i * 101 + i].2.abs() <= 1e-12);
        }
        assert_abs_diff_eq!(g.trapezoid_integral(), 1.0, epsilon = 1e-3);

        let s2 = reduce_to_pair(&wf(&[2, 3], SymmetryClass::Symmetric, Space::Position), &scheme()).unwrap();
        let g2 = export_density_grid(&s2, spec, spec).unwrap();
        for i in 0..101 {
            assert!(g2.rows[i * 101 + (100 - i)].2.abs() <= 1e-12);
        }
        let mut buf = Vec::new();
        g2.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,value\n"));
        assert_eq!(text.lines().count(), 101 * 101 + 1);

        let one = reduce_to_one(&wf(&[1, 2, 3], SymmetryClass::Antisymmetric, Space::Position), &scheme()).unwrap();
        assert!(export_density_grid(&one, spec, spec).is_err());
    }

    proptest! {
        #[test]
        fn pair_density_symmetric_and_non_negative(
            a in 0.0f64..1.0, b in 0.0f64..1.0, n3 in 3u32..=10, anti in any::<bool>(), mom in any::<bool>()
        ) {
            let sym = if anti { SymmetryClass::Antisymmetric } else { SymmetryClass::Symmetric };
            let (space, x, y) = if mom { (Space::Momentum, 40.0 * a - 20.0, 40.0 * b - 20.0) } else { (Space::Position, a, b) };
            let g = reduce_to_pair(&wf(&[1, 2, n3], sym, space), &scheme()).unwrap();
            let u = g.value(&[x, y]).unwrap();
            let v = g.value(&[y, x]).unwrap();
            prop_assert!((u - v).abs() <= 1e-14 * u.abs().max(1.0));
            prop_assert!(u >= -1e-15);
        }
    }
}
