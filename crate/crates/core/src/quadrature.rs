//! Tensor-product quadrature on finite intervals and on the real line.
//!
//! Every integral is a weighted sum over per-axis node sets ([`AxisRule`]).
//! Three axis domains are supported:
//!
//! * `Interval`: composite rule on `[lo, hi]`, breakpoints optionally snapped
//!   to a pitch so that orbital nodes sit on panel boundaries.
//! * `Line`: the algebraic map `p = S u / (1 - u²)` from `(-1, 1)`.
//! * `PeriodicLine`: box momentum space. Box momentum orbitals are a rational
//!   envelope times `1 ± e^{-ipL}`, so the rule uses panels aligned with the
//!   period `2π/L` near the origin and, beyond a cutoff, sums whole periods:
//!   a period-local Gauss rule in the phase variable and a mapped Gauss rule
//!   (with an Euler-Maclaurin end correction) across periods. Tail nodes
//!   carry the plane-wave phase they stand for, which orbital evaluation must
//!   use instead of `e^{-ipL}` at the node itself.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbitals::{Model, Space};

/// Densities below this are treated as exact zeros in `-d ln d`.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Negative densities down to this are quadrature noise and clamp to zero.
pub const NEGATIVE_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleFamily {
    GaussLegendreComposite,
    TanhSinh,
}

impl std::str::FromStr for RuleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gauss-legendre" | "gl" | "gauss-legendre-composite" => {
                Ok(RuleFamily::GaussLegendreComposite)
            }
            "tanh-sinh" | "ts" => Ok(RuleFamily::TanhSinh),
            other => Err(Error::invalid(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// Quadrature settings. `panels[k - 1]` is the panel count per axis used for
/// `k`-dimensional integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub rule: RuleFamily,
    pub panels: [usize; 3],
    pub nodes_per_panel: usize,
    pub target_abs_tol: f64,
    /// Overrides the line-map scale `S`. For box momentum space this also
    /// replaces the period-aligned rule by the plain algebraic map.
    pub momentum_scale: Option<f64>,
}

impl QuadratureScheme {
    pub const DEFAULT_TOL: f64 = 5e-5;

    /// Box position space: 24 panels for 1D and 2D, 32 for 3D.
    ///
    /// Antisymmetric densities vanish quadratically on the planes `x_i = x_j`,
    /// which cut across panels; 3D entropies need the finer grid there.
    pub fn finite_default() -> Self {
        QuadratureScheme {
            rule: RuleFamily::GaussLegendreComposite,
            panels: [24, 24, 32],
            nodes_per_panel: 10,
            target_abs_tol: Self::DEFAULT_TOL,
            momentum_scale: None,
        }
    }

    /// Infinite domains: 32 panels for 1D and 2D, 48 for 3D.
    pub fn line_default() -> Self {
        QuadratureScheme {
            panels: [32, 32, 48],
            ..Self::finite_default()
        }
    }

    pub fn default_for(model: &Model, space: Space) -> Self {
        match (model, space) {
            (Model::Box { .. }, Space::Position) => Self::finite_default(),
            _ => Self::line_default(),
        }
    }

    /// Same panel count for every dimension.
    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = [panels; 3];
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes_per_panel = nodes;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.target_abs_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for &p in &self.panels {
            if p == 0 || self.nodes_per_panel == 0 || p * self.nodes_per_panel < 16 {
                return Err(Error::invalid(format!(
                    "quadrature needs at least 16 nodes per axis, got {p} panels x {} nodes",
                    self.nodes_per_panel
                )));
            }
        }
        if !(self.target_abs_tol.is_finite() && self.target_abs_tol > 0.0) {
            return Err(Error::invalid(format!(
                "tolerance must be positive, got {}",
                self.target_abs_tol
            )));
        }
        if let Some(s) = self.momentum_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!("momentum scale must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// The comparison level for error estimates: half the panels.
    pub fn coarse(&self) -> Self {
        QuadratureScheme {
            panels: self.panels.map(|p| (p / 2).max(1)),
            ..*self
        }
    }

    pub fn panels_for(&self, dim: usize) -> usize {
        self.panels[dim.clamp(1, 3) - 1]
    }
}

/// One axis of an integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisDomain {
    Interval { lo: f64, hi: f64, pitch: Option<f64> },
    Line { scale: f64 },
    PeriodicLine { length: f64, nmax: u32 },
}

impl AxisDomain {
    /// The axis used for orbitals of `model` in `space`, with `nmax` the
    /// largest quantum number involved.
    pub fn for_model(model: &Model, space: Space, nmax: u32, scheme: &QuadratureScheme) -> Self {
        match (*model, space) {
            (Model::Box { length }, Space::Position) => AxisDomain::Interval {
                lo: 0.0,
                hi: length,
                pitch: Some(length / 120.0),
            },
            (Model::Box { length }, Space::Momentum) => match scheme.momentum_scale {
                Some(scale) => AxisDomain::Line { scale },
                None => AxisDomain::PeriodicLine { length, nmax },
            },
            (model, space) => AxisDomain::Line {
                scale: scheme
                    .momentum_scale
                    .unwrap_or_else(|| default_map_scale(&model, space, nmax)),
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, AxisDomain::Interval { .. })
    }
}

/// Scale `S` of the algebraic line map.
pub fn default_map_scale(model: &Model, space: Space, nmax: u32) -> f64 {
    match *model {
        Model::Box { length } => f64::from(nmax) * PI / length + 10.0 / length,
        Model::Oscillator { omega } => {
            let turning = (2.0 * f64::from(nmax) + 1.0).sqrt();
            match space {
                Space::Position => turning / omega.sqrt(),
                Space::Momentum => turning * omega.sqrt(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisNode {
    pub x: f64,
    pub w: f64,
    /// Plane-wave factor `e^{-ipL}` to use at this node, when it differs from
    /// the value at `x` (tail nodes of a periodic rule).
    pub phase: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisRule {
    pub nodes: Vec<AxisNode>,
}

impl AxisRule {
    pub fn new(domain: &AxisDomain, panels: usize, nodes_per_panel: usize, family: RuleFamily) -> Result<Self> {
        if panels == 0 || nodes_per_panel == 0 {
            return Err(Error::invalid("axis rule needs at least one panel and one node"));
        }
        let base = reference_rule(family, nodes_per_panel);
        let nodes = match *domain {
            AxisDomain::Interval { lo, hi, pitch } => {
                if !(hi > lo) {
                    return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
                }
                let cuts = breakpoints(lo, hi, panels, pitch);
                plain_nodes(&composite(&base, &cuts))
            }
            AxisDomain::Line { scale } => {
                let cuts: Vec<f64> = (0..=panels)
                    .map(|i| -1.0 + 2.0 * i as f64 / panels as f64)
                    .collect();
                composite(&base, &cuts)
                    .into_iter()
                    .filter_map(|(u, wu)| {
                        let (x, jac) = momentum_map(u, scale).ok()?;
                        let w = wu * jac;
                        w.is_finite().then_some(AxisNode { x, w, phase: None })
                    })
                    .collect()
            }
            AxisDomain::PeriodicLine { length, nmax } => {
                periodic_nodes(&base, family, length, nmax, panels, nodes_per_panel)
            }
        };
        Ok(AxisRule { nodes })
    }

    pub fn for_scheme(domain: &AxisDomain, scheme: &QuadratureScheme, dim: usize) -> Result<Self> {
        Self::new(domain, scheme.panels_for(dim), scheme.nodes_per_panel, scheme.rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.w).collect()
    }

    pub fn points(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.x).collect()
    }
}

/// Nodes and weights of the reference rule on `[-1, 1]`.
pub fn reference_rule(family: RuleFamily, m: usize) -> Vec<(f64, f64)> {
    match family {
        RuleFamily::GaussLegendreComposite => {
            let m = NonZeroUsize::new(m.max(1)).expect("nonzero");
            let mut pairs = GaussLegendre::new(m).as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs
        }
        RuleFamily::TanhSinh => tanh_sinh(m),
    }
}

/// `m`-point tanh-sinh rule on `[-1, 1]` with the step chosen so the
/// outermost abscissa sits at `t = ±3`.
fn tanh_sinh(m: usize) -> Vec<(f64, f64)> {
    if m == 1 {
        return vec![(0.0, 2.0)];
    }
    let t_max = 3.0;
    let h = 2.0 * t_max / (m - 1) as f64;
    let raw: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let t = -t_max + h * k as f64;
            let s = 0.5 * PI * t.sinh();
            let c = s.cosh();
            (s.tanh(), h * 0.5 * PI * t.cosh() / (c * c))
        })
        .collect();
    // Rescale so constants integrate exactly.
    let total: f64 = raw.iter().map(|r| r.1).sum();
    raw.into_iter().map(|(x, w)| (x, 2.0 * w / total)).collect()
}

fn breakpoints(lo: f64, hi: f64, panels: usize, pitch: Option<f64>) -> Vec<f64> {
    let width = hi - lo;
    let uniform = |i: usize| lo + width * i as f64 / panels as f64;
    match pitch {
        Some(pitch) if pitch > 0.0 && width / panels as f64 >= pitch => {
            let mut cuts = vec![lo];
            for i in 1..panels {
                let snapped = lo + ((uniform(i) - lo) / pitch).round() * pitch;
                if snapped > *cuts.last().expect("nonempty") && snapped < hi {
                    cuts.push(snapped);
                }
            }
            cuts.push(hi);
            cuts
        }
        _ => (0..=panels).map(uniform).collect(),
    }
}

fn composite(base: &[(f64, f64)], cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(base.len() * cuts.len());
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        out.extend(base.iter().map(|&(x, w)| (mid + half * x, half * w)));
    }
    out
}

fn plain_nodes(pairs: &[(f64, f64)]) -> Vec<AxisNode> {
    pairs
        .iter()
        .map(|&(x, w)| AxisNode { x, w, phase: None })
        .collect()
}

/// Zone sizes of the periodic rule for a given panel budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicLayout {
    /// Periods per side resolved with `fine_sub` panels each.
    pub fine_periods: i64,
    pub fine_sub: usize,
    pub mid_sub: usize,
    /// Periods per side covered explicitly, including the fine ones.
    pub core_periods: i64,
}

impl PeriodicLayout {
    pub fn new(nmax: u32, panels: usize) -> Self {
        let fine_sub = (panels / 8).max(1);
        let mid_sub = fine_sub.div_ceil(2).max(1);
        let extra = (panels / 4).clamp(2, 8) as i64;
        let fine_periods = i64::from((nmax + 2).div_ceil(2));
        PeriodicLayout {
            fine_periods,
            fine_sub,
            mid_sub,
            core_periods: fine_periods + extra,
        }
    }
}

fn periodic_nodes(
    base: &[(f64, f64)],
    family: RuleFamily,
    length: f64,
    nmax: u32,
    panels: usize,
    nodes_per_panel: usize,
) -> Vec<AxisNode> {
    let period = 2.0 * PI / length;
    let layout = PeriodicLayout::new(nmax, panels);
    let kf = layout.fine_periods;
    let kc = layout.core_periods;

    let mut nodes = Vec::new();
    for j in -kc..kc {
        let sub = if (-kf..kf).contains(&j) {
            layout.fine_sub
        } else if (-kf - 2..kf + 2).contains(&j) {
            layout.mid_sub
        } else {
            1
        };
        let a = j as f64 * period;
        let cuts: Vec<f64> = (0..=sub)
            .map(|i| a + period * i as f64 / sub as f64)
            .collect();
        nodes.extend(plain_nodes(&composite(base, &cuts)));
    }

    // Tail: p = ±(P + θ + T t), θ in one period, t in [-1/2, ∞) counting
    // periods. The t-integral approximates the sum F(0) + F(1) + ... over
    // whole periods; the correction nodes add the leading Euler-Maclaurin
    // terms of that midpoint-type sum.
    let cutoff = kc as f64 * period;
    let theta = composite(base, &[0.0, period]);
    let tail_m = nodes_per_panel.div_ceil(2).max(4);
    let s_rule = composite(&reference_rule(family, tail_m), &[0.0, 0.5, 1.0]);
    // With c = K - 1/2 the map sends p^-k tails to polynomials in s.
    let c = kc as f64 - 0.5;
    let mut t_nodes: Vec<(f64, f64)> = s_rule
        .iter()
        .map(|&(s, w)| (-0.5 + c * s / (1.0 - s), c * w / ((1.0 - s) * (1.0 - s))))
        .collect();
    // F'(-1/2)/24 - 7 F'''(-1/2)/5760 from fourth-order differences over
    // whole periods.
    for (t, w) in [(-2.0, 17.0), (-1.0, -291.0), (0.0, 291.0), (1.0, -17.0)] {
        t_nodes.push((t, w / 5760.0));
    }

    for &(th, wth) in &theta {
        for &(t, wt) in &t_nodes {
            let p = cutoff + th + period * t;
            let w = wth * wt;
            for sign in [1.0, -1.0] {
                nodes.push(AxisNode {
                    x: sign * p,
                    w,
                    phase: Some(Complex64::from_polar(1.0, -sign * th * length)),
                });
            }
        }
    }
    nodes
}

/// `p = S u / (1 - u²)` and its Jacobian `S (1 + u²) / (1 - u²)²`.
pub fn momentum_map(u: f64, scale: f64) -> Result<(f64, f64)> {
    if !(u.abs() < 1.0) {
        return Err(Error::Domain {
            what: "u",
            value: u,
            domain: "(-1, 1)".into(),
        });
    }
    let d = 1.0 - u * u;
    Ok((scale * u / d, scale * (1.0 + u * u) / (d * d)))
}

/// `-d ln d` with the `d -> 0` limit.
pub fn entropy_integrand(d: f64) -> Result<f64> {
    if d.is_nan() || d < -NEGATIVE_NOISE {
        return Err(Error::Domain {
            what: "density",
            value: d,
            domain: "[0, inf)".into(),
        });
    }
    if d <= UNDERFLOW_FLOOR {
        return Ok(0.0);
    }
    Ok(-d * d.ln())
}

/// Result of an integration with its two-level error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

/// Sum of `f(i)` over `0..n`, evaluated in parallel but accumulated in index
/// order so the result does not depend on the thread count.
pub fn ordered_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let parts: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    parts.iter().sum()
}

/// Like [`ordered_sum`] for fallible terms; the first error in index order wins.
pub fn try_ordered_sum<F>(n: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let parts: Vec<Result<f64>> = (0..n).into_par_iter().map(f).collect();
    let mut total = 0.0;
    for part in parts {
        total += part?;
    }
    Ok(total)
}

/// Tensor-product sum of a pointwise integrand over `rules`.
pub fn tensor_sum<F>(rules: &[&AxisRule], f: &F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    match rules {
        [] => 0.0,
        [a] => ordered_sum(a.len(), |i| a.nodes[i].w * f(&[a.nodes[i].x])),
        [a, b] => ordered_sum(a.len(), |i| {
            let (xi, wi) = (a.nodes[i].x, a.nodes[i].w);
            wi * b.nodes.iter().map(|n| n.w * f(&[xi, n.x])).sum::<f64>()
        }),
        [a, b, c] => ordered_sum(a.len(), |i| {
            let (xi, wi) = (a.nodes[i].x, a.nodes[i].w);
            let mut acc = 0.0;
            for nb in &b.nodes {
                let inner: f64 = c.nodes.iter().map(|nc| nc.w * f(&[xi, nb.x, nc.x])).sum();
                acc += nb.w * inner;
            }
            wi * acc
        }),
        _ => panic!("tensor_sum supports at most three axes"),
    }
}

/// Integrates a pointwise integrand over 1 to 3 axes.
///
/// The integral is computed at the scheme's resolution and at half and a
/// quarter of the panels. The error estimate is the change between the two
/// finest levels; if it exceeds the tolerance and did not shrink under
/// refinement, the integral is reported as non-convergent.
///
/// The integrand sees only coordinates, so tail phases of periodic rules are
/// ignored: use this for non-oscillatory integrands only.
pub fn integrate<F>(f: F, domains: &[AxisDomain], scheme: &QuadratureScheme) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = domains.len();
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!("cannot integrate over {dim} axes")));
    }
    scheme.validate()?;
    let level = |s: &QuadratureScheme| -> Result<(f64, usize)> {
        let rules = domains
            .iter()
            .map(|d| AxisRule::for_scheme(d, s, dim))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&AxisRule> = rules.iter().collect();
        let count = rules.iter().map(AxisRule::len).product();
        Ok((tensor_sum(&refs, &f), count))
    };
    let (fine, nodes) = level(scheme)?;
    let (half, _) = level(&scheme.coarse())?;
    let (quarter, _) = level(&scheme.coarse().coarse())?;
    if !fine.is_finite() {
        return Err(Error::NonConvergence {
            what: "integral".into(),
            estimate: f64::INFINITY,
            tolerance: scheme.target_abs_tol,
        });
    }
    let error = (fine - half).abs();
    let previous = (half - quarter).abs();
    if error > scheme.target_abs_tol && error >= previous {
        return Err(Error::NonConvergence {
            what: "integral".into(),
            estimate: error,
            tolerance: scheme.target_abs_tol,
        });
    }
    Ok(IntegralResult { value: fine, error, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbitals::box_momentum;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_box() -> AxisDomain {
        AxisDomain::Interval { lo: 0.0, hi: 1.0, pitch: Some(1.0 / 120.0) }
    }

    #[test]
    fn sine_square_normalisation() {
        let r = integrate(
            |x| 2.0 * (PI * x[0]).sin().powi(2),
            &[unit_box()],
            &QuadratureScheme::finite_default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-13);
    }

    /// High-order oracle for the log-singular entropy integrand: substitute
    /// x = (1 - cos θ)/2-like clustering via tanh-sinh on a few panels.
    fn oracle_ground_entropy() -> f64 {
        let rule = reference_rule(RuleFamily::TanhSinh, 121);
        let f = |x: f64| {
            let d = 2.0 * (PI * x).sin().powi(2);
            entropy_integrand(d).unwrap()
        };
        rule.iter().map(|&(t, w)| 0.5 * w * f(0.5 * (t + 1.0))).sum()
    }

    #[test]
    fn ground_state_entropy_matches_closed_form() {
        let exact = 2f64.ln() - 1.0;
        assert_abs_diff_eq!(oracle_ground_entropy(), exact, epsilon = 1e-10);
        let r = integrate(
            |x| entropy_integrand(2.0 * (PI * x[0]).sin().powi(2)).unwrap(),
            &[unit_box()],
            &QuadratureScheme::finite_default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, exact, epsilon = 1e-7);
        assert!(r.error < 1e-6);
    }

    #[test]
    fn gaussian_through_the_map() {
        for scale in [0.5, 1.0, 3.0] {
            let r = integrate(
                |p| (-p[0] * p[0]).exp(),
                &[AxisDomain::Line { scale }],
                &QuadratureScheme::line_default(),
            )
            .unwrap();
            assert_abs_diff_eq!(r.value, PI.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn map_basics() {
        let (p, j) = momentum_map(0.0, 2.5).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(j, 2.5);
        assert!(momentum_map(1.0, 1.0).is_err());
        assert!(momentum_map(-1.2, 1.0).is_err());
    }

    #[test]
    fn entropy_integrand_values() {
        assert_eq!(entropy_integrand(0.0).unwrap(), 0.0);
        assert_eq!(entropy_integrand(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            entropy_integrand(std::f64::consts::E).unwrap(),
            -std::f64::consts::E,
            epsilon = 1e-15
        );
        assert_eq!(entropy_integrand(-1e-14).unwrap(), 0.0);
        assert_eq!(entropy_integrand(1e-310).unwrap(), 0.0);
        assert!(entropy_integrand(-1e-6).is_err());
        assert!(entropy_integrand(f64::NAN).is_err());
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        for m in 1..=12usize {
            let rule = AxisRule::new(
                &AxisDomain::Interval { lo: -0.3, hi: 1.7, pitch: None },
                3,
                m,
                RuleFamily::GaussLegendreComposite,
            )
            .unwrap();
            for deg in 0..(2 * m) as i32 {
                let sum: f64 = rule.nodes.iter().map(|n| n.w * n.x.powi(deg)).sum();
                let exact = (1.7f64.powi(deg + 1) - (-0.3f64).powi(deg + 1)) / f64::from(deg + 1);
                assert!(
                    (sum - exact).abs() < 1e-12 * exact.abs().max(1.0),
                    "m={m} deg={deg}: {sum} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn snapped_breakpoints_hit_orbital_nodes() {
        let cuts = breakpoints(0.0, 1.0, 16, Some(1.0 / 120.0));
        assert_eq!(cuts.len(), 17);
        for c in &cuts {
            let steps = c * 120.0;
            assert_abs_diff_eq!(steps, steps.round(), epsilon = 1e-9);
        }
        let cuts24 = breakpoints(0.0, 2.0, 24, Some(2.0 / 120.0));
        for n in [2.0, 3.0, 4.0, 6.0, 8.0, 12.0] {
            // Nodes of sin(nπx/L) at multiples of L/n coincide with cuts when
            // L/n is a multiple of L/24.
            if 24.0 % n == 0.0 {
                let node = 2.0 / n;
                assert!(cuts24.iter().any(|c| (c - node).abs() < 1e-12));
            }
        }
        // Gauss nodes never land on a breakpoint.
        let rule = AxisRule::new(&unit_box(), 16, 10, RuleFamily::GaussLegendreComposite).unwrap();
        for node in &rule.nodes {
            for c in &cuts {
                assert!((node.x - c).abs() > 1e-6);
            }
        }
    }

    #[test]
    fn periodic_rule_normalises_box_momentum_orbitals() {
        let scheme = QuadratureScheme::line_default();
        for n in 1..=10u32 {
            let domain = AxisDomain::PeriodicLine { length: 1.0, nmax: n };
            let rule = AxisRule::for_scheme(&domain, &scheme, 1).unwrap();
            let norm: f64 = rule
                .nodes
                .iter()
                .map(|node| {
                    let phi = match node.phase {
                        Some(phase) => crate::orbitals::box_momentum_with_phase(n, 1.0, node.x, phase),
                        None => box_momentum(n, 1.0, node.x),
                    };
                    node.w * phi.norm_sqr()
                })
                .sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn periodic_rule_integrates_smooth_functions() {
        let domain = AxisDomain::PeriodicLine { length: 1.0, nmax: 3 };
        let r = integrate(|p| 1.0 / (100.0 + p[0] * p[0]), &[domain], &QuadratureScheme::line_default()).unwrap();
        // Slow p^-2 decay: the end correction leaves a few 1e-9.
        assert_abs_diff_eq!(r.value, PI / 10.0, epsilon = 1e-8);
    }

    #[test]
    fn tanh_sinh_family_integrates() {
        let scheme = QuadratureScheme {
            rule: RuleFamily::TanhSinh,
            ..QuadratureScheme::finite_default()
        };
        let r = integrate(|x| 2.0 * (PI * x[0]).sin().powi(2), &[unit_box()], &scheme).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn three_dimensional_product() {
        let d = unit_box();
        let r = integrate(
            |x| 8.0 * (PI * x[0]).sin().powi(2) * (2.0 * PI * x[1]).sin().powi(2) * (3.0 * PI * x[2]).sin().powi(2),
            &[d, d, d],
            &QuadratureScheme::finite_default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert_eq!(r.nodes, 320usize.pow(3));
    }

    #[test]
    fn scheme_validation() {
        assert!(QuadratureScheme::finite_default().with_panels(1).validate().is_err());
        assert!(QuadratureScheme::finite_default().with_panels(2).with_nodes(8).validate().is_ok());
        assert!(QuadratureScheme::finite_default().with_tol(0.0).validate().is_err());
        assert_eq!(QuadratureScheme::line_default().coarse().panels, [16, 16, 24]);
    }

    #[test]
    fn ordered_sum_is_deterministic() {
        let f = |i: usize| 1.0 / (1.0 + i as f64).powf(1.3);
        let a = ordered_sum(100_000, f);
        let b = ordered_sum(100_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
        let serial: f64 = (0..100_000).map(f).sum();
        assert_eq!(a.to_bits(), serial.to_bits());
    }

    proptest! {
        #[test]
        fn map_is_odd_and_monotone(u in -0.999f64..0.999, scale in 0.1f64..10.0) {
            let (p, j) = momentum_map(u, scale).unwrap();
            let (q, k) = momentum_map(-u, scale).unwrap();
            prop_assert_eq!(p, -q);
            prop_assert_eq!(j, k);
            prop_assert!(j > 0.0);
        }

        #[test]
        fn entropy_integrand_never_nan(d in 0.0f64..1e6) {
            let v = entropy_integrand(d).unwrap();
            prop_assert!(v.is_finite());
        }

        #[test]
        fn axis_weights_sum_to_length(lo in -3.0f64..3.0, len in 0.1f64..5.0, panels in 1usize..40, m in 1usize..12) {
            let rule = AxisRule::new(
                &AxisDomain::Interval { lo, hi: lo + len, pitch: Some(len / 120.0) },
                panels, m, RuleFamily::GaussLegendreComposite).unwrap();
            let total: f64 = rule.weights().iter().sum();
            prop_assert!((total - len).abs() < 1e-12 * len.max(1.0));
        }
    }
}
