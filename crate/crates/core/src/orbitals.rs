//! Single-particle basis functions.
//!
//! Units follow ħ = m = 1. Box orbitals live on `[0, L]`; their momentum
//! representation is the unitary Fourier transform with kernel
//! `exp(-i p x) / sqrt(2π)`. Oscillator orbitals are Hermite functions with
//! trap strength `omega`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex orbital value.
pub type Amplitude = Complex64;

/// Threshold on `|z|` below which `sin(z)/z` switches to its Taylor series.
pub const SINC_SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Position,
    Momentum,
}

impl Space {
    pub fn label(self) -> &'static str {
        match self {
            Space::Position => "position",
            Space::Momentum => "momentum",
        }
    }

    /// Coordinate symbol used in table headers (`x` or `p`).
    pub fn symbol(self) -> &'static str {
        match self {
            Space::Position => "x",
            Space::Momentum => "p",
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "position" | "x" => Ok(Space::Position),
            "momentum" | "p" => Ok(Space::Momentum),
            other => Err(Error::invalid(format!(
                "unknown space '{other}' (expected position or momentum)"
            ))),
        }
    }
}

/// Confining model and its single scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Box { length: f64 },
    Oscillator { omega: f64 },
}

impl Model {
    pub fn particle_in_box(length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!(
                "box length must be positive, got {length}"
            )));
        }
        Ok(Model::Box { length })
    }

    pub fn oscillator(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid(format!(
                "trap strength omega must be positive, got {omega}"
            )));
        }
        Ok(Model::Oscillator { omega })
    }

    /// Lowest admissible quantum number (1 for the box, 0 for the oscillator).
    pub fn ground_state(&self) -> u32 {
        match self {
            Model::Box { .. } => 1,
            Model::Oscillator { .. } => 0,
        }
    }

    pub fn check_quantum_number(&self, n: u32) -> Result<()> {
        if n < self.ground_state() {
            return Err(Error::invalid(format!(
                "quantum number {n} is not allowed for the {} (minimum {})",
                self.name(),
                self.ground_state()
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Box { .. } => "box",
            Model::Oscillator { .. } => "oscillator",
        }
    }

    /// Evaluates orbital `n` at a coordinate of the given space.
    pub fn orbital(&self, n: u32, space: Space, coord: f64) -> Result<Amplitude> {
        self.check_quantum_number(n)?;
        match (*self, space) {
            (Model::Box { length }, Space::Position) => box_position(n, length, coord),
            (Model::Box { length }, Space::Momentum) => Ok(box_momentum(n, length, coord)),
            (Model::Oscillator { omega }, space) => Ok(oscillator(n, omega, coord, space)),
        }
    }
}

/// `sqrt(2/L) sin(nπx/L)` on `[0, L]`.
pub fn box_position(n: u32, length: f64, x: f64) -> Result<Amplitude> {
    let slack = 1e-12 * length;
    if !(x >= -slack && x <= length + slack) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: format!("[0, {length}]"),
        });
    }
    let value = (2.0 / length).sqrt() * (f64::from(n) * PI * x / length).sin();
    Ok(Amplitude::new(value, 0.0))
}

/// `sin(z)/z` with a series branch near the removable point.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < SINC_SERIES_THRESHOLD {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `i^k` without rounding noise.
fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Momentum-space box orbital, the Fourier transform of [`box_position`].
///
/// Both `sin(w/2)/w` factors have removable singularities at `pL = ±nπ`,
/// handled through [`sinc`].
pub fn box_momentum(n: u32, length: f64, p: f64) -> Amplitude {
    let n_pi = f64::from(n) * PI;
    let pl = p * length;
    // sin(w/2)/w = sinc(w/2)/2
    let minus = 0.5 * sinc(0.5 * (pl - n_pi));
    let plus = 0.5 * sinc(0.5 * (pl + n_pi));
    let bracket = i_pow(i64::from(n)) * minus - i_pow(-i64::from(n)) * plus;
    let prefactor = Complex64::new(0.0, -(length / PI).sqrt()) * Complex64::from_polar(1.0, -0.5 * pl);
    prefactor * bracket
}

/// Box momentum orbital written as `a(p) (1 - (-1)^n e^{-ipL})` with the
/// plane-wave factor `e^{-ipL}` supplied by the caller.
///
/// With `phase = e^{-ipL}` this equals [`box_momentum`]. The rational envelope
/// `a(p)` has poles at `pL = ±nπ`, so callers must stay away from them; the
/// quadrature tail rules only evaluate it far outside the main lobes.
pub fn box_momentum_with_phase(n: u32, length: f64, p: f64, phase: Complex64) -> Amplitude {
    let n_pi = f64::from(n) * PI;
    let pl = p * length;
    let envelope = -(length / PI).sqrt() * n_pi / (pl * pl - n_pi * n_pi);
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    envelope * (Complex64::new(1.0, 0.0) - parity * phase)
}

/// Normalised Hermite function `h_n(y) = H_n(y) e^{-y²/2} / sqrt(2^n n! sqrt(π))`.
///
/// Runs the recurrence on the function values themselves, which stays finite
/// where `H_n` alone would overflow.
pub fn hermite_function(n: u32, y: f64) -> f64 {
    let h0 = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * y * h0;
    for k in 1..n {
        let k = f64::from(k);
        let next = (2.0 / (k + 1.0)).sqrt() * y * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Oscillator orbital in either space.
///
/// The momentum orbital is the position orbital with `omega -> 1/omega`, times
/// the Fourier phase `(-i)^n`.
pub fn oscillator(n: u32, omega: f64, coord: f64, space: Space) -> Amplitude {
    match space {
        Space::Position => {
            Amplitude::new(omega.powf(0.25) * hermite_function(n, omega.sqrt() * coord), 0.0)
        }
        Space::Momentum => {
            i_pow(-i64::from(n)) * (omega.powf(-0.25) * hermite_function(n, coord / omega.sqrt()))
        }
    }
}

/// Classical polynomial `H_n(y)` by the physicists' recurrence. Test helper
/// and reference for [`hermite_function`] at small `n`.
pub fn hermite_polynomial(n: u32, y: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * y;
    for k in 1..n {
        let next = 2.0 * y * cur - 2.0 * f64::from(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}
