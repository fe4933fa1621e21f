//! Potentials, linear statistics and gas parameters.
//!
//! The eigenvalue gas has energy
//! `E = -Σ_{i<j} log|λi - λj| + N Σ_i W(λi)` with `W = V + s·f`, optionally
//! confined between hard walls. Everything here is an immutable value type.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Real polynomial stored by ascending powers: `coeffs[k]` multiplies `λ^k`.
///
/// Trailing zero coefficients are trimmed, so the last stored coefficient is
/// nonzero unless the polynomial is identically zero (empty storage).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `c·λ^k`
    pub fn monomial(k: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Polynomial::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect::<Vec<_>>(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Polynomial::new(out)
    }

    /// `self + s·other`, coefficient-wise.
    pub fn axpy(&self, s: f64, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs: Vec<f64> = (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(0.0);
                let b = other.coeffs.get(k).copied().unwrap_or(0.0);
                a + s * b
            })
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect::<Vec<_>>())
    }

    /// The polynomial `y ↦ p(shift + scale·y)`.
    pub fn compose_affine(&self, shift: f64, scale: f64) -> Polynomial {
        let mut acc: Vec<f64> = Vec::with_capacity(self.coeffs.len());
        for &c in self.coeffs.iter().rev() {
            // acc ← acc·(shift + scale·y) + c
            let mut next = vec![0.0; acc.len() + 1];
            for (k, &a) in acc.iter().enumerate() {
                next[k] += a * shift;
                next[k + 1] += a * scale;
            }
            next[0] += c;
            acc = next;
        }
        Polynomial::new(acc)
    }

    pub fn mul_poly(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Polynomial::new(coeffs)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scale(rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}·λ")?,
                _ => write!(f, "{c}·λ^{k}")?,
            }
        }
        Ok(())
    }
}

/// One end of the confinement region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(x) => Some(x),
            Bound::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }
}

/// Hard walls `[lower, upper]`; either side may be absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walls {
    lower: Bound,
    upper: Bound,
}

impl Walls {
    pub fn new(lower: Bound, upper: Bound) -> Result<Self> {
        for b in [lower, upper] {
            if let Bound::Finite(x) = b {
                if !x.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "wall position {x} must be a finite number"
                    )));
                }
            }
        }
        if let (Bound::Finite(a), Bound::Finite(b)) = (lower, upper) {
            if a >= b {
                return Err(Error::InvalidParameter(format!(
                    "walls must satisfy lower < upper, got [{a}, {b}]"
                )));
            }
        }
        Ok(Walls { lower, upper })
    }

    pub fn unbounded() -> Self {
        Walls {
            lower: Bound::Infinite,
            upper: Bound::Infinite,
        }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Walls::new(Bound::Finite(a), Bound::Finite(b))
    }

    pub fn lower(&self) -> Bound {
        self.lower
    }

    pub fn upper(&self) -> Bound {
        self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        !self.lower.is_finite() && !self.upper.is_finite()
    }

    /// Strictly inside the walls.
    pub fn contains(&self, x: f64) -> bool {
        let above = self.lower.finite().is_none_or(|a| x > a);
        let below = self.upper.finite().is_none_or(|b| x < b);
        above && below
    }
}

impl fmt::Display for Walls {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lower {
            Bound::Finite(a) => write!(f, "[{a}, ")?,
            Bound::Infinite => write!(f, "(-inf, ")?,
        }
        match self.upper {
            Bound::Finite(b) => write!(f, "{b}]"),
            Bound::Infinite => write!(f, "+inf)"),
        }
    }
}

/// Reason a polynomial fails to confine the gas on the given walls, if any.
///
/// Towards an open side the potential must grow to `+∞`, which for a
/// polynomial beats the logarithmic repulsion.
pub fn confinement_defect(v: &Polynomial, walls: &Walls) -> Option<String> {
    if walls.lower.is_finite() && walls.upper.is_finite() {
        return None;
    }
    let Some(deg) = v.degree().filter(|&d| d >= 1) else {
        return Some(format!(
            "potential {v} is constant; it cannot confine the gas on {walls}"
        ));
    };
    let lead = v.leading_coefficient();
    if !walls.upper.is_finite() && lead <= 0.0 {
        return Some(format!(
            "leading coefficient {lead} of λ^{deg} is not positive, so the potential does not grow as λ → +∞"
        ));
    }
    if !walls.lower.is_finite() {
        let sign = if deg % 2 == 0 { lead } else { -lead };
        if sign <= 0.0 {
            return Some(if deg % 2 == 1 {
                format!("odd degree {deg}: the potential does not grow as λ → -∞")
            } else {
                format!(
                    "leading coefficient {lead} of λ^{deg} is not positive, so the potential does not grow as λ → -∞"
                )
            });
        }
    }
    None
}

/// Confining potential `V` together with its walls.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfinementPotential {
    v: Polynomial,
    walls: Walls,
}

impl ConfinementPotential {
    pub fn new(v: Polynomial, walls: Walls) -> Result<Self> {
        if let Some(reason) = confinement_defect(&v, &walls) {
            return Err(Error::IllConfined { reason });
        }
        Ok(ConfinementPotential { v, walls })
    }

    pub(crate) fn new_unchecked(v: Polynomial, walls: Walls) -> Self {
        ConfinementPotential { v, walls }
    }

    /// `V ≡ 0` between two finite walls.
    pub fn hard_box(a: f64, b: f64) -> Result<Self> {
        ConfinementPotential::new(Polynomial::zero(), Walls::interval(a, b)?)
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.v
    }

    pub fn walls(&self) -> &Walls {
        &self.walls
    }
}

/// `F = N⁻¹ Σ f(λi)` for a nonconstant polynomial `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStatistic {
    f: Polynomial,
}

impl LinearStatistic {
    pub fn new(f: Polynomial) -> Result<Self> {
        match f.degree() {
            Some(d) if d >= 1 => Ok(LinearStatistic { f }),
            _ => Err(Error::InvalidParameter(format!(
                "linear statistic must have degree >= 1, got {f}"
            ))),
        }
    }

    /// The statistic `λ^k`.
    pub fn power(k: usize) -> Result<Self> {
        LinearStatistic::new(Polynomial::monomial(k, 1.0))
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.f
    }

    /// `N⁻¹ Σ f(λi)`.
    pub fn evaluate(&self, eigenvalues: &[f64]) -> f64 {
        let sum: f64 = eigenvalues.iter().map(|&x| self.f.eval(x)).sum();
        sum / eigenvalues.len() as f64
    }
}

/// Number of particles and inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    n_particles: usize,
    beta: f64,
}

impl GasParameters {
    pub const DEFAULT_BETA: f64 = 2.0;

    pub fn new(n_particles: usize, beta: f64) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(GasParameters { n_particles, beta })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Large-deviation speed `βN²`.
    pub fn speed(&self) -> f64 {
        self.beta * (self.n_particles as f64).powi(2)
    }
}

/// Tilted potential `W_s = V + s·f` on the same walls.
pub fn tilt(v: &ConfinementPotential, f: &LinearStatistic, s: f64) -> Result<ConfinementPotential> {
    if s == 0.0 {
        return Ok(v.clone());
    }
    ConfinementPotential::new(v.v.axpy(s, &f.f), v.walls)
}

/// `W_s = V + s·f` without the confinement check, for analytic continuation
/// past the point where the tilt stops confining the gas.
pub fn tilt_polynomial(v: &ConfinementPotential, f: &LinearStatistic, s: f64) -> Polynomial {
    v.v.axpy(s, &f.f)
}
