//! One-cut equilibrium measures of a polynomial potential with optional
//! hard walls.
//!
//! On the support `[a, b]`, write `c = (a+b)/2`, `r = (b-a)/2` and
//! `y = (λ - c)/r`. Expanding `r·W'(c + r·y) = Σ u_j U_j(y)` in Chebyshev
//! polynomials of the second kind, the density with unit mass solving the
//! saddle-point equation is
//!
//! ```text
//! ρ(λ) = R(y) / (π·sqrt((b-λ)(λ-a))),   R(y) = 1 - Σ u_j T_{j+1}(y).
//! ```
//!
//! A soft edge is an endpoint where `R` vanishes; a hard edge sits on a wall.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{confinement_defect, ConfinementPotential, LinearStatistic, Polynomial, Walls};
use crate::numerics::{
    bisect, cheb_t_to_monomial, chebyshev_nodes, clenshaw_t, monomial_to_cheb_u,
};

const NONNEG_SAMPLES: usize = 512;
const NONNEG_TOL: f64 = -1e-12;
const HARD_EDGE_TOL: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeType {
    Soft,
    Hard,
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeType::Soft => "soft",
            EdgeType::Hard => "hard",
        })
    }
}

/// Edge types of the lower and upper endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    SoftSoft,
    HardSoft,
    SoftHard,
    HardHard,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::SoftSoft,
        Regime::HardSoft,
        Regime::SoftHard,
        Regime::HardHard,
    ];

    pub fn from_edges(a: EdgeType, b: EdgeType) -> Self {
        match (a, b) {
            (EdgeType::Soft, EdgeType::Soft) => Regime::SoftSoft,
            (EdgeType::Hard, EdgeType::Soft) => Regime::HardSoft,
            (EdgeType::Soft, EdgeType::Hard) => Regime::SoftHard,
            (EdgeType::Hard, EdgeType::Hard) => Regime::HardHard,
        }
    }

    pub fn edge_a(self) -> EdgeType {
        match self {
            Regime::SoftSoft | Regime::SoftHard => EdgeType::Soft,
            Regime::HardSoft | Regime::HardHard => EdgeType::Hard,
        }
    }

    pub fn edge_b(self) -> EdgeType {
        match self {
            Regime::SoftSoft | Regime::HardSoft => EdgeType::Soft,
            Regime::SoftHard | Regime::HardHard => EdgeType::Hard,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.edge_a(), self.edge_b())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub a: f64,
    pub b: f64,
    pub edge_type_a: EdgeType,
    pub edge_type_b: EdgeType,
}

impl SupportInterval {
    pub fn regime(&self) -> Regime {
        Regime::from_edges(self.edge_type_a, self.edge_type_b)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// Density value; at a hard edge the density diverges as
/// `coefficient·|λ - edge|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityValue {
    Finite(f64),
    EdgeSingular { coefficient: f64, exponent: f64 },
}

impl DensityValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            DensityValue::Finite(v) => Some(v),
            DensityValue::EdgeSingular { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    support: SupportInterval,
    /// Chebyshev-T coefficients of R in the scaled variable y.
    cheb: Vec<f64>,
    numerator: Polynomial,
    source_potential: ConfinementPotential,
    metastable: bool,
}

impl EquilibriumMeasure {
    pub fn support(&self) -> &SupportInterval {
        &self.support
    }

    pub fn regime(&self) -> Regime {
        self.support.regime()
    }

    /// `R` as a polynomial in λ.
    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    /// `R` in the Chebyshev-T basis of `y = (λ - c)/r`; the zeroth
    /// coefficient is 1.
    pub fn chebyshev_coefficients(&self) -> &[f64] {
        &self.cheb
    }

    /// The tilted potential this measure was solved for.
    pub fn source_potential(&self) -> &ConfinementPotential {
        &self.source_potential
    }

    /// True when the measure was obtained by continuation past the point
    /// where the potential confines the gas.
    pub fn is_metastable(&self) -> bool {
        self.metastable
    }

    fn scaled(&self, lambda: f64) -> f64 {
        (lambda - self.support.center()) / self.support.half_width()
    }

    /// `R` at scaled coordinate `y`.
    pub fn numerator_scaled(&self, y: f64) -> f64 {
        clenshaw_t(&self.cheb, y)
    }

    /// Raw density; `+∞` exactly at a hard edge with positive numerator.
    pub fn density(&self, lambda: f64) -> f64 {
        match self.density_at(lambda) {
            DensityValue::Finite(v) => v,
            DensityValue::EdgeSingular { coefficient, .. } => {
                if coefficient == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn density_at(&self, lambda: f64) -> DensityValue {
        let s = &self.support;
        if lambda < s.a || lambda > s.b {
            return DensityValue::Finite(0.0);
        }
        let at_a = lambda == s.a;
        let at_b = lambda == s.b;
        if at_a || at_b {
            let (edge_type, y) = if at_a {
                (s.edge_type_a, -1.0)
            } else {
                (s.edge_type_b, 1.0)
            };
            let r_edge = self.numerator_scaled(y);
            return match edge_type {
                EdgeType::Hard => DensityValue::EdgeSingular {
                    coefficient: r_edge / (PI * (s.b - s.a).sqrt()),
                    exponent: -0.5,
                },
                EdgeType::Soft => DensityValue::Finite(0.0),
            };
        }
        let y = self.scaled(lambda);
        let denom = PI * ((s.b - lambda) * (lambda - s.a)).sqrt();
        DensityValue::Finite(self.numerator_scaled(y) / denom)
    }

    /// `∫ p dρ`, exact for polynomials by Gauss–Chebyshev quadrature.
    pub fn moment(&self, p: &Polynomial) -> f64 {
        let deg_p = p.degree().unwrap_or(0);
        let deg_r = self.cheb.len().saturating_sub(1);
        let n = ((deg_p + deg_r) / 2 + 2).max(8);
        let (c, r) = (self.support.center(), self.support.half_width());
        let sum: f64 = chebyshev_nodes(n)
            .into_iter()
            .map(|y| p.eval(c + r * y) * self.numerator_scaled(y))
            .sum();
        sum / n as f64
    }

    /// `F[ρ] = ∫ f dρ`.
    pub fn statistic_value(&self, f: &LinearStatistic) -> f64 {
        self.moment(f.polynomial())
    }

    /// Total mass by Gauss–Chebyshev quadrature.
    pub fn normalization(&self) -> f64 {
        self.moment(&Polynomial::constant(1.0))
    }

    /// Logarithmic potential `∫ log|λ - t| dρ(t)`.
    pub fn log_potential(&self, lambda: f64) -> f64 {
        let r = self.support.half_width();
        let x = self.scaled(lambda);
        if x.abs() <= 1.0 {
            let mut b = vec![0.0; self.cheb.len()];
            for (n, &an) in self.cheb.iter().enumerate().skip(1) {
                b[n] = an / n as f64;
            }
            r.ln() - LN_2 - clenshaw_t(&b, x)
        } else {
            let w = x + x.signum() * (x * x - 1.0).sqrt();
            let winv = 1.0 / w;
            let mut pow = 1.0;
            let mut tail = 0.0;
            for (n, &an) in self.cheb.iter().enumerate().skip(1) {
                pow *= winv;
                tail += an * pow / n as f64;
            }
            r.ln() + (0.5 * w.abs()).ln() - tail
        }
    }

    /// Effective field `∫ log|λ - t| dρ(t) - W(λ)`; constant on the support.
    pub fn effective_field(&self, lambda: f64) -> f64 {
        self.log_potential(lambda) - self.source_potential.polynomial().eval(lambda)
    }

    /// `-(1/2)∬ log|λ - λ'| dρ dρ'`.
    pub fn interaction_energy(&self) -> f64 {
        let r = self.support.half_width();
        let tail: f64 = self
            .cheb
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &an)| an * an / (2.0 * n as f64))
            .sum();
        -0.5 * (r.ln() - LN_2 - tail)
    }

    /// Mean-field energy `-(1/2)∬ log|λ - λ'| dρ dρ' + ∫ v dρ` for a
    /// caller-chosen one-body potential `v`.
    pub fn mean_field_energy(&self, v: &Polynomial) -> f64 {
        self.interaction_energy() + self.moment(v)
    }

    /// Sample standard deviation of the effective field over `n` interior
    /// Chebyshev points of the support.
    pub fn euler_lagrange_residual(&self, n: usize) -> f64 {
        let (c, r) = (self.support.center(), self.support.half_width());
        let vals: Vec<f64> = chebyshev_nodes(n)
            .into_iter()
            .map(|y| self.effective_field(c + r * y))
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        var.sqrt()
    }

    /// Smallest density value at `n` Chebyshev points of the support.
    pub fn min_density_sample(&self, n: usize) -> f64 {
        let r = self.support.half_width();
        chebyshev_nodes(n)
            .into_iter()
            .map(|y| self.numerator_scaled(y) / (PI * r * (1.0 - y * y).sqrt()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, lambda: f64) -> f64 {
        let x = self.scaled(lambda);
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        self.cdf_theta((-x).acos())
    }

    fn cdf_theta(&self, theta: f64) -> f64 {
        // λ = c - r cos θ
        let tail: f64 = self
            .cheb
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &ak)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * ak * (k as f64 * theta).sin() / k as f64
            })
            .sum();
        ((theta + tail) / PI).clamp(0.0, 1.0)
    }

    /// Inverse CDF for `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let (c, r) = (self.support.center(), self.support.half_width());
        let p = p.clamp(0.0, 1.0);
        let (lo, hi) = bisect(|th| self.cdf_theta(th) - p, 0.0, PI, -p);
        let theta = 0.5 * (lo + hi);
        (c - r * theta.cos()).clamp(self.support.a, self.support.b)
    }
}

/// Equilibrium measure of a confining potential.
pub fn solve_one_cut(w: &ConfinementPotential) -> Result<EquilibriumMeasure> {
    solve_one_cut_seeded(w, None)
}

/// As [`solve_one_cut`], starting from the solution at a nearby tilt.
pub fn solve_one_cut_seeded(
    w: &ConfinementPotential,
    seed: Option<&EquilibriumMeasure>,
) -> Result<EquilibriumMeasure> {
    if let Some(reason) = confinement_defect(w.polynomial(), w.walls()) {
        return Err(Error::IllConfined { reason });
    }
    Solver::new(w.polynomial().clone(), *w.walls(), true).solve(seed)
}

/// Analytic continuation of the one-cut solution to potentials that no
/// longer confine the gas (a metastable state held by the local well).
///
/// The support-edge equations and nonnegativity are still enforced; the
/// global inequality off the support is not.
pub fn solve_continued(
    w: &Polynomial,
    walls: &Walls,
    seed: Option<&EquilibriumMeasure>,
) -> Result<EquilibriumMeasure> {
    if walls.is_unbounded() && matches!(w.degree(), None | Some(0)) {
        return Err(Error::IllConfined {
            reason: format!("potential {w} is constant"),
        });
    }
    Solver::new(w.clone(), *walls, false).solve(seed)
}

enum Attempt {
    NotFound,
    Rejected(String),
    Found(EquilibriumMeasure),
}

struct Solver {
    w: Polynomial,
    wp: Polynomial,
    wpp: Polynomial,
    walls: Walls,
    strict: bool,
    length: f64,
}

impl Solver {
    fn new(w: Polynomial, walls: Walls, strict: bool) -> Self {
        let wp = w.derivative();
        let wpp = wp.derivative();
        let mut length: f64 = 1.0;
        if let Some(d) = wp.degree().filter(|&d| d >= 1) {
            let lead = wp.leading_coefficient();
            let cauchy = wp.coeffs()[..d]
                .iter()
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max);
            length = length.max(1.0 + cauchy);
        }
        if let (Some(a), Some(b)) = (walls.lower().finite(), walls.upper().finite()) {
            length = length.max(b - a);
        }
        Solver {
            w,
            wp,
            wpp,
            walls,
            strict,
            length,
        }
    }

    fn u(&self, c: f64, r: f64) -> Vec<f64> {
        monomial_to_cheb_u(self.wp.compose_affine(c, r).scale(r).coeffs())
    }

    /// (Σ_even u_j, Σ_odd u_j)
    fn sums(&self, c: f64, r: f64) -> (f64, f64) {
        split_sums(&self.u(c, r))
    }

    fn jacobian(&self, c: f64, r: f64) -> [[f64; 2]; 2] {
        let wp = self.wp.compose_affine(c, r);
        let wpp = self.wpp.compose_affine(c, r);
        let dc = monomial_to_cheb_u(wpp.scale(r).coeffs());
        let mut y_wpp = vec![0.0];
        y_wpp.extend_from_slice(wpp.coeffs());
        let dr_poly = wp.axpy(r, &Polynomial::new(y_wpp));
        let dr = monomial_to_cheb_u(dr_poly.coeffs());
        let (dce, dco) = split_sums(&dc);
        let (dre, dro) = split_sums(&dr);
        [[dce, dre], [dco, dro]]
    }

    fn solve(&self, seed: Option<&EquilibriumMeasure>) -> Result<EquilibriumMeasure> {
        let mut order: Vec<Regime> = Vec::with_capacity(5);
        if let Some(s) = seed {
            order.push(s.regime());
        }
        order.extend(Regime::ALL);
        let mut rejections = Vec::new();
        let mut tried = Vec::new();
        for regime in order {
            if tried.contains(&regime) {
                continue;
            }
            tried.push(regime);
            match self.attempt(regime, seed) {
                Attempt::Found(m) => return Ok(m),
                Attempt::Rejected(why) => rejections.push(format!("{regime}: {why}")),
                Attempt::NotFound => {}
            }
        }
        if rejections.is_empty() {
            Err(Error::NoConvergence {
                reason: format!(
                    "no support edges found for W = {} on {}",
                    self.w, self.walls
                ),
            })
        } else {
            Err(Error::NoOneCut {
                reason: rejections.join("; "),
            })
        }
    }

    fn attempt(&self, regime: Regime, seed: Option<&EquilibriumMeasure>) -> Attempt {
        let lower = self.walls.lower().finite();
        let upper = self.walls.upper().finite();
        let edges = match regime {
            Regime::SoftSoft => self.soft_soft(seed),
            Regime::HardSoft => match lower {
                Some(a) => self.one_soft_edge(a, true),
                None => return Attempt::NotFound,
            },
            Regime::SoftHard => match upper {
                Some(b) => self.one_soft_edge(b, false),
                None => return Attempt::NotFound,
            },
            Regime::HardHard => match (lower, upper) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => return Attempt::NotFound,
            },
        };
        match edges {
            None => Attempt::NotFound,
            Some((a, b)) => self.validate(regime, a, b),
        }
    }

    fn soft_soft(&self, seed: Option<&EquilibriumMeasure>) -> Option<(f64, f64)> {
        if let Some(s) = seed.filter(|s| s.regime() == Regime::SoftSoft) {
            let sup = s.support();
            if let Some(cr) = self.newton(sup.center(), sup.half_width()) {
                return Some((cr.0 - cr.1, cr.0 + cr.1));
            }
        }
        let c0 = self.lowest_well();
        if let Some(r0) = self.first_r_crossing(c0) {
            if let Some(cr) = self.newton(c0, r0) {
                return Some((cr.0 - cr.1, cr.0 + cr.1));
            }
        }
        self.nested_bisection(c0).map(|(c, r)| (c - r, c + r))
    }

    fn newton(&self, mut c: f64, mut r: f64) -> Option<(f64, f64)> {
        let resid = |c: f64, r: f64| {
            let (e, o) = self.sums(c, r);
            (e, o - 1.0)
        };
        let (mut f1, mut f2) = resid(c, r);
        let mut norm = f1.abs().max(f2.abs());
        for _ in 0..100 {
            let scale = 1.0 + self.u(c, r).iter().map(|v| v.abs()).sum::<f64>();
            if norm <= 4e-15 * scale {
                return Some((c, r));
            }
            let j = self.jacobian(c, r);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dc = (f1 * j[1][1] - f2 * j[0][1]) / det;
            let dr = (j[0][0] * f2 - j[1][0] * f1) / det;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let (cn, rn) = (c - t * dc, r - t * dr);
                if rn > 0.0 {
                    let (g1, g2) = resid(cn, rn);
                    let gn = g1.abs().max(g2.abs());
                    if gn < norm || (gn <= norm && t == 1.0) {
                        c = cn;
                        r = rn;
                        f1 = g1;
                        f2 = g2;
                        norm = gn;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                return if norm <= 1e-12 * scale {
                    Some((c, r))
                } else {
                    None
                };
            }
        }
        let scale = 1.0 + self.u(c, r).iter().map(|v| v.abs()).sum::<f64>();
        (norm <= 1e-12 * scale).then_some((c, r))
    }

    fn grid_range(&self) -> (f64, f64) {
        let lo = self.walls.lower().finite().unwrap_or(-self.length);
        let hi = self.walls.upper().finite().unwrap_or(self.length);
        (lo, hi)
    }

    /// Deepest interior local minimum of W on a grid (global grid minimum if
    /// there is none).
    fn lowest_well(&self) -> f64 {
        let (lo, hi) = self.grid_range();
        let n = 2001;
        let xs: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let vals: Vec<f64> = xs.iter().map(|&x| self.w.eval(x)).collect();
        let mut best: Option<usize> = None;
        for i in 1..n - 1 {
            let is_min = vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1];
            if is_min && best.is_none_or(|j| vals[i] < vals[j]) {
                best = Some(i);
            }
        }
        let idx = best.unwrap_or_else(|| {
            (0..n)
                .min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
                .unwrap_or(0)
        });
        xs[idx]
    }

    fn r_scan(&self, r_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut r = 1e-9 * self.length;
        while r < r_max {
            out.push(r);
            r *= 1.08;
        }
        out.push(r_max);
        out
    }

    /// Smallest r with Σ_odd u(c, r) ≥ 1.
    fn first_r_crossing(&self, c: f64) -> Option<f64> {
        let r_max = 1e6 * self.length;
        let g = |r: f64| self.sums(c, r).1 - 1.0;
        let mut prev: Option<(f64, f64)> = None;
        for r in self.r_scan(r_max) {
            let v = g(r);
            if v >= 0.0 {
                return Some(match prev {
                    Some((rp, vp)) => {
                        let (lo, hi) = bisect(g, rp, r, vp);
                        0.5 * (lo + hi)
                    }
                    None => r,
                });
            }
            prev = Some((r, v));
        }
        None
    }

    /// Root of Σ_even u(c, r) = 0 in c near `guess`.
    fn center_for(&self, r: f64, guess: f64) -> Option<f64> {
        let g = |c: f64| self.sums(c, r).0;
        let g0 = g(guess);
        if g0 == 0.0 {
            return Some(guess);
        }
        let mut step = 1e-3 * r.max(1e-6 * self.length);
        for _ in 0..80 {
            for x in [guess - step, guess + step] {
                let v = g(x);
                if v == 0.0 {
                    return Some(x);
                }
                if (v < 0.0) != (g0 < 0.0) {
                    let (lo, hi) = bisect(g, guess, x, g0);
                    return Some(0.5 * (lo + hi));
                }
            }
            step *= 2.0;
            if step > 1e3 * self.length {
                break;
            }
        }
        None
    }

    fn nested_bisection(&self, c0: f64) -> Option<(f64, f64)> {
        let mut c_guess = c0;
        let mut prev: Option<(f64, f64, f64)> = None;
        for r in self.r_scan(1e6 * self.length) {
            let Some(c) = self.center_for(r, c_guess) else {
                continue;
            };
            c_guess = c;
            let v = self.sums(c, r).1 - 1.0;
            if v >= 0.0 {
                let (rp, cp, vp) = prev?;
                let cell = std::cell::Cell::new(cp);
                let h = |rr: f64| match self.center_for(rr, cell.get()) {
                    Some(cc) => {
                        cell.set(cc);
                        self.sums(cc, rr).1 - 1.0
                    }
                    None => f64::NAN,
                };
                let (lo, hi) = bisect(h, rp, r, vp);
                let rr = 0.5 * (lo + hi);
                let cc = self.center_for(rr, cell.get())?;
                return Some((cc, rr));
            }
            prev = Some((r, c, v));
        }
        None
    }

    /// One hard edge pinned at `wall`; the other edge solves R = 0 there.
    fn one_soft_edge(&self, wall: f64, pinned_lower: bool) -> Option<(f64, f64)> {
        let r_max = match (
            pinned_lower,
            self.walls.upper().finite(),
            self.walls.lower().finite(),
        ) {
            (true, Some(b), _) => 0.5 * (b - wall),
            (false, _, Some(a)) => 0.5 * (wall - a),
            _ => 1e6 * self.length,
        };
        // R at the free edge
        let g = |r: f64| {
            if pinned_lower {
                let u = self.u(wall + r, r);
                1.0 - u.iter().sum::<f64>()
            } else {
                let u = self.u(wall - r, r);
                let (e, o) = split_sums(&u);
                1.0 + e - o
            }
        };
        let mut prev: Option<(f64, f64)> = None;
        for r in self.r_scan(r_max) {
            let v = g(r);
            if v <= 0.0 {
                let (rp, vp) = prev?;
                let (lo, hi) = bisect(g, rp, r, vp);
                let rr = 0.5 * (lo + hi);
                return Some(if pinned_lower {
                    (wall, wall + 2.0 * rr)
                } else {
                    (wall - 2.0 * rr, wall)
                });
            }
            prev = Some((r, v));
        }
        None
    }

    fn validate(&self, regime: Regime, a: f64, b: f64) -> Attempt {
        let lower = self.walls.lower().finite();
        let upper = self.walls.upper().finite();
        let tol = |x: f64| 1e-12 * (1.0 + x.abs());
        let mut a = a;
        let mut b = b;
        if let Some(lw) = lower {
            if a < lw - tol(lw) {
                return Attempt::Rejected(format!("lower edge {a} lies below the wall {lw}"));
            }
            a = a.max(lw);
        }
        if let Some(uw) = upper {
            if b > uw + tol(uw) {
                return Attempt::Rejected(format!("upper edge {b} lies above the wall {uw}"));
            }
            b = b.min(uw);
        }
        if !(b > a) {
            return Attempt::Rejected(format!("degenerate support [{a}, {b}]"));
        }
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let u = self.u(c, r);
        let mut cheb = Vec::with_capacity(u.len() + 1);
        cheb.push(1.0);
        cheb.extend(u.iter().map(|v| -v));
        let numerator = Polynomial::new(cheb_t_to_monomial(&cheb)).compose_affine(-c / r, 1.0 / r);
        let measure = EquilibriumMeasure {
            support: SupportInterval {
                a,
                b,
                edge_type_a: regime.edge_a(),
                edge_type_b: regime.edge_b(),
            },
            cheb,
            numerator,
            source_potential: ConfinementPotential::new_unchecked(self.w.clone(), self.walls),
            metastable: confinement_defect(&self.w, &self.walls).is_some(),
        };
        let ra = measure.numerator_scaled(-1.0);
        let rb = measure.numerator_scaled(1.0);
        if regime.edge_a() == EdgeType::Hard && ra < HARD_EDGE_TOL {
            return Attempt::Rejected(format!("negative density at hard edge {a} (R = {ra:e})"));
        }
        if regime.edge_b() == EdgeType::Hard && rb < HARD_EDGE_TOL {
            return Attempt::Rejected(format!("negative density at hard edge {b} (R = {rb:e})"));
        }
        let min_rho = measure.min_density_sample(NONNEG_SAMPLES);
        if min_rho < NONNEG_TOL {
            return Attempt::Rejected(format!(
                "density dips to {min_rho:e} inside the support (multi-cut regime)"
            ));
        }
        if self.strict {
            if let Some(why) = self.outside_violation(&measure) {
                return Attempt::Rejected(why);
            }
        }
        Attempt::Found(measure)
    }

    /// The effective field must not exceed its support value off the
    /// support on the side of a soft edge.
    fn outside_violation(&self, m: &EquilibriumMeasure) -> Option<String> {
        let sup = *m.support();
        let r = sup.half_width();
        let level = m.effective_field(sup.center());
        let tol = 1e-8 * (1.0 + level.abs());
        let sides = [
            (sup.edge_type_b, sup.b, 1.0, self.walls.upper().finite()),
            (sup.edge_type_a, sup.a, -1.0, self.walls.lower().finite()),
        ];
        for (edge_type, edge, dir, wall) in sides {
            if edge_type != EdgeType::Soft {
                continue;
            }
            let room = wall.map(|w| (w - edge) * dir);
            let mut d = 1e-3 * r;
            for _ in 0..600 {
                let d_eff = match room {
                    Some(room) if d >= room => room,
                    _ => d,
                };
                if d_eff <= 0.0 {
                    break;
                }
                let x = edge + dir * d_eff;
                let phi = m.effective_field(x);
                let w_here = self.w.eval(x).abs();
                if phi > level + tol + 1e-13 * w_here {
                    return Some(format!(
                        "effective field exceeds its support value at λ = {x} (multi-cut regime)"
                    ));
                }
                if room.is_some_and(|room| d >= room) {
                    break;
                }
                if room.is_none() && phi < level - 50.0 && d > 4.0 * r {
                    break;
                }
                d *= 1.1;
            }
        }
        None
    }
}

fn split_sums(u: &[f64]) -> (f64, f64) {
    let mut even = 0.0;
    let mut odd = 0.0;
    for (j, &v) in u.iter().enumerate() {
        if j % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    (even, odd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tilt, Bound};
    use approx::assert_relative_eq;

    fn box_gas(s: f64) -> ConfinementPotential {
        let v = ConfinementPotential::hard_box(-1.0, 1.0).unwrap();
        tilt(&v, &LinearStatistic::power(1).unwrap(), s).unwrap()
    }

    fn quartic(s: f64) -> ConfinementPotential {
        ConfinementPotential::new(
            Polynomial::new(vec![0.0, 0.0, 0.25, 0.0, s]),
            Walls::unbounded(),
        )
        .unwrap()
    }

    /// ∫ log|λ - t| dρ(t) by substitution t = c + r cos θ and a fine
    /// midpoint rule; independent of the closed form.
    fn log_potential_oracle(m: &EquilibriumMeasure, lambda: f64) -> f64 {
        let sup = m.support();
        let (c, r) = (sup.center(), sup.half_width());
        let n = 200_000;
        let mut total = 0.0;
        for k in 0..n {
            let th = PI * (k as f64 + 0.5) / n as f64;
            let y = th.cos();
            let t = c + r * y;
            total += (lambda - t).abs().ln() * m.numerator_scaled(y);
        }
        total / n as f64
    }

    #[test]
    fn arcsine_law_at_zero_tilt() {
        let m = solve_one_cut(&box_gas(0.0)).unwrap();
        assert_eq!(m.regime(), Regime::HardHard);
        assert_eq!((m.support().a, m.support().b), (-1.0, 1.0));
        assert_relative_eq!(m.density(0.0), 1.0 / PI, max_relative = 1e-14);
        for &x in &[-0.9, -0.3, 0.5] {
            let exact = 1.0 / (PI * (1.0f64 - x * x).sqrt());
            assert_relative_eq!(m.density(x), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn box_gas_regimes_follow_closed_form() {
        let m = solve_one_cut(&box_gas(2.0)).unwrap();
        assert_eq!(m.regime(), Regime::HardSoft);
        assert_relative_eq!(m.support().a, -1.0);
        assert!(m.support().b.abs() < 1e-14);
        assert_relative_eq!(
            m.statistic_value(&LinearStatistic::power(1).unwrap()),
            -0.75,
            epsilon = 1e-14
        );
        for s in [-2.5, -1.5, -0.5, 0.3, 0.99, 1.2, 3.0] {
            let m = solve_one_cut(&box_gas(s)).unwrap();
            let (reg, a, b) = if s > 1.0 {
                (Regime::HardSoft, -1.0, -1.0 + 2.0 / s)
            } else if s < -1.0 {
                (Regime::SoftHard, 1.0 + 2.0 / s, 1.0)
            } else {
                (Regime::HardHard, -1.0, 1.0)
            };
            assert_eq!(m.regime(), reg, "s = {s}");
            assert!((m.support().a - a).abs() < 1e-12);
            assert!((m.support().b - b).abs() < 1e-12);
        }
    }

    #[test]
    fn semicircle() {
        let m = solve_one_cut(&quartic(0.0)).unwrap();
        assert_eq!(m.regime(), Regime::SoftSoft);
        assert!((m.support().a + 2.0).abs() < 1e-12);
        assert!((m.support().b - 2.0).abs() < 1e-12);
        assert_relative_eq!(m.density(0.0), 1.0 / PI, max_relative = 1e-12);
        for &x in &[-1.9, -0.4, 1.1] {
            let exact = (4.0f64 - x * x).sqrt() / (2.0 * PI);
            assert_relative_eq!(m.density(x), exact, max_relative = 1e-11);
        }
        assert_relative_eq!(
            m.interaction_energy() + m.moment(&Polynomial::new(vec![0.0, 0.0, 0.25])),
            0.375,
            epsilon = 1e-13
        );
    }

    #[test]
    fn quartic_density_and_statistic() {
        // ρ(λ) = (1/π)(1/2 + 8sL + 4sλ²)·sqrt(4L - λ²)
        for &s in &[1.0 / 32.0, 0.2, 1.0] {
            let l = ((1.0f64 + 96.0 * s).sqrt() - 1.0) / (48.0 * s);
            let m = solve_one_cut(&quartic(s)).unwrap();
            let b = 2.0 * l.sqrt();
            assert!((m.support().b - b).abs() < 1e-12);
            for &x in &[0.0, 0.3 * b, -0.8 * b] {
                let exact = (0.5 + 8.0 * s * l + 4.0 * s * x * x) * (b * b - x * x).sqrt() / PI;
                assert!((m.density(x) - exact).abs() < 1e-10, "s={s} x={x}");
            }
            let x4 = m.statistic_value(&LinearStatistic::power(4).unwrap());
            assert!((x4 - l * l * (3.0 - l)).abs() < 1e-13);
        }
        let m = solve_one_cut(&quartic(1.0 / 32.0)).unwrap();
        assert_relative_eq!(
            m.statistic_value(&LinearStatistic::power(4).unwrap()),
            28.0 / 27.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn density_outside_support_is_zero_and_hard_edge_is_singular() {
        let m = solve_one_cut(&box_gas(2.0)).unwrap();
        assert_eq!(m.density_at(0.5), DensityValue::Finite(0.0));
        assert_eq!(m.density_at(0.0), DensityValue::Finite(0.0));
        match m.density_at(-1.0) {
            DensityValue::EdgeSingular {
                coefficient,
                exponent,
            } => {
                assert_eq!(exponent, -0.5);
                // R = 1 - y at y = -1 over π·sqrt(b - a)
                assert_relative_eq!(coefficient, 2.0 / PI, max_relative = 1e-13);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_potential_matches_quadrature() {
        for m in [
            solve_one_cut(&box_gas(0.4)).unwrap(),
            solve_one_cut(&box_gas(2.5)).unwrap(),
            solve_one_cut(&quartic(0.3)).unwrap(),
        ] {
            for &x in &[-2.7, -0.6, 0.1, 0.75, 3.3] {
                let a = m.log_potential(x);
                let b = log_potential_oracle(&m, x);
                assert!((a - b).abs() < 2e-5, "{a} vs {b} at {x}");
            }
        }
    }

    #[test]
    fn energies_of_classical_laws() {
        let arcsine = solve_one_cut(&box_gas(0.0)).unwrap();
        assert_relative_eq!(
            arcsine.interaction_energy(),
            0.5 * LN_2,
            max_relative = 1e-15
        );
        // tensor Gauss–Chebyshev on two interlaced node sets
        let (n, m) = (2000, 2001);
        let mut acc = 0.0;
        for &x in &chebyshev_nodes(n) {
            for &y in &chebyshev_nodes(m) {
                acc += (x - y).abs().ln();
            }
        }
        let oracle = -0.5 * acc / (n * m) as f64;
        assert!((oracle - 0.5 * LN_2).abs() < 1e-3, "{oracle}");
    }

    #[test]
    fn euler_lagrange_constancy() {
        for w in [box_gas(0.7), box_gas(-2.0), quartic(0.5)] {
            let m = solve_one_cut(&w).unwrap();
            assert!(m.euler_lagrange_residual(64) < 1e-8);
            assert!((m.normalization() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_matches_cold_start() {
        let cold = solve_one_cut(&quartic(0.51)).unwrap();
        let seed = solve_one_cut(&quartic(0.5)).unwrap();
        let warm = solve_one_cut_seeded(&quartic(0.51), Some(&seed)).unwrap();
        assert!((cold.support().a - warm.support().a).abs() < 1e-10);
        assert!((cold.support().b - warm.support().b).abs() < 1e-10);
    }

    #[test]
    fn continuation_below_zero_tilt() {
        let w = Polynomial::new(vec![0.0, 0.0, 0.25, 0.0, -0.005]);
        assert!(solve_one_cut(&ConfinementPotential::new_unchecked(
            w.clone(),
            Walls::unbounded()
        ))
        .is_err());
        let m = solve_continued(&w, &Walls::unbounded(), None).unwrap();
        assert!(m.is_metastable());
        let s: f64 = -0.005;
        let l = ((1.0 + 96.0 * s).sqrt() - 1.0) / (48.0 * s);
        let x4 = m.statistic_value(&LinearStatistic::power(4).unwrap());
        assert!((x4 - l * l * (3.0 - l)).abs() < 1e-12);
        let past_fold = Polynomial::new(vec![0.0, 0.0, 0.25, 0.0, -0.011]);
        assert!(solve_continued(&past_fold, &Walls::unbounded(), None).is_err());
    }

    #[test]
    fn double_well_splits() {
        // deep symmetric double well: the one-cut ansatz goes negative
        let w = ConfinementPotential::new(
            Polynomial::new(vec![0.0, 0.0, -4.0, 0.0, 1.0]),
            Walls::unbounded(),
        )
        .unwrap();
        match solve_one_cut(&w) {
            Err(Error::NoOneCut { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn half_line_wall() {
        // W = λ on [0, ∞): ρ(λ) = sqrt((2 - λ)/λ)/π
        let w = ConfinementPotential::new(
            Polynomial::new(vec![0.0, 1.0]),
            Walls::new(Bound::Finite(0.0), Bound::Infinite).unwrap(),
        )
        .unwrap();
        let m = solve_one_cut(&w).unwrap();
        assert_eq!(m.regime(), Regime::HardSoft);
        assert!((m.support().b - 2.0).abs() < 1e-12);
        let exact = (1.5f64 / 0.5).sqrt() / PI;
        assert_relative_eq!(m.density(0.5), exact, max_relative = 1e-12);
    }

    #[test]
    fn quantiles_invert_cdf() {
        let m = solve_one_cut(&quartic(0.2)).unwrap();
        for &p in &[0.01, 0.3, 0.5, 0.77, 0.99] {
            let x = m.quantile(p);
            assert!((m.cdf(x) - p).abs() < 1e-12);
        }
        assert!(m.quantile(0.5).abs() < 1e-12);
    }
}
