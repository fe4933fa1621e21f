//! Legendre-duality shortcut: tabulate `x*(s)`, integrate `J' = x*`, invert
//! to `s*(x)` and integrate `Ψ' = -s*`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::equilibrium::{solve_continued, solve_one_cut_seeded, EquilibriumMeasure, Regime};
use crate::error::{Error, Result};
use crate::model::{tilt, tilt_polynomial, ConfinementPotential, GasParameters, LinearStatistic};
use crate::numerics::{
    cumulative_integral, fornberg_weights, gauss_legendre, hermite, integrate_gl, locate, median,
    Pchip,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryFlag {
    /// The requested range ends here; the curve may extend further.
    Interior,
    /// No equilibrium measure exists just past this end.
    DomainBoundary,
    /// Domain boundary at which `x*` stays bounded.
    NonSteepBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    /// Follow the one-cut solution past the tilt where the potential stops
    /// confining the gas (metastable branch).
    pub continue_past_confinement: bool,
    /// Bisect intervals whose `|Δx|` exceeds ten times the median increment.
    pub refine: bool,
    /// Smallest interval width produced by refinement.
    pub min_width: f64,
    /// Width to which regime switches are bracketed.
    pub kink_width: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            continue_past_confinement: true,
            refine: true,
            min_width: 1e-4,
            kink_width: 1e-7,
        }
    }
}

/// Equilibrium measure of `V + s·f`, following the metastable branch when
/// the tilt is not confining and `continued` is set.
pub fn tilted_measure(
    v: &ConfinementPotential,
    f: &LinearStatistic,
    s: f64,
    seed: Option<&EquilibriumMeasure>,
    continued: bool,
) -> Result<EquilibriumMeasure> {
    match tilt(v, f, s) {
        Ok(w) => solve_one_cut_seeded(&w, seed),
        Err(Error::IllConfined { .. }) if continued => {
            solve_continued(&tilt_polynomial(v, f, s), v.walls(), seed)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
struct Node {
    s: f64,
    x: f64,
    regime: Regime,
    metastable: bool,
    base: bool,
    measure: EquilibriumMeasure,
}

/// Tabulated `x*(s)` and, once integrated, `J(s)`.
#[derive(Debug, Clone)]
pub struct DualityCurve {
    potential: ConfinementPotential,
    statistic: LinearStatistic,
    options: CurveOptions,
    s_grid: Vec<f64>,
    x_values: Vec<f64>,
    j_values: Option<Vec<f64>>,
    regimes: Vec<Regime>,
    metastable: Vec<bool>,
    base: Vec<bool>,
    kinks: Vec<(f64, f64)>,
    zones: Vec<(f64, f64)>,
    j_pieces: Vec<Option<f64>>,
    lower_flag: BoundaryFlag,
    upper_flag: BoundaryFlag,
}

impl DualityCurve {
    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn j_values(&self) -> Option<&[f64]> {
        self.j_values.as_deref()
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    /// Points on the continued branch past the confinement threshold.
    pub fn metastable(&self) -> &[bool] {
        &self.metastable
    }

    /// True for points of the requested uniform grid (false for points
    /// added by refinement, kink bracketing or boundary search).
    pub fn is_base(&self) -> &[bool] {
        &self.base
    }

    /// Brackets `(s_lo, s_hi)` around switches of the edge regime.
    pub fn kinks(&self) -> &[(f64, f64)] {
        &self.kinks
    }

    /// Ranges `(s_lo, s_hi)` graded towards a domain boundary.
    pub fn boundary_zones(&self) -> &[(f64, f64)] {
        &self.zones
    }

    pub fn lower_flag(&self) -> BoundaryFlag {
        self.lower_flag
    }

    pub fn upper_flag(&self) -> BoundaryFlag {
        self.upper_flag
    }

    pub fn set_flags(&mut self, lower: BoundaryFlag, upper: BoundaryFlag) {
        self.lower_flag = lower;
        self.upper_flag = upper;
    }

    pub fn potential(&self) -> &ConfinementPotential {
        &self.potential
    }

    pub fn statistic(&self) -> &LinearStatistic {
        &self.statistic
    }

    pub fn options(&self) -> &CurveOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    /// Index of `s = 0`.
    pub fn origin(&self) -> usize {
        self.s_grid
            .iter()
            .position(|&s| s == 0.0)
            .expect("grid contains zero")
    }

    /// `interval_breaks()[i]` marks `[s_i, s_{i+1}]` as a kink bracket.
    pub fn interval_breaks(&self) -> Vec<bool> {
        self.s_grid
            .windows(2)
            .map(|w| self.kinks.iter().any(|&(lo, hi)| w[0] == lo && w[1] == hi))
            .collect()
    }

    /// Equilibrium measure at tilt `s` with this curve's settings.
    pub fn measure_at(&self, s: f64) -> Result<EquilibriumMeasure> {
        tilted_measure(
            &self.potential,
            &self.statistic,
            s,
            None,
            self.options.continue_past_confinement,
        )
    }

    /// `x*(s)` by a fresh solve.
    pub fn x_star(&self, s: f64) -> Result<f64> {
        Ok(self.measure_at(s)?.statistic_value(&self.statistic))
    }

    /// `J(s)` off the grid by cubic Hermite interpolation with slopes `x*`.
    pub fn j_at(&self, s: f64) -> Option<f64> {
        let j = self.j_values.as_ref()?;
        let (lo, hi) = (self.s_grid[0], *self.s_grid.last()?);
        if s < lo || s > hi {
            return None;
        }
        let i = locate(&self.s_grid, s);
        Some(hermite(
            self.s_grid[i],
            self.s_grid[i + 1],
            j[i],
            j[i + 1],
            self.x_values[i],
            self.x_values[i + 1],
            s,
        ))
    }
}

fn uniform_grid_with_zero(s_min: f64, s_max: f64, n: usize) -> Vec<f64> {
    let span = s_max - s_min;
    let mut grid: Vec<f64> = (0..n)
        .map(|i| {
            let s = s_min + span * i as f64 / (n - 1) as f64;
            if s.abs() <= 1e-12 * span {
                0.0
            } else {
                s
            }
        })
        .collect();
    if !grid.contains(&0.0) {
        grid.push(0.0);
        grid.sort_by(f64::total_cmp);
    }
    grid
}

/// Tabulate `x*(s) = ∫ f dρ*_s` on `[s_min, s_max]`.
///
/// The sweep starts at `s = 0` and continues outward in both directions,
/// seeding each solve with its neighbour. A failing tilt truncates the
/// range at the bisected domain boundary. Regime switches are bracketed to
/// `options.kink_width` and large jumps in `x*` are refined.
pub fn build_curve(
    v: &ConfinementPotential,
    f: &LinearStatistic,
    s_min: f64,
    s_max: f64,
    n_points: usize,
) -> Result<DualityCurve> {
    build_curve_with(v, f, s_min, s_max, n_points, &CurveOptions::default())
}

pub fn build_curve_with(
    v: &ConfinementPotential,
    f: &LinearStatistic,
    s_min: f64,
    s_max: f64,
    n_points: usize,
    options: &CurveOptions,
) -> Result<DualityCurve> {
    if !(s_min.is_finite() && s_max.is_finite()) || s_min > 0.0 || s_max < 0.0 || s_min >= s_max {
        return Err(Error::InvalidParameter(format!(
            "s-range [{s_min}, {s_max}] must be nondegenerate and contain 0"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "s-grid needs at least 2 points, got {n_points}"
        )));
    }
    let grid = uniform_grid_with_zero(s_min, s_max, n_points);
    let i0 = grid.iter().position(|&s| s == 0.0).expect("zero inserted");
    let sweeper = Sweeper { v, f, options };
    let origin = sweeper.node(0.0, None, true)?;

    let up_grid: Vec<f64> = grid[i0 + 1..].to_vec();
    let down_grid: Vec<f64> = grid[..i0].iter().rev().copied().collect();
    let ((up, up_flag, up_kinks, up_zone), (down, down_flag, down_kinks, down_zone)) = rayon::join(
        || sweeper.sweep(&origin, &up_grid),
        || sweeper.sweep(&origin, &down_grid),
    );

    let mut nodes: Vec<Node> = down.into_iter().rev().collect();
    nodes.push(origin);
    nodes.extend(up);
    let mut kinks: Vec<(f64, f64)> = down_kinks.into_iter().map(|(a, b)| (b, a)).collect();
    kinks.extend(up_kinks);
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let zones: Vec<(f64, f64)> = [down_zone.map(|(a, b)| (b, a)), up_zone]
        .into_iter()
        .flatten()
        .collect();

    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let kink_zones = sweeper.grade_kinks(&mut nodes, &kinks, ZONE_STEPS * step);
    if options.refine {
        let all: Vec<(f64, f64)> = zones.iter().chain(&kink_zones).copied().collect();
        sweeper.refine(&mut nodes, &kinks, &all);
    }

    let rule = gauss_legendre(10);
    let j_pieces: Vec<Option<f64>> = nodes
        .par_windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let within = |z: &[(f64, f64)]| z.iter().any(|&(lo, hi)| a.s >= lo && b.s <= hi);
            if kinks.iter().any(|&(lo, hi)| a.s == lo && b.s == hi) {
                None
            } else if within(&zones) {
                sweeper
                    .inverse_integral(a, b, &rule)
                    .map(|v| b.s * b.x - a.s * a.x - v)
            } else if within(&kink_zones) {
                sweeper.direct_integral(a, b, &rule)
            } else {
                None
            }
        })
        .collect();

    Ok(DualityCurve {
        potential: v.clone(),
        statistic: f.clone(),
        options: options.clone(),
        s_grid: nodes.iter().map(|n| n.s).collect(),
        x_values: nodes.iter().map(|n| n.x).collect(),
        j_values: None,
        regimes: nodes.iter().map(|n| n.regime).collect(),
        metastable: nodes.iter().map(|n| n.metastable).collect(),
        base: nodes.iter().map(|n| n.base).collect(),
        kinks,
        zones,
        j_pieces,
        lower_flag: down_flag,
        upper_flag: up_flag,
    })
}

/// Base steps next to a domain boundary or kink integrated by quadrature.
const ZONE_STEPS: f64 = 16.0;

struct Sweeper<'a> {
    v: &'a ConfinementPotential,
    f: &'a LinearStatistic,
    options: &'a CurveOptions,
}

impl Sweeper<'_> {
    fn node(&self, s: f64, seed: Option<&EquilibriumMeasure>, base: bool) -> Result<Node> {
        let m = tilted_measure(
            self.v,
            self.f,
            s,
            seed,
            self.options.continue_past_confinement,
        )?;
        Ok(Node {
            s,
            x: m.statistic_value(self.f),
            regime: m.regime(),
            metastable: m.is_metastable(),
            base,
            measure: m,
        })
    }

    /// Walk along `targets` (monotone away from the origin). Returns the new
    /// nodes in walking order, the flag of the far end, kink brackets as
    /// (near, far) pairs and the graded zone next to a domain boundary.
    #[allow(clippy::type_complexity)]
    fn sweep(
        &self,
        origin: &Node,
        targets: &[f64],
    ) -> (Vec<Node>, BoundaryFlag, Vec<(f64, f64)>, Option<(f64, f64)>) {
        let mut out: Vec<Node> = Vec::with_capacity(targets.len());
        let mut kinks = Vec::new();
        let mut zone = None;
        let mut flag = BoundaryFlag::Interior;
        let mut last = origin.clone();
        for &s in targets {
            match self.node(s, Some(&last.measure), true) {
                Ok(next) => {
                    if next.regime != last.regime {
                        let (near, far) = self.bracket_switch(&last, &next);
                        let (a, b) = (near.s, far.s);
                        if near.s != last.s {
                            out.push(near);
                        }
                        if far.s != next.s {
                            out.push(far);
                        }
                        kinks.push((a, b));
                    }
                    out.push(next.clone());
                    last = next;
                }
                Err(e) if e.is_infeasible() => {
                    if let Some((edge, bad)) = self.boundary(&last, s) {
                        let reach = ZONE_STEPS * (targets[0] - origin.s).abs();
                        let start = out
                            .iter()
                            .find(|n| (bad - n.s).abs() <= reach)
                            .unwrap_or(if (bad - origin.s).abs() <= reach {
                                origin
                            } else {
                                &last
                            })
                            .clone();
                        zone = Some((start.s, edge.s));
                        for n in self.grade(&start, &edge, bad) {
                            let d = (bad - n.s).abs();
                            let at = out.partition_point(|m| (bad - m.s).abs() > d);
                            if out.get(at).is_none_or(|m| m.s != n.s) {
                                out.insert(at, n);
                            }
                        }
                        out.push(edge);
                    }
                    flag = BoundaryFlag::DomainBoundary;
                    break;
                }
                Err(e) => {
                    log::warn!("solve failed at s = {s}: {e}");
                    flag = BoundaryFlag::DomainBoundary;
                    break;
                }
            }
        }
        (out, flag, kinks, zone)
    }

    /// Narrow a regime switch between `near` and `far` by bisection.
    fn bracket_switch(&self, near: &Node, far: &Node) -> (Node, Node) {
        let mut lo = near.clone();
        let mut hi = far.clone();
        for _ in 0..200 {
            if (hi.s - lo.s).abs() <= self.options.kink_width {
                break;
            }
            let mid = 0.5 * (lo.s + hi.s);
            if mid == lo.s || mid == hi.s {
                break;
            }
            match self.node(mid, Some(&lo.measure), false) {
                Ok(m) if m.regime == lo.regime => lo = m,
                Ok(m) => hi = m,
                Err(_) => break,
            }
        }
        lo.base = lo.base && lo.s == near.s;
        hi.base = hi.base && hi.s == far.s;
        (lo, hi)
    }

    /// Last feasible node between `good` and the failing tilt `bad`, with
    /// the nearest failing tilt found.
    fn boundary(&self, good: &Node, bad: f64) -> Option<(Node, f64)> {
        let mut lo = good.clone();
        let mut hi = bad;
        let tol = 1e-12 * (1.0 + bad.abs());
        let mut found = None;
        for _ in 0..200 {
            if (hi - lo.s).abs() <= tol {
                break;
            }
            let mid = 0.5 * (lo.s + hi);
            if mid == lo.s || mid == hi {
                break;
            }
            match self.node(mid, Some(&lo.measure), false) {
                Ok(m) => {
                    lo = m.clone();
                    found = Some(m);
                }
                Err(_) => hi = mid,
            }
        }
        found.map(|n| (n, hi))
    }

    /// Nodes between `start` and `edge` at distances from `bad` halving
    /// towards the boundary.
    fn grade(&self, start: &Node, edge: &Node, bad: f64) -> Vec<Node> {
        let gap = (bad - edge.s).abs();
        let dir = (bad - start.s).signum();
        let mut d = 0.5 * (bad - start.s).abs();
        let mut out: Vec<Node> = Vec::new();
        while d > 2.0 * gap {
            let s = bad - dir * d;
            let seed = out.last().unwrap_or(start);
            match self.node(s, Some(&seed.measure), false) {
                Ok(n) => out.push(n),
                Err(_) => break,
            }
            d *= 0.5;
        }
        out
    }

    /// `x*(σ) = x` for `σ` between the nodes `a` and `b`, by the Illinois
    /// variant of regula falsi.
    fn inverse(&self, a: &Node, b: &Node, x: f64) -> Option<f64> {
        let (mut s0, mut h0) = (a.s, a.x - x);
        let (mut s1, mut h1) = (b.s, b.x - x);
        if h0 == 0.0 {
            return Some(s0);
        }
        if h1 == 0.0 {
            return Some(s1);
        }
        if (h0 < 0.0) == (h1 < 0.0) {
            return None;
        }
        let mut side = 0;
        for _ in 0..200 {
            let (lo, hi) = (s0.min(s1), s0.max(s1));
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            let mut s = (s0 * h1 - s1 * h0) / (h1 - h0);
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let seed = if (s - a.s).abs() < (s - b.s).abs() {
                a
            } else {
                b
            };
            let h = self.node(s, Some(&seed.measure), false).ok()?.x - x;
            if h == 0.0 {
                return Some(s);
            }
            if (h < 0.0) == (h1 < 0.0) {
                s1 = s;
                h1 = h;
                if side == -1 {
                    h0 *= 0.5;
                }
                side = -1;
            } else {
                s0 = s;
                h0 = h;
                if side == 1 {
                    h1 *= 0.5;
                }
                side = 1;
            }
        }
        Some(if h0.abs() < h1.abs() { s0 } else { s1 })
    }

    /// Nodes graded towards both sides of each kink bracket, inserted in
    /// place. Returns the graded ranges.
    fn grade_kinks(
        &self,
        nodes: &mut Vec<Node>,
        kinks: &[(f64, f64)],
        reach: f64,
    ) -> Vec<(f64, f64)> {
        let mut zones = Vec::new();
        let mut fresh: Vec<Node> = Vec::new();
        for &(lo, hi) in kinks {
            let (Some(il), Some(ih)) = (
                nodes.iter().position(|n| n.s == lo),
                nodes.iter().position(|n| n.s == hi),
            ) else {
                continue;
            };
            let width = hi - lo;
            let mut zone = (lo, hi);
            for (inner, step) in [(il, -1isize), (ih, 1)] {
                let edge = &nodes[inner];
                let mut outer = inner;
                while let Some(k) = outer.checked_add_signed(step).filter(|&k| {
                    k < nodes.len()
                        && nodes[k].regime == edge.regime
                        && (nodes[k].s - edge.s).abs() <= reach
                }) {
                    outer = k;
                }
                if outer == inner {
                    continue;
                }
                let far = &nodes[outer];
                let dir = (far.s - edge.s).signum();
                let mut d = 0.5 * (far.s - edge.s).abs();
                let mut seed = edge.clone();
                while d > width {
                    match self.node(edge.s + dir * d, Some(&seed.measure), false) {
                        Ok(n) if n.regime == edge.regime => {
                            seed = n.clone();
                            fresh.push(n);
                        }
                        Ok(_) => {}
                        Err(_) => break,
                    }
                    d *= 0.5;
                }
                if dir < 0.0 {
                    zone.0 = far.s;
                } else {
                    zone.1 = far.s;
                }
            }
            zones.push(zone);
        }
        nodes.extend(fresh);
        nodes.sort_by(|a, b| a.s.total_cmp(&b.s));
        nodes.dedup_by(|a, b| a.s == b.s);
        zones
    }

    /// `∫ x*(s) ds` from `a.s` to `b.s` by Gauss-Legendre on fresh solves.
    fn direct_integral(&self, a: &Node, b: &Node, rule: &(Vec<f64>, Vec<f64>)) -> Option<f64> {
        let v = integrate_gl(
            |s| {
                let seed = if (s - a.s).abs() < (s - b.s).abs() {
                    a
                } else {
                    b
                };
                self.node(s, Some(&seed.measure), false)
                    .map_or(f64::NAN, |n| n.x)
            },
            a.s,
            b.s,
            rule,
        );
        v.is_finite().then_some(v)
    }

    /// `∫ s*(x) dx` from `a.x` to `b.x` by Gauss-Legendre in `x`.
    fn inverse_integral(&self, a: &Node, b: &Node, rule: &(Vec<f64>, Vec<f64>)) -> Option<f64> {
        if a.x == b.x {
            return None;
        }
        let v = integrate_gl(
            |x| self.inverse(a, b, x).unwrap_or(f64::NAN),
            a.x,
            b.x,
            rule,
        );
        v.is_finite().then_some(v)
    }

    fn refine(&self, nodes: &mut Vec<Node>, kinks: &[(f64, f64)], zones: &[(f64, f64)]) {
        let increments: Vec<f64> = nodes
            .windows(2)
            .filter(|w| w[0].base && w[1].base)
            .map(|w| (w[1].x - w[0].x).abs())
            .collect();
        let threshold = 10.0 * median(&increments);
        if threshold <= 0.0 {
            return;
        }
        for _pass in 0..40 {
            let targets: Vec<usize> = (0..nodes.len() - 1)
                .filter(|&i| {
                    let (a, b) = (&nodes[i], &nodes[i + 1]);
                    let is_kink = kinks.iter().any(|&(lo, hi)| a.s == lo && b.s == hi);
                    let in_zone = zones.iter().any(|&(lo, hi)| a.s >= lo && b.s <= hi);
                    !is_kink
                        && !in_zone
                        && (b.x - a.x).abs() > threshold
                        && b.s - a.s > 2.0 * self.options.min_width
                })
                .collect();
            if targets.is_empty() {
                break;
            }
            let fresh: Vec<(usize, Node)> = targets
                .par_iter()
                .filter_map(|&i| {
                    let mid = 0.5 * (nodes[i].s + nodes[i + 1].s);
                    self.node(mid, Some(&nodes[i].measure), false)
                        .ok()
                        .map(|n| (i, n))
                })
                .collect();
            if fresh.is_empty() {
                break;
            }
            for (i, n) in fresh.into_iter().rev() {
                nodes.insert(i + 1, n);
            }
        }
    }
}

/// Replace the increments of `cum` where `piece` has a value.
fn splice(cum: &mut [f64], piece: impl Fn(usize) -> Option<f64>) {
    let mut acc = cum[0];
    let mut prev = cum[0];
    for i in 0..cum.len().saturating_sub(1) {
        let step = piece(i).unwrap_or(cum[i + 1] - prev);
        prev = cum[i + 1];
        acc += step;
        cum[i + 1] = acc;
    }
}

/// Fill `J(s) = ∫_0^s x*(t) dt`.
///
/// Smooth segments are integrated by local cubics; kink brackets by the
/// trapezoid rule. Intervals graded towards a kink are integrated by
/// quadrature on fresh solves; next to a domain boundary by parts,
/// `s x - ∫ s*(x) dx`, with the `x`-integral by quadrature on inverse
/// solves. `J(0) = 0` exactly.
pub fn integrate_j(mut curve: DualityCurve) -> DualityCurve {
    let fine = &curve.j_pieces;
    let breaks: Vec<bool> = curve
        .interval_breaks()
        .into_iter()
        .zip(fine)
        .map(|(k, f)| k || f.is_some())
        .collect();
    let mut cum = cumulative_integral(&curve.s_grid, &curve.x_values, &breaks);
    splice(&mut cum, |i| fine[i]);
    let i0 = curve.origin();
    let base = cum[i0];
    curve.j_values = Some(cum.iter().map(|&c| c - base).collect());
    curve
}

/// Tabulated `s*(x)` and, once integrated, `Ψ(x)`.
#[derive(Debug, Clone)]
pub struct RateFunctionTable {
    x_grid: Vec<f64>,
    s_star_values: Vec<f64>,
    psi_values: Option<Vec<f64>>,
    x0: Option<f64>,
    breaks: Vec<bool>,
    inverse_integrals: Vec<Option<f64>>,
    interpolant: Pchip,
}

impl RateFunctionTable {
    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn s_star_values(&self) -> &[f64] {
        &self.s_star_values
    }

    pub fn psi_values(&self) -> Option<&[f64]> {
        self.psi_values.as_deref()
    }

    /// Typical value `x0` at which `Ψ` vanishes, once integrated.
    pub fn x0(&self) -> Option<f64> {
        self.x0
    }

    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_grid[0] && x <= self.x_grid[self.x_grid.len() - 1]
    }

    /// `s*(x)` by monotone piecewise-cubic interpolation.
    pub fn s_star_at(&self, x: f64) -> Option<f64> {
        self.contains(x).then(|| self.interpolant.eval(x))
    }

    /// `Ψ(x)` by cubic Hermite interpolation with slopes `-s*`.
    pub fn psi_at(&self, x: f64) -> Option<f64> {
        let psi = self.psi_values.as_ref()?;
        if !self.contains(x) {
            return None;
        }
        let i = locate(&self.x_grid, x);
        Some(hermite(
            self.x_grid[i],
            self.x_grid[i + 1],
            psi[i],
            psi[i + 1],
            -self.s_star_values[i],
            -self.s_star_values[i + 1],
            x,
        ))
    }
}

/// Invert `x*(s)` into `s*(x)` on the x-range spanned by the curve.
pub fn invert_curve(curve: &DualityCurve) -> Result<RateFunctionTable> {
    let n = curve.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "curve has fewer than 2 points".into(),
        ));
    }
    for i in 0..n - 1 {
        if curve.x_values[i + 1] >= curve.x_values[i] {
            return Err(Error::FlatSegment {
                s_lo: curve.s_grid[i],
                s_hi: curve.s_grid[i + 1],
            });
        }
    }
    let x_grid: Vec<f64> = curve.x_values.iter().rev().copied().collect();
    let s_star: Vec<f64> = curve.s_grid.iter().rev().copied().collect();
    let breaks: Vec<bool> = curve.interval_breaks().into_iter().rev().collect();
    let (s, x) = (&curve.s_grid, &curve.x_values);
    let inverse_integrals: Vec<Option<f64>> = (0..n - 1)
        .rev()
        .map(|i| curve.j_pieces[i].map(|dj| dj - (s[i + 1] * x[i + 1] - s[i] * x[i])))
        .collect();
    let interpolant = Pchip::new(x_grid.clone(), s_star.clone());
    Ok(RateFunctionTable {
        x_grid,
        s_star_values: s_star,
        psi_values: None,
        x0: None,
        breaks,
        inverse_integrals,
        interpolant,
    })
}

/// Fill `Ψ(x) = -∫_{x0}^x s*(t) dt`.
pub fn integrate_psi(mut table: RateFunctionTable, x0: f64) -> Result<RateFunctionTable> {
    if !table.contains(x0) {
        return Err(Error::InvalidParameter(format!(
            "x0 = {x0} lies outside the tabulated range [{}, {}]",
            table.x_grid[0],
            table.x_grid[table.len() - 1]
        )));
    }
    let breaks: Vec<bool> = table
        .breaks
        .iter()
        .zip(&table.inverse_integrals)
        .map(|(&k, f)| k || f.is_some())
        .collect();
    let mut cum = cumulative_integral(&table.x_grid, &table.s_star_values, &breaks);
    splice(&mut cum, |i| table.inverse_integrals[i]);
    let offset = match table.x_grid.iter().position(|&x| x == x0) {
        Some(i) => cum[i],
        None => {
            let i = locate(&table.x_grid, x0);
            let rule = gauss_legendre(10);
            cum[i] + integrate_gl(|x| table.interpolant.eval(x), table.x_grid[i], x0, &rule)
        }
    };
    table.psi_values = Some(cum.iter().map(|&c| offset - c).collect());
    table.x0 = Some(x0);
    Ok(table)
}

/// `max_i |J(s_i) - Ψ(x*(s_i)) - s_i·x*(s_i)|`; `None` until both tables are
/// integrated.
pub fn legendre_check(curve: &DualityCurve, table: &RateFunctionTable) -> Option<f64> {
    let j = curve.j_values()?;
    let psi = table.psi_values()?;
    let n = curve.len();
    if psi.len() != n {
        return None;
    }
    Some(
        (0..n)
            .map(|i| {
                let (s, x) = (curve.s_grid[i], curve.x_values[i]);
                (j[i] - psi[n - 1 - i] - s * x).abs()
            })
            .fold(0.0, f64::max),
    )
}

/// `ℰ_s[ρ*_s] - ℰ_0[ρ*_0]` with the tilted potential in `ℰ_s`, computed
/// directly from the two measures.
pub fn direct_excess_energy(v: &ConfinementPotential, f: &LinearStatistic, s: f64) -> Result<f64> {
    let m0 = tilted_measure(v, f, 0.0, None, false)?;
    let ms = tilted_measure(v, f, s, None, true)?;
    let w = tilt_polynomial(v, f, s);
    Ok(ms.mean_field_energy(&w) - m0.mean_field_energy(v.polynomial()))
}

/// Derivatives `∂_s^m J(0)` for `m = 1..=m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantReport {
    orders: Vec<usize>,
    scaled_values: Vec<f64>,
    step: f64,
}

impl CumulantReport {
    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    /// `∂_s^m J(0)`.
    pub fn scaled_values(&self) -> &[f64] {
        &self.scaled_values
    }

    /// Base finite-difference step.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Leading-order cumulants of `F` at finite `N`:
    /// `κ_m = (-1/(βN²))^{m-1} ∂_s^m J(0)`.
    pub fn finite_n_values(&self, gas: &GasParameters) -> Vec<f64> {
        let v = gas.speed();
        self.orders
            .iter()
            .zip(&self.scaled_values)
            .map(|(&m, &d)| (-1.0 / v).powi(m as i32 - 1) * d)
            .collect()
    }

    /// `(-β)^{1-m} ∂_s^m J(0)`; at β = 2 for the quartic model these are
    /// the planar vacuum diagram counts.
    pub fn planar_values(&self, beta: f64) -> Vec<f64> {
        self.orders
            .iter()
            .zip(&self.scaled_values)
            .map(|(&m, &d)| (-beta).powi(1 - m as i32) * d)
            .collect()
    }
}

/// `∂_s^m J(0)` from central differences of `x*` with two Richardson
/// extrapolation levels.
pub fn cumulants(
    v: &ConfinementPotential,
    f: &LinearStatistic,
    m_max: usize,
) -> Result<CumulantReport> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let origin = tilted_measure(v, f, 0.0, None, true)?;
    let regime = origin.regime();
    let x0 = origin.statistic_value(f);

    let eval = |s: f64| -> Result<(f64, Regime)> {
        let m = tilted_measure(v, f, s, Some(&origin), true)?;
        Ok((m.statistic_value(f), m.regime()))
    };
    let same_regime = |s: f64| matches!(eval(s), Ok((_, r)) if r == regime);

    let mut d = 0.75;
    while ![d, -d, 0.5 * d, -0.5 * d].iter().all(|&s| same_regime(s)) {
        d *= 0.5;
        if d < 1e-6 {
            return Err(Error::NotAnalytic {
                reason: format!("the edge regime changes within {:e} of s = 0", 2.0 * d),
            });
        }
    }
    let h0 = (0.02 * d).min(1e-2);

    let mut cache: HashMap<u64, f64> = HashMap::new();
    cache.insert(0f64.to_bits(), x0);
    let mut x_at = |s: f64| -> Result<f64> {
        if let Some(&x) = cache.get(&s.to_bits()) {
            return Ok(x);
        }
        let (x, r) = eval(s)?;
        if r != regime {
            return Err(Error::NotAnalytic {
                reason: format!("edge regime {r} at s = {s} differs from {regime} at s = 0"),
            });
        }
        cache.insert(s.to_bits(), x);
        Ok(x)
    };

    let mut values = vec![x0];
    for m in 2..=m_max {
        let k = m - 1;
        let p = k / 2 + 1;
        let order = (2 * p + 2 - 2 * k.div_ceil(2)) as i32;
        let mut est = [0.0; 3];
        for (level, e) in est.iter_mut().enumerate() {
            let h = h0 / f64::from(1u32 << level);
            let nodes: Vec<f64> = (-(p as i64)..=p as i64).map(|j| j as f64 * h).collect();
            let w = fornberg_weights(0.0, &nodes, k);
            let mut acc = 0.0;
            for (&s, &wi) in nodes.iter().zip(&w) {
                acc += wi * x_at(s)?;
            }
            *e = acc;
        }
        let r1 = 2f64.powi(order);
        let r2 = 2f64.powi(order + 2);
        let a = (r1 * est[1] - est[0]) / (r1 - 1.0);
        let b = (r1 * est[2] - est[1]) / (r1 - 1.0);
        values.push((r2 * b - a) / (r2 - 1.0));
    }
    Ok(CumulantReport {
        orders: (1..=m_max).collect(),
        scaled_values: values,
        step: h0,
    })
}

/// `(x1*, x2*)` on a tensor grid of tilts `(s1, s2)`.
#[derive(Debug, Clone)]
pub struct JointSurface {
    potential: ConfinementPotential,
    f1: LinearStatistic,
    f2: LinearStatistic,
    s1_grid: Vec<f64>,
    s2_grid: Vec<f64>,
    /// Indexed `[i1][i2]`; `None` where no one-cut measure exists.
    x1: Vec<Vec<Option<f64>>>,
    x2: Vec<Vec<Option<f64>>>,
    regimes: Vec<Vec<Option<Regime>>>,
}

impl JointSurface {
    pub fn s1_grid(&self) -> &[f64] {
        &self.s1_grid
    }

    pub fn s2_grid(&self) -> &[f64] {
        &self.s2_grid
    }

    pub fn x1(&self, i1: usize, i2: usize) -> Option<f64> {
        self.x1[i1][i2]
    }

    pub fn x2(&self, i1: usize, i2: usize) -> Option<f64> {
        self.x2[i1][i2]
    }

    pub fn regime(&self, i1: usize, i2: usize) -> Option<Regime> {
        self.regimes[i1][i2]
    }

    /// Number of grid nodes without a one-cut measure.
    pub fn infeasible_nodes(&self) -> usize {
        self.regimes
            .iter()
            .flatten()
            .filter(|r| r.is_none())
            .count()
    }

    fn measure(&self, s1: f64, s2: f64) -> Result<EquilibriumMeasure> {
        joint_measure(&self.potential, &self.f1, &self.f2, s1, s2)
    }

    /// `(x1*, x2*, regime)` at an arbitrary tilt.
    pub fn evaluate(&self, s1: f64, s2: f64) -> Result<(f64, f64, Regime)> {
        let m = self.measure(s1, s2)?;
        Ok((
            m.statistic_value(&self.f1),
            m.statistic_value(&self.f2),
            m.regime(),
        ))
    }
}

fn joint_measure(
    v: &ConfinementPotential,
    f1: &LinearStatistic,
    f2: &LinearStatistic,
    s1: f64,
    s2: f64,
) -> Result<EquilibriumMeasure> {
    let w = v
        .polynomial()
        .axpy(s1, f1.polynomial())
        .axpy(s2, f2.polynomial());
    solve_one_cut_seeded(&ConfinementPotential::new(w, *v.walls())?, None)
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.len() < 2 || g.windows(2).any(|w| w[1] <= w[0]) || !g.contains(&0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be strictly increasing with at least 2 points and contain 0"
        )));
    }
    Ok(())
}

/// Solve every node of the tensor grid independently.
pub fn joint_build_surface(
    v: &ConfinementPotential,
    f1: &LinearStatistic,
    f2: &LinearStatistic,
    s1_grid: &[f64],
    s2_grid: &[f64],
) -> Result<JointSurface> {
    check_grid("s1 grid", s1_grid)?;
    check_grid("s2 grid", s2_grid)?;
    let rows: Vec<Vec<Option<(f64, f64, Regime)>>> = s1_grid
        .par_iter()
        .map(|&s1| {
            s2_grid
                .iter()
                .map(|&s2| {
                    joint_measure(v, f1, f2, s1, s2)
                        .ok()
                        .map(|m| (m.statistic_value(f1), m.statistic_value(f2), m.regime()))
                })
                .collect()
        })
        .collect();
    let pick = |k: usize| -> Vec<Vec<Option<f64>>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|e| e.map(|t| if k == 0 { t.0 } else { t.1 }))
                    .collect()
            })
            .collect()
    };
    Ok(JointSurface {
        potential: v.clone(),
        f1: f1.clone(),
        f2: f2.clone(),
        s1_grid: s1_grid.to_vec(),
        s2_grid: s2_grid.to_vec(),
        x1: pick(0),
        x2: pick(1),
        regimes: rows
            .iter()
            .map(|r| r.iter().map(|e| e.map(|t| t.2)).collect())
            .collect(),
    })
}

/// `J(s1, s2)` and `Ψ(x1, x2)` on the surface nodes.
#[derive(Debug, Clone)]
pub struct JointTables {
    /// `J` along `(0,0) → (s1,0) → (s1,s2)`, indexed `[i1][i2]`.
    pub j: Vec<Vec<Option<f64>>>,
    /// `J` along `(0,0) → (0,s2) → (s1,s2)`.
    pub j_alternative: Vec<Vec<Option<f64>>>,
    /// `Ψ(x1*, x2*) = J - s1·x1* - s2·x2*` at each node.
    pub psi: Vec<Vec<Option<f64>>>,
    /// Largest disagreement between the two paths.
    pub path_mismatch: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    S1,
    S2,
}

impl JointSurface {
    fn point(&self, axis: Axis, fixed: f64, t: f64) -> (f64, f64) {
        match axis {
            Axis::S1 => (t, fixed),
            Axis::S2 => (fixed, t),
        }
    }

    /// `∫ x_axis* dt` along one axis between `t0` and `t1` at fixed other
    /// tilt; split at a regime switch.
    fn edge_integral(
        &self,
        axis: Axis,
        fixed: f64,
        t0: f64,
        t1: f64,
        rule: &(Vec<f64>, Vec<f64>),
    ) -> Result<f64> {
        let integrand = |t: f64| -> Result<(f64, Regime)> {
            let (s1, s2) = self.point(axis, fixed, t);
            let (x1, x2, r) = self.evaluate(s1, s2)?;
            Ok((if axis == Axis::S1 { x1 } else { x2 }, r))
        };
        let (_, ra) = integrand(t0)?;
        let (_, rb) = integrand(t1)?;
        let mut pieces = vec![(t0, t1)];
        let mut bracket = None;
        if ra != rb {
            let (mut lo, mut hi) = (t0, t1);
            while (hi - lo).abs() > 1e-10 * (1.0 + lo.abs()) {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                match integrand(mid) {
                    Ok((_, r)) if r == ra => lo = mid,
                    _ => hi = mid,
                }
            }
            pieces = vec![(t0, lo), (hi, t1)];
            bracket = Some((lo, hi));
        }
        let mut total = 0.0;
        let err = std::cell::RefCell::new(None);
        for (a, b) in pieces {
            total += integrate_gl(
                |t| match integrand(t) {
                    Ok((y, _)) => y,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                },
                a,
                b,
                rule,
            );
        }
        if let Some((lo, hi)) = bracket {
            let (ylo, _) = integrand(lo)?;
            let (yhi, _) = integrand(hi)?;
            total += 0.5 * (hi - lo) * (ylo + yhi);
        }
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// Cumulative integral along `grid` from its zero, at fixed other tilt.
    fn line(
        &self,
        axis: Axis,
        fixed: f64,
        grid: &[f64],
        rule: &(Vec<f64>, Vec<f64>),
    ) -> Vec<Option<f64>> {
        let n = grid.len();
        let z = grid
            .iter()
            .position(|&t| t == 0.0)
            .expect("grid contains 0");
        let mut out = vec![None; n];
        out[z] = self.evaluate_ok(axis, fixed, 0.0).then_some(0.0);
        for i in z + 1..n {
            out[i] = out[i - 1].and_then(|prev| {
                self.edge_integral(axis, fixed, grid[i - 1], grid[i], rule)
                    .ok()
                    .map(|d| prev + d)
            });
        }
        for i in (0..z).rev() {
            out[i] = out[i + 1].and_then(|prev| {
                self.edge_integral(axis, fixed, grid[i + 1], grid[i], rule)
                    .ok()
                    .map(|d| prev + d)
            });
        }
        out
    }

    fn evaluate_ok(&self, axis: Axis, fixed: f64, t: f64) -> bool {
        let (s1, s2) = self.point(axis, fixed, t);
        self.evaluate(s1, s2).is_ok()
    }
}

/// Integrate `dJ = x1* ds1 + x2* ds2` along both axis paths.
pub fn joint_integrate(surface: &JointSurface) -> Result<JointTables> {
    let rule = gauss_legendre(10);
    let g1 = &surface.s1_grid;
    let g2 = &surface.s2_grid;
    let n1 = g1.len();
    let n2 = g2.len();

    let axis1 = surface.line(Axis::S1, 0.0, g1, &rule);
    let axis2 = surface.line(Axis::S2, 0.0, g2, &rule);
    // path A: along s1 first, then s2 at fixed s1
    let cols: Vec<Vec<Option<f64>>> = g1
        .par_iter()
        .map(|&s1| surface.line(Axis::S2, s1, g2, &rule))
        .collect();
    // path B: along s2 first, then s1 at fixed s2
    let rows: Vec<Vec<Option<f64>>> = g2
        .par_iter()
        .map(|&s2| surface.line(Axis::S1, s2, g1, &rule))
        .collect();

    let mut j = vec![vec![None; n2]; n1];
    let mut j_alt = vec![vec![None; n2]; n1];
    let mut psi = vec![vec![None; n2]; n1];
    let mut worst = (0.0, 0.0, 0.0);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let a = axis1[i1].zip(cols[i1][i2]).map(|(p, q)| p + q);
            let b = axis2[i2].zip(rows[i2][i1]).map(|(p, q)| p + q);
            j[i1][i2] = a;
            j_alt[i1][i2] = b;
            if let (Some(a), Some(b)) = (a, b) {
                let d = (a - b).abs();
                if d > worst.2 {
                    worst = (g1[i1], g2[i2], d);
                }
            }
            if let (Some(jv), Some(x1), Some(x2)) = (a, surface.x1[i1][i2], surface.x2[i1][i2]) {
                psi[i1][i2] = Some(jv - g1[i1] * x1 - g2[i2] * x2);
            }
        }
    }
    if worst.2 > 1e-5 {
        return Err(Error::PathMismatch {
            s1: worst.0,
            s2: worst.1,
            mismatch: worst.2,
        });
    }
    Ok(JointTables {
        j,
        j_alternative: j_alt,
        psi,
        path_mismatch: worst.2,
    })
}

/// Largest `|∂x1*/∂s2 - ∂x2*/∂s1|` over the feasible surface nodes, by
/// local finite differences with step `h`.
pub fn mixed_partial_asymmetry(surface: &JointSurface, h: f64) -> Result<f64> {
    let nodes: Vec<(f64, f64, Regime)> = surface
        .s1_grid
        .iter()
        .enumerate()
        .flat_map(|(i1, &s1)| {
            surface
                .s2_grid
                .iter()
                .enumerate()
                .filter_map(move |(i2, &s2)| surface.regimes[i1][i2].map(|r| (s1, s2, r)))
        })
        .collect();
    let worst = nodes
        .par_iter()
        .map(|&(s1, s2, r)| -> Result<f64> {
            let d12 = directional(surface, s1, s2, r, Axis::S2, h, true)?;
            let d21 = directional(surface, s1, s2, r, Axis::S1, h, false)?;
            Ok((d12 - d21).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Derivative along `axis` of x1* (`first`) or x2*; central when the whole
/// stencil shares the node's regime, otherwise second-order one-sided.
fn directional(
    surface: &JointSurface,
    s1: f64,
    s2: f64,
    regime: Regime,
    axis: Axis,
    h: f64,
    first: bool,
) -> Result<f64> {
    let at = |t: f64| -> Option<(f64, Regime)> {
        let (a, b) = match axis {
            Axis::S1 => (s1 + t, s2),
            Axis::S2 => (s1, s2 + t),
        };
        surface
            .evaluate(a, b)
            .ok()
            .map(|(x1, x2, r)| (if first { x1 } else { x2 }, r))
    };
    let f0 = at(0.0).map(|v| v.0).ok_or_else(|| Error::NoConvergence {
        reason: format!("no solution at ({s1}, {s2})"),
    })?;
    let consistent = |v: Option<(f64, Regime)>| v.filter(|&(_, r)| r == regime).map(|v| v.0);
    if let (Some(p), Some(m)) = (consistent(at(h)), consistent(at(-h))) {
        return Ok((p - m) / (2.0 * h));
    }
    for dir in [1.0, -1.0] {
        if let (Some(p1), Some(p2)) = (consistent(at(dir * h)), consistent(at(2.0 * dir * h))) {
            return Ok(dir * (-3.0 * f0 + 4.0 * p1 - p2) / (2.0 * h));
        }
    }
    // the node sits on a regime boundary: use whichever side is feasible
    for dir in [1.0, -1.0] {
        if let (Some((p1, r1)), Some((p2, r2))) = (at(dir * h), at(2.0 * dir * h)) {
            if r1 == r2 {
                return Ok(dir * (-3.0 * f0 + 4.0 * p1 - p2) / (2.0 * h));
            }
        }
    }
    Err(Error::NoConvergence {
        reason: format!("no finite-difference stencil at ({s1}, {s2})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bound, Polynomial, Walls};

    fn box_gas() -> (ConfinementPotential, LinearStatistic) {
        (
            ConfinementPotential::hard_box(-1.0, 1.0).unwrap(),
            LinearStatistic::power(1).unwrap(),
        )
    }

    fn quartic() -> (ConfinementPotential, LinearStatistic) {
        (
            ConfinementPotential::new(Polynomial::new(vec![0.0, 0.0, 0.25]), Walls::unbounded())
                .unwrap(),
            LinearStatistic::power(4).unwrap(),
        )
    }

    fn x_box(s: f64) -> f64 {
        if s.abs() <= 1.0 {
            -s / 2.0
        } else if s > 1.0 {
            0.5 / s - 1.0
        } else {
            0.5 / s + 1.0
        }
    }

    fn j_box(s: f64) -> f64 {
        if s.abs() <= 1.0 {
            -s * s / 4.0
        } else if s > 1.0 {
            -s + 0.5 * s.ln() + 0.75
        } else {
            s + 0.5 * (-s).ln() + 0.75
        }
    }

    #[test]
    fn box_gas_curve_and_j() {
        let (v, f) = box_gas();
        let c = integrate_j(build_curve(&v, &f, -3.0, 3.0, 801).unwrap());
        assert_eq!(c.kinks().len(), 2);
        for (k, &(lo, hi)) in c.kinks().iter().enumerate() {
            let target = if k == 0 { -1.0 } else { 1.0 };
            assert!(lo <= target && target <= hi && hi - lo <= 1e-6, "{lo} {hi}");
        }
        let j = c.j_values().unwrap();
        for (i, &s) in c.s_grid().iter().enumerate() {
            assert!((c.x_values()[i] - x_box(s)).abs() < 1e-12);
            assert!(
                (j[i] - j_box(s)).abs() < 1e-7,
                "s={s}: {} vs {}",
                j[i],
                j_box(s)
            );
        }
        assert_eq!(j[c.origin()], 0.0);
    }

    #[test]
    fn rate_function_and_legendre() {
        let (v, f) = box_gas();
        let c = integrate_j(build_curve(&v, &f, -4.0, 4.0, 801).unwrap());
        let t = integrate_psi(invert_curve(&c).unwrap(), 0.0).unwrap();
        assert!((t.s_star_at(0.25).unwrap() + 0.5).abs() < 1e-9);
        assert!((t.s_star_at(0.75).unwrap() + 2.0).abs() < 1e-6);
        assert!((t.psi_at(0.5).unwrap() - 0.25).abs() < 1e-8);
        let expected = 0.25 + 0.5 * 2f64.ln();
        assert!((t.psi_at(0.75).unwrap() - expected).abs() < 1e-7);
        assert!(legendre_check(&c, &t).unwrap() < 1e-6);
    }

    #[test]
    fn quartic_j_at_one_thirty_second() {
        let (v, f) = quartic();
        let c = integrate_j(build_curve(&v, &f, 0.0, 1.0, 801).unwrap());
        let exact = -25.0 / 432.0 + 0.25 * 1.5f64.ln();
        let j = c.j_at(1.0 / 32.0).unwrap();
        assert!((j - exact).abs() < 1e-7, "{j} vs {exact}");
    }

    #[test]
    fn quartic_lower_boundary_is_flagged() {
        let (v, f) = quartic();
        let c = build_curve(&v, &f, -0.05, 0.5, 201).unwrap();
        assert_eq!(c.lower_flag(), BoundaryFlag::DomainBoundary);
        assert_eq!(c.upper_flag(), BoundaryFlag::Interior);
        assert!((c.s_grid()[0] + 1.0 / 96.0).abs() < 1e-9);
        assert!((c.x_values()[0] - 4.0).abs() < 1e-3);
        assert!(c.metastable()[0]);
    }

    #[test]
    fn steep_half_line_boundary() {
        // x*(s) = 1/(2(1/2 + s)) diverges at s = -1/2
        let v = ConfinementPotential::new(
            Polynomial::new(vec![0.0, 0.5]),
            Walls::new(Bound::Finite(0.0), Bound::Infinite).unwrap(),
        )
        .unwrap();
        let f = LinearStatistic::power(1).unwrap();
        let curve = integrate_j(build_curve(&v, &f, -1.0, 1.0, 101).unwrap());
        assert_eq!(curve.lower_flag(), BoundaryFlag::DomainBoundary);
        assert_eq!(curve.boundary_zones().len(), 1);
        assert!(curve.x_values()[0] > 1e4);
        for (&s, &j) in curve.s_grid().iter().zip(curve.j_values().unwrap()) {
            let exact = 0.5 * (2.0 * (0.5 + s)).ln();
            assert!((j - exact).abs() < 1e-6, "s = {s}: {j} vs {exact}");
        }
        let table = integrate_psi(invert_curve(&curve).unwrap(), 1.0).unwrap();
        let r = legendre_check(&curve, &table).unwrap();
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn cumulants_box_and_quartic() {
        let (v, f) = box_gas();
        let r = cumulants(&v, &f, 2).unwrap();
        assert!(r.scaled_values()[0].abs() < 1e-14);
        assert!((r.scaled_values()[1] + 0.5).abs() < 1e-10);
        let (v, f) = quartic();
        let r = cumulants(&v, &f, 5).unwrap();
        let expected = [2.0, 36.0, 1728.0, 145152.0, 17915904.0];
        for (got, want) in r.planar_values(2.0).iter().zip(expected) {
            assert!(((got - want) / want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn invalid_ranges() {
        let (v, f) = box_gas();
        assert!(build_curve(&v, &f, 0.5, 1.0, 10).is_err());
        assert!(build_curve(&v, &f, -1.0, 1.0, 1).is_err());
        assert!(cumulants(&v, &f, 0).is_err());
    }

    #[test]
    fn direct_energy_matches_closed_form() {
        let (v, f) = box_gas();
        for s in [0.5, 2.5, -1.5] {
            assert!((direct_excess_energy(&v, &f, s).unwrap() - j_box(s)).abs() < 1e-12);
        }
    }
}
