//! Non-analytic points of `J` and steepness at the edges of its domain.

use crate::duality::{BoundaryFlag, DualityCurve};
use crate::numerics::polyfit;

const FIT_POINTS: usize = 6;
const JUMP_FLOOR: f64 = 1e-3;
const NOISE_FACTOR: f64 = 50.0;
const TARGET_WIDTH: f64 = 1e-4;
const CLASSIFY_SPACING: f64 = 2e-3;

/// A jump in `∂_s^{order-1} x*` across `bracket`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub s_cr: f64,
    /// Ehrenfest order: the lowest derivative of `J` that jumps.
    pub order: usize,
    /// Right minus left limit of `∂_s^{order-1} x*`.
    pub jump: f64,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteepnessReport {
    pub boundary_s: f64,
    /// Limit of `x*` at the boundary; NaN when there is no boundary.
    pub boundary_slope: f64,
    pub steep: bool,
    pub note: String,
}

/// Derivatives `0..orders` at `at` of the degree-5 and degree-4 least-squares
/// fits through `(xs, ys)`.
fn fit_derivatives(xs: &[f64], ys: &[f64], at: f64, orders: usize) -> (Vec<f64>, Vec<f64>) {
    let center = xs.iter().sum::<f64>() / xs.len() as f64;
    let scale = xs
        .iter()
        .map(|x| (x - center).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let hi = polyfit(xs, ys, 5, center, scale);
    let lo = polyfit(xs, ys, 4, center, scale);
    let t = (at - center) / scale;
    let d = |c: &[f64]| -> Vec<f64> {
        (0..orders)
            .map(|k| poly_derivative(c, k, t) / scale.powi(k as i32))
            .collect()
    };
    (d(&hi), d(&lo))
}

fn poly_derivative(c: &[f64], k: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for (n, &cn) in c.iter().enumerate().skip(k).rev() {
        let falling: f64 = (0..k).map(|j| (n - j) as f64).product();
        acc = acc * t + cn * falling;
    }
    acc
}

struct Scan {
    /// index of the interval's left node
    index: usize,
    /// largest ratio of jump to threshold
    score: f64,
}

/// Flag intervals of `(s, x)` where one-sided fits disagree.
fn scan(s: &[f64], x: &[f64], orders: usize) -> Vec<Scan> {
    let n = s.len();
    let mut out = Vec::new();
    if n < 2 * FIT_POINTS {
        return out;
    }
    for i in FIT_POINTS - 1..n - FIT_POINTS {
        let mid = 0.5 * (s[i] + s[i + 1]);
        let l = i + 1 - FIT_POINTS..i + 1;
        let r = i + 1..i + 1 + FIT_POINTS;
        let (l5, l4) = fit_derivatives(&s[l.clone()], &x[l], mid, orders);
        let (r5, r4) = fit_derivatives(&s[r.clone()], &x[r], mid, orders);
        let mut score: f64 = 0.0;
        for k in 0..orders {
            let noise = (l5[k] - l4[k]).abs().max((r5[k] - r4[k]).abs());
            let threshold = JUMP_FLOOR.max(NOISE_FACTOR * noise);
            score = score.max((r5[k] - l5[k]).abs() / threshold);
        }
        if score > 1.0 {
            out.push(Scan { index: i, score });
        }
    }
    out
}

/// Locate and classify jumps in the derivatives of `x*(s)` up to order
/// `max_order - 1` (transitions of Ehrenfest order up to `max_order`).
pub fn detect_transitions(curve: &DualityCurve, max_order: usize) -> Vec<CriticalPoint> {
    let orders = max_order.max(1);
    let (s, x): (Vec<f64>, Vec<f64>) = curve
        .s_grid()
        .iter()
        .zip(curve.x_values())
        .zip(curve.is_base())
        .filter(|(_, &b)| b)
        .map(|((&s, &x), _)| (s, x))
        .unzip();
    let flags = scan(&s, &x, orders);

    // group neighbouring flags into candidates
    let mut groups: Vec<Vec<&Scan>> = Vec::new();
    for f in &flags {
        match groups.last_mut() {
            Some(g) if f.index - g.last().expect("nonempty").index <= FIT_POINTS => g.push(f),
            _ => groups.push(vec![f]),
        }
    }

    let mut out: Vec<CriticalPoint> = Vec::new();
    for g in groups {
        let lo = s[g[0].index.saturating_sub(1)];
        let hi = s[(g.last().expect("nonempty").index + 2).min(s.len() - 1)];
        let best = g
            .iter()
            .max_by(|a, b| a.score.total_cmp(&b.score))
            .expect("nonempty");
        let bracket = curve
            .kinks()
            .iter()
            .find(|&&(a, b)| a >= lo && b <= hi)
            .copied()
            .or_else(|| zoom(curve, s[best.index], s[best.index + 1], orders));
        let Some(bracket) = bracket else { continue };
        if let Some(cp) = classify(curve, bracket, orders) {
            if !out.iter().any(|c| (c.s_cr - cp.s_cr).abs() < TARGET_WIDTH) {
                out.push(cp);
            }
        }
    }
    out
}

/// Narrow a flagged interval by rescanning on finer local grids; `None` if
/// the flag disappears.
fn zoom(curve: &DualityCurve, mut a: f64, mut b: f64, orders: usize) -> Option<(f64, f64)> {
    let per_side = FIT_POINTS + 2;
    for _ in 0..40 {
        if b - a <= TARGET_WIDTH {
            return Some((a, b));
        }
        let h = (b - a) / 4.0;
        let start = a - per_side as f64 * h;
        let grid: Vec<f64> = (0..=2 * per_side + 4)
            .map(|k| start + k as f64 * h)
            .collect();
        let xs: Option<Vec<f64>> = grid.iter().map(|&t| curve.x_star(t).ok()).collect();
        let xs = xs?;
        let flags = scan(&grid, &xs, orders);
        let best = flags.iter().max_by(|p, q| p.score.total_cmp(&q.score))?;
        a = grid[best.index];
        b = grid[best.index + 1];
    }
    None
}

/// Order and jump from one-sided fits on either side of the bracket.
fn classify(curve: &DualityCurve, bracket: (f64, f64), orders: usize) -> Option<CriticalPoint> {
    let (lo, hi) = bracket;
    let mid = 0.5 * (lo + hi);
    let mut delta = CLASSIFY_SPACING;
    for _ in 0..8 {
        let left: Vec<f64> = (0..FIT_POINTS).map(|j| lo - j as f64 * delta).collect();
        let right: Vec<f64> = (0..FIT_POINTS).map(|j| hi + j as f64 * delta).collect();
        let xl: Option<Vec<f64>> = left.iter().map(|&t| curve.x_star(t).ok()).collect();
        let xr: Option<Vec<f64>> = right.iter().map(|&t| curve.x_star(t).ok()).collect();
        let (Some(xl), Some(xr)) = (xl, xr) else {
            delta *= 0.5;
            continue;
        };
        let (l5, l4) = fit_derivatives(&left, &xl, mid, orders);
        let (r5, r4) = fit_derivatives(&right, &xr, mid, orders);
        for k in 0..orders {
            let noise = (l5[k] - l4[k]).abs().max((r5[k] - r4[k]).abs());
            let jump = r5[k] - l5[k];
            if jump.abs() > JUMP_FLOOR.max(NOISE_FACTOR * noise) {
                return Some(CriticalPoint {
                    s_cr: mid,
                    order: k + 1,
                    jump,
                    bracket,
                });
            }
        }
        return None;
    }
    None
}

/// Behaviour of `x*` towards each domain boundary of the curve.
pub fn check_steepness(curve: &DualityCurve) -> Vec<SteepnessReport> {
    let mut out = Vec::new();
    let n = curve.len();
    let ends = [
        (curve.lower_flag(), 0usize, 1.0, "lower"),
        (curve.upper_flag(), n - 1, -1.0, "upper"),
    ];
    for (flag, idx, inward, side) in ends {
        if flag == BoundaryFlag::Interior {
            continue;
        }
        let s_b = curve.s_grid()[idx];
        let x_b = curve.x_values()[idx];
        let span = (curve.s_grid()[curve.origin()] - s_b).abs().max(1e-6);
        let mut largest = x_b.abs();
        let mut d = 0.5 * span;
        while d > 1e-13 * (1.0 + s_b.abs()) {
            if let Ok(x) = curve.x_star(s_b + inward * d) {
                largest = largest.max(x.abs());
            }
            d *= 0.25;
        }
        let steep = largest > 1e6 || !x_b.is_finite();
        let note = if steep {
            format!("x*(s) diverges towards the {side} boundary s = {s_b}; J is steep there")
        } else {
            let range = if inward > 0.0 {
                format!("x <= {x_b}")
            } else {
                format!("x >= {x_b}")
            };
            format!(
                "x*(s) stays bounded (C = {x_b}) towards the {side} boundary s = {s_b}: \
                 Psi is only reconstructed for {range}; a failure of the steepness condition \
                 may correspond to a 'change of speed' in the LDP"
            )
        };
        out.push(SteepnessReport {
            boundary_s: s_b,
            boundary_slope: x_b,
            steep,
            note,
        });
    }
    if out.is_empty() {
        let walls = curve.potential().walls();
        let mut note = "no domain boundary inside the computed range; steep by default".to_string();
        if let (Some(a), Some(b)) = (walls.lower().finite(), walls.upper().finite()) {
            let f = curve.statistic().polynomial();
            let (lo, hi) = (0..=4000)
                .map(|k| f.eval(a + (b - a) * k as f64 / 4000.0))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                    (l.min(v), h.max(v))
                });
            note.push_str(&format!(
                "; the statistic is bounded ({lo:.6} <= F <= {hi:.6}) by the walls, so x*(s) \
                 stays bounded while the domain of J is the whole real line"
            ));
        }
        out.push(SteepnessReport {
            boundary_s: f64::NAN,
            boundary_slope: f64::NAN,
            steep: true,
            note,
        });
    }
    out
}

/// Mark ends whose report is non-steep.
pub fn apply_steepness(curve: &mut DualityCurve, reports: &[SteepnessReport]) {
    let mut lower = curve.lower_flag();
    let mut upper = curve.upper_flag();
    let s = curve.s_grid();
    for r in reports.iter().filter(|r| !r.steep) {
        if r.boundary_s == s[0] {
            lower = BoundaryFlag::NonSteepBoundary;
        }
        if r.boundary_s == s[s.len() - 1] {
            upper = BoundaryFlag::NonSteepBoundary;
        }
    }
    curve.set_flags(lower, upper);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::build_curve;
    use crate::model::{ConfinementPotential, LinearStatistic, Polynomial, Walls};

    fn box_curve(lo: f64, hi: f64, n: usize) -> DualityCurve {
        build_curve(
            &ConfinementPotential::hard_box(-1.0, 1.0).unwrap(),
            &LinearStatistic::power(1).unwrap(),
            lo,
            hi,
            n,
        )
        .unwrap()
    }

    #[test]
    fn poly_derivative_matches_hand_values() {
        // 1 + 2t + 3t²
        let c = [1.0, 2.0, 3.0];
        assert_eq!(poly_derivative(&c, 0, 2.0), 17.0);
        assert_eq!(poly_derivative(&c, 1, 2.0), 14.0);
        assert_eq!(poly_derivative(&c, 2, 2.0), 6.0);
        assert_eq!(poly_derivative(&c, 3, 2.0), 0.0);
    }

    #[test]
    fn box_gas_third_order_at_plus_minus_one() {
        let c = box_curve(-3.0, 3.0, 801);
        let cps = detect_transitions(&c, 4);
        assert_eq!(cps.len(), 2, "{cps:?}");
        for (cp, target) in cps.iter().zip([-1.0, 1.0]) {
            assert_eq!(cp.order, 3);
            assert!(cp.bracket.0 <= target && target <= cp.bracket.1);
            assert!(cp.bracket.1 - cp.bracket.0 <= 1e-4);
        }
        // x'' goes from 0 to 1/s³ at s = 1 and from -1/|s|³ to 0 at s = -1
        assert!((cps[1].jump - 1.0).abs() < 1e-2, "{}", cps[1].jump);
        assert!((cps[0].jump - 1.0).abs() < 1e-2, "{}", cps[0].jump);
    }

    #[test]
    fn smooth_segment_has_no_transitions() {
        let c = box_curve(-0.9, 0.9, 361);
        assert!(detect_transitions(&c, 4).is_empty());
    }

    #[test]
    fn gaussian_shift_statistic_is_analytic() {
        let v =
            ConfinementPotential::new(Polynomial::new(vec![0.0, 0.0, 0.25]), Walls::unbounded())
                .unwrap();
        let c = build_curve(&v, &LinearStatistic::power(1).unwrap(), -3.0, 3.0, 301).unwrap();
        for (s, x) in c.s_grid().iter().zip(c.x_values()) {
            assert!((x + 2.0 * s).abs() < 1e-12);
        }
        assert!(detect_transitions(&c, 4).is_empty());
    }

    #[test]
    fn quartic_non_steep_boundary() {
        let v =
            ConfinementPotential::new(Polynomial::new(vec![0.0, 0.0, 0.25]), Walls::unbounded())
                .unwrap();
        let mut c = build_curve(&v, &LinearStatistic::power(4).unwrap(), -0.05, 1.0, 421).unwrap();
        assert!(detect_transitions(&c, 4).is_empty());
        let reports = check_steepness(&c);
        assert_eq!(reports.len(), 1);
        assert!(!reports[0].steep);
        assert!((reports[0].boundary_slope - 4.0).abs() < 1e-3);
        assert!(reports[0].note.contains("change of speed"));
        apply_steepness(&mut c, &reports);
        assert_eq!(c.lower_flag(), BoundaryFlag::NonSteepBoundary);
    }

    #[test]
    fn box_gas_is_steep_by_default() {
        let r = check_steepness(&box_curve(-3.0, 3.0, 101));
        assert_eq!(r.len(), 1);
        assert!(r[0].steep);
        assert!(r[0].note.contains("bounded"));
    }
}
