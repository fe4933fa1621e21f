//! Small numerical kernels: Chebyshev bases, quadrature, interpolation and
//! finite-difference weights.

use std::f64::consts::PI;

/// Zeros of `T_n`, `cos(π(k + 1/2)/n)` for `k = 0..n`, in decreasing order.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (PI * (k as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// `Σ a_n T_n(x)` by Clenshaw's recurrence.
pub fn clenshaw_t(a: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in a.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    match a.first() {
        Some(&a0) => a0 + x * b1 - b2,
        None => 0.0,
    }
}

/// Coefficients of a monomial-basis polynomial in the Chebyshev-U basis.
///
/// Horner in the U basis, using `y·U_0 = U_1/2` and
/// `y·U_n = (U_{n+1} + U_{n-1})/2`.
pub fn monomial_to_cheb_u(p: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = Vec::with_capacity(p.len());
    for &c in p.iter().rev() {
        let mut next = vec![0.0; u.len() + 1];
        for (n, &un) in u.iter().enumerate() {
            next[n + 1] += 0.5 * un;
            if n >= 1 {
                next[n - 1] += 0.5 * un;
            }
        }
        next[0] += c;
        u = next;
    }
    u
}

/// Monomial coefficients of `Σ a_n T_n(y)`.
pub fn cheb_t_to_monomial(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n.max(1)];
    let mut t_prev = vec![1.0];
    let mut t_cur = vec![0.0, 1.0];
    for (k, &ak) in a.iter().enumerate() {
        let tk: &[f64] = match k {
            0 => &t_prev,
            _ => &t_cur,
        };
        for (i, &c) in tk.iter().enumerate() {
            out[i] += ak * c;
        }
        if k >= 1 {
            let mut t_next = vec![0.0; t_cur.len() + 1];
            for (i, &c) in t_cur.iter().enumerate() {
                t_next[i + 1] += 2.0 * c;
            }
            for (i, &c) in t_prev.iter().enumerate() {
                t_next[i] -= c;
            }
            t_prev = std::mem::replace(&mut t_cur, t_next);
        }
    }
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// `∫_a^b g` with an `n`-point Gauss–Legendre rule.
pub fn integrate_gl(g: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&t, &w)| w * g(mid + half * t))
        .sum::<f64>()
        * half
}

/// Weights `w` with `f^{(m)}(x0) ≈ Σ w_i f(xs_i)` (Fornberg's algorithm).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Value at `x` of the Lagrange interpolant through `(xs, ys)`.
pub fn lagrange_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                l *= (x - xj) / (xi - xj);
            }
        }
        total += l * yi;
    }
    total
}

/// Cumulative integral of tabulated data, `out[0] = 0`.
///
/// Within each smooth segment every interval is integrated exactly against
/// the local cubic through four neighbouring nodes (fewer near short
/// segments). `breaks[i] == true` marks interval `[x_i, x_{i+1}]` as a
/// bracket around a non-smooth point: it is integrated by the trapezoid rule
/// and no stencil reaches across it. Where the stencil is monotone the
/// interval integral is kept between the endpoint rectangles.
pub fn cumulative_integral(x: &[f64], y: &[f64], breaks: &[bool]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let gl2 = [-1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()];
    let mut seg_start = 0;
    let mut i = 0;
    while i + 1 < n {
        if breaks.get(i).copied().unwrap_or(false) {
            out[i + 1] = out[i] + 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
            seg_start = i + 1;
            i += 1;
            continue;
        }
        let mut seg_end = i + 1;
        while seg_end + 1 < n && !breaks.get(seg_end).copied().unwrap_or(false) {
            seg_end += 1;
        }
        let len = seg_end - seg_start + 1;
        let width = len.min(4);
        let lo = if i == 0 || i == seg_start {
            seg_start
        } else {
            (i - 1).min(seg_end + 1 - width)
        };
        let lo = lo.max(seg_start);
        let xs = &x[lo..lo + width];
        let ys = &y[lo..lo + width];
        let half = 0.5 * (x[i + 1] - x[i]);
        let mid = 0.5 * (x[i + 1] + x[i]);
        let piece: f64 = gl2
            .iter()
            .map(|&t| lagrange_eval(xs, ys, mid + half * t))
            .sum::<f64>()
            * half;
        let monotone = ys.windows(2).all(|w| w[1] >= w[0]) || ys.windows(2).all(|w| w[1] <= w[0]);
        let piece = if monotone {
            let (a, b) = (y[i] * 2.0 * half, y[i + 1] * 2.0 * half);
            piece.clamp(a.min(b), a.max(b))
        } else {
            piece
        };
        out[i + 1] = out[i] + piece;
        i += 1;
    }
    out
}

/// Cubic Hermite interpolation on `[x0, x1]`.
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Index `i` with `xs[i] <= x <= xs[i+1]`, clamped to the table.
pub fn locate(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let k = xs.partition_point(|&v| v <= x);
    k.saturating_sub(1).min(n - 2)
}

/// Piecewise-cubic Hermite interpolation with Fritsch–Carlson slopes.
/// Monotone data give a monotone interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "pchip needs >= 2 matching nodes");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip { x, y, d }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = locate(&self.x, x);
        hermite(
            self.x[i],
            self.x[i + 1],
            self.y[i],
            self.y[i + 1],
            self.d[i],
            self.d[i + 1],
            x,
        )
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }
}

fn pchip_end(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]`; `g(lo)` and `g(hi)`
/// must have opposite signs. Returns the bracket after convergence.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, g_lo: f64) -> (f64, f64) {
    let lo_neg = g_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let gm = g(mid);
        if gm.is_nan() {
            break;
        }
        if (gm < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Least-squares polynomial fit of degree `deg` in the variable
/// `(x - center)/scale`; returns ascending coefficients in that variable.
pub fn polyfit(xs: &[f64], ys: &[f64], deg: usize, center: f64, scale: f64) -> Vec<f64> {
    let m = deg + 1;
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = (x - center) / scale;
        let mut pow = vec![1.0; m];
        for k in 1..m {
            pow[k] = pow[k - 1] * t;
        }
        for r in 0..m {
            aty[r] += pow[r] * y;
            for c in 0..m {
                ata[r][c] += pow[r] * pow[c];
            }
        }
    }
    solve_dense(ata, aty)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col];
        if p == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = if a[row][row] != 0.0 {
            s / a[row][row]
        } else {
            0.0
        };
    }
    x
}

/// Median of a slice (NaN-free input).
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
