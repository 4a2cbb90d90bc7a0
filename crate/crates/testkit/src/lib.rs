//! Independent reference computations used by the test suites.
//!
//! Nothing here shares code with the library under test: the oracles are
//! deliberately brute-force or closed-form.

use std::f64::consts::PI;

/// First zero of the Bessel function J₀.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Fixed-step RK4 shooting for `ψ'' = (V − E) ψ` on the 1D double square
/// well, returning `(ψ(0), ψ'(0))` after launching from the left hard wall.
/// Even levels zero `ψ'(0)`, odd levels zero `ψ(0)`.
pub fn shoot_1d(l: f64, d: f64, vb: f64, energy: f64, step: f64) -> (f64, f64) {
    let half = 0.5 * d;
    let mut y = [0.0, 1.0];
    let mut integrate = |length: f64, v: f64| {
        let n = (length / step).round().max(1.0) as usize;
        let dx = length / n as f64;
        let c = v - energy;
        for _ in 0..n {
            let f = |s: [f64; 2]| [s[1], c * s[0]];
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * dx * k1[0], y[1] + 0.5 * dx * k1[1]]);
            let k3 = f([y[0] + 0.5 * dx * k2[0], y[1] + 0.5 * dx * k2[1]]);
            let k4 = f([y[0] + dx * k3[0], y[1] + dx * k3[1]]);
            y[0] += dx / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += dx / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        // rescale to keep evanescent growth bounded
        let m = y[0].abs().max(y[1].abs());
        y[0] /= m;
        y[1] /= m;
    };
    integrate(l, 0.0);
    integrate(half, vb);
    (y[0], y[1])
}

/// Shooting-method levels `(even, odd)` below `e_max`.
pub fn shooting_levels(l: f64, d: f64, vb: f64, e_max: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    let n_scan = ((e_max.sqrt() * l / PI) * 24.0).ceil() as usize + 8;
    let ks: Vec<f64> = (0..=n_scan).map(|i| e_max.sqrt() * i as f64 / n_scan as f64).collect();
    let vals: Vec<(f64, f64)> = ks.iter().map(|k| shoot_1d(l, d, vb, k * k, step)).collect();
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for i in 1..ks.len() {
        for (which, out) in [(1usize, &mut even), (0usize, &mut odd)] {
            let pick = |p: (f64, f64)| if which == 0 { p.0 } else { p.1 };
            let (fa, fb) = (pick(vals[i - 1]), pick(vals[i]));
            if fa == 0.0 || (fa < 0.0) == (fb < 0.0) {
                continue;
            }
            let (mut a, mut b, mut sa) = (ks[i - 1], ks[i], fa < 0.0);
            while b - a > 1e-11 * b {
                let m = 0.5 * (a + b);
                let fm = pick(shoot_1d(l, d, vb, m * m, step));
                if (fm < 0.0) == sa {
                    a = m;
                    sa = fm < 0.0;
                } else {
                    b = m;
                }
            }
            let k = 0.5 * (a + b);
            if k > 0.0 {
                out.push(k * k);
            }
        }
    }
    (even, odd)
}

/// Husimi density of the plane wave `e^{iqy}` on an infinite line, with the
/// coherent state `(πσ²)^{-1/4} exp(−(y−y₀)²/2σ² + i p y)`.
pub fn plane_wave_husimi(q: f64, p: f64, sigma: f64) -> f64 {
    2.0 * PI.sqrt() * sigma * (-(sigma * (q - p)).powi(2)).exp()
}

/// Husimi density of `exp(−(y−c)²/2s²)` on an infinite line.
pub fn gaussian_husimi(c: f64, s: f64, y0: f64, p: f64, sigma: f64) -> f64 {
    let (a, b) = (s * s, sigma * sigma);
    let sum = a + b;
    // ∫ exp(−(y−c)²/2a − (y−y₀)²/2b − i p y) dy, magnitude squared
    let mag = 2.0 * PI * a * b / sum * (-(c - y0).powi(2) / sum - p * p * a * b / sum).exp();
    mag / (PI * b).sqrt()
}

/// Spearman correlation by brute-force rank counting (ties share the mean rank).
pub fn spearman_naive(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let below = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                below + 0.5 * (equal + 1.0)
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Composite Simpson rule on `[a, b]` with `n` panels (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shooting_recovers_box_levels_for_tall_barrier() {
        // a very tall barrier decouples the wells
        let (even, odd) = shooting_levels(1.0, 0.5, 1e5, 40.0, 1e-4);
        assert_eq!(even.len(), 2);
        assert!((even[0] - PI * PI).abs() < 0.1);
        assert!((odd[0] - PI * PI).abs() < 0.1);
    }

    #[test]
    fn gaussian_husimi_peaks_at_center() {
        let at = gaussian_husimi(0.3, 0.2, 0.3, 0.0, 0.25);
        assert!(at > gaussian_husimi(0.3, 0.2, 0.5, 0.0, 0.25));
        assert!(at > gaussian_husimi(0.3, 0.2, 0.3, 1.0, 0.25));
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
