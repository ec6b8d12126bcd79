//! Finite-difference weights on arbitrary nodes and small polynomial helpers.

/// Fornberg's recursion: weights `w[m][j]` such that
/// `f^{(m)}(z) ≈ Σ_j w[m][j] f(x_j)` for `m = 0..=max_order`.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Picks up to `width` consecutive indices from `[lo, hi]` centred on `i`.
pub fn stencil_window(i: usize, lo: usize, hi: usize, width: usize) -> (usize, usize) {
    let avail = hi - lo + 1;
    let w = width.min(avail);
    let half = w / 2;
    let mut start = i.saturating_sub(half).max(lo);
    if start + w - 1 > hi {
        start = hi + 1 - w;
    }
    (start, start + w - 1)
}

/// Solves a small dense system in place (partial pivoting). Returns `None`
/// for a singular matrix.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Second derivative at `tau = 0` of the polynomial matching values and
/// first derivatives at the given offsets (Hermite fit, degree `2n - 1`).
pub fn hermite_second_derivative(offsets: &[f64], values: &[f64], slopes: &[f64]) -> Option<f64> {
    let n = offsets.len();
    let scale = offsets
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let deg = 2 * n;
    let mut a = Vec::with_capacity(deg);
    let mut b = Vec::with_capacity(deg);
    for k in 0..n {
        let x = offsets[k] / scale;
        let mut row = vec![0.0; deg];
        let mut p = 1.0;
        for r in row.iter_mut() {
            *r = p;
            p *= x;
        }
        a.push(row);
        b.push(values[k]);
        let mut drow = vec![0.0; deg];
        let mut p = 1.0;
        for (j, r) in drow.iter_mut().enumerate().skip(1) {
            *r = j as f64 * p;
            p *= x;
        }
        a.push(drow);
        b.push(slopes[k] * scale);
    }
    let coef = solve_dense(a, b)?;
    Some(2.0 * coef[2] / (scale * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_polynomials() {
        let x = [-0.3, -0.1, 0.0, 0.15, 0.4];
        let w = fornberg_weights(0.0, &x, 2);
        let f = |t: f64| 1.0 + 2.0 * t - 3.0 * t * t + t.powi(4);
        let d1: f64 = x.iter().zip(&w[1]).map(|(t, c)| c * f(*t)).sum();
        let d2: f64 = x.iter().zip(&w[2]).map(|(t, c)| c * f(*t)).sum();
        assert!((d1 - 2.0).abs() < 1e-10);
        assert!((d2 + 6.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_fit_second_derivative() {
        let f = |t: f64| t.exp();
        let offs = [-0.01, 0.0, 0.01];
        let v: Vec<f64> = offs.iter().map(|&t| f(t)).collect();
        let d = v.clone();
        let d2 = hermite_second_derivative(&offs, &v, &d).unwrap();
        assert!((d2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn window_clamps() {
        assert_eq!(stencil_window(0, 0, 10, 5), (0, 4));
        assert_eq!(stencil_window(10, 0, 10, 5), (6, 10));
        assert_eq!(stencil_window(5, 0, 10, 5), (3, 7));
        assert_eq!(stencil_window(1, 0, 2, 5), (0, 2));
    }
}
