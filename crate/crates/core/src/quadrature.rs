//! Deterministic quadrature rules on intervals, boxes and the torus.
//!
//! Tensor rules are reduced row by row along the first axis and the row sums
//! are added in index order, so parallel and serial runs agree bit for bit.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Composite Simpson rule on `[a, b]` with `n` subintervals (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Tensor grid visitor: calls `f` on every node of the product of `axes`,
/// summing `weight * f(x)` per first-axis slice.
fn tensor_sum(axes: &[(Vec<f64>, Vec<f64>)], f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let d = axes.len();
    if d == 0 {
        return f(&[]);
    }
    let slice = |i0: usize| -> f64 {
        let mut x = vec![0.0; d];
        x[0] = axes[0].0[i0];
        let w0 = axes[0].1[i0];
        let mut idx = vec![0usize; d];
        let mut acc = 0.0;
        loop {
            let mut w = w0;
            for k in 1..d {
                x[k] = axes[k].0[idx[k]];
                w *= axes[k].1[idx[k]];
            }
            acc += w * f(&x);
            let mut k = d - 1;
            loop {
                if k == 0 {
                    return acc;
                }
                idx[k] += 1;
                if idx[k] < axes[k].0.len() {
                    break;
                }
                idx[k] = 0;
                k -= 1;
            }
        }
    };
    let n0 = axes[0].0.len();
    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = {
        use rayon::prelude::*;
        if n0 > 1 && axes.iter().map(|a| a.0.len()).product::<usize>() > 4096 {
            (0..n0).into_par_iter().map(slice).collect()
        } else {
            (0..n0).map(slice).collect()
        }
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = (0..n0).map(slice).collect();
    rows.iter().sum()
}

/// Periodic trapezoid rule on `[0, 2pi]^d` with `n` nodes per axis.
///
/// Exact for trigonometric polynomials of degree below `n`.
pub fn torus_integral(d: usize, n: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let h = 2.0 * PI / n as f64;
    let axis: (Vec<f64>, Vec<f64>) = ((0..n).map(|i| h * i as f64).collect(), vec![h; n]);
    let axes = vec![axis; d];
    tensor_sum(&axes, f)
}

/// Midpoint rule on `[-gamma, gamma]^d` with `n` cells per axis.
pub fn box_integral(d: usize, gamma: f64, n: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let h = 2.0 * gamma / n as f64;
    let axis: (Vec<f64>, Vec<f64>) = ((0..n).map(|i| -gamma + h * (i as f64 + 0.5)).collect(), vec![h; n]);
    let axes = vec![axis; d];
    tensor_sum(&axes, f)
}

/// `L^r` norm on `[-gamma, gamma]^d` by the midpoint rule; `r = inf` takes
/// the maximum over the `n + 1` grid nodes per axis, endpoints included.
pub fn box_lr_norm(d: usize, gamma: f64, n: usize, r: f64, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::param(format!("Lebesgue exponent must be >= 1, got {r}")));
    }
    if r.is_infinite() {
        let h = 2.0 * gamma / n as f64;
        let n = n + 1;
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        loop {
            for k in 0..d {
                x[k] = -gamma + h * idx[k] as f64;
            }
            worst = worst.max(f(&x).abs());
            let mut k = d;
            loop {
                if k == 0 {
                    return Ok(worst);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    Ok(box_integral(d, gamma, n, &|x| f(x).abs().powf(r)).powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert_relative_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-14);
        assert_relative_eq!(simpson(f64::sin, 0.0, PI, 10_000), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn torus_rule_integrates_trig_polynomials() {
        let v = torus_integral(2, 64, &|x| (x[0] + 2.0 * x[1]).sin().powi(2));
        assert_relative_eq!(v, 2.0 * PI * PI, epsilon = 1e-10);
        assert_relative_eq!(torus_integral(1, 8, &|_| 1.0), 2.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn box_rule() {
        assert_relative_eq!(box_integral(2, 1.0, 10, &|_| 1.0), 4.0, epsilon = 1e-14);
        assert_relative_eq!(box_integral(1, 1.0, 400, &|x| x[0] * x[0]), 2.0 / 3.0, epsilon = 1e-5);
        assert_relative_eq!(box_lr_norm(1, 1.0, 100, f64::INFINITY, &|x| x[0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(box_lr_norm(1, 1.0, 100, 1.0, &|_| -3.0).unwrap(), 6.0, epsilon = 1e-12);
        assert!(box_lr_norm(1, 1.0, 10, 0.5, &|_| 1.0).is_err());
    }
}
