//! Browser demo: partition-of-unity lifting, sine-cube samples and the
//! error of the constructive approximant as the budget grows.
//!
//! Each exported function has a plain Rust counterpart in [`plots`] that the
//! native tests call; the wasm wrappers only convert errors.

use wasm_bindgen::prelude::*;

pub mod plots {
    use std::sync::Arc;

    use mnolab::erm::{sup_error, CubeMeasure, Measures};
    use mnolab::lipschitz::{build_cover, build_pou, lift, project, LipschitzClassSpec};
    use mnolab::operators::{kernel_operator, Domains};
    use mnolab::separable::{build_constructive, ConstructionBudget};
    use mnolab::{Error, Result, ScalarFn};

    /// `samples` evenly spaced points of `[-1, 1]`, endpoints included.
    pub fn axis(samples: usize) -> Vec<f64> {
        match samples {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
        }
    }

    fn unit_class() -> Result<LipschitzClassSpec> {
        LipschitzClassSpec::new(1, 1.0, 1.0, 1.0)
    }

    /// Element of the calibrated cube on `[-1, 1]` with coordinates `y`, sampled on [`axis`].
    pub fn cube_curve(eta: f64, y: &[f64], samples: usize) -> Result<Vec<f64>> {
        let m = CubeMeasure::calibrated(&unit_class()?, eta, y.len())?;
        let e = m.cube.element_on(y, m.gamma)?;
        Ok(axis(samples).iter().map(|&x| e.eval(&[x])).collect())
    }

    /// Bumps of the partition of unity for a `delta`-cover of `[-1, 1]`,
    /// one row of `samples` values per bump.
    pub fn pou_bumps(delta: f64, samples: usize) -> Result<Vec<f64>> {
        let pou = build_pou(build_cover(&unit_class()?, delta)?)?;
        let mut out = vec![0.0; pou.len() * samples];
        for (j, x) in axis(samples).iter().enumerate() {
            for (i, w) in pou.weights(&[*x])? {
                out[i * samples + j] = w;
            }
        }
        Ok(out)
    }

    /// A cube element followed by its lift through the `delta` partition of unity,
    /// `2 * samples` values.
    pub fn lift_curve(delta: f64, eta: f64, y: &[f64], samples: usize) -> Result<Vec<f64>> {
        let m = CubeMeasure::calibrated(&unit_class()?, eta, y.len())?;
        let e = m.cube.element_on(y, m.gamma)?;
        let pou = Arc::new(build_pou(build_cover(&unit_class()?, delta)?)?);
        let lifted = lift(project(&e, &pou.cover().centers), pou)?;
        let xs = axis(samples);
        Ok(xs.iter().map(|&x| e.eval(&[x])).chain(xs.iter().map(|&x| lifted.eval(&[x]))).collect())
    }

    /// Budget of level `k >= 1`: `P = H = k + 1`, `N = 2k + 1`, radii `1 / k`.
    pub fn level_budget(k: usize) -> ConstructionBudget {
        let r = 1.0 / k as f64;
        ConstructionBudget::parallel(k + 1, k + 1, 2 * k + 1, r, r)
    }

    /// `(complexity, sup_error)` pairs of the constructive approximant of the
    /// kernel benchmark for levels `1..=levels`.
    pub fn convergence(levels: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
        if levels == 0 || levels > 6 {
            return Err(Error::Parameter(format!("levels must lie in 1..=6, got {levels}")));
        }
        let dom = Domains::unit(1, 1, 1)?;
        let g = kernel_operator(0.25, dom, 40)?;
        let m = Measures::shifted_cubes(&dom, 2.5, 4, 0.5)?;
        let mut out = Vec::with_capacity(2 * levels);
        for k in 1..=levels {
            let approx = build_constructive(&g, level_budget(k))?;
            out.push(approx.complexity());
            out.push(sup_error(&approx, &g, &m, samples, seed)?.value);
        }
        Ok(out)
    }
}

fn js(e: mnolab::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn axis(samples: usize) -> Vec<f64> {
    plots::axis(samples)
}

#[wasm_bindgen]
pub fn cube_curve(eta: f64, y: &[f64], samples: usize) -> Result<Vec<f64>, JsError> {
    plots::cube_curve(eta, y, samples).map_err(js)
}

#[wasm_bindgen]
pub fn pou_bumps(delta: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    plots::pou_bumps(delta, samples).map_err(js)
}

#[wasm_bindgen]
pub fn lift_curve(delta: f64, eta: f64, y: &[f64], samples: usize) -> Result<Vec<f64>, JsError> {
    plots::lift_curve(delta, eta, y, samples).map_err(js)
}

#[wasm_bindgen]
pub fn convergence(levels: usize, samples: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    plots::convergence(levels, samples, seed.into()).map_err(js)
}
