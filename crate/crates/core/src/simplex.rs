//! Nelder–Mead minimisation with a fixed, deterministic vertex order.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub initial_step: f64,
    /// Stop once `f_max - f_min <= f_tol * (|f_min| + f_tol)` or the simplex
    /// diameter is below `x_tol`.
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { initial_step: 0.1, f_tol: 1e-12, x_tol: 1e-7, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn converged(values: &[f64], pts: &[Vec<f64>], o: &SimplexOptions) -> bool {
    let (lo, hi) = (values[0], values[values.len() - 1]);
    let f_ok = hi - lo <= o.f_tol * (lo.abs() + o.f_tol);
    let x_ok = pts[1..]
        .iter()
        .all(|p| p.iter().zip(&pts[0]).all(|(a, b)| (a - b).abs() <= o.x_tol));
    f_ok || x_ok
}

/// One Nelder–Mead run from `x0`.
fn run<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], o: &SimplexOptions) -> (SimplexResult, bool) {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += o.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;

    let order = |pts: &mut Vec<Vec<f64>>, vals: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        // stable on ties so the run is reproducible
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        *pts = idx.iter().map(|&i| pts[i].clone()).collect();
        *vals = idx.iter().map(|&i| vals[i]).collect();
    };
    order(&mut pts, &mut vals);

    while evals < o.max_evals {
        if converged(&vals, &pts, o) {
            return (SimplexResult { x: pts[0].clone(), value: vals[0], evals }, true);
        }
        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                let best = pts[0].clone();
                for i in 1..=n {
                    for (v, b) in pts[i].iter_mut().zip(&best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    vals[i] = f(&pts[i]);
                }
                evals += n;
            }
        }
        order(&mut pts, &mut vals);
    }
    (SimplexResult { x: pts[0].clone(), value: vals[0], evals }, false)
}

/// Minimise `f`, restarting once from the optimum to escape collapsed simplices.
pub(crate) fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], o: &SimplexOptions) -> Result<SimplexResult> {
    if x0.is_empty() {
        return Ok(SimplexResult { x: Vec::new(), value: f(&[]), evals: 1 });
    }
    let (first, ok) = run(&f, x0, o);
    if !ok {
        return Err(Error::ConvergenceFailure {
            iterations: first.evals,
            best_value: first.value,
            best_params: first.x,
        });
    }
    let (second, ok) = run(&f, &first.x, o);
    let evals = first.evals + second.evals;
    let best = if second.value <= first.value { second } else { first };
    if !ok {
        return Err(Error::ConvergenceFailure { iterations: evals, best_value: best.value, best_params: best.x });
    }
    Ok(SimplexResult { evals, ..best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + 3.0;
        let r = minimize(f, &[0.0, 0.0], &SimplexOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 2.0).abs() < 1e-5, "{:?}", r.x);
        assert!((r.value - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let o = SimplexOptions { initial_step: 0.5, ..Default::default() };
        let r = minimize(f, &[-1.2, 1.0], &o).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn budget_exhaustion_carries_best_iterate() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let o = SimplexOptions { max_evals: 10, ..Default::default() };
        match minimize(f, &[5.0, 5.0, 5.0], &o) {
            Err(Error::ConvergenceFailure { best_params, best_value, .. }) => {
                assert_eq!(best_params.len(), 3);
                assert!(best_value <= 75.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(4) + x[0].cos() + (x[1] * x[0]).powi(2) + x[1] * x[1];
        let a = minimize(f, &[1.0, 1.0], &SimplexOptions::default()).unwrap();
        let b = minimize(f, &[1.0, 1.0], &SimplexOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.evals, b.evals);
    }
}
