//! Derivative-free simplex descent with a multi-start driver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub ftol: f64,
    pub xtol: f64,
    pub max_evals: usize,
    pub initial_step: f64,
    /// simplex rebuilds around the incumbent after convergence
    pub polish_rounds: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { ftol: 1e-10, xtol: 1e-9, max_evals: 20_000, initial_step: 0.5, polish_rounds: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
}

fn simplex_around(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut s = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        s.push(v);
    }
    s
}

fn one_pass<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, opts: &NmOptions, budget: usize) -> NmResult {
    let n = x0.len();
    if n == 0 {
        return NmResult { x: vec![], fx: f(x0), evals: 1 };
    }
    let mut pts = simplex_around(x0, step);
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals < budget {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]).abs();
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.ftol * (1.0 + vals[0].abs()) && size <= opts.xtol {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let toward = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (pts[n][k] - centroid[k])).collect() };

        let xr = toward(-alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = toward(-gamma);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = toward(-rho);
            let v = f(&x);
            (x, v)
        } else {
            let x = toward(rho);
            let v = f(&x);
            (x, v)
        };
        evals += 1;
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            pts[i] = (0..n).map(|k| pts[0][k] + sigma * (pts[i][k] - pts[0][k])).collect();
            vals[i] = f(&pts[i]);
        }
        evals += n;
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    NmResult { x: pts[best].clone(), fx: vals[best], evals }
}

/// Minimize f from x0.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &NmOptions) -> NmResult {
    let mut res = one_pass(f, x0, opts.initial_step, opts, opts.max_evals);
    let mut evals = res.evals;
    let mut step = opts.initial_step * 0.1;
    for _ in 0..opts.polish_rounds {
        if evals >= opts.max_evals {
            break;
        }
        let next = one_pass(f, &res.x, step, opts, opts.max_evals - evals);
        evals += next.evals;
        let gain = res.fx - next.fx;
        if next.fx < res.fx {
            res = next;
        }
        if gain <= opts.ftol * (1.0 + res.fx.abs()) {
            break;
        }
        step *= 0.1;
    }
    res.evals = evals;
    res
}

#[derive(Debug, Clone)]
pub struct MultiStart {
    pub best: NmResult,
    /// best value of each restart, in schedule order
    pub per_restart: Vec<f64>,
}

impl MultiStart {
    /// Restarts whose value is within tol of the best.
    pub fn agreeing(&self, tol: f64) -> usize {
        self.per_restart.iter().filter(|&&v| (v - self.best.fx).abs() <= tol).count()
    }
}

/// Starting points drawn uniformly from [lo, hi)^dim with a fixed-seed stream;
/// restart i uses the same point whatever the total count.
pub fn start_points(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.gen_range(lo..hi)).collect()).collect()
}

/// Minimize from every start in parallel; ties go to the earliest restart.
pub fn multi_start<F: Fn(&[f64]) -> f64 + Sync>(f: &F, starts: &[Vec<f64>], opts: &NmOptions) -> MultiStart {
    let results: Vec<NmResult> = starts.par_iter().map(|x0| minimize(f, x0, opts)).collect();
    let per_restart = results.iter().map(|r| r.fx).collect();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.fx < a.fx { b } else { a })
        .expect("at least one restart");
    MultiStart { best, per_restart }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(&f, &[-1.2, 1.0], &NmOptions::default());
        assert!(r.fx < 1e-12, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn multi_start_finds_global() {
        // two wells; the deeper one at x=2
        let f = |x: &[f64]| (x[0] + 1.0).powi(2) * (x[0] - 2.0).powi(2) - 0.5 * x[0];
        let starts = start_points(1, 8, -3.0, 3.0, 1);
        let m = multi_start(&f, &starts, &NmOptions::default());
        assert!(m.best.x[0] > 1.5);
        assert!(m.agreeing(1e-8) >= 1);
    }

    #[test]
    fn schedule_is_prefix_stable() {
        let a = start_points(3, 4, 0.0, 1.0, 9);
        let b = start_points(3, 10, 0.0, 1.0, 9);
        assert_eq!(a[..], b[..4]);
    }
}
