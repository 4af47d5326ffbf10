//! Cyclic Jacobi eigensolver for real symmetric matrices, and Hermitian
//! matrices through the real embedding [[A, -B], [B, A]] of A + iB.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and column eigenvectors of a symmetric matrix
/// stored row-major.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps (n={n})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b * n + b].total_cmp(&m[a * n + a]));
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let vecs = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    Ok((vals, vecs))
}

/// Eigen-decomposition of a Hermitian matrix stored row-major: eigenvalues
/// descending with orthonormal eigenvectors.
pub fn hermitian_eigen(h: &[Complex64], n: usize) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let m = 2 * n;
    let mut r = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            r[i * m + j] = z.re;
            r[(i + n) * m + j + n] = z.re;
            r[i * m + j + n] = -z.im;
            r[(i + n) * m + j] = z.im;
        }
    }
    let (vals, vecs) = symmetric_eigen(&r, m)?;
    // each complex eigenpair appears twice, as (x, y) and (-y, x)
    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (lam, w) in vals.iter().zip(&vecs) {
        if out_vecs.len() == n {
            break;
        }
        let mut z: Vec<Complex64> = (0..n).map(|k| Complex64::new(w[k], w[k + n])).collect();
        for u in &out_vecs {
            let ip: Complex64 = u.iter().zip(&z).map(|(a, b)| a.conj() * b).sum();
            for (zk, uk) in z.iter_mut().zip(u) {
                *zk -= ip * uk;
            }
        }
        let norm = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.5 {
            for x in z.iter_mut() {
                *x /= norm;
            }
            out_vals.push(*lam);
            out_vecs.push(z);
        }
    }
    if out_vecs.len() != n {
        return Err(Error::NoConvergence("could not separate complex eigenvectors".into()));
    }
    Ok((out_vals, out_vecs))
}

/// Largest eigenvalue with one eigenvector, and the dimension of its
/// eigenspace within tol.
pub fn top_eigen(h: &[Complex64], n: usize, tol: f64) -> Result<(f64, Vec<Complex64>, usize)> {
    let (vals, vecs) = hermitian_eigen(h, n)?;
    let mult = vals.iter().filter(|&&v| (vals[0] - v).abs() <= tol).count();
    Ok((vals[0], vecs[0].clone(), mult))
}
