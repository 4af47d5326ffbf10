//! Integer lattice helpers: row-style Hermite normal form with its unimodular
//! transform, and saturated integer kernels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn to_int_matrix(a: &[Vec<i64>]) -> IntMatrix {
    a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

pub fn identity(m: usize) -> IntMatrix {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn transpose(a: &[Vec<BigInt>], ncols: usize) -> IntMatrix {
    (0..ncols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_vec(a: &[Vec<BigInt>], v: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|r| r.iter().zip(v).fold(BigInt::zero(), |acc, (x, y)| acc + x * y))
        .collect()
}

/// u^T A
pub fn vec_mat(u: &[BigInt], a: &[Vec<BigInt>], ncols: usize) -> Vec<BigInt> {
    (0..ncols)
        .map(|j| u.iter().zip(a).fold(BigInt::zero(), |acc, (x, r)| acc + x * &r[j]))
        .collect()
}

fn row_axpy(rows: &mut [Vec<BigInt>], dst: usize, src: usize, k: &BigInt) {
    if k.is_zero() {
        return;
    }
    let s = rows[src].clone();
    for (x, y) in rows[dst].iter_mut().zip(&s) {
        *x -= k * y;
    }
}

/// Row-style Hermite normal form H = U A with U unimodular. Pivots are
/// positive and entries above each pivot are reduced into [0, pivot).
pub struct Hnf {
    pub h: IntMatrix,
    pub u: IntMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

pub fn hnf(a: &[Vec<BigInt>], ncols: usize) -> Hnf {
    let m = a.len();
    let mut h = a.to_vec();
    let mut u = identity(m);
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..ncols {
        if r == m {
            break;
        }
        // Euclid on column c among rows r..m until one non-zero remains
        loop {
            let nz: Vec<usize> = (r..m).filter(|&i| !h[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| h[i][c].abs()).unwrap();
            for &i in &nz {
                if i != p {
                    let k = h[i][c].div_floor(&h[p][c]);
                    row_axpy(&mut h, i, p, &k);
                    row_axpy(&mut u, i, p, &k);
                }
            }
        }
        let Some(p) = (r..m).find(|&i| !h[i][c].is_zero()) else {
            continue;
        };
        h.swap(r, p);
        u.swap(r, p);
        if h[r][c].is_negative() {
            for x in h[r].iter_mut() {
                *x = -x.clone();
            }
            for x in u[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let k = h[i][c].div_floor(&h[r][c]);
            row_axpy(&mut h, i, r, &k);
            row_axpy(&mut u, i, r, &k);
        }
        pivots.push(c);
        r += 1;
    }
    Hnf { h, u, rank: r, pivots }
}

/// Saturated basis of {u in Z^m : u^T A = 0}.
pub fn left_kernel(a: &[Vec<BigInt>], ncols: usize) -> IntMatrix {
    let res = hnf(a, ncols);
    res.u[res.rank..].to_vec()
}

/// Saturated basis of {v in Z^n : A v = 0}.
pub fn right_kernel(a: &[Vec<BigInt>], ncols: usize) -> IntMatrix {
    let t = transpose(a, ncols);
    left_kernel(&t, a.len())
}

/// Solve x . rows = target over GF(2): returns coefficients c with
/// sum_i c_i rows_i = target (mod 2), if any.
pub fn solve_mod2(rows: &[Vec<u8>], target: &[u8]) -> Option<Vec<u8>> {
    let k = rows.len();
    let m = target.len();
    // columns are the rows; augmented system M c = t with M = rows^T
    let mut aug: Vec<Vec<u8>> = (0..m)
        .map(|j| {
            let mut r: Vec<u8> = rows.iter().map(|row| row[j] & 1).collect();
            r.push(target[j] & 1);
            r
        })
        .collect();
    let mut piv = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..m).find(|&i| aug[i][c] == 1) else {
            continue;
        };
        aug.swap(r, p);
        for i in 0..m {
            if i != r && aug[i][c] == 1 {
                let src = aug[r].clone();
                for (x, y) in aug[i].iter_mut().zip(&src) {
                    *x ^= y;
                }
            }
        }
        piv.push(c);
        r += 1;
    }
    if aug[r..].iter().any(|row| row[k] == 1) {
        return None;
    }
    let mut c = vec![0u8; k];
    for (i, &pc) in piv.iter().enumerate() {
        c[pc] = aug[i][k];
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_kernel_annihilates_and_is_saturated() {
        let a = to_int_matrix(&[vec![2, 0], vec![0, 2], vec![2, 2], vec![1, 1]]);
        let k = left_kernel(&a, 2);
        assert_eq!(k.len(), 2);
        for u in &k {
            assert!(vec_mat(u, &a, 2).iter().all(|x| x.is_zero()));
        }
        // saturation: the gcd of maximal minors of the basis is 1; check the
        // known primitive vector (0,0,1,-2) lies in the integer span
        let target = [BigInt::from(0), BigInt::from(0), BigInt::from(1), BigInt::from(-2)];
        let hk = hnf(&k, 4);
        // reduce target by hk rows
        let mut t = target.to_vec();
        for (row, &pc) in hk.h.iter().zip(&hk.pivots) {
            let q = t[pc].div_floor(&row[pc]);
            for (x, y) in t.iter_mut().zip(row) {
                *x -= &q * y;
            }
        }
        assert!(t.iter().all(|x| x.is_zero()), "{t:?}");
    }

    #[test]
    fn hnf_is_unimodular_transform() {
        let a = to_int_matrix(&[vec![4, 6], vec![6, 9], vec![2, 5]]);
        let r = hnf(&a, 2);
        for (i, hr) in r.h.iter().enumerate() {
            assert_eq!(*hr, vec_mat(&r.u[i], &a, 2));
        }
    }

    #[test]
    fn gf2_solve() {
        let rows = vec![vec![1, 1, 0], vec![0, 1, 1]];
        assert_eq!(solve_mod2(&rows, &[1, 0, 1]), Some(vec![1, 1]));
        assert!(solve_mod2(&rows, &[1, 0, 0]).is_none());
    }
}
