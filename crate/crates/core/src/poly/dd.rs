//! Double description on integer data: extreme rays of {y : A y >= 0} for a
//! matrix A of full column rank.
//!
//! Rays are kept as primitive integer vectors. The arithmetic is generic so the
//! same code runs on checked `i128` (fast path) and on `BigInt` (fallback when
//! an intermediate product overflows).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::rat::{self, Q};

pub(crate) trait Num: Clone + Send + Sync + Ord + std::fmt::Debug {
    fn zero() -> Self;
    fn from_big(x: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn sign(&self) -> i8;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn add(&self, o: &Self) -> Option<Self>;
    fn gcd(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_one(&self) -> bool;
}

impl Num for i128 {
    fn zero() -> Self {
        0
    }
    fn from_big(x: &BigInt) -> Option<Self> {
        x.to_i128()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn sign(&self) -> i8 {
        self.signum() as i8
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_one(&self) -> bool {
        *self == 1
    }
}

impl Num for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_big(x: &BigInt) -> Option<Self> {
        Some(x.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn sign(&self) -> i8 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
}

#[derive(Debug)]
pub(crate) enum DdError {
    Overflow,
    Cap { rays: usize, rows_done: usize, rows: usize },
}

#[derive(Clone, Debug)]
struct Ray<T> {
    v: Vec<T>,
    zeros: Vec<u64>,
}

fn dot<T: Num>(a: &[T], b: &[T]) -> Option<T> {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc.add(&x.mul(y)?)?;
    }
    Some(acc)
}

fn make_primitive<T: Num>(v: &mut [T]) {
    let mut g = T::zero();
    for x in v.iter() {
        g = g.gcd(x);
        if g.is_one() {
            return;
        }
    }
    if g.sign() == 0 {
        return;
    }
    for x in v.iter_mut() {
        *x = x.div(&g);
    }
}

#[inline]
fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

#[inline]
fn popcount(a: &[u64]) -> u32 {
    a.iter().map(|x| x.count_ones()).sum()
}

pub(crate) struct OutRay {
    pub v: Vec<BigInt>,
}

/// Extreme rays of {y : rows * y >= 0}. `order` lists row indices; its first
/// `dim` entries must be linearly independent.
fn run<T: Num>(rows: &[Vec<BigInt>], order: &[usize], dim: usize, cap: usize) -> Result<Vec<OutRay>, DdError> {
    let m = rows.len();
    let words = m.div_ceil(64);
    let a: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().map(|x| T::from_big(x).ok_or(DdError::Overflow)).collect())
        .collect::<Result<_, _>>()?;

    // Initial simplicial cone: columns of the inverse of the basis block.
    let basis = &order[..dim];
    let block: Vec<Vec<Q>> = basis
        .iter()
        .map(|&i| rows[i].iter().map(|x| Q::from_integer(x.clone())).collect())
        .collect();
    let mut rays: Vec<Ray<T>> = Vec::with_capacity(dim);
    for col in 0..dim {
        let mut e = vec![Q::zero(); dim];
        e[col] = Q::one();
        let sol = rat::solve(&block, &e).expect("basis rows are independent");
        let mut v: Vec<T> = rat::primitive(&sol)
            .iter()
            .map(|x| T::from_big(x).ok_or(DdError::Overflow))
            .collect::<Result<_, _>>()?;
        make_primitive(&mut v);
        let mut zeros = vec![0u64; words];
        for (k, &bi) in basis.iter().enumerate() {
            if k != col {
                zeros[bi / 64] |= 1 << (bi % 64);
            }
        }
        rays.push(Ray { v, zeros });
    }

    for (step, &j) in order.iter().enumerate().skip(dim) {
        let row = &a[j];
        let vals: Vec<T> = rays
            .par_iter()
            .map(|r| dot(row, &r.v).ok_or(DdError::Overflow))
            .collect::<Result<_, _>>()?;
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].sign() > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].sign() < 0).collect();
        if neg.is_empty() {
            for (i, r) in rays.iter_mut().enumerate() {
                if vals[i].sign() == 0 {
                    r.zeros[j / 64] |= 1 << (j % 64);
                }
            }
            continue;
        }
        let need = dim.saturating_sub(2) as u32;
        let all_zeros: Vec<&[u64]> = rays.iter().map(|r| r.zeros.as_slice()).collect();
        let new_rays: Vec<Ray<T>> = pos
            .par_iter()
            .map(|&p| -> Result<Vec<Ray<T>>, DdError> {
                let mut out = Vec::new();
                let mut inter = vec![0u64; words];
                for &q in &neg {
                    for w in 0..words {
                        inter[w] = all_zeros[p][w] & all_zeros[q][w];
                    }
                    if popcount(&inter) < need {
                        continue;
                    }
                    let blocked = all_zeros
                        .iter()
                        .enumerate()
                        .any(|(k, z)| k != p && k != q && subset(&inter, z));
                    if blocked {
                        continue;
                    }
                    // vals[p] > 0 > vals[q]; combine so the new ray is tight on row j
                    let cp = vals[p].clone();
                    let cq = vals[q].neg();
                    let mut v = Vec::with_capacity(dim);
                    for k in 0..dim {
                        let x = cp.mul(&rays[q].v[k]).ok_or(DdError::Overflow)?;
                        let y = cq.mul(&rays[p].v[k]).ok_or(DdError::Overflow)?;
                        v.push(x.add(&y).ok_or(DdError::Overflow)?);
                    }
                    make_primitive(&mut v);
                    let mut zeros = inter.clone();
                    zeros[j / 64] |= 1 << (j % 64);
                    out.push(Ray { v, zeros });
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut next: Vec<Ray<T>> = Vec::with_capacity(pos.len() + new_rays.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            match vals[i].sign() {
                1 => next.push(r),
                0 => {
                    r.zeros[j / 64] |= 1 << (j % 64);
                    next.push(r);
                }
                _ => {}
            }
        }
        next.extend(new_rays);
        rays = next;
        if rays.len() > cap {
            return Err(DdError::Cap {
                rays: rays.len(),
                rows_done: step + 1,
                rows: m,
            });
        }
    }

    let mut out: Vec<OutRay> = rays
        .into_iter()
        .map(|r| OutRay {
            v: r.v.iter().map(|x| x.to_big()).collect(),
        })
        .collect();
    out.sort_by(|x, y| x.v.cmp(&y.v));
    Ok(out)
}

/// Greedy row order: the first `dim` independent rows in the given order, then
/// the rest in the given order. Returns None if rank < dim.
fn basis_first(rows: &[Vec<BigInt>], dim: usize) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut echelon: Vec<Vec<Q>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if chosen.len() == dim {
            break;
        }
        let mut trial = echelon.clone();
        trial.push(r.iter().map(|x| Q::from_integer(x.clone())).collect());
        if rat::rank(&trial) > echelon.len() {
            echelon = trial;
            chosen.push(i);
        }
    }
    if chosen.len() < dim {
        return None;
    }
    let mut order = chosen.clone();
    order.extend((0..rows.len()).filter(|i| !chosen.contains(i)));
    Some(order)
}

/// Extreme rays of the pointed cone {y : rows * y >= 0}.
pub(crate) fn extreme_rays(rows: &[Vec<BigInt>], cap: usize) -> Result<Vec<OutRay>, DdError> {
    let dim = rows.first().map_or(0, |r| r.len());
    let order = basis_first(rows, dim).expect("constraint matrix must have full column rank");
    match run::<i128>(rows, &order, dim, cap) {
        Err(DdError::Overflow) => run::<BigInt>(rows, &order, dim, cap),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn square_cone() {
        // homogenized unit square: (1, x, y) with x, y in {0,1} vertices
        let rows = vec![b(&[1, 0, 0]), b(&[1, 1, 0]), b(&[1, 0, 1]), b(&[1, 1, 1])];
        let rays = extreme_rays(&rows, 1000).unwrap();
        assert_eq!(rays.len(), 4);
        for r in &rays {
            let zeros = rows.iter().filter(|row| row.iter().zip(&r.v).map(|(a, b)| a * b).sum::<BigInt>().is_zero()).count();
            assert_eq!(zeros, 2);
        }
    }

    #[test]
    fn bigint_path_agrees() {
        let rows = vec![b(&[1, 0, 0]), b(&[1, 1, 0]), b(&[1, 0, 1]), b(&[1, 1, 1]), b(&[2, 1, 1])];
        let order = basis_first(&rows, 3).unwrap();
        let x = run::<i128>(&rows, &order, 3, 1000).unwrap();
        let y = run::<BigInt>(&rows, &order, 3, 1000).unwrap();
        assert_eq!(x.iter().map(|r| r.v.clone()).collect::<Vec<_>>(), y.iter().map(|r| r.v.clone()).collect::<Vec<_>>());
    }
}
