//! Exact rank and null space over the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::model::Rational;

/// Scales a rational row by the lcm of its denominators.
pub(crate) fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
}

/// Modulus for the fast rank filter (2^61 - 1, prime).
const P: u64 = (1 << 61) - 1;

pub(crate) fn reduce_mod_p(row: &[BigInt]) -> Vec<u64> {
    let p = BigInt::from(P);
    row.iter()
        .map(|x| {
            let r = x.mod_floor(&p);
            r.to_u64().expect("residue fits in u64")
        })
        .collect()
}

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

/// Rank over GF(p). Never exceeds the rank over the rationals.
pub(crate) fn rank_mod_p(rows: &[&[u64]], ncols: usize) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.to_vec()).collect();
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let inv = pow_mod(m[rank][c], P - 2);
        let (top, bottom) = m.split_at_mut(rank + 1);
        let pivot = &top[rank];
        for row in bottom.iter_mut() {
            if row[c] == 0 {
                continue;
            }
            let f = mul_mod(row[c], inv);
            for (x, &p) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x = (*x + P - mul_mod(f, p)) % P;
            }
        }
        rank += 1;
    }
    rank
}

/// Exact rank by fraction-free (Bareiss) elimination.
pub(crate) fn rank_bareiss(rows: &[&[BigInt]], ncols: usize) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| r.to_vec()).collect();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            for j in c + 1..ncols {
                let v = &m[i][j] * &m[rank][c] - &m[i][c] * &m[rank][j];
                m[i][j] = v / &prev;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[rank][c].clone();
        rank += 1;
    }
    rank
}

/// Exact rank, using the modular rank as a shortcut when it is already maximal.
pub(crate) fn rank(int_rows: &[&[BigInt]], mod_rows: &[&[u64]], ncols: usize) -> usize {
    let upper = int_rows.len().min(ncols);
    let fast = rank_mod_p(mod_rows, ncols);
    if fast == upper {
        fast
    } else {
        rank_bareiss(int_rows, ncols)
    }
}

/// Basis of `{x : row · x = 0 for every row}`, one vector per free column of
/// the reduced row echelon form, with that free entry set to one.
pub(crate) fn null_space(rows: &[&[Rational]], ncols: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| r.to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r][c..].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }

    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); ncols];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// True when every entry is zero.
#[cfg(test)]
pub(crate) fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}
