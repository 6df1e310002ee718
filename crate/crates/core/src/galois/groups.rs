//! Finite-group side of the image analysis: generation of `SL_2(Z/p^2)` from
//! lifts, and Goursat decomposition of subgroups of `G x G`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::arith::sl2_order;
use crate::congruence::{enumerate_sl2_with_limit, FiniteMatrixGroup, ModMatrix, Subgroup};

use super::GaloisError;

pub const LIFTING_PRIMES: [u64; 2] = [5, 7];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftingReport {
    pub p: u64,
    pub order: usize,
    pub expected: u64,
    pub full: bool,
}

/// Standard lifts of `S` and `T` modulo `p^2`.
pub fn standard_lifts(p: u64) -> [ModMatrix; 2] {
    let m = (p * p) as u16;
    [[0, m - 1, 1, 0], [1, 1, 0, 1]]
}

/// Enumerates the subgroup of `SL_2(Z/p^2)` generated by `gens` and reports
/// whether it is everything. The generators must reduce to a generating set
/// of `SL_2(F_p)`.
pub fn lifting_check(p: u64, gens: &[ModMatrix]) -> Result<LiftingReport, GaloisError> {
    if !LIFTING_PRIMES.contains(&p) {
        return Err(GaloisError::UnsupportedPrime(p));
    }
    let m = p * p;
    for g in gens {
        let [a, b, c, d] = g.map(|v| v as i64);
        if (a * d - b * c - 1).rem_euclid(m as i64) != 0 {
            return Err(GaloisError::BadDeterminant);
        }
    }
    let small = enumerate_sl2_with_limit(p, p).map_err(GaloisError::Level)?;
    let reduced: Vec<ModMatrix> = gens.iter().map(|g| g.map(|v| v % p as u16)).collect();
    let h = Subgroup::generated(&small, &reduced);
    if h.order() != small.order() {
        return Err(GaloisError::NotGeneratingModP { mod_p_order: h.order() });
    }
    let big = enumerate_sl2_with_limit(m, m).map_err(GaloisError::Level)?;
    let lifted: Vec<ModMatrix> = gens.iter().map(|g| g.map(|v| v % m as u16)).collect();
    let h = Subgroup::generated(&big, &lifted);
    let expected = sl2_order(m);
    Ok(LiftingReport {
        p,
        order: h.order(),
        expected,
        full: h.order() as u64 == expected,
    })
}

/// A subgroup of `G x G` for an enumerated `G`, stored as an index mask.
#[derive(Clone, Debug)]
pub struct ProductSubgroup<'a> {
    factor: &'a FiniteMatrixGroup,
    mask: Vec<bool>,
    order: usize,
}

impl<'a> ProductSubgroup<'a> {
    fn key(&self, i: usize, j: usize) -> usize {
        i * self.factor.order() + j
    }

    pub fn generated(factor: &'a FiniteMatrixGroup, gens: &[(ModMatrix, ModMatrix)]) -> Self {
        let n = factor.order();
        let mut mask = vec![false; n * n];
        let e = factor.identity();
        let ie = factor.index_of(&e).expect("identity");
        mask[ie * n + ie] = true;
        let mut queue = VecDeque::from([(e, e)]);
        let mut order = 1;
        while let Some((x, y)) = queue.pop_front() {
            for (g, h) in gens {
                let u = factor.mul(&x, g);
                let v = factor.mul(&y, h);
                let k = factor.index_of(&u).expect("closed") * n + factor.index_of(&v).expect("closed");
                if !mask[k] {
                    mask[k] = true;
                    order += 1;
                    queue.push_back((u, v));
                }
            }
        }
        ProductSubgroup { factor, mask, order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contains(&self, x: &ModMatrix, y: &ModMatrix) -> bool {
        match (self.factor.index_of(x), self.factor.index_of(y)) {
            (Some(i), Some(j)) => self.mask[self.key(i, j)],
            _ => false,
        }
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.factor.order();
        self.mask
            .iter()
            .enumerate()
            .filter_map(move |(k, &b)| b.then_some((k / n, k % n)))
    }
}

#[derive(Clone, Debug)]
pub enum GoursatDecomposition<'a> {
    Full,
    /// `H` is the fiber product of `G -> G/N1` and `G -> G/N2` over an
    /// isomorphism of the quotients.
    FiberProduct {
        n1: Subgroup<'a>,
        n2: Subgroup<'a>,
        quotient_order: usize,
    },
}

pub fn goursat_decompose<'a>(h: &ProductSubgroup<'a>) -> Result<GoursatDecomposition<'a>, GaloisError> {
    let g = h.factor;
    let n = g.order();
    let mut left = vec![false; n];
    let mut right = vec![false; n];
    for (i, j) in h.pairs() {
        left[i] = true;
        right[j] = true;
    }
    if left.iter().chain(&right).any(|b| !*b) {
        return Err(GaloisError::NotSubdirect);
    }
    let ie = g.index_of(&g.identity()).expect("identity");
    // N1 = {g : (g, e) in H}, N2 = {h : (e, h) in H}
    let n1_mask: Vec<bool> = (0..n).map(|i| h.mask[i * n + ie]).collect();
    let n2_mask: Vec<bool> = (0..n).map(|j| h.mask[ie * n + j]).collect();
    let n1 = Subgroup::from_mask(g, n1_mask).expect("kernel of a projection");
    let n2 = Subgroup::from_mask(g, n2_mask).expect("kernel of a projection");
    if n1.order() == n {
        return Ok(GoursatDecomposition::Full);
    }
    let quotient_order = n / n1.order();
    if n / n2.order() != quotient_order || h.order() != n1.order() * n2.order() * quotient_order {
        return Err(GaloisError::NotSubdirect);
    }
    // every g has its partners in a single N2-coset, so g N1 -> h N2 is a bijection
    let mut partner = vec![usize::MAX; n];
    for (i, j) in h.pairs() {
        if partner[i] == usize::MAX {
            partner[i] = j;
        }
    }
    for (i, j) in h.pairs() {
        let x = g.element(partner[i]);
        let y = g.element(j);
        if !n2.contains(&g.mul(&g.inv(&x), &y)) {
            return Err(GaloisError::NotSubdirect);
        }
    }
    Ok(GoursatDecomposition::FiberProduct { n1, n2, quotient_order })
}
