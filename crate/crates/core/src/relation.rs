use std::fmt;

use crate::error::{Error, Result};

/// A constraint `psi ⊆ Σ_X × Σ_Y`, stored as a dense bitset indexed by `a * sigma_y + b`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    sigma_x: usize,
    sigma_y: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

impl Relation {
    pub fn empty(sigma_x: usize, sigma_y: usize) -> Self {
        let words = (sigma_x * sigma_y).div_ceil(64);
        Self { sigma_x, sigma_y, bits: vec![0; words] }
    }

    pub fn full(sigma_x: usize, sigma_y: usize) -> Self {
        let mut r = Self::empty(sigma_x, sigma_y);
        for a in 0..sigma_x {
            for b in 0..sigma_y {
                r.insert(a, b);
            }
        }
        r
    }

    /// `{(a, a)}` over a common alphabet.
    pub fn equality(sigma: usize) -> Self {
        let mut r = Self::empty(sigma, sigma);
        (0..sigma).for_each(|a| r.insert(a, a));
        r
    }

    pub fn from_pairs(sigma_x: usize, sigma_y: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut r = Self::empty(sigma_x, sigma_y);
        for (a, b) in pairs {
            if a >= sigma_x || b >= sigma_y {
                return Err(Error::InvalidGame(format!(
                    "label pair ({a}, {b}) out of range for {sigma_x}x{sigma_y}"
                )));
            }
            r.insert(a, b);
        }
        Ok(r)
    }

    /// Graph of the function `a -> map[a]`.
    pub fn from_map(sigma_y: usize, map: &[usize]) -> Result<Self> {
        Self::from_pairs(map.len(), sigma_y, map.iter().enumerate().map(|(a, &b)| (a, b)))
    }

    pub fn from_fn(sigma_x: usize, sigma_y: usize, mut accept: impl FnMut(usize, usize) -> bool) -> Self {
        let mut r = Self::empty(sigma_x, sigma_y);
        for a in 0..sigma_x {
            for b in 0..sigma_y {
                if accept(a, b) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    pub fn sigma_x(&self) -> usize {
        self.sigma_x
    }

    pub fn sigma_y(&self) -> usize {
        self.sigma_y
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        let i = a * self.sigma_y + b;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        let i = a * self.sigma_y + b;
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Accepted pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.sigma_x).flat_map(move |a| (0..self.sigma_y).filter(move |&b| self.contains(a, b)).map(move |b| (a, b)))
    }

    /// The map `a -> b` if every left label has exactly one partner.
    pub fn as_function(&self) -> Option<Vec<usize>> {
        (0..self.sigma_x)
            .map(|a| {
                let mut it = (0..self.sigma_y).filter(|&b| self.contains(a, b));
                match (it.next(), it.next()) {
                    (Some(b), None) => Some(b),
                    _ => None,
                }
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.sigma_y, self.sigma_x, |b, a| self.contains(a, b))
    }

    /// Adds pairs; the result accepts everything either input accepts.
    pub fn union(&self, other: &Relation) -> Self {
        assert_eq!((self.sigma_x, self.sigma_y), (other.sigma_x, other.sigma_y));
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        Self { sigma_x: self.sigma_x, sigma_y: self.sigma_y, bits }
    }
}
