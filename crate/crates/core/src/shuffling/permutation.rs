use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rngcore::{mix64, SeededGenerator, GOLDEN_GAMMA};
use crate::{Error, Result};

/// A bijection on `0..n`, stored as the visiting order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if !is_bijection(&order) {
            return Err(Error::arg(format!(
                "not a permutation of 0..{}: {:?}",
                order.len(),
                order
            )));
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn is_valid(&self) -> bool {
        is_bijection(&self.0)
    }

    pub fn reversed(&self) -> Self {
        reverse(self)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, t: usize) -> &usize {
        &self.0[t]
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn is_bijection(order: &[usize]) -> bool {
    let n = order.len();
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Epoch seed `u_e = mix64(base_seed ^ (e + 1) * GOLDEN_GAMMA)`.
///
/// For a fixed `base_seed` this is injective in `e`: multiplication by an odd
/// constant, xor with a constant and `mix64` are all bijections on `u64`.
pub fn seed_for_epoch(base_seed: u64, epoch: u64) -> u64 {
    mix64(base_seed ^ epoch.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// Fisher–Yates shuffle of `0..n` driven by a generator seeded with `seed`.
pub fn uniform_permutation(n: usize, seed: u64) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::arg("uniform_permutation requires n >= 1"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededGenerator::new(seed).shuffle(&mut order);
    Ok(Permutation(order))
}

/// Splits `0..n` into `K = ceil(n / b)` consecutive blocks (the last one
/// possibly shorter), permutes the blocks uniformly and concatenates them.
/// Order inside each block is preserved.
///
/// The block order is `uniform_permutation(K, seed)`, so with `b = 1` the
/// result coincides with `uniform_permutation(n, seed)`.
pub fn block_shuffle(n: usize, b: usize, seed: u64) -> Result<Permutation> {
    if n == 0 || b == 0 || b > n {
        return Err(Error::arg(format!(
            "block size must satisfy 1 <= b <= n (b = {b}, n = {n})"
        )));
    }
    let blocks = n.div_ceil(b);
    let order = uniform_permutation(blocks, seed)?;
    block_shuffle_with_order(n, b, &order)
}

/// Concatenates the blocks of size `b` in the given block order.
pub fn block_shuffle_with_order(n: usize, b: usize, block_order: &Permutation) -> Result<Permutation> {
    if n == 0 || b == 0 || b > n {
        return Err(Error::arg(format!(
            "block size must satisfy 1 <= b <= n (b = {b}, n = {n})"
        )));
    }
    let blocks = n.div_ceil(b);
    if block_order.len() != blocks {
        return Err(Error::arg(format!(
            "block order has {} entries, expected {blocks}",
            block_order.len()
        )));
    }
    let mut order = Vec::with_capacity(n);
    for &k in block_order.as_slice() {
        order.extend(k * b..((k + 1) * b).min(n));
    }
    Ok(Permutation(order))
}

pub fn reverse(pi: &Permutation) -> Permutation {
    Permutation(pi.0.iter().rev().copied().collect())
}

/// Elements at odd 1-based positions first, then those at even positions.
pub fn even_odd_interleave(pi: &Permutation) -> Permutation {
    let odd = pi.0.iter().step_by(2);
    let even = pi.0.iter().skip(1).step_by(2);
    Permutation(odd.chain(even).copied().collect())
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![1, 2]).is_err());
        assert!(Permutation::new(vec![]).is_ok());
    }

    #[test]
    fn epoch_seeds_are_deterministic_and_distinct() {
        assert_eq!(seed_for_epoch(17, 4), seed_for_epoch(17, 4));
        let mut g = SeededGenerator::new(99);
        for _ in 0..1_000_000 {
            let s = g.next_u64();
            assert_ne!(seed_for_epoch(s, 0), seed_for_epoch(s, 1));
        }
    }

    #[test]
    fn single_element() {
        assert_eq!(uniform_permutation(1, 5).unwrap(), perm(&[0]));
        assert!(uniform_permutation(0, 5).is_err());
    }

    #[test]
    fn uniform_three_frequencies() {
        let draws = 60_000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in 0..draws {
            let p = uniform_permutation(3, seed_for_epoch(11, s)).unwrap();
            *counts.entry(p.into_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            let f = *c as f64 / draws as f64;
            assert!((f - 1.0 / 6.0).abs() <= 0.03 / 6.0, "frequency {f}");
        }
    }

    #[test]
    fn uniform_is_reproducible() {
        assert_eq!(uniform_permutation(50, 3).unwrap(), uniform_permutation(50, 3).unwrap());
        assert_ne!(uniform_permutation(50, 3).unwrap(), uniform_permutation(50, 4).unwrap());
    }

    #[test]
    fn single_block_is_identity() {
        for s in 0..100 {
            assert_eq!(block_shuffle(6, 6, s).unwrap(), Permutation::identity(6));
        }
    }

    #[test]
    fn ragged_blocks_hand_enumerated() {
        // n = 5, b = 2: blocks {0,1} {2,3} {4}; order (2, 0, 1).
        let p = block_shuffle_with_order(5, 2, &perm(&[2, 0, 1])).unwrap();
        assert_eq!(p, perm(&[4, 0, 1, 2, 3]));
    }

    #[test]
    fn block_size_bounds() {
        assert!(block_shuffle(4, 0, 1).is_err());
        assert!(block_shuffle(4, 5, 1).is_err());
        assert!(block_shuffle_with_order(5, 2, &perm(&[1, 0])).is_err());
    }

    #[test]
    fn unit_blocks_match_uniform_frequencies() {
        let draws = 24_000u64;
        let mut block: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut unif: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in 0..draws {
            let seed = seed_for_epoch(1, s);
            *block.entry(block_shuffle(4, 1, seed).unwrap().into_vec()).or_default() += 1;
            *unif.entry(uniform_permutation(4, seed).unwrap().into_vec()).or_default() += 1;
        }
        assert_eq!(block.len(), 24);
        let p = 1.0 / 24.0;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for (k, c) in &block {
            let fb = *c as f64 / draws as f64;
            let fu = unif[k] as f64 / draws as f64;
            assert!((fb - fu).abs() <= 0.03 * fu, "{fb} vs {fu}");
            assert!((fb - p).abs() <= 4.0 * sigma, "{fb} vs uniform {p}");
        }
    }

    #[test]
    fn transforms_hand_checked() {
        assert_eq!(reverse(&perm(&[0, 1, 2])), perm(&[2, 1, 0]));
        assert_eq!(reverse(&perm(&[0])), perm(&[0]));
        // [a,b,c,d,e] -> [a,c,e,b,d]
        assert_eq!(even_odd_interleave(&perm(&[3, 1, 4, 0, 2])), perm(&[3, 4, 2, 1, 0]));
        assert_eq!(even_odd_interleave(&perm(&[1, 0])), perm(&[1, 0]));
    }

    proptest! {
        #[test]
        fn outputs_are_bijections(n in 1usize..=512, seed in any::<u64>(), b_frac in 0.0f64..1.0) {
            let b = ((b_frac * n as f64) as usize).clamp(1, n);
            let u = uniform_permutation(n, seed).unwrap();
            prop_assert!(u.is_valid());
            prop_assert!(block_shuffle(n, b, seed).unwrap().is_valid());
            prop_assert!(even_odd_interleave(&u).is_valid());
            prop_assert_eq!(reverse(&reverse(&u)), u.clone());
            prop_assert_eq!(block_shuffle(n, 1, seed).unwrap(), u);
            prop_assert_eq!(block_shuffle(n, n, seed).unwrap(), Permutation::identity(n));
        }
    }
}
