use crate::shuffling::Permutation;
use crate::{Error, Result};

/// Largest population enumerated exhaustively (8! = 40320 orderings).
pub const MAX_EXHAUSTIVE: usize = 8;

/// Calls `f` once for every ordering of `0..m`, in the order produced by
/// Heap's algorithm (starting from the identity).
pub fn for_each_permutation<F: FnMut(&[usize])>(m: usize, mut f: F) -> Result<()> {
    if m > MAX_EXHAUSTIVE {
        return Err(Error::Size(format!(
            "exhaustive enumeration is capped at {MAX_EXHAUSTIVE} elements, got {m}; use Monte Carlo sampling"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut c = vec![0usize; m];
    f(&order);
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            f(&order);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(())
}

pub fn all_permutations(m: usize) -> Result<Vec<Permutation>> {
    let mut out = Vec::new();
    for_each_permutation(m, |p| out.push(Permutation::new(p.to_vec()).expect("Heap's algorithm yields bijections")))?;
    Ok(out)
}
