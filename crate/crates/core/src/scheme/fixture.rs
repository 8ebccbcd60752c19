//! Demand matrices whose decoding matrix for one responder set is the identity.

use crate::assignment::cyclic;
use crate::error::{Error, Result};
use crate::linalg::{FMatrix, Field};
use crate::seed;

/// Block-diagonal `(K/N) N_r x K` demand built for the responder set `responders`.
///
/// Block `p` covers rows `p N_r .. (p+1) N_r` and columns `p N .. (p+1) N`.
/// Row `i` of a block vanishes exactly on the `N_r - 1` columns of the block
/// that the `i`-th responder (in increasing order) does not hold, and is
/// uniform nonzero on the rest. That responder's only null vectors are then
/// the unit vectors of its rows, so the stacked code of `responders` is the
/// identity.
pub fn adversarial_fixture(
    field: Field,
    k: usize,
    n: usize,
    nr: usize,
    responders: &[usize],
    seed: u64,
) -> Result<FMatrix> {
    let a = cyclic(k, n, nr)?;
    let mut resp = responders.to_vec();
    resp.sort_unstable();
    resp.dedup();
    if resp.len() != nr || resp.iter().any(|&w| w == 0 || w > n) {
        return Err(Error::InvalidParams(format!(
            "need {nr} distinct responders in [1, {n}], got {responders:?}"
        )));
    }
    let blocks = k / n;
    let mut rng = seed::rng(seed::derive(seed, seed::stream::FIXTURE));
    let mut f = FMatrix::zeros(field, blocks * nr, k);
    for p in 0..blocks {
        let vals = FMatrix::random_nonzero_from(field, nr, n, &mut rng);
        for (i, &w) in resp.iter().enumerate() {
            let row = p * nr + i;
            for c in 0..n {
                if a.holds(w, p * n + c + 1) {
                    f.set(row, p * n + c, vals.get(i, c));
                }
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{build_middle, BuildOptions};

    #[test]
    fn zero_pattern_for_four_workers() {
        let f = adversarial_fixture(Field::default(), 4, 4, 3, &[1, 2, 3], 3).unwrap();
        assert_eq!(f.rows(), 3);
        // worker 1 holds {1, 2}
        assert_eq!(f.get(0, 2), 0);
        assert_eq!(f.get(0, 3), 0);
        assert!(f.get(0, 0) != 0 && f.get(0, 1) != 0);
        let a = cyclic(4, 4, 3).unwrap();
        let s = build_middle(&f, &a, &BuildOptions::default()).unwrap();
        for (i, w) in [1, 2, 3].into_iter().enumerate() {
            let u = s.blocks[0].task_rows(w);
            let mut e = FMatrix::zeros(f.field(), 1, 3);
            e.set(0, i, 1);
            assert_eq!(u, e);
        }
    }

    #[test]
    fn block_diagonal_shape() {
        let f = adversarial_fixture(Field::default(), 6, 3, 2, &[2, 3], 8).unwrap();
        assert_eq!((f.rows(), f.cols()), (4, 6));
        for r in 0..2 {
            for c in 3..6 {
                assert_eq!(f.get(r, c), 0);
                assert_eq!(f.get(r + 2, c - 3), 0);
            }
        }
    }

    #[test]
    fn rejects_bad_responders() {
        assert!(adversarial_fixture(Field::default(), 4, 4, 3, &[1, 2], 0).is_err());
        assert!(adversarial_fixture(Field::default(), 4, 4, 3, &[1, 2, 5], 0).is_err());
        assert!(adversarial_fixture(Field::default(), 5, 4, 3, &[1, 2, 3], 0).is_err());
    }
}
