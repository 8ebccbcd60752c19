//! Small combinatorics helpers shared by the builders and the bounds.

/// Binomial coefficient with `C(x, y) = 0` whenever `y < 0` or `x < y`.
pub fn binomial(x: i64, y: i64) -> u128 {
    if y < 0 || x < y || x < 0 {
        return 0;
    }
    let y = y.min(x - y) as u128;
    let x = x as u128;
    let mut acc: u128 = 1;
    for i in 0..y {
        acc = acc * (x - i) / (i + 1);
    }
    acc
}

/// `binomial` for arguments known to be in range, as `usize`.
pub fn choose(x: usize, y: usize) -> usize {
    usize::try_from(binomial(x as i64, y as i64)).expect("binomial fits in usize")
}

/// Index of the `k`-subsets of `[0, n)` in lexicographic order.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let cur = (k <= n).then(|| (0..k).collect());
        Self { n, cur }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// `k`-subsets of `[1, n]` in lexicographic order, 1-based.
pub fn subsets_1based(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    Combinations::new(n, k).map(|s| s.into_iter().map(|i| i + 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_convention() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(2, 3), 0);
        assert_eq!(binomial(3, -1), 0);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }

    #[test]
    fn lexicographic_order() {
        let all: Vec<_> = subsets_1based(4, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        for n in 0..8 {
            for k in 0..=n {
                assert_eq!(Combinations::new(n, k).count(), choose(n, k));
            }
        }
    }
}
