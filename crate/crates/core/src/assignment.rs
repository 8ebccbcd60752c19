//! Dataset-to-worker assignments.
//!
//! Dataset and worker indices are 1-based throughout this module, matching
//! the usual `Mod(b, a) ∈ [1, a]` convention of the cyclic construction.

use serde::{Deserialize, Serialize};

use crate::combin::subsets_1based;
use crate::error::{Error, Result};

/// `Mod(b, a)` taking values in `[1, a]`, with `Mod(b, a) = a` when `a | b`.
pub fn mod1(b: i64, a: usize) -> usize {
    ((b - 1).rem_euclid(a as i64) + 1) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentKind {
    Cyclic,
    GeneralVirtual,
    Grouped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub k: usize,
    pub n: usize,
    pub nr: usize,
    pub kind: AssignmentKind,
    /// `sets[n - 1]` is the sorted list of datasets held by worker `n`.
    pub sets: Vec<Vec<usize>>,
    /// For `GeneralVirtual`: effective slot (1-based) of every real dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub virtual_map: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub workers: Vec<usize>,
    pub datasets: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedAssignment {
    pub base: Assignment,
    /// Groups `H_T` in lexicographic order of `T`.
    pub groups: Vec<Group>,
}

impl GroupedAssignment {
    pub fn group(&self, workers: &[usize]) -> Option<&Group> {
        self.groups.iter().find(|g| g.workers == workers)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub required: usize,
    /// Number of holders of each dataset, indexed by `k - 1`.
    pub replication: Vec<usize>,
    pub under_replicated: Vec<usize>,
    /// Storage identity per worker; only evaluated for cyclic assignments.
    pub storage_ok: Option<bool>,
}

impl ReplicationReport {
    pub fn is_valid(&self) -> bool {
        self.under_replicated.is_empty() && self.storage_ok != Some(false)
    }
}

fn check_params(k: usize, n: usize, nr: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParams(format!(
            "K={k} and N={n} must be positive"
        )));
    }
    if nr == 0 || nr > n {
        return Err(Error::InvalidParams(format!(
            "N_r={nr} must lie in [1, {n}]"
        )));
    }
    Ok(())
}

fn cyclic_sets(k: usize, n: usize, nr: usize) -> Vec<Vec<usize>> {
    (1..=n)
        .map(|w| {
            let mut set: Vec<usize> = (0..k / n)
                .flat_map(|p| (0..=n - nr).map(move |i| mod1((w + i) as i64, n) + p * n))
                .collect();
            set.sort_unstable();
            set
        })
        .collect()
}

/// Cyclic assignment for `N | K`: worker `n` holds `Mod(n + i, N) + pN`
/// for `i ∈ [0, N - N_r]` and every block offset `p`.
pub fn cyclic(k: usize, n: usize, nr: usize) -> Result<Assignment> {
    check_params(k, n, nr)?;
    if !k.is_multiple_of(n) {
        return Err(Error::UseGeneralAssignment { k, n });
    }
    Ok(Assignment {
        k,
        n,
        nr,
        kind: AssignmentKind::Cyclic,
        sets: cyclic_sets(k, n, nr),
        virtual_map: None,
    })
}

/// Gap sizes `p_1..p_b` splitting `N - b` virtual slots after each of the
/// `b` leftover real datasets: the first `α` gaps take the floor, the rest
/// take the ceiling.
pub fn gap_sizes(n: usize, b: usize) -> Vec<usize> {
    let rest = n - b;
    let lo = rest / b;
    let hi = rest.div_ceil(b);
    let alpha = b * hi - rest;
    (0..b).map(|i| if i < alpha { lo } else { hi }).collect()
}

/// Effective slots (1-based) of the leftover datasets inside the last block
/// of `N` slots: `1, 2 + p_1, 3 + p_1 + p_2, ...`.
pub fn leftover_slots(n: usize, b: usize) -> Vec<usize> {
    let gaps = gap_sizes(n, b);
    let mut slots = Vec::with_capacity(b);
    let mut s = 1;
    for g in gaps {
        slots.push(s);
        s += 1 + g;
    }
    slots
}

/// Assignment for any `K = aN + b`: pads to `(a + 1)N` slots with virtual
/// datasets, spreads the `b` leftover real datasets across the last block and
/// runs the cyclic assignment on the slots. Delegates to [`cyclic`] when `b = 0`.
pub fn general(k: usize, n: usize, nr: usize) -> Result<Assignment> {
    check_params(k, n, nr)?;
    let (a, b) = (k / n, k % n);
    if b == 0 {
        return cyclic(k, n, nr);
    }
    let k_eff = (a + 1) * n;
    let mut slot_of: Vec<usize> = (1..=a * n).collect();
    slot_of.extend(leftover_slots(n, b).into_iter().map(|s| a * n + s));
    let mut real_at = vec![0usize; k_eff + 1];
    for (i, &s) in slot_of.iter().enumerate() {
        real_at[s] = i + 1;
    }
    let sets = cyclic_sets(k_eff, n, nr)
        .into_iter()
        .map(|slots| {
            slots
                .into_iter()
                .filter_map(|s| (real_at[s] != 0).then_some(real_at[s]))
                .collect()
        })
        .collect();
    Ok(Assignment {
        k,
        n,
        nr,
        kind: AssignmentKind::GeneralVirtual,
        sets,
        virtual_map: Some(slot_of),
    })
}

/// Grouped assignment for `N - N_r + 1 = 2`: datasets are split into
/// `C(N, 2)` consecutive groups, one per worker pair in lexicographic order,
/// and group `H_T` goes to exactly the pair `T`.
pub fn grouped(k: usize, n: usize, nr: usize) -> Result<GroupedAssignment> {
    check_params(k, n, nr)?;
    if n - nr + 1 != 2 {
        return Err(Error::UnsupportedGroupedParams(format!(
            "each dataset must go to exactly 2 workers, got N - N_r + 1 = {}",
            n - nr + 1
        )));
    }
    let pairs: Vec<Vec<usize>> = subsets_1based(n, 2).collect();
    if !k.is_multiple_of(pairs.len()) {
        return Err(Error::UnsupportedGroupedParams(format!(
            "K={k} is not a multiple of C({n}, 2) = {}",
            pairs.len()
        )));
    }
    let size = k / pairs.len();
    let groups: Vec<Group> = pairs
        .into_iter()
        .enumerate()
        .map(|(g, workers)| Group {
            workers,
            datasets: (g * size + 1..=(g + 1) * size).collect(),
        })
        .collect();
    let mut sets = vec![Vec::new(); n];
    for g in &groups {
        for &w in &g.workers {
            sets[w - 1].extend_from_slice(&g.datasets);
        }
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    Ok(GroupedAssignment {
        base: Assignment {
            k,
            n,
            nr,
            kind: AssignmentKind::Grouped,
            sets,
            virtual_map: None,
        },
        groups,
    })
}

impl Assignment {
    /// Datasets held by worker `w` (1-based).
    pub fn set(&self, w: usize) -> &[usize] {
        &self.sets[w - 1]
    }

    /// Datasets not held by worker `w`.
    pub fn complement(&self, w: usize) -> Vec<usize> {
        let held = self.set(w);
        (1..=self.k)
            .filter(|d| held.binary_search(d).is_err())
            .collect()
    }

    /// Sorted workers holding dataset `d`.
    pub fn holders(&self, d: usize) -> Vec<usize> {
        (1..=self.n)
            .filter(|&w| self.set(w).binary_search(&d).is_ok())
            .collect()
    }

    pub fn holds(&self, w: usize, d: usize) -> bool {
        self.set(w).binary_search(&d).is_ok()
    }

    /// Slot count of the effective (virtually padded) problem.
    pub fn effective_k(&self) -> usize {
        match self.kind {
            AssignmentKind::GeneralVirtual => self.k.div_ceil(self.n) * self.n,
            _ => self.k,
        }
    }

    /// Effective slot (1-based) of every real dataset.
    pub fn slots(&self) -> Vec<usize> {
        match &self.virtual_map {
            Some(m) => m.clone(),
            None => (1..=self.k).collect(),
        }
    }

    /// Worker sets over effective slots, virtual slots included.
    pub fn effective_sets(&self) -> Vec<Vec<usize>> {
        match self.kind {
            AssignmentKind::GeneralVirtual => cyclic_sets(self.effective_k(), self.n, self.nr),
            _ => self.sets.clone(),
        }
    }

    /// Largest number of datasets one worker holds.
    pub fn max_load(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// `G_S`: datasets held by exactly the workers in `s`.
pub fn unique_group(a: &Assignment, s: &[usize]) -> Vec<usize> {
    let mut want = s.to_vec();
    want.sort_unstable();
    (1..=a.k).filter(|&d| a.holders(d) == want).collect()
}

/// Checks that every dataset has at least `N - N_r + 1` holders and, for
/// cyclic assignments, that every worker's unique groups add up to its load.
pub fn validate_replication(a: &Assignment) -> ReplicationReport {
    let required = a.n - a.nr + 1;
    let replication: Vec<usize> = (1..=a.k).map(|d| a.holders(d).len()).collect();
    let under_replicated = replication
        .iter()
        .enumerate()
        .filter(|(_, &r)| r < required)
        .map(|(i, _)| i + 1)
        .collect();
    let storage_ok = (a.kind == AssignmentKind::Cyclic && a.k.is_multiple_of(a.n)).then(|| {
        let load = a.k / a.n * required;
        (1..=a.n).all(|w| {
            subsets_1based(a.n, required)
                .filter(|s| s.contains(&w))
                .map(|s| unique_group(a, &s).len())
                .sum::<usize>()
                == load
        })
    });
    ReplicationReport {
        required,
        replication,
        under_replicated,
        storage_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mod_convention() {
        assert_eq!(mod1(3, 3), 3);
        assert_eq!(mod1(4, 3), 1);
        assert_eq!(mod1(0, 3), 3);
        assert_eq!(mod1(-1, 3), 2);
    }

    #[test]
    fn cyclic_examples() {
        // The three-per-worker table needs N - N_r + 1 = 3 holders per dataset.
        let a = cyclic(4, 4, 2).unwrap();
        assert_eq!(
            a.sets,
            vec![vec![1, 2, 3], vec![2, 3, 4], vec![1, 3, 4], vec![1, 2, 4]]
        );
        let a = cyclic(4, 4, 3).unwrap();
        assert_eq!(a.sets, vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![1, 4]]);
        let a = cyclic(6, 3, 2).unwrap();
        assert_eq!(
            a.sets,
            vec![vec![1, 2, 4, 5], vec![2, 3, 5, 6], vec![1, 3, 4, 6]]
        );
        let a = cyclic(3, 3, 3).unwrap();
        assert_eq!(a.sets, vec![vec![1], vec![2], vec![3]]);
        assert!(matches!(
            cyclic(7, 3, 2),
            Err(Error::UseGeneralAssignment { k: 7, n: 3 })
        ));
        assert!(cyclic(6, 3, 0).is_err());
        assert!(cyclic(6, 3, 4).is_err());
    }

    #[test]
    fn general_examples() {
        let a = general(3, 6, 4).unwrap();
        assert_eq!(a.virtual_map.as_deref(), Some(&[1, 3, 5][..]));
        assert!(a.max_load() <= 2);
        assert_eq!(a.kind, AssignmentKind::GeneralVirtual);
        assert_eq!(general(6, 3, 2).unwrap(), cyclic(6, 3, 2).unwrap());
        assert_eq!(gap_sizes(7, 3), vec![1, 1, 2]);
        assert_eq!(leftover_slots(7, 3), vec![1, 3, 5]);
    }

    #[test]
    fn general_replication_holds() {
        for n in 2..=8 {
            for k in 1..=3 * n {
                for nr in 1..=n {
                    let a = general(k, n, nr).unwrap();
                    assert!(
                        validate_replication(&a).under_replicated.is_empty(),
                        "({k},{n},{nr})"
                    );
                    let (blocks, b) = (k / n, k % n);
                    let width = n - nr + 1;
                    let m1 = blocks * width + if b == 0 { 0 } else { width.div_ceil(n / b) };
                    assert!(
                        a.max_load() <= m1,
                        "({k},{n},{nr}) load {} > {m1}",
                        a.max_load()
                    );
                }
            }
        }
    }

    #[test]
    fn grouped_examples() {
        let g = grouped(12, 4, 3).unwrap();
        let expect = [
            (vec![1, 2], vec![1, 2]),
            (vec![1, 3], vec![3, 4]),
            (vec![1, 4], vec![5, 6]),
            (vec![2, 3], vec![7, 8]),
            (vec![2, 4], vec![9, 10]),
            (vec![3, 4], vec![11, 12]),
        ];
        for (grp, (w, d)) in g.groups.iter().zip(expect) {
            assert_eq!(grp.workers, w);
            assert_eq!(grp.datasets, d);
        }
        assert_eq!(g.base.set(1), &[1, 2, 3, 4, 5, 6]);
        assert!(g.base.sets.iter().all(|s| s.len() == 6));

        let small = grouped(6, 4, 3).unwrap();
        assert!(small.groups.iter().all(|g| g.datasets.len() == 1));
        assert!(small.base.sets.iter().all(|s| s.len() == 3));
        let rep = validate_replication(&small.base);
        assert!(rep.is_valid());
        assert!(rep.replication.iter().all(|&r| r == 2));

        assert!(matches!(
            grouped(12, 4, 2),
            Err(Error::UnsupportedGroupedParams(_))
        ));
        assert!(matches!(
            grouped(7, 4, 3),
            Err(Error::UnsupportedGroupedParams(_))
        ));
    }

    #[test]
    fn unique_groups() {
        let a = cyclic(6, 3, 2).unwrap();
        assert_eq!(unique_group(&a, &[1, 2]), vec![2, 5]);
        assert_eq!(unique_group(&a, &[1, 3]), vec![1, 4]);
        assert_eq!(unique_group(&a, &[2, 3]), vec![3, 6]);
        let g = grouped(12, 4, 3).unwrap();
        assert_eq!(unique_group(&g.base, &[3, 4]), vec![11, 12]);
    }

    #[test]
    fn replication_reports() {
        let mut a = cyclic(6, 3, 2).unwrap();
        let rep = validate_replication(&a);
        assert!(rep.is_valid());
        assert_eq!(rep.storage_ok, Some(true));
        a.sets[2].retain(|&d| d != 1);
        let rep = validate_replication(&a);
        assert_eq!(rep.under_replicated, vec![1]);
        let g = grouped(12, 4, 3).unwrap();
        let rep = validate_replication(&g.base);
        assert!(rep.is_valid());
        assert!(rep.replication.iter().all(|&r| r == 2));
    }

    proptest! {
        #[test]
        fn cyclic_holders_are_consecutive(n in 1usize..=8, blocks in 1usize..=4, nr_off in 0usize..8) {
            let nr = 1 + nr_off % n;
            let k = n * blocks;
            let a = cyclic(k, n, nr).unwrap();
            for d in 1..=k {
                let mut want: Vec<usize> = (0..=n - nr).map(|i| mod1(d as i64 - i as i64, n)).collect();
                want.sort_unstable();
                want.dedup();
                prop_assert_eq!(a.holders(d), want);
            }
            prop_assert_eq!(a.sets.iter().map(Vec::len).sum::<usize>(), k * (n - nr + 1));
            prop_assert!(a.sets.iter().all(|s| s.len() == k / n * (n - nr + 1)));
            prop_assert!(validate_replication(&a).is_valid());
        }

        #[test]
        fn leftover_gaps_bound_window_load(n in 2usize..=12, b_off in 0usize..12, nr_off in 0usize..12) {
            let b = 1 + b_off % (n - 1);
            let nr = 1 + nr_off % n;
            let slots = leftover_slots(n, b);
            for w in slots.windows(2) {
                prop_assert!(w[1] - w[0] > (n - b) / b);
            }
            // every window of N - N_r + 1 cyclically consecutive slots
            let width = n - nr + 1;
            let bound = width.div_ceil(n / b);
            for start in 1..=n {
                let hits = (0..width).filter(|i| slots.contains(&mod1((start + i) as i64, n))).count();
                prop_assert!(hits <= bound, "start {start}: {hits} > {bound}");
            }
        }
    }
}
