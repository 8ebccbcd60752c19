//! Pair-grouped scheme for `(K, N, N_r, K_c) = (12, 4, 3, 3)`.
//!
//! Every pair `T` of workers owns a group `H_T` of two datasets. The canonical
//! left-null vector `u_T` of `F` restricted to `H_T` defines `U_T = u_T · F`,
//! which vanishes on `H_T`. Each pair `S = {n, s}` of responders must jointly
//! deliver `U_T` for `T = [4] ∖ S`: worker `n` sends `A_{n,T}`, worker `s` sends
//! `A_{s,T}` with `A_{n,T} + A_{s,T} = U_T`. Coefficients on the group both of
//! them hold (`H_{n,s}`) are free and chosen so that every worker's three rows
//! have rank 2. Worker 1 fixes `A_{1,{2,3}} + A_{1,{2,4}} = A_{1,{3,4}}`;
//! workers 2, 3, 4 follow in order, each using the coefficients already pinned
//! by earlier partners.

use super::{check_demand, BuildOptions, Params, Regime, Scheme};
use crate::assignment::GroupedAssignment;
use crate::combin::subsets_1based;
use crate::error::{Error, Result};
use crate::linalg::{FMatrix, FVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedCode {
    /// Worker pairs `T` in lexicographic order.
    pub pairs: Vec<Vec<usize>>,
    /// Row `i` is `u_T` for `pairs[i]` (`6 x K_c`).
    pub null_vectors: FMatrix,
    /// Row `i` is `U_T = u_T · F` (`6 x K`).
    pub targets: FMatrix,
    /// `targets_of[n - 1]`: the pairs `T ∌ n`, lexicographic; row `i` of
    /// `rows[n - 1]` is `A_{n, targets_of[n-1][i]}`.
    pub targets_of: Vec<Vec<Vec<usize>>>,
    pub rows: Vec<FMatrix>,
    /// `relations[n - 1]`: `λ` with `λ · rows[n - 1] = 0`.
    pub relations: Vec<FVector>,
    /// The two independent rows each worker transmits.
    pub sent: Vec<FMatrix>,
}

impl GroupedCode {
    pub fn target_index(&self, t: &[usize]) -> Option<usize> {
        self.pairs.iter().position(|p| p == t)
    }
}

fn pair(a: usize, b: usize) -> Vec<usize> {
    vec![a.min(b), a.max(b)]
}

fn fail(worker: usize, reason: impl Into<String>) -> Error {
    Error::GroupedSolveFailed {
        worker,
        reason: reason.into(),
    }
}

pub fn build_grouped(f: &FMatrix, g: &GroupedAssignment, opts: &BuildOptions) -> Result<Scheme> {
    let a = &g.base;
    check_demand(f, a)?;
    if (a.k, a.n, a.nr, f.rows()) != (12, 4, 3, 3) {
        return Err(Error::UnsupportedGroupedParams(format!(
            "the grouped scheme needs (K, N, N_r, K_c) = (12, 4, 3, 3), got ({}, {}, {}, {})",
            a.k,
            a.n,
            a.nr,
            f.rows()
        )));
    }
    let l = match opts.l {
        Some(0) => return Err(Error::BadMessageLength { l: 0, m: 1 }),
        Some(l) => l,
        None => 1,
    };
    let field = f.field();
    let n = a.n;
    let pairs: Vec<Vec<usize>> = subsets_1based(n, 2).collect();
    let cols_of = |t: &[usize]| -> Vec<usize> {
        g.group(t)
            .expect("every pair has a group")
            .datasets
            .iter()
            .map(|d| d - 1)
            .collect()
    };

    let mut null_vectors = FMatrix::zeros(field, pairs.len(), f.rows());
    for (i, t) in pairs.iter().enumerate() {
        let basis = f.select_columns(&cols_of(t)).left_null_space();
        if basis.len() != 1 {
            return Err(fail(
                0,
                format!(
                    "null space of the columns of group {t:?} has dimension {}",
                    basis.len()
                ),
            ));
        }
        null_vectors.row_mut(i).copy_from_slice(basis[0].as_slice());
    }
    let targets = null_vectors.mul(f)?;
    let target_row = |t: &[usize]| targets.row(pairs.iter().position(|p| p == t).unwrap());

    // rows[w][i] starts with the fixed coefficients; the block on
    // H_{w, partner} is filled in once known.
    let targets_of: Vec<Vec<Vec<usize>>> = (1..=n)
        .map(|w| pairs.iter().filter(|t| !t.contains(&w)).cloned().collect())
        .collect();
    let partner = |w: usize, t: &[usize]| (1..=n).find(|&s| s != w && !t.contains(&s)).unwrap();
    let mut rows: Vec<FMatrix> = Vec::with_capacity(n);
    for w in 1..=n {
        let mut m = FMatrix::zeros(field, targets_of[w - 1].len(), a.k);
        for (i, t) in targets_of[w - 1].iter().enumerate() {
            let s = partner(w, t);
            let u = target_row(t);
            for other in (1..=n).filter(|&o| o != w && o != s) {
                for c in cols_of(&pair(w, other)) {
                    m.set(i, c, u[c]);
                }
            }
        }
        rows.push(m);
    }
    let mut known = vec![vec![false; 3]; n];
    let mut relations = Vec::with_capacity(n);

    for w in 1..=n {
        let tw = &targets_of[w - 1];
        let free_cols: Vec<Vec<usize>> = tw
            .iter()
            .map(|t| cols_of(&pair(w, partner(w, t))))
            .collect();
        let lambda = if w == 1 {
            // A_{1,{2,3}} + A_{1,{2,4}} - A_{1,{3,4}} = 0
            FVector::from_signed(field, &[1, 1, -1])
        } else {
            let known_cols: Vec<usize> = (0..3)
                .filter(|&i| known[w - 1][i])
                .flat_map(|i| free_cols[i].iter().copied())
                .collect();
            let e = rows[w - 1].select_columns(&known_cols);
            e.left_null_space()
                .into_iter()
                .next()
                .ok_or_else(|| fail(w, "pinned coefficients leave no rank-2 relation"))?
        };
        let lam = lambda.as_slice().to_vec();
        for i in 0..3 {
            if known[w - 1][i] {
                continue;
            }
            if lam[i] == 0 {
                return Err(fail(w, format!("relation has no weight on row {}", i + 1)));
            }
            let scale = field.neg(field.inv(lam[i])?);
            for &c in &free_cols[i] {
                let mut acc = 0;
                for (j, &lj) in lam.iter().enumerate() {
                    if j != i {
                        acc = field.mul_add(acc, lj, rows[w - 1].get(j, c));
                    }
                }
                rows[w - 1].set(i, c, field.mul(scale, acc));
            }
            known[w - 1][i] = true;
            // hand the complementary coefficients to the partner
            let t = &tw[i];
            let s = partner(w, t);
            let si = targets_of[s - 1].iter().position(|x| x == t).unwrap();
            let u = target_row(t);
            for &c in &free_cols[i] {
                let v = field.sub(u[c], rows[w - 1].get(i, c));
                if known[s - 1][si] && rows[s - 1].get(si, c) != v {
                    return Err(fail(w, format!("pairing with worker {s} is inconsistent")));
                }
                rows[s - 1].set(si, c, v);
            }
            known[s - 1][si] = true;
        }
        relations.push(lambda);
    }

    let mut sent = Vec::with_capacity(n);
    for w in 1..=n {
        let m = &rows[w - 1];
        let check = FMatrix::from_vec(field, 1, 3, relations[w - 1].as_slice().to_vec())?.mul(m)?;
        if !check.is_zero() {
            return Err(fail(w, "rows do not satisfy the relation"));
        }
        let rank = m.rank();
        if rank != 2 {
            return Err(fail(w, format!("rows have rank {rank}, expected 2")));
        }
        let mut pick: Vec<usize> = Vec::new();
        for i in 0..3 {
            let mut trial = pick.clone();
            trial.push(i);
            if m.select_rows(&trial).rank() == trial.len() {
                pick = trial;
            }
            if pick.len() == 2 {
                break;
            }
        }
        sent.push(m.select_rows(&pick));
    }
    for (i, t) in pairs.iter().enumerate() {
        let s: Vec<usize> = (1..=n).filter(|x| !t.contains(x)).collect();
        let r0 = targets_of[s[0] - 1].iter().position(|x| x == t).unwrap();
        let r1 = targets_of[s[1] - 1].iter().position(|x| x == t).unwrap();
        let sum = rows[s[0] - 1]
            .select_rows(&[r0])
            .add(&rows[s[1] - 1].select_rows(&[r1]))?;
        if sum.row(0) != targets.row(i) {
            return Err(fail(
                s[0],
                format!("workers {s:?} do not add up to U_{t:?}"),
            ));
        }
    }

    let code = GroupedCode {
        pairs,
        null_vectors,
        targets,
        targets_of,
        rows,
        relations,
        sent,
    };
    Ok(Scheme {
        params: Params {
            k: a.k,
            n: a.n,
            nr: a.nr,
            kc: f.rows(),
            l,
            q: field.modulus(),
        },
        field,
        regime: Regime::Grouped,
        assignment: a.clone(),
        groups: Some(g.groups.clone()),
        demand: f.clone(),
        working: f.clone(),
        padding_rows: 0,
        blocks: Vec::new(),
        mds: None,
        grouped: Some(code),
        output_map: None,
        degenerate: false,
    })
}

/// Demand used by the worked example of the grouped scheme.
#[cfg(test)]
pub(crate) fn reference_demand(field: crate::linalg::Field) -> FMatrix {
    FMatrix::from_signed(
        field,
        &[
            vec![1; 12],
            (1..=12).collect(),
            vec![1, 0, 3, 2, 8, 4, 1, 2, 9, 4, 5, 10],
        ],
    )
    .unwrap()
}
