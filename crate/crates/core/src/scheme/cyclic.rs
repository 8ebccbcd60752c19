//! The three regimes of the cyclic construction.

use super::{
    check_demand, lift, pad_demand, subsets, Block, BlockDemand, BuildOptions, Generator,
    MdsDescriptor, Params, Regime, Scheme, Source,
};
use crate::assignment::{Assignment, AssignmentKind};
use crate::combin::choose;
use crate::error::{Error, Result};
use crate::linalg::{FMatrix, Field};
use crate::seed::{self, stream};

/// Slots (0-based) each worker does not hold.
fn complements(sets: &[Vec<usize>], slots: usize) -> Vec<Vec<usize>> {
    sets.iter()
        .map(|held| {
            (0..slots)
                .filter(|s| held.binary_search(&(s + 1)).is_err())
                .collect()
        })
        .collect()
}

/// For every worker, the first `pw` canonical left-null vectors of `demand`
/// restricted to the columns the worker lacks. Returns the stacked code and
/// whether any null space had more than `pw` vectors.
pub(crate) fn null_code(demand: &FMatrix, comps: &[Vec<usize>], pw: usize) -> (FMatrix, bool) {
    let rows: Vec<&[u64]> = (0..demand.rows()).map(|i| demand.row(i)).collect();
    null_code_rows(demand.field(), &rows, comps, pw)
}

/// [`null_code`] for a demand given by its rows.
fn null_code_rows(f: Field, demand: &[&[u64]], comps: &[Vec<usize>], pw: usize) -> (FMatrix, bool) {
    let r = demand.len();
    let mut code = FMatrix::zeros(f, comps.len() * pw, r);
    let mut degenerate = false;
    let mut buf = Vec::new();
    let mut free = Vec::with_capacity(r);
    for (w, comp) in comps.iter().enumerate() {
        let c = comp.len();
        buf.clear();
        buf.resize(c * r, 0);
        for (i, row) in demand.iter().enumerate() {
            for (j, &col) in comp.iter().enumerate() {
                buf[j * r + i] = row[col];
            }
        }
        let pivots = crate::linalg::rref_in_place(&f, &mut buf, c, r, r);
        free.clear();
        let mut next_pivot = pivots.iter().peekable();
        for col in 0..r {
            if next_pivot.peek() == Some(&&col) {
                next_pivot.next();
            } else {
                free.push(col);
            }
        }
        degenerate |= free.len() > pw;
        for (idx, &fc) in free.iter().take(pw).enumerate() {
            let out = code.row_mut(w * pw + idx);
            out[fc] = 1;
            for (i, &p) in pivots.iter().enumerate() {
                out[p] = f.neg(buf[i * r + fc]);
            }
        }
    }
    (code, degenerate)
}

fn cyclic_only(a: &Assignment) -> Result<()> {
    match a.kind {
        AssignmentKind::Grouped => Err(Error::InvalidParams(
            "the cyclic construction needs a cyclic or virtually padded assignment".into(),
        )),
        _ => Ok(()),
    }
}

fn params(a: &Assignment, f: &FMatrix, l: usize) -> Params {
    Params {
        k: a.k,
        n: a.n,
        nr: a.nr,
        kc: f.rows(),
        l,
        q: f.field().modulus(),
    }
}

fn plain_l(opts: &BuildOptions) -> Result<usize> {
    match opts.l {
        Some(0) => Err(Error::BadMessageLength { l: 0, m: 1 }),
        Some(l) => Ok(l),
        None => Ok(1),
    }
}

/// `K/N ≤ K_c ≤ (K/N) N_r`: pad `F` to `(K/N) N_r` rows and give each worker
/// the `K/N` canonical left-null vectors of the columns it lacks.
pub fn build_middle(f: &FMatrix, a: &Assignment, opts: &BuildOptions) -> Result<Scheme> {
    check_demand(f, a)?;
    cyclic_only(a)?;
    let k_eff = a.effective_k();
    let t = k_eff / a.n;
    let r = t * a.nr;
    let kc = f.rows();
    if kc < t || kc > r {
        return Err(Error::InvalidParams(format!(
            "middle regime needs {t} <= K_c <= {r}, got K_c={kc}"
        )));
    }
    let l = plain_l(opts)?;
    let padded = pad_demand(f, r, seed::derive(opts.seed, stream::PADDING))?;
    let working = lift(&padded, a, seed::derive(opts.seed, stream::VIRTUAL));
    let comps = complements(&a.effective_sets(), k_eff);
    let (code, degenerate) = null_code(&working, &comps, t);
    Ok(Scheme {
        params: params(a, f, l),
        field: f.field(),
        regime: Regime::Middle,
        assignment: a.clone(),
        groups: None,
        demand: f.clone(),
        working,
        padding_rows: r - kc,
        blocks: vec![Block {
            source: Source::Full,
            demand: BlockDemand::Working,
            per_worker: t,
            code,
        }],
        mds: None,
        grouped: None,
        output_map: None,
        degenerate,
    })
}

/// Aggregation map for demand row `j`: row `n'` (0-based) carries
/// `F[j][n' + pN]` at column `n' + pN`, so that row `n'` times `W` is the
/// aggregated message `W'_{j, n'+1}`.
pub fn aggregated_messages(f: &FMatrix, j: usize, n: usize) -> FMatrix {
    let mut agg = FMatrix::zeros(f.field(), n, f.cols());
    for col in 0..f.cols() {
        agg.set(col % n, col, f.get(j, col));
    }
    agg
}

/// `K_c < K/N`: one sub-problem per demand row over the `N` aggregated
/// messages of that row, each solved as a `(N, N, N_r, 1)` middle instance.
pub fn build_small(f: &FMatrix, a: &Assignment, opts: &BuildOptions) -> Result<Scheme> {
    check_demand(f, a)?;
    cyclic_only(a)?;
    let k_eff = a.effective_k();
    let (n, nr) = (a.n, a.nr);
    let t = k_eff / n;
    let kc = f.rows();
    if kc >= t {
        return Err(Error::InvalidParams(format!(
            "small regime needs K_c < {t}, got K_c={kc}"
        )));
    }
    let l = plain_l(opts)?;
    let field = f.field();
    let working = lift(f, a, seed::derive(opts.seed, stream::VIRTUAL));
    let agg_sets = crate::assignment::cyclic(n, n, nr)?.sets;
    let comps = complements(&agg_sets, n);
    let pad_base = seed::derive(opts.seed, stream::PADDING);
    let mut degenerate = false;
    let mut blocks = Vec::with_capacity(kc);
    for j in 0..kc {
        let ones = FMatrix::from_vec(field, 1, n, vec![1; n])?;
        let sub = pad_demand(&ones, nr, seed::derive(pad_base, j as u64))?;
        let (code, deg) = null_code(&sub, &comps, 1);
        degenerate |= deg;
        let demand = sub.mul(&aggregated_messages(&working, j, n))?;
        blocks.push(Block {
            source: Source::Full,
            demand: BlockDemand::Own(demand),
            per_worker: 1,
            code,
        });
    }
    Ok(Scheme {
        params: params(a, f, l),
        field,
        regime: Regime::Small,
        assignment: a.clone(),
        groups: None,
        demand: f.clone(),
        working,
        padding_rows: kc * (nr - 1),
        blocks,
        mds: None,
        grouped: None,
        output_map: None,
        degenerate,
    })
}

/// Explicit `points.len() x m` Vandermonde matrix with rows `(1, x, ..., x^{m-1})`.
pub fn vandermonde(field: Field, points: &[u64], m: usize) -> FMatrix {
    let mut g = FMatrix::zeros(field, points.len(), m);
    for (i, &x) in points.iter().enumerate() {
        let mut p = 1;
        for c in 0..m {
            g.set(i, c, p);
            p = field.mul(p, x);
        }
    }
    g
}

/// `K_c > (K/N) N_r`: split each message into `m = C(K_c-1, r-1)` pieces,
/// MDS-encode them into `C(K_c, r)` symbols, and run one middle instance per
/// `r`-subset `S` of the demand rows on symbol `W_S`.
pub fn build_large(f: &FMatrix, a: &Assignment, opts: &BuildOptions) -> Result<Scheme> {
    check_demand(f, a)?;
    cyclic_only(a)?;
    let k_eff = a.effective_k();
    let t = k_eff / a.n;
    let r = t * a.nr;
    let kc = f.rows();
    if kc <= r {
        return Err(Error::InvalidParams(format!(
            "large regime needs K_c > {r}, got K_c={kc}"
        )));
    }
    let m = choose(kc - 1, r - 1);
    let len = choose(kc, r);
    let l = opts.l.unwrap_or(m);
    if l == 0 || !l.is_multiple_of(m) {
        return Err(Error::BadMessageLength { l, m });
    }
    let field = f.field();
    let generator = match &opts.generators {
        Some(g) => {
            if g.rows() != len || g.cols() != m {
                return Err(Error::ShapeMismatch(format!(
                    "MDS generator must be {len}x{m}, got {}x{}",
                    g.rows(),
                    g.cols()
                )));
            }
            Generator::Explicit(g.clone())
        }
        None => {
            if len as u64 >= field.modulus() {
                return Err(Error::InvalidParams(format!(
                    "MDS length {len} needs more than {} distinct field points",
                    field.modulus()
                )));
            }
            Generator::Vandermonde((1..=len as u64).collect())
        }
    };
    let working = lift(f, a, seed::derive(opts.seed, stream::VIRTUAL));
    let comps = complements(&a.effective_sets(), k_eff);
    let subsets = subsets(kc, r);
    let mut degenerate = false;
    let mut blocks = Vec::with_capacity(len);
    for (i, s) in subsets.iter().enumerate() {
        let rows: Vec<&[u64]> = s.iter().map(|&i| working.row(i)).collect();
        let (code, deg) = null_code_rows(field, &rows, &comps, t);
        degenerate |= deg;
        blocks.push(Block {
            source: Source::Mds(i),
            demand: BlockDemand::Rows(s.clone()),
            per_worker: t,
            code,
        });
    }
    Ok(Scheme {
        params: params(a, f, l),
        field,
        regime: Regime::Large,
        assignment: a.clone(),
        groups: None,
        demand: f.clone(),
        working,
        padding_rows: 0,
        blocks,
        mds: Some(MdsDescriptor {
            m,
            len,
            r,
            subsets,
            generator,
        }),
        grouped: None,
        output_map: None,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{cyclic, general};
    use crate::scheme::build;

    fn field() -> Field {
        Field::default()
    }

    fn six_dataset_demand() -> FMatrix {
        FMatrix::from_signed(
            field(),
            &[
                vec![1, 1, 1, 1, 1, 1],
                vec![1, 2, 3, 4, 5, 6],
                vec![1, 0, 2, 3, 5, 4],
                vec![1, 2, 1, 4, 4, 0],
            ],
        )
        .unwrap()
    }

    fn in_span(rows: &FMatrix, v: &[i64]) -> bool {
        let target = FMatrix::from_signed(rows.field(), &[v.to_vec()]).unwrap();
        rows.solve_left(&target).unwrap().is_some()
    }

    /// Every message row of every worker vanishes outside the worker's datasets.
    fn assert_computable(s: &Scheme) {
        for w in 1..=s.params.n {
            let rows = s.worker_rows(w);
            for d in s.assignment.complement(w) {
                for i in 0..rows.rows() {
                    assert_eq!(rows.get(i, d - 1), 0, "worker {w} row {i} uses W_{d}");
                }
            }
        }
    }

    #[test]
    fn six_dataset_worker_codes() {
        let f = six_dataset_demand();
        let a = cyclic(6, 3, 2).unwrap();
        let s = build_middle(&f, &a, &BuildOptions::default()).unwrap();
        assert_eq!(s.padding_rows, 0);
        assert!(!s.degenerate);
        let w1 = s.blocks[0].task_rows(1);
        assert_eq!(w1.rows(), 2);
        assert!(in_span(&w1, &[-6, 1, 0, 3]));
        assert!(in_span(&w1, &[0, -2, 3, 0]));
        let msg = s.worker_rows(1);
        assert!(in_span(&msg, &[-2, 2, 0, 10, 11, 0]));
        assert!(in_span(&msg, &[1, -4, 0, 1, 5, 0]));
        let w2 = s.blocks[0].task_rows(2);
        assert!(in_span(&w2, &[0, -1, 0, 1]));
        assert!(in_span(&w2, &[-1, -2, 3, 0]));
        let w3 = s.blocks[0].task_rows(3);
        assert!(in_span(&w3, &[-2, -2, 0, 3]));
        assert!(in_span(&w3, &[10, -5, 3, 0]));
        assert_computable(&s);
    }

    #[test]
    fn three_workers_single_row() {
        let f = FMatrix::from_signed(field(), &[vec![1, 1, 1], vec![1, 2, 3]]).unwrap();
        let a = cyclic(3, 3, 2).unwrap();
        let s = build_middle(&f, &a, &BuildOptions::default()).unwrap();
        let row = s.worker_rows(1);
        assert_eq!(row.rows(), 1);
        // a scalar multiple of (2, 1, 0): 2 * row[1] == row[0] and row[2] == 0
        assert_eq!(row.get(0, 0), field().mul(2, row.get(0, 1)));
        assert_eq!(row.get(0, 2), 0);
        assert_ne!(row.get(0, 1), 0);
    }

    #[test]
    fn one_dataset_per_worker_gives_unit_tasks() {
        // K = N, N_r = N: every worker holds only its own dataset.
        let f = FMatrix::random(field(), 1, 4, 5);
        let a = cyclic(4, 4, 4).unwrap();
        let s = build(&f, &a, &BuildOptions::default()).unwrap();
        assert_eq!(s.regime, Regime::Middle);
        assert_eq!(s.padding_rows, 3);
        for w in 1..=4 {
            let msg = s.worker_rows(w);
            assert_eq!(msg.rows(), 1);
            for d in 0..4 {
                assert_eq!(msg.get(0, d) != 0, d == w - 1);
            }
        }
        // K = N, N_r = 1: every worker holds all, null space is everything
        let a = cyclic(4, 4, 1).unwrap();
        let s = build(&f, &a, &BuildOptions::default()).unwrap();
        for w in 1..=4 {
            assert_eq!(s.blocks[0].task_rows(w), FMatrix::identity(field(), 1));
            assert_eq!(s.worker_rows(w), f);
        }
    }

    #[test]
    fn padding_keeps_rows_on_top() {
        let f = FMatrix::random(field(), 2, 6, 1);
        let a = cyclic(6, 3, 2).unwrap();
        let s = build_middle(&f, &a, &BuildOptions::with_seed(9)).unwrap();
        assert_eq!(s.working.rows(), 4);
        assert_eq!(s.working.select_rows(&[0, 1]), f);
        assert_eq!(s.padding_rows, 2);
    }

    #[test]
    fn small_regime_aggregates() {
        let f = FMatrix::from_signed(field(), &[vec![1; 9], (1..=9).collect()]).unwrap();
        let agg = aggregated_messages(&f, 1, 3);
        assert_eq!(agg.to_signed_rows()[0], vec![1, 0, 0, 4, 0, 0, 7, 0, 0]);
        let a = cyclic(9, 3, 2).unwrap();
        let s = build(&f, &a, &BuildOptions::default()).unwrap();
        assert_eq!(s.regime, Regime::Small);
        assert_eq!(s.blocks.len(), 2);
        assert_eq!(s.rows_per_worker(), 2);
        assert_computable(&s);
        // sub-problem demand row 0 is F_j itself
        for j in 0..2 {
            let d = s.block_demand(j);
            assert_eq!(d.row(0), f.row(j));
        }
    }

    #[test]
    fn all_ones_single_row_aggregates_are_messages() {
        let f = FMatrix::from_vec(field(), 1, 3, vec![1; 3]).unwrap();
        assert_eq!(aggregated_messages(&f, 0, 3), FMatrix::identity(field(), 3));
    }

    #[test]
    fn large_regime_layout() {
        let f =
            FMatrix::from_signed(field(), &[vec![1, 1, 1], vec![1, 2, 3], vec![1, 4, 9]]).unwrap();
        let a = cyclic(3, 3, 2).unwrap();
        let s = build(&f, &a, &BuildOptions::default()).unwrap();
        assert_eq!(s.regime, Regime::Large);
        let mds = s.mds.as_ref().unwrap();
        assert_eq!((mds.m, mds.len), (2, 3));
        assert_eq!(s.params.l, 2);
        assert_eq!(mds.subsets, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(
            s.block_demand(2).to_signed_rows(),
            vec![vec![1, 2, 3], vec![1, 4, 9]]
        );
        assert!(mds.stacks_invertible(field(), 3));
        for j in 0..3 {
            assert_eq!(mds.stack(field(), j).rank(), 2);
        }
        assert_computable(&s);

        // the explicit (1,0), (0,1), (1,1) generator is also accepted
        let g = FMatrix::from_signed(field(), &[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let opts = BuildOptions {
            generators: Some(g),
            ..BuildOptions::default()
        };
        let s = build(&f, &a, &opts).unwrap();
        assert!(s.mds.as_ref().unwrap().stacks_invertible(field(), 3));
        let bad = FMatrix::from_signed(field(), &[vec![1, 0], vec![1, 0], vec![1, 1]]).unwrap();
        let opts = BuildOptions {
            generators: Some(bad),
            ..BuildOptions::default()
        };
        assert!(!build(&f, &a, &opts)
            .unwrap()
            .mds
            .unwrap()
            .stacks_invertible(field(), 3));
    }

    #[test]
    fn large_regime_rejects_bad_lengths() {
        let f = FMatrix::random(field(), 3, 3, 2);
        let a = cyclic(3, 3, 2).unwrap();
        let opts = BuildOptions {
            l: Some(3),
            ..BuildOptions::default()
        };
        assert!(matches!(
            build(&f, &a, &opts),
            Err(Error::BadMessageLength { l: 3, m: 2 })
        ));
        let opts = BuildOptions {
            l: Some(8),
            ..BuildOptions::default()
        };
        assert_eq!(build(&f, &a, &opts).unwrap().symbol_width(), 4);
    }

    #[test]
    fn full_threshold_large_is_one_block() {
        // N_r = N, K = N, K_c = K sits in the middle regime with r = K.
        let f = FMatrix::random(field(), 4, 4, 3);
        let a = cyclic(4, 4, 4).unwrap();
        let s = build(&f, &a, &BuildOptions::default()).unwrap();
        assert_eq!(s.regime, Regime::Middle);
        assert_eq!(s.blocks.len(), 1);
        assert_eq!(choose(3, 3), 1);
    }

    #[test]
    fn regime_bounds_are_checked() {
        let f = FMatrix::random(field(), 1, 6, 2);
        let a = cyclic(6, 3, 2).unwrap();
        assert!(build_middle(&f, &a, &BuildOptions::default()).is_err());
        assert!(build_large(&f, &a, &BuildOptions::default()).is_err());
        let f = FMatrix::random(field(), 2, 6, 2);
        assert!(build_small(&f, &a, &BuildOptions::default()).is_err());
    }

    #[test]
    fn general_k_rows_use_real_datasets_only() {
        let a = general(7, 3, 2).unwrap();
        for kc in [2, 5, 7] {
            let f = FMatrix::random(field(), kc, 7, kc as u64);
            let s = build(&f, &a, &BuildOptions::with_seed(4)).unwrap();
            assert_eq!(s.working.cols(), 9);
            assert_eq!(s.worker_rows(1).cols(), 7);
            assert_computable(&s);
        }
    }

    #[test]
    fn orthogonality_holds_per_block() {
        for (k, n, nr, kc) in [
            (6, 3, 2, 4),
            (9, 3, 2, 2),
            (3, 3, 2, 3),
            (8, 4, 3, 7),
            (12, 4, 2, 9),
        ] {
            let a = cyclic(k, n, nr).unwrap();
            let f = FMatrix::random(field(), kc, k, (k * 100 + kc) as u64);
            let s = build(&f, &a, &BuildOptions::with_seed(1)).unwrap();
            for b in 0..s.blocks.len() {
                let d = s.block_demand(b);
                for w in 1..=n {
                    let comp: Vec<usize> = a.complement(w).iter().map(|c| c - 1).collect();
                    let prod = s.blocks[b]
                        .task_rows(w)
                        .mul(&d.select_columns(&comp))
                        .unwrap();
                    assert!(prod.is_zero());
                }
            }
        }
    }
}
