//! Worker encoding, master decoding and decodability checks.

use rand::seq::index::sample;
use serde::Serialize;

use crate::combin::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::linalg::{rank_in_place, FMatrix, Field};
use crate::scheme::{Block, GroupedCode, Scheme, Source};
use crate::seed::{self, stream};

pub use crate::scheme::fallback_full_recovery;

/// Largest number of responder sets an exhaustive check will enumerate.
pub const DEFAULT_SUBSET_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerAnswer {
    pub worker: usize,
    /// Transmitted rows; `L` columns, or `L / m` in the large regime.
    pub payload: FMatrix,
    /// Number of transmitted symbols, `rows x cols` of the payload.
    pub symbols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecodeReport {
    pub responders: Vec<usize>,
    pub success: bool,
    /// `F · W` on success.
    #[serde(skip)]
    pub recovered: Option<FMatrix>,
    /// Total symbols downloaded from the responders.
    pub downloaded: usize,
    /// `downloaded / L`.
    pub cost: f64,
    pub diagnosis: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

fn check_worker(s: &Scheme, worker: usize) -> Result<()> {
    if worker == 0 || worker > s.params.n {
        return Err(Error::InvalidParams(format!(
            "worker {worker} outside [1, {}]",
            s.params.n
        )));
    }
    Ok(())
}

/// MDS symbol `Σ_c v[c] · W_c`, where `W_c` are the column chunks of width `width`.
fn mds_symbol(w: &FMatrix, v: &[u64], width: usize) -> FMatrix {
    let f = w.field();
    let mut out = FMatrix::zeros(f, w.rows(), width);
    for r in 0..w.rows() {
        let src = w.row(r);
        let dst = out.row_mut(r);
        for (c, &coef) in v.iter().enumerate() {
            if coef != 0 {
                crate::linalg::axpy(&f, dst, coef, &src[c * width..(c + 1) * width]);
            }
        }
    }
    out
}

/// Answer of `worker` for messages `w` (`K x L`); reads only the rows of `w`
/// the worker holds.
pub fn encode_worker(s: &Scheme, worker: usize, w: &FMatrix) -> Result<WorkerAnswer> {
    check_worker(s, worker)?;
    if w.rows() != s.params.k || w.cols() != s.params.l {
        return Err(Error::ShapeMismatch(format!(
            "messages must be {}x{}, got {}x{}",
            s.params.k,
            s.params.l,
            w.rows(),
            w.cols()
        )));
    }
    let held: Vec<usize> = s.assignment.set(worker).iter().map(|d| d - 1).collect();
    let local = w.select_rows(&held);
    let payload = match &s.mds {
        None => s.worker_rows(worker).select_columns(&held).mul(&local)?,
        Some(mds) => {
            let width = s.symbol_width();
            let parts = s
                .blocks
                .iter()
                .enumerate()
                .map(|(b, block)| {
                    let Source::Mds(i) = block.source else {
                        unreachable!("large-regime blocks read MDS symbols")
                    };
                    let sym = mds_symbol(&local, &mds.vector(s.field, i), width);
                    s.message_rows(b, worker).select_columns(&held).mul(&sym)
                })
                .collect::<Result<Vec<_>>>()?;
            FMatrix::vstack(s.field, width, &parts.iter().collect::<Vec<_>>())?
        }
    };
    let symbols = payload.rows() * payload.cols();
    Ok(WorkerAnswer {
        worker,
        payload,
        symbols,
    })
}

/// Answers of every worker.
pub fn encode_all(s: &Scheme, w: &FMatrix) -> Result<Vec<WorkerAnswer>> {
    (1..=s.params.n).map(|n| encode_worker(s, n, w)).collect()
}

fn failed(responders: Vec<usize>, downloaded: usize, l: usize, why: String) -> DecodeReport {
    DecodeReport {
        responders,
        success: false,
        recovered: None,
        downloaded,
        cost: downloaded as f64 / l as f64,
        diagnosis: Some(why),
    }
}

/// Recovers `F · W` from the answers of exactly `N_r` distinct workers.
pub fn decode(s: &Scheme, answers: &[WorkerAnswer]) -> Result<DecodeReport> {
    let nr = s.params.nr;
    if answers.len() != nr {
        return Err(Error::WrongResponderCount {
            expected: nr,
            got: answers.len(),
        });
    }
    let mut order: Vec<&WorkerAnswer> = answers.iter().collect();
    order.sort_by_key(|a| a.worker);
    for a in &order {
        check_worker(s, a.worker)?;
    }
    if order.windows(2).any(|p| p[0].worker == p[1].worker) {
        return Err(Error::WrongResponderCount {
            expected: nr,
            got: order
                .iter()
                .map(|a| a.worker)
                .collect::<std::collections::BTreeSet<_>>()
                .len(),
        });
    }
    let responders: Vec<usize> = order.iter().map(|a| a.worker).collect();
    let downloaded: usize = order.iter().map(|a| a.symbols).sum();
    let l = s.params.l;
    let width = s.symbol_width();
    for a in &order {
        let want = s.rows_per_worker();
        if a.payload.rows() != want || a.payload.cols() != width {
            return Err(Error::ShapeMismatch(format!(
                "worker {} answered {}x{}, expected {want}x{width}",
                a.worker,
                a.payload.rows(),
                a.payload.cols()
            )));
        }
    }
    let f = s.field;

    if let Some(g) = &s.grouped {
        let sent: Vec<&FMatrix> = responders.iter().map(|&n| &g.sent[n - 1]).collect();
        let ra = FMatrix::vstack(f, s.params.k, &sent)?;
        let xa = FMatrix::vstack(f, l, &order.iter().map(|a| &a.payload).collect::<Vec<_>>())?;
        return Ok(match ra.solve_left(&s.demand)? {
            Some(d) => DecodeReport {
                responders,
                success: true,
                recovered: Some(d.mul(&xa)?),
                downloaded,
                cost: downloaded as f64 / l as f64,
                diagnosis: None,
            },
            None => failed(
                responders,
                downloaded,
                l,
                "demand is outside the span of the responders' rows".into(),
            ),
        });
    }

    // Per block: C_A⁻¹ X_A = D_b · W_b.
    let mut per_block = Vec::with_capacity(s.blocks.len());
    let mut offset = 0;
    for (b, block) in s.blocks.iter().enumerate() {
        let pw = block.per_worker;
        let rows: Vec<usize> = (offset..offset + pw).collect();
        let codes: Vec<FMatrix> = responders.iter().map(|&n| block.task_rows(n)).collect();
        let xs: Vec<FMatrix> = order.iter().map(|a| a.payload.select_rows(&rows)).collect();
        let ca = FMatrix::vstack(f, block.code.cols(), &codes.iter().collect::<Vec<_>>())?;
        let xa = FMatrix::vstack(f, width, &xs.iter().collect::<Vec<_>>())?;
        match ca.inverse() {
            Ok(inv) => per_block.push(inv.mul(&xa)?),
            Err(_) => {
                return Ok(failed(
                    responders,
                    downloaded,
                    l,
                    format!("stacked code of block {b} is singular"),
                ))
            }
        }
        offset += pw;
    }

    let rows_out = s.recovered_rows();
    let mut recovered = FMatrix::zeros(f, rows_out, l);
    match (&s.mds, s.regime) {
        (Some(mds), _) => {
            for j in 0..rows_out {
                let idx = mds.subsets_with(j);
                let mut z = FMatrix::zeros(f, idx.len(), width);
                for (r, &i) in idx.iter().enumerate() {
                    let pos = mds.subsets[i].binary_search(&j).expect("subset contains j");
                    z.row_mut(r).copy_from_slice(per_block[i].row(pos));
                }
                let Ok(inv) = mds.stack(f, j).inverse() else {
                    return Ok(failed(
                        responders,
                        downloaded,
                        l,
                        format!("MDS stack of demand row {} is singular", j + 1),
                    ));
                };
                let chunks = inv.mul(&z)?;
                let out = recovered.row_mut(j);
                for c in 0..mds.m {
                    out[c * width..(c + 1) * width].copy_from_slice(chunks.row(c));
                }
            }
        }
        (None, crate::scheme::Regime::Small) => {
            for (j, y) in per_block.iter().enumerate() {
                recovered.row_mut(j).copy_from_slice(y.row(0));
            }
        }
        (None, _) => {
            for j in 0..rows_out {
                recovered.row_mut(j).copy_from_slice(per_block[0].row(j));
            }
        }
    }
    if let Some(map) = &s.output_map {
        recovered = map.mul(&recovered)?;
    }
    Ok(DecodeReport {
        responders,
        success: true,
        recovered: Some(recovered),
        downloaded,
        cost: downloaded as f64 / l as f64,
        diagnosis: None,
    })
}

/// Whether the responders in `a` (sorted, 1-based) can decode.
pub fn decodable(s: &Scheme, a: &[usize]) -> bool {
    let mut buf = Vec::new();
    subset_decodable(s, a, &mut buf)
}

fn subset_decodable(s: &Scheme, a: &[usize], buf: &mut Vec<u64>) -> bool {
    if let Some(g) = &s.grouped {
        return grouped_decodable(s, g, a);
    }
    s.blocks.iter().all(|b| block_decodable(s.field, b, a, buf))
}

fn grouped_decodable(s: &Scheme, g: &GroupedCode, a: &[usize]) -> bool {
    let sent: Vec<&FMatrix> = a.iter().map(|&n| &g.sent[n - 1]).collect();
    let ra = FMatrix::vstack(s.field, s.params.k, &sent).expect("rows share the width");
    matches!(ra.solve_left(&s.demand), Ok(Some(_)))
}

fn block_decodable(f: Field, block: &Block, a: &[usize], buf: &mut Vec<u64>) -> bool {
    let pw = block.per_worker;
    let r = block.code.cols();
    let rows = a.len() * pw;
    if rows != r {
        return false;
    }
    buf.clear();
    for &n in a {
        let start = (n - 1) * pw;
        for i in start..start + pw {
            buf.extend_from_slice(block.code.row(i));
        }
    }
    rank_in_place(&f, buf, rows, r) == r
}

/// Responder sets (sorted, lexicographic) that cannot decode.
pub fn verify_decodability(s: &Scheme, mode: VerifyMode) -> Result<Vec<Vec<usize>>> {
    verify_with_cap(s, mode, DEFAULT_SUBSET_CAP)
}

pub fn verify_with_cap(s: &Scheme, mode: VerifyMode, cap: u128) -> Result<Vec<Vec<usize>>> {
    let (n, nr) = (s.params.n, s.params.nr);
    let candidates: Vec<Vec<usize>> = match mode {
        VerifyMode::Exhaustive => {
            let count = binomial(n as i64, nr as i64);
            if count > cap {
                return Err(Error::SubsetCapExceeded { count, cap });
            }
            Combinations::new(n, nr)
                .map(|c| c.into_iter().map(|x| x + 1).collect())
                .collect()
        }
        VerifyMode::Sample { count, seed } => {
            let mut rng = seed::rng(seed::derive(seed, stream::SAMPLE));
            let mut picked: Vec<Vec<usize>> = (0..count)
                .map(|_| {
                    let mut a: Vec<usize> =
                        sample(&mut rng, n, nr).into_iter().map(|x| x + 1).collect();
                    a.sort_unstable();
                    a
                })
                .collect();
            picked.sort();
            picked.dedup();
            picked
        }
    };
    let mds_ok = s
        .mds
        .as_ref()
        .is_none_or(|m| m.stacks_invertible(s.field, s.working.rows()));
    if !mds_ok {
        return Ok(candidates);
    }
    if let Some(g) = &s.grouped {
        return Ok(candidates
            .into_iter()
            .filter(|a| !grouped_decodable(s, g, a))
            .collect());
    }
    // block-major order keeps each block's code in cache across subsets
    let mut failed = vec![false; candidates.len()];
    let mut buf = Vec::new();
    for block in &s.blocks {
        for (a, bad) in candidates.iter().zip(failed.iter_mut()) {
            if !*bad && !block_decodable(s.field, block, a, &mut buf) {
                *bad = true;
            }
        }
    }
    Ok(candidates
        .into_iter()
        .zip(failed)
        .filter_map(|(a, bad)| bad.then_some(a))
        .collect())
}
