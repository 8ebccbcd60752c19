//! Per-worker coding schemes.
//!
//! A scheme is a list of [`Block`]s. Every block is an instance of the
//! basic null-space construction: a block demand `D_b` with `r_b` rows over
//! the effective message slots, and for each worker `pw` task-coefficient
//! rows `u` with `u · D_b` supported on the worker's datasets. Workers send
//! `u · D_b · W_b`, where `W_b` is either the full message block or one MDS
//! symbol of it. The grouped scheme is the exception and stores explicit
//! message-coefficient rows instead.

mod cyclic;
mod fixture;
mod grouped;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

pub use cyclic::{aggregated_messages, build_large, build_middle, build_small, vandermonde};
pub use fixture::adversarial_fixture;
pub use grouped::{build_grouped, GroupedCode};

use crate::assignment::{Assignment, AssignmentKind, Group};
use crate::combin::Combinations;
use crate::error::{Error, Result};
use crate::linalg::{FMatrix, Field};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub k: usize,
    pub n: usize,
    pub nr: usize,
    pub kc: usize,
    pub l: usize,
    pub q: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Small,
    Middle,
    Large,
    Grouped,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Small => "small",
            Regime::Middle => "middle",
            Regime::Large => "large",
            Regime::Grouped => "grouped",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime of the cyclic construction for `k_eff` effective slots.
pub fn regime_of(k_eff: usize, n: usize, nr: usize, kc: usize) -> Regime {
    let t = k_eff / n;
    if kc < t {
        Regime::Small
    } else if kc <= t * nr {
        Regime::Middle
    } else {
        Regime::Large
    }
}

/// Which symbols a block's code is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum Source {
    /// The whole message block `W` (`K x L`).
    Full,
    /// MDS symbol number `i` (`K x L/m`), `W_S = Σ_c v_S[c] W_chunk_c`.
    Mds(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockDemand {
    /// The scheme's whole working demand.
    Working,
    /// The listed (0-based) rows of the working demand.
    Rows(Vec<usize>),
    /// A demand of its own, over effective slots.
    Own(FMatrix),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub source: Source,
    pub demand: BlockDemand,
    /// Rows each worker transmits for this block.
    pub per_worker: usize,
    /// Task-coefficient rows of all workers, worker `n` owning rows
    /// `(n - 1) * per_worker .. n * per_worker`; shape `(N * per_worker) x r_b`.
    pub code: FMatrix,
}

impl Block {
    pub fn task_rows(&self, worker: usize) -> FMatrix {
        let start = (worker - 1) * self.per_worker;
        self.code
            .select_rows(&(start..start + self.per_worker).collect::<Vec<_>>())
    }
}

/// Generator of the MDS code; row `i` is `v_S` for the `i`-th subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    /// Rows `(1, x, ..., x^{m-1})` at the listed distinct points.
    Vandermonde(Vec<u64>),
    /// An explicit `len x m` matrix.
    Explicit(FMatrix),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdsDescriptor {
    /// Number of sub-messages each message is split into.
    pub m: usize,
    /// Code length, one symbol per row subset.
    pub len: usize,
    /// Rows per sub-problem.
    pub r: usize,
    /// Row subsets `S` of the working demand (0-based), lexicographic.
    pub subsets: Vec<Vec<usize>>,
    pub generator: Generator,
}

impl MdsDescriptor {
    /// `v_S` for `subsets[i]`.
    pub fn vector(&self, field: Field, i: usize) -> Vec<u64> {
        match &self.generator {
            Generator::Vandermonde(points) => {
                let mut v = Vec::with_capacity(self.m);
                let mut p = 1;
                for _ in 0..self.m {
                    v.push(p);
                    p = field.mul(p, points[i]);
                }
                v
            }
            Generator::Explicit(g) => g.row(i).to_vec(),
        }
    }

    /// Indices of the subsets containing working row `j`, in lexicographic order.
    pub fn subsets_with(&self, j: usize) -> Vec<usize> {
        (0..self.len)
            .filter(|&i| self.subsets[i].binary_search(&j).is_ok())
            .collect()
    }

    /// The `m x m` stack of `v_S` over the subsets containing row `j`.
    pub fn stack(&self, field: Field, j: usize) -> FMatrix {
        let rows: Vec<Vec<u64>> = self
            .subsets_with(j)
            .into_iter()
            .map(|i| self.vector(field, i))
            .collect();
        FMatrix::from_rows(field, &rows).expect("generator rows share the width")
    }

    /// Whether every per-row stack is invertible. Vandermonde generators on
    /// distinct points always are, so only explicit generators are reduced.
    pub fn stacks_invertible(&self, field: Field, rows: usize) -> bool {
        match &self.generator {
            Generator::Vandermonde(p) => {
                let mut sorted = p.clone();
                sorted.sort_unstable();
                sorted.dedup();
                sorted.len() == p.len()
            }
            Generator::Explicit(_) => (0..rows).all(|j| self.stack(field, j).rank() == self.m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub params: Params,
    pub field: Field,
    pub regime: Regime,
    pub assignment: Assignment,
    pub groups: Option<Vec<Group>>,
    /// The requested `K_c x K` demand.
    pub demand: FMatrix,
    /// Demand the blocks refer to, over effective slots: padded for the middle
    /// regime, a random invertible matrix for the fallback.
    pub working: FMatrix,
    pub padding_rows: usize,
    pub blocks: Vec<Block>,
    pub mds: Option<MdsDescriptor>,
    pub grouped: Option<GroupedCode>,
    /// Fallback only: `F · R⁻¹`, turning recovered `R · W` into `F · W`.
    pub output_map: Option<FMatrix>,
    /// Some null space was larger than needed; the scheme may not decode.
    pub degenerate: bool,
}

/// Options shared by the builders.
#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    /// Symbols per message; defaults to the split count `m` (1 outside the large regime).
    pub l: Option<usize>,
    /// Seed for padding rows, virtual columns and fallback matrices.
    pub seed: u64,
    /// Explicit MDS generator (`len x m`) replacing the Vandermonde default.
    pub generators: Option<FMatrix>,
}

impl BuildOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

impl Scheme {
    pub fn effective_k(&self) -> usize {
        self.assignment.effective_k()
    }

    /// Symbols worker `worker` transmits according to the scheme layout.
    pub fn symbols(&self, worker: usize) -> usize {
        match &self.grouped {
            Some(g) => g.sent[worker - 1].rows() * self.params.l,
            None => self.rows_per_worker() * self.symbol_width(),
        }
    }

    /// Columns of each transmitted row: `L / m` in the large regime, else `L`.
    pub fn symbol_width(&self) -> usize {
        match &self.mds {
            Some(m) => self.params.l / m.m,
            None => self.params.l,
        }
    }

    pub fn rows_per_worker(&self) -> usize {
        match &self.grouped {
            Some(g) => g.sent[0].rows(),
            None => self.blocks.iter().map(|b| b.per_worker).sum(),
        }
    }

    /// Demand of block `b` over effective slots.
    pub fn block_demand(&self, b: usize) -> Cow<'_, FMatrix> {
        match &self.blocks[b].demand {
            BlockDemand::Working => Cow::Borrowed(&self.working),
            BlockDemand::Rows(rows) => Cow::Owned(self.working.select_rows(rows)),
            BlockDemand::Own(m) => Cow::Borrowed(m),
        }
    }

    /// Message-coefficient rows (over the `K` real datasets) that `worker`
    /// transmits for block `b`.
    pub fn message_rows(&self, b: usize, worker: usize) -> FMatrix {
        let eff = self.blocks[b]
            .task_rows(worker)
            .mul(&self.block_demand(b))
            .expect("code and demand agree");
        self.to_real(&eff)
    }

    /// All message-coefficient rows of a worker, blocks concatenated.
    pub fn worker_rows(&self, worker: usize) -> FMatrix {
        if let Some(g) = &self.grouped {
            return g.sent[worker - 1].clone();
        }
        let parts: Vec<FMatrix> = (0..self.blocks.len())
            .map(|b| self.message_rows(b, worker))
            .collect();
        FMatrix::vstack(self.field, self.params.k, &parts.iter().collect::<Vec<_>>())
            .expect("rows share the real width")
    }

    /// Restricts a matrix over effective slots to the real datasets.
    pub fn to_real(&self, eff: &FMatrix) -> FMatrix {
        match &self.assignment.virtual_map {
            Some(slots) => eff.select_columns(&slots.iter().map(|s| s - 1).collect::<Vec<_>>()),
            None => eff.clone(),
        }
    }

    /// Number of working-demand rows the decoder reassembles.
    pub fn recovered_rows(&self) -> usize {
        match self.output_map {
            Some(_) => self.working.rows(),
            None => self.params.kc,
        }
    }
}

pub(crate) fn check_demand(f: &FMatrix, a: &Assignment) -> Result<()> {
    if f.cols() != a.k {
        return Err(Error::ShapeMismatch(format!(
            "demand has {} columns but the assignment has K={}",
            f.cols(),
            a.k
        )));
    }
    if f.rows() == 0 || f.rows() > a.k {
        return Err(Error::InvalidParams(format!(
            "K_c={} must lie in [1, K={}]",
            f.rows(),
            a.k
        )));
    }
    Ok(())
}

/// `[F; G]` with `G` drawn uniformly from `seed`; `F` is kept verbatim on top.
pub fn pad_demand(f: &FMatrix, target_rows: usize, seed: u64) -> Result<FMatrix> {
    if target_rows < f.rows() {
        return Err(Error::InvalidParams(format!(
            "cannot pad {} rows down to {target_rows}",
            f.rows()
        )));
    }
    let g = FMatrix::random(f.field(), target_rows - f.rows(), f.cols(), seed);
    FMatrix::vstack(f.field(), f.cols(), &[f, &g])
}

/// Lifts a demand over real datasets to effective slots. Virtual columns get
/// uniform random entries: the virtual messages are zero, so they never change
/// the task, while keeping the demand generic for the null-space step.
pub(crate) fn lift(f: &FMatrix, a: &Assignment, seed: u64) -> FMatrix {
    let Some(slots) = &a.virtual_map else {
        return f.clone();
    };
    let k_eff = a.effective_k();
    let mut out = FMatrix::random(f.field(), f.rows(), k_eff, seed);
    for i in 0..f.rows() {
        for (k, &s) in slots.iter().enumerate() {
            out.set(i, s - 1, f.get(i, k));
        }
    }
    out
}

/// Builds the scheme matching the regime of `(K, N, N_r, K_c)` for a cyclic
/// or virtually padded assignment.
pub fn build(f: &FMatrix, a: &Assignment, opts: &BuildOptions) -> Result<Scheme> {
    check_demand(f, a)?;
    match a.kind {
        AssignmentKind::Grouped => Err(Error::InvalidParams(
            "grouped assignments are built with build_grouped".into(),
        )),
        _ => match regime_of(a.effective_k(), a.n, a.nr, f.rows()) {
            Regime::Small => build_small(f, a, opts),
            Regime::Middle => build_middle(f, a, opts),
            Regime::Large => build_large(f, a, opts),
            Regime::Grouped => unreachable!("regime_of never returns grouped"),
        },
    }
}

/// Scheme that recovers all `K` messages and hence any full-rank `F`.
///
/// When `K_c = K` this is the ordinary build of `F`. Otherwise the inner
/// demand is a seeded random invertible `K x K` matrix `R`; the decoder
/// recovers `R · W` and maps it through `F · R⁻¹`. A random `R` is used
/// rather than `F` extended by unit rows because the extension can reproduce
/// the very sub-demand that made `F` undecodable.
pub fn fallback_full_recovery(f: &FMatrix, a: &Assignment, opts: &BuildOptions) -> Result<Scheme> {
    check_demand(f, a)?;
    let rank = f.rank();
    if rank < f.rows() {
        return Err(Error::RankDeficientDemand {
            rank,
            rows: f.rows(),
        });
    }
    if f.rows() == a.k {
        return build(f, a, opts);
    }
    let base = seed::derive(opts.seed, seed::stream::FALLBACK);
    let (r, r_inv) = (0u64..)
        .map(|i| FMatrix::random(f.field(), a.k, a.k, seed::derive(base, i)))
        .find_map(|r| r.inverse().ok().map(|inv| (r, inv)))
        .expect("a random matrix is eventually invertible");
    let mut s = build(&r, a, opts)?;
    s.output_map = Some(f.mul(&r_inv)?);
    s.demand = f.clone();
    s.params.kc = f.rows();
    Ok(s)
}

pub(crate) fn subsets(kc: usize, r: usize) -> Vec<Vec<usize>> {
    Combinations::new(kc, r).collect()
}
