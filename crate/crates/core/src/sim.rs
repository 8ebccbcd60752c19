//! End-to-end trials: draw a demand and messages, build a scheme, drop
//! stragglers, decode and audit the result and its cost.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{general, grouped};
use crate::bounds::{self, Cost, Setting, Status};
use crate::codec::{decode, encode_all, fallback_full_recovery, DEFAULT_SUBSET_CAP};
use crate::combin::{binomial, subsets_1based};
use crate::error::{Error, Result};
use crate::linalg::{FMatrix, Field, DEFAULT_MODULUS};
use crate::scheme::{build, build_grouped, BuildOptions, Regime};
use crate::seed::{self, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// The cyclic construction for the regime of `K_c`.
    Auto,
    /// The pair-grouped scheme.
    Grouped,
    /// Full recovery of all messages, then mapping through `F`.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stragglers {
    /// Every responder set of size `N_r`.
    Exhaustive,
    /// One given responder set.
    Fixed(Vec<usize>),
    /// This many responder sets drawn uniformly (with repetition).
    Random(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seeds {
    pub demand: u64,
    pub messages: u64,
    pub padding: u64,
    pub stragglers: u64,
}

impl Seeds {
    pub fn from_base(base: u64) -> Self {
        Self {
            demand: seed::derive(base, stream::DEMAND),
            messages: seed::derive(base, stream::MESSAGES),
            padding: seed::derive(base, stream::PADDING),
            stragglers: seed::derive(base, stream::STRAGGLERS),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialConfig {
    pub setting: Setting,
    /// Message length; `None` picks the scheme's default.
    pub l: Option<usize>,
    pub q: u64,
    pub kind: SchemeKind,
    pub stragglers: Stragglers,
    pub seeds: Seeds,
    /// Fixed demand instead of a uniform draw.
    pub demand: Option<FMatrix>,
    /// Use all-zero messages.
    pub zero_messages: bool,
}

impl TrialConfig {
    pub fn new(setting: Setting, base_seed: u64) -> Self {
        Self {
            setting,
            l: None,
            q: DEFAULT_MODULUS,
            kind: SchemeKind::Auto,
            stragglers: Stragglers::Exhaustive,
            seeds: Seeds::from_base(base_seed),
            demand: None,
            zero_messages: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetOutcome {
    pub responders: Vec<usize>,
    pub success: bool,
    /// Symbols actually downloaded from the responders.
    pub downloaded: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub setting: Setting,
    pub kind: SchemeKind,
    pub regime: Regime,
    pub l: usize,
    pub seeds: Seeds,
    pub subsets: Vec<SubsetOutcome>,
    pub failures: usize,
    /// Largest `downloaded / L` over the tested responder sets.
    pub measured_cost: Cost,
    pub formula_cost: Cost,
    /// Every tested set decoded and the measured cost equals the formula.
    pub matched: bool,
    pub degenerate: bool,
}

/// Cost the chosen scheme is expected to reach.
pub fn formula_cost(setting: &Setting, kind: SchemeKind) -> Cost {
    match kind {
        SchemeKind::Auto => bounds::achievable_cost_general(setting),
        SchemeKind::Grouped => Cost::from_integer(2 * setting.nr as u64),
        SchemeKind::Fallback => {
            let full = Setting {
                kc: setting.k,
                ..*setting
            };
            bounds::achievable_cost_general(&full)
        }
    }
}

/// `F · W` by schoolbook multiplication in wide integers.
pub fn naive_product(f: &FMatrix, w: &FMatrix) -> FMatrix {
    let q = f.field().modulus() as u128;
    let mut out = Vec::with_capacity(f.rows() * w.cols());
    for i in 0..f.rows() {
        for j in 0..w.cols() {
            let mut acc: u128 = 0;
            for k in 0..f.cols() {
                acc += f.get(i, k) as u128 * w.get(k, j) as u128;
            }
            out.push((acc % q) as u64);
        }
    }
    FMatrix::from_vec(f.field(), f.rows(), w.cols(), out).expect("shape is consistent")
}

fn responder_sets(n: usize, nr: usize, mode: &Stragglers, seed: u64) -> Result<Vec<Vec<usize>>> {
    Ok(match mode {
        Stragglers::Exhaustive => {
            let count = binomial(n as i64, nr as i64);
            if count > DEFAULT_SUBSET_CAP {
                return Err(Error::SubsetCapExceeded {
                    count,
                    cap: DEFAULT_SUBSET_CAP,
                });
            }
            subsets_1based(n, nr).collect()
        }
        Stragglers::Fixed(a) => {
            let mut a = a.clone();
            a.sort_unstable();
            vec![a]
        }
        Stragglers::Random(count) => {
            let mut rng = seed::rng(seed);
            (0..*count)
                .map(|_| {
                    let mut a: Vec<usize> =
                        sample(&mut rng, n, nr).into_iter().map(|x| x + 1).collect();
                    a.sort_unstable();
                    a
                })
                .collect()
        }
    })
}

pub fn run_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    let p = cfg.setting;
    let field = Field::new(cfg.q)?;
    let f = match &cfg.demand {
        Some(d) => d.clone(),
        None => FMatrix::random(field, p.kc, p.k, cfg.seeds.demand),
    };
    let opts = BuildOptions {
        l: cfg.l,
        seed: cfg.seeds.padding,
        generators: None,
    };
    let scheme = match cfg.kind {
        SchemeKind::Auto => build(&f, &general(p.k, p.n, p.nr)?, &opts)?,
        SchemeKind::Grouped => build_grouped(&f, &grouped(p.k, p.n, p.nr)?, &opts)?,
        SchemeKind::Fallback => fallback_full_recovery(&f, &general(p.k, p.n, p.nr)?, &opts)?,
    };
    let l = scheme.params.l;
    let w = if cfg.zero_messages {
        FMatrix::zeros(field, p.k, l)
    } else {
        FMatrix::random(field, p.k, l, cfg.seeds.messages)
    };
    let oracle = naive_product(&f, &w);
    let answers = encode_all(&scheme, &w)?;
    let sets = responder_sets(p.n, p.nr, &cfg.stragglers, cfg.seeds.stragglers)?;
    let mut subsets = Vec::with_capacity(sets.len());
    for a in sets {
        let picked: Vec<_> = a.iter().map(|&n| answers[n - 1].clone()).collect();
        let report = decode(&scheme, &picked)?;
        let success = report.success && report.recovered.as_ref() == Some(&oracle);
        subsets.push(SubsetOutcome {
            responders: a,
            success,
            downloaded: report.downloaded,
        });
    }
    let failures = subsets.iter().filter(|s| !s.success).count();
    let measured_cost = subsets
        .iter()
        .map(|s| Cost::new(s.downloaded as u64, l as u64))
        .max()
        .unwrap_or_default();
    let formula = formula_cost(&p, cfg.kind);
    Ok(TrialResult {
        setting: p,
        kind: cfg.kind,
        regime: scheme.regime,
        l,
        seeds: cfg.seeds,
        matched: failures == 0 && !subsets.is_empty() && measured_cost == formula,
        subsets,
        failures,
        measured_cost,
        formula_cost: formula,
        degenerate: scheme.degenerate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub setting: Setting,
    pub kind: SchemeKind,
    pub l: Option<usize>,
}

impl GridPoint {
    pub fn auto(k: usize, n: usize, nr: usize, kc: usize) -> Result<Self> {
        Ok(Self {
            setting: Setting::new(k, n, nr, kc)?,
            kind: SchemeKind::Auto,
            l: None,
        })
    }
}

/// One sweep line; field names are the CSV header.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_r")]
    pub nr: usize,
    #[serde(rename = "K_c")]
    pub kc: usize,
    pub regime: String,
    pub trials: usize,
    /// Failing responder sets plus trials that errored out, over all trials.
    pub failures: usize,
    pub measured_cost: String,
    pub formula_cost: String,
    pub converse: String,
    pub status: String,
    pub seed: u64,
}

/// Outcome of one trial of a sweep: the result, or the error and its seed.
pub type TrialOutcome = std::result::Result<TrialResult, (u64, String)>;

/// Seed of trial `trial` at grid index `point` for sweep seed `seed`.
pub fn trial_seed(seed: u64, point: usize, trial: usize) -> u64 {
    seed::derive(seed::derive(seed, point as u64), trial as u64)
}

/// Runs `trials` exhaustive trials per grid point. Trials run in parallel and
/// are merged in (point, trial) order.
pub fn sweep_trials(
    grid: &[GridPoint],
    trials: usize,
    seed: u64,
    q: u64,
) -> Vec<Vec<TrialOutcome>> {
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let s = trial_seed(seed, p, t);
            let mut cfg = TrialConfig::new(grid[p].setting, s);
            cfg.kind = grid[p].kind;
            cfg.l = grid[p].l;
            cfg.q = q;
            run_trial(&cfg).map_err(|e| (s, e.to_string()))
        })
        .collect();
    let mut it = outcomes.into_iter();
    grid.iter()
        .map(|_| it.by_ref().take(trials).collect())
        .collect()
}

/// Aggregates [`sweep_trials`] into one row per grid point; points with zero
/// trials produce no row.
pub fn summarize(grid: &[GridPoint], results: &[Vec<TrialOutcome>], seed: u64) -> Vec<SweepRow> {
    grid.iter()
        .zip(results)
        .enumerate()
        .filter(|(_, (_, r))| !r.is_empty())
        .map(|(i, (g, r))| {
            let p = g.setting;
            let verdict = bounds::optimality_class(&p);
            let status =
                if g.kind == SchemeKind::Grouped && verdict.converse == formula_cost(&p, g.kind) {
                    Status::Optimal
                } else {
                    verdict.status
                };
            let ok: Vec<&TrialResult> = r.iter().filter_map(|o| o.as_ref().ok()).collect();
            let failures = ok.iter().map(|t| t.failures).sum::<usize>() + (r.len() - ok.len());
            let regime = ok
                .first()
                .map_or("error".to_string(), |t| t.regime.to_string());
            let measured = ok.iter().map(|t| t.measured_cost).max();
            SweepRow {
                k: p.k,
                n: p.n,
                nr: p.nr,
                kc: p.kc,
                regime,
                trials: r.len(),
                failures,
                measured_cost: measured.map_or(String::new(), |c| c.to_string()),
                formula_cost: formula_cost(&p, g.kind).to_string(),
                converse: verdict.converse.to_string(),
                status: status.to_string(),
                seed: seed::derive(seed, i as u64),
            }
        })
        .collect()
}

pub fn sweep(grid: &[GridPoint], trials: usize, seed: u64) -> Vec<SweepRow> {
    summarize(
        grid,
        &sweep_trials(grid, trials, seed, DEFAULT_MODULUS),
        seed,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeCombinationsReport {
    pub n: usize,
    pub nr: usize,
    /// `(K_c, largest measured cost, failures)` for `K_c = 1..=min(N_r + 1, N)`.
    pub points: Vec<(usize, Cost, usize)>,
    /// Cost is `N_r` for every `K_c ≤ N_r`.
    pub flat_up_to_nr: bool,
    /// Cost is `N_r + 1` at `K_c = N_r + 1`; `None` when `N_r = N`.
    pub rises_after: Option<bool>,
}

/// Checks with `K = N` that recovering up to `N_r` combinations costs the same
/// as recovering one.
pub fn kc_for_free_check(
    n: usize,
    nr: usize,
    trials: usize,
    seed: u64,
) -> Result<FreeCombinationsReport> {
    let top = (nr + 1).min(n);
    let grid = (1..=top)
        .map(|kc| GridPoint::auto(n, n, nr, kc))
        .collect::<Result<Vec<_>>>()?;
    let results = sweep_trials(&grid, trials, seed, DEFAULT_MODULUS);
    let mut points = Vec::with_capacity(top);
    for (kc, r) in (1..=top).zip(&results) {
        let mut cost = Cost::default();
        let mut failures = 0;
        for o in r {
            match o {
                Ok(t) => {
                    cost = cost.max(t.measured_cost);
                    failures += t.failures;
                }
                Err(_) => failures += 1,
            }
        }
        points.push((kc, cost, failures));
    }
    let nr_cost = Cost::from_integer(nr as u64);
    let flat_up_to_nr = points
        .iter()
        .take(nr)
        .all(|&(_, c, f)| c == nr_cost && f == 0);
    let rises_after = (nr < n).then(|| {
        let (_, c, f) = points[nr];
        c == Cost::from_integer(nr as u64 + 1) && f == 0
    });
    Ok(FreeCombinationsReport {
        n,
        nr,
        points,
        flat_up_to_nr,
        rises_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_dataset_trial() {
        let cfg = TrialConfig::new(Setting::new(6, 3, 2, 4).unwrap(), 1);
        let r = run_trial(&cfg).unwrap();
        assert_eq!(r.subsets.len(), 3);
        assert_eq!(r.failures, 0);
        assert_eq!(r.measured_cost, Cost::from_integer(4));
        assert!(r.matched);
    }

    #[test]
    fn single_combination_costs_nr() {
        let r = run_trial(&TrialConfig::new(Setting::new(3, 3, 2, 1).unwrap(), 2)).unwrap();
        assert_eq!(r.measured_cost, Cost::from_integer(2));
        assert!(r.matched);
    }

    #[test]
    fn zero_messages_decode_to_zero() {
        let mut cfg = TrialConfig::new(Setting::new(9, 3, 2, 2).unwrap(), 3);
        cfg.zero_messages = true;
        let r = run_trial(&cfg).unwrap();
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn replay_is_identical() {
        let mut cfg = TrialConfig::new(Setting::new(8, 4, 3, 7).unwrap(), 11);
        cfg.stragglers = Stragglers::Random(3);
        let a = serde_json::to_string(&run_trial(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_trial(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_sweep() {
        let mut grid = Vec::new();
        for k in [3, 6, 9] {
            for kc in 1..=k {
                grid.push(GridPoint::auto(k, 3, 2, kc).unwrap());
            }
        }
        let rows = sweep(&grid, 3, 5);
        assert_eq!(rows.len(), grid.len());
        for row in &rows {
            assert_eq!(row.failures, 0, "{row:?}");
            assert_eq!(row.measured_cost, row.formula_cost, "{row:?}");
        }
        assert!(sweep(&[], 3, 5).is_empty());
        assert!(sweep(&grid, 0, 5).is_empty());
    }

    #[test]
    fn grouped_point_reports_both_costs() {
        let grid = [
            GridPoint {
                setting: Setting::new(12, 4, 3, 3).unwrap(),
                kind: SchemeKind::Grouped,
                l: None,
            },
            GridPoint::auto(12, 4, 3, 3).unwrap(),
        ];
        let rows = sweep(&grid, 2, 9);
        assert_eq!(rows[0].formula_cost, "6");
        assert_eq!(rows[1].measured_cost, "9");
        assert_eq!(rows[1].status, "cyclic-optimal");
    }

    #[test]
    fn free_combinations() {
        let r = kc_for_free_check(3, 2, 3, 1).unwrap();
        assert!(r.flat_up_to_nr);
        assert_eq!(r.rises_after, Some(true));
        assert_eq!(r.points[2].1, Cost::from_integer(3));
    }

    #[test]
    fn oracle_matches_field_product() {
        let f = FMatrix::random(Field::default(), 3, 5, 1);
        let w = FMatrix::random(Field::default(), 5, 4, 2);
        assert_eq!(naive_product(&f, &w), f.mul(&w).unwrap());
    }
}
