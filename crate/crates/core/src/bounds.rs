//! Closed-form communication and computation costs.
//!
//! All costs are exact rationals normalized by the message length `L`; every
//! formula here happens to be integral.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::combin::binomial;
use crate::error::{Error, Result};

pub type Cost = Ratio<u64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Setting {
    pub k: usize,
    pub n: usize,
    pub nr: usize,
    pub kc: usize,
}

impl Setting {
    pub fn new(k: usize, n: usize, nr: usize, kc: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidParams(format!(
                "K={k} and N={n} must be positive"
            )));
        }
        if nr == 0 || nr > n {
            return Err(Error::InvalidParams(format!(
                "N_r={nr} must lie in [1, {n}]"
            )));
        }
        if kc == 0 || kc > k {
            return Err(Error::InvalidParams(format!(
                "K_c={kc} must lie in [1, {k}]"
            )));
        }
        Ok(Self { k, n, nr, kc })
    }

    pub fn divisible(&self) -> bool {
        self.k.is_multiple_of(self.n)
    }

    /// `⌈K / C(N, N - N_r + 1)⌉`, the largest unique-group size some worker must hold.
    pub fn group_threshold(&self) -> u64 {
        let groups = binomial(self.n as i64, (self.n - self.nr + 1) as i64);
        (self.k as u128).div_ceil(groups) as u64
    }

    fn require_divisible(&self) -> Result<()> {
        if self.divisible() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "N={} does not divide K={}; the closed forms need N | K",
                self.n, self.k
            )))
        }
    }
}

fn int(x: usize) -> Cost {
    Cost::from_integer(x as u64)
}

/// Lower bound on the communication cost for `N | K`.
pub fn converse_cost(p: &Setting) -> Result<Cost> {
    p.require_divisible()?;
    let tc = p.group_threshold();
    let (nr, kc) = (p.nr as u64, p.kc as u64);
    Ok(Cost::from_integer(if kc <= tc {
        nr * kc
    } else {
        (nr * tc).max(kc)
    }))
}

/// `R ≥ K_c`: the master needs `K_c` independent combinations of length `L`.
pub fn cut_set_bound(p: &Setting) -> Cost {
    int(p.kc)
}

fn three_regimes(t_lo: usize, t_hi: usize, nr: usize, kc: usize) -> Cost {
    if kc <= t_lo && kc < t_hi {
        int(nr * kc)
    } else if kc <= t_hi * nr {
        int(t_hi * nr)
    } else {
        int(kc)
    }
}

/// Cost of the cyclic construction for `N | K`.
pub fn achievable_cost(p: &Setting) -> Result<Cost> {
    if !p.divisible() {
        return Err(Error::UseGeneralAssignment { k: p.k, n: p.n });
    }
    let t = p.k / p.n;
    Ok(if p.kc < t {
        int(p.nr * p.kc)
    } else {
        three_regimes(t, t, p.nr, p.kc)
    })
}

/// Cost of the virtually padded construction for any `K`; equals
/// [`achievable_cost`] when `N | K`.
pub fn achievable_cost_general(p: &Setting) -> Cost {
    if p.divisible() {
        return achievable_cost(p).expect("N divides K");
    }
    three_regimes(p.k / p.n, p.k.div_ceil(p.n), p.nr, p.kc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Converse and achievable cost coincide.
    Optimal,
    /// Optimal among schemes using the cyclic assignment.
    CyclicOptimal,
    /// No matching converse is known.
    Open,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::CyclicOptimal => "cyclic-optimal",
            Status::Open => "open",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostVerdict {
    pub converse: Cost,
    pub achievable: Cost,
    pub status: Status,
}

/// Classifies a setting. When `N ∤ K` the converse falls back to the cut-set
/// bound and the status is always [`Status::Open`].
pub fn optimality_class(p: &Setting) -> CostVerdict {
    if !p.divisible() {
        return CostVerdict {
            converse: cut_set_bound(p),
            achievable: achievable_cost_general(p),
            status: Status::Open,
        };
    }
    let converse = converse_cost(p).expect("N divides K");
    let achievable = achievable_cost(p).expect("N divides K");
    let t = p.k / p.n;
    let optimal = p.k == p.n || p.kc as u64 <= p.group_threshold() || p.kc >= t * p.nr;
    CostVerdict {
        converse,
        achievable,
        status: if optimal {
            Status::Optimal
        } else {
            Status::CyclicOptimal
        },
    }
}

/// Minimum cost for `N_r ∈ {1, 2, N}`, written piecewise in `K_c`.
pub fn special_threshold_cost(p: &Setting) -> Result<Cost> {
    p.require_divisible()?;
    let t = p.k / p.n;
    let kc = p.kc;
    Ok(match p.nr {
        1 => int(kc),
        2 if kc <= t => int(2 * kc),
        2 if kc <= 2 * t => int(2 * t),
        2 => int(kc),
        nr if nr == p.n && kc <= t => int(p.n * kc),
        nr if nr == p.n => int(p.k),
        nr => return Err(Error::NotCovered { nr }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputationCosts {
    /// Fewest datasets per worker that any valid assignment can achieve.
    pub m_min: usize,
    /// Datasets per worker under the virtually padded assignment.
    pub m1: usize,
}

impl ComputationCosts {
    pub fn m1_exceeds_min(&self) -> bool {
        self.m1 > self.m_min
    }
}

/// `M_min = a w + ⌈b w / N⌉` and `M_1 = a w + ⌈w / ⌊N / b⌋⌉` for `K = aN + b`,
/// `w = N - N_r + 1`; `M_1 = M_min` when `b = 0`.
pub fn computation_costs(k: usize, n: usize, nr: usize) -> Result<ComputationCosts> {
    Setting::new(k, n, nr, 1)?;
    let (a, b) = (k / n, k % n);
    let w = n - nr + 1;
    let m_min = a * w + (b * w).div_ceil(n);
    let m1 = if b == 0 {
        m_min
    } else {
        a * w + w.div_ceil(n / b)
    };
    Ok(ComputationCosts { m_min, m1 })
}
