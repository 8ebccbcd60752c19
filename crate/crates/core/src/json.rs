//! Scheme documents.
//!
//! A document carries everything needed to rebuild its scheme (parameters,
//! demand, assignment, seed, MDS generator) together with the rows every
//! worker transmits. Loading rebuilds the scheme and rejects documents whose
//! stored rows disagree with the rebuild, so `load(save(s)) == s`.

use serde::{Deserialize, Serialize};

use crate::assignment::{grouped, Assignment, AssignmentKind, Group};
use crate::error::{Error, Result};
use crate::linalg::{FMatrix, Field};
use crate::scheme::{
    build, build_grouped, fallback_full_recovery, BuildOptions, Generator, Params, Regime, Scheme,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Cyclic or virtually padded assignment, regime picked from `K_c`.
    Standard,
    Grouped,
    /// Recover all messages, then map through the demand.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerDoc {
    pub id: usize,
    /// Message-coefficient rows over the `K` datasets.
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorDoc {
    Vandermonde(Vec<String>),
    Explicit(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdsDoc {
    pub m: usize,
    #[serde(rename = "M_len")]
    pub len: usize,
    pub r: usize,
    pub subsets: Vec<Vec<usize>>,
    pub generator: GeneratorDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDoc {
    pub params: Params,
    pub regime: Regime,
    pub construction: Construction,
    pub seed: u64,
    pub demand: Vec<Vec<String>>,
    pub assignment: Assignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Group>>,
    pub workers: Vec<WorkerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mds: Option<MdsDoc>,
    pub padding_rows: usize,
    pub degenerate: bool,
}

fn strings(v: &[u64]) -> Vec<String> {
    v.iter().map(u64::to_string).collect()
}

fn construction_of(s: &Scheme) -> Construction {
    if s.grouped.is_some() {
        Construction::Grouped
    } else if s.output_map.is_some() {
        Construction::Fallback
    } else {
        Construction::Standard
    }
}

impl SchemeDoc {
    /// `seed` must be the one the scheme was built with.
    pub fn from_scheme(s: &Scheme, seed: u64) -> Self {
        let mds = s.mds.as_ref().map(|m| MdsDoc {
            m: m.m,
            len: m.len,
            r: m.r,
            subsets: m.subsets.clone(),
            generator: match &m.generator {
                Generator::Vandermonde(p) => GeneratorDoc::Vandermonde(strings(p)),
                Generator::Explicit(g) => GeneratorDoc::Explicit(g.to_string_rows()),
            },
        });
        Self {
            params: s.params,
            regime: s.regime,
            construction: construction_of(s),
            seed,
            demand: s.demand.to_string_rows(),
            assignment: s.assignment.clone(),
            groups: s.groups.clone(),
            workers: (1..=s.params.n)
                .map(|id| WorkerDoc {
                    id,
                    rows: s.worker_rows(id).to_string_rows(),
                })
                .collect(),
            mds,
            padding_rows: s.padding_rows,
            degenerate: s.degenerate,
        }
    }

    /// Rebuilds the scheme and checks it against the document.
    pub fn to_scheme(&self) -> Result<Scheme> {
        let p = self.params;
        let field = Field::new(p.q)?;
        let f = FMatrix::from_string_rows(field, &self.demand, Some(p.k))?;
        let generators = match self.mds.as_ref().map(|m| &m.generator) {
            Some(GeneratorDoc::Explicit(rows)) => {
                Some(FMatrix::from_string_rows(field, rows, None)?)
            }
            _ => None,
        };
        let opts = BuildOptions {
            l: Some(p.l),
            seed: self.seed,
            generators,
        };
        let a = &self.assignment;
        let s = match self.construction {
            Construction::Standard => build(&f, a, &opts)?,
            Construction::Fallback => fallback_full_recovery(&f, a, &opts)?,
            Construction::Grouped => {
                if a.kind != AssignmentKind::Grouped {
                    return Err(Error::Parse(
                        "grouped construction needs a grouped assignment".into(),
                    ));
                }
                let g = grouped(a.k, a.n, a.nr)?;
                if &g.base != a || self.groups.as_ref() != Some(&g.groups) {
                    return Err(Error::Parse(
                        "grouped assignment does not match its parameters".into(),
                    ));
                }
                build_grouped(&f, &g, &opts)?
            }
        };
        if &Self::from_scheme(&s, self.seed) != self {
            return Err(Error::Parse(
                "document does not match the scheme it describes".into(),
            ));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("documents always serialize");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Parses a demand file: a JSON array of rows of decimal-string entries.
/// Plain JSON integers are accepted too.
pub fn parse_demand(field: Field, text: &str) -> Result<FMatrix> {
    let raw: Vec<Vec<serde_json::Value>> = serde_json::from_str(text)?;
    let rows = raw
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => Ok(s),
                    serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
                    other => Err(Error::Parse(format!("bad demand entry {other}"))),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::Parse("demand file has no rows".into()));
    }
    FMatrix::from_string_rows(field, &rows, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::cyclic;

    fn round_trip(s: &Scheme, seed: u64) {
        let doc = SchemeDoc::from_scheme(s, seed);
        let text = doc.to_json();
        let back = SchemeDoc::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(&back.to_scheme().unwrap(), s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn regimes_round_trip() {
        let field = Field::default();
        for (k, n, nr, kc) in [(6, 3, 2, 4), (9, 3, 2, 2), (3, 3, 2, 3), (6, 3, 2, 1)] {
            let f = FMatrix::random(field, kc, k, 4);
            let s = build(&f, &cyclic(k, n, nr).unwrap(), &BuildOptions::with_seed(7)).unwrap();
            round_trip(&s, 7);
        }
        let f = FMatrix::random(field, 3, 7, 1);
        let s = build(
            &f,
            &crate::assignment::general(7, 3, 2).unwrap(),
            &BuildOptions::with_seed(2),
        )
        .unwrap();
        round_trip(&s, 2);
    }

    #[test]
    fn grouped_and_fallback_round_trip() {
        let field = Field::default();
        let f = FMatrix::random(field, 3, 12, 5);
        let g = grouped(12, 4, 3).unwrap();
        let s = build_grouped(&f, &g, &BuildOptions::with_seed(1)).unwrap();
        round_trip(&s, 1);
        let f = FMatrix::random(field, 2, 4, 5);
        let s = fallback_full_recovery(&f, &cyclic(4, 4, 3).unwrap(), &BuildOptions::with_seed(3))
            .unwrap();
        round_trip(&s, 3);
    }

    #[test]
    fn tampered_rows_are_rejected() {
        let f = FMatrix::random(Field::default(), 4, 6, 4);
        let s = build(&f, &cyclic(6, 3, 2).unwrap(), &BuildOptions::default()).unwrap();
        let mut doc = SchemeDoc::from_scheme(&s, 0);
        doc.workers[1].rows[0][0] = "12345".into();
        assert!(matches!(doc.to_scheme(), Err(Error::Parse(_))));
        assert!(matches!(
            SchemeDoc::from_json("{\"params\":"),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn demand_files() {
        let field = Field::new(7).unwrap();
        let f = parse_demand(field, r#"[["1","-1"],[2,"9"]]"#).unwrap();
        assert_eq!(f.to_rows(), vec![vec![1, 6], vec![2, 2]]);
        assert!(parse_demand(field, "[]").is_err());
        assert!(parse_demand(field, r#"[["1"],["1","2"]]"#).is_err());
        assert!(parse_demand(field, r#"[[1.5]]"#).is_err());
    }
}
