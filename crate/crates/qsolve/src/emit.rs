//! Serialization of pavings as JSON-lines or CSV box lists. Endpoints are
//! printed in the shortest form that parses back to the identical machine
//! value, so emitted files are bit-exact archives of a paving.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::boxes::{BoxAssignment, Var};
use crate::interval::Interval;
use crate::solver::Paving;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordKind {
    /// Proved inside the solution set.
    Y,
    /// Proved outside the solution set.
    N,
    /// Undecided residual.
    U,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PavingRecord {
    pub kind: RecordKind,
    pub bound: BoxAssignment,
}

/// Flattens a paving into records over its free variables, in Y, N, U order.
pub fn records_of_paving(p: &Paving) -> Vec<PavingRecord> {
    let mut out = Vec::with_capacity(p.yes.len() + p.no.len() + p.residual.len());
    for b in &p.yes {
        out.push(PavingRecord {
            kind: RecordKind::Y,
            bound: b.restrict(&p.vars),
        });
    }
    for b in &p.no {
        out.push(PavingRecord {
            kind: RecordKind::N,
            bound: b.restrict(&p.vars),
        });
    }
    for bc in &p.residual {
        out.push(PavingRecord {
            kind: RecordKind::U,
            bound: bc.bound.restrict(&p.vars),
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for BoxFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(BoxFormat::Jsonl),
            "csv" => Ok(BoxFormat::Csv),
            other => bail!("unknown box format {:?} (expected jsonl or csv)", other),
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    kind: RecordKind,
    #[serde(rename = "box")]
    bound: BTreeMap<String, [f64; 2]>,
}

fn from_map(m: &BTreeMap<String, [f64; 2]>) -> BoxAssignment {
    let mut b = BoxAssignment::all();
    for (name, [lo, hi]) in m {
        b = b.with(Var::new(name), Interval::new(*lo, *hi));
    }
    b
}

pub fn emit_boxes(records: &[PavingRecord], format: BoxFormat) -> String {
    let mut out = String::new();
    match format {
        BoxFormat::Jsonl => {
            // hand-formatted so integral endpoints print as 0, not 0.0
            for r in records {
                let kind = match r.kind {
                    RecordKind::Y => "Y",
                    RecordKind::N => "N",
                    RecordKind::U => "U",
                };
                out.push_str(&format!("{{\"kind\":\"{}\",\"box\":{{", kind));
                for (n, v) in r.bound.vars().enumerate() {
                    if n > 0 {
                        out.push(',');
                    }
                    let i = r.bound.get(v);
                    let name = serde_json::to_string(&v.to_string())
                        .expect("strings always serialize");
                    out.push_str(&format!("{}:[{},{}]", name, i.lo(), i.hi()));
                }
                out.push_str("}}\n");
            }
        }
        BoxFormat::Csv => {
            let Some(first) = records.first() else {
                return out;
            };
            out.push_str("kind");
            for v in first.bound.vars() {
                out.push_str(&format!(",{}_lo,{}_hi", v, v));
            }
            out.push('\n');
            for r in records {
                out.push_str(match r.kind {
                    RecordKind::Y => "Y",
                    RecordKind::N => "N",
                    RecordKind::U => "U",
                });
                for v in r.bound.vars() {
                    let i = r.bound.get(v);
                    out.push_str(&format!(",{},{}", i.lo(), i.hi()));
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn parse_boxes(text: &str, format: BoxFormat) -> Result<Vec<PavingRecord>> {
    let mut out = Vec::new();
    match format {
        BoxFormat::Jsonl => {
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JsonRecord = serde_json::from_str(line)
                    .with_context(|| format!("line {}", n + 1))?;
                out.push(PavingRecord {
                    kind: rec.kind,
                    bound: from_map(&rec.bound),
                });
            }
        }
        BoxFormat::Csv => {
            let mut lines = text.lines().enumerate();
            let Some((_, header)) = lines.next() else {
                return Ok(out);
            };
            let cols: Vec<&str> = header.split(',').collect();
            if cols.first() != Some(&"kind") || cols.len() % 2 == 0 {
                bail!("malformed csv header {:?}", header);
            }
            let vars: Vec<Var> = cols[1..]
                .chunks(2)
                .map(|pair| {
                    let name = pair[0]
                        .strip_suffix("_lo")
                        .with_context(|| format!("bad column {:?}", pair[0]))?;
                    Ok(Var::new(name))
                })
                .collect::<Result<_>>()?;
            for (n, line) in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != cols.len() {
                    bail!("line {}: expected {} fields", n + 1, cols.len());
                }
                let kind = match fields[0] {
                    "Y" => RecordKind::Y,
                    "N" => RecordKind::N,
                    "U" => RecordKind::U,
                    other => bail!("line {}: unknown kind {:?}", n + 1, other),
                };
                let mut b = BoxAssignment::all();
                for (v, pair) in vars.iter().zip(fields[1..].chunks(2)) {
                    let lo: f64 = pair[0]
                        .parse()
                        .with_context(|| format!("line {}: {:?}", n + 1, pair[0]))?;
                    let hi: f64 = pair[1]
                        .parse()
                        .with_context(|| format!("line {}: {:?}", n + 1, pair[1]))?;
                    b = b.with(v.clone(), Interval::new(lo, hi));
                }
                out.push(PavingRecord { kind, bound: b });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_box, rng_from_seed, var_pool};
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn single_record_jsonl_shape() {
        let b = BoxAssignment::all().with(Var::new("x"), Interval::new(0.0, 1.0));
        let recs = vec![PavingRecord {
            kind: RecordKind::Y,
            bound: b,
        }];
        assert_eq!(
            emit_boxes(&recs, BoxFormat::Jsonl),
            "{\"kind\":\"Y\",\"box\":{\"x\":[0,1]}}\n"
        );
    }

    #[test]
    fn empty_paving_emits_nothing() {
        assert_eq!(emit_boxes(&[], BoxFormat::Jsonl), "");
        assert_eq!(emit_boxes(&[], BoxFormat::Csv), "");
    }

    #[test]
    fn random_pavings_round_trip_bit_exactly() {
        let mut rng = rng_from_seed(11);
        let vars = var_pool(3);
        for _ in 0..100 {
            let recs: Vec<PavingRecord> = (0..rng.gen_range(0..8))
                .map(|_| PavingRecord {
                    kind: *[RecordKind::Y, RecordKind::N, RecordKind::U]
                        .choose(&mut rng)
                        .unwrap(),
                    bound: random_box(&mut rng, &vars),
                })
                .collect();
            for format in [BoxFormat::Jsonl, BoxFormat::Csv] {
                let text = emit_boxes(&recs, format);
                let back = parse_boxes(&text, format).unwrap();
                assert_eq!(back, recs, "{:?}:\n{}", format, text);
            }
        }
    }

    #[test]
    fn awkward_endpoints_survive() {
        let b = BoxAssignment::all().with(
            Var::new("x"),
            Interval::new(-0.1, 2.0_f64.powi(-40) + 1.0),
        );
        let recs = vec![PavingRecord {
            kind: RecordKind::U,
            bound: b,
        }];
        for format in [BoxFormat::Jsonl, BoxFormat::Csv] {
            let text = emit_boxes(&recs, format);
            let back = parse_boxes(&text, format).unwrap();
            assert_eq!(back, recs);
        }
    }
}
