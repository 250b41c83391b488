//! Benchmark harness: loads a corpus of annotated constraint files, runs
//! each under the four marks/shortcut configurations, and renders an
//! aligned-text report plus a machine-readable CSV copy.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::boxes::BoxAssignment;
use crate::branch::DEFAULT_STALENESS;
use crate::constraint::Constraint;
use crate::parse::{parse_box, parse_constraint};
use crate::prune::PruneConfig;
use crate::solver::{pave, solve_closed, ClosedVerdict, SolveBudget, StopReason};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub use_marks: bool,
    pub use_shortcut: bool,
}

impl BenchConfig {
    pub fn name(&self) -> &'static str {
        match (self.use_marks, self.use_shortcut) {
            (false, false) => "no reuse/no sh.cut",
            (false, true) => "no reuse/sh.cut",
            (true, false) => "reuse/no sh.cut",
            (true, true) => "reuse/sh.cut",
        }
    }

    pub fn prune_config(&self) -> PruneConfig {
        PruneConfig {
            use_marks: self.use_marks,
            use_shortcut: self.use_shortcut,
            ..PruneConfig::default()
        }
    }
}

/// The four configurations, weakest first.
pub fn standard_configs() -> Vec<BenchConfig> {
    vec![
        BenchConfig {
            use_marks: false,
            use_shortcut: false,
        },
        BenchConfig {
            use_marks: false,
            use_shortcut: true,
        },
        BenchConfig {
            use_marks: true,
            use_shortcut: false,
        },
        BenchConfig {
            use_marks: true,
            use_shortcut: true,
        },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    True,
    False,
    Pave,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub phi: Constraint,
    pub expect: Option<Expectation>,
    pub pave_box: Option<BoxAssignment>,
    pub epsilon: Option<f64>,
}

impl CorpusEntry {
    /// Parses a constraint file. `#` lines are comments; the headers
    /// `# expect:`, `# box:`, and `# epsilon:` annotate how to run it.
    pub fn parse(name: &str, text: &str) -> Result<CorpusEntry> {
        let mut expect = None;
        let mut pave_box = None;
        let mut epsilon = None;
        for line in text.lines() {
            let Some(comment) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "expect" => {
                        expect = Some(match value {
                            "true" => Expectation::True,
                            "false" => Expectation::False,
                            "pave" => Expectation::Pave,
                            other => bail!("{}: unknown expectation {:?}", name, other),
                        });
                    }
                    "box" => {
                        pave_box = Some(
                            parse_box(value).with_context(|| format!("{}: box header", name))?,
                        );
                    }
                    "epsilon" => {
                        epsilon = Some(
                            value
                                .parse::<f64>()
                                .with_context(|| format!("{}: epsilon header", name))?,
                        );
                    }
                    _ => {}
                }
            }
        }
        let phi = parse_constraint(text).with_context(|| name.to_string())?;
        if expect == Some(Expectation::Pave) && (pave_box.is_none() || epsilon.is_none()) {
            bail!("{}: pave entries need both box and epsilon headers", name);
        }
        Ok(CorpusEntry {
            name: name.to_string(),
            phi,
            expect,
            pave_box,
            epsilon,
        })
    }

    pub fn load(path: &Path) -> Result<CorpusEntry> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let text =
            fs::read_to_string(path).with_context(|| path.display().to_string())?;
        CorpusEntry::parse(&name, &text)
    }
}

/// Loads every `.qc` file in the directory, sorted by name.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .with_context(|| dir.display().to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qc"))
        .collect();
    paths.sort();
    paths.iter().map(|p| CorpusEntry::load(p)).collect()
}

#[derive(Clone, Debug)]
pub struct BenchCell {
    pub verdict: String,
    pub seconds: f64,
    /// A per-example budget ran out; the time column renders as ∞.
    pub exhausted: bool,
    pub hits: u64,
    pub boxes: u64,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub name: String,
    pub cells: Vec<BenchCell>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub configs: Vec<BenchConfig>,
    pub rows: Vec<BenchRow>,
}

/// Runs one corpus entry under one configuration.
pub fn run_entry(e: &CorpusEntry, cfg: &BenchConfig, budget: &SolveBudget) -> BenchCell {
    let pc = cfg.prune_config();
    if e.expect == Some(Expectation::Pave) {
        let b = e.pave_box.as_ref().expect("validated at load");
        let eps = e.epsilon.expect("validated at load");
        let p = pave(&e.phi, b, eps, &pc, budget, DEFAULT_STALENESS);
        let exhausted = matches!(
            p.reason,
            StopReason::TimeBudget | StopReason::HitBudget | StopReason::BoxBudget
        );
        BenchCell {
            verdict: format!("paved y={} n={} u={}", p.yes.len(), p.no.len(), p.residual.len()),
            seconds: p.stats.wall_time.as_secs_f64(),
            exhausted,
            hits: p.stats.prune.atomic_hits,
            boxes: p.stats.boxes_created,
        }
    } else {
        let out = solve_closed(&e.phi, &pc, budget, DEFAULT_STALENESS);
        let (verdict, exhausted) = match out.verdict {
            ClosedVerdict::True => ("true".to_string(), false),
            ClosedVerdict::False => ("false".to_string(), false),
            ClosedVerdict::Unknown(r) => (
                "unknown".to_string(),
                matches!(
                    r,
                    StopReason::TimeBudget | StopReason::HitBudget | StopReason::BoxBudget
                ),
            ),
        };
        BenchCell {
            verdict,
            seconds: out.stats.wall_time.as_secs_f64(),
            exhausted,
            hits: out.stats.prune.atomic_hits,
            boxes: out.stats.boxes_created,
        }
    }
}

/// Runs the whole corpus under every configuration.
pub fn bench_run(
    dir: &Path,
    configs: &[BenchConfig],
    budget: &SolveBudget,
) -> Result<BenchReport> {
    let entries = load_corpus_dir(dir)?;
    if entries.is_empty() {
        bail!("no .qc files in {}", dir.display());
    }
    let rows = entries
        .iter()
        .map(|e| BenchRow {
            name: e.name.clone(),
            cells: configs.iter().map(|c| run_entry(e, c, budget)).collect(),
        })
        .collect();
    Ok(BenchReport {
        configs: configs.to_vec(),
        rows,
    })
}

fn fmt_time(c: &BenchCell) -> String {
    if c.exhausted {
        "∞".to_string()
    } else {
        format!("{:.3}", c.seconds)
    }
}

impl BenchReport {
    /// Aligned-column report: per configuration a Verdict/Time/Hits/Boxes
    /// group, one row per example.
    pub fn render_text(&self) -> String {
        let headers = ["Verdict", "Time", "Hits", "Boxes"];
        let mut cols: Vec<Vec<String>> = vec![Vec::new(); 1 + self.configs.len() * 4];
        cols[0].push("example".to_string());
        for (i, cfg) in self.configs.iter().enumerate() {
            for (j, h) in headers.iter().enumerate() {
                cols[1 + i * 4 + j].push(format!("{} {}", cfg.name(), h));
            }
        }
        for row in &self.rows {
            cols[0].push(row.name.clone());
            for (i, c) in row.cells.iter().enumerate() {
                cols[1 + i * 4].push(c.verdict.clone());
                cols[1 + i * 4 + 1].push(fmt_time(c));
                cols[1 + i * 4 + 2].push(c.hits.to_string());
                cols[1 + i * 4 + 3].push(c.boxes.to_string());
            }
        }
        let widths: Vec<usize> = cols
            .iter()
            .map(|col| col.iter().map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in 0..cols[0].len() {
            for (col, w) in cols.iter().zip(&widths) {
                let cell = &col[line];
                let pad = w - cell.chars().count();
                if col.as_ptr() == cols[0].as_ptr() {
                    // left-align the example name
                    write!(out, "{}{} ", cell, " ".repeat(pad)).unwrap();
                } else {
                    write!(out, " {}{}", " ".repeat(pad), cell).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    /// One CSV row per example and configuration.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("example,config,verdict,time_s,hits,boxes\n");
        for row in &self.rows {
            for (cfg, c) in self.configs.iter().zip(&row.cells) {
                let time = if c.exhausted {
                    "inf".to_string()
                } else {
                    format!("{:.6}", c.seconds)
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    row.name,
                    cfg.name(),
                    c.verdict,
                    time,
                    c.hits,
                    c.boxes
                )
                .unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_corpus(dir: &Path, files: &[(&str, &str)]) {
        for (name, text) in files {
            fs::write(dir.join(name), text).unwrap();
        }
    }

    #[test]
    fn closed_corpus_reports_verdicts_identically_across_configs() {
        let tmp = tempfile::tempdir().unwrap();
        write_corpus(
            tmp.path(),
            &[
                (
                    "always.qc",
                    "# expect: true\nforall x in [-10, 10]. x^2 + 1 >= 0\n",
                ),
                (
                    "signflip.qc",
                    "# expect: false\nforall x in [-2, 2]. x >= 0\n",
                ),
            ],
        );
        let report = bench_run(
            tmp.path(),
            &standard_configs(),
            &SolveBudget::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        let always = &report.rows[0];
        assert!(always.cells.iter().all(|c| c.verdict == "true"));
        let signflip = &report.rows[1];
        assert!(signflip.cells.iter().all(|c| c.verdict == "false"));
        assert!(signflip.cells.iter().all(|c| !c.exhausted && c.hits > 0));
    }

    #[test]
    fn circle_paving_reports_finite_hits_and_boxes() {
        let tmp = tempfile::tempdir().unwrap();
        write_corpus(
            tmp.path(),
            &[(
                "circle.qc",
                "# expect: pave\n# box: x=[-2,2];y=[-2,2]\n# epsilon: 0.1\nx^2 + y^2 <= 1\n",
            )],
        );
        let cfg = BenchConfig {
            use_marks: true,
            use_shortcut: true,
        };
        let report =
            bench_run(tmp.path(), &[cfg], &SolveBudget::default()).unwrap();
        let cell = &report.rows[0].cells[0];
        assert!(cell.verdict.starts_with("paved"), "{}", cell.verdict);
        assert!(!cell.exhausted);
        assert!(cell.hits > 0 && cell.boxes > 0);
    }

    #[test]
    fn report_renders_aligned_text_and_csv() {
        let tmp = tempfile::tempdir().unwrap();
        write_corpus(
            tmp.path(),
            &[("t.qc", "# expect: true\nforall x in [-1, 1]. x^2 + 1 >= 0\n")],
        );
        let report = bench_run(
            tmp.path(),
            &standard_configs(),
            &SolveBudget::default(),
        )
        .unwrap();
        let text = report.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("reuse/sh.cut Hits"));
        let csv = report.render_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
    }

    #[test]
    fn pave_entry_without_box_is_rejected() {
        let err = CorpusEntry::parse("bad", "# expect: pave\nx >= 0\n").unwrap_err();
        assert!(err.to_string().contains("box and epsilon"));
    }

    #[test]
    fn budget_exhaustion_renders_as_infinity() {
        let tmp = tempfile::tempdir().unwrap();
        write_corpus(
            tmp.path(),
            &[(
                "unstable.qc",
                "# expect: true\nexists x in [-1, 1]. 0 - x^2 >= 0\n",
            )],
        );
        let tight = SolveBudget {
            max_hits: Some(50),
            ..SolveBudget::default()
        };
        let cfg = BenchConfig {
            use_marks: true,
            use_shortcut: true,
        };
        let report = bench_run(tmp.path(), &[cfg], &tight).unwrap();
        let cell = &report.rows[0].cells[0];
        assert_eq!(cell.verdict, "unknown");
        assert!(cell.exhausted);
        assert!(report.render_text().contains('∞'));
        assert!(report.render_csv().contains(",inf,"));
    }
}
