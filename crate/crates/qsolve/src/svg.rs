//! A 2D paving plot as a standalone SVG document: one rectangle per record,
//! proved-inside boxes filled green, proved-outside red, undecided unfilled
//! with a gray stroke. Output is deterministic for identical input.

use std::fmt::Write as _;

use crate::boxes::Var;
use crate::emit::{PavingRecord, RecordKind};
use crate::interval::Interval;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvgError(pub String);

impl std::fmt::Display for SvgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for SvgError {}

const FILL_Y: &str = "#4caf50";
const FILL_N: &str = "#ef5350";
const STROKE_U: &str = "#9e9e9e";

fn axis(r: &PavingRecord, v: &Var) -> Result<Interval, SvgError> {
    let i = r.bound.get(v);
    if !i.is_finite() {
        return Err(SvgError(format!(
            "variable {} is not finitely bounded in a {:?} record",
            v, r.kind
        )));
    }
    Ok(i)
}

/// Renders `records` into an SVG document of the given pixel size. The
/// viewport is the hull of all boxes; the y axis points up.
pub fn emit_svg(
    records: &[PavingRecord],
    xvar: &Var,
    yvar: &Var,
    width_px: u32,
    height_px: u32,
) -> Result<String, SvgError> {
    let mut doc = String::new();
    writeln!(
        doc,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">",
        width_px, height_px
    )
    .unwrap();
    let mut hull: Option<(Interval, Interval)> = None;
    for r in records {
        let (x, y) = (axis(r, xvar)?, axis(r, yvar)?);
        hull = Some(match hull {
            None => (x, y),
            Some((hx, hy)) => (hx.hull(&x), hy.hull(&y)),
        });
    }
    if let Some((hx, hy)) = hull {
        let sx = f64::from(width_px) / hx.width().max(f64::MIN_POSITIVE);
        let sy = f64::from(height_px) / hy.width().max(f64::MIN_POSITIVE);
        for r in records {
            let (x, y) = (axis(r, xvar).unwrap(), axis(r, yvar).unwrap());
            let px = (x.lo() - hx.lo()) * sx;
            // svg y grows downward, so flip around the hull's top
            let py = (hy.hi() - y.hi()) * sy;
            let (w, h) = (x.width() * sx, y.width() * sy);
            let style = match r.kind {
                RecordKind::Y => format!("fill=\"{}\"", FILL_Y),
                RecordKind::N => format!("fill=\"{}\"", FILL_N),
                RecordKind::U => format!(
                    "fill=\"none\" stroke=\"{}\" stroke-width=\"1\"",
                    STROKE_U
                ),
            };
            writeln!(
                doc,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" {}/>",
                px, py, w, h, style
            )
            .unwrap();
        }
    }
    doc.push_str("</svg>\n");
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::BoxAssignment;
    use crate::branch::DEFAULT_STALENESS;
    use crate::emit::records_of_paving;
    use crate::parse::parse_constraint;
    use crate::prune::PruneConfig;
    use crate::solver::{pave, SolveBudget};

    fn rec(kind: RecordKind, x: (f64, f64), y: (f64, f64)) -> PavingRecord {
        PavingRecord {
            kind,
            bound: BoxAssignment::all()
                .with(Var::new("x"), Interval::new(x.0, x.1))
                .with(Var::new("y"), Interval::new(y.0, y.1)),
        }
    }

    #[test]
    fn empty_paving_is_a_valid_empty_document() {
        let doc = emit_svg(&[], &Var::new("x"), &Var::new("y"), 400, 400).unwrap();
        assert!(doc.starts_with("<svg "));
        assert!(doc.trim_end().ends_with("</svg>"));
        assert!(!doc.contains("<rect"));
    }

    #[test]
    fn single_box_spans_the_viewport() {
        let recs = vec![rec(RecordKind::Y, (0.0, 2.0), (-1.0, 1.0))];
        let doc = emit_svg(&recs, &Var::new("x"), &Var::new("y"), 400, 300).unwrap();
        assert!(doc.contains(
            "<rect x=\"0.000\" y=\"0.000\" width=\"400.000\" height=\"300.000\" fill=\"#4caf50\"/>"
        ));
    }

    #[test]
    fn missing_axis_is_a_diagnostic() {
        let recs = vec![PavingRecord {
            kind: RecordKind::Y,
            bound: BoxAssignment::all().with(Var::new("x"), Interval::new(0.0, 1.0)),
        }];
        let err = emit_svg(&recs, &Var::new("x"), &Var::new("y"), 100, 100).unwrap_err();
        assert!(err.0.contains("y"), "{}", err);
    }

    #[test]
    fn identical_input_renders_identically() {
        let recs = vec![
            rec(RecordKind::Y, (0.0, 1.0), (0.0, 1.0)),
            rec(RecordKind::N, (1.0, 2.0), (0.0, 1.0)),
            rec(RecordKind::U, (0.0, 2.0), (1.0, 1.5)),
        ];
        let a = emit_svg(&recs, &Var::new("x"), &Var::new("y"), 640, 480).unwrap();
        let b = emit_svg(&recs, &Var::new("x"), &Var::new("y"), 640, 480).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<rect").count(), 3);
        assert_eq!(a.matches("fill=\"none\"").count(), 1);
    }

    /// Sums rectangle areas of one fill color from the rendered text.
    fn filled_px_area(doc: &str, fill: &str) -> f64 {
        let mut total = 0.0;
        for rect in doc.split("<rect").skip(1) {
            if !rect.contains(fill) {
                continue;
            }
            let field = |key: &str| -> f64 {
                let tail = rect.split(&format!("{}=\"", key)).nth(1).unwrap();
                tail.split('"').next().unwrap().parse().unwrap()
            };
            total += field("width") * field("height");
        }
        total
    }

    #[test]
    fn disc_paving_green_area_approximates_the_disc() {
        let phi = parse_constraint("x^2 + y^2 <= 1").unwrap();
        let b = BoxAssignment::all()
            .with(Var::new("x"), Interval::new(-2.0, 2.0))
            .with(Var::new("y"), Interval::new(-2.0, 2.0));
        let p = pave(
            &phi,
            &b,
            0.125,
            &PruneConfig::default(),
            &SolveBudget::default(),
            DEFAULT_STALENESS,
        );
        let recs = records_of_paving(&p);
        let doc = emit_svg(&recs, &Var::new("x"), &Var::new("y"), 400, 400).unwrap();
        let green_fraction = filled_px_area(&doc, FILL_Y) / (400.0 * 400.0);
        let want = std::f64::consts::PI / 16.0;
        assert!(
            (green_fraction - want).abs() / want < 0.05,
            "green fraction {} vs disc fraction {}",
            green_fraction,
            want
        );
    }
}
