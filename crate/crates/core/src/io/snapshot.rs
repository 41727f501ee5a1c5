//! Snapshot TSV.
//!
//! ```text
//! # clock=5000
//! 24 33 81<TAB>0.250000<TAB>0.750000<TAB>295.000000<TAB>5000
//! ```
//!
//! One row per pattern in canonical itemset order: items, wall-projected
//! x and y, support estimate, age. Reals carry six decimals.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::geometry::clamp_to_unit_square;
use crate::itemset::Itemset;
use crate::model::ModelSnapshot;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub items: Itemset,
    pub x: f64,
    pub y: f64,
    pub support: f64,
    pub age: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub clock: u64,
    pub rows: Vec<SnapshotRow>,
}

impl Snapshot {
    pub fn from_model(model: &ModelSnapshot) -> Self {
        let mut rows: Vec<SnapshotRow> = model
            .patterns
            .iter()
            .map(|p| {
                let point = clamp_to_unit_square(p.point);
                SnapshotRow {
                    items: p.items.clone(),
                    x: point.x,
                    y: point.y,
                    support: p.support.value(),
                    age: model.age(p),
                }
            })
            .collect();
        rows.sort_by(|a, b| a.items.cmp(&b.items));
        Self {
            clock: model.clock,
            rows,
        }
    }
}

pub fn write_snapshot<W: Write>(out: &mut W, snapshot: &Snapshot) -> io::Result<()> {
    writeln!(out, "# clock={}", snapshot.clock)?;
    for r in &snapshot.rows {
        writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{}",
            r.items, r.x, r.y, r.support, r.age
        )?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum SnapshotParseError {
    #[error("missing `# clock=` header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn parse_snapshot<R: BufRead>(reader: R) -> Result<Snapshot, SnapshotParseError> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(SnapshotParseError::MissingHeader)??;
    let clock = header
        .strip_prefix("# clock=")
        .and_then(|c| c.trim().parse().ok())
        .ok_or(SnapshotParseError::MissingHeader)?;
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let number = k + 2;
        let bad = |message: String| SnapshotParseError::Line {
            line: number,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        }
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("invalid number {s:?}")))
        };
        rows.push(SnapshotRow {
            items: fields[0].parse().map_err(|e| bad(format!("{e}")))?,
            x: real(fields[1])?,
            y: real(fields[2])?,
            support: real(fields[3])?,
            age: fields[4]
                .parse()
                .map_err(|_| bad(format!("invalid age {:?}", fields[4])))?,
        });
    }
    Ok(Snapshot { clock, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::model::TrackedPattern;
    use crate::support::{SupportMode, SupportState};
    use proptest::prelude::*;

    fn render(s: &Snapshot) -> String {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, s).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn row_format() {
        let s = Snapshot {
            clock: 5000,
            rows: vec![SnapshotRow {
                items: Itemset::from_items([24, 33, 81]),
                x: 0.25,
                y: 0.75,
                support: 295.0,
                age: 5000,
            }],
        };
        assert_eq!(
            render(&s),
            "# clock=5000\n24 33 81\t0.250000\t0.750000\t295.000000\t5000\n"
        );
    }

    #[test]
    fn model_snapshot_is_clamped_and_sorted() {
        let model = ModelSnapshot {
            clock: 40,
            ell: 300,
            patterns: vec![
                TrackedPattern {
                    items: Itemset::singleton(3),
                    point: Point2::new(1.4, -0.2),
                    support: SupportState::from_parts(2.0, 10, SupportMode::Young),
                },
                TrackedPattern::new(Itemset::from_items([0, 1]), Point2::new(0.5, 0.5), 0),
            ],
        };
        let s = Snapshot::from_model(&model);
        assert_eq!(s.rows[0].items, Itemset::from_items([0, 1]));
        assert_eq!((s.rows[1].x, s.rows[1].y, s.rows[1].age), (1.0, 0.0, 30));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            parse_snapshot("".as_bytes()),
            Err(SnapshotParseError::MissingHeader)
        ));
        let bad = "# clock=1\n0 1\t0.1\t0.2\n";
        assert!(matches!(
            parse_snapshot(bad.as_bytes()),
            Err(SnapshotParseError::Line { line: 2, .. })
        ));
    }

    fn arb_row() -> impl Strategy<Value = SnapshotRow> {
        (
            proptest::collection::vec(0u32..100, 1..6),
            0u32..=1_000_000,
            0u32..=1_000_000,
            0u64..=300_000_000,
            0u64..1_000_000,
        )
            .prop_map(|(items, x, y, s, age)| SnapshotRow {
                items: Itemset::from_items(items),
                x: f64::from(x) / 1e6,
                y: f64::from(y) / 1e6,
                support: s as f64 / 1e6,
                age,
            })
    }

    proptest! {
        // Values on the six-decimal grid survive a write/parse cycle exactly.
        #[test]
        fn round_trip(clock in 0u64..1_000_000, rows in proptest::collection::vec(arb_row(), 0..20)) {
            let s = Snapshot { clock, rows };
            let text = render(&s);
            let back = parse_snapshot(text.as_bytes()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(render(&back), text);
        }
    }
}
