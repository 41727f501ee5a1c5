//! Synthetic record streams and a categorical-table ingester.
//!
//! Every generator is a pure function of its seed, its parameters and the
//! record sequence number: record `t` is drawn from its own ChaCha stream, so
//! regenerating any record gives identical bits without replaying the
//! records before it. Sequence numbers start at 1.

use std::collections::HashMap;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::itemset::Itemset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRecord {
    pub seq: u64,
    pub items: Itemset,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("generator needs a universe of at least {needed} items, got {n}")]
    UniverseTooSmall { needed: u32, n: u32 },
    #[error("noise percentage must lie in [0, 100), got {0}")]
    NoisePct(String),
}

/// Anything that can produce record `seq` on demand.
pub trait RecordSource {
    fn universe(&self) -> u32;

    fn record(&self, seq: u64) -> Itemset;

    /// Records `1..=count` in order.
    fn stream(&self, count: u64) -> Stream<'_, Self>
    where
        Self: Sized,
    {
        Stream {
            source: self,
            next: 1,
            count,
        }
    }
}

pub struct Stream<'a, S> {
    source: &'a S,
    next: u64,
    count: u64,
}

impl<S: RecordSource> Iterator for Stream<'_, S> {
    type Item = StreamRecord;

    fn next(&mut self) -> Option<StreamRecord> {
        if self.next > self.count {
            return None;
        }
        let seq = self.next;
        self.next += 1;
        Some(StreamRecord {
            seq,
            items: self.source.record(seq),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count + 1).saturating_sub(self.next) as usize;
        (left, Some(left))
    }
}

fn record_rng(seed: u64, seq: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(seq);
    rng
}

fn require_universe(n: u32, needed: u32) -> Result<(), GeneratorError> {
    if n < needed {
        Err(GeneratorError::UniverseTooSmall { needed, n })
    } else {
        Ok(())
    }
}

/// Consecutive block of items, wrapping past the end of the universe.
fn block(start: u32, len: u32, n: u32) -> Itemset {
    (start..start + len).map(|i| i % n).collect()
}

/// Named groups of items, used to score how well clusters separate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub groups: Vec<Itemset>,
    pub noise_pct: f64,
    pub change_at: Option<u64>,
}

impl GroupSpec {
    /// Index of the only group containing all of `items`, if exactly one does.
    pub fn owner(&self, items: &Itemset) -> Option<usize> {
        let mut owners = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| items.is_subset(g))
            .map(|(k, _)| k);
        let first = owners.next()?;
        owners.next().is_none().then_some(first)
    }

    /// True if some group contains all of `items`.
    pub fn within_some_group(&self, items: &Itemset) -> bool {
        self.groups.iter().any(|g| items.is_subset(g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupLayout {
    /// Group `g` is items `5g..=5g+5`; neighbours share their boundary item.
    #[default]
    Overlapping,
    /// Group `g` is items `5g..=5g+4`.
    Disjoint,
}

/// Each record is one of ten item groups chosen uniformly at random.
#[derive(Debug, Clone)]
pub struct TenGroups {
    seed: u64,
    n: u32,
    layout: GroupLayout,
    groups: Vec<Itemset>,
}

impl TenGroups {
    pub const GROUPS: u32 = 10;

    pub fn new(seed: u64, n: u32, layout: GroupLayout) -> Result<Self, GeneratorError> {
        require_universe(n, 50)?;
        let len = match layout {
            GroupLayout::Overlapping => 6,
            GroupLayout::Disjoint => 5,
        };
        let groups = (0..Self::GROUPS).map(|g| block(5 * g, len, n)).collect();
        Ok(Self {
            seed,
            n,
            layout,
            groups,
        })
    }

    pub fn layout(&self) -> GroupLayout {
        self.layout
    }

    pub fn group(&self, g: usize) -> &Itemset {
        &self.groups[g]
    }

    pub fn group_of(&self, seq: u64) -> usize {
        record_rng(self.seed, seq).gen_range(0..self.groups.len())
    }

    pub fn spec(&self) -> GroupSpec {
        GroupSpec {
            groups: self.groups.clone(),
            noise_pct: 0.0,
            change_at: None,
        }
    }
}

impl RecordSource for TenGroups {
    fn universe(&self) -> u32 {
        self.n
    }

    fn record(&self, seq: u64) -> Itemset {
        self.groups[self.group_of(seq)].clone()
    }
}

/// Items 1..=5 in every record up to `change_at`, items 25..=30 afterwards.
#[derive(Debug, Clone)]
pub struct SuddenChange {
    n: u32,
    change_at: u64,
    before: Itemset,
    after: Itemset,
}

impl SuddenChange {
    pub const DEFAULT_CHANGE_AT: u64 = 30_000;

    pub fn new(n: u32, change_at: u64) -> Result<Self, GeneratorError> {
        require_universe(n, 50)?;
        Ok(Self {
            n,
            change_at,
            before: (1..=5).collect(),
            after: (25..=30).collect(),
        })
    }

    pub fn change_at(&self) -> u64 {
        self.change_at
    }

    pub fn spec(&self) -> GroupSpec {
        GroupSpec {
            groups: vec![self.before.clone(), self.after.clone()],
            noise_pct: 0.0,
            change_at: Some(self.change_at),
        }
    }
}

impl RecordSource for SuddenChange {
    fn universe(&self) -> u32 {
        self.n
    }

    fn record(&self, seq: u64) -> Itemset {
        if seq <= self.change_at {
            self.before.clone()
        } else {
            self.after.clone()
        }
    }
}

/// Groups of 11 consecutive items (`10g..=10g+10`) with every item dropped
/// independently with probability `noise_pct / 100`.
#[derive(Debug, Clone)]
pub struct NoisyGroups {
    seed: u64,
    n: u32,
    noise_pct: f64,
    groups: Vec<Itemset>,
}

impl NoisyGroups {
    pub fn new(seed: u64, n: u32, noise_pct: f64) -> Result<Self, GeneratorError> {
        require_universe(n, 50)?;
        if !(0.0..100.0).contains(&noise_pct) {
            return Err(GeneratorError::NoisePct(noise_pct.to_string()));
        }
        let groups = (0..n / 10).map(|g| block(10 * g, 11, n)).collect();
        Ok(Self {
            seed,
            n,
            noise_pct,
            groups,
        })
    }

    pub fn spec(&self) -> GroupSpec {
        GroupSpec {
            groups: self.groups.clone(),
            noise_pct: self.noise_pct,
            change_at: None,
        }
    }
}

impl RecordSource for NoisyGroups {
    fn universe(&self) -> u32 {
        self.n
    }

    fn record(&self, seq: u64) -> Itemset {
        let mut rng = record_rng(self.seed, seq);
        let group = &self.groups[rng.gen_range(0..self.groups.len())];
        let keep = 1.0 - self.noise_pct / 100.0;
        group.iter().filter(|_| rng.gen::<f64>() < keep).collect()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("row {line} has {found} columns, expected {expected}")]
    ColumnCount {
        line: u64,
        found: usize,
        expected: usize,
    },
    #[error("table has no usable rows")]
    Empty,
    #[error("cannot read table: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone)]
pub struct CategoricalOptions {
    /// Cells equal to one of these (after trimming) count as missing.
    pub missing_markers: Vec<String>,
    /// Zero-based columns to ignore, e.g. a class label.
    pub drop_columns: Vec<usize>,
    pub delimiter: u8,
}

impl Default for CategoricalOptions {
    fn default() -> Self {
        Self {
            missing_markers: vec!["?".into(), String::new()],
            drop_columns: Vec::new(),
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: u64,
    pub column: usize,
}

/// A categorical table turned into binary attribute-value items.
#[derive(Debug, Clone)]
pub struct CategoricalStream {
    /// `(column, value)` of each item, indexed by item.
    pub items: Vec<(usize, String)>,
    pub records: Vec<Itemset>,
    /// Rows skipped because a cell was missing.
    pub rejected: Vec<RejectedRow>,
}

impl CategoricalStream {
    pub fn universe(&self) -> u32 {
        self.items.len() as u32
    }

    pub fn item_of(&self, column: usize, value: &str) -> Option<u32> {
        self.items
            .iter()
            .position(|(c, v)| *c == column && v == value)
            .map(|i| i as u32)
    }
}

impl RecordSource for CategoricalStream {
    fn universe(&self) -> u32 {
        CategoricalStream::universe(self)
    }

    /// The table repeated end to end: record `len + 1` is record 1 again.
    fn record(&self, seq: u64) -> Itemset {
        let len = self.records.len() as u64;
        self.records[((seq - 1) % len) as usize].clone()
    }
}

/// Reads a delimited table without a header. Each distinct
/// `(column, value)` pair becomes an item, numbered in first-seen order.
pub fn ingest_categorical<R: Read>(
    reader: R,
    options: &CategoricalOptions,
) -> Result<CategoricalStream, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut index: HashMap<(usize, String), u32> = HashMap::new();
    let mut out = CategoricalStream {
        items: Vec::new(),
        records: Vec::new(),
        rejected: Vec::new(),
    };
    let mut width = None;
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(row.len());
        if row.len() != expected {
            return Err(IngestError::ColumnCount {
                line,
                found: row.len(),
                expected,
            });
        }
        let cells: Vec<(usize, &str)> = row
            .iter()
            .enumerate()
            .filter(|(c, _)| !options.drop_columns.contains(c))
            .collect();
        if let Some(&(column, _)) = cells
            .iter()
            .find(|(_, v)| options.missing_markers.iter().any(|m| m == v))
        {
            out.rejected.push(RejectedRow { line, column });
            continue;
        }
        let mut record = Itemset::new();
        for (column, value) in cells {
            let key = (column, value.to_string());
            let next = index.len() as u32;
            let item = *index.entry(key.clone()).or_insert_with(|| {
                out.items.push(key);
                next
            });
            record.insert(item);
        }
        out.records.push(record);
    }
    if out.records.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(out)
}
