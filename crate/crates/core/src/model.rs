//! The merge/split cluster model over a transaction stream.
//!
//! The model keeps a set of tracked patterns, each an itemset with a point in
//! the plane and a support estimate. Every record runs the same pipeline:
//!
//! 1. update every pattern's support (exact count while young, window
//!    estimate once old);
//! 2. push or pull a random sample of point pairs according to which of the
//!    two patterns occur in the record;
//! 3. merge every appropriate pair into fresh candidate itemsets, marking the
//!    smaller partner (or both, when equal in size);
//! 4. drop marked patterns, except singletons;
//! 5. split infrequent, old-enough patterns into their one-smaller subsets;
//! 6. add the fresh candidates, keeping the oldest copy of any duplicate;
//! 7. remove every non-singleton pattern that is a proper subset of another.
//!
//! All `n` singletons are always present. The model is a sequential state
//! machine: given the same [`Params`] (including the seed) and the same
//! records it always reaches the same state.

use std::collections::HashSet;
use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{distance, push_pull, sample_pair, PairAction, Point2};
use crate::itemset::Itemset;
use crate::support::{SupportState, WindowError, WindowParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Size of the item universe; items are `0..n`.
    pub n: u32,
    pub minsupp: f64,
    /// Sliding window size.
    pub ell: u32,
    pub mergedist: f64,
    /// Push/pull learning rate.
    pub alpha: f64,
    /// Pairs sampled for push/pull per record.
    pub pair_budget: usize,
    /// Minimum age before an infrequent pattern is split.
    pub split_age: u64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 50,
            minsupp: 15.0,
            ell: 300,
            mergedist: 0.1,
            alpha: 0.1,
            pair_budget: 40_000,
            split_age: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("the item universe must contain at least one item")]
    NoItems,
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("mergedist must lie in [0, sqrt 2], got {0}")]
    MergeDist(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("split age must be at least 1")]
    SplitAge,
}

impl Params {
    /// Default parameters with a window of `ell` and split age tied to it.
    pub fn with_window(mut self, ell: u32) -> Self {
        self.ell = ell;
        self.split_age = u64::from(ell);
        self
    }

    pub fn validate(&self) -> Result<WindowParams, ParamsError> {
        if self.n == 0 {
            return Err(ParamsError::NoItems);
        }
        let window = WindowParams::new(self.ell, self.minsupp)?;
        if !(0.0..=SQRT_2).contains(&self.mergedist) {
            return Err(ParamsError::MergeDist(self.mergedist));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ParamsError::Alpha(self.alpha));
        }
        if self.split_age == 0 {
            return Err(ParamsError::SplitAge);
        }
        Ok(window)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("record item {item} is outside the universe 0..{n}")]
    ItemOutOfRange { item: u32, n: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPattern {
    pub items: Itemset,
    pub point: Point2,
    pub support: SupportState,
}

impl TrackedPattern {
    pub fn new(items: Itemset, point: Point2, birth: u64) -> Self {
        Self {
            items,
            point,
            support: SupportState::new(birth),
        }
    }

    pub fn birth(&self) -> u64 {
        self.support.birth()
    }

    pub fn age(&self, now: u64) -> u64 {
        self.support.age(now)
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.items.len() == 1
    }
}

/// True if `smaller` has exactly one item outside `larger`, i.e. there is an
/// item `i` in `smaller \ larger` with `smaller \ {i}` contained in `larger`.
pub fn extends_by_one(larger: &Itemset, smaller: &Itemset) -> bool {
    smaller.difference_len(larger) == 1
}

/// All merge conditions for a pair: both frequent, within `mergedist`, the
/// smaller one has exactly one item outside the larger one, and both have
/// been in the model for at least `ell` records.
pub fn should_merge(a: &TrackedPattern, b: &TrackedPattern, params: &Params, now: u64) -> bool {
    let ell = u64::from(params.ell);
    a.support.value() >= params.minsupp
        && b.support.value() >= params.minsupp
        && a.age(now) >= ell
        && b.age(now) >= ell
        && distance(a.point, b.point) <= params.mergedist
        && {
            let (larger, smaller) = order_by_size(&a.items, &b.items);
            extends_by_one(larger, smaller)
        }
}

fn order_by_size<'a>(a: &'a Itemset, b: &'a Itemset) -> (&'a Itemset, &'a Itemset) {
    if a.len() >= b.len() {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeResult {
    pub new_sets: Vec<Itemset>,
    /// Whether the first argument is marked for removal.
    pub mark_first: bool,
    pub mark_second: bool,
}

/// Candidate itemsets produced by merging two patterns.
///
/// Equal sizes give the union and mark both. Otherwise, with `larger` and
/// `smaller`, every `e` in `larger \ smaller` gives `smaller + {e}` and only
/// `smaller` is marked. Marks on singletons are ignored by the caller.
pub fn merge(first: &Itemset, second: &Itemset) -> MergeResult {
    if first.len() == second.len() {
        return MergeResult {
            new_sets: vec![first.union(second)],
            mark_first: true,
            mark_second: true,
        };
    }
    let first_larger = first.len() > second.len();
    let (larger, smaller) = if first_larger {
        (first, second)
    } else {
        (second, first)
    };
    let new_sets = larger
        .difference(smaller)
        .iter()
        .map(|e| smaller.with_item(e))
        .collect();
    MergeResult {
        new_sets,
        mark_first: !first_larger,
        mark_second: first_larger,
    }
}

/// Split products of a pattern, if it is eligible: more than one item,
/// support below `minsupp`, and age at least `split_age`.
pub fn split(pattern: &TrackedPattern, params: &Params, now: u64) -> Option<Vec<Itemset>> {
    if pattern.len() < 2
        || pattern.support.value() >= params.minsupp
        || pattern.age(now) < params.split_age
    {
        return None;
    }
    pattern.items.remove_each_once().ok()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergeScan {
    pub fresh: Vec<Itemset>,
    /// Indexed like the scanned slice.
    pub marked: Vec<bool>,
    pub merges: usize,
}

/// Scans pairs `(i, j)`, `i < j`, of a canonically sorted pattern slice and
/// merges every appropriate pair. A pattern marked by an earlier merge in the
/// same scan does not take part in later merges.
pub fn merge_scan(patterns: &[TrackedPattern], params: &Params, now: u64) -> MergeScan {
    let ell = u64::from(params.ell);
    let eligible: Vec<usize> = patterns
        .iter()
        .enumerate()
        .filter(|(_, p)| p.support.value() >= params.minsupp && p.age(now) >= ell)
        .map(|(i, _)| i)
        .collect();
    let mut scan = MergeScan {
        marked: vec![false; patterns.len()],
        ..MergeScan::default()
    };
    for (k, &i) in eligible.iter().enumerate() {
        for &j in &eligible[k + 1..] {
            if scan.marked[i] {
                break;
            }
            if scan.marked[j] || !should_merge(&patterns[i], &patterns[j], params, now) {
                continue;
            }
            let result = merge(&patterns[i].items, &patterns[j].items);
            scan.fresh.extend(result.new_sets);
            scan.marked[i] |= result.mark_first;
            scan.marked[j] |= result.mark_second;
            scan.merges += 1;
        }
    }
    scan
}

/// Removes every non-singleton pattern that is a proper subset of another
/// pattern. Returns how many were removed.
pub fn prune_non_maximal(patterns: &mut Vec<TrackedPattern>) -> usize {
    let keep: Vec<bool> = patterns
        .iter()
        .map(|p| {
            p.is_singleton()
                || !patterns
                    .iter()
                    .any(|q| q.len() > p.len() && p.items.is_subset(&q.items))
        })
        .collect();
    let before = patterns.len();
    let mut flags = keep.into_iter();
    patterns.retain(|_| flags.next().unwrap_or(true));
    before - patterns.len()
}

/// Like [`prune_non_maximal`] when `patterns[..first_new]` is already an
/// antichain (apart from singletons): only pairs involving a pattern at or
/// after `first_new` are compared.
fn prune_against_new(patterns: &mut Vec<TrackedPattern>, first_new: usize) -> usize {
    let (old, new) = patterns.split_at(first_new);
    let covered = |p: &TrackedPattern, others: &[TrackedPattern]| {
        others
            .iter()
            .any(|q| q.len() > p.len() && p.items.is_subset(&q.items))
    };
    let keep: Vec<bool> = old
        .iter()
        .map(|p| p.is_singleton() || !covered(p, new))
        .chain(
            new.iter()
                .map(|p| p.is_singleton() || !(covered(p, old) || covered(p, new))),
        )
        .collect();
    let before = patterns.len();
    let mut flags = keep.into_iter();
    patterns.retain(|_| flags.next().unwrap_or(true));
    before - patterns.len()
}

/// Counters for one processed record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordOutcome {
    pub pulls: usize,
    pub pushes: usize,
    pub merges: usize,
    pub removed_by_merge: usize,
    pub splits: usize,
    pub added: usize,
    pub pruned: usize,
}

/// Value copy of the model at one clock tick.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot {
    pub clock: u64,
    pub ell: u32,
    pub patterns: Vec<TrackedPattern>,
}

impl ModelSnapshot {
    pub fn age(&self, pattern: &TrackedPattern) -> u64 {
        pattern.age(self.clock)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InvariantViolation {
    #[error("singleton {{{0}}} is missing")]
    MissingSingleton(u32),
    #[error("itemset {0} appears more than once")]
    Duplicate(String),
    #[error("{0} is a proper subset of {1}")]
    NotMaximal(String, String),
    #[error("{items} is old enough to split (age {age}) but has support {support}")]
    Unsplit {
        items: String,
        age: u64,
        support: f64,
    },
    #[error("item {0} is outside the universe")]
    OutOfUniverse(u32),
    #[error("patterns are not in canonical order")]
    Unsorted,
    #[error("support of {items} is {value}, outside its bound")]
    SupportBound { items: String, value: f64 },
}

#[derive(Debug, Clone)]
pub struct Model {
    params: Params,
    window: WindowParams,
    patterns: Vec<TrackedPattern>,
    clock: u64,
    rng: ChaCha8Rng,
    occurs: Vec<bool>,
}

impl Model {
    /// The `n` singletons at uniform random points, clock 0.
    pub fn new(params: Params) -> Result<Self, ParamsError> {
        let window = params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let patterns = (0..params.n)
            .map(|i| TrackedPattern::new(Itemset::singleton(i), Point2::random(&mut rng), 0))
            .collect();
        Ok(Self {
            params,
            window,
            patterns,
            clock: 0,
            rng,
            occurs: Vec::new(),
        })
    }

    /// Builds a model from explicit patterns, e.g. to resume from a known
    /// state. Missing singletons are added at random points; duplicates keep
    /// the earliest birth, and non-maximal patterns are pruned.
    pub fn with_patterns(
        params: Params,
        patterns: Vec<TrackedPattern>,
        clock: u64,
    ) -> Result<Self, ParamsError> {
        let mut model = Self::new(params)?;
        let mut singletons = std::mem::take(&mut model.patterns);
        let mut all = patterns;
        all.sort_by(|a, b| a.items.cmp(&b.items).then(a.birth().cmp(&b.birth())));
        all.dedup_by(|later, earlier| later.items == earlier.items);
        let present: HashSet<Itemset> = all.iter().map(|p| p.items.clone()).collect();
        singletons.retain(|s| !present.contains(&s.items));
        all.extend(singletons);
        prune_non_maximal(&mut all);
        all.sort_by(|a, b| a.items.cmp(&b.items));
        model.patterns = all;
        model.clock = clock;
        Ok(model)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn window(&self) -> WindowParams {
        self.window
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Patterns in canonical itemset order.
    pub fn patterns(&self) -> &[TrackedPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, items: &Itemset) -> Option<&TrackedPattern> {
        self.patterns
            .binary_search_by(|p| p.items.cmp(items))
            .ok()
            .map(|i| &self.patterns[i])
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            clock: self.clock,
            ell: self.params.ell,
            patterns: self.patterns.clone(),
        }
    }

    /// Runs one record through the full pipeline and advances the clock.
    pub fn process_record(&mut self, record: &Itemset) -> Result<RecordOutcome, ModelError> {
        if let Some(item) = record.max_item() {
            if item >= self.params.n {
                return Err(ModelError::ItemOutOfRange {
                    item,
                    n: self.params.n,
                });
            }
        }
        self.clock += 1;
        let now = self.clock;
        let mut outcome = RecordOutcome::default();

        self.update_supports(record);
        self.update_distances(&mut outcome);

        let scan = merge_scan(&self.patterns, &self.params, now);
        outcome.merges = scan.merges;
        let mut fresh = scan.fresh;
        let mut marks = scan.marked.into_iter();
        let before = self.patterns.len();
        self.patterns
            .retain(|p| !marks.next().unwrap_or(false) || p.is_singleton());
        outcome.removed_by_merge = before - self.patterns.len();

        let params = &self.params;
        let mut split_count = 0;
        self.patterns.retain(|p| match split(p, params, now) {
            Some(parts) => {
                fresh.extend(parts);
                split_count += 1;
                false
            }
            None => true,
        });
        outcome.splits = split_count;

        let (added, pruned) = self.join_and_prune(fresh);
        outcome.added = added;
        outcome.pruned = pruned;
        Ok(outcome)
    }

    /// Feeds records one by one, handing a snapshot to `hook` after every
    /// `every` records. Stops at the first invalid record.
    pub fn process_stream<'a, I, F>(
        &mut self,
        records: I,
        every: u64,
        mut hook: F,
    ) -> Result<(), ModelError>
    where
        I: IntoIterator<Item = &'a Itemset>,
        F: FnMut(ModelSnapshot),
    {
        let every = every.max(1);
        for record in records {
            self.process_record(record)?;
            if self.clock.is_multiple_of(every) {
                hook(self.snapshot());
            }
        }
        Ok(())
    }

    fn update_supports(&mut self, record: &Itemset) {
        let now = self.clock;
        let ell = self.params.ell;
        self.occurs.clear();
        for p in &mut self.patterns {
            let occurs = p.items.is_subset(record);
            self.occurs.push(occurs);
            p.support = p.support.observe(occurs, now, ell);
        }
    }

    fn update_distances(&mut self, outcome: &mut RecordOutcome) {
        let count = self.patterns.len();
        if count < 2 || self.params.pair_budget == 0 {
            return;
        }
        // Nothing moves unless at least one pattern occurs.
        if !self.occurs.iter().any(|&o| o) {
            return;
        }
        let alpha = self.params.alpha;
        for _ in 0..self.params.pair_budget {
            let (i, j) = sample_pair(count, &mut self.rng);
            let action = PairAction::from_occurrence(self.occurs[i], self.occurs[j]);
            let Some(goal) = action.goal() else { continue };
            match action {
                PairAction::Pull => outcome.pulls += 1,
                _ => outcome.pushes += 1,
            }
            let (a, b) = push_pull(self.patterns[i].point, self.patterns[j].point, goal, alpha);
            self.patterns[i].point = a;
            self.patterns[j].point = b;
        }
    }

    /// Adds fresh itemsets born now (duplicates of tracked itemsets, or of
    /// each other, are dropped so the oldest copy survives), then prunes
    /// non-maximal patterns. Returns `(added, pruned)`.
    pub fn join_and_prune(&mut self, fresh: Vec<Itemset>) -> (usize, usize) {
        let now = self.clock;
        // Surviving patterns are still sorted, so lookups can bisect.
        let tracked = self.patterns.len();
        let mut batch: HashSet<Itemset> = HashSet::new();
        for items in fresh {
            if items.is_empty()
                || batch.contains(&items)
                || self.patterns[..tracked]
                    .binary_search_by(|p| p.items.cmp(&items))
                    .is_ok()
            {
                continue;
            }
            batch.insert(items.clone());
            let point = Point2::random(&mut self.rng);
            self.patterns.push(TrackedPattern::new(items, point, now));
        }
        let added = self.patterns.len() - tracked;
        if added == 0 {
            return (0, 0);
        }
        let pruned = prune_against_new(&mut self.patterns, tracked);
        self.patterns.sort_by(|a, b| a.items.cmp(&b.items));
        (added, pruned)
    }

    /// Checks every structural invariant the model promises between records.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let now = self.clock;
        let ell = f64::from(self.params.ell);
        for w in self.patterns.windows(2) {
            match w[0].items.cmp(&w[1].items) {
                std::cmp::Ordering::Less => {}
                std::cmp::Ordering::Equal => {
                    return Err(InvariantViolation::Duplicate(w[0].items.to_string()))
                }
                std::cmp::Ordering::Greater => return Err(InvariantViolation::Unsorted),
            }
        }
        for i in 0..self.params.n {
            if self.get(&Itemset::singleton(i)).is_none() {
                return Err(InvariantViolation::MissingSingleton(i));
            }
        }
        for p in &self.patterns {
            if let Some(item) = p.items.max_item().filter(|&m| m >= self.params.n) {
                return Err(InvariantViolation::OutOfUniverse(item));
            }
            let value = p.support.value();
            let bound = match p.support.mode() {
                crate::support::SupportMode::Old => ell,
                crate::support::SupportMode::Young => p.age(now) as f64,
            };
            if !(0.0..=bound).contains(&value) {
                return Err(InvariantViolation::SupportBound {
                    items: p.items.to_string(),
                    value,
                });
            }
            if p.len() > 1 && p.age(now) >= self.params.split_age && value < self.params.minsupp {
                return Err(InvariantViolation::Unsplit {
                    items: p.items.to_string(),
                    age: p.age(now),
                    support: value,
                });
            }
            if p.len() > 1 {
                if let Some(q) = self
                    .patterns
                    .iter()
                    .find(|q| p.items.is_proper_subset(&q.items))
                {
                    return Err(InvariantViolation::NotMaximal(
                        p.items.to_string(),
                        q.items.to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}
