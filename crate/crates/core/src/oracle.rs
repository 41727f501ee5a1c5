//! Exact ground truth over the last `ell` records.
//!
//! Unlike the model, the oracle keeps every record of its window. It is meant
//! for validation at desk scale: exact supports, exact maximal frequent
//! itemsets (level-wise, with a brute-force cross-check for small
//! universes), co-occurrence counts, and the scores that compare a model
//! snapshot with the exact answer.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::generators::GroupSpec;
use crate::geometry::{clamp_to_unit_square, distance};
use crate::itemset::Itemset;
use crate::model::ModelSnapshot;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("no pattern has age of at least {0}")]
    EmptyCohort(u64),
    #[error("brute-force enumeration supports at most {max} items, got {got}")]
    UniverseTooLarge { max: u32, got: u32 },
    #[error("cluster separation is not computable: {0}")]
    NotComputable(&'static str),
}

/// FIFO of the last `ell` records.
#[derive(Debug, Clone)]
pub struct ExactWindow {
    buffer: VecDeque<Itemset>,
    ell: usize,
}

impl ExactWindow {
    pub fn new(ell: u32) -> Self {
        Self {
            buffer: VecDeque::with_capacity(ell as usize),
            ell: ell.max(1) as usize,
        }
    }

    pub fn push(&mut self, record: Itemset) {
        if self.buffer.len() == self.ell {
            self.buffer.pop_front();
        }
        self.buffer.push_back(record);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn ell(&self) -> u32 {
        self.ell as u32
    }

    pub fn records(&self) -> impl Iterator<Item = &Itemset> {
        self.buffer.iter()
    }

    pub fn exact_support(&self, pattern: &Itemset) -> u32 {
        self.buffer.iter().filter(|r| pattern.is_subset(r)).count() as u32
    }

    /// Records containing both patterns.
    pub fn co_occurrence(&self, a: &Itemset, b: &Itemset) -> u32 {
        self.buffer
            .iter()
            .filter(|r| a.is_subset(r) && b.is_subset(r))
            .count() as u32
    }

    /// Largest item seen in the window plus one.
    pub fn universe(&self) -> u32 {
        self.buffer
            .iter()
            .filter_map(Itemset::max_item)
            .max()
            .map_or(0, |m| m + 1)
    }
}

/// Non-empty itemsets with support at least `minsupp` and no frequent proper
/// superset, in canonical order. Level-wise candidate generation with the
/// subset prune.
pub fn exact_maximal_frequent(window: &ExactWindow, minsupp: f64) -> Vec<Itemset> {
    let is_frequent = |p: &Itemset| f64::from(window.exact_support(p)) >= minsupp;

    let mut level: Vec<Itemset> = (0..window.universe())
        .map(Itemset::singleton)
        .filter(|p| is_frequent(p))
        .collect();
    let mut maximal = Vec::new();
    while !level.is_empty() {
        let known: HashSet<&Itemset> = level.iter().collect();
        let mut next = Vec::new();
        for (k, a) in level.iter().enumerate() {
            let a_items = a.to_vec();
            for b in &level[k + 1..] {
                let b_items = b.to_vec();
                let last = a_items.len() - 1;
                // join on a shared prefix; levels are kept in canonical order
                if a_items[..last] != b_items[..last] {
                    break;
                }
                let candidate = a.union(b);
                let all_subsets_frequent = candidate
                    .iter()
                    .all(|i| known.contains(&candidate.without_item(i)));
                if all_subsets_frequent && is_frequent(&candidate) {
                    next.push(candidate);
                }
            }
        }
        next.sort();
        for p in &level {
            if !next.iter().any(|q| p.is_subset(q)) {
                maximal.push(p.clone());
            }
        }
        level = next;
    }
    maximal.sort();
    maximal
}

pub const BRUTE_FORCE_MAX_ITEMS: u32 = 20;

/// Same answer as [`exact_maximal_frequent`], by enumerating every subset of
/// `0..universe`.
pub fn brute_force_maximal_frequent(
    window: &ExactWindow,
    minsupp: f64,
    universe: u32,
) -> Result<Vec<Itemset>, OracleError> {
    if universe > BRUTE_FORCE_MAX_ITEMS {
        return Err(OracleError::UniverseTooLarge {
            max: BRUTE_FORCE_MAX_ITEMS,
            got: universe,
        });
    }
    let masks: Vec<u32> = window
        .records()
        .map(|r| {
            r.iter()
                .filter(|&i| i < universe)
                .fold(0u32, |m, i| m | (1 << i))
        })
        .collect();
    let frequent: Vec<u32> = (1u32..(1 << universe))
        .filter(|&set| {
            let support = masks.iter().filter(|&&r| set & r == set).count();
            support as f64 >= minsupp
        })
        .collect();
    let mut out: Vec<Itemset> = frequent
        .iter()
        .filter(|&&m| !frequent.iter().any(|&f| f != m && f & m == m))
        .map(|&m| (0..universe).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    out.sort();
    Ok(out)
}

/// Root-mean-squared difference between estimated and exact window support,
/// both divided by `ell`, over patterns at least `min_age` old.
pub fn support_rmse(
    snapshot: &ModelSnapshot,
    window: &ExactWindow,
    min_age: u64,
) -> Result<f64, OracleError> {
    let ell = f64::from(snapshot.ell);
    let errors: Vec<f64> = snapshot
        .patterns
        .iter()
        .filter(|p| snapshot.age(p) >= min_age)
        .map(|p| (p.support.value() - f64::from(window.exact_support(&p.items))) / ell)
        .collect();
    rms(&errors).ok_or(OracleError::EmptyCohort(min_age))
}

fn rms(errors: &[f64]) -> Option<f64> {
    if errors.is_empty() {
        return None;
    }
    Some((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub total: usize,
    /// Oracle patterns present verbatim in the model.
    pub exact_matches: usize,
    /// Oracle patterns present verbatim or as a model superset with one extra item.
    pub within_one_extra: usize,
    /// Oracle patterns with no model superset at all.
    pub missing: usize,
    /// Relative-support RMSE over exact matches that are old (age >= ell).
    pub support_rmse: Option<f64>,
    /// Same, over old model supersets with at most one extra item.
    pub within_one_rmse: Option<f64>,
}

/// Compares a model snapshot with the exact maximal frequent itemsets.
pub fn match_report(
    snapshot: &ModelSnapshot,
    oracle: &[Itemset],
    window: &ExactWindow,
) -> MatchReport {
    let ell = f64::from(snapshot.ell);
    let old = |age: u64| age >= u64::from(snapshot.ell);
    let mut report = MatchReport {
        total: oracle.len(),
        exact_matches: 0,
        within_one_extra: 0,
        missing: 0,
        support_rmse: None,
        within_one_rmse: None,
    };
    let mut exact_errors = Vec::new();
    let mut near_errors = Vec::new();
    for target in oracle {
        let supersets: Vec<_> = snapshot
            .patterns
            .iter()
            .filter(|p| target.is_subset(&p.items))
            .collect();
        if supersets.is_empty() {
            report.missing += 1;
            continue;
        }
        if let Some(p) = supersets.iter().find(|p| p.items == *target) {
            report.exact_matches += 1;
            if old(snapshot.age(p)) {
                exact_errors
                    .push((p.support.value() - f64::from(window.exact_support(&p.items))) / ell);
            }
        }
        let near: Vec<_> = supersets
            .iter()
            .filter(|p| p.items.len() <= target.len() + 1)
            .collect();
        if !near.is_empty() {
            report.within_one_extra += 1;
            near_errors.extend(
                near.iter()
                    .filter(|p| old(snapshot.age(p)))
                    .map(|p| (p.support.value() - f64::from(window.exact_support(&p.items))) / ell),
            );
        }
    }
    report.support_rmse = rms(&exact_errors);
    report.within_one_rmse = rms(&near_errors);
    report
}

/// Mean pairwise distance between patterns of the same group divided by the
/// mean pairwise distance between patterns of different groups, using
/// wall-projected coordinates. A pattern counts for a group when all of its
/// items lie in exactly that one group; other patterns are ignored.
pub fn cluster_separation(
    snapshot: &ModelSnapshot,
    groups: &GroupSpec,
) -> Result<f64, OracleError> {
    let members: Vec<(usize, crate::geometry::Point2)> = snapshot
        .patterns
        .iter()
        .filter_map(|p| {
            groups
                .owner(&p.items)
                .map(|g| (g, clamp_to_unit_square(p.point)))
        })
        .collect();
    let distinct: HashSet<usize> = members.iter().map(|(g, _)| *g).collect();
    if distinct.len() < 2 {
        return Err(OracleError::NotComputable(
            "fewer than two groups have patterns",
        ));
    }
    let (mut within, mut within_n, mut across, mut across_n) = (0.0, 0usize, 0.0, 0usize);
    for (k, (ga, pa)) in members.iter().enumerate() {
        for (gb, pb) in &members[k + 1..] {
            let d = distance(*pa, *pb);
            if ga == gb {
                within += d;
                within_n += 1;
            } else {
                across += d;
                across_n += 1;
            }
        }
    }
    if within_n == 0 {
        return Err(OracleError::NotComputable("no group has two patterns"));
    }
    let across_mean = across / across_n as f64;
    if across_mean == 0.0 {
        return Err(OracleError::NotComputable("all groups sit on one point"));
    }
    Ok((within / within_n as f64) / across_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::model::TrackedPattern;
    use crate::support::{SupportMode, SupportState};

    fn set(items: &[u32]) -> Itemset {
        Itemset::from_items(items.iter().copied())
    }

    fn window(records: &[&[u32]], ell: u32) -> ExactWindow {
        let mut w = ExactWindow::new(ell);
        for r in records {
            w.push(set(r));
        }
        w
    }

    fn pattern(items: &[u32], x: f64, y: f64, support: f64, birth: u64) -> TrackedPattern {
        TrackedPattern {
            items: set(items),
            point: Point2::new(x, y),
            support: SupportState::from_parts(support, birth, SupportMode::Old),
        }
    }

    fn snapshot(clock: u64, ell: u32, patterns: Vec<TrackedPattern>) -> ModelSnapshot {
        ModelSnapshot {
            clock,
            ell,
            patterns,
        }
    }

    #[test]
    fn window_evicts_oldest() {
        let w = window(&[&[0], &[1], &[2], &[3]], 3);
        assert_eq!(w.len(), 3);
        assert_eq!(w.exact_support(&set(&[0])), 0);
        assert_eq!(w.exact_support(&set(&[3])), 1);
    }

    #[test]
    fn exact_support_examples() {
        let w = window(&[&[0, 1], &[0], &[1]], 10);
        assert_eq!(w.exact_support(&set(&[0])), 2);
        assert_eq!(w.exact_support(&Itemset::new()), 3);
        assert_eq!(w.exact_support(&set(&[7])), 0);
    }

    #[test]
    fn co_occurrence_examples() {
        let w = window(&[&[0, 1, 2], &[0, 1], &[2, 3], &[0]], 10);
        let a = set(&[0, 1]);
        assert_eq!(w.co_occurrence(&a, &a), w.exact_support(&a));
        assert_eq!(w.co_occurrence(&set(&[1]), &set(&[3])), 0);
        assert_eq!(
            w.co_occurrence(&set(&[0]), &set(&[2])),
            w.exact_support(&set(&[0, 2]))
        );
    }

    #[test]
    fn maximal_examples() {
        let rec: &[u32] = &[1, 2, 3, 4, 5];
        let w = window(&[rec, rec, rec], 10);
        assert_eq!(exact_maximal_frequent(&w, 3.0), vec![set(rec)]);
        assert_eq!(exact_maximal_frequent(&w, 1.0), vec![set(rec)]);
        assert!(exact_maximal_frequent(&w, 4.0).is_empty());
    }

    #[test]
    fn maximal_mixed_window() {
        let w = window(&[&[0, 1, 2], &[0, 1], &[1, 2], &[0, 2], &[3]], 10);
        let got = exact_maximal_frequent(&w, 2.0);
        assert_eq!(got, vec![set(&[0, 1]), set(&[0, 2]), set(&[1, 2])]);
        assert_eq!(brute_force_maximal_frequent(&w, 2.0, 4).unwrap(), got);
        assert_eq!(
            exact_maximal_frequent(&w, 1.0),
            vec![set(&[0, 1, 2]), set(&[3])]
        );
    }

    #[test]
    fn brute_force_refuses_large_universes() {
        let w = window(&[&[0]], 1);
        assert_eq!(
            brute_force_maximal_frequent(&w, 1.0, 21),
            Err(OracleError::UniverseTooLarge { max: 20, got: 21 })
        );
    }

    #[test]
    fn rmse_examples() {
        let w = window(&[&[0u32][..]; 165], 300);
        let exact = snapshot(1000, 300, vec![pattern(&[0], 0.0, 0.0, 165.0, 0)]);
        assert_eq!(support_rmse(&exact, &w, 300).unwrap(), 0.0);
        let off = snapshot(1000, 300, vec![pattern(&[0], 0.0, 0.0, 150.0, 0)]);
        assert!((support_rmse(&off, &w, 300).unwrap() - 0.05).abs() < 1e-12);
        let young = snapshot(100, 300, vec![pattern(&[0], 0.0, 0.0, 150.0, 0)]);
        assert_eq!(
            support_rmse(&young, &w, 300),
            Err(OracleError::EmptyCohort(300))
        );
    }

    #[test]
    fn match_report_examples() {
        let w = window(&[&[0, 1, 2], &[0, 1, 2], &[3, 4]], 3);
        let oracle = exact_maximal_frequent(&w, 1.0);
        assert_eq!(oracle, vec![set(&[0, 1, 2]), set(&[3, 4])]);

        let perfect = snapshot(
            10,
            3,
            vec![
                pattern(&[0, 1, 2], 0.0, 0.0, 2.0, 0),
                pattern(&[3, 4], 0.0, 0.0, 1.0, 0),
            ],
        );
        let r = match_report(&perfect, &oracle, &w);
        assert_eq!(
            (r.total, r.exact_matches, r.within_one_extra, r.missing),
            (2, 2, 2, 0)
        );
        assert_eq!(r.support_rmse, Some(0.0));

        let singletons = snapshot(
            10,
            3,
            (0..5).map(|i| pattern(&[i], 0.0, 0.0, 1.0, 0)).collect(),
        );
        let r = match_report(&singletons, &oracle, &w);
        assert_eq!((r.exact_matches, r.within_one_extra, r.missing), (0, 0, 2));
        assert_eq!(r.support_rmse, None);

        let extra = snapshot(10, 3, vec![pattern(&[0, 1, 2, 3], 0.0, 0.0, 0.0, 0)]);
        let r = match_report(&extra, &oracle, &w);
        assert_eq!((r.exact_matches, r.within_one_extra, r.missing), (0, 1, 1));
    }

    #[test]
    fn separation_limits() {
        let spec = GroupSpec {
            groups: vec![set(&[0, 1]), set(&[2, 3])],
            noise_pct: 0.0,
            change_at: None,
        };
        let apart = snapshot(
            10,
            3,
            vec![
                pattern(&[0], 0.0, 0.0, 1.0, 0),
                pattern(&[1], 0.0, 0.0, 1.0, 0),
                pattern(&[2], 1.0, 1.0, 1.0, 0),
                pattern(&[3], 1.0, 1.0, 1.0, 0),
            ],
        );
        assert_eq!(cluster_separation(&apart, &spec), Ok(0.0));

        let collapsed = snapshot(
            10,
            3,
            (0..4).map(|i| pattern(&[i], 0.5, 0.5, 1.0, 0)).collect(),
        );
        assert!(matches!(
            cluster_separation(&collapsed, &spec),
            Err(OracleError::NotComputable(_))
        ));

        let one_group = snapshot(
            10,
            3,
            vec![
                pattern(&[0], 0.0, 0.0, 1.0, 0),
                pattern(&[1], 1.0, 0.0, 1.0, 0),
            ],
        );
        assert!(cluster_separation(&one_group, &spec).is_err());

        // coordinates are wall-projected first
        let outside = snapshot(
            10,
            3,
            vec![
                pattern(&[0], -3.0, 0.0, 1.0, 0),
                pattern(&[1], 0.0, 0.0, 1.0, 0),
                pattern(&[2], 1.0, 0.0, 1.0, 0),
            ],
        );
        assert_eq!(cluster_separation(&outside, &spec), Ok(0.0));
    }
}
