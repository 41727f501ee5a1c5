//! Point placement and the push/pull rules that move pattern points.
//!
//! Each step moves two points along the line joining them:
//!
//! ```text
//! p1 <- p1 - alpha * (d - goal) * (p1 - p2)
//! p2 <- p2 + alpha * (d - goal) * (p1 - p2)
//! ```
//!
//! with `goal = 0` to pull and `goal = sqrt(2)` (the unit-square diagonal)
//! to push. By default all four coordinate updates read the pre-update
//! coordinates; the `sequential-updates` feature applies them in order
//! instead, so the two variants can be compared.
//!
//! The factor `alpha * (d - goal)` is capped at 1/2, where a pull meets at
//! the midpoint. Above 1 the raw rule overshoots by more than it corrects and
//! the distance grows without bound; with `alpha = 0.1` the cap only applies
//! once `d - goal > 5`.

use std::f64::consts::SQRT_2;

use rand::Rng;

use crate::itemset::Itemset;

pub const PULL_GOAL: f64 = 0.0;
pub const PUSH_GOAL: f64 = SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Uniform point in the unit square.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            x: rng.gen::<f64>(),
            y: rng.gen::<f64>(),
        }
    }
}

pub fn distance(a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    (dx * dx + dy * dy).sqrt()
}

/// Largest step factor; a pull with this factor lands both points on their midpoint.
pub const MAX_STEP: f64 = 0.5;

fn step_factor(a: Point2, b: Point2, goal: f64, alpha: f64) -> f64 {
    (alpha * (distance(a, b) - goal)).min(MAX_STEP)
}

#[cfg(not(feature = "sequential-updates"))]
pub fn push_pull(a: Point2, b: Point2, goal: f64, alpha: f64) -> (Point2, Point2) {
    let step = step_factor(a, b, goal, alpha);
    let dx = step * (a.x - b.x);
    let dy = step * (a.y - b.y);
    (
        Point2::new(a.x - dx, a.y - dy),
        Point2::new(b.x + dx, b.y + dy),
    )
}

#[cfg(feature = "sequential-updates")]
pub fn push_pull(a: Point2, b: Point2, goal: f64, alpha: f64) -> (Point2, Point2) {
    let step = step_factor(a, b, goal, alpha);
    let mut a = a;
    let mut b = b;
    a.x -= step * (a.x - b.x);
    a.y -= step * (a.y - b.y);
    b.x += step * (a.x - b.x);
    b.y += step * (a.y - b.y);
    (a, b)
}

/// What a sampled pair does on the current record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairAction {
    Pull,
    Push,
    Skip,
}

impl PairAction {
    pub fn from_occurrence(first: bool, second: bool) -> Self {
        match (first, second) {
            (true, true) => PairAction::Pull,
            (false, false) => PairAction::Skip,
            _ => PairAction::Push,
        }
    }

    pub fn goal(self) -> Option<f64> {
        match self {
            PairAction::Pull => Some(PULL_GOAL),
            PairAction::Push => Some(PUSH_GOAL),
            PairAction::Skip => None,
        }
    }
}

pub fn classify_pair(p1: &Itemset, p2: &Itemset, record: &Itemset) -> PairAction {
    PairAction::from_occurrence(p1.is_subset(record), p2.is_subset(record))
}

/// Draws one unordered pair of distinct indices in `0..count`, uniformly.
/// Returned as `(low, high)`. `count` must be at least 2.
pub fn sample_pair<R: Rng + ?Sized>(count: usize, rng: &mut R) -> (usize, usize) {
    debug_assert!(count >= 2);
    let i = rng.gen_range(0..count);
    let mut j = rng.gen_range(0..count - 1);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

/// `budget` pairs drawn with replacement; empty when fewer than two points.
pub fn sample_pairs<R: Rng + ?Sized>(
    count: usize,
    budget: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    if count < 2 {
        return Vec::new();
    }
    (0..budget).map(|_| sample_pair(count, rng)).collect()
}

/// Wall projection for presentation. Never fed back into the model.
pub fn clamp_to_unit_square(p: Point2) -> Point2 {
    Point2::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Point2, b: Point2) -> bool {
        (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12
    }

    #[test]
    fn distance_examples() {
        assert!((distance(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)) - SQRT_2).abs() < 1e-15);
        let p = Point2::new(0.3, 0.7);
        assert_eq!(distance(p, p), 0.0);
        assert!((distance(Point2::new(0.0, 0.0), Point2::new(0.3, 0.4)) - 0.5).abs() < 1e-15);
    }

    #[cfg(not(feature = "sequential-updates"))]
    #[test]
    fn pull_example() {
        let (a, b) = push_pull(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), PULL_GOAL, 0.1);
        assert!(close(a, Point2::new(0.1, 0.0)));
        assert!(close(b, Point2::new(0.9, 0.0)));
    }

    // The second point sees the first one already moved.
    #[cfg(feature = "sequential-updates")]
    #[test]
    fn sequential_pull_example() {
        let (a, b) = push_pull(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), PULL_GOAL, 0.1);
        assert!(close(a, Point2::new(0.1, 0.0)));
        assert!(close(b, Point2::new(0.91, 0.0)));
    }

    #[cfg(not(feature = "sequential-updates"))]
    #[test]
    fn push_example() {
        let (a, b) = push_pull(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), PUSH_GOAL, 0.1);
        let delta = 0.1 * (SQRT_2 - 1.0);
        assert!(close(a, Point2::new(-delta, 0.0)));
        assert!(close(b, Point2::new(1.0 + delta, 0.0)));
        assert!((a.x + 0.041_421_356).abs() < 1e-9);
    }

    #[test]
    fn coincident_push_is_noop() {
        let p = Point2::new(0.4, 0.6);
        assert_eq!(push_pull(p, p, PUSH_GOAL, 0.1), (p, p));
    }

    #[test]
    fn classification() {
        let r = Itemset::from_items([0, 1, 2]);
        let ab = Itemset::from_items([0, 1]);
        let c = Itemset::singleton(2);
        let d = Itemset::singleton(3);
        let e = Itemset::singleton(4);
        assert_eq!(classify_pair(&ab, &c, &r), PairAction::Pull);
        assert_eq!(classify_pair(&d, &e, &r), PairAction::Skip);
        assert_eq!(classify_pair(&ab, &d, &r), PairAction::Push);
        assert_eq!(classify_pair(&d, &ab, &r), PairAction::Push);
        assert_eq!(PairAction::Skip.goal(), None);
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(
            clamp_to_unit_square(Point2::new(1.3, 0.5)),
            Point2::new(1.0, 0.5)
        );
        assert_eq!(
            clamp_to_unit_square(Point2::new(0.2, 0.8)),
            Point2::new(0.2, 0.8)
        );
        assert_eq!(
            clamp_to_unit_square(Point2::new(-0.1, 1.2)),
            Point2::new(0.0, 1.0)
        );
    }

    #[test]
    fn sampling_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_pairs(2, 5, &mut rng), vec![(0, 1); 5]);
        assert!(sample_pairs(10, 0, &mut rng).is_empty());
        assert!(sample_pairs(1, 10, &mut rng).is_empty());
        assert!(sample_pairs(0, 10, &mut rng).is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_pairs(17, 100, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_pairs(17, 100, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_uniform_over_pairs() {
        // 45 unordered pairs; chi-squared against uniform. With 44 degrees of
        // freedom the 99.9% quantile is about 78.7.
        let count = 10;
        let budget = 10_000;
        let pairs = sample_pairs(count, budget, &mut ChaCha8Rng::seed_from_u64(2024));
        let mut freq = vec![vec![0u32; count]; count];
        for (i, j) in pairs {
            assert!(i < j && j < count);
            freq[i][j] += 1;
        }
        let cells = count * (count - 1) / 2;
        let expected = budget as f64 / cells as f64;
        let sd = (expected * (1.0 - 1.0 / cells as f64)).sqrt();
        let mut chi2 = 0.0;
        for (i, row) in freq.iter().enumerate() {
            for (j, &seen) in row.iter().enumerate().skip(i + 1) {
                let f = f64::from(seen);
                assert!(
                    (f - expected).abs() <= 4.0 * sd,
                    "pair ({i},{j}) seen {f} times"
                );
                chi2 += (f - expected).powi(2) / expected;
            }
        }
        assert!(chi2 < 78.7, "chi2 = {chi2}");
    }

    fn arb_point() -> impl Strategy<Value = Point2> {
        (-0.5f64..1.5, -0.5f64..1.5).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[cfg(not(feature = "sequential-updates"))]
        #[test]
        fn midpoint_is_preserved(a in arb_point(), b in arb_point(), alpha in 0.0f64..=1.0, push in any::<bool>()) {
            let goal = if push { PUSH_GOAL } else { PULL_GOAL };
            let (a2, b2) = push_pull(a, b, goal, alpha);
            prop_assert!(((a.x + b.x) - (a2.x + b2.x)).abs() < 1e-12);
            prop_assert!(((a.y + b.y) - (a2.y + b2.y)).abs() < 1e-12);
        }

        #[cfg(not(feature = "sequential-updates"))]
        #[test]
        fn pull_contracts(a in arb_point(), b in arb_point(), alpha in 0.001f64..0.2) {
            let d = distance(a, b);
            prop_assume!(d > 1e-9 && alpha * d < 0.5);
            let (a2, b2) = push_pull(a, b, PULL_GOAL, alpha);
            let d2 = distance(a2, b2);
            prop_assert!((d2 - (1.0 - 2.0 * alpha * d) * d).abs() < 1e-12);
            prop_assert!(d2 < d);
        }

        #[test]
        fn repeated_steps_stay_bounded(a in arb_point(), b in arb_point(), alpha in 0.0f64..=1.0, pushes in prop::collection::vec(any::<bool>(), 1..200)) {
            let (mut a, mut b) = (a, b);
            for push in pushes {
                let goal = if push { PUSH_GOAL } else { PULL_GOAL };
                (a, b) = push_pull(a, b, goal, alpha);
                prop_assert!(distance(a, b) <= 4.0, "{a:?} {b:?}");
            }
        }
    }
}
