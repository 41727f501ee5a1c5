//! Canonical itemsets over a dense item universe `0..n`.
//!
//! An [`Itemset`] is a bitset whose trailing zero words are always trimmed, so
//! two equal sets have bit-identical storage and can be hashed or compared
//! directly. Ordering is lexicographic over the ascending member list, which
//! is the canonical order used for scans and snapshot rows.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

const WORD_BITS: u32 = 64;

/// Index of a single item in the universe `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item(pub u32);

impl Item {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl From<u32> for Item {
    fn from(i: u32) -> Self {
        Item(i)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ItemsetError {
    #[error("cannot split an itemset of size {0}; at least 2 items are required")]
    TooSmall(usize),
    #[error("invalid item token {0:?}")]
    BadToken(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Itemset {
    words: SmallVec<[u64; 2]>,
}

impl Itemset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(item: u32) -> Self {
        let mut s = Self::new();
        s.insert(item);
        s
    }

    pub fn from_items<I: IntoIterator<Item = u32>>(items: I) -> Self {
        let mut s = Self::new();
        for i in items {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, item: u32) {
        let (w, b) = locate(item);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn contains(&self, item: u32) -> bool {
        let (w, b) = locate(item);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Largest member, if any.
    pub fn max_item(&self) -> Option<u32> {
        let last = *self.words.last()?;
        let w = (self.words.len() - 1) as u32;
        Some(w * WORD_BITS + (WORD_BITS - 1 - last.leading_zeros()))
    }

    pub fn is_subset(&self, other: &Itemset) -> bool {
        if self.words.len() > other.words.len() {
            return false;
        }
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_proper_subset(&self, other: &Itemset) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }

    pub fn union(&self, other: &Itemset) -> Itemset {
        let (long, short) = if self.words.len() >= other.words.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut words = long.words.clone();
        for (w, s) in words.iter_mut().zip(short.words.iter()) {
            *w |= s;
        }
        Itemset { words }
    }

    pub fn difference(&self, other: &Itemset) -> Itemset {
        let mut words = self.words.clone();
        for (w, o) in words.iter_mut().zip(other.words.iter()) {
            *w &= !o;
        }
        let mut s = Itemset { words };
        s.trim();
        s
    }

    /// Number of members of `self` that are not in `other`.
    pub fn difference_len(&self, other: &Itemset) -> usize {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (w & !other.words.get(i).copied().unwrap_or(0)).count_ones() as usize)
            .sum()
    }

    pub fn with_item(&self, item: u32) -> Itemset {
        let mut s = self.clone();
        s.insert(item);
        s
    }

    pub fn without_item(&self, item: u32) -> Itemset {
        let mut s = self.clone();
        let (w, b) = locate(item);
        if let Some(word) = s.words.get_mut(w) {
            *word &= !(1 << b);
        }
        s.trim();
        s
    }

    /// The `k` subsets of size `k - 1` obtained by dropping each member once,
    /// in ascending order of the dropped item.
    pub fn remove_each_once(&self) -> Result<Vec<Itemset>, ItemsetError> {
        let k = self.len();
        if k < 2 {
            return Err(ItemsetError::TooSmall(k));
        }
        Ok(self.iter().map(|i| self.without_item(i)).collect())
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

fn locate(item: u32) -> (usize, u32) {
    ((item / WORD_BITS) as usize, item % WORD_BITS)
}

pub struct Iter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Iter<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros();
                self.current &= self.current - 1;
                return Some(self.word_idx as u32 * WORD_BITS + bit);
            }
            self.word_idx += 1;
            self.current = *self.words.get(self.word_idx)?;
        }
    }
}

impl<'a> IntoIterator for &'a Itemset {
    type Item = u32;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl FromIterator<u32> for Itemset {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        Itemset::from_items(iter)
    }
}

impl Ord for Itemset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for Itemset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{i}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for Itemset {
    type Err = ItemsetError;

    /// Parses whitespace-separated item indices. Order and repeats are
    /// normalised away.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split_whitespace()
            .map(|tok| {
                tok.parse::<u32>()
                    .map_err(|_| ItemsetError::BadToken(tok.to_string()))
            })
            .collect()
    }
}
