//! Per-pattern support tracking.
//!
//! A pattern is *young* for the first `ell` records after it enters the
//! model; during that time its support is the exact number of records since
//! birth that contained it. Once its age reaches `ell` the count becomes the
//! starting estimate of a window-support recurrence that needs no
//! occurrence history:
//!
//! * record does not contain the pattern: `s <- (1 - 1/ell) * s`
//! * record contains the pattern:         `s <- (1 - 1/ell) * s + 1`
//!
//! Both maps send `[0, ell]` into itself, so old supports stay bounded.

use thiserror::Error;

use crate::itemset::Itemset;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window size must be at least 1")]
    EmptyWindow,
    #[error("minsupp must be positive, got {0}")]
    NonPositiveMinsupp(f64),
    #[error("minsupp {minsupp} exceeds the window size {ell}")]
    MinsuppAboveWindow { minsupp: f64, ell: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    ell: u32,
    minsupp: f64,
}

impl WindowParams {
    pub fn new(ell: u32, minsupp: f64) -> Result<Self, WindowError> {
        if ell == 0 {
            return Err(WindowError::EmptyWindow);
        }
        if minsupp.is_nan() || minsupp <= 0.0 {
            return Err(WindowError::NonPositiveMinsupp(minsupp));
        }
        if minsupp > f64::from(ell) {
            return Err(WindowError::MinsuppAboveWindow { minsupp, ell });
        }
        Ok(Self { ell, minsupp })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn minsupp(&self) -> f64 {
        self.minsupp
    }

    pub fn is_frequent(&self, support: f64) -> bool {
        support >= self.minsupp
    }
}

/// 1 if `pattern` is contained in `record`, else 0.
pub fn occurrence(pattern: &Itemset, record: &Itemset) -> u32 {
    u32::from(pattern.is_subset(record))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SupportMode {
    Young,
    Old,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportState {
    value: f64,
    birth: u64,
    mode: SupportMode,
}

impl SupportState {
    /// Fresh state for a pattern entering the model at record `birth`.
    pub fn new(birth: u64) -> Self {
        Self {
            value: 0.0,
            birth,
            mode: SupportMode::Young,
        }
    }

    /// Builds a state directly, e.g. when restoring from a snapshot.
    pub fn from_parts(value: f64, birth: u64, mode: SupportMode) -> Self {
        Self { value, birth, mode }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn birth(&self) -> u64 {
        self.birth
    }

    pub fn mode(&self) -> SupportMode {
        self.mode
    }

    pub fn age(&self, now: u64) -> u64 {
        now.saturating_sub(self.birth)
    }

    pub fn update_young(self, occ: u32) -> Self {
        debug_assert_eq!(self.mode, SupportMode::Young);
        Self {
            value: self.value + f64::from(occ),
            ..self
        }
    }

    pub fn update_old_absent(self, ell: u32) -> Self {
        debug_assert_eq!(self.mode, SupportMode::Old);
        Self {
            value: decay(ell) * self.value,
            ..self
        }
    }

    pub fn update_old_present(self, ell: u32) -> Self {
        debug_assert_eq!(self.mode, SupportMode::Old);
        let ell_f = f64::from(ell);
        // Rounding can push (1 - 1/ell) * ell + 1 a hair above ell.
        Self {
            value: (decay(ell) * self.value + 1.0).min(ell_f),
            ..self
        }
    }

    pub fn promote_if_aged(self, now: u64, ell: u32) -> Self {
        if self.mode == SupportMode::Young && self.age(now) >= u64::from(ell) {
            Self {
                mode: SupportMode::Old,
                ..self
            }
        } else {
            self
        }
    }

    /// Full per-record step: count or estimate, then promote on reaching `ell`.
    pub fn observe(self, occurs: bool, now: u64, ell: u32) -> Self {
        let next = match (self.mode, occurs) {
            (SupportMode::Young, _) => self.update_young(u32::from(occurs)),
            (SupportMode::Old, true) => self.update_old_present(ell),
            (SupportMode::Old, false) => self.update_old_absent(ell),
        };
        next.promote_if_aged(now, ell)
    }
}

fn decay(ell: u32) -> f64 {
    1.0 - 1.0 / f64::from(ell)
}
