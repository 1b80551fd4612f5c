//! Empirical histograms over distinct observed values.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// A value that can be used as a histogram key.
pub trait Symbol: Copy {
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Canonical representative; folds `-0.0` onto `0.0` for floats.
    fn canonical(self) -> Self {
        self
    }
}

impl Symbol for u64 {
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl Symbol for i64 {
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl Symbol for f64 {
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn canonical(self) -> Self {
        self + 0.0
    }
}

/// Counts of each distinct value, sorted ascending by value.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    entries: Vec<(T, u64)>,
    total: u64,
}

impl<T: Symbol> Histogram<T> {
    pub fn from_values(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("trace"));
        }
        let mut sorted: Vec<T> = values.iter().map(|v| v.canonical()).collect();
        sorted.sort_unstable_by(Symbol::total_cmp);
        let mut entries: Vec<(T, u64)> = Vec::new();
        for v in sorted {
            match entries.last_mut() {
                Some((last, count)) if last.total_cmp(&v) == Ordering::Equal => *count += 1,
                _ => entries.push((v, 1)),
            }
        }
        Ok(Histogram {
            entries,
            total: values.len() as u64,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[(T, u64)] {
        &self.entries
    }

    pub fn count(&self, value: T) -> u64 {
        let value = value.canonical();
        self.entries
            .binary_search_by(|(v, _)| v.total_cmp(&value))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn frequency(&self, value: T) -> f64 {
        self.count(value) as f64 / self.total as f64
    }

    /// `(value, relative frequency)` pairs in ascending value order.
    pub fn frequencies(&self) -> impl Iterator<Item = (T, f64)> + '_ {
        let total = self.total as f64;
        self.entries.iter().map(move |(v, c)| (*v, *c as f64 / total))
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.entries.iter().map(|(v, _)| *v)
    }

    pub fn max_count(&self) -> u64 {
        self.entries.iter().map(|(_, c)| *c).max().unwrap_or(0)
    }

    pub fn max_frequency(&self) -> f64 {
        self.max_count() as f64 / self.total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_folds() {
        let h = Histogram::from_values(&[0.0, -0.0, 1.0]).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.count(-0.0), 2);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(Histogram::<u64>::from_values(&[]), Err(Error::Empty("trace")));
    }
}
