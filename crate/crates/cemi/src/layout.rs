//! Labeled tensor-factor bookkeeping.
//!
//! Composite indices are row-major with the leftmost label most significant;
//! every partial trace, permutation, and embedding in the crate goes through
//! the stride helpers here so the convention lives in one place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::row_major_strides;

/// Ordered list of (label, dimension) pairs describing a tensor product space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    entries: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<L: Into<String>>(entries: Vec<(L, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyLayout);
        }
        let entries: Vec<(String, usize)> =
            entries.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (label, dim)) in entries.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::BadArgument("empty subsystem label".into()));
            }
            if *dim == 0 {
                return Err(Error::ZeroDimension {
                    label: label.clone(),
                });
            }
            if entries[..i].iter().any(|(other, _)| other == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(SubsystemLayout { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.entries.iter().map(|(_, d)| *d).collect()
    }

    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn total_dim(&self) -> usize {
        self.entries.iter().map(|(_, d)| d).product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.iter().any(|(l, _)| l == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.entries
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.entries[self.position(label)?].1)
    }

    /// Positions of the given labels, in layout order. Rejects unknown and
    /// repeated labels.
    pub fn positions_of(&self, labels: &[String]) -> Result<Vec<usize>> {
        let mut seen = vec![false; self.entries.len()];
        for label in labels {
            let p = self.position(label)?;
            if seen[p] {
                return Err(Error::DuplicateLabel(label.clone()));
            }
            seen[p] = true;
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter_map(|(p, &s)| s.then_some(p))
            .collect())
    }

    /// Layout restricted to the given positions, preserving order.
    pub fn select(&self, positions: &[usize]) -> Result<SubsystemLayout> {
        if positions.is_empty() {
            return Err(Error::EmptyLayout);
        }
        SubsystemLayout::new(
            positions
                .iter()
                .map(|&p| (self.entries[p].0.clone(), self.entries[p].1))
                .collect(),
        )
    }

    /// Concatenation with disjointness check; names the colliding label.
    pub fn concat(&self, other: &SubsystemLayout) -> Result<SubsystemLayout> {
        for (l, _) in &other.entries {
            if self.contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        SubsystemLayout::new(entries)
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.dims())
    }

    /// Composite indices of the full space reachable by varying only the
    /// factors at `positions`, i.e. the offsets contributed by those digits.
    /// Iterating `offsets(keep)` x `offsets(drop)` enumerates the full index
    /// set exactly once when keep and drop partition the layout.
    pub fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let dims = self.dims();
        let strides = self.strides();
        let sub_dims: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
        let count: usize = sub_dims.iter().product();
        let mut out = Vec::with_capacity(count);
        let mut digits = vec![0usize; positions.len()];
        for _ in 0..count {
            let mut off = 0;
            for (k, &d) in digits.iter().enumerate() {
                off += d * strides[positions[k]];
            }
            out.push(off);
            crate::linalg::increment_digits(&mut digits, &sub_dims);
        }
        out
    }

    /// Picks a label not present in the layout: `base`, then `base1`,
    /// `base2`, ... Deterministic.
    pub fn fresh_label(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        let mut n = 1usize;
        loop {
            let candidate = format!("{base}{n}");
            if !self.contains(&candidate) {
                return candidate;
            }
            n += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> SubsystemLayout {
        SubsystemLayout::new(vec![("A", 2), ("B", 3), ("C", 2)]).unwrap()
    }

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert!(matches!(
            SubsystemLayout::new(vec![("A", 2), ("A", 2)]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            SubsystemLayout::new(vec![("A", 0)]),
            Err(Error::ZeroDimension { .. })
        ));
    }

    #[test]
    fn strides_are_row_major() {
        // Leftmost label most significant: strides (6, 2, 1) for dims (2,3,2).
        assert_eq!(layout().strides(), vec![6, 2, 1]);
        assert_eq!(layout().total_dim(), 12);
    }

    #[test]
    fn offsets_partition_the_index_set() {
        let l = layout();
        let keep = l.positions_of(&["A".into(), "C".into()]).unwrap();
        let drop = l.positions_of(&["B".into()]).unwrap();
        let mut all: Vec<usize> = l
            .offsets(&keep)
            .iter()
            .flat_map(|&k| {
                l.offsets(&drop)
                    .iter()
                    .map(move |&d| k + d)
                    .collect::<Vec<_>>()
            })
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn fresh_label_avoids_collisions() {
        let l = layout();
        assert_eq!(l.fresh_label("E"), "E");
        assert_eq!(l.fresh_label("A"), "A1");
    }
}
