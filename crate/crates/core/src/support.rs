use std::fmt;

/// Sorted, duplicate-free set of column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Support(Vec<usize>);

impl Support {
    pub fn empty() -> Self {
        Support(Vec::new())
    }

    pub fn from_indices(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Support(idx)
    }

    /// Indices `j` with `|v_j| > threshold`.
    pub fn of_vector(v: &[f64], threshold: f64) -> Self {
        Support(
            v.iter()
                .enumerate()
                .filter(|(_, x)| x.abs() > threshold)
                .map(|(j, _)| j)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &Support) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &Support) -> Support {
        Support(self.iter().filter(|&j| !other.contains(j)).collect())
    }

    /// Indices in `0..p` not in `self`.
    pub fn complement(&self, p: usize) -> Support {
        Support((0..p).filter(|&j| !self.contains(j)).collect())
    }

    pub fn union(&self, other: &Support) -> Support {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Support::from_indices(v)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

impl FromIterator<usize> for Support {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Support::from_indices(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let a = Support::from_indices(vec![3, 1, 1, 5]);
        let b = Support::from_indices(vec![1, 5, 7]);
        assert_eq!(a.as_slice(), &[1, 3, 5]);
        assert_eq!(a.difference(&b).as_slice(), &[3]);
        assert_eq!(a.union(&b).as_slice(), &[1, 3, 5, 7]);
        assert_eq!(a.complement(6).as_slice(), &[0, 2, 4]);
        assert!(!a.is_subset_of(&b));
        assert!(Support::from_indices(vec![1, 7]).is_subset_of(&b));
        assert_eq!(a.to_string(), "1,3,5");
        assert_eq!(Support::empty().to_string(), "");
    }

    #[test]
    fn strict_threshold() {
        let s = Support::of_vector(&[0.5, -0.2, 0.1, 0.0], 0.2);
        assert_eq!(s.as_slice(), &[0]);
    }
}
