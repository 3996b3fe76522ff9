use crate::permissions::DomainSet;

const DOMAIN_END: u64 = u32::MAX as u64 + 1;

/// Set of domain ids as sorted, disjoint, half-open intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DomainRanges(Vec<(u64, u64)>);

impl DomainRanges {
    pub(crate) fn all() -> Self {
        DomainRanges(vec![(0, DOMAIN_END)])
    }

    pub(crate) fn from_set(set: &DomainSet) -> Self {
        let mut spans: Vec<(u64, u64)> = set.entries.iter().map(|e| e.bounds()).collect();
        spans.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(spans.len());
        for (lo, hi) in spans {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        DomainRanges(merged)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn min(&self) -> Option<u32> {
        self.0.first().map(|&(lo, _)| lo as u32)
    }

    pub(crate) fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a0, a1) in &self.0 {
            for &(b0, b1) in &other.0 {
                let (lo, hi) = (a0.max(b0), a1.min(b1));
                if lo < hi {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_unstable();
        DomainRanges(out)
    }

    pub(crate) fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(mut lo, hi) in &self.0 {
            for &(b0, b1) in &other.0 {
                if b1 <= lo || b0 >= hi {
                    continue;
                }
                if b0 > lo {
                    out.push((lo, b0));
                }
                lo = lo.max(b1);
                if lo >= hi {
                    break;
                }
            }
            if lo < hi {
                out.push((lo, hi));
            }
        }
        DomainRanges(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permissions::DomainEntry;

    #[test]
    fn interval_algebra() {
        let a = DomainRanges::from_set(&DomainSet::range(0, 9));
        let b = DomainRanges::from_set(&DomainSet::ids([3, 4, 7]));
        let d = a.difference(&b);
        assert_eq!(d.0, vec![(0, 3), (5, 7), (8, 10)]);
        assert_eq!(a.intersect(&b).0, vec![(3, 5), (7, 8)]);
        assert!(b.difference(&a).is_empty());
        let open = DomainRanges::from_set(&DomainSet {
            entries: vec![DomainEntry::Range { min: 5, max: None }],
        });
        assert_eq!(open.min(), Some(5));
        assert_eq!(DomainRanges::all().difference(&open).0, vec![(0, 5)]);
    }
}
