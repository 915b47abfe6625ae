//! Item groups, visit periods and the catalog of admissible cut-points.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};

/// Partition of items into groups and of visits into periods.
///
/// `groups[j]` is the 0-based group of item `j`. `cutpoints[g * n_subpops + c]`
/// holds the `n_periods - 1` cut-points of group `g` in subpopulation `c`, as
/// 1-based visit times: period `r` covers visits `v[r-1] < t <= v[r]` with
/// `v[0] = 0` and `v[R] = t_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    pub n_groups: usize,
    pub n_periods: usize,
    pub n_subpops: usize,
    pub t_max: usize,
    pub groups: Vec<usize>,
    pub cutpoints: Vec<Vec<usize>>,
}

impl BlockStructure {
    /// Same cut-points for every (group, subpopulation).
    pub fn homogeneous(groups: Vec<usize>, n_groups: usize, n_subpops: usize, t_max: usize, cuts: Vec<usize>) -> Self {
        BlockStructure {
            n_groups,
            n_periods: cuts.len() + 1,
            n_subpops,
            t_max,
            groups,
            cutpoints: vec![cuts; n_groups * n_subpops],
        }
    }

    #[inline]
    pub fn cut_index(&self, g: usize, c: usize) -> usize {
        g * self.n_subpops + c
    }

    pub fn cuts(&self, g: usize, c: usize) -> &[usize] {
        &self.cutpoints[self.cut_index(g, c)]
    }

    /// 0-based period of 0-based visit `t` for group `g` in subpopulation `c`.
    pub fn period_of(&self, g: usize, c: usize, t: usize) -> usize {
        self.cuts(g, c).iter().take_while(|&&v| v <= t).count()
    }

    /// 0-based visits `[v[r-1], v[r])` belonging to period `r`.
    pub fn period_range(&self, g: usize, c: usize, r: usize) -> Range<usize> {
        period_range(self.cuts(g, c), r, self.t_max)
    }

    /// Items in each group, in increasing item order.
    pub fn group_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_groups];
        for (j, &g) in self.groups.iter().enumerate() {
            if g < self.n_groups {
                members[g].push(j);
            }
        }
        members
    }

    pub fn period_map(&self) -> PeriodMap {
        let mut map = Vec::with_capacity(self.cutpoints.len() * self.t_max);
        for cuts in &self.cutpoints {
            let mut r = 0u8;
            for t in 0..self.t_max {
                while (r as usize) < cuts.len() && cuts[r as usize] <= t {
                    r += 1;
                }
                map.push(r);
            }
        }
        PeriodMap { t_max: self.t_max, map }
    }

    /// Period labels over `1..=t_max` for one (group, subpopulation), as a partition.
    pub fn period_labels(&self, g: usize, c: usize) -> Vec<usize> {
        (0..self.t_max).map(|t| self.period_of(g, c, t)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 || self.n_periods == 0 || self.n_subpops == 0 {
            return Err(Error::InvalidValue {
                field: "blocks".into(),
                reason: "group, period and subpopulation counts must be positive".into(),
            });
        }
        if self.n_periods > self.t_max.max(1) {
            return Err(Error::InvalidValue {
                field: "n_periods".into(),
                reason: format!("{} periods exceed {} visits", self.n_periods, self.t_max),
            });
        }
        if let Some(j) = self.groups.iter().position(|&g| g >= self.n_groups) {
            return Err(Error::InvalidValue {
                field: format!("groups[{j}]"),
                reason: format!("label {} outside [0, {})", self.groups[j], self.n_groups),
            });
        }
        let expected = self.n_groups * self.n_subpops;
        if self.cutpoints.len() != expected {
            return Err(Error::dims("cutpoints", expected, self.cutpoints.len()));
        }
        for g in 0..self.n_groups {
            for c in 0..self.n_subpops {
                let cuts = self.cuts(g, c);
                if cuts.len() != self.n_periods - 1 {
                    return Err(Error::dims(
                        format!("cutpoints[{g}, {c}]"),
                        self.n_periods - 1,
                        cuts.len(),
                    ));
                }
                let max = self.t_max.saturating_sub(1);
                let increasing = cuts.windows(2).all(|w| w[0] < w[1]);
                let in_range = cuts.iter().all(|&v| v >= 1 && v <= max);
                if !increasing || !in_range {
                    return Err(Error::NonMonotoneCutpoints {
                        group: g,
                        subpop: c,
                        max,
                        cuts: cuts.to_vec(),
                    });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn period_range(cuts: &[usize], r: usize, t_max: usize) -> Range<usize> {
    let lo = if r == 0 { 0 } else { cuts[r - 1] };
    let hi = if r == cuts.len() { t_max } else { cuts[r] };
    lo..hi
}

/// Precomputed period lookup `(g, c, t) -> r`.
#[derive(Debug, Clone)]
pub struct PeriodMap {
    t_max: usize,
    map: Vec<u8>,
}

impl PeriodMap {
    /// Periods of all visits for the (group, subpopulation) slot `gc`.
    #[inline]
    pub fn slot(&self, gc: usize) -> &[u8] {
        &self.map[gc * self.t_max..(gc + 1) * self.t_max]
    }
}

/// Every strictly increasing cut-point vector in `[1, t_max - 1]^(R-1)`, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct CutpointCatalog {
    t_max: usize,
    n_periods: usize,
    entries: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl CutpointCatalog {
    /// Catalogs larger than this are refused.
    pub const MAX_ENTRIES: u128 = 5_000_000;

    pub fn new(t_max: usize, n_periods: usize) -> Result<Self> {
        if n_periods == 0 || n_periods > t_max {
            return Err(Error::InfeasibleDims(format!(
                "{n_periods} periods over {t_max} visits"
            )));
        }
        let size = binomial(t_max as u64 - 1, n_periods as u64 - 1);
        if size > Self::MAX_ENTRIES {
            return Err(Error::GuardExceeded {
                size,
                limit: Self::MAX_ENTRIES,
            });
        }
        let k = n_periods - 1;
        let mut entries = Vec::with_capacity(size as usize);
        let mut current: Vec<usize> = (1..=k).collect();
        loop {
            entries.push(current.clone());
            // Advance to the next combination of {1, .., t_max - 1}.
            let mut pos = k;
            while pos > 0 && current[pos - 1] == t_max - 1 - (k - pos) {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            current[pos - 1] += 1;
            for q in pos..k {
                current[q] = current[q - 1] + 1;
            }
        }
        let index = entries.iter().enumerate().map(|(m, h)| (h.clone(), m)).collect();
        Ok(CutpointCatalog {
            t_max,
            n_periods,
            entries,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn get(&self, m: usize) -> &[usize] {
        &self.entries[m]
    }

    pub fn entries(&self) -> &[Vec<usize>] {
        &self.entries
    }

    pub fn index_of(&self, cuts: &[usize]) -> Option<usize> {
        self.index.get(cuts).copied()
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
