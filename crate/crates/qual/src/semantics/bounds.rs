use super::state::{ArrayVal, State};
use crate::lang::Name;
use std::collections::BTreeMap;

/// Finite domain for exhaustive checks. All intervals are inclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainBounds {
    /// Interval for scalars without an entry in `ranges`.
    pub default_range: (i64, i64),
    pub ranges: BTreeMap<Name, (i64, i64)>,
    pub unroll_cap: usize,
    pub local_range: (i64, i64),
    pub local_overrides: BTreeMap<Name, (i64, i64)>,
    /// Indices at which enumerated arrays may differ from 0.
    pub index_window: (i64, i64),
    pub array_values: (i64, i64),
    /// Per-array index window and value range, overriding the two above.
    pub array_domains: BTreeMap<Name, ((i64, i64), (i64, i64))>,
    /// Range of sup/inf binders during evaluation.
    pub quant_range: (i64, i64),
}

impl Default for DomainBounds {
    fn default() -> Self {
        DomainBounds {
            default_range: (-3, 3),
            ranges: BTreeMap::new(),
            unroll_cap: 8,
            local_range: (-3, 3),
            local_overrides: BTreeMap::new(),
            index_window: (0, 3),
            array_values: (0, 3),
            array_domains: BTreeMap::new(),
            quant_range: (-3, 3),
        }
    }
}

impl DomainBounds {
    /// Same interval for scalars, locals and sup/inf binders.
    pub fn uniform(lo: i64, hi: i64) -> DomainBounds {
        DomainBounds {
            default_range: (lo, hi),
            local_range: (lo, hi),
            quant_range: (lo, hi),
            ..DomainBounds::default()
        }
    }

    pub fn with_range(mut self, x: &str, lo: i64, hi: i64) -> DomainBounds {
        self.ranges.insert(x.to_string(), (lo, hi));
        self
    }

    pub fn with_local(mut self, x: &str, lo: i64, hi: i64) -> DomainBounds {
        self.local_overrides.insert(x.to_string(), (lo, hi));
        self
    }

    /// Restricts the contents of array `a`; an empty window pins it to all zeros.
    pub fn with_array_domain(mut self, a: &str, window: (i64, i64), values: (i64, i64)) -> DomainBounds {
        self.array_domains.insert(a.to_string(), (window, values));
        self
    }

    pub fn range(&self, x: &str) -> (i64, i64) {
        self.ranges.get(x).copied().unwrap_or(self.default_range)
    }

    pub fn local_values(&self, x: &str) -> (i64, i64) {
        self.local_overrides.get(x).copied().unwrap_or(self.local_range)
    }

    /// Every state over the given names within the bounds, in a fixed order.
    pub fn states(&self, scalars: &[Name], arrays: &[Name]) -> Vec<State> {
        let mut out = vec![State::new()];
        for x in scalars {
            let (lo, hi) = self.range(x);
            out = out.into_iter().flat_map(|s| (lo..=hi).map(move |v| s.clone().with(x, v))).collect();
        }
        for a in arrays {
            let (window, values) = self.array_domains.get(a).copied().unwrap_or((self.index_window, self.array_values));
            let contents = array_contents(window, values);
            out = out
                .into_iter()
                .flat_map(|s| contents.iter().map(move |v| s.clone().with_array(a, v.clone())))
                .collect();
        }
        out
    }
}

fn array_contents(window: (i64, i64), (lo, hi): (i64, i64)) -> Vec<ArrayVal> {
    let mut out = vec![ArrayVal::default()];
    for i in window.0..=window.1 {
        out = out.into_iter().flat_map(|a| (lo..=hi).map(move |v| a.store(i, v))).collect();
    }
    out
}
