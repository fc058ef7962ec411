//! Finite unions of subintervals of `[0,1]` with explicit endpoint flags.
//!
//! Every operation is exact on the open/closed status of endpoints. On the
//! float backend endpoints are snapped to equality (see
//! [`crate::scalar::FLOAT_EQ_TOLERANCE`]) before the flag logic runs, so
//! nearly coincident endpoints never produce slivers.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{serde_scalar, Scalar};

/// A nonempty subinterval of `[0,1]`.
///
/// Invariants: `lo <= hi`; a degenerate interval (`lo == hi`) is closed at
/// both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound(serialize = "S: Scalar", deserialize = "S: Scalar"),
    try_from = "IntervalRecord<S>"
)]
pub struct Interval<S> {
    #[serde(with = "serde_scalar")]
    lo: S,
    #[serde(with = "serde_scalar")]
    hi: S,
    lo_closed: bool,
    hi_closed: bool,
}

/// Wire form of an [`Interval`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct IntervalRecord<S> {
    #[serde(with = "serde_scalar")]
    pub lo: S,
    #[serde(with = "serde_scalar")]
    pub hi: S,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<S: Scalar> TryFrom<IntervalRecord<S>> for Interval<S> {
    type Error = Error;

    fn try_from(r: IntervalRecord<S>) -> Result<Self> {
        Interval::new(r.lo, r.hi, r.lo_closed, r.hi_closed)
    }
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        let describe = || format_interval(&lo, &hi, lo_closed, hi_closed);
        if lo > hi {
            return Err(Error::InvalidInterval {
                interval: describe(),
                reason: "lower endpoint exceeds upper endpoint".into(),
            });
        }
        if lo == hi && !(lo_closed && hi_closed) {
            return Err(Error::InvalidInterval {
                interval: describe(),
                reason: "empty interval".into(),
            });
        }
        if lo < S::zero() || hi > S::one() {
            return Err(Error::InvalidInterval {
                interval: describe(),
                reason: "not contained in [0,1]".into(),
            });
        }
        Ok(Self::raw(lo, hi, lo_closed, hi_closed))
    }

    /// Construct without validation; callers guarantee the invariants.
    pub(crate) fn raw(lo: S, hi: S, lo_closed: bool, hi_closed: bool) -> Self {
        Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn closed(lo: S, hi: S) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: S, hi: S) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn closed_open(lo: S, hi: S) -> Result<Self> {
        Self::new(lo, hi, true, false)
    }

    pub fn open_closed(lo: S, hi: S) -> Result<Self> {
        Self::new(lo, hi, false, true)
    }

    pub fn point(x: S) -> Result<Self> {
        Self::new(x.clone(), x, true, true)
    }

    pub fn lo(&self) -> &S {
        &self.lo
    }

    pub fn hi(&self) -> &S {
        &self.hi
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn length(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: &S) -> bool {
        let above = match x.cmp_s(&self.lo) {
            Ordering::Greater => true,
            Ordering::Equal => self.lo_closed,
            Ordering::Less => false,
        };
        let below = match x.cmp_s(&self.hi) {
            Ordering::Less => true,
            Ordering::Equal => self.hi_closed,
            Ordering::Greater => false,
        };
        above && below
    }

    /// `true` when `x` lies strictly between the endpoints.
    pub fn contains_in_interior(&self, x: &S) -> bool {
        *x > self.lo && *x < self.hi
    }

    pub fn midpoint(&self) -> S {
        self.lo.midpoint(&self.hi)
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let (lo, lo_closed) = match self.lo.cmp_s(&other.lo) {
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp_s(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        match lo.cmp_s(&hi) {
            Ordering::Less => Some(Self::raw(lo, hi, lo_closed, hi_closed)),
            Ordering::Equal if lo_closed && hi_closed => Some(Self::raw(lo, hi, true, true)),
            _ => None,
        }
    }

    pub fn to_record(&self) -> IntervalRecord<S> {
        IntervalRecord {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            lo_closed: self.lo_closed,
            hi_closed: self.hi_closed,
        }
    }
}

fn format_interval<S: fmt::Display>(lo: &S, hi: &S, lo_closed: bool, hi_closed: bool) -> String {
    format!(
        "{}{}, {}{}",
        if lo_closed { '[' } else { '(' },
        lo,
        hi,
        if hi_closed { ']' } else { ')' }
    )
}

impl<S: fmt::Display> fmt::Display for Interval<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_interval(
            &self.lo,
            &self.hi,
            self.lo_closed,
            self.hi_closed,
        ))
    }
}

/// Where a point sits relative to an [`IntervalSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// Strictly inside component `k`.
    Interior(usize),
    /// At an endpoint of component `k`; `member` tells whether the point
    /// belongs to the set.
    Boundary {
        component: usize,
        member: bool,
    },
    Outside,
}

/// Canonical finite union of intervals: sorted, pairwise disjoint and
/// non-adjacent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound(serialize = "S: Scalar", deserialize = "S: Scalar"),
    from = "Vec<Interval<S>>",
    into = "Vec<Interval<S>>"
)]
pub struct IntervalSet<S: Scalar> {
    components: Vec<Interval<S>>,
}

impl<S: Scalar> From<Vec<Interval<S>>> for IntervalSet<S> {
    fn from(raw: Vec<Interval<S>>) -> Self {
        IntervalSet::normalize(raw)
    }
}

impl<S: Scalar> From<IntervalSet<S>> for Vec<Interval<S>> {
    fn from(s: IntervalSet<S>) -> Self {
        s.components
    }
}

impl<S: Scalar> Default for IntervalSet<S> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<S: Scalar> IntervalSet<S> {
    pub fn empty() -> Self {
        IntervalSet {
            components: Vec::new(),
        }
    }

    /// `[0,1)`.
    pub fn unit() -> Self {
        IntervalSet {
            components: vec![Interval::raw(S::zero(), S::one(), true, false)],
        }
    }

    /// Canonical form of an arbitrary list of intervals.
    pub fn normalize(mut raw: Vec<Interval<S>>) -> Self {
        raw.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut out: Vec<Interval<S>> = Vec::with_capacity(raw.len());
        for next in raw {
            if let Some(cur) = out.last_mut() {
                let touches = match next.lo.cmp_s(&cur.hi) {
                    Ordering::Less => true,
                    Ordering::Equal => cur.hi_closed || next.lo_closed,
                    Ordering::Greater => false,
                };
                if touches {
                    if next.lo == cur.lo {
                        cur.lo_closed |= next.lo_closed;
                    }
                    match next.hi.cmp_s(&cur.hi) {
                        Ordering::Greater => {
                            cur.hi = next.hi;
                            cur.hi_closed = next.hi_closed;
                        }
                        Ordering::Equal => cur.hi_closed |= next.hi_closed,
                        Ordering::Less => {}
                    }
                    continue;
                }
            }
            out.push(next);
        }
        IntervalSet { components: out }
    }

    /// Validating constructor from `(lo, hi, lo_closed, hi_closed)` tuples.
    pub fn from_tuples(raw: Vec<(S, S, bool, bool)>) -> Result<Self> {
        let intervals = raw
            .into_iter()
            .map(|(lo, hi, lc, hc)| Interval::new(lo, hi, lc, hc))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::normalize(intervals))
    }

    pub fn components(&self) -> &[Interval<S>] {
        &self.components
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval<S>> {
        self.components.iter()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Lebesgue measure.
    pub fn length(&self) -> S {
        self.components
            .iter()
            .fold(S::zero(), |acc, c| acc + c.length())
    }

    /// `[0,1) \ self`.
    pub fn complement_in_unit(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = S::zero();
        let mut cursor_closed = true;
        for c in &self.components {
            let gap_hi_closed = !c.lo_closed;
            match cursor.cmp_s(&c.lo) {
                Ordering::Less => out.push(Interval::raw(
                    cursor.clone(),
                    c.lo.clone(),
                    cursor_closed,
                    gap_hi_closed,
                )),
                Ordering::Equal if cursor_closed && gap_hi_closed => {
                    out.push(Interval::raw(cursor.clone(), cursor.clone(), true, true))
                }
                _ => {}
            }
            if c.hi > cursor || (c.hi == cursor && c.hi_closed) {
                cursor = c.hi.clone();
                cursor_closed = !c.hi_closed;
            }
        }
        if cursor < S::one() {
            out.push(Interval::raw(cursor, S::one(), cursor_closed, false));
        }
        IntervalSet { components: out }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.components, &other.components);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(x) = a[i].intersect(&b[j]) {
                out.push(x);
            }
            match a[i].hi.cmp_s(&b[j].hi) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        Self::normalize(out)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.components.clone();
        all.extend(other.components.iter().cloned());
        Self::normalize(all)
    }

    /// Points of `self` not in `other` (both read as subsets of `[0,1)`).
    pub fn difference(&self, other: &Self) -> Self {
        self.intersect(&other.complement_in_unit())
    }

    /// Topological interior in the real line; degenerate components vanish.
    pub fn interior(&self) -> Self {
        IntervalSet {
            components: self
                .components
                .iter()
                .filter(|c| !c.is_point())
                .map(|c| Interval::raw(c.lo.clone(), c.hi.clone(), false, false))
                .collect(),
        }
    }

    pub fn contains(&self, x: &S) -> bool {
        match self.locate(x) {
            Location::Interior(_) => true,
            Location::Boundary { member, .. } => member,
            Location::Outside => false,
        }
    }

    pub fn locate(&self, x: &S) -> Location {
        let k = self.components.partition_point(|c| c.hi < *x);
        let Some(c) = self.components.get(k) else {
            return Location::Outside;
        };
        if *x < c.lo {
            return Location::Outside;
        }
        if *x == c.lo {
            return Location::Boundary {
                component: k,
                member: c.lo_closed,
            };
        }
        if *x == c.hi {
            if c.hi_closed {
                return Location::Boundary {
                    component: k,
                    member: true,
                };
            }
            // A following component may start at the same point and own it.
            if let Some(next) = self.components.get(k + 1) {
                if *x == next.lo && next.lo_closed {
                    return Location::Boundary {
                        component: k + 1,
                        member: true,
                    };
                }
            }
            return Location::Boundary {
                component: k,
                member: false,
            };
        }
        Location::Interior(k)
    }
}

impl<S: Scalar> fmt::Display for IntervalSet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("∅");
        }
        for (k, c) in self.components.iter().enumerate() {
            if k > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
