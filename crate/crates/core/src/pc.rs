//! The piecewise contraction `f` obtained from a branch system, a parameter
//! point and a boundary assignment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::branch::BranchSystem;
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::scalar::{serde_scalar_vec, Scalar};

/// Discontinuities `0 < x_1 < … < x_{n-1} < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct ParameterPoint<S> {
    #[serde(with = "serde_scalar_vec")]
    cuts: Vec<S>,
}

impl<S: Scalar> ParameterPoint<S> {
    pub fn new(cuts: Vec<S>) -> Result<Self> {
        if let Some(first) = cuts.first() {
            if !first.is_positive() {
                return Err(Error::Parameters(format!("x_1 = {first} must be positive")));
            }
        }
        if let Some(last) = cuts.last() {
            if *last >= S::one() {
                return Err(Error::Parameters(format!(
                    "x_{} = {last} must be below 1",
                    cuts.len()
                )));
            }
        }
        for (k, w) in cuts.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(Error::Parameters(format!(
                    "cuts must increase strictly: x_{} = {} >= x_{} = {}",
                    k + 1,
                    w[0],
                    k + 2,
                    w[1]
                )));
            }
        }
        Ok(ParameterPoint { cuts })
    }

    pub fn parse_list(text: &str) -> Result<Self> {
        let cuts = text
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(S::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(cuts)
    }

    pub fn cuts(&self) -> &[S] {
        &self.cuts
    }

    /// Number of continuity intervals.
    pub fn n(&self) -> usize {
        self.cuts.len() + 1
    }

    /// `x_j` for `0 <= j <= n`, with `x_0 = 0` and `x_n = 1`.
    pub fn x(&self, j: usize) -> S {
        if j == 0 {
            S::zero()
        } else if j == self.n() {
            S::one()
        } else {
            self.cuts[j - 1].clone()
        }
    }
}

/// Which continuity interval owns a cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x_i` is the right endpoint of `I_i`.
    Left,
    /// `x_i` is the left endpoint of `I_{i+1}`.
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryAssignment {
    sides: Vec<Side>,
}

impl BoundaryAssignment {
    pub fn new(sides: Vec<Side>) -> Self {
        BoundaryAssignment { sides }
    }

    pub fn all_left(n: usize) -> Self {
        Self::new(vec![Side::Left; n.saturating_sub(1)])
    }

    pub fn all_right(n: usize) -> Self {
        Self::new(vec![Side::Right; n.saturating_sub(1)])
    }

    /// All `2^{n-1}` assignments, in binary order (`L` = 0).
    pub fn enumerate(n: usize) -> Vec<Self> {
        let k = n.saturating_sub(1);
        (0..1usize << k)
            .map(|mask| {
                Self::new(
                    (0..k)
                        .map(|bit| {
                            if mask >> (k - 1 - bit) & 1 == 1 {
                                Side::Right
                            } else {
                                Side::Left
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }
}

impl fmt::Display for BoundaryAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sides {
            f.write_str(match s {
                Side::Left => "L",
                Side::Right => "R",
            })?;
        }
        Ok(())
    }
}

impl FromStr for BoundaryAssignment {
    type Err = Error;

    /// Accepts `LRL`, `L,R,L` or `left,right`.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = if s.contains(',') {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .collect()
        } else {
            s.trim().split("").filter(|t| !t.is_empty()).collect()
        };
        let sides = tokens
            .into_iter()
            .map(|t| match t.to_ascii_lowercase().as_str() {
                "l" | "left" => Ok(Side::Left),
                "r" | "right" => Ok(Side::Right),
                other => Err(Error::Assignment(format!("unknown side `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundaryAssignment::new(sides))
    }
}

/// `f(x) = φ_i(x)` for `x ∈ I_i`.
#[derive(Clone, Debug)]
pub struct PiecewiseContraction<S: Scalar> {
    system: BranchSystem<S>,
    params: ParameterPoint<S>,
    assignment: BoundaryAssignment,
    intervals: Vec<Interval<S>>,
}

impl<S: Scalar> PiecewiseContraction<S> {
    pub fn new(
        system: BranchSystem<S>,
        params: ParameterPoint<S>,
        assignment: BoundaryAssignment,
    ) -> Result<Self> {
        let n = system.n();
        if params.n() != n {
            return Err(Error::Parameters(format!(
                "{} cuts given for a system of {n} branches (need {})",
                params.cuts().len(),
                n - 1
            )));
        }
        if assignment.len() != n - 1 {
            return Err(Error::Assignment(format!(
                "{} sides given for {} cuts",
                assignment.len(),
                n - 1
            )));
        }
        let intervals = (0..n)
            .map(|i| {
                let lo_closed = i == 0 || assignment.sides()[i - 1] == Side::Right;
                let hi_closed = i + 1 < n && assignment.sides()[i] == Side::Left;
                Interval::raw(params.x(i), params.x(i + 1), lo_closed, hi_closed)
            })
            .collect::<Vec<_>>();
        if system.is_general() {
            for (i, iv) in intervals.iter().enumerate() {
                let img = system.branch(i).map_interval(iv);
                let below_zero = *img.lo() < S::zero();
                let reaches_one =
                    *img.hi() > S::one() || (*img.hi() == S::one() && img.hi_closed());
                if below_zero || reaches_one {
                    return Err(Error::ImageOutsideUnit {
                        branch: i + 1,
                        image: img.to_string(),
                    });
                }
            }
        }
        Ok(PiecewiseContraction {
            system,
            params,
            assignment,
            intervals,
        })
    }

    pub fn system(&self) -> &BranchSystem<S> {
        &self.system
    }

    pub fn params(&self) -> &ParameterPoint<S> {
        &self.params
    }

    pub fn assignment(&self) -> &BoundaryAssignment {
        &self.assignment
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn is_general(&self) -> bool {
        self.system.is_general()
    }

    pub fn cuts(&self) -> &[S] {
        self.params.cuts()
    }

    /// `x_j`, `0 <= j <= n`.
    pub fn x(&self, j: usize) -> S {
        self.params.x(j)
    }

    /// Continuity interval `I_{i+1}` (0-based `i`).
    pub fn continuity_interval(&self, i: usize) -> &Interval<S> {
        &self.intervals[i]
    }

    pub fn continuity_intervals(&self) -> &[Interval<S>] {
        &self.intervals
    }

    fn check_domain(x: &S) -> Result<()> {
        if *x < S::zero() || *x >= S::one() {
            Err(Error::Domain {
                x: x.to_string(),
                domain: "[0,1)",
            })
        } else {
            Ok(())
        }
    }

    /// 0-based index of the continuity interval containing `x`.
    pub fn branch(&self, x: &S) -> Result<usize> {
        Self::check_domain(x)?;
        Ok(self.branch_unchecked(x))
    }

    pub(crate) fn branch_unchecked(&self, x: &S) -> usize {
        for (i, c) in self.params.cuts().iter().enumerate() {
            if *x < *c {
                return i;
            }
            if *x == *c {
                return match self.assignment.sides()[i] {
                    Side::Left => i,
                    Side::Right => i + 1,
                };
            }
        }
        self.n() - 1
    }

    pub fn eval(&self, x: &S) -> Result<S> {
        let i = self.branch(x)?;
        Ok(self.system.branch(i).eval(x))
    }

    /// `f(x)` together with the branch used.
    pub fn step(&self, x: &S) -> Result<(usize, S)> {
        let i = self.branch(x)?;
        Ok((i, self.system.branch(i).eval(x)))
    }

    /// `f(s)` for `s ⊆ [0,1)`.
    pub fn image_of(&self, s: &IntervalSet<S>) -> IntervalSet<S> {
        let mut pieces = Vec::new();
        for c in s.iter() {
            for (i, iv) in self.intervals.iter().enumerate() {
                if let Some(part) = c.intersect(iv) {
                    pieces.push(self.system.branch(i).map_interval(&part));
                }
            }
        }
        IntervalSet::normalize(pieces)
    }

    /// `f([0,1)) = ⋃ φ_i(I_i)`.
    pub fn image_set(&self) -> IntervalSet<S> {
        IntervalSet::normalize(
            self.intervals
                .iter()
                .enumerate()
                .map(|(i, iv)| self.system.branch(i).map_interval(iv))
                .collect(),
        )
    }

    /// `G = [0,1) \ f([0,1))`.
    pub fn gap_set(&self) -> IntervalSet<S> {
        self.image_set().complement_in_unit()
    }

    /// `true` when `x` equals one of the cuts.
    pub fn is_cut(&self, x: &S) -> bool {
        self.params.cuts().iter().any(|c| c == x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::BranchDescriptor;
    use crate::scalar::Rational;

    fn q(s: &str) -> Rational {
        Rational::parse(s).unwrap()
    }

    fn s2() -> BranchSystem<Rational> {
        BranchSystem::validate(vec![
            BranchDescriptor::affine(q("0.3"), q("0.1")),
            BranchDescriptor::affine(q("0.3"), q("0.5")),
        ])
        .unwrap()
    }

    fn f1() -> PiecewiseContraction<Rational> {
        let sys = BranchSystem::general(vec![
            BranchDescriptor::affine(q("1/2"), q("1/4")),
            BranchDescriptor::affine(q("1/2"), q("-1/4")),
        ])
        .unwrap();
        PiecewiseContraction::new(
            sys,
            ParameterPoint::new(vec![q("1/2")]).unwrap(),
            "R".parse().unwrap(),
        )
        .unwrap()
    }

    fn s2_at(cut: &str, sides: &str) -> PiecewiseContraction<Rational> {
        PiecewiseContraction::new(
            s2(),
            ParameterPoint::new(vec![q(cut)]).unwrap(),
            sides.parse().unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn parameter_point_validation() {
        assert!(ParameterPoint::new(vec![q("0.2"), q("0.7")]).is_ok());
        assert!(ParameterPoint::new(vec![q("0"), q("0.7")]).is_err());
        assert!(ParameterPoint::new(vec![q("0.7"), q("0.7")]).is_err());
        assert!(ParameterPoint::new(vec![q("0.2"), q("1")]).is_err());
        let p = ParameterPoint::<Rational>::parse_list("1/3, 0.5").unwrap();
        assert_eq!(p.x(0), q("0"));
        assert_eq!(p.x(1), q("1/3"));
        assert_eq!(p.x(3), q("1"));
    }

    #[test]
    fn assignments() {
        let all = BoundaryAssignment::enumerate(3);
        assert_eq!(all.len(), 4);
        assert_eq!(
            all.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            ["LL", "LR", "RL", "RR"]
        );
        assert_eq!(
            BoundaryAssignment::enumerate(1),
            vec![BoundaryAssignment::new(vec![])]
        );
        assert_eq!(
            "left,right"
                .parse::<BoundaryAssignment>()
                .unwrap()
                .to_string(),
            "LR"
        );
        assert!("LX".parse::<BoundaryAssignment>().is_err());
    }

    #[test]
    fn example_f1_evaluation_and_coding() {
        let f = f1();
        assert_eq!(f.eval(&q("0")).unwrap(), q("1/4"));
        assert_eq!(f.eval(&q("1/2")).unwrap(), q("0"));
        assert_eq!(f.branch(&q("0.49")).unwrap(), 0);
        assert_eq!(f.branch(&q("0.5")).unwrap(), 1);
        assert!(f.eval(&q("1")).is_err());
        assert!(f.eval(&q("-0.1")).is_err());
    }

    #[test]
    fn s2_cut_assignment_semantics() {
        assert_eq!(s2_at("0.3", "R").eval(&q("0.3")).unwrap(), q("0.59"));
        assert_eq!(s2_at("0.3", "R").branch(&q("0.3")).unwrap(), 1);
        assert_eq!(s2_at("0.3", "L").branch(&q("0.3")).unwrap(), 0);
    }

    #[test]
    fn image_and_gap_sets() {
        let f = s2_at("0.3", "L");
        let img = f.image_set();
        assert_eq!(
            img,
            IntervalSet::from_tuples(vec![
                (q("0.1"), q("0.19"), true, true),
                (q("0.59"), q("0.8"), false, false),
            ])
            .unwrap()
        );
        let g = f.gap_set();
        assert_eq!(
            g,
            IntervalSet::from_tuples(vec![
                (q("0"), q("0.1"), true, false),
                (q("0.19"), q("0.59"), false, true),
                (q("0.8"), q("1"), true, false),
            ])
            .unwrap()
        );
        // with the cut owned by I_2 both images are closed-open
        let f_right = s2_at("0.3", "R");
        assert_eq!(
            f_right.image_set(),
            IntervalSet::from_tuples(vec![
                (q("0.1"), q("0.19"), true, false),
                (q("0.59"), q("0.8"), true, false),
            ])
            .unwrap()
        );
        assert_eq!(
            f_right.gap_set(),
            IntervalSet::from_tuples(vec![
                (q("0"), q("0.1"), true, false),
                (q("0.19"), q("0.59"), true, false),
                (q("0.8"), q("1"), true, false),
            ])
            .unwrap()
        );
        // the gap interior always contains (0,1) minus the images
        for b in f.system().gaps() {
            let mid = b.midpoint();
            assert!(matches!(g.locate(&mid), crate::Location::Interior(_)));
        }
    }

    #[test]
    fn f1_image_in_general_mode() {
        let f = f1();
        assert_eq!(
            f.image_set(),
            IntervalSet::from_tuples(vec![(q("0"), q("1/2"), true, false)]).unwrap()
        );
        assert_eq!(
            f.gap_set(),
            IntervalSet::from_tuples(vec![(q("1/2"), q("1"), true, false)]).unwrap()
        );
    }

    #[test]
    fn general_mode_rejects_maps_leaving_the_unit_interval() {
        let sys = BranchSystem::general(vec![
            BranchDescriptor::affine(q("1/2"), q("1/4")),
            BranchDescriptor::affine(q("1/2"), q("-1/2")),
        ])
        .unwrap();
        let r = PiecewiseContraction::new(
            sys,
            ParameterPoint::new(vec![q("1/2")]).unwrap(),
            "R".parse().unwrap(),
        );
        assert!(matches!(
            r.unwrap_err(),
            Error::ImageOutsideUnit { branch: 2, .. }
        ));
    }

    #[test]
    fn image_of_respects_flags() {
        let f = s2_at("0.3", "R");
        let s = IntervalSet::from_tuples(vec![(q("0.2"), q("0.4"), true, false)]).unwrap();
        // [0.2,0.3) -> [0.16,0.19), [0.3,0.4) -> [0.59,0.62)
        assert_eq!(
            f.image_of(&s),
            IntervalSet::from_tuples(vec![
                (q("0.16"), q("0.19"), true, false),
                (q("0.59"), q("0.62"), true, false),
            ])
            .unwrap()
        );
    }
}
