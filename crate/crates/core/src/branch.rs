//! Contraction branches and validated branch systems.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::{serde_scalar_vec, Backend, Scalar};

/// A monotone contraction `[0,1] -> (0,1)` in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound(serialize = "S: Scalar", deserialize = "S: Scalar"),
    try_from = "BranchRecord<S>",
    into = "BranchRecord<S>"
)]
pub enum BranchDescriptor<S> {
    /// `x -> slope * x + intercept`
    Affine { slope: S, intercept: S },
    /// `x -> c0 + c1 x + c2 x^2`
    Quadratic { c0: S, c1: S, c2: S },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Affine,
    Quadratic,
}

/// Wire form used by system description files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct BranchRecord<S> {
    pub kind: BranchKind,
    #[serde(with = "serde_scalar_vec")]
    pub coefficients: Vec<S>,
}

impl<S: Scalar> TryFrom<BranchRecord<S>> for BranchDescriptor<S> {
    type Error = Error;

    fn try_from(r: BranchRecord<S>) -> Result<Self> {
        let mut c = r.coefficients.into_iter();
        match (r.kind, c.len()) {
            (BranchKind::Affine, 2) => Ok(BranchDescriptor::Affine {
                slope: c.next().unwrap(),
                intercept: c.next().unwrap(),
            }),
            (BranchKind::Quadratic, 3) => Ok(BranchDescriptor::Quadratic {
                c0: c.next().unwrap(),
                c1: c.next().unwrap(),
                c2: c.next().unwrap(),
            }),
            (kind, len) => Err(Error::Parse(format!(
                "{kind:?} branch takes {} coefficients, got {len}",
                if kind == BranchKind::Affine { 2 } else { 3 }
            ))),
        }
    }
}

impl<S: Scalar> From<BranchDescriptor<S>> for BranchRecord<S> {
    fn from(b: BranchDescriptor<S>) -> Self {
        match b {
            BranchDescriptor::Affine { slope, intercept } => BranchRecord {
                kind: BranchKind::Affine,
                coefficients: vec![slope, intercept],
            },
            BranchDescriptor::Quadratic { c0, c1, c2 } => BranchRecord {
                kind: BranchKind::Quadratic,
                coefficients: vec![c0, c1, c2],
            },
        }
    }
}

impl<S: Scalar> fmt::Display for BranchDescriptor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchDescriptor::Affine { slope, intercept } => {
                write!(f, "affine({slope}, {intercept})")
            }
            BranchDescriptor::Quadratic { c0, c1, c2 } => write!(f, "quadratic({c0}, {c1}, {c2})"),
        }
    }
}

impl<S: Scalar> BranchDescriptor<S> {
    pub fn affine(slope: S, intercept: S) -> Self {
        BranchDescriptor::Affine { slope, intercept }
    }

    pub fn quadratic(c0: S, c1: S, c2: S) -> Self {
        BranchDescriptor::Quadratic { c0, c1, c2 }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, BranchDescriptor::Affine { .. })
    }

    pub fn eval(&self, x: &S) -> S {
        match self {
            BranchDescriptor::Affine { slope, intercept } => {
                slope.clone() * x.clone() + intercept.clone()
            }
            BranchDescriptor::Quadratic { c0, c1, c2 } => {
                c0.clone() + x.clone() * (c1.clone() + c2.clone() * x.clone())
            }
        }
    }

    pub fn derivative(&self, x: &S) -> S {
        match self {
            BranchDescriptor::Affine { slope, .. } => slope.clone(),
            BranchDescriptor::Quadratic { c1, c2, .. } => {
                c1.clone() + S::from_ratio(2, 1) * c2.clone() * x.clone()
            }
        }
    }

    /// Derivative at both ends of `[0,1]`; the derivative is affine in `x`,
    /// so these two values bound it.
    fn end_derivatives(&self) -> (S, S) {
        (self.derivative(&S::zero()), self.derivative(&S::one()))
    }

    pub fn is_increasing(&self) -> bool {
        self.end_derivatives().0.is_positive()
    }

    /// `sup |Dφ|` over `[0,1]`.
    pub fn contraction_constant(&self) -> S {
        let (d0, d1) = self.end_derivatives();
        d0.abs().max_s(d1.abs())
    }

    /// `inf |Dφ|` over `[0,1]`.
    pub fn min_derivative(&self) -> S {
        let (d0, d1) = self.end_derivatives();
        d0.abs().min_s(d1.abs())
    }

    /// `φ([0,1])` as `(min, max)`.
    pub fn range(&self) -> (S, S) {
        let (a, b) = (self.eval(&S::zero()), self.eval(&S::one()));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Inverse on `φ([0,1])`.
    pub fn inverse(&self, y: &S) -> Result<S> {
        match self {
            BranchDescriptor::Affine { slope, intercept } => {
                Ok((y.clone() - intercept.clone()) / slope.clone())
            }
            BranchDescriptor::Quadratic { c0, c1, c2 } => {
                // 2(y - c0) / (c1 + sign(c1) sqrt(c1^2 - 4 c2 (c0 - y))); stable for c2 -> 0.
                let disc = c1.clone() * c1.clone()
                    - S::from_ratio(4, 1) * c2.clone() * (c0.clone() - y.clone());
                let disc = disc.max_s(S::zero());
                let root = disc.sqrt().ok_or_else(|| Error::Backend {
                    backend: S::BACKEND,
                    what: "inverse of a quadratic branch needs square roots".into(),
                })?;
                let denom = if c1.is_positive() {
                    c1.clone() + root
                } else {
                    c1.clone() - root
                };
                Ok(S::from_ratio(2, 1) * (y.clone() - c0.clone()) / denom)
            }
        }
    }

    /// Image of a subinterval of the domain, with endpoint flags carried
    /// through the monotone map.
    pub fn map_interval(&self, iv: &Interval<S>) -> Interval<S> {
        let (a, b) = (self.eval(iv.lo()), self.eval(iv.hi()));
        if self.is_increasing() {
            Interval::raw(a, b, iv.lo_closed(), iv.hi_closed())
        } else {
            Interval::raw(b, a, iv.hi_closed(), iv.lo_closed())
        }
    }

    /// Checks injectivity and the contraction bound. `index` is 1-based and
    /// only used in error messages.
    fn check_contraction(&self, index: usize) -> Result<()> {
        if let BranchDescriptor::Quadratic { .. } = self {
            if S::BACKEND == Backend::Rational {
                return Err(Error::Backend {
                    backend: S::BACKEND,
                    what: format!(
                        "branch {index} is quadratic; quadratic systems run on the float backend"
                    ),
                });
            }
        }
        let (d0, d1) = self.end_derivatives();
        let same_sign =
            (d0.is_positive() && d1.is_positive()) || (d0 < S::zero() && d1 < S::zero());
        if !same_sign {
            return Err(Error::NotContracting {
                branch: index,
                detail: format!(
                    "derivative changes sign or vanishes on [0,1] (Dφ(0)={d0}, Dφ(1)={d1})"
                ),
            });
        }
        let kappa = self.contraction_constant();
        if kappa >= S::one() {
            return Err(Error::NotContracting {
                branch: index,
                detail: format!("sup |Dφ| = {kappa} is not below 1"),
            });
        }
        Ok(())
    }
}

/// `n` contraction branches together with their images `A_i` and the
/// complementary gaps `B_j`.
///
/// In general mode the images need not be disjoint nor inside `(0,1)`;
/// `images` and `gaps` are then empty and the expanding left-inverse is
/// unavailable.
#[derive(Clone, Debug)]
pub struct BranchSystem<S: Scalar> {
    branches: Vec<BranchDescriptor<S>>,
    images: Vec<Interval<S>>,
    gaps: Vec<Interval<S>>,
    contraction: Vec<S>,
    general: bool,
}

impl<S: Scalar> BranchSystem<S> {
    /// Validate a system of the disjoint-image family.
    pub fn validate(branches: Vec<BranchDescriptor<S>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Config(
                "a branch system needs at least one branch".into(),
            ));
        }
        for (i, b) in branches.iter().enumerate() {
            b.check_contraction(i + 1)?;
        }
        let mut images = Vec::with_capacity(branches.len());
        for (i, b) in branches.iter().enumerate() {
            let (lo, hi) = b.range();
            if !(lo.is_positive() && hi < S::one()) {
                return Err(Error::ImageOutsideUnit {
                    branch: i + 1,
                    image: format!("[{lo}, {hi}]"),
                });
            }
            images.push(Interval::raw(lo, hi, true, true));
        }
        let mut order: Vec<usize> = (0..branches.len()).collect();
        order.sort_by(|&a, &b| images[a].lo().total_cmp(images[b].lo()));
        for w in order.windows(2) {
            let (a, b) = (&images[w[0]], &images[w[1]]);
            // closed images may not even touch
            if b.lo().cmp_s(a.hi()) != Ordering::Greater {
                let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::OverlappingImages {
                    first: first + 1,
                    second: second + 1,
                    first_image: images[first].to_string(),
                    second_image: images[second].to_string(),
                });
            }
        }
        let mut gaps = Vec::with_capacity(branches.len() + 1);
        let mut cursor = (S::zero(), true);
        for &k in &order {
            gaps.push(Interval::raw(
                cursor.0.clone(),
                images[k].lo().clone(),
                cursor.1,
                false,
            ));
            cursor = (images[k].hi().clone(), false);
        }
        gaps.push(Interval::raw(cursor.0, S::one(), false, false));
        let contraction = branches.iter().map(|b| b.contraction_constant()).collect();
        Ok(BranchSystem {
            branches,
            images,
            gaps,
            contraction,
            general: false,
        })
    }

    /// Accept branches whose images may overlap or leave `(0,1)`. Only the
    /// contraction bound is checked here; the piecewise map checks that it
    /// sends `[0,1)` into itself once the cuts are known.
    pub fn general(branches: Vec<BranchDescriptor<S>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Config(
                "a branch system needs at least one branch".into(),
            ));
        }
        for (i, b) in branches.iter().enumerate() {
            b.check_contraction(i + 1)?;
        }
        let contraction = branches.iter().map(|b| b.contraction_constant()).collect();
        Ok(BranchSystem {
            branches,
            images: Vec::new(),
            gaps: Vec::new(),
            contraction,
            general: true,
        })
    }

    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[BranchDescriptor<S>] {
        &self.branches
    }

    pub fn branch(&self, i: usize) -> &BranchDescriptor<S> {
        &self.branches[i]
    }

    /// `A_i = φ_i([0,1])`, in branch order. Empty in general mode.
    pub fn images(&self) -> &[Interval<S>] {
        &self.images
    }

    /// `B_1, …, B_{n+1}`, left to right, as subsets of `[0,1)`. Empty in general mode.
    pub fn gaps(&self) -> &[Interval<S>] {
        &self.gaps
    }

    /// Per-branch `κ_i = sup |Dφ_i|`.
    pub fn contraction_constants(&self) -> &[S] {
        &self.contraction
    }

    /// `max_i κ_i`.
    pub fn kappa(&self) -> S {
        self.contraction
            .iter()
            .cloned()
            .reduce(|a, b| a.max_s(b))
            .expect("nonempty system")
    }

    pub fn is_general(&self) -> bool {
        self.general
    }

    pub fn is_affine(&self) -> bool {
        self.branches.iter().all(|b| b.is_affine())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Float, Rational};

    fn q(s: &str) -> Rational {
        Rational::parse(s).unwrap()
    }

    fn aff(a: &str, b: &str) -> BranchDescriptor<Rational> {
        BranchDescriptor::affine(q(a), q(b))
    }

    #[test]
    fn s2_images_gaps_and_kappa() {
        let sys = BranchSystem::validate(vec![aff("0.3", "0.1"), aff("0.3", "0.5")]).unwrap();
        assert_eq!(
            sys.images()[0],
            Interval::closed(q("0.1"), q("0.4")).unwrap()
        );
        assert_eq!(
            sys.images()[1],
            Interval::closed(q("0.5"), q("0.8")).unwrap()
        );
        assert_eq!(
            sys.gaps(),
            &[
                Interval::closed_open(q("0"), q("0.1")).unwrap(),
                Interval::open(q("0.4"), q("0.5")).unwrap(),
                Interval::open(q("0.8"), q("1")).unwrap(),
            ]
        );
        assert_eq!(sys.kappa(), q("0.3"));
    }

    #[test]
    fn example_branches_fail_membership() {
        let err =
            BranchSystem::validate(vec![aff("0.5", "0.25"), aff("0.5", "-0.25")]).unwrap_err();
        match err {
            Error::ImageOutsideUnit { branch, image } => {
                assert_eq!(branch, 2);
                assert_eq!(image, "[-1/4, 1/4]");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(BranchSystem::general(vec![aff("0.5", "0.25"), aff("0.5", "-0.25")]).is_ok());
    }

    #[test]
    fn overlap_and_touching_images_are_rejected() {
        let err = BranchSystem::validate(vec![aff("0.3", "0.1"), aff("0.3", "0.3")]).unwrap_err();
        assert!(matches!(
            err,
            Error::OverlappingImages {
                first: 1,
                second: 2,
                ..
            }
        ));
        let err = BranchSystem::validate(vec![aff("0.3", "0.1"), aff("0.3", "0.4")]).unwrap_err();
        assert!(matches!(err, Error::OverlappingImages { .. }));
    }

    #[test]
    fn contraction_bounds() {
        assert!(matches!(
            BranchSystem::validate(vec![aff("1", "0")]).unwrap_err(),
            Error::NotContracting { branch: 1, .. }
        ));
        assert!(matches!(
            BranchSystem::validate(vec![aff("0", "0.5")]).unwrap_err(),
            Error::NotContracting { .. }
        ));
        // derivative 0.2 - 0.4x changes sign inside [0,1]
        let b = BranchDescriptor::quadratic(Float(0.3), Float(0.2), Float(-0.2));
        assert!(matches!(
            BranchSystem::validate(vec![b]).unwrap_err(),
            Error::NotContracting { .. }
        ));
    }

    #[test]
    fn quadratic_system_on_float_backend() {
        let sys = BranchSystem::validate(vec![
            BranchDescriptor::quadratic(Float(0.2), Float(0.25), Float(0.05)),
            BranchDescriptor::affine(Float(0.3), Float(0.6)),
        ])
        .unwrap();
        let a1 = &sys.images()[0];
        assert_eq!(*a1.lo(), Float(0.2));
        assert_eq!(*a1.hi(), Float(0.5));
        assert_eq!(sys.contraction_constants()[0], Float(0.35));
        assert_eq!(*sys.images()[1].hi(), Float(0.9));
        // quadratic branches are refused on the exact backend
        let err = BranchSystem::validate(vec![BranchDescriptor::quadratic(
            q("0.2"),
            q("0.25"),
            q("0.05"),
        )]);
        assert!(matches!(err.unwrap_err(), Error::Backend { .. }));
    }

    #[test]
    fn quadratic_inverse_round_trips() {
        let b = BranchDescriptor::quadratic(Float(0.15), Float(0.25), Float(0.05));
        for k in 0..=100 {
            let x = Float(k as f64 / 100.0);
            let y = b.eval(&x);
            assert!((b.inverse(&y).unwrap().0 - x.0).abs() < 1e-14);
        }
        let dec = BranchDescriptor::quadratic(Float(0.9), Float(-0.3), Float(-0.1));
        for k in 0..=100 {
            let x = Float(k as f64 / 100.0);
            assert!((dec.inverse(&dec.eval(&x)).unwrap().0 - x.0).abs() < 1e-14);
        }
    }

    #[test]
    fn decreasing_branch_maps_flags_reversed() {
        let b = aff("-0.3", "0.4");
        let iv = Interval::closed_open(q("0"), q("0.5")).unwrap();
        let img = b.map_interval(&iv);
        assert_eq!(img, Interval::open_closed(q("0.25"), q("0.4")).unwrap());
    }

    #[test]
    fn branch_records_round_trip_through_json() {
        let b = aff("0.3", "0.1");
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, r#"{"kind":"affine","coefficients":["3/10","1/10"]}"#);
        let back: BranchDescriptor<Rational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        let bad = r#"{"kind":"quadratic","coefficients":["1","2"]}"#;
        assert!(serde_json::from_str::<BranchDescriptor<Rational>>(bad).is_err());
    }
}
