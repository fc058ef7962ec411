//! Forward orbits of `f`, backward orbits through `g`, itineraries and
//! g-connections.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expanding::ExpandingMap;
use crate::pc::PiecewiseContraction;
use crate::scalar::{serde_scalar, Scalar};

/// Default recurrence tolerance for [`detect_eventual_period`].
pub const DEFAULT_PERIOD_TOL: f64 = 1e-9;
/// Default horizon for g-connection scans.
pub const DEFAULT_K_MAX: usize = 200;

/// `[x, f(x), …, f^steps(x)]`.
pub fn forward_orbit<S: Scalar>(
    f: &PiecewiseContraction<S>,
    x: &S,
    steps: usize,
) -> Result<Vec<S>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.clone());
    let mut y = x.clone();
    for _ in 0..steps {
        y = f.eval(&y)?;
        out.push(y.clone());
    }
    Ok(out)
}

/// `[x, g(x), …, g^steps(x)]`.
pub fn g_orbit<S: Scalar>(g: &ExpandingMap<S>, x: &S, steps: usize) -> Result<Vec<S>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.clone());
    let mut y = x.clone();
    for _ in 0..steps {
        y = g.eval(&y)?;
        out.push(y.clone());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    /// Nothing is claimed beyond the stored digits.
    Truncated,
    /// `digits[k] = digits[k + period]` for all `k >= preperiod`.
    EventuallyPeriodic { preperiod: usize, period: usize },
}

/// An itinerary with digits in `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItineraryWord {
    pub digits: Vec<usize>,
    pub classification: Classification,
}

impl ItineraryWord {
    /// Digit `k`, extended periodically past the stored prefix when the
    /// word is eventually periodic.
    pub fn digit(&self, k: usize) -> Option<usize> {
        if let Some(&d) = self.digits.get(k) {
            return Some(d);
        }
        match self.classification {
            Classification::Truncated => None,
            Classification::EventuallyPeriodic { preperiod, period } => {
                let idx = preperiod + (k - preperiod) % period;
                self.digits.get(idx).copied()
            }
        }
    }

    pub fn prefix(&self, len: usize) -> Option<Vec<usize>> {
        (0..len).map(|k| self.digit(k)).collect()
    }

    /// The repeating block, if the word is eventually periodic.
    pub fn period_word(&self) -> Option<&[usize]> {
        match self.classification {
            Classification::EventuallyPeriodic { preperiod, period } => {
                self.digits.get(preperiod..preperiod + period)
            }
            Classification::Truncated => None,
        }
    }

    /// The digits before the repeating block.
    pub fn preperiod_word(&self) -> Option<&[usize]> {
        match self.classification {
            Classification::EventuallyPeriodic { preperiod, .. } => self.digits.get(..preperiod),
            Classification::Truncated => None,
        }
    }
}

/// One step of an orbit dump.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct OrbitRecord<S> {
    pub k: usize,
    #[serde(with = "serde_scalar")]
    pub x: S,
    /// Branch digit (1-based); absent for `g`-orbits and the final point.
    pub d: Option<usize>,
}

pub fn orbit_records<S: Scalar>(f: &PiecewiseContraction<S>, orbit: &[S]) -> Vec<OrbitRecord<S>> {
    let last = orbit.len().saturating_sub(1);
    orbit
        .iter()
        .enumerate()
        .map(|(k, x)| OrbitRecord {
            k,
            x: x.clone(),
            d: (k < last).then(|| f.branch_unchecked(x) + 1),
        })
        .collect()
}

/// Digits `d_0 … d_{steps-1}` with `d_k = φ(f^k(x))`, classified by
/// [`detect_eventual_period`] with the default tolerance.
pub fn itinerary<S: Scalar>(
    f: &PiecewiseContraction<S>,
    x: &S,
    steps: usize,
) -> Result<ItineraryWord> {
    let orbit = forward_orbit(f, x, steps)?;
    let digits: Vec<usize> = orbit[..steps]
        .iter()
        .map(|y| f.branch_unchecked(y) + 1)
        .collect();
    let classification = match classify(f, &orbit, &digits, &S::from_f64(DEFAULT_PERIOD_TOL)) {
        PeriodVerdict::Periodic { preperiod, period } => {
            Classification::EventuallyPeriodic { preperiod, period }
        }
        PeriodVerdict::Undetermined => Classification::Truncated,
    };
    Ok(ItineraryWord {
        digits,
        classification,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum PeriodVerdict {
    Periodic { preperiod: usize, period: usize },
    Undetermined,
}

/// Heuristic eventual-periodicity certificate over a finite horizon.
///
/// Finds the smallest period `p` (and for it the least preperiod `s`) such
/// that the digits repeat with period `p` from `s` to the horizon, at least
/// half of the horizon and two full periods are periodic, and the tail
/// point `y = f^{N-p}(x)` satisfies `|f^p(y) - y| <= tol (1 - κ^p)`. The
/// last condition says the composite branch map along the repeating word
/// sends `[y - tol, y + tol]` into itself, which is an exact decision on
/// the rational backend.
pub fn detect_eventual_period<S: Scalar>(
    f: &PiecewiseContraction<S>,
    x: &S,
    horizon: usize,
    tol: &S,
) -> Result<PeriodVerdict> {
    let horizon = horizon.max(2);
    let orbit = forward_orbit(f, x, horizon)?;
    let digits: Vec<usize> = orbit[..horizon]
        .iter()
        .map(|y| f.branch_unchecked(y))
        .collect();
    Ok(classify(f, &orbit, &digits, tol))
}

fn classify<S: Scalar>(
    f: &PiecewiseContraction<S>,
    orbit: &[S],
    digits: &[usize],
    tol: &S,
) -> PeriodVerdict {
    let horizon = digits.len();
    let kappa = f.system().kappa();
    let mut kappa_p = S::one();
    for p in 1..=horizon / 2 {
        kappa_p = kappa_p * kappa.clone();
        let mut s = horizon - p;
        while s > 0 && digits[s - 1] == digits[s - 1 + p] {
            s -= 1;
        }
        if horizon - s < 2 * p || s > horizon / 2 {
            continue;
        }
        let drift = (orbit[horizon].clone() - orbit[horizon - p].clone()).abs();
        if drift <= tol.clone() * (S::one() - kappa_p.clone()) {
            return PeriodVerdict::Periodic {
                preperiod: s,
                period: p,
            };
        }
    }
    PeriodVerdict::Undetermined
}

/// `g^k(x_cut) = x_endpoint` with `1 <= cut <= n-1`, `0 <= endpoint <= n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GConnection {
    pub cut: usize,
    pub endpoint: usize,
    pub k: usize,
}

/// Scan `g`-orbits of all cuts for `k_max` steps. Returns the connection
/// with the smallest `k` (then smallest cut index), if any.
pub fn detect_g_connection<S: Scalar>(
    f: &PiecewiseContraction<S>,
    g: &ExpandingMap<S>,
    k_max: usize,
) -> Result<Option<GConnection>> {
    let n = f.n();
    let targets: Vec<S> = (0..=n).map(|j| f.x(j)).collect();
    let mut current: Vec<S> = f.cuts().to_vec();
    for k in 1..=k_max {
        for (idx, y) in current.iter_mut().enumerate() {
            *y = g.eval(y)?;
            if let Some(endpoint) = targets.iter().position(|t| t == y) {
                return Ok(Some(GConnection {
                    cut: idx + 1,
                    endpoint,
                    k,
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch::{BranchDescriptor, BranchSystem};
    use crate::pc::{BoundaryAssignment, ParameterPoint};
    use crate::scalar::{Float, Rational};

    fn q(s: &str) -> Rational {
        Rational::parse(s).unwrap()
    }

    fn s2_system() -> BranchSystem<Rational> {
        BranchSystem::validate(vec![
            BranchDescriptor::affine(q("0.3"), q("0.1")),
            BranchDescriptor::affine(q("0.3"), q("0.5")),
        ])
        .unwrap()
    }

    fn s2(cut: &str) -> PiecewiseContraction<Rational> {
        PiecewiseContraction::new(
            s2_system(),
            ParameterPoint::new(vec![q(cut)]).unwrap(),
            BoundaryAssignment::all_right(2),
        )
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

    #[test]
    fn forward_orbit_examples() {
        assert_eq!(
            forward_orbit(&f1(), &q("0"), 3).unwrap(),
            vec![q("0"), q("1/4"), q("3/8"), q("7/16")]
        );
        assert_eq!(
            forward_orbit(&s2("0.3"), &q("0"), 2).unwrap(),
            vec![q("0"), q("0.1"), q("0.13")]
        );
        let orbit = forward_orbit(&s2("0.3"), &q("0"), 50).unwrap();
        assert!(orbit[1..].iter().all(|y| *y > q("0") && *y < q("1")));
    }

    #[test]
    fn g_orbit_example() {
        let g = ExpandingMap::build(&s2_system()).unwrap();
        assert_eq!(
            g_orbit(&g, &q("0.3"), 2).unwrap(),
            vec![q("0.3"), q("2/3"), q("5/9")]
        );
    }

    #[test]
    fn itinerary_examples() {
        assert_eq!(
            itinerary(&f1(), &q("0"), 5).unwrap().digits,
            vec![1, 1, 1, 1, 1]
        );
        assert_eq!(
            itinerary(&f1(), &q("0.7"), 5).unwrap().digits,
            vec![2, 1, 1, 1, 1]
        );
        assert_eq!(
            itinerary(&s2("0.3"), &q("0.9"), 4).unwrap().digits,
            vec![2, 2, 2, 2]
        );
    }

    #[test]
    fn itinerary_digits_follow_the_coding() {
        let f = s2("0.45");
        for k in 0..20 {
            let x = Rational::new(k, 20);
            let orbit = forward_orbit(&f, &x, 30).unwrap();
            let word = itinerary(&f, &x, 30).unwrap();
            for (k, d) in word.digits.iter().enumerate() {
                assert_eq!(*d, f.branch(&orbit[k]).unwrap() + 1);
            }
        }
    }

    #[test]
    fn eventual_period_examples() {
        let tol = q("1/1000000000");
        assert_eq!(
            detect_eventual_period(&f1(), &q("0.7"), 80, &tol).unwrap(),
            PeriodVerdict::Periodic {
                preperiod: 1,
                period: 1
            }
        );
        assert_eq!(
            detect_eventual_period(&s2("0.3"), &q("0"), 80, &tol).unwrap(),
            PeriodVerdict::Periodic {
                preperiod: 0,
                period: 1
            }
        );
        // the fixed point 1/7 of branch 1 sits inside I_1
        assert_eq!(
            detect_eventual_period(&s2("0.3"), &q("1/7"), 4, &tol).unwrap(),
            PeriodVerdict::Periodic {
                preperiod: 0,
                period: 1
            }
        );
        // too short a horizon to see convergence
        assert_eq!(
            detect_eventual_period(&s2("0.3"), &q("0"), 4, &tol).unwrap(),
            PeriodVerdict::Undetermined
        );
    }

    #[test]
    fn eventual_period_on_float_backend() {
        let sys = BranchSystem::validate(vec![
            BranchDescriptor::affine(Float(0.3), Float(0.1)),
            BranchDescriptor::affine(Float(0.3), Float(0.5)),
        ])
        .unwrap();
        let f = PiecewiseContraction::new(
            sys,
            ParameterPoint::new(vec![Float(0.3)]).unwrap(),
            BoundaryAssignment::all_right(2),
        )
        .unwrap();
        assert_eq!(
            detect_eventual_period(&f, &Float(0.95), 60, &Float(DEFAULT_PERIOD_TOL)).unwrap(),
            PeriodVerdict::Periodic {
                preperiod: 0,
                period: 1
            }
        );
    }

    #[test]
    fn periodic_word_extension() {
        let w = ItineraryWord {
            digits: vec![2, 1, 3],
            classification: Classification::EventuallyPeriodic {
                preperiod: 1,
                period: 2,
            },
        };
        assert_eq!(w.prefix(7).unwrap(), vec![2, 1, 3, 1, 3, 1, 3]);
        assert_eq!(w.period_word().unwrap(), &[1, 3]);
        assert_eq!(w.preperiod_word().unwrap(), &[2]);
        let t = ItineraryWord {
            digits: vec![1],
            classification: Classification::Truncated,
        };
        assert_eq!(t.digit(3), None);
    }

    #[test]
    fn g_connection_examples() {
        let g = ExpandingMap::build(&s2_system()).unwrap();
        assert_eq!(detect_g_connection(&s2("0.3"), &g, 100).unwrap(), None);
        assert_eq!(detect_g_connection(&s2("2/3"), &g, 100).unwrap(), None);
        // 4/9 is the fixed point of L_2(x) = (x - 0.4)/0.1
        assert_eq!(
            detect_g_connection(&s2("4/9"), &g, 100).unwrap(),
            Some(GConnection {
                cut: 1,
                endpoint: 1,
                k: 1
            })
        );
        // 0.05 -> 0.5 -> 0 lands on x_0
        assert_eq!(
            detect_g_connection(&s2("0.05"), &g, 100).unwrap(),
            Some(GConnection {
                cut: 1,
                endpoint: 0,
                k: 2
            })
        );
    }
}
