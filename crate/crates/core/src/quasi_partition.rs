//! Invariant quasi-partitions built from backward orbits of the cuts.
//!
//! Each cut `x_i` is pulled back through `g` until the trail enters the gap
//! set `G = [0,1) \ f([0,1))`. The trail points form the hull `H`, the
//! components of `(0,1) \ H` are the `J_ℓ`, and `f(J_ℓ) ⊆ J_{τ(ℓ)}`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expanding::ExpandingMap;
use crate::interval::{IntervalSet, Location};
use crate::orbits::{Classification, ItineraryWord};
use crate::pc::PiecewiseContraction;
use crate::scalar::{serde_scalar, serde_scalar_vec, Scalar};

/// Lower bound applied to the default gap budget.
pub const MIN_GAP_BUDGET: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitVerdict {
    /// The last trail point lies in the interior of `G`.
    HitInterior,
    /// No trail point reached `G` within the budget.
    BudgetExhausted,
    /// The trail touched `∂G`, which only happens at g-connections.
    HitBoundary,
}

/// Backward trail of one cut.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct GapHit<S> {
    /// 1-based cut index.
    pub cut: usize,
    /// Hitting time `q_i` (index of the last trail point).
    pub q: usize,
    /// `g^0(x_i), …, g^{q_i}(x_i)`.
    #[serde(with = "serde_scalar_vec")]
    pub trail: Vec<S>,
    pub verdict: HitVerdict,
}

/// `10 ⌈log(1/ℓ_min) / log c⌉` where `ℓ_min` is the shortest nondegenerate
/// component of `G` and `c` the expansion constant of `g`, and never less
/// than [`MIN_GAP_BUDGET`].
pub fn default_gap_budget<S: Scalar>(f: &PiecewiseContraction<S>, g: &ExpandingMap<S>) -> usize {
    let gap = f.gap_set().interior();
    let min_len = gap
        .iter()
        .map(|c| c.length().to_f64())
        .fold(f64::INFINITY, f64::min);
    let c = g.expansion().to_f64();
    if !(min_len.is_finite() && min_len > 0.0 && c > 1.0) {
        return MIN_GAP_BUDGET;
    }
    let steps = ((1.0 / min_len).ln() / c.ln()).ceil().max(1.0) as usize;
    (10 * steps).max(MIN_GAP_BUDGET)
}

/// Pull cut `x_cut` (1-based) back through `g` until it enters `G`.
pub fn gap_hitting_time<S: Scalar>(
    f: &PiecewiseContraction<S>,
    g: &ExpandingMap<S>,
    cut: usize,
    budget: usize,
) -> Result<GapHit<S>> {
    let gap = f.gap_set();
    hit_with_gap(f, g, &gap, cut, budget)
}

/// [`gap_hitting_time`] for every cut, sharing one computation of `G`.
pub fn gap_hits<S: Scalar>(
    f: &PiecewiseContraction<S>,
    g: &ExpandingMap<S>,
    budget: usize,
) -> Result<Vec<GapHit<S>>> {
    let gap = f.gap_set();
    (1..f.n())
        .map(|cut| hit_with_gap(f, g, &gap, cut, budget))
        .collect()
}

fn hit_with_gap<S: Scalar>(
    f: &PiecewiseContraction<S>,
    g: &ExpandingMap<S>,
    gap: &IntervalSet<S>,
    cut: usize,
    budget: usize,
) -> Result<GapHit<S>> {
    if cut == 0 || cut >= f.n() {
        return Err(Error::Parameters(format!(
            "cut index {cut} out of range 1..{}",
            f.n() - 1
        )));
    }
    let mut y = f.x(cut);
    let mut trail = Vec::new();
    for step in 0..=budget {
        trail.push(y.clone());
        let verdict = match gap.locate(&y) {
            Location::Interior(_) => Some(HitVerdict::HitInterior),
            Location::Boundary { .. } => Some(HitVerdict::HitBoundary),
            Location::Outside => None,
        };
        if let Some(verdict) = verdict {
            return Ok(GapHit {
                cut,
                q: step,
                trail,
                verdict,
            });
        }
        if step < budget {
            y = g.eval(&y)?;
        }
    }
    Ok(GapHit {
        cut,
        q: budget,
        trail,
        verdict: HitVerdict::BudgetExhausted,
    })
}

/// An invariant quasi-partition together with the data that produced it.
///
/// Components, `tau` and `eta` are 0-based here; the serialized
/// [`QuasiPartitionReport`] uses 1-based labels.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiPartition<S: Scalar> {
    /// `H`, sorted, inside `(0,1)`.
    pub hull: Vec<S>,
    /// `J_ℓ = (components[ℓ].0, components[ℓ].1)`, left to right.
    pub components: Vec<(S, S)>,
    pub tau: Vec<usize>,
    /// `J_ℓ ⊆ I_{eta[ℓ]}` (0-based branch).
    pub eta: Vec<usize>,
    /// `max q_i`.
    pub q: usize,
    /// The sets `Q_i` as backward trails.
    pub trails: Vec<Vec<S>>,
}

impl<S: Scalar> QuasiPartition<S> {
    pub fn m(&self) -> usize {
        self.components.len()
    }

    /// Component containing `x`, or `None` for hull points and points
    /// outside `(0,1)`.
    pub fn component_of(&self, x: &S) -> Option<usize> {
        component_index(&self.hull, x)
    }

    pub fn report(&self) -> QuasiPartitionReport<S> {
        QuasiPartitionReport {
            hull: self.hull.clone(),
            components: self
                .components
                .iter()
                .zip(&self.eta)
                .map(|((lo, hi), &eta)| ComponentRecord {
                    lo: lo.clone(),
                    hi: hi.clone(),
                    eta: eta + 1,
                })
                .collect(),
            tau: self.tau.iter().map(|t| t + 1).collect(),
            q: self.q,
            trails: self
                .trails
                .iter()
                .map(|t| t.iter().map(|x| x.to_string()).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct ComponentRecord<S> {
    #[serde(with = "serde_scalar")]
    pub lo: S,
    #[serde(with = "serde_scalar")]
    pub hi: S,
    /// 1-based branch.
    pub eta: usize,
}

/// Serialized quasi-partition; component and branch labels are 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct QuasiPartitionReport<S> {
    #[serde(rename = "H", with = "serde_scalar_vec")]
    pub hull: Vec<S>,
    pub components: Vec<ComponentRecord<S>>,
    pub tau: Vec<usize>,
    pub q: usize,
    pub trails: Vec<Vec<String>>,
}

fn component_index<S: Scalar>(hull: &[S], x: &S) -> Option<usize> {
    if *x <= S::zero() || *x >= S::one() {
        return None;
    }
    let k = hull.partition_point(|h| *h < *x);
    if k < hull.len() && hull[k] == *x {
        None
    } else {
        Some(k)
    }
}

fn components_from_hull<S: Scalar>(hull: &[S]) -> Vec<(S, S)> {
    let mut bounds = Vec::with_capacity(hull.len() + 2);
    bounds.push(S::zero());
    bounds.extend(hull.iter().cloned());
    bounds.push(S::one());
    bounds
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect()
}

/// `f(J)` for an open interval `J` free of cuts, as open endpoints `(lo, hi)`.
fn open_image<S: Scalar>(f: &PiecewiseContraction<S>, branch: usize, (a, b): &(S, S)) -> (S, S) {
    let phi = f.system().branch(branch);
    let (fa, fb) = (phi.eval(a), phi.eval(b));
    if fa <= fb {
        (fa, fb)
    } else {
        (fb, fa)
    }
}

fn cut_inside<S: Scalar>(f: &PiecewiseContraction<S>, (a, b): &(S, S)) -> Option<S> {
    f.cuts().iter().find(|c| *c > a && *c < b).cloned()
}

/// Derive `τ` and `η` for the components cut out by `hull`, failing when
/// some `f(J_ℓ)` is not inside a single component.
pub(crate) fn transition_maps<S: Scalar>(
    f: &PiecewiseContraction<S>,
    hull: &[S],
    components: &[(S, S)],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut tau = Vec::with_capacity(components.len());
    let mut eta = Vec::with_capacity(components.len());
    for (l, comp) in components.iter().enumerate() {
        if let Some(c) = cut_inside(f, comp) {
            return Err(Error::QuasiPartition(format!(
                "cut {c} lies inside J_{} = ({}, {})",
                l + 1,
                comp.0,
                comp.1
            )));
        }
        let mid = comp.0.midpoint(&comp.1);
        let branch = f.branch(&mid)?;
        let image_mid = f.system().branch(branch).eval(&mid);
        let target = component_index(hull, &image_mid).ok_or_else(|| {
            Error::QuasiPartition(format!(
                "f(midpoint of J_{}) = {image_mid} is a hull point",
                l + 1
            ))
        })?;
        let (lo, hi) = open_image(f, branch, comp);
        let (tlo, thi) = &components[target];
        if lo < *tlo || hi > *thi {
            return Err(Error::QuasiPartition(format!(
                "f(J_{}) = ({lo}, {hi}) is not inside J_{} = ({tlo}, {thi}); rerun on the rational backend",
                l + 1,
                target + 1
            )));
        }
        tau.push(target);
        eta.push(branch);
    }
    Ok((tau, eta))
}

/// Assemble the quasi-partition from the backward trails of all cuts.
pub fn from_hits<S: Scalar>(
    f: &PiecewiseContraction<S>,
    hits: &[GapHit<S>],
) -> Result<QuasiPartition<S>> {
    if hits.len() + 1 != f.n() {
        return Err(Error::QuasiPartition(format!(
            "{} trails for {} cuts",
            hits.len(),
            f.n() - 1
        )));
    }
    if let Some(bad) = hits.iter().find(|h| h.verdict != HitVerdict::HitInterior) {
        return Err(Error::QuasiPartition(format!(
            "trail of x_{} ended with {:?}",
            bad.cut, bad.verdict
        )));
    }
    let mut hull: Vec<S> = hits.iter().flat_map(|h| h.trail.iter().cloned()).collect();
    if let Some(bad) = hull.iter().find(|h| **h <= S::zero() || **h >= S::one()) {
        return Err(Error::QuasiPartition(format!(
            "trail point {bad} is outside (0,1)"
        )));
    }
    hull.sort_by(|a, b| a.total_cmp(b));
    hull.dedup_by(|a, b| a == b);
    let components = components_from_hull(&hull);
    let (tau, eta) = transition_maps(f, &hull, &components)?;
    Ok(QuasiPartition {
        hull,
        components,
        tau,
        eta,
        q: hits.iter().map(|h| h.q).max().unwrap_or(0),
        trails: hits.iter().map(|h| h.trail.clone()).collect(),
    })
}

/// Full construction: trails for every cut, then components, `τ` and `η`.
pub fn build_quasi_partition<S: Scalar>(
    f: &PiecewiseContraction<S>,
    g: &ExpandingMap<S>,
    budget: usize,
) -> Result<QuasiPartition<S>> {
    let hits = gap_hits(f, g, budget)?;
    from_hits(f, &hits)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Witness or summary.
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn push(&mut self, name: &str, failures: Vec<String>, ok_detail: String) {
        let passed = failures.is_empty();
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: if passed {
                ok_detail
            } else {
                failures.join("; ")
            },
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_HULL: &str = "hull";
pub const CHECK_INVARIANCE: &str = "invariance";
pub const CHECK_BRANCH: &str = "branch-containment";
pub const CHECK_TRAILS: &str = "backward-trails";
/// `G, f(G), …, f^q(G)` pairwise disjoint.
pub const CHECK_LAYERS: &str = "layers-disjoint";
/// Every hull point lies in `E = int(⋃_{k<=q} f^k(G))`.
pub const CHECK_HULL_INSIDE: &str = "hull-inside-e";
/// `f^p(E) ∩ E = ∅` for a few `p > q`.
pub const CHECK_NO_RETURN: &str = "no-return";

/// Offsets `p - q` at which `f^p(E) ∩ E = ∅` is spot-checked.
const NO_RETURN_OFFSETS: [usize; 3] = [1, 2, 3];

/// Independent re-check of a quasi-partition against `f`.
///
/// Every check is itemized; `τ` and `η` are not trusted, each is recomputed
/// from `f` and compared.
pub fn verify_quasi_partition<S: Scalar>(
    f: &PiecewiseContraction<S>,
    qp: &QuasiPartition<S>,
) -> VerificationReport {
    let mut report = VerificationReport::default();
    let m = qp.components.len();

    // H contains the cuts and cuts out the components
    let mut bad = Vec::new();
    if qp.hull.windows(2).any(|w| w[0] >= w[1]) {
        bad.push("hull is not strictly increasing".to_string());
    }
    if let Some(h) = qp.hull.iter().find(|h| **h <= S::zero() || **h >= S::one()) {
        bad.push(format!("hull point {h} outside (0,1)"));
    }
    for (i, c) in f.cuts().iter().enumerate() {
        if !qp.hull.iter().any(|h| h == c) {
            bad.push(format!("cut x_{} = {c} missing from H", i + 1));
        }
    }
    if qp.components != components_from_hull(&qp.hull) {
        bad.push("components are not the connected components of (0,1) \\ H".to_string());
    }
    report.push(CHECK_HULL, bad, format!("|H| = {}, m = {m}", qp.hull.len()));

    // every f(J) inside J_tau
    let mut bad = Vec::new();
    if qp.tau.len() != m || qp.eta.len() != m {
        bad.push(format!(
            "tau/eta have lengths {}/{} for m = {m}",
            qp.tau.len(),
            qp.eta.len()
        ));
    }
    for (l, comp) in qp.components.iter().enumerate() {
        let Some(&t) = qp.tau.get(l) else { continue };
        if let Some(c) = cut_inside(f, comp) {
            bad.push(format!("cut {c} inside J_{}", l + 1));
            continue;
        }
        let Some(target) = qp.components.get(t) else {
            bad.push(format!("tau(J_{}) = {} out of range", l + 1, t + 1));
            continue;
        };
        let mid = comp.0.midpoint(&comp.1);
        let branch = match f.branch(&mid) {
            Ok(b) => b,
            Err(e) => {
                bad.push(e.to_string());
                continue;
            }
        };
        let (lo, hi) = open_image(f, branch, comp);
        if lo < target.0 || hi > target.1 {
            let witness = f.system().branch(branch).eval(&mid);
            bad.push(format!(
                "f(J_{}) = ({lo}, {hi}) not inside J_{} = ({}, {}); witness f({mid}) = {witness}",
                l + 1,
                t + 1,
                target.0,
                target.1
            ));
        }
    }
    report.push(
        CHECK_INVARIANCE,
        bad,
        format!("f(J_l) ⊆ J_tau(l) for all {m} components"),
    );

    // η containment
    let mut bad = Vec::new();
    for (l, (comp, &e)) in qp.components.iter().zip(&qp.eta).enumerate() {
        if e >= f.n() {
            bad.push(format!("eta(J_{}) = {} out of range", l + 1, e + 1));
            continue;
        }
        if comp.0 < f.x(e) || comp.1 > f.x(e + 1) {
            bad.push(format!(
                "J_{} = ({}, {}) not inside I_{} = ({}, {})",
                l + 1,
                comp.0,
                comp.1,
                e + 1,
                f.x(e),
                f.x(e + 1)
            ));
        }
    }
    report.push(CHECK_BRANCH, bad, "J_l ⊆ I_eta(l)".to_string());

    // Backward trails: f(trail[k+1]) = trail[k], only the last point in G,
    // and it sits in the interior of G.
    let gap = f.gap_set();
    let mut bad = Vec::new();
    for (i, trail) in qp.trails.iter().enumerate() {
        if trail.first() != f.cuts().get(i) {
            bad.push(format!("trail {} does not start at x_{}", i + 1, i + 1));
        }
        for k in 0..trail.len().saturating_sub(1) {
            match f.eval(&trail[k + 1]) {
                Ok(y) if y == trail[k] => {}
                Ok(y) => bad.push(format!(
                    "f(trail_{}[{}]) = {y} != {}",
                    i + 1,
                    k + 1,
                    trail[k]
                )),
                Err(e) => bad.push(e.to_string()),
            }
            if gap.contains(&trail[k]) {
                bad.push(format!("trail_{}[{k}] = {} already in G", i + 1, trail[k]));
            }
        }
        if let Some(last) = trail.last() {
            if !matches!(gap.locate(last), Location::Interior(_)) {
                bad.push(format!(
                    "trail_{} ends at {last}, not in the interior of G",
                    i + 1
                ));
            }
        }
    }
    report.push(
        CHECK_TRAILS,
        bad,
        "f(Q_i) steps back along each trail and f^{-1}(Q_i) ⊆ Q_i".to_string(),
    );

    // G, f(G), …, f^q(G) pairwise disjoint.
    let mut layers = vec![gap.clone()];
    for _ in 0..qp.q {
        let next = f.image_of(layers.last().expect("nonempty"));
        layers.push(next);
    }
    let mut bad = Vec::new();
    for a in 0..layers.len() {
        for b in a + 1..layers.len() {
            let meet = layers[a].intersect(&layers[b]);
            if !meet.is_empty() {
                bad.push(format!("f^{a}(G) ∩ f^{b}(G) = {meet}"));
            }
        }
    }
    report.push(
        CHECK_LAYERS,
        bad,
        format!("{} layers pairwise disjoint", layers.len()),
    );

    // ⋃Q_i ⊆ E = int(⋃_{k<=q} f^k(G)).
    let union = layers
        .iter()
        .fold(IntervalSet::empty(), |acc, l| acc.union(l));
    let interior = union.interior();
    let bad: Vec<String> = qp
        .hull
        .iter()
        .filter(|h| !matches!(interior.locate(h), Location::Interior(_)))
        .map(|h| format!("hull point {h} not in E"))
        .collect();
    report.push(
        CHECK_HULL_INSIDE,
        bad,
        format!("all {} hull points in E", qp.hull.len()),
    );

    // f^p(E) ∩ E = ∅ for a few p > q.
    let mut bad = Vec::new();
    let mut image = interior.clone();
    let last = qp.q + NO_RETURN_OFFSETS[NO_RETURN_OFFSETS.len() - 1];
    for p in 1..=last {
        image = f.image_of(&image);
        if p > qp.q && NO_RETURN_OFFSETS.contains(&(p - qp.q)) {
            let meet = image.intersect(&interior);
            if !meet.is_empty() {
                bad.push(format!("f^{p}(E) ∩ E = {meet}"));
            }
        }
    }
    report.push(
        CHECK_NO_RETURN,
        bad,
        format!("f^p(E) ∩ E = ∅ for p = q+1..q+{}", NO_RETURN_OFFSETS.len()),
    );

    report
}

/// Exact eventually periodic itinerary of every point of `J_{start}`,
/// read off the functional graph `τ`.
pub fn symbolic_itinerary_from_tau<S: Scalar>(
    qp: &QuasiPartition<S>,
    start: usize,
) -> Result<ItineraryWord> {
    if start >= qp.m() {
        return Err(Error::Parameters(format!(
            "component {} out of range 1..{}",
            start + 1,
            qp.m()
        )));
    }
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut path = Vec::new();
    let mut l = start;
    loop {
        if let Some(&first) = seen.get(&l) {
            let digits = path.iter().map(|&c: &usize| qp.eta[c] + 1).collect();
            return Ok(ItineraryWord {
                digits,
                classification: Classification::EventuallyPeriodic {
                    preperiod: first,
                    period: path.len() - first,
                },
            });
        }
        seen.insert(l, path.len());
        path.push(l);
        l = qp.tau[l];
    }
}
