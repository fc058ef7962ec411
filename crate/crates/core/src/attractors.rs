//! Periodic orbits from `τ`-cycles, basin attribution and a brute-force
//! oracle that works without a quasi-partition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branch::BranchDescriptor;
use crate::error::{Error, Result};
use crate::pc::PiecewiseContraction;
use crate::quasi_partition::QuasiPartition;
use crate::scalar::{serde_scalar, serde_scalar_vec, Scalar};

/// Basin attribution tolerance.
pub const BASIN_TOL: f64 = 1e-8;
/// Iteration cap for basin attribution.
pub const BASIN_ITERATION_CAP: usize = 100_000;
/// Iteration cap for the non-affine fixed-point solver.
const FIXED_POINT_ITERATION_CAP: usize = 1_000_000;

/// One periodic orbit of `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit<S> {
    /// `y, f(y), …, f^{k-1}(y)`.
    pub points: Vec<S>,
    pub period: usize,
    /// 1-based branch digits of `points`.
    pub word: Vec<usize>,
    /// No point is a cut.
    pub stable: bool,
    /// 0-based components of the producing `τ`-cycle; empty when the orbit
    /// did not come from a quasi-partition.
    pub cycle: Vec<usize>,
    /// Power of the return map whose fixed point was solved for: `p` when
    /// it preserves orientation, `2p` otherwise.
    pub return_power: usize,
}

impl<S: Scalar> PeriodicOrbit<S> {
    /// Points rotated so that the smallest comes first.
    pub fn canonical_points(&self) -> Vec<S> {
        let start = (0..self.points.len())
            .min_by(|&a, &b| self.points[a].total_cmp(&self.points[b]))
            .unwrap_or(0);
        self.points[start..]
            .iter()
            .chain(&self.points[..start])
            .cloned()
            .collect()
    }

    /// Same cycle of points within `tol`, up to rotation.
    pub fn matches(&self, other_points: &[S], tol: &S) -> bool {
        if self.points.len() != other_points.len() {
            return false;
        }
        let a = self.canonical_points();
        let start = (0..other_points.len())
            .min_by(|&x, &y| other_points[x].total_cmp(&other_points[y]))
            .unwrap_or(0);
        let b = other_points[start..].iter().chain(&other_points[..start]);
        a.iter()
            .zip(b)
            .all(|(p, q)| (p.clone() - q.clone()).abs() <= *tol)
    }

    pub fn record(&self) -> PeriodicOrbitRecord<S> {
        PeriodicOrbitRecord {
            points: self.points.clone(),
            period: self.period,
            word: self.word.clone(),
            stable: self.stable,
            cycle: self.cycle.iter().map(|c| c + 1).collect(),
            return_power: self.return_power,
        }
    }
}

/// Wire form of [`PeriodicOrbit`] with 1-based component labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct PeriodicOrbitRecord<S> {
    #[serde(with = "serde_scalar_vec")]
    pub points: Vec<S>,
    pub period: usize,
    pub word: Vec<usize>,
    pub stable: bool,
    pub cycle: Vec<usize>,
    pub return_power: usize,
}

/// A limit of orbits that `f` does not actually cycle: the map's own branch
/// at the point breaks the limiting branch word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct PhantomAttractor<S> {
    #[serde(with = "serde_scalar")]
    pub point: S,
    /// The limiting word (1-based digits).
    pub word: Vec<usize>,
    /// Position in the word where `f` deviates.
    pub position: usize,
    /// Branch of `f` at the deviating point (1-based), `None` if the point
    /// left `[0,1)`.
    pub actual: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrbitVerdict<S> {
    Orbit(PeriodicOrbit<S>),
    Phantom(PhantomAttractor<S>),
}

/// All cycles of `τ`, each rotated to start at its smallest component.
pub fn tau_cycles(tau: &[usize]) -> Vec<Vec<usize>> {
    let m = tau.len();
    // 0 unvisited, 1 on the current path, 2 done
    let mut state = vec![0u8; m];
    let mut cycles = Vec::new();
    for start in 0..m {
        let mut path = Vec::new();
        let mut l = start;
        while state[l] == 0 {
            state[l] = 1;
            path.push(l);
            l = tau[l];
        }
        if state[l] == 1 {
            let pos = path.iter().position(|&c| c == l).expect("on path");
            let mut cycle = path[pos..].to_vec();
            let min_at = (0..cycle.len())
                .min_by_key(|&k| cycle[k])
                .expect("nonempty");
            cycle.rotate_left(min_at);
            cycles.push(cycle);
        }
        for c in path {
            state[c] = 2;
        }
    }
    cycles.sort();
    cycles
}

/// Composite `φ_{w_{p-1}} ∘ … ∘ φ_{w_0}` when every branch is affine, as
/// `(slope, intercept)`.
fn affine_composite<S: Scalar>(f: &PiecewiseContraction<S>, word: &[usize]) -> Option<(S, S)> {
    let mut a = S::one();
    let mut b = S::zero();
    for &w in word {
        match f.system().branch(w) {
            BranchDescriptor::Affine { slope, intercept } => {
                a = slope.clone() * a;
                b = slope.clone() * b + intercept.clone();
            }
            BranchDescriptor::Quadratic { .. } => return None,
        }
    }
    Some((a, b))
}

fn apply_word<S: Scalar>(f: &PiecewiseContraction<S>, word: &[usize], y: &S) -> S {
    word.iter()
        .fold(y.clone(), |acc, &w| f.system().branch(w).eval(&acc))
}

/// Fixed point of the composite word map (0-based word), with the return
/// power used.
fn word_fixed_point<S: Scalar>(
    f: &PiecewiseContraction<S>,
    word: &[usize],
    start: &S,
) -> Result<(S, usize)> {
    let p = word.len();
    let increasing = word
        .iter()
        .filter(|&&w| !f.system().branch(w).is_increasing())
        .count()
        % 2
        == 0;
    let power = if increasing { p } else { 2 * p };
    if let Some((a, b)) = affine_composite(f, word) {
        return Ok((b / (S::one() - a), power));
    }
    let kappa_p = (0..power).fold(1.0, |acc, _| acc * f.system().kappa().to_f64());
    let threshold = 1e-14 / (1.0 - kappa_p);
    let mut y = start.clone();
    for _ in 0..FIXED_POINT_ITERATION_CAP {
        let next = apply_word(f, word, &y);
        let delta = (next.clone() - y).abs().to_f64();
        y = next;
        if delta <= threshold {
            return Ok((y, power));
        }
    }
    Err(Error::Numerical(format!(
        "fixed point of word {:?} did not converge in {FIXED_POINT_ITERATION_CAP} iterations",
        word.iter().map(|w| w + 1).collect::<Vec<_>>()
    )))
}

/// Follow `f` from `y` along `word` (0-based), returning the orbit points or
/// the phantom verdict at the first deviation.
fn follow_word<S: Scalar>(
    f: &PiecewiseContraction<S>,
    word: &[usize],
    y: S,
) -> std::result::Result<Vec<S>, PhantomAttractor<S>> {
    let digits: Vec<usize> = word.iter().map(|w| w + 1).collect();
    let mut points = Vec::with_capacity(word.len());
    let mut z = y.clone();
    for (j, &w) in word.iter().enumerate() {
        let actual = f.branch(&z).ok();
        if actual != Some(w) {
            return Err(PhantomAttractor {
                point: z,
                word: digits,
                position: j,
                actual: actual.map(|a| a + 1),
            });
        }
        points.push(z.clone());
        z = f.system().branch(w).eval(&z);
    }
    if z != y {
        return Err(PhantomAttractor {
            point: y,
            word: digits,
            position: 0,
            actual: None,
        });
    }
    Ok(points)
}

fn orbit_from_points<S: Scalar>(
    f: &PiecewiseContraction<S>,
    points: Vec<S>,
    word: &[usize],
    cycle: Vec<usize>,
    return_power: usize,
) -> PeriodicOrbit<S> {
    PeriodicOrbit {
        stable: !points.iter().any(|y| f.is_cut(y)),
        period: points.len(),
        word: word.iter().map(|w| w + 1).collect(),
        points,
        cycle,
        return_power,
    }
}

/// Periodic orbit attached to a `τ`-cycle (0-based components).
///
/// The return map of the cycle's first component `J = (a,b)` is the
/// composite branch map along `η`; its unique fixed point in `[a,b]` is
/// solved for and followed under the actual `f`.
pub fn locate_periodic_orbit<S: Scalar>(
    f: &PiecewiseContraction<S>,
    qp: &QuasiPartition<S>,
    cycle: &[usize],
) -> Result<OrbitVerdict<S>> {
    let Some(&first) = cycle.first() else {
        return Err(Error::Parameters("empty cycle".into()));
    };
    for (k, &l) in cycle.iter().enumerate() {
        let next = cycle[(k + 1) % cycle.len()];
        if l >= qp.m() || qp.tau[l] != next {
            return Err(Error::Parameters(format!(
                "{:?} is not a cycle of tau",
                cycle.iter().map(|c| c + 1).collect::<Vec<_>>()
            )));
        }
    }
    let word: Vec<usize> = cycle.iter().map(|&l| qp.eta[l]).collect();
    let (a, b) = &qp.components[first];
    let (y, power) = word_fixed_point(f, &word, &a.midpoint(b))?;
    if y < *a || y > *b {
        return Err(Error::Numerical(format!(
            "return-map fixed point {y} escaped J_{} = ({a}, {b})",
            first + 1
        )));
    }
    Ok(match follow_word(f, &word, y) {
        Ok(points) => {
            OrbitVerdict::Orbit(orbit_from_points(f, points, &word, cycle.to_vec(), power))
        }
        Err(phantom) => OrbitVerdict::Phantom(phantom),
    })
}

/// Basin attribution of one sampled point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct BasinEntry<S> {
    #[serde(with = "serde_scalar")]
    pub x: S,
    /// 0-based orbit index, `None` when unattributed.
    pub orbit: Option<usize>,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct AttractorReport<S> {
    pub orbits: Vec<PeriodicOrbit<S>>,
    pub r: usize,
    pub basins: Vec<BasinEntry<S>>,
}

impl<S: Scalar> AttractorReport<S> {
    pub fn unattributed(&self) -> usize {
        self.basins.iter().filter(|b| b.orbit.is_none()).count()
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.r];
        for b in &self.basins {
            if let Some(o) = b.orbit {
                counts[o] += 1;
            }
        }
        counts
    }

    pub fn max_iterations(&self) -> usize {
        self.basins.iter().map(|b| b.iterations).max().unwrap_or(0)
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.basins.is_empty() {
            return 0.0;
        }
        self.basins.iter().map(|b| b.iterations as f64).sum::<f64>() / self.basins.len() as f64
    }

    pub fn record(&self) -> AttractorRecord<S> {
        AttractorRecord {
            r: self.r,
            orbits: self.orbits.iter().map(PeriodicOrbit::record).collect(),
            basin_histogram: self.histogram(),
            unattributed: self.unattributed(),
            max_iterations: self.max_iterations(),
            mean_iterations: self.mean_iterations(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct AttractorRecord<S> {
    pub r: usize,
    pub orbits: Vec<PeriodicOrbitRecord<S>>,
    pub basin_histogram: Vec<usize>,
    pub unattributed: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug)]
pub struct BasinConfig {
    pub tol: f64,
    pub iteration_cap: usize,
}

impl Default for BasinConfig {
    fn default() -> Self {
        BasinConfig {
            tol: BASIN_TOL,
            iteration_cap: BASIN_ITERATION_CAP,
        }
    }
}

/// Orbit points sorted for nearest-neighbour lookup: `(point, orbit, phase)`.
struct OrbitIndex<S> {
    entries: Vec<(S, usize, usize)>,
}

impl<S: Scalar> OrbitIndex<S> {
    fn new(orbits: &[PeriodicOrbit<S>]) -> Self {
        let mut entries: Vec<(S, usize, usize)> = orbits
            .iter()
            .enumerate()
            .flat_map(|(o, orb)| {
                orb.points
                    .iter()
                    .enumerate()
                    .map(move |(j, y)| (y.clone(), o, j))
            })
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        OrbitIndex { entries }
    }

    fn attribute(
        &self,
        f: &PiecewiseContraction<S>,
        orbits: &[PeriodicOrbit<S>],
        y: &S,
        tol: &S,
    ) -> Option<usize> {
        let k = self.entries.partition_point(|e| e.0.total_cmp(y).is_lt());
        let branch = f.branch(y).ok()? + 1;
        [k.checked_sub(1), Some(k)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.entries.get(i))
            .find(|(pt, o, j)| {
                (pt.clone() - y.clone()).abs() <= *tol && orbits[*o].word[*j] == branch
            })
            .map(|e| e.1)
    }
}

fn attribute_basins<S: Scalar>(
    f: &PiecewiseContraction<S>,
    orbits: &[PeriodicOrbit<S>],
    samples: &[S],
    config: &BasinConfig,
) -> Vec<BasinEntry<S>> {
    let index = OrbitIndex::new(orbits);
    let tol = S::from_f64(config.tol);
    samples
        .par_iter()
        .map(|x| {
            let mut y = x.clone();
            for it in 0..=config.iteration_cap {
                if let Some(o) = index.attribute(f, orbits, &y, &tol) {
                    return BasinEntry {
                        x: x.clone(),
                        orbit: Some(o),
                        iterations: it,
                    };
                }
                match f.eval(&y) {
                    Ok(next) => y = next,
                    Err(_) => break,
                }
            }
            BasinEntry {
                x: x.clone(),
                orbit: None,
                iterations: config.iteration_cap,
            }
        })
        .collect()
}

/// Every periodic orbit of a map with a verified quasi-partition, with
/// basin attribution of `samples`.
///
/// Errors with [`Error::InvariantViolation`] on a phantom cycle, on two
/// cycles producing the same orbit, or when `r` falls outside `1..=n`.
pub fn attractor_set<S: Scalar>(
    f: &PiecewiseContraction<S>,
    qp: &QuasiPartition<S>,
    samples: &[S],
    config: &BasinConfig,
) -> Result<AttractorReport<S>> {
    let mut orbits: Vec<PeriodicOrbit<S>> = Vec::new();
    for cycle in tau_cycles(&qp.tau) {
        match locate_periodic_orbit(f, qp, &cycle)? {
            OrbitVerdict::Orbit(orbit) => {
                if let Some(dup) = orbits.iter().find(|o| o.matches(&orbit.points, &S::zero())) {
                    return Err(Error::InvariantViolation(format!(
                        "tau-cycles {:?} and {:?} give the same orbit",
                        dup.cycle, orbit.cycle
                    )));
                }
                orbits.push(orbit);
            }
            OrbitVerdict::Phantom(p) => {
                return Err(Error::InvariantViolation(format!(
                    "tau-cycle {:?} has a phantom attractor at {}",
                    cycle.iter().map(|c| c + 1).collect::<Vec<_>>(),
                    p.point
                )))
            }
        }
    }
    let r = orbits.len();
    if r == 0 || r > f.n() {
        return Err(Error::InvariantViolation(format!(
            "{r} periodic orbits for n = {}",
            f.n()
        )));
    }
    let basins = attribute_basins(f, &orbits, samples, config);
    Ok(AttractorReport { orbits, r, basins })
}

/// Result of [`direct_attractor_oracle`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "verdict",
    rename_all = "kebab-case",
    bound(serialize = "S: Scalar", deserialize = "S: Scalar")
)]
pub enum OracleVerdict<S> {
    Orbit {
        #[serde(with = "serde_scalar_vec")]
        points: Vec<S>,
        period: usize,
        word: Vec<usize>,
    },
    Phantom(PhantomAttractor<S>),
    Undetermined,
}

/// Brute-force attractor search from one initial point.
///
/// After `burn_in` steps a window of `probe_len` iterates is searched for
/// the least `p` with `|y_L - y_{L-p}| <= tol` and a branch word that
/// repeats with period `p` over the second half of the window. The fixed
/// point of the composite map along that word is then followed under `f`.
pub fn direct_attractor_oracle<S: Scalar>(
    f: &PiecewiseContraction<S>,
    x: &S,
    burn_in: usize,
    probe_len: usize,
    tol: &S,
) -> Result<OracleVerdict<S>> {
    let mut y = x.clone();
    for _ in 0..burn_in {
        y = f.eval(&y)?;
    }
    let len = probe_len.max(2);
    let mut window = Vec::with_capacity(len + 1);
    let mut digits = Vec::with_capacity(len);
    window.push(y.clone());
    for _ in 0..len {
        let (d, next) = f.step(&y)?;
        digits.push(d);
        window.push(next.clone());
        y = next;
    }
    for p in 1..=len / 2 {
        if (window[len].clone() - window[len - p].clone()).abs() > *tol {
            continue;
        }
        if (len / 2..len - p).any(|k| digits[k] != digits[k + p]) {
            continue;
        }
        let word = &digits[len - p..];
        let (z, _) = word_fixed_point(f, word, &window[len - p])?;
        return Ok(match follow_word(f, word, z) {
            Ok(points) => OracleVerdict::Orbit {
                points,
                period: p,
                word: word.iter().map(|w| w + 1).collect(),
            },
            Err(phantom) => OracleVerdict::Phantom(phantom),
        });
    }
    Ok(OracleVerdict::Undetermined)
}

/// Fixed points of `f`: fixed points of each branch `φ_i` that lie in `I_i`.
pub fn fixed_points<S: Scalar>(f: &PiecewiseContraction<S>) -> Vec<(usize, S)> {
    let mut out = Vec::new();
    for (i, phi) in f.system().branches().iter().enumerate() {
        let candidates: Vec<S> = match phi {
            BranchDescriptor::Affine { slope, intercept } => {
                vec![intercept.clone() / (S::one() - slope.clone())]
            }
            BranchDescriptor::Quadratic { c0, c1, c2 } => {
                let b = c1.clone() - S::one();
                if c2.is_zero_s() {
                    vec![-c0.clone() / b]
                } else {
                    let disc =
                        b.clone() * b.clone() - S::from_ratio(4, 1) * c2.clone() * c0.clone();
                    let two_a = S::from_ratio(2, 1) * c2.clone();
                    match disc.sqrt() {
                        Some(r) if r.is_zero_s() => vec![-b / two_a],
                        Some(r) => vec![(-b.clone() + r.clone()) / two_a.clone(), (-b - r) / two_a],
                        None => Vec::new(),
                    }
                }
            }
        };
        for y in candidates {
            if f.branch(&y).ok() == Some(i) {
                out.push((i, y));
            }
        }
    }
    out
}
