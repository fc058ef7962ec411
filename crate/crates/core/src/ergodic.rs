//! Invariant density of `g` by Ulam discretization, and orbit statistics.
//!
//! Every piece of `g` maps its domain monotonically onto `[0,1]`, so the
//! portion of a source bin sent into a target bin is an interval whose
//! endpoints are piece preimages of bin edges. The matrix is built from
//! those lengths directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expanding::ExpandingMap;
use crate::scalar::Scalar;

/// Residual target for the stationary density.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Sweep cap for power iteration.
pub const MAX_SWEEPS: usize = 100_000;

/// Row-stochastic Ulam matrix on `bins` equal bins of `[0,1]`, with its
/// stationary mass vector.
#[derive(Clone, Debug)]
pub struct UlamModel {
    pub bins: usize,
    /// Sparse rows: `(target bin, probability)`, sorted by target.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Stationary mass per bin; sums to 1.
    pub mass: Vec<f64>,
    /// `‖ρP − ρ‖₁` at exit.
    pub residual: f64,
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

impl UlamModel {
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|e| e.1).sum())
            .collect()
    }

    /// `ρP` for a mass vector `ρ`.
    pub fn push(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (i, row) in self.rows.iter().enumerate() {
            let m = rho[i];
            if m == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += m * p;
            }
        }
        out
    }

    /// Density value (mass times bin count) per bin.
    pub fn density(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m * self.bins as f64).collect()
    }

    pub fn dump(&self) -> Vec<DensityBin> {
        let b = self.bins as f64;
        self.mass
            .iter()
            .enumerate()
            .map(|(k, &mass)| DensityBin {
                lo: k as f64 / b,
                hi: (k + 1) as f64 / b,
                mass,
            })
            .collect()
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Ulam matrix of `g` on `bins` bins and its stationary density.
pub fn ulam_model<S: Scalar>(g: &ExpandingMap<S>, bins: usize) -> Result<UlamModel> {
    if bins < 2 {
        return Err(Error::Parameters(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let width = 1.0 / bins as f64;
    // Piece k splits into cells [t_j, t_{j+1}] (in either order), cell j
    // landing in target bin j.
    let cells: Vec<Vec<f64>> = (0..g.pieces().len())
        .into_par_iter()
        .map(|k| {
            (0..=bins)
                .map(|j| {
                    g.piece_preimage(k, &S::from_ratio(j as i64, bins as i64))
                        .to_f64()
                })
                .collect()
        })
        .collect();

    let mut triplets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); bins];
    for edges in &cells {
        for j in 0..bins {
            let (lo, hi) = if edges[j] <= edges[j + 1] {
                (edges[j], edges[j + 1])
            } else {
                (edges[j + 1], edges[j])
            };
            if hi <= lo {
                continue;
            }
            let first = ((lo / width).floor() as usize).min(bins - 1);
            let last = ((hi / width).ceil() as usize).clamp(first + 1, bins);
            for (i, row) in triplets.iter_mut().enumerate().take(last).skip(first) {
                let a = lo.max(i as f64 * width);
                let b = hi.min((i + 1) as f64 * width);
                if b > a {
                    row.push((j, (b - a) / width));
                }
            }
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = triplets
        .into_iter()
        .map(|mut row| {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, p) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += p,
                    _ => merged.push((j, p)),
                }
            }
            // remove the rounding drift of the edge preimages
            let total: f64 = merged.iter().map(|e| e.1).sum();
            for e in &mut merged {
                e.1 /= total;
            }
            merged
        })
        .collect();

    let mut model = UlamModel {
        bins,
        rows,
        mass: vec![width; bins],
        residual: f64::INFINITY,
        sweeps: 0,
    };
    for sweep in 1..=MAX_SWEEPS {
        let next = model.push(&model.mass);
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|m| m / total).collect();
        let residual = l1(&model.push(&next), &next);
        model.mass = next;
        model.residual = residual;
        model.sweeps = sweep;
        if residual <= STATIONARY_TOL {
            return Ok(model);
        }
    }
    Err(Error::Numerical(format!(
        "power iteration stalled at residual {:.3e} after {MAX_SWEEPS} sweeps",
        model.residual
    )))
}

/// Largest gap in `[0,1]` left by `x, g(x), …, g^M(x)`, counting the gaps
/// to 0 and to 1.
pub fn orbit_density_gap<S: Scalar>(g: &ExpandingMap<S>, x: &S, steps: usize) -> Result<f64> {
    let mut points = Vec::with_capacity(steps + 1);
    let mut y = x.clone();
    points.push(y.to_f64());
    for _ in 0..steps {
        y = g.eval(&y)?;
        points.push(y.to_f64());
    }
    points.sort_by(f64::total_cmp);
    let mut gap = points[0].max(1.0 - points[points.len() - 1]);
    for w in points.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    Ok(gap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub seed: u64,
    #[serde(rename = "M")]
    pub steps: usize,
    pub max_gap: f64,
}

/// [`orbit_density_gap`] for each seed, starting from the first uniform
/// draw of a ChaCha8 stream seeded with it.
pub fn density_gap_records<S: Scalar>(
    g: &ExpandingMap<S>,
    seeds: std::ops::Range<u64>,
    steps: usize,
) -> Result<Vec<GapRecord>> {
    seeds
        .into_par_iter()
        .map(|seed| {
            let x = S::from_f64(ChaCha8Rng::seed_from_u64(seed).gen::<f64>());
            Ok(GapRecord {
                seed,
                steps,
                max_gap: orbit_density_gap(g, &x, steps)?,
            })
        })
        .collect()
}

/// Histogram (mass per bin) of `samples` iterates of `g` after `burn_in`.
pub fn pushforward_histogram<S: Scalar>(
    g: &ExpandingMap<S>,
    x: &S,
    burn_in: usize,
    samples: usize,
    bins: usize,
) -> Result<Vec<f64>> {
    let mut y = x.clone();
    for _ in 0..burn_in {
        y = g.eval(&y)?;
    }
    let mut counts = vec![0usize; bins];
    for _ in 0..samples {
        y = g.eval(&y)?;
        let k = ((y.to_f64() * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / samples as f64).collect())
}

/// `½ Σ |p_k − q_k|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * l1(p, q)
}

/// Outcome of probing `|Dg|` by central differences inside each piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionAudit {
    pub expansion: f64,
    pub min_slope: f64,
    pub probes: usize,
    pub violations: usize,
}

pub fn expansion_audit<S: Scalar>(g: &ExpandingMap<S>, probes_per_piece: usize) -> ExpansionAudit {
    let c = g.expansion().to_f64();
    let mut min_slope = f64::INFINITY;
    let mut violations = 0;
    let mut probes = 0;
    for (k, piece) in g.pieces().iter().enumerate() {
        let (lo, hi) = (piece.domain.lo().to_f64(), piece.domain.hi().to_f64());
        if hi <= lo {
            continue;
        }
        // work in the preimage coordinate so the probes stay inside the piece
        for t in 1..=probes_per_piece {
            let u = t as f64 / (probes_per_piece + 1) as f64;
            let h = 1e-6 / (probes_per_piece + 1) as f64;
            let a = g.piece_preimage(k, &S::from_f64(u - h)).to_f64();
            let b = g.piece_preimage(k, &S::from_f64(u + h)).to_f64();
            let slope = (2.0 * h / (b - a)).abs();
            probes += 1;
            min_slope = min_slope.min(slope);
            if slope < c * (1.0 - 1e-6) {
                violations += 1;
            }
        }
    }
    ExpansionAudit {
        expansion: c,
        min_slope,
        probes,
        violations,
    }
}
