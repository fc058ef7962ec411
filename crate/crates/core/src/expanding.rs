//! The expanding left-inverse `g` shared by every map over one branch system.
//!
//! `g` is `φ_i^{-1}` on each image `A_i` and the increasing affine
//! surjection `L_j` onto `[0,1]` on each gap `B_j`. Images are closed and
//! own shared endpoints; `g(0) = 0` and `g(1) = 1`.

use crate::branch::{BranchDescriptor, BranchSystem};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    /// `φ_i^{-1}` on `A_i` (0-based branch).
    Inverse { branch: usize },
    /// `L_j` on `B_j` (0-based gap).
    Gap { index: usize },
}

#[derive(Clone, Debug)]
pub struct Piece<S: Scalar> {
    pub domain: Interval<S>,
    pub kind: PieceKind,
}

#[derive(Clone, Debug)]
pub struct ExpandingMap<S: Scalar> {
    pieces: Vec<Piece<S>>,
    branches: Vec<BranchDescriptor<S>>,
    expansion: S,
}

impl<S: Scalar> ExpandingMap<S> {
    /// Build `g` for a validated (non-general) system.
    pub fn build(system: &BranchSystem<S>) -> Result<Self> {
        if system.is_general() {
            return Err(Error::GeneralMode("build_inverse"));
        }
        let mut pieces: Vec<Piece<S>> = Vec::with_capacity(2 * system.n() + 1);
        let last_gap = system.gaps().len() - 1;
        for (j, b) in system.gaps().iter().enumerate() {
            let domain = if j == last_gap {
                Interval::raw(b.lo().clone(), S::one(), false, true)
            } else {
                b.clone()
            };
            pieces.push(Piece {
                domain,
                kind: PieceKind::Gap { index: j },
            });
        }
        for (i, a) in system.images().iter().enumerate() {
            pieces.push(Piece {
                domain: a.clone(),
                kind: PieceKind::Inverse { branch: i },
            });
        }
        pieces.sort_by(|p, q| p.domain.lo().total_cmp(q.domain.lo()));

        let mut expansion: Option<S> = None;
        let mut fold = |c: S| {
            expansion = Some(match expansion.take() {
                Some(e) => e.min_s(c),
                None => c,
            })
        };
        for kappa in system.contraction_constants() {
            fold(S::one() / kappa.clone());
        }
        for b in system.gaps() {
            fold(S::one() / b.length());
        }
        Ok(ExpandingMap {
            pieces,
            branches: system.branches().to_vec(),
            expansion: expansion.expect("nonempty system"),
        })
    }

    /// The partition `K_1, …, K_{2n+1}` of `[0,1]`, left to right.
    pub fn pieces(&self) -> &[Piece<S>] {
        &self.pieces
    }

    /// Lower bound `c > 1` for `|Dg|` on piece interiors.
    pub fn expansion(&self) -> &S {
        &self.expansion
    }

    fn check_domain(x: &S) -> Result<()> {
        if *x < S::zero() || *x > S::one() {
            Err(Error::Domain {
                x: x.to_string(),
                domain: "[0,1]",
            })
        } else {
            Ok(())
        }
    }

    /// Index of the partition piece containing `x`.
    pub fn piece_index(&self, x: &S) -> Result<usize> {
        Self::check_domain(x)?;
        Ok(self.piece_index_unchecked(x))
    }

    pub(crate) fn piece_index_unchecked(&self, x: &S) -> usize {
        let k = self.pieces.partition_point(|p| *p.domain.hi() < *x);
        let k = k.min(self.pieces.len() - 1);
        if self.pieces[k].domain.contains(x) {
            k
        } else {
            (k + 1).min(self.pieces.len() - 1)
        }
    }

    fn apply_piece(&self, k: usize, x: &S) -> S {
        let p = &self.pieces[k];
        match p.kind {
            PieceKind::Inverse { branch } => self.branches[branch]
                .inverse(x)
                .expect("inverse exists for validated branches"),
            PieceKind::Gap { .. } => (x.clone() - p.domain.lo().clone()) / p.domain.length(),
        }
    }

    pub fn eval(&self, x: &S) -> Result<S> {
        let k = self.piece_index(x)?;
        Ok(self.apply_piece(k, x))
    }

    /// `Dg(x)` on the piece containing `x`.
    pub fn derivative(&self, x: &S) -> Result<S> {
        let k = self.piece_index(x)?;
        let p = &self.pieces[k];
        Ok(match p.kind {
            PieceKind::Inverse { branch } => {
                let b = &self.branches[branch];
                S::one() / b.derivative(&self.apply_piece(k, x))
            }
            PieceKind::Gap { .. } => S::one() / p.domain.length(),
        })
    }

    /// The inverse of `g` restricted to piece `k`: the point of `K_k` that
    /// `g` sends to `y ∈ [0,1]`.
    pub fn piece_preimage(&self, k: usize, y: &S) -> S {
        let p = &self.pieces[k];
        match p.kind {
            PieceKind::Inverse { branch } => self.branches[branch].eval(y),
            PieceKind::Gap { .. } => p.domain.lo().clone() + y.clone() * p.domain.length(),
        }
    }

    /// `true` when `g` is increasing on piece `k`.
    pub fn piece_increasing(&self, k: usize) -> bool {
        match self.pieces[k].kind {
            PieceKind::Inverse { branch } => self.branches[branch].is_increasing(),
            PieceKind::Gap { .. } => true,
        }
    }
}
