//! Finite sequences of operators with an optional tail descriptor.

use crate::error::{Error, Result};
use crate::qps::Hermitian;
use crate::scalar::Real;

/// What the sequence does after its stored prefix.
#[derive(Clone, Debug)]
pub enum Tail<R: Real> {
    None,
    /// `f_n = c` for every `n` past the prefix.
    Constant(Hermitian<R>),
    /// Row-major `rows × cols` grid of `f_{n,m}` with a constant corner beyond both edges.
    Grid2d { rows: usize, cols: usize, corner: Hermitian<R> },
}

#[derive(Clone, Debug)]
pub struct OperatorSequence<R: Real> {
    entries: Vec<Hermitian<R>>,
    tail: Tail<R>,
}

impl<R: Real> OperatorSequence<R> {
    pub fn new(entries: Vec<Hermitian<R>>) -> Result<Self> {
        Self::with_tail(entries, Tail::None)
    }

    pub fn with_constant_tail(entries: Vec<Hermitian<R>>, tail: Hermitian<R>) -> Result<Self> {
        Self::with_tail(entries, Tail::Constant(tail))
    }

    pub fn grid2d(entries: Vec<Hermitian<R>>, rows: usize, cols: usize, corner: Hermitian<R>) -> Result<Self> {
        if rows * cols != entries.len() {
            return Err(Error::InvalidParameter(format!(
                "grid {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::with_tail(entries, Tail::Grid2d { rows, cols, corner })
    }

    pub fn with_tail(entries: Vec<Hermitian<R>>, tail: Tail<R>) -> Result<Self> {
        let dim = match (entries.first(), &tail) {
            (Some(f), _) => f.dim(),
            (None, Tail::Constant(c)) | (None, Tail::Grid2d { corner: c, .. }) => c.dim(),
            (None, Tail::None) => return Err(Error::InvalidParameter("empty sequence".into())),
        };
        for f in &entries {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch(dim, f.dim()));
            }
        }
        match &tail {
            Tail::Constant(c) | Tail::Grid2d { corner: c, .. } if c.dim() != dim => {
                return Err(Error::DimensionMismatch(dim, c.dim()));
            }
            _ => {}
        }
        Ok(Self { entries, tail })
    }

    pub fn entries(&self) -> &[Hermitian<R>] {
        &self.entries
    }

    pub fn tail(&self) -> &Tail<R> {
        &self.tail
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        match (self.entries.first(), &self.tail) {
            (Some(f), _) => f.dim(),
            (None, Tail::Constant(c)) | (None, Tail::Grid2d { corner: c, .. }) => c.dim(),
            (None, Tail::None) => 0,
        }
    }

    pub fn tail_operator(&self) -> Option<&Hermitian<R>> {
        match &self.tail {
            Tail::None => None,
            Tail::Constant(c) | Tail::Grid2d { corner: c, .. } => Some(c),
        }
    }

    /// Grid entry `f_{n,m}` (zero-based) for a `Grid2d` sequence.
    pub fn at(&self, n: usize, m: usize) -> Option<&Hermitian<R>> {
        match &self.tail {
            Tail::Grid2d { rows, cols, .. } if n < *rows && m < *cols => Some(&self.entries[n * cols + m]),
            _ => None,
        }
    }

    /// Prefix with the tail appended once: the finite family whose majorants equal the whole sequence's.
    pub fn folded(&self) -> Vec<Hermitian<R>> {
        let mut out = self.entries.clone();
        if let Some(c) = self.tail_operator() {
            out.push(c.clone());
        }
        out
    }

    pub fn map<F: Fn(&Hermitian<R>) -> Hermitian<R>>(&self, f: F) -> Self {
        let tail = match &self.tail {
            Tail::None => Tail::None,
            Tail::Constant(c) => Tail::Constant(f(c)),
            Tail::Grid2d { rows, cols, corner } => Tail::Grid2d { rows: *rows, cols: *cols, corner: f(corner) },
        };
        Self { entries: self.entries.iter().map(&f).collect(), tail }
    }
}
