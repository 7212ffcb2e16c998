use std::fmt;

use crate::geometry::GeometryError;
use crate::Scalar;

/// Axis-aligned closed interval box over a labelled subset of the global dimensions.
///
/// `dims` is strictly increasing; `low[d] <= high[d]` for every position. An empty
/// intersection is never represented by a box: operations that can produce one return
/// `Option<IntervalBox>` and use `None`.
#[derive(Clone, PartialEq)]
pub struct IntervalBox<S> {
    dims: Vec<usize>,
    low: Vec<S>,
    high: Vec<S>,
}

impl<S: Scalar> IntervalBox<S> {
    pub fn new(dims: Vec<usize>, low: Vec<S>, high: Vec<S>) -> Result<Self, GeometryError> {
        if dims.len() != low.len() || dims.len() != high.len() {
            return Err(GeometryError::LengthMismatch {
                dims: dims.len(),
                low: low.len(),
                high: high.len(),
            });
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::UnsortedDims(dims));
        }
        for (pos, (&lo, &hi)) in low.iter().zip(&high).enumerate() {
            if !(lo <= hi) {
                return Err(GeometryError::InvertedBounds {
                    dim: dims[pos],
                    low: lo.as_f64(),
                    high: hi.as_f64(),
                });
            }
        }
        Ok(Self { dims, low, high })
    }

    /// Box over dimensions `0..low.len()`.
    pub fn from_bounds(low: Vec<S>, high: Vec<S>) -> Result<Self, GeometryError> {
        let dims = (0..low.len()).collect();
        Self::new(dims, low, high)
    }

    /// The same interval repeated on each of `dims`.
    pub fn uniform(dims: Vec<usize>, low: S, high: S) -> Result<Self, GeometryError> {
        let k = dims.len();
        Self::new(dims, vec![low; k], vec![high; k])
    }

    /// Degenerate box holding a single point.
    pub fn point(dims: Vec<usize>, x: &[S]) -> Result<Self, GeometryError> {
        Self::new(dims, x.to_vec(), x.to_vec())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn low(&self) -> &[S] {
        &self.low
    }

    pub fn high(&self) -> &[S] {
        &self.high
    }

    pub fn dim_count(&self) -> usize {
        self.dims.len()
    }

    /// Position of global dimension `dim` inside this box, if present.
    pub fn position(&self, dim: usize) -> Option<usize> {
        self.dims.binary_search(&dim).ok()
    }

    /// `(low, high)` on global dimension `dim`.
    pub fn bounds(&self, dim: usize) -> Option<(S, S)> {
        self.position(dim).map(|p| (self.low[p], self.high[p]))
    }

    pub fn width(&self, pos: usize) -> S {
        self.high[pos] - self.low[pos]
    }

    pub fn volume(&self) -> S {
        (0..self.dims.len()).fold(S::one(), |acc, p| acc * self.width(p))
    }

    pub fn center(&self) -> Vec<S> {
        let two = S::lit(2.0);
        self.low.iter().zip(&self.high).map(|(&l, &h)| (l + h) / two).collect()
    }

    /// Projection onto `dims`, which must be a subset of this box's dims.
    pub fn project(&self, dims: &[usize]) -> Result<Self, GeometryError> {
        let mut low = Vec::with_capacity(dims.len());
        let mut high = Vec::with_capacity(dims.len());
        for &d in dims {
            let p = self.position(d).ok_or(GeometryError::NotASubset(d))?;
            low.push(self.low[p]);
            high.push(self.high[p]);
        }
        Self::new(dims.to_vec(), low, high)
    }

    /// Replaces the bounds on `other.dims()` by those of `other`.
    pub fn with_replaced(&self, other: &Self) -> Result<Self, GeometryError> {
        let mut out = self.clone();
        for (q, &d) in other.dims.iter().enumerate() {
            let p = self.position(d).ok_or(GeometryError::NotASubset(d))?;
            out.low[p] = other.low[q];
            out.high[p] = other.high[q];
        }
        Ok(out)
    }

    /// Closed-set membership.
    pub fn contains_point(&self, x: &[S]) -> bool {
        x.len() == self.dims.len()
            && x.iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(&v, (&l, &h))| l <= v && v <= h)
    }

    /// Closed-set inclusion `self ⊆ other` (same dims required).
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dims == other.dims
            && (0..self.dims.len()).all(|p| other.low[p] <= self.low[p] && self.high[p] <= other.high[p])
    }

    /// Closed intersection. Touching boxes yield a degenerate (non-empty) box.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        if self.dims != other.dims {
            return None;
        }
        let mut low = Vec::with_capacity(self.dims.len());
        let mut high = Vec::with_capacity(self.dims.len());
        for p in 0..self.dims.len() {
            let l = self.low[p].max(other.low[p]);
            let h = self.high[p].min(other.high[p]);
            if l > h {
                return None;
            }
            low.push(l);
            high.push(h);
        }
        Some(Self { dims: self.dims.clone(), low, high })
    }

    /// Closed intersection test.
    pub fn intersects(&self, other: &Self) -> bool {
        self.dims == other.dims
            && (0..self.dims.len()).all(|p| self.low[p] <= other.high[p] && other.low[p] <= self.high[p])
    }

    /// True when the open interiors overlap, i.e. the intersection has positive volume.
    pub fn interiors_overlap(&self, other: &Self) -> bool {
        self.dims == other.dims
            && (0..self.dims.len()).all(|p| self.low[p] < other.high[p] && other.low[p] < self.high[p])
    }

    /// Cartesian product of two boxes over disjoint dimension sets.
    pub fn product(&self, other: &Self) -> Result<Self, GeometryError> {
        let mut entries: Vec<(usize, S, S)> = Vec::with_capacity(self.dims.len() + other.dims.len());
        for p in 0..self.dims.len() {
            entries.push((self.dims[p], self.low[p], self.high[p]));
        }
        for p in 0..other.dims.len() {
            if self.position(other.dims[p]).is_some() {
                return Err(GeometryError::SharedDim(other.dims[p]));
            }
            entries.push((other.dims[p], other.low[p], other.high[p]));
        }
        entries.sort_by_key(|e| e.0);
        Self::new(
            entries.iter().map(|e| e.0).collect(),
            entries.iter().map(|e| e.1).collect(),
            entries.iter().map(|e| e.2).collect(),
        )
    }
}

impl<S: fmt::Debug> fmt::Debug for IntervalBox<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Box{")?;
        for p in 0..self.dims.len() {
            if p > 0 {
                f.write_str(", ")?;
            }
            write!(f, "x{}∈[{:?}, {:?}]", self.dims[p], self.low[p], self.high[p])?;
        }
        f.write_str("}")
    }
}
