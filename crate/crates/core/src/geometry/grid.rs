use crate::geometry::{GeometryError, IntervalBox};
use crate::Scalar;

/// Rectilinear grid over a box: the Cartesian product of one interval partition per dimension.
///
/// Cells are indexed in mixed radix with the first dimension varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPartition<S> {
    domain: IntervalBox<S>,
    /// Interior cut points per dimension position, strictly increasing and strictly inside the domain.
    cuts: Vec<Vec<S>>,
}

impl<S: Scalar> GridPartition<S> {
    pub fn new(domain: IntervalBox<S>, cuts: Vec<Vec<S>>) -> Result<Self, GeometryError> {
        if cuts.len() != domain.dim_count() {
            return Err(GeometryError::LengthMismatch {
                dims: domain.dim_count(),
                low: cuts.len(),
                high: cuts.len(),
            });
        }
        for (pos, c) in cuts.iter().enumerate() {
            let (lo, hi) = (domain.low()[pos], domain.high()[pos]);
            let sorted = c.windows(2).all(|w| w[0] < w[1]);
            let inside = c.iter().all(|&v| lo < v && v < hi);
            if !sorted || !inside {
                return Err(GeometryError::BadCuts(domain.dims()[pos]));
            }
        }
        Ok(Self { domain, cuts })
    }

    /// `cells[pos]` equal-width cells along each dimension.
    pub fn uniform(domain: IntervalBox<S>, cells: &[usize]) -> Result<Self, GeometryError> {
        let mut cuts = Vec::with_capacity(cells.len());
        for (pos, &n) in cells.iter().enumerate() {
            if n == 0 {
                return Err(GeometryError::BadCuts(domain.dims()[pos]));
            }
            let (lo, hi) = (domain.low()[pos], domain.high()[pos]);
            let step = (hi - lo) / S::lit(n as f64);
            cuts.push((1..n).map(|j| lo + step * S::lit(j as f64)).collect());
        }
        Self::new(domain, cuts)
    }

    pub fn domain(&self) -> &IntervalBox<S> {
        &self.domain
    }

    pub fn dims(&self) -> &[usize] {
        self.domain.dims()
    }

    pub fn cuts(&self) -> &[Vec<S>] {
        &self.cuts
    }

    pub fn cells_along(&self, pos: usize) -> usize {
        self.cuts[pos].len() + 1
    }

    pub fn cell_count(&self) -> usize {
        (0..self.cuts.len()).map(|p| self.cells_along(p)).product()
    }

    /// Bounds of the `i`-th interval along dimension position `pos`.
    pub fn interval(&self, pos: usize, i: usize) -> (S, S) {
        let c = &self.cuts[pos];
        let lo = if i == 0 { self.domain.low()[pos] } else { c[i - 1] };
        let hi = if i == c.len() { self.domain.high()[pos] } else { c[i] };
        (lo, hi)
    }

    pub fn cell_coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cuts.len());
        for p in 0..self.cuts.len() {
            let n = self.cells_along(p);
            out.push(index % n);
            index /= n;
        }
        out
    }

    pub fn cell_index(&self, coords: &[usize]) -> Result<usize, GeometryError> {
        if coords.len() != self.cuts.len() {
            return Err(GeometryError::BadCell(coords.to_vec()));
        }
        let mut index = 0;
        let mut stride = 1;
        for (p, &c) in coords.iter().enumerate() {
            let n = self.cells_along(p);
            if c >= n {
                return Err(GeometryError::BadCell(coords.to_vec()));
            }
            index += c * stride;
            stride *= n;
        }
        Ok(index)
    }

    pub fn cell_box(&self, index: usize) -> IntervalBox<S> {
        let coords = self.cell_coords(index);
        let (low, high): (Vec<S>, Vec<S>) =
            coords.iter().enumerate().map(|(p, &i)| self.interval(p, i)).unzip();
        IntervalBox::new(self.dims().to_vec(), low, high).expect("grid cell is a valid box")
    }

    /// Interval index along `pos` holding `v` under the half-open convention.
    pub fn locate_coord(&self, pos: usize, v: S) -> Option<usize> {
        let (lo, hi) = (self.domain.low()[pos], self.domain.high()[pos]);
        if !(lo <= v && v <= hi) {
            return None;
        }
        Some(self.cuts[pos].partition_point(|&c| c <= v))
    }

    /// Cell holding point `x` (coordinates ordered like `dims()`).
    pub fn locate(&self, x: &[S]) -> Result<usize, GeometryError> {
        let mut coords = Vec::with_capacity(x.len());
        for (p, &v) in x.iter().enumerate() {
            let c = self.locate_coord(p, v).ok_or(GeometryError::OutOfDomain)?;
            coords.push(c);
        }
        self.cell_index(&coords)
    }

    /// Closed range of interval indices along `pos` meeting `[lo, hi]`, clipped to the domain.
    pub fn index_range(&self, pos: usize, lo: S, hi: S) -> Option<(usize, usize)> {
        let (dlo, dhi) = (self.domain.low()[pos], self.domain.high()[pos]);
        if hi < dlo || lo > dhi {
            return None;
        }
        let c = &self.cuts[pos];
        // Closed intervals: a cell [c_{i-1}, c_i] meets [lo, hi] iff c_{i-1} <= hi and lo <= c_i.
        let first = c.partition_point(|&v| v < lo);
        let last = c.partition_point(|&v| v <= hi);
        Some((first, last))
    }

    /// Cells whose closed box meets `b` (same dims), in index order.
    pub fn cells_meeting(&self, b: &IntervalBox<S>) -> Vec<usize> {
        let mut ranges = Vec::with_capacity(self.cuts.len());
        for p in 0..self.cuts.len() {
            match self.index_range(p, b.low()[p], b.high()[p]) {
                Some(r) => ranges.push(r),
                None => return Vec::new(),
            }
        }
        let mut out = Vec::new();
        let mut coords: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.cell_index(&coords).expect("coords in range"));
            let mut p = 0;
            loop {
                if p == coords.len() {
                    out.sort_unstable();
                    return out;
                }
                if coords[p] < ranges[p].1 {
                    coords[p] += 1;
                    break;
                }
                coords[p] = ranges[p].0;
                p += 1;
            }
        }
    }

    /// Grid restricted to `dims` (a subset of this grid's dims).
    pub fn project(&self, dims: &[usize]) -> Result<Self, GeometryError> {
        let domain = self.domain.project(dims)?;
        let cuts = dims
            .iter()
            .map(|&d| self.cuts[self.domain.position(d).expect("checked by project")].clone())
            .collect();
        Self::new(domain, cuts)
    }

    /// Index in `projected` (obtained from `self.project(dims)`) of the projection of cell `index`.
    pub fn project_cell(&self, index: usize, projected: &Self) -> Result<usize, GeometryError> {
        let coords = self.cell_coords(index);
        let mut sub = Vec::with_capacity(projected.dims().len());
        for &d in projected.dims() {
            let p = self.domain.position(d).ok_or(GeometryError::NotASubset(d))?;
            sub.push(coords[p]);
        }
        projected.cell_index(&sub)
    }
}
