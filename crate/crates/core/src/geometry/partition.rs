use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, GridPartition, IntervalBox};
use crate::Scalar;

/// A symbol of a refined partition: a base grid cell plus the dyadic (or `arity`-adic) path
/// of child indices leading to the leaf.
///
/// Child index digits are mixed radix over the partition dims, first dim fastest.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId {
    pub cell: usize,
    pub path: Vec<u32>,
}

impl SymbolId {
    pub fn root(cell: usize) -> Self {
        Self { cell, path: Vec::new() }
    }

    pub fn child(&self, index: u32) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self { cell: self.cell, path }
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// Dot-separated path, empty for a root symbol.
    pub fn path_string(&self) -> String {
        self.path.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(".")
    }

    pub fn parse_path(text: &str) -> Result<Vec<u32>, std::num::ParseIntError> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split('.').map(str::parse).collect()
    }
}

impl fmt::Debug for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/[{}]", self.cell, self.path_string())
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Leaf,
    /// Children occupy `first..first + fan_out` in the arena.
    Split { first: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct SplitTree {
    nodes: Vec<Node>,
}

impl SplitTree {
    fn leaf() -> Self {
        Self { nodes: vec![Node::Leaf] }
    }

    /// Arena index of the node at `path`, or `None` when the path leaves the tree.
    fn find(&self, path: &[u32], fan_out: usize) -> Option<usize> {
        let mut at = 0;
        for &c in path {
            if c as usize >= fan_out {
                return None;
            }
            match self.nodes[at] {
                Node::Leaf => return None,
                Node::Split { first } => at = first + c as usize,
            }
        }
        Some(at)
    }
}

/// A grid partition whose cells may each be refined into a tree of uniformly split sub-boxes.
///
/// The leaves of every tree tile their base cell. Cells that were never split hold no tree
/// and are a single leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinedPartition<S> {
    base: GridPartition<S>,
    arity: usize,
    fan_out: usize,
    trees: BTreeMap<usize, SplitTree>,
}

impl<S: Scalar> RefinedPartition<S> {
    /// Unrefined partition; each split divides every dimension into `arity` equal parts.
    pub fn new(base: GridPartition<S>, arity: usize) -> Result<Self, GeometryError> {
        if arity < 2 {
            return Err(GeometryError::BadArity(arity));
        }
        let d = base.dims().len() as u32;
        let fan_out = arity
            .checked_pow(d)
            .filter(|&f| f <= u32::MAX as usize)
            .ok_or(GeometryError::BadArity(arity))?;
        Ok(Self { base, arity, fan_out, trees: BTreeMap::new() })
    }

    pub fn base(&self) -> &GridPartition<S> {
        &self.base
    }

    pub fn dims(&self) -> &[usize] {
        self.base.dims()
    }

    pub fn domain(&self) -> &IntervalBox<S> {
        self.base.domain()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of children produced by one split.
    pub fn fan_out(&self) -> usize {
        self.fan_out
    }

    fn node(&self, s: &SymbolId) -> Option<Node> {
        if s.cell >= self.base.cell_count() {
            return None;
        }
        match self.trees.get(&s.cell) {
            None => s.path.is_empty().then_some(Node::Leaf),
            Some(t) => t.find(&s.path, self.fan_out).map(|i| t.nodes[i]),
        }
    }

    /// True when `s` names a node (leaf or interior) of this partition.
    pub fn contains_symbol(&self, s: &SymbolId) -> bool {
        self.node(s).is_some()
    }

    pub fn is_leaf(&self, s: &SymbolId) -> bool {
        matches!(self.node(s), Some(Node::Leaf))
    }

    fn split_point(lo: S, hi: S, j: usize, arity: usize) -> S {
        if j == 0 {
            lo
        } else if j == arity {
            hi
        } else {
            lo + (hi - lo) * S::lit(j as f64) / S::lit(arity as f64)
        }
    }

    fn child_box(&self, parent: &IntervalBox<S>, child: u32) -> IntervalBox<S> {
        let mut rem = child as usize;
        let mut low = Vec::with_capacity(parent.dim_count());
        let mut high = Vec::with_capacity(parent.dim_count());
        for p in 0..parent.dim_count() {
            let j = rem % self.arity;
            rem /= self.arity;
            let (lo, hi) = (parent.low()[p], parent.high()[p]);
            low.push(Self::split_point(lo, hi, j, self.arity));
            high.push(Self::split_point(lo, hi, j + 1, self.arity));
        }
        IntervalBox::new(parent.dims().to_vec(), low, high).expect("child of a valid box")
    }

    /// Box of any node (leaf or interior) named by `s`.
    pub fn symbol_box(&self, s: &SymbolId) -> Result<IntervalBox<S>, GeometryError> {
        if s.cell >= self.base.cell_count() || s.path.iter().any(|&c| c as usize >= self.fan_out) {
            return Err(GeometryError::UnknownSymbol(s.clone()));
        }
        let mut b = self.base.cell_box(s.cell);
        for &c in &s.path {
            b = self.child_box(&b, c);
        }
        Ok(b)
    }

    /// The unique leaf containing `x` under the half-open convention, closed on the domain top.
    pub fn locate(&self, x: &[S]) -> Result<SymbolId, GeometryError> {
        if x.len() != self.dims().len() {
            return Err(GeometryError::OutOfDomain);
        }
        let cell = self.base.locate(x)?;
        let mut id = SymbolId::root(cell);
        let Some(tree) = self.trees.get(&cell) else {
            return Ok(id);
        };
        let mut b = self.base.cell_box(cell);
        let mut at = 0;
        while let Node::Split { first } = tree.nodes[at] {
            let mut child = 0usize;
            let mut stride = 1usize;
            for p in 0..b.dim_count() {
                let (lo, hi) = (b.low()[p], b.high()[p]);
                // Largest j with split_point(j) <= x, capped so the top face stays in the last child.
                let mut j = 0;
                while j + 1 < self.arity && Self::split_point(lo, hi, j + 1, self.arity) <= x[p] {
                    j += 1;
                }
                child += j * stride;
                stride *= self.arity;
            }
            id.path.push(child as u32);
            b = self.child_box(&b, child as u32);
            at = first + child;
        }
        Ok(id)
    }

    /// Replaces leaf `s` by `fan_out` identical children and returns them in index order.
    pub fn split(&mut self, s: &SymbolId) -> Result<Vec<SymbolId>, GeometryError> {
        if !self.is_leaf(s) {
            return Err(GeometryError::NotALeaf(s.clone()));
        }
        let fan_out = self.fan_out;
        let tree = self.trees.entry(s.cell).or_insert_with(SplitTree::leaf);
        let at = tree.find(&s.path, fan_out).expect("leaf exists");
        let first = tree.nodes.len();
        tree.nodes.extend(std::iter::repeat_n(Node::Leaf, fan_out));
        tree.nodes[at] = Node::Split { first };
        Ok((0..fan_out as u32).map(|c| s.child(c)).collect())
    }

    /// Leaves of base cell `cell` in depth-first child order.
    pub fn leaves_in_cell(&self, cell: usize) -> Vec<SymbolId> {
        let root = SymbolId::root(cell);
        let Some(tree) = self.trees.get(&cell) else {
            return vec![root];
        };
        let mut out = Vec::new();
        let mut stack = vec![(0usize, root)];
        while let Some((at, id)) = stack.pop() {
            match tree.nodes[at] {
                Node::Leaf => out.push(id),
                Node::Split { first } => {
                    for c in (0..self.fan_out).rev() {
                        stack.push((first + c, id.child(c as u32)));
                    }
                }
            }
        }
        out
    }

    /// Every leaf of the partition, cell by cell.
    pub fn leaves(&self) -> Vec<SymbolId> {
        (0..self.base.cell_count()).flat_map(|c| self.leaves_in_cell(c)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        let split: usize = self
            .trees
            .values()
            .map(|t| t.nodes.iter().filter(|n| matches!(n, Node::Leaf)).count())
            .sum();
        self.base.cell_count() - self.trees.len() + split
    }

    /// Deepest leaf depth inside `cell`.
    pub fn depth(&self, cell: usize) -> usize {
        self.leaves_in_cell(cell).iter().map(SymbolId::depth).max().unwrap_or(0)
    }

    /// Base cells that have been split at least once.
    pub fn refined_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.trees.keys().copied()
    }

    /// Leaves whose closed box meets the closed box `b`, with their boxes, in symbol order.
    pub fn leaves_meeting(&self, b: &IntervalBox<S>) -> Vec<(SymbolId, IntervalBox<S>)> {
        let mut out = Vec::new();
        if b.dims() != self.dims() {
            return out;
        }
        for cell in self.base.cells_meeting(b) {
            let cb = self.base.cell_box(cell);
            let Some(tree) = self.trees.get(&cell) else {
                out.push((SymbolId::root(cell), cb));
                continue;
            };
            let mut stack = vec![(0usize, SymbolId::root(cell), cb)];
            while let Some((at, id, nb)) = stack.pop() {
                match tree.nodes[at] {
                    Node::Leaf => out.push((id, nb)),
                    Node::Split { first } => {
                        for c in (0..self.fan_out).rev() {
                            let child = self.child_box(&nb, c as u32);
                            if child.intersects(b) {
                                stack.push((first + c, id.child(c as u32), child));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Exact test of `b ⊆ ⋃ { box(s) : s ∈ region }` with closed symbol boxes.
    ///
    /// Symbols of `region` that are not leaves of this partition are ignored.
    pub fn covered_by(&self, b: &IntervalBox<S>, region: &BTreeSet<SymbolId>) -> bool {
        if b.dims() != self.dims() || !b.is_subset_of(self.domain()) {
            return false;
        }
        let candidates = self.leaves_meeting(b);
        let valid: Vec<&IntervalBox<S>> = candidates
            .iter()
            .filter(|(id, _)| region.contains(id))
            .map(|(_, bx)| bx)
            .collect();
        if valid.is_empty() {
            return false;
        }
        if valid.iter().any(|v| b.is_subset_of(v)) {
            return true;
        }
        let degenerate = (0..b.dim_count()).any(|p| b.width(p) <= S::zero());
        if !degenerate {
            // Leaf interiors are disjoint from the closure of every other leaf, so a full-dimensional
            // box is covered exactly when it avoids the interior of every leaf outside the region.
            return candidates
                .iter()
                .all(|(id, bx)| region.contains(id) || !bx.interiors_overlap(b));
        }
        covered_by_elementary_cells(b, &candidates.iter().map(|(_, bx)| bx).collect::<Vec<_>>(), &valid)
    }
}

/// Splits `b` along every candidate face inside it; each elementary piece lies in one leaf's
/// closure, so coverage holds iff every piece is inside some valid closed box.
fn covered_by_elementary_cells<S: Scalar>(
    b: &IntervalBox<S>,
    candidates: &[&IntervalBox<S>],
    valid: &[&IntervalBox<S>],
) -> bool {
    let d = b.dim_count();
    let mut breaks: Vec<Vec<S>> = Vec::with_capacity(d);
    for p in 0..d {
        let (lo, hi) = (b.low()[p], b.high()[p]);
        let mut v = vec![lo, hi];
        for c in candidates {
            for x in [c.low()[p], c.high()[p]] {
                if lo < x && x < hi {
                    v.push(x);
                }
            }
        }
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        v.dedup();
        breaks.push(v);
    }
    // Piece count per dim: intervals between breaks, or the single point for degenerate dims.
    let counts: Vec<usize> = breaks.iter().map(|v| v.len().saturating_sub(1).max(1)).collect();
    let mut idx = vec![0usize; d];
    let mut low = vec![S::zero(); d];
    let mut high = vec![S::zero(); d];
    loop {
        for p in 0..d {
            low[p] = breaks[p][idx[p]];
            high[p] = if breaks[p].len() == 1 { breaks[p][0] } else { breaks[p][idx[p] + 1] };
        }
        let inside = valid.iter().any(|v| {
            (0..d).all(|p| v.low()[p] <= low[p] && high[p] <= v.high()[p])
        });
        if !inside {
            return false;
        }
        let mut p = 0;
        loop {
            if p == d {
                return true;
            }
            idx[p] += 1;
            if idx[p] < counts[p] {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}
