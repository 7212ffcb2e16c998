use std::collections::BTreeSet;

use compref::{GridPartition, IntervalBox, RefinedPartition, SymbolId};
use proptest::prelude::*;

fn unit_square_grid(cells: usize) -> GridPartition<f64> {
    let domain = IntervalBox::from_bounds(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    GridPartition::uniform(domain, &[cells, cells]).unwrap()
}

/// Randomly refined 2-D partition: each step splits the leaf containing a drawn point.
fn refined(cells: usize, arity: usize, points: &[(f64, f64)]) -> RefinedPartition<f64> {
    let mut part = RefinedPartition::new(unit_square_grid(cells), arity).unwrap();
    for &(x, y) in points {
        let leaf = part.locate(&[x, y]).unwrap();
        if leaf.depth() < 4 {
            part.split(&leaf).unwrap();
        }
    }
    part
}

fn overlap_volume(a: &IntervalBox<f64>, b: &IntervalBox<f64>) -> f64 {
    (0..a.dim_count())
        .map(|p| (a.high()[p].min(b.high()[p]) - a.low()[p].max(b.low()[p])).max(0.0))
        .product()
}

fn point() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.0f64, 0.0..1.0f64)
}

proptest! {
    #[test]
    fn leaves_tile_the_domain(
        cells in 1usize..4,
        arity in 2usize..4,
        pts in prop::collection::vec(point(), 0..12),
    ) {
        let part = refined(cells, arity, &pts);
        let leaves = part.leaves();
        prop_assert_eq!(leaves.len(), part.leaf_count());
        let boxes: Vec<_> = leaves.iter().map(|s| part.symbol_box(s).unwrap()).collect();
        let total: f64 = boxes.iter().map(IntervalBox::volume).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                prop_assert!(!boxes[i].interiors_overlap(&boxes[j]));
            }
        }
    }

    #[test]
    fn locate_returns_the_leaf_of_its_center(
        cells in 1usize..4,
        arity in 2usize..4,
        pts in prop::collection::vec(point(), 0..12),
    ) {
        let part = refined(cells, arity, &pts);
        for leaf in part.leaves() {
            let b = part.symbol_box(&leaf).unwrap();
            prop_assert_eq!(part.locate(&b.center()).unwrap(), leaf);
        }
    }

    #[test]
    fn located_leaf_contains_the_point(
        pts in prop::collection::vec(point(), 0..12),
        q in point(),
    ) {
        let part = refined(2, 2, &pts);
        let leaf = part.locate(&[q.0, q.1]).unwrap();
        prop_assert!(part.is_leaf(&leaf));
        prop_assert!(part.symbol_box(&leaf).unwrap().contains_point(&[q.0, q.1]));
    }

    /// A full-dimensional box is covered by a set of leaves exactly when the leaves' overlap
    /// volumes with it add up to its volume.
    #[test]
    fn covered_by_matches_volume_oracle(
        pts in prop::collection::vec(point(), 0..10),
        mask in any::<u64>(),
        a in point(),
        b in point(),
    ) {
        let part = refined(2, 2, &pts);
        let leaves = part.leaves();
        let region: BTreeSet<SymbolId> = leaves
            .iter()
            .enumerate()
            .filter(|(i, _)| (mask >> (i % 64)) & 1 == 1)
            .map(|(_, s)| s.clone())
            .collect();
        let (lo, hi) = ([a.0.min(b.0), a.1.min(b.1)], [a.0.max(b.0), a.1.max(b.1)]);
        prop_assume!(hi[0] - lo[0] > 1e-6 && hi[1] - lo[1] > 1e-6);
        let query = IntervalBox::from_bounds(lo.to_vec(), hi.to_vec()).unwrap();
        let covered: f64 = region
            .iter()
            .map(|s| overlap_volume(&part.symbol_box(s).unwrap(), &query))
            .sum();
        let oracle = (covered - query.volume()).abs() <= 1e-12 * query.volume().max(1.0);
        prop_assert_eq!(part.covered_by(&query, &region), oracle);
    }
}

#[test]
fn domain_top_face_belongs_to_last_cell() {
    let part = RefinedPartition::new(unit_square_grid(2), 2).unwrap();
    assert_eq!(part.locate(&[1.0, 1.0]).unwrap(), SymbolId::root(3));
    assert!(part.locate(&[1.0 + 1e-9, 0.5]).is_err());
}

#[test]
fn split_children_follow_first_coordinate_fastest() {
    let mut part = RefinedPartition::new(unit_square_grid(1), 2).unwrap();
    let kids = part.split(&SymbolId::root(0)).unwrap();
    assert_eq!(kids.len(), 4);
    let b = part.symbol_box(&kids[1]).unwrap();
    assert_eq!((b.low().to_vec(), b.high().to_vec()), (vec![0.5, 0.0], vec![1.0, 0.5]));
    assert!(part.split(&SymbolId::root(0)).is_err());
}
