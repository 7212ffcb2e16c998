mod common;

use compref::decomposition::{control_grid, validate_decomposition, DecompositionError, ProblemError};
use compref::SubsystemSpec;

use common::planar_problem;

fn spec(id: usize, c: &[usize], o: &[usize], j: &[usize]) -> SubsystemSpec {
    SubsystemSpec::new(id, c, o, j)
}

#[test]
fn decomposition_errors() {
    let ok = [spec(0, &[0], &[1], &[0]), spec(1, &[1], &[], &[1])];
    assert_eq!(validate_decomposition(&ok, 2, 2), Ok(()));
    let cases = [
        (vec![spec(0, &[0, 1], &[], &[0]), spec(1, &[1], &[], &[1])], DecompositionError::Overlap(1)),
        (vec![spec(0, &[0], &[], &[0, 1])], DecompositionError::Uncovered(1)),
        (vec![spec(0, &[0], &[], &[0]), spec(1, &[1], &[], &[0])], DecompositionError::ControlOverlap(0)),
        (vec![spec(0, &[0], &[], &[0]), spec(1, &[1], &[], &[])], DecompositionError::ControlUncovered(1)),
        (
            vec![spec(0, &[0], &[0], &[0]), spec(1, &[1], &[], &[1])],
            DecompositionError::ControlledAndObserved { subsystem: 0, dim: 0 },
        ),
        (vec![spec(0, &[0, 5], &[], &[0, 1])], DecompositionError::OutOfRange { subsystem: 0, index: 5 }),
        (vec![spec(0, &[], &[0], &[0])], DecompositionError::Empty(0)),
    ];
    for (subs, expected) in cases {
        assert_eq!(validate_decomposition(&subs, 2, 2), Err(expected));
    }
}

#[test]
fn index_sets() {
    let s = spec(3, &[1], &[3], &[1]);
    assert_eq!(s.modeled(), vec![1, 3]);
    assert_eq!(s.unobserved(5), vec![0, 2, 4]);
    assert_eq!(s.external_controls(3), vec![0, 2]);
}

#[test]
fn control_grid_varies_first_coordinate_fastest() {
    let g = control_grid(2, &[0.0, 1.0, 2.0]);
    assert_eq!(g.len(), 9);
    assert_eq!(g[1], vec![1.0, 0.0]);
    assert_eq!(g[3], vec![0.0, 1.0]);
}

#[test]
fn problem_cross_checks() {
    let mut p = planar_problem();
    p.control_values.pop();
    assert_eq!(p.abstractions().unwrap_err(), ProblemError::ControlLists { subsystems: 2, lists: 1 });
    let mut p = planar_problem();
    p.control_values[1] = vec![vec![0.5]];
    assert!(matches!(p.abstractions().unwrap_err(), ProblemError::Abstraction { subsystem: 1, .. }));
}

/// Reach sets of the coupled toy by interval arithmetic: RS^AG1 lets the unobserved `x₂`
/// range over its whole step cell and the foreign control over its bounds; RS^AG2 clips the
/// observed coordinate to the next step's cell.
#[test]
fn restricted_reach_sets_on_the_planar_toy() {
    let abs = planar_problem().abstractions().unwrap();
    let (s0, s1) = (&abs[0], &abs[1]);
    let root0 = s0.step_symbols(0).unwrap()[0].clone();
    // x ∈ [3,4]², u₁ = −0.3, u₂ ∈ [−1, 0], w ∈ [0, 0.3]².
    let r = s0.rs_ag1(&root0, &[-0.3], 0).unwrap();
    let expect = [(2.1, 2.9 + 0.3), (1.4, 3.5)];
    for (p, (lo, hi)) in expect.into_iter().enumerate() {
        assert!((r.low()[p] - lo).abs() < 1e-12 && (r.high()[p] - hi).abs() < 1e-12, "{r:?}");
    }
    let clipped = s0.rs_ag2(&root0, &[-0.3], 0).unwrap().unwrap();
    assert_eq!((clipped.low()[1], clipped.high()[1]), (2.0, 3.0));
    assert!(s0.audit_observed_obligation(&root0, &[-0.3], 0).unwrap());

    // Subsystem 1 models x₂ only; its clip is a no-op.
    let root1 = s1.step_symbols(0).unwrap()[0].clone();
    let a = s1.rs_ag1(&root1, &[0.0], 0).unwrap();
    assert_eq!(s1.rs_ag2(&root1, &[0.0], 0).unwrap(), Some(a));

    // A target far above the reachable x₂ range empties the clip.
    let mut far = planar_problem();
    far.sequence = std::sync::Arc::new(
        compref::CellSequence::from_coords(far.sequence.grid().clone(), &[vec![3, 0], vec![2, 3], vec![1, 1]])
            .unwrap(),
    );
    let abs = far.abstractions().unwrap();
    let root = abs[0].step_symbols(0).unwrap()[0].clone();
    // From x₂ ∈ [0,1]: x₂⁺ ≤ 0.2·4 + 0.6 + 0.3 = 1.7 < 3, so the clip is empty.
    assert_eq!(abs[0].rs_ag2(&root, &[0.0], 0).unwrap(), None);
    assert!(abs[0].post(&root, &[0.0], 0).unwrap().is_empty());
}
