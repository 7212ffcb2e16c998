use compref::dynamics::DynamicsError;
use compref::ControlSystem;
use compref::ufad::{
    table1, ufad_decomposition, ufad_problem, ufad_schedule, ufad_system, Contact, CountingInputs, Topology,
    UfadError, UfadParams, UfadSettings, ROOMS,
};
use compref::decomposition::validate_decomposition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(sys: &ControlSystem<f64>, x: &[f64], u: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ROOMS];
    sys.eval(x, u, w, &mut out);
    out
}

/// `c·T_b⁴` itself is 9.25e-4 K/s; the net gain `c(T_b⁴ − T⁴)` of a room at 29 °C is the
/// ~9.3e-5 K/s figure comparable to the other heat transfers.
#[test]
fn body_radiation_magnitude() {
    let p = UfadParams::default();
    let r = p.body_radiation();
    assert!((r - 1e-13 * 310.15f64.powi(4)).abs() < 1e-18, "{r:e}");
    assert!((r - 9.253e-4).abs() < 0.001e-4, "{r:e}");
    let net = r - p.c * 302.15f64.powi(4);
    assert!((net - 9.3e-5).abs() / 9.3e-5 < 0.02, "{net:e}");
}

/// With every room, the underfloor, ceiling and outside at one temperature and no
/// ventilation, only radiation is left.
#[test]
fn uniform_temperature_leaves_radiation_only() {
    let p = UfadParams::default();
    let t = 25.0;
    let sys = ufad_system::<f64>(&p).unwrap();
    let d = field(&sys, &[t; ROOMS], &[0.0; ROOMS], &[t, t, t]);
    let k = t + 273.15;
    let expected = p.c * ((p.body_temperature + 273.15f64).powi(4) - k.powi(4));
    for v in d {
        assert!((v - expected).abs() < 1e-15, "{v:e} vs {expected:e}");
    }
}

#[test]
fn room_six_is_ventilated_by_room_eight_control() {
    let p = UfadParams::default();
    let sys = ufad_system::<f64>(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-3;
    for _ in 0..200 {
        let x: Vec<f64> = (0..ROOMS).map(|_| rng.random_range(20.0..30.0)).collect();
        let mut u: Vec<f64> = (0..ROOMS).map(|_| rng.random_range(-0.9..-0.1)).collect();
        let w = [rng.random_range(15.0..16.0), 27.0, 29.0];
        u[7] += h;
        let up = field(&sys, &x, &u, &w);
        u[7] -= 2.0 * h;
        let down = field(&sys, &x, &u, &w);
        let d = (up[5] - down[5]) / (2.0 * h);
        let expected = 0.25 * p.b * (x[5] - w[0]);
        assert!(d > 0.0);
        assert!((d - expected).abs() < 1e-9 * expected.max(1.0), "{d:e} vs {expected:e}");
        for (i, (a, b)) in up.iter().zip(&down).enumerate() {
            if i != 5 && i != 7 {
                assert_eq!(a, b, "room {i} reacts to u8");
            }
        }
    }
}

/// Every off-diagonal state derivative is non-negative at 10³ random points.
#[test]
fn room_couplings_are_cooperative() {
    let p = UfadParams::default();
    let sys = ufad_system::<f64>(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-4;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..ROOMS).map(|_| rng.random_range(20.0..30.0)).collect();
        let u: Vec<f64> = (0..ROOMS).map(|_| rng.random_range(-1.0..0.0)).collect();
        let w = [rng.random_range(15.0..16.0), rng.random_range(26.0..28.0), rng.random_range(28.0..30.0)];
        let j = rng.random_range(0..ROOMS);
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        let (fp, fm) = (field(&sys, &xp, &u, &w), field(&sys, &xm, &u, &w));
        for i in (0..ROOMS).filter(|&i| i != j) {
            assert!(fp[i] - fm[i] >= -1e-15, "df{i}/dx{j} < 0");
        }
    }
}

#[test]
fn overlapping_underfloor_breaks_monotonicity() {
    let p = UfadParams { temperature: [14.0, 30.0], ..UfadParams::default() };
    let err = ufad_system::<f64>(&p).unwrap_err();
    assert!(matches!(err, UfadError::Dynamics(DynamicsError::Monotonicity { .. })), "{err}");
}

#[test]
fn topology_is_validated() {
    let mut p = UfadParams::default();
    p.topology.links.push((2, 0, Contact::Wall));
    assert_eq!(ufad_system::<f64>(&p).unwrap_err(), UfadError::DuplicateLink(2, 0));
    p.topology = Topology { links: vec![(3, 3, Contact::Door)] };
    assert_eq!(ufad_system::<f64>(&p).unwrap_err(), UfadError::SelfLink(3));
    p.topology = Topology { links: vec![(1, 8, Contact::Door)] };
    assert_eq!(ufad_system::<f64>(&p).unwrap_err(), UfadError::BadRoom(8));
    let p = UfadParams { room6_mix: [0.7, 0.2], ..UfadParams::default() };
    assert_eq!(ufad_system::<f64>(&p).unwrap_err(), UfadError::BadMix);
}

#[test]
fn scenario_shape() {
    let problem = ufad_problem::<f64>(&UfadParams::default(), &UfadSettings::default()).unwrap();
    assert_eq!(problem.sequence.grid().cell_count(), 390_625);
    assert_eq!(problem.sequence.horizon(), 4);
    assert_eq!(problem.evaluator.tau(), 1800.0);
    let sizes: Vec<usize> = problem.control_values.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![25, 25, 25, 5, 5]);
    validate_decomposition(&ufad_decomposition(), ROOMS, ROOMS).unwrap();

    // σ³: rooms 3 and 4 in [26, 28].
    let s3 = problem.sequence.step_box(3).unwrap();
    for room in [2, 3] {
        assert_eq!((s3.low()[room], s3.high()[room]), (26.0, 28.0));
    }
    // Subsystem 1 sees the same projected cell at steps 0, 1 and 2.
    let i1 = &problem.subsystems[0].modeled();
    let proj: Vec<_> = (0..3).map(|k| problem.sequence.projected_step(k, i1).unwrap()).collect();
    assert!(proj.iter().all(|b| b.low() == [28.0, 28.0] && b.high() == [30.0, 30.0]));
    assert_eq!(ufad_schedule().len(), 5);
}

#[test]
fn counting_formulas() {
    let problem = ufad_problem::<f64>(&UfadParams::default(), &UfadSettings::default()).unwrap();
    let t = table1(&CountingInputs::from_problem(&problem, 5, 4), Some(1234));
    // 80² · 25 · 3 + 80² · 5 · 2
    assert_eq!(t.compositional_abstraction, 544_000.0);
    assert!((t.compositional_abstraction / 5.44e5 - 1.0).abs() < 1e-12);
    // 80⁸ · 5⁸
    assert!((t.centralized_abstraction / 6.5536e20 - 1.0).abs() < 1e-12);
    // 4 · 5⁸ · Σ_{l=0}^{4} 256^l
    let levels: f64 = (0..=4).map(|l| 256f64.powi(l)).sum();
    assert!((t.centralized_refinement - 4.0 * 390_625.0 * levels).abs() < 1.0);
    assert!((t.centralized_refinement / 6.74e15 - 1.0).abs() < 0.01);
    assert_eq!(t.compositional_refinement, Some(1234));
}

/// Flows from `σ⁰ ∩ π_{I_i}⁻¹(s)` under the pinned `u_{J_i}`, arbitrary other controls and a
/// random disturbance stay in `rs_ag1`; the part inside `π_{I_i^o}⁻¹(σ¹)` stays in `rs_ag2`.
#[test]
fn sampled_flows_respect_the_restricted_reach_sets() {
    use compref::dynamics::{uniform_point, Disturbance};
    let problem = ufad_problem::<f64>(&UfadParams::default(), &UfadSettings::default()).unwrap();
    let abstractions = problem.abstractions().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let eval = &problem.evaluator;
    let sigma0 = problem.sequence.step_box(0).unwrap();
    let sigma1 = problem.sequence.step_box(1).unwrap();
    for abs in &abstractions {
        let mut part = abs.partition(0).clone();
        let root = abs.step_symbols(0).unwrap().remove(0);
        let kids = part.split(&root).unwrap();
        let mut abs = abs.clone();
        let mut parts = abs.partitions().to_vec();
        parts[0] = part;
        abs.set_partitions(parts).unwrap();
        let spec = abs.spec().clone();
        for _ in 0..1000 {
            let s = &kids[rng.random_range(0..kids.len())];
            let ui = &abs.control_values()[rng.random_range(0..abs.control_values().len())];
            let rs1 = abs.rs_ag1(s, ui, 0).unwrap();
            let sbox = abs.partition(0).symbol_box(s).unwrap();
            let x0 = uniform_point(&mut rng, &sigma0.with_replaced(&sbox).unwrap());
            let mut u: Vec<f64> = (0..ROOMS).map(|_| rng.random_range(-1.0..0.0)).collect();
            for (&j, &v) in spec.controls.iter().zip(ui) {
                u[j] = v;
            }
            let ws = eval.random_disturbance(&mut rng);
            let x1 = eval.integrate(&x0, &u, Disturbance::PerStep(&ws)).unwrap();
            assert!(rs1.contains_point(&x1), "subsystem {}: {x1:?} outside {rs1:?}", spec.id);
            if spec.observed.iter().all(|&d| sigma1.bounds(d).is_some_and(|(l, h)| l <= x1[d] && x1[d] <= h)) {
                let rs2 = abs.rs_ag2(s, ui, 0).unwrap().expect("non-empty clip");
                assert!(rs2.contains_point(&x1));
            }
        }
    }
}
