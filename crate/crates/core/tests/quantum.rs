use dicert::behaviors::born::{random_boundary_behavior, random_quantum_behavior};
use dicert::behaviors::*;
use dicert::quantum::*;
use proptest::prelude::*;

fn pr_box() -> ConditionalBehavior {
    let sc = Scenario::bipartite();
    let probs = (0..sc.len())
        .map(|i| {
            let (c, z) = sc.split(i);
            let (ab, xy) = (sc.decode_c(c), sc.decode_z(z));
            if (ab[0] ^ ab[1]) == (xy[0] & xy[1]) {
                0.5
            } else {
                0.0
            }
        })
        .collect();
    ConditionalBehavior::new(sc, probs).unwrap()
}

#[test]
fn known_quantum_maxima() {
    let s2 = MomentStructure::new(&Scenario::bipartite(), 2).unwrap();
    let chsh = max_linear(&functional::chsh(), &s2).unwrap();
    assert!((chsh.bound - 2.0 * 2f64.sqrt()).abs() < 1e-5, "{}", chsh.bound);
    assert!(chsh.bound >= 2.0 * 2f64.sqrt());
    let a8 = max_linear(&functional::chsh_alpha(8.0), &s2).unwrap();
    assert!((a8.bound - 2.0 * 65f64.sqrt()).abs() < 1e-4, "{}", a8.bound);
    let s3 = MomentStructure::new(&Scenario::tripartite(), 2).unwrap();
    let m = max_linear(&functional::mermin(), &s3).unwrap();
    assert!((m.bound - 4.0).abs() < 1e-5, "{}", m.bound);
}

#[test]
fn higher_level_is_tighter() {
    let sc = Scenario::bipartite();
    let s1 = MomentStructure::new(&sc, 1).unwrap();
    let s2 = MomentStructure::new(&sc, 2).unwrap();
    let mut rng = dicert::rng::stream(3, "test");
    let mut fs = vec![functional::chsh(), functional::chsh_alpha(2.0), functional::chsh_alpha(8.0)];
    for k in 0..5 {
        let coeffs: Vec<f64> = (0..sc.len()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        fs.push(Functional::new(format!("rand{k}"), &sc, Domain::Conditional, coeffs, 0.0).unwrap());
    }
    for f in &fs {
        let b1 = max_linear(f, &s1).unwrap().bound;
        let b2 = max_linear(f, &s2).unwrap().bound;
        assert!(b2 <= b1 + 1e-7, "{}: {b2} > {b1}", f.name);
    }
}

#[test]
fn quantum_samples_respect_bounds() {
    let sc = Scenario::bipartite();
    let s2 = MomentStructure::new(&sc, 2).unwrap();
    let f = functional::chsh_alpha(3.0);
    let bound = max_linear(&f, &s2).unwrap().bound;
    let mut rng = dicert::rng::stream(9, "test");
    for i in 0..1000 {
        let p = if i % 2 == 0 { random_quantum_behavior(&sc, &mut rng) } else { random_boundary_behavior(&sc, &mut rng) }.unwrap();
        assert!(bell_value(&p, &f).unwrap() <= bound + 1e-9);
    }
}

#[test]
fn pr_box_is_outside_with_a_separating_inequality() {
    let s2 = MomentStructure::new(&Scenario::bipartite(), 2).unwrap();
    let pr = pr_box();
    match membership(&pr, &s2, MEMBERSHIP_TOL).unwrap() {
        Membership::Outside { coeffs, bound, .. } => {
            let v: f64 = coeffs.iter().zip(&pr.probs).map(|(a, b)| a * b).sum();
            assert!(v > bound);
        }
        m => panic!("{m:?}"),
    }
    let proj = nearest_quantum(&pr.probs, &s2, Metric::L1).unwrap();
    assert!(proj.distance > 0.05);
    assert!(proj.lower_bound <= proj.distance + 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inside_is_stable_under_mixing(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let sc = Scenario::bipartite();
        let s2 = MomentStructure::new(&sc, 2).unwrap();
        let mut rng = dicert::rng::stream(seed, "test");
        let p = random_quantum_behavior(&sc, &mut rng).unwrap();
        prop_assert!(membership(&p, &s2, MEMBERSHIP_TOL).unwrap().is_inside());
        prop_assert!(membership(&p.with_noise(t), &s2, MEMBERSHIP_TOL).unwrap().is_inside());
    }

    #[test]
    fn nearest_point_of_an_inside_behavior_is_itself(seed in any::<u64>()) {
        let sc = Scenario::bipartite();
        let s2 = MomentStructure::new(&sc, 2).unwrap();
        let mut rng = dicert::rng::stream(seed, "test");
        let p = random_quantum_behavior(&sc, &mut rng).unwrap();
        for m in [Metric::L1, Metric::Euclidean] {
            let proj = nearest_quantum(&p.probs, &s2, m).unwrap();
            prop_assert!(proj.distance < 1e-6, "{:?} {}", m, proj.distance);
        }
    }

    #[test]
    fn mixing_the_pr_box_enough_makes_it_quantum(t in 0.0f64..=1.0) {
        let s2 = MomentStructure::new(&Scenario::bipartite(), 2).unwrap();
        let p = pr_box().with_noise(t);
        let chsh = 4.0 * (1.0 - t);
        let inside = membership(&p, &s2, MEMBERSHIP_TOL).unwrap().is_inside();
        if chsh < 2.0 * 2f64.sqrt() - 1e-5 {
            prop_assert!(inside);
        } else if chsh > 2.0 * 2f64.sqrt() + 1e-5 {
            prop_assert!(!inside);
        }
    }
}

#[test]
fn sdpa_dump_lists_every_block() {
    let s2 = MomentStructure::new(&Scenario::bipartite(), 2).unwrap();
    let text = s2.sdp(true).problem.to_sdpa();
    let mut lines = text.lines().filter(|l| !l.starts_with('*') && !l.starts_with('"'));
    let m: usize = lines.next().unwrap().trim().parse().unwrap();
    let nblocks: usize = lines.next().unwrap().trim().parse().unwrap();
    assert!(m > 0 && nblocks >= 1);
}
