mod common;

use dicert::behaviors::{Chart, Scenario};
use dicert::num::{self, QVec};
use dicert::polytope::sets::{full_vertices, is_deterministic, joint_product_vertices, uniform_inputs};
use dicert::polytope::*;
use num_traits::Zero;
use proptest::prelude::*;

fn ns2() -> Polytope {
    Polytope::from_h(&ns_polytope(&Scenario::bipartite()).unwrap()).unwrap()
}

fn prov(i: usize) -> CutProvenance {
    CutProvenance { algorithm: "test".into(), iteration: i, seed: 0, note: String::new() }
}

#[test]
fn bipartite_ns_matches_brute_force() {
    let h = ns_polytope(&Scenario::bipartite()).unwrap();
    let p = Polytope::from_h(&h).unwrap();
    assert_eq!(p.num_vertices(), 24);
    assert_eq!(p.vertices, common::brute_force_vertices(&h));
    p.check().unwrap();
    let chart = Chart::collins_gisin(&Scenario::bipartite()).unwrap();
    let full = full_vertices(&chart, &p.vertices).unwrap();
    assert_eq!(full.iter().filter(|v| is_deterministic(v)).count(), 16);
    assert!(full.iter().all(|v| common::is_half_or_integral(v)));
}

#[test]
fn ns_chsh_matches_brute_force() {
    let h = ns_chsh_polytope().unwrap();
    let p = Polytope::from_h(&h).unwrap();
    assert_eq!(p.vertices, common::brute_force_vertices(&h));
    assert_eq!(p.num_vertices(), 80);
}

#[test]
fn facets_reconstruct_the_polytope() {
    let p = ns2();
    let mut h = HPolytope::new(p.dim, "rebuilt");
    for j in 0..p.halfspaces.len() {
        if p.is_facet(j) {
            h.push(p.halfspaces[j].clone()).unwrap();
        }
    }
    assert_eq!(h.inequalities.len(), 16);
    let q = Polytope::from_h(&h).unwrap();
    assert_eq!(q.vertices, p.vertices);
    for v in &p.vertices {
        assert!(h.contains(v));
    }
}

#[test]
fn tripartite_ns_vertex_count() {
    let p = Polytope::from_h(&ns_polytope(&Scenario::tripartite()).unwrap()).unwrap();
    assert_eq!(p.num_vertices(), 53856);
}

#[test]
fn sv_vertices_are_product_distributions() {
    for conv in [SvConvention::Box, SvConvention::HalfDelta] {
        for d in [num::ratio(0, 1), num::ratio(1, 10), num::ratio(3, 10)] {
            let v = sv2_polytope(&SvSource::new(d.clone(), conv).unwrap()).unwrap();
            assert_eq!(v.len(), if d.is_zero() { 1 } else { 4 });
            for u in &v.vertices {
                // rank one: u(0,0)u(1,1) = u(0,1)u(1,0)
                assert_eq!(&u[0] * &u[3], &u[1] * &u[2]);
                assert_eq!(u.iter().sum::<num::Rational>(), num::int(1));
            }
        }
    }
    assert!(SvSource::new(num::ratio(1, 2), SvConvention::Box).is_err());
}

#[test]
fn product_vertices_are_joint_distributions() {
    let sc = Scenario::bipartite();
    let chart = Chart::collins_gisin(&sc).unwrap();
    let full = full_vertices(&chart, &ns2().vertices).unwrap();
    let sv = sv2_polytope(&SvSource::new(num::ratio(1, 10), SvConvention::Box).unwrap()).unwrap();
    let j = joint_product_vertices(&sc, &full, &sv).unwrap();
    assert_eq!(j.len(), 24 * 4);
    for v in &j.vertices {
        assert_eq!(v.iter().sum::<num::Rational>(), num::int(1));
    }
    let u = joint_product_vertices(&sc, &full, &uniform_inputs(&sc)).unwrap();
    assert_eq!(u.len(), 24);
}

#[test]
fn polytope_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = ns2();
    let mut rng = dicert::rng::stream(5, "test");
    for i in 0..3 {
        p.add_halfspace(common::random_cut(&p, &mut rng), prov(i)).unwrap();
    }
    let path = dir.path().join("p.json");
    let f = write_polytope(&path, &p, "cg-2-2-2").unwrap();
    let (q, g) = read_polytope(&path).unwrap();
    assert_eq!(f, g);
    assert_eq!(q.vertices, p.vertices);
    assert_eq!(q.cuts.len(), 3);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(serde_json::to_string_pretty(&g).unwrap() + "\n", text);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn incremental_cuts_match_batch_enumeration(seed in any::<u64>(), cuts in 1usize..6) {
        let mut p = ns2();
        let mut h = ns_polytope(&Scenario::bipartite()).unwrap();
        let mut rng = dicert::rng::stream(seed, "cuts");
        for i in 0..cuts {
            let c = common::random_cut(&p, &mut rng);
            if p.add_halfspace(c.clone(), prov(i)).is_err() {
                return Ok(());
            }
            h.push(c).unwrap();
        }
        p.check().unwrap();
        let batch = Polytope::from_h(&h).unwrap();
        prop_assert_eq!(&p.vertices, &batch.vertices);
        if cuts <= 2 {
            prop_assert_eq!(&p.vertices, &common::brute_force_vertices(&h));
        }
    }

    #[test]
    fn pruning_keeps_the_vertex_set(seed in any::<u64>()) {
        let mut p = ns2();
        let mut rng = dicert::rng::stream(seed, "cuts");
        for i in 0..4 {
            let c = common::random_cut(&p, &mut rng);
            p.add_halfspace(c, prov(i)).unwrap();
        }
        let before = p.vertices.clone();
        p.prune();
        p.check().unwrap();
        prop_assert_eq!(before, p.vertices.clone());
        for j in 0..p.halfspaces.len() {
            prop_assert!(p.is_facet(j));
        }
    }

    #[test]
    fn redundant_cuts_change_nothing(seed in any::<u64>()) {
        let mut p = ns2();
        let mut rng = dicert::rng::stream(seed, "cuts");
        let c = common::random_cut(&p, &mut rng);
        let slack_max = p.vertices.iter().map(|v| num::dot(&c.normal, v)).max().unwrap();
        let loose = Halfspace::new(c.normal.clone(), slack_max).unwrap();
        let before = p.vertices.clone();
        prop_assert_eq!(p.add_halfspace(loose, prov(0)).unwrap(), CutOutcome::Redundant);
        prop_assert_eq!(before, p.vertices.clone());
    }

    #[test]
    fn tv_distance_is_a_metric(a in proptest::collection::vec(0.0f64..1.0, 16), b in proptest::collection::vec(0.0f64..1.0, 16), c in proptest::collection::vec(0.0f64..1.0, 16)) {
        let d = |u: &[f64], v: &[f64]| tv_distance(u, v, 4).unwrap();
        prop_assert!(d(&a, &a).is_zero());
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}

#[test]
fn empty_cut_is_rejected() {
    let mut p = ns2();
    let normal: QVec = vec![num::int(0); 8].into_iter().enumerate().map(|(i, v)| if i == 0 { num::int(1) } else { v }).collect();
    let h = Halfspace::new(normal, num::int(-1)).unwrap();
    assert!(p.add_halfspace(h, prov(0)).is_err());
}
