//! Discrete models on frozen configurations and generated data.

use fractree::agora::{
    generate_discrete, step_hard, step_smooth, AgoraConfig, AgoraModel, AgoraStats, PointTree,
};
use fractree::index::distance;
use fractree::sampling::rng_from_seed;

/// Ten coincident points at (100, 0) and one isolated point at (-100, 0).
fn two_clusters() -> PointTree {
    let mut coords = vec![0.0, 0.0];
    for _ in 0..10 {
        coords.extend([100.0, 0.0]);
    }
    coords.extend([-100.0, 0.0]);
    let parents: Vec<Option<usize>> = (0..12).map(|i| (i > 0).then_some(0)).collect();
    let seeds: Vec<bool> = parents.iter().map(|p| p.is_some()).collect();
    PointTree::from_parts(2, &coords, &parents, &seeds, AgoraStats::default()).unwrap()
}

#[test]
fn dense_cluster_is_thinned() {
    // Proposals land near the dense cluster ten times as often, and each is
    // accepted with probability 1/10 there versus 1 at the isolated point,
    // so accepted points split evenly.
    let frozen = two_clusters();
    let cfg = AgoraConfig::new(2, 1.5, 0.0, 1, AgoraModel::HardThreshold);
    let mut rng = rng_from_seed(77);
    let trials = 20_000;
    let (mut dense, mut proposals) = (0usize, 0u64);
    for _ in 0..trials {
        let mut tree = frozen.clone();
        step_hard(&mut tree, &cfg, &mut rng).unwrap();
        let new = tree.len() - 1;
        let parent = tree.parent(new).unwrap();
        assert!(!tree.is_seed(new));
        dense += usize::from(parent <= 10);
        proposals += tree.stats.proposals;
    }
    let frac = dense as f64 / trials as f64;
    let sd = (0.25 / trials as f64).sqrt();
    assert!((frac - 0.5).abs() < 4.0 * sd, "dense share {frac}");
    // Overall acceptance per proposal is (10/11)(1/10) + (1/11)(1) = 2/11.
    let rate = trials as f64 / proposals as f64;
    assert!((rate - 2.0 / 11.0).abs() < 0.01, "acceptance rate {rate}");
}

#[test]
fn smooth_step_on_frozen_tree_picks_nearest_parent() {
    let frozen = two_clusters();
    let cfg = AgoraConfig::new(2, 1.5, 0.0, 1, AgoraModel::Smooth);
    let mut rng = rng_from_seed(78);
    let mut coords = frozen.coords().to_vec();
    coords.extend([0.1, 0.0]);
    let mut parents: Vec<Option<usize>> = (0..frozen.len()).map(|i| frozen.parent(i)).collect();
    parents.push(Some(0));
    let seeds: Vec<bool> = parents.iter().map(|p| *p == Some(0)).collect();
    let near = PointTree::from_parts(2, &coords, &parents, &seeds, AgoraStats::default()).unwrap();
    for _ in 0..50 {
        let mut tree = near.clone();
        step_smooth(&mut tree, &cfg, &mut rng).unwrap();
        let new = tree.len() - 1;
        let p = tree.parent(new).unwrap();
        let best = (1..new)
            .map(|i| distance(tree.point(i), tree.point(new)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(distance(tree.point(p), tree.point(new)), best);
    }
}

#[test]
fn seed_flags_match_parents() {
    for model in [AgoraModel::Smooth, AgoraModel::HardThreshold] {
        let cfg = AgoraConfig::new(3, 2.0, 3.0, 3000, model).with_seed(9);
        let tree = generate_discrete(&cfg).unwrap();
        assert_eq!(tree.len(), 3001);
        assert_eq!(tree.point(0), &[0.0, 0.0, 0.0]);
        for k in 1..tree.len() {
            let p = tree.parent(k).unwrap();
            assert!(p < k);
            assert_eq!(tree.is_seed(k), p == 0);
        }
        assert_eq!(tree.stats.seeds as usize, tree.seed_count());
    }
}
