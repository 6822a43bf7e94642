//! File round trips for both tree types.

use fractree::agora::{generate_discrete, AgoraConfig, AgoraModel};
use fractree::branching::{generate_tree_seeded, Budget};
use fractree::io::{read_json, read_points_csv, write_json, write_points_csv, PointRecords};
use fractree::{ProcessParams, SpatialProfile};

#[test]
fn discrete_tree_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = AgoraConfig::new(2, 1.5, 2.0, 3000, AgoraModel::Smooth).with_seed(5);
    let tree = generate_discrete(&cfg).unwrap();
    let path = dir.path().join("s.csv");
    write_points_csv(&PointRecords::from(&tree), &path).unwrap();
    let back = read_points_csv(&path).unwrap().to_point_tree().unwrap();
    assert_eq!(back.len(), tree.len());
    for k in 0..tree.len() {
        assert_eq!(back.point(k), tree.point(k));
        assert_eq!(back.parent(k), tree.parent(k));
        assert_eq!(back.is_seed(k), tree.is_seed(k));
    }
}

#[test]
fn continuous_tree_round_trips_through_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let params = ProcessParams::from_rho(3, 0.7, SpatialProfile::HardCutoff)
        .unwrap()
        .with_seed(6);
    let (tree, _) = generate_tree_seeded(&params, &Budget::vertices(4000)).unwrap();
    let rec = PointRecords::from(&tree);

    let csv = dir.path().join("t.csv");
    write_points_csv(&rec, &csv).unwrap();
    let back = read_points_csv(&csv).unwrap();
    assert_eq!(back, rec);
    let rebuilt = back
        .to_branching_tree(params, tree.horizon, tree.truncation)
        .unwrap();
    assert_eq!(rebuilt, tree);

    let json = dir.path().join("t.json");
    write_json(&rec, &json).unwrap();
    let from_json: PointRecords = read_json(&json).unwrap();
    assert_eq!(from_json, rec);
}

#[test]
fn write_failure_names_the_path() {
    let rec = PointRecords::from(&fractree::agora::PointTree::new(2));
    let err = write_points_csv(&rec, std::path::Path::new("/nonexistent/dir/x.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
}
