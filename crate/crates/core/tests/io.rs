use magsac_core::io::{labels_path, load_correspondences, parse_correspondences, save_correspondences};
use magsac_core::{Error, PointSet};

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("io-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn three_correspondences() {
    let ps = parse_correspondences("10 20 30 40\n1.5 -2 3e2 4\n# note\n0 0 0 0\n").unwrap();
    assert_eq!((ps.len(), ps.dim()), (3, 4));
    assert_eq!(ps.point(1), &[1.5, -2.0, 300.0, 4.0]);
    assert!(ps.gt_inlier_mask().is_none());
}

#[test]
fn bad_token_reports_its_line() {
    let err = parse_correspondences("1 2 3 4\n\n5 6 7 8\n9 10 eleven 12\n").unwrap_err();
    match err {
        Error::Parse { line, message } => {
            assert_eq!(line, 4);
            assert!(message.contains("eleven"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse_correspondences("1 2 3 4\n1 2 inf 4\n"), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn label_count_must_match() {
    let path = scratch("mismatch.txt");
    std::fs::write(&path, "1 2\n3 4\n5 6\n").unwrap();
    std::fs::write(labels_path(&path), "1\n0\n").unwrap();
    assert!(matches!(
        load_correspondences(&path),
        Err(Error::LabelMismatch { labels: 2, points: 3 })
    ));
    std::fs::write(labels_path(&path), "1\n0\n1\n").unwrap();
    let ps = load_correspondences(&path).unwrap();
    assert_eq!(ps.gt_inlier_indices(), Some(vec![0, 2]));
}

#[test]
fn save_then_load_is_exact() {
    let path = scratch("exact.txt");
    let ps = PointSet::from_points(&[[0.1, 1.0 / 3.0], [1e-17, -2.5e8], [std::f64::consts::PI, 7.0]])
        .unwrap()
        .with_gt_mask(vec![true, false, true])
        .unwrap();
    save_correspondences(&path, &ps).unwrap();
    let back = load_correspondences(&path).unwrap();
    assert_eq!(back.coords(), ps.coords());
    assert_eq!(back.gt_inlier_mask(), ps.gt_inlier_mask());
    assert!(matches!(load_correspondences(scratch("missing.txt")), Err(Error::Io(_))));
}
