use magsac_core::io::{format_correspondences, load_correspondences, parse_correspondences, save_correspondences};
use magsac_core::scoring::tau;
use magsac_core::synthetic::{
    generate_fundamental_scene, generate_homography_scene, generate_line_scene, BoundingBox, OUTLIER_SIGMA,
};
use magsac_core::{Model, ProblemDef};
use proptest::prelude::*;

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn default_size_split_at_high_outlier_ratio() {
    let s = generate_homography_scene(1.0, 0.8, 200, 1).unwrap();
    assert_eq!(s.correspondences.len(), 200);
    assert_eq!(s.gt_inlier_mask.iter().filter(|&&b| b).count(), 40);
    assert_eq!(s.gt_inlier_mask.iter().filter(|&&b| !b).count(), 160);
    assert_eq!(s.correspondences.gt_inlier_mask(), Some(s.gt_inlier_mask.as_slice()));
}

#[test]
fn homography_noise_has_the_requested_spread() {
    let mut displacement = Vec::new();
    let mut seed = 0;
    while displacement.len() < 10_000 {
        let clean = generate_homography_scene(0.0, 0.3, 200, seed).unwrap();
        let noisy = generate_homography_scene(1.0, 0.3, 200, seed).unwrap();
        assert_eq!(clean.gt_inlier_mask, noisy.gt_inlier_mask);
        for i in 0..clean.correspondences.len() {
            if clean.gt_inlier_mask[i] {
                let (a, b) = (clean.correspondences.point(i), noisy.correspondences.point(i));
                displacement.extend(a.iter().zip(b).map(|(x, y)| y - x));
            }
        }
        seed += 1;
    }
    let sd = std_dev(&displacement);
    assert!((0.9..=1.1).contains(&sd), "std {sd}");
}

#[test]
fn inliers_stay_within_four_sigma_of_their_exact_projections() {
    for sigma in [0.5, 1.0, 2.0] {
        let mut d = Vec::new();
        for seed in 0..50 {
            let clean = generate_homography_scene(0.0, 0.5, 200, seed).unwrap();
            let noisy = generate_homography_scene(sigma, 0.5, 200, seed).unwrap();
            for i in clean.correspondences.gt_inlier_indices().unwrap() {
                let (a, b) = (clean.correspondences.point(i), noisy.correspondences.point(i));
                d.push(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
            }
        }
        d.sort_by(f64::total_cmp);
        let p99 = d[d.len() * 99 / 100];
        assert!(p99 <= 4.0 * sigma + 1e-9, "sigma {sigma}: 99th percentile {p99}");
    }
}

#[test]
fn outliers_are_far_from_the_true_model() {
    let problem = ProblemDef::homography();
    let threshold = tau(OUTLIER_SIGMA, 2, 0.99);
    for sigma in [0.0, 1.0, 2.0] {
        let (mut far, mut total) = (0, 0);
        for seed in 0..50 {
            let s = generate_homography_scene(sigma, 0.6, 200, seed).unwrap();
            for (i, p) in s.correspondences.iter().enumerate() {
                if !s.gt_inlier_mask[i] {
                    total += 1;
                    far += usize::from(problem.residual(&s.gt_model, p) > threshold);
                }
            }
        }
        assert!(far as f64 >= 0.99 * total as f64, "sigma {sigma}: {far}/{total}");
    }
}

#[test]
fn line_residuals_have_the_requested_spread() {
    for sigma in [0.5, 2.0, 5.0] {
        let mut signed = Vec::new();
        for seed in 0..40 {
            let s = generate_line_scene(sigma, 0.0, 100, BoundingBox::default(), seed).unwrap();
            let Model::Line2D(line) = s.gt_model else { panic!("not a line") };
            let (a, b, c) = line.coefficients();
            signed.extend(s.correspondences.iter().map(|p| a * p[0] + b * p[1] + c));
        }
        let sd = std_dev(&signed);
        assert!((sd / sigma - 1.0).abs() < 0.1, "sigma {sigma}: std {sd}");
    }
}

#[test]
fn line_outliers_stay_inside_the_box() {
    let bbox = BoundingBox::new(-50.0, 10.0, 150.0, 90.0).unwrap();
    let s = generate_line_scene(1.0, 0.7, 100, bbox, 3).unwrap();
    for (i, p) in s.correspondences.iter().enumerate() {
        if !s.gt_inlier_mask[i] {
            assert!((-50.0..150.0).contains(&p[0]) && (10.0..90.0).contains(&p[1]));
        }
    }
    assert!(generate_line_scene(1.0, 0.0, 30, BoundingBox::default(), 3).unwrap().gt_inlier_mask.iter().all(|&b| b));
}

#[test]
fn scenes_round_trip_through_text_files() {
    let dir = std::env::temp_dir().join(format!("synthetic-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scenes = [
        generate_homography_scene(1.0, 0.5, 200, 4).unwrap(),
        generate_fundamental_scene(0.5, 0.3, 100, 4).unwrap(),
        generate_line_scene(2.0, 0.5, 60, BoundingBox::default(), 4).unwrap(),
    ];
    for (k, s) in scenes.iter().enumerate() {
        let path = dir.join(format!("scene{k}.txt"));
        save_correspondences(&path, &s.correspondences).unwrap();
        let back = load_correspondences(&path).unwrap();
        assert_eq!(back.len(), s.correspondences.len());
        assert_eq!(back.dim(), s.correspondences.dim());
        for (x, y) in back.coords().iter().zip(s.correspondences.coords()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
        assert_eq!(back.gt_inlier_mask(), Some(s.gt_inlier_mask.as_slice()));
        let text = format_correspondences(&s.correspondences);
        assert_eq!(parse_correspondences(&text).unwrap().coords(), back.coords());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), sigma in 0.0f64..3.0, ratio in 0.0f64..0.9) {
        let a = generate_homography_scene(sigma, ratio, 120, seed).unwrap();
        let b = generate_homography_scene(sigma, ratio, 120, seed).unwrap();
        prop_assert_eq!(&a.correspondences, &b.correspondences);
        prop_assert_eq!(&a.gt_inlier_mask, &b.gt_inlier_mask);
        prop_assert_eq!(a.gt_model, b.gt_model);
        let l1 = generate_line_scene(sigma, ratio, 50, BoundingBox::default(), seed).unwrap();
        let l2 = generate_line_scene(sigma, ratio, 50, BoundingBox::default(), seed).unwrap();
        prop_assert_eq!(l1.correspondences, l2.correspondences);
    }

    #[test]
    fn split_follows_the_ratio(seed in 0u64..1000, ratio in 0.0f64..0.95, n in 8usize..300) {
        let s = generate_homography_scene(1.0, ratio, n, seed).unwrap();
        let outliers = s.gt_inlier_mask.iter().filter(|&&b| !b).count();
        prop_assert_eq!(s.correspondences.len(), n);
        prop_assert!((outliers as f64 - ratio * n as f64).abs() <= 1.0);
    }
}
