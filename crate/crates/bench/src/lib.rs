//! Fixtures shared by the benchmarks.

use magsac_core::synthetic::generate_homography_scene;
use magsac_core::SyntheticScene;

/// The 200-point homography scene used throughout the benchmarks.
pub fn homography_fixture(noise_sigma: f64, outlier_ratio: f64) -> SyntheticScene {
    generate_homography_scene(noise_sigma, outlier_ratio, 200, 42).expect("fixture scene")
}
