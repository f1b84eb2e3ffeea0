//! Seeded synthetic scenes: two-camera planar scenes for homographies,
//! general two-view scenes for fundamental matrices, and 2D line scenes.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::error::{Error, Result};
use crate::geometry::{FundamentalMatrix, Homography, Line2D, Model, ProblemDef};
use crate::points::PointSet;
use crate::scoring::tau;

pub const DEFAULT_POINT_COUNT: usize = 200;
pub const FOCAL_LENGTH: f64 = 600.0;
pub const PRINCIPAL_POINT: f64 = 300.0;
/// Side of the square image that outlier coordinates are drawn from.
pub const IMAGE_SIZE: f64 = 600.0;
pub const MAX_RETRIES: usize = 100;
/// Outliers whose ground-truth residual is within `τ(OUTLIER_SIGMA)` are redrawn.
pub const OUTLIER_SIGMA: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    /// Correspondences (or 2D points) carrying the ground-truth inlier mask.
    pub correspondences: PointSet,
    pub gt_model: Model,
    pub gt_inlier_mask: Vec<bool>,
    pub noise_sigma: f64,
    pub outlier_ratio: f64,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn inlier_count(&self) -> usize {
        self.gt_inlier_mask.iter().filter(|&&b| b).count()
    }
}

fn check_ratio(outlier_ratio: f64) -> Result<()> {
    if !(0.0..1.0).contains(&outlier_ratio) {
        return Err(Error::InvalidInput(format!("outlier ratio must lie in [0, 1), got {outlier_ratio}")));
    }
    Ok(())
}

fn check_noise(noise_sigma: f64) -> Result<()> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidInput(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    Ok(())
}

fn split(n_total: usize, outlier_ratio: f64) -> (usize, usize) {
    let n_out = ((n_total as f64) * outlier_ratio).round() as usize;
    (n_total - n_out, n_out)
}

pub fn intrinsics() -> Matrix3<f64> {
    Matrix3::new(
        FOCAL_LENGTH,
        0.0,
        PRINCIPAL_POINT,
        0.0,
        FOCAL_LENGTH,
        PRINCIPAL_POINT,
        0.0,
        0.0,
        1.0,
    )
}

/// Second camera pose: `R = R_X(α) R_Y(β) R_Z(γ)` and centre `t` uniform in
/// the unit ball. The angles are drawn from `U[0, π/2]` and applied as degrees.
fn random_pose<R: Rng + ?Sized>(rng: &mut R) -> (Matrix3<f64>, Vector3<f64>) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut angle = || rng.random_range(0.0..=half_pi).to_radians();
    let (a, b, c) = (angle(), angle(), angle());
    let r = Rotation3::from_axis_angle(&Vector3::x_axis(), a)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), b)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), c);
    let t = loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            break v;
        }
    };
    (*r.matrix(), t)
}

fn unit_disk<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        if a * a + b * b <= 1.0 {
            return (a, b);
        }
    }
}

/// Projects `x` into both cameras; `None` when it is not in front of both.
fn project_pair(k: &Matrix3<f64>, r: &Matrix3<f64>, t: &Vector3<f64>, x: &Vector3<f64>) -> Option<[f64; 4]> {
    let c2 = r * (x - t);
    if x.z <= 1e-6 || c2.z <= 1e-6 {
        return None;
    }
    let p1 = k * x;
    let p2 = k * c2;
    Some([p1.x / p1.z, p1.y / p1.z, p2.x / p2.z, p2.y / p2.z])
}

/// Adds `N(0, σ)` to every coordinate. Samples are drawn even when `σ = 0`,
/// so scenes that differ only in `σ` share everything else.
fn add_noise<R: Rng + ?Sized>(rng: &mut R, p: &mut [f64; 4], sigma: f64) {
    for v in p.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += sigma * z;
    }
}

/// Draws outlier correspondences uniformly over the image square of both
/// views, redrawing any whose residual under `gt` is within `threshold`.
fn uniform_outliers<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    gt: &Model,
    problem: &ProblemDef,
    threshold: f64,
) -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = [
            rng.random_range(0.0..IMAGE_SIZE),
            rng.random_range(0.0..IMAGE_SIZE),
            rng.random_range(0.0..IMAGE_SIZE),
            rng.random_range(0.0..IMAGE_SIZE),
        ];
        if problem.residual(gt, &p) > threshold {
            out.push(p);
        }
    }
    out
}

/// Shuffles inliers and outliers together and builds the labelled point set.
fn assemble<const K: usize, R: Rng + ?Sized>(
    rng: &mut R,
    inliers: Vec<[f64; K]>,
    outliers: Vec<[f64; K]>,
    diag: Option<f64>,
) -> Result<(PointSet, Vec<bool>)> {
    let mut labelled: Vec<([f64; K], bool)> = inliers
        .into_iter()
        .map(|p| (p, true))
        .chain(outliers.into_iter().map(|p| (p, false)))
        .collect();
    labelled.shuffle(rng);
    let mask: Vec<bool> = labelled.iter().map(|l| l.1).collect();
    let pts: Vec<[f64; K]> = labelled.into_iter().map(|l| l.0).collect();
    let set = PointSet::from_points(&pts)?
        .with_gt_mask(mask.clone())?
        .with_image_diagonals(diag, diag);
    Ok((set, mask))
}

/// Two cameras `K[I|0]` and `K[R|−Rt]` observing a plane through `(0, 0, 5)`;
/// `n_total · (1 − outlier_ratio)` plane points are projected and perturbed
/// by Gaussian noise, the rest are uniform random correspondences.
pub fn generate_homography_scene(noise_sigma: f64, outlier_ratio: f64, n_total: usize, seed: u64) -> Result<SyntheticScene> {
    if n_total < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 points, got {n_total}")));
    }
    check_ratio(outlier_ratio)?;
    check_noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_in, n_out) = split(n_total, outlier_ratio);
    let k = intrinsics();
    let k_inv = k.try_inverse().expect("intrinsics are invertible");
    let origin = Vector3::new(0.0, 0.0, 5.0);

    for _ in 0..MAX_RETRIES {
        let (r, t) = random_pose(&mut rng);
        let sphere: [f64; 3] = UnitSphere.sample(&mut rng);
        let normal = Vector3::from(sphere);
        let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = normal.cross(&helper).normalize();
        let v = normal.cross(&u);

        let mut inliers = Vec::with_capacity(n_in);
        let mut ok = true;
        for _ in 0..n_in {
            let (a, b) = unit_disk(&mut rng);
            let x = origin + u * a + v * b;
            match project_pair(&k, &r, &t, &x) {
                Some(p) => inliers.push(p),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let d = normal.dot(&origin);
        if !ok || d.abs() < 1e-9 {
            continue;
        }
        let h = k * r * (Matrix3::identity() - t * normal.transpose() / d) * k_inv;
        let gt = Model::from(Homography::from_matrix(h)?);
        for p in &mut inliers {
            add_noise(&mut rng, p, noise_sigma);
        }
        let problem = ProblemDef::homography();
        let threshold = tau(OUTLIER_SIGMA, problem.rho, 0.99);
        let outliers = uniform_outliers(&mut rng, n_out, &gt, &problem, threshold);
        let (set, mask) = assemble(&mut rng, inliers, outliers, Some(IMAGE_SIZE * std::f64::consts::SQRT_2))?;
        return Ok(SyntheticScene {
            correspondences: set,
            gt_model: gt,
            gt_inlier_mask: mask,
            noise_sigma,
            outlier_ratio,
            seed,
        });
    }
    Err(Error::RetryExhausted(MAX_RETRIES))
}

/// Two cameras as in [`generate_homography_scene`] observing points spread
/// through the box `[−1, 1]² × [4, 6]`.
pub fn generate_fundamental_scene(noise_sigma: f64, outlier_ratio: f64, n_total: usize, seed: u64) -> Result<SyntheticScene> {
    if n_total < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 points, got {n_total}")));
    }
    check_ratio(outlier_ratio)?;
    check_noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_in, n_out) = split(n_total, outlier_ratio);
    let k = intrinsics();
    let k_inv = k.try_inverse().expect("intrinsics are invertible");

    for _ in 0..MAX_RETRIES {
        let (r, t) = random_pose(&mut rng);
        if t.norm() < 0.05 {
            continue;
        }
        let mut inliers = Vec::with_capacity(n_in);
        let mut attempts = 0;
        while inliers.len() < n_in && attempts < 100 * n_in {
            attempts += 1;
            let x = Vector3::new(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(4.0..=6.0),
            );
            if let Some(p) = project_pair(&k, &r, &t, &x) {
                inliers.push(p);
            }
        }
        if inliers.len() < n_in {
            continue;
        }
        let e = (-(r * t)).cross_matrix() * r;
        let gt = Model::from(FundamentalMatrix::from_matrix(k_inv.transpose() * e * k_inv)?);
        for p in &mut inliers {
            add_noise(&mut rng, p, noise_sigma);
        }
        let problem = ProblemDef::fundamental();
        let threshold = tau(OUTLIER_SIGMA, problem.rho, 0.99);
        let outliers = uniform_outliers(&mut rng, n_out, &gt, &problem, threshold);
        let (set, mask) = assemble(&mut rng, inliers, outliers, Some(IMAGE_SIZE * std::f64::consts::SQRT_2))?;
        return Ok(SyntheticScene {
            correspondences: set,
            gt_model: gt,
            gt_inlier_mask: mask,
            noise_sigma,
            outlier_ratio,
            seed,
        });
    }
    Err(Error::RetryExhausted(MAX_RETRIES))
}

/// Axis-aligned box `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("bounding box must have positive extent".into()));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn diagonal(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: IMAGE_SIZE,
            y1: IMAGE_SIZE,
        }
    }
}

/// Parameter interval of `anchor + s·dir` inside the box.
fn clip_to_box(anchor: (f64, f64), dir: (f64, f64), bbox: &BoundingBox) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (p, d, a, b) in [(anchor.0, dir.0, bbox.x0, bbox.x1), (anchor.1, dir.1, bbox.y0, bbox.y1)] {
        if d.abs() > 1e-12 {
            let (s0, s1) = ((a - p) / d, (b - p) / d);
            lo = lo.max(s0.min(s1));
            hi = hi.min(s0.max(s1));
        }
    }
    (lo, hi)
}

/// A random line through `bbox`; inliers are uniform along its visible
/// segment and displaced perpendicularly by `N(0, σ)`, outliers are uniform
/// in the box.
pub fn generate_line_scene(
    noise_sigma: f64,
    outlier_ratio: f64,
    n_total: usize,
    bbox: BoundingBox,
    seed: u64,
) -> Result<SyntheticScene> {
    if n_total < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {n_total}")));
    }
    check_ratio(outlier_ratio)?;
    check_noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_in, n_out) = split(n_total, outlier_ratio);
    let anchor = (rng.random_range(bbox.x0..bbox.x1), rng.random_range(bbox.y0..bbox.y1));
    let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let dir = (angle.cos(), angle.sin());
    let normal = (-dir.1, dir.0);
    let line = Line2D::new(normal.0, normal.1, -(normal.0 * anchor.0 + normal.1 * anchor.1))?;
    let (s0, s1) = clip_to_box(anchor, dir, &bbox);

    let inliers: Vec<[f64; 2]> = (0..n_in)
        .map(|_| {
            let s = if s1 > s0 { rng.random_range(s0..=s1) } else { 0.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            let e = noise_sigma * z;
            [anchor.0 + s * dir.0 + e * normal.0, anchor.1 + s * dir.1 + e * normal.1]
        })
        .collect();
    let outliers: Vec<[f64; 2]> = (0..n_out)
        .map(|_| [rng.random_range(bbox.x0..bbox.x1), rng.random_range(bbox.y0..bbox.y1)])
        .collect();
    let (set, mask) = assemble(&mut rng, inliers, outliers, Some(bbox.diagonal()))?;
    Ok(SyntheticScene {
        correspondences: set,
        gt_model: Model::from(line),
        gt_inlier_mask: mask,
        noise_sigma,
        outlier_ratio,
        seed,
    })
}
