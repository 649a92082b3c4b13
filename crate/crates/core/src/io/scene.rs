//! Deterministic LiDAR-like synthetic scenes.
//!
//! A scene is a set of box-shaped objects standing on a ground plane around
//! a sensor at the origin, plus sparse ground returns. Objects are placed
//! with a bias toward the sensor, as real scans are. Randomness comes from
//! ChaCha8 seeded with `SceneSpec::seed`, and the generator only uses
//! IEEE-754 basic arithmetic (no `sin`, `cos` or `ln`), so a seed yields the
//! same cloud on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Point3;
use crate::kdtree::PointCloud;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("invalid scene spec: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_objects: usize,
    /// Inclusive range of points sampled on each object.
    pub points_per_object: (usize, usize),
    /// Inclusive range of object footprint side lengths, in meters.
    pub object_extent: (f32, f32),
    /// No coordinate exceeds this magnitude.
    pub range_cap: f32,
    /// Standard deviation of the per-coordinate measurement noise.
    pub noise_sigma: f32,
    pub ground_points: usize,
    /// Height of the sensor above the ground plane.
    pub sensor_height: f32,
    /// Objects and ground returns start this far from the sensor.
    pub min_range: f32,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            seed: 1,
            n_objects: 120,
            points_per_object: (150, 500),
            object_extent: (0.4, 4.0),
            range_cap: 120.0,
            noise_sigma: 0.01,
            ground_points: 4000,
            sensor_height: 1.8,
            min_range: 3.0,
        }
    }
}

impl SceneSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        SceneSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let (pmin, pmax) = self.points_per_object;
        if pmin == 0 || pmin > pmax {
            return Err(SceneError::Invalid("points_per_object must satisfy 1 <= min <= max"));
        }
        let (emin, emax) = self.object_extent;
        if !(emin > 0.0 && emin <= emax && emax.is_finite()) {
            return Err(SceneError::Invalid("object_extent must satisfy 0 < min <= max"));
        }
        if !(self.range_cap > 0.0 && self.range_cap.is_finite()) {
            return Err(SceneError::Invalid("range_cap must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SceneError::Invalid("noise_sigma must be non-negative"));
        }
        if !(self.sensor_height >= 0.0 && self.sensor_height < self.range_cap) {
            return Err(SceneError::Invalid("sensor_height must lie in [0, range_cap)"));
        }
        if !(self.min_range >= 0.0 && self.min_range + emax < self.range_cap) {
            return Err(SceneError::Invalid("min_range plus object extent must stay below range_cap"));
        }
        Ok(())
    }

    /// Expected point count is not exact; this is the upper bound.
    pub fn max_points(&self) -> usize {
        self.n_objects * self.points_per_object.1 + self.ground_points
    }
}

/// Unit vector for a uniform draw, built from the rational parametrization
/// of the circle. Directions are not uniform in angle but cover all of them.
fn direction(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let t: f64 = rng.random_range(-1.0..=1.0);
    let d = 1.0 + t * t;
    let (c, s) = ((1.0 - t * t) / d, 2.0 * t / d);
    if rng.random::<bool>() {
        (c, s)
    } else {
        (-c, -s)
    }
}

/// Approximately normal noise: Irwin-Hall sum of twelve uniforms.
fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let s: f64 = (0..12).map(|_| rng.random::<f64>()).sum();
    (s - 6.0) * sigma
}

/// Objects closer than this get their full point budget.
const DENSE_RANGE: f64 = 12.0;

/// Distance in `[lo, hi]`, skewed toward `lo`.
fn near_biased(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u * u * u
}

pub fn generate_scene(spec: &SceneSpec) -> Result<PointCloud, SceneError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cap = spec.range_cap as f64;
    let sigma = spec.noise_sigma as f64;
    let ground_z = -(spec.sensor_height as f64);
    let (emin, emax) = (spec.object_extent.0 as f64, spec.object_extent.1 as f64);
    let reach = cap - emax * 1.5 - 4.0 * sigma;
    let mut points = Vec::with_capacity(spec.max_points());

    for _ in 0..spec.n_objects {
        let (ux, uy) = direction(&mut rng);
        let dist = near_biased(&mut rng, spec.min_range as f64 + emax, reach.max(spec.min_range as f64 + emax));
        let (cx, cy) = (ux * dist, uy * dist);
        let sx = rng.random_range(emin..=emax);
        let sy = rng.random_range(emin..=emax);
        let sz = rng.random_range(0.5..=2.5f64).min(cap - spec.sensor_height as f64);
        let (rc, rs) = direction(&mut rng);
        // Returns per object thin out with range.
        let falloff = (DENSE_RANGE / dist).clamp(0.1, 1.0);
        let drawn = rng.random_range(spec.points_per_object.0..=spec.points_per_object.1);
        let n = ((drawn as f64 * falloff) as usize).max(1);

        // Face areas of the four walls and the roof.
        let walls = [sy * sz, sy * sz, sx * sz, sx * sz, sx * sy];
        let total: f64 = walls.iter().sum();
        for _ in 0..n {
            let mut pick = rng.random::<f64>() * total;
            let mut face = 0;
            while face < 4 && pick >= walls[face] {
                pick -= walls[face];
                face += 1;
            }
            let a: f64 = rng.random_range(-0.5..=0.5);
            let b: f64 = rng.random_range(0.0..=1.0);
            let (lx, ly, lz) = match face {
                0 => (-0.5 * sx, a * sy, b * sz),
                1 => (0.5 * sx, a * sy, b * sz),
                2 => (a * sx, -0.5 * sy, b * sz),
                3 => (a * sx, 0.5 * sy, b * sz),
                _ => (a * sx, (b - 0.5) * sy, sz),
            };
            let x = cx + rc * lx - rs * ly + gaussian(&mut rng, sigma);
            let y = cy + rs * lx + rc * ly + gaussian(&mut rng, sigma);
            let z = ground_z + lz + gaussian(&mut rng, sigma);
            points.push(clamped(x, y, z, cap));
        }
    }

    for _ in 0..spec.ground_points {
        let (ux, uy) = direction(&mut rng);
        let dist = near_biased(&mut rng, spec.min_range as f64, cap);
        let z = ground_z + gaussian(&mut rng, sigma);
        points.push(clamped(ux * dist, uy * dist, z, cap));
    }

    Ok(PointCloud::new(format!("scene-{}", spec.seed), points))
}

fn clamped(x: f64, y: f64, z: f64, cap: f64) -> Point3 {
    let c = |v: f64| v.clamp(-cap, cap) as f32;
    let cap32 = cap as f32;
    let p = Point3::new(c(x), c(y), c(z));
    // Rounding to f32 can push a value just past the cap.
    Point3::new(p.x.clamp(-cap32, cap32), p.y.clamp(-cap32, cap32), p.z.clamp(-cap32, cap32))
}

/// Appends points whose distance from chosen anchor points straddles `radius`
/// at single-ulp steps, and returns the anchor indices. Querying an anchor
/// with `radius` then exercises the inclusive boundary of the search.
///
/// For each anchor, points are walked ulp by ulp along a few directions
/// around the place where `dist2` crosses `radius²`, keeping `ulps` values on
/// each side of the crossing.
pub fn plant_boundary_points(cloud: &mut PointCloud, anchors: usize, radius: f32, ulps: u32, seed: u64) -> Vec<u32> {
    if cloud.is_empty() || anchors == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x626f_756e_6461_7279);
    let r2 = radius * radius;
    let original = cloud.len();
    let mut chosen = Vec::with_capacity(anchors);
    for _ in 0..anchors {
        let ai = rng.random_range(0..original);
        chosen.push(ai as u32);
        let a = cloud.points[ai];
        let diag = radius * std::f32::consts::FRAC_1_SQRT_2;
        let (ux, uy) = direction(&mut rng);
        let dirs = [
            (1.0, 0.0, 0.0),
            (-1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, -1.0),
            (diag / radius, diag / radius, 0.0),
            (ux as f32, uy as f32, 0.0),
        ];
        for (dx, dy, dz) in dirs {
            // Walk the dominant coordinate; the others stay fixed.
            let mut p = Point3::new(a.x + dx * radius, a.y + dy * radius, a.z + dz * radius);
            let axis = if dx.abs() >= dy.abs() && dx.abs() >= dz.abs() {
                0
            } else if dy.abs() >= dz.abs() {
                1
            } else {
                2
            };
            let outward = [dx, dy, dz][axis] >= 0.0;
            let step = |p: &mut Point3, out: bool| {
                let c = match axis {
                    0 => &mut p.x,
                    1 => &mut p.y,
                    _ => &mut p.z,
                };
                *c = if out == outward { c.next_up() } else { c.next_down() };
            };
            // Move to the last point inside, then collect around it.
            let mut guard = 0;
            while a.dist2(&p) > r2 && guard < 1 << 16 {
                step(&mut p, false);
                guard += 1;
            }
            while guard < 1 << 16 {
                let mut next = p;
                step(&mut next, true);
                if a.dist2(&next) > r2 {
                    break;
                }
                p = next;
                guard += 1;
            }
            for _ in 1..ulps {
                step(&mut p, false);
            }
            for _ in 0..2 * ulps {
                if p.is_finite() {
                    cloud.points.push(p);
                }
                step(&mut p, true);
            }
        }
    }
    chosen
}
