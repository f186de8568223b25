//! Two-dimensional synthetic classification datasets.
//!
//! Every generator returns balanced classes, listed class by class, and is
//! deterministic for a given seed. Noise is isotropic Gaussian with the given
//! standard deviation, added to both coordinates.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LabeledDataset;
use crate::{Error, Result};

/// Centers of the three single-blob classes: a triangle of radius 6.
pub const SINGLE_BLOB_CENTERS: [[f64; 2]; 3] = [
    [0.0, 6.0],
    [-5.196152422706632, -3.0],
    [5.196152422706632, -3.0],
];

pub const SINGLE_BLOB_STDS: [f64; 3] = [1.0, 2.5, 0.5];

/// Six centers on a hexagon of radius 6, counter-clockwise from the
/// positive x axis.
pub const DOUBLE_BLOB_CENTERS: [[f64; 2]; 6] = [
    [6.0, 0.0],
    [3.0, 5.196152422706632],
    [-3.0, 5.196152422706632],
    [-6.0, 0.0],
    [-3.0, -5.196152422706632],
    [3.0, -5.196152422706632],
];

/// Neighboring hexagon vertices share a class.
pub const DOUBLE_BLOB_LABELS: [usize; 6] = [0, 0, 1, 1, 2, 2];

fn check_even(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "sample count must be even for two balanced classes, got {n}"
        )));
    }
    Ok(())
}

struct Noise {
    normal: Option<Normal<f64>>,
}

impl Noise {
    fn new(std: f64) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation must be finite and non-negative, got {std}"
            )));
        }
        let normal = if std > 0.0 {
            Some(Normal::new(0.0, std).expect("validated standard deviation"))
        } else {
            None
        };
        Ok(Noise { normal })
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, point: [f64; 2]) -> [f64; 2] {
        match &self.normal {
            Some(d) => [point[0] + d.sample(rng), point[1] + d.sample(rng)],
            None => point,
        }
    }
}

fn linspace(start: f64, stop: f64, count: usize, endpoint: bool) -> impl Iterator<Item = f64> {
    let denom = if endpoint { count.saturating_sub(1).max(1) } else { count };
    let step = (stop - start) / denom as f64;
    (0..count).map(move |k| start + step * k as f64)
}

fn assemble(points: Vec<[f64; 2]>, labels: Vec<usize>, classes: usize) -> Result<LabeledDataset> {
    let n = points.len();
    let flat: Vec<f64> = points.into_iter().flatten().collect();
    let features = Array2::from_shape_vec((n, 2), flat).expect("two coordinates per point");
    LabeledDataset::new(features, labels, classes)
}

/// Two interleaving half circles.
///
/// Class 0 lies on the upper unit half circle; class 1 is the same arc
/// turned upside down and shifted by `(1, 0.5)`, i.e. `(1 - cos t, 0.5 - sin t)`.
pub fn gen_moons(n: usize, noise_std: f64, seed: u64) -> Result<LabeledDataset> {
    check_even(n)?;
    let noise = Noise::new(noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut points = Vec::with_capacity(n);
    for t in linspace(0.0, PI, half, true) {
        points.push(noise.perturb(&mut rng, [t.cos(), t.sin()]));
    }
    for t in linspace(0.0, PI, half, true) {
        points.push(noise.perturb(&mut rng, [1.0 - t.cos(), 1.0 - t.sin() - 0.5]));
    }
    let labels = (0..n).map(|k| usize::from(k >= half)).collect();
    assemble(points, labels, 2)
}

/// Two concentric circles: class 0 on the unit circle, class 1 on the circle
/// of radius `inner_factor`.
pub fn gen_circles(n: usize, noise_std: f64, inner_factor: f64, seed: u64) -> Result<LabeledDataset> {
    check_even(n)?;
    if !(inner_factor > 0.0 && inner_factor < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inner factor must lie in (0, 1), got {inner_factor}"
        )));
    }
    let noise = Noise::new(noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut points = Vec::with_capacity(n);
    for radius in [1.0, inner_factor] {
        for t in linspace(0.0, 2.0 * PI, half, false) {
            points.push(noise.perturb(&mut rng, [radius * t.cos(), radius * t.sin()]));
        }
    }
    let labels = (0..n).map(|k| usize::from(k >= half)).collect();
    assemble(points, labels, 2)
}

/// Two interleaved Archimedean spirals of outer radius 1.
///
/// The angle `t` is uniform on `[0, 2 pi turns]` and the radius is
/// `t / (2 pi turns)`. Class 1 is class 0 rotated by `pi`.
pub fn gen_spirals(n: usize, noise_std: f64, turns: f64, seed: u64) -> Result<LabeledDataset> {
    check_even(n)?;
    if !(turns > 0.0 && turns.is_finite()) {
        return Err(Error::InvalidArgument(format!("turns must be positive, got {turns}")));
    }
    let noise = Noise::new(noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_angle = 2.0 * PI * turns;
    let half = n / 2;
    let mut points = Vec::with_capacity(n);
    for class in 0..2 {
        let sign = if class == 0 { 1.0 } else { -1.0 };
        for _ in 0..half {
            let t = rng.random_range(0.0..=max_angle);
            let r = t / max_angle;
            points.push(noise.perturb(&mut rng, [sign * r * t.cos(), sign * r * t.sin()]));
        }
    }
    let labels = (0..n).map(|k| usize::from(k >= half)).collect();
    assemble(points, labels, 2)
}

/// Isotropic Gaussian blobs.
///
/// `labels[k]` is the class of `centers[k]` (defaults to `k`). Each class
/// receives `n / C` points, divided as evenly as possible between its
/// centers.
pub fn gen_blobs(
    n: usize,
    centers: &[[f64; 2]],
    stds: &[f64],
    labels: Option<&[usize]>,
    seed: u64,
) -> Result<LabeledDataset> {
    if centers.len() != stds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} centers but {} standard deviations",
            centers.len(),
            stds.len()
        )));
    }
    let default_labels: Vec<usize> = (0..centers.len()).collect();
    let labels = labels.unwrap_or(&default_labels);
    if labels.len() != centers.len() {
        return Err(Error::InvalidArgument(format!(
            "{} centers but {} labels",
            centers.len(),
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    if classes < 2 {
        return Err(Error::InvalidArgument("blobs need at least 2 classes".into()));
    }
    if let Some(missing) = (0..classes).find(|c| !labels.contains(c)) {
        return Err(Error::InvalidArgument(format!("class {missing} has no center")));
    }
    if n == 0 || !n.is_multiple_of(classes) {
        return Err(Error::InvalidArgument(format!(
            "sample count {n} is not a positive multiple of the class count {classes}"
        )));
    }
    let noises = stds.iter().map(|&s| Noise::new(s)).collect::<Result<Vec<_>>>()?;

    let per_class = n / classes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut out_labels = Vec::with_capacity(n);
    for class in 0..classes {
        let members: Vec<usize> = (0..centers.len()).filter(|&k| labels[k] == class).collect();
        for (rank, &k) in members.iter().enumerate() {
            let count = per_class / members.len() + usize::from(rank < per_class % members.len());
            for _ in 0..count {
                points.push(noises[k].perturb(&mut rng, centers[k]));
                out_labels.push(class);
            }
        }
    }
    assemble(points, out_labels, classes)
}

/// Three blobs with standard deviations 1.0, 2.5 and 0.5.
pub fn single_blobs(n: usize, seed: u64) -> Result<LabeledDataset> {
    gen_blobs(n, &SINGLE_BLOB_CENTERS, &SINGLE_BLOB_STDS, None, seed)
}

/// Three classes, each made of two neighboring blobs of standard deviation 1.0.
pub fn double_blobs(n: usize, seed: u64) -> Result<LabeledDataset> {
    gen_blobs(n, &DOUBLE_BLOB_CENTERS, &[1.0; 6], Some(&DOUBLE_BLOB_LABELS), seed)
}
