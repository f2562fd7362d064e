//! Small synthetic two-class image tasks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::Dataset;
use crate::image::Image;
use crate::scalar::Real;

fn gaussian(d: f64, sigma: f64) -> f64 {
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Soft vertical (label 0) and horizontal (label 1) bars of half-length
/// `size / 3`, centered within `±jitter` pixels of the image center, plus
/// uniform noise of amplitude `noise`. Labels alternate.
pub fn oriented_bars<T: Real>(count: usize, size: usize, jitter: f64, noise: f64, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (size as f64 - 1.0) / 2.0;
    let half = size as f64 / 3.0;
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let label = (i % 2) as u32;
        let cx = c + rng.gen_range(-jitter..=jitter);
        let cy = c + rng.gen_range(-jitter..=jitter);
        let mut noise_at = |_: usize, _: usize| if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 };
        let img = Image::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (across, along) = if label == 0 { (dx, dy) } else { (dy, dx) };
            let body = gaussian(across, 1.0) * gaussian((along.abs() - half).max(0.0), 1.0);
            T::lit(body + noise_at(x, y))
        });
        images.push(img);
        labels.push(label);
    }
    Dataset { images, labels }
}

/// Isotropic Gaussian blobs (σ = `sigma`) left (label 0) or right (label 1)
/// of center by `offset` pixels, jittered by `±jitter` in each direction.
pub fn shifted_blobs<T: Real>(count: usize, size: usize, offset: f64, sigma: f64, jitter: f64, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (size as f64 - 1.0) / 2.0;
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let label = (i % 2) as u32;
        let side = if label == 0 { -1.0 } else { 1.0 };
        let cx = c + side * offset + rng.gen_range(-jitter..=jitter);
        let cy = c + rng.gen_range(-jitter..=jitter);
        images.push(Image::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            T::lit(gaussian((dx * dx + dy * dy).sqrt(), sigma))
        }));
        labels.push(label);
    }
    Dataset { images, labels }
}
