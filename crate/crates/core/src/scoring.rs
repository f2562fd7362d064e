//! Invariance scores: per image, averaged over a dataset, and the
//! augmentation generator used to compare training regimes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{Classifier, Dataset, Label};
use crate::error::{Error, Result};
use crate::fast_marching::{
    DistanceMap, FastMarching, GeodesicPath, Lattice, Node, Outcome, StopSignal, DEFAULT_MAX_ITERS,
};
use crate::groups::{GroupKind, GroupPoint, Params, TransformGroup};
use crate::image::Image;
use crate::metric::ImageMetricField;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    pub max_iters: usize,
    /// Optional per-axis lattice radius; unbounded when `None`.
    pub window: Option<Vec<i32>>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreOutcome {
    /// A label-changing transformation was found.
    Hit,
    /// The budget (or a bounded window) ran out first.
    Exhausted,
    /// The metric vanished at some visited node.
    Degenerate,
    /// The run failed for another reason (oracle, input).
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceResult<T> {
    pub outcome: ScoreOutcome,
    /// `U(flip)/‖I‖` on a hit.
    pub delta: Option<T>,
    /// Un-normalized geodesic distance to the flip node.
    pub distance: Option<T>,
    pub norm: T,
    pub flip: Option<GroupPoint<T>>,
    pub flip_label: Option<Label>,
    pub original_label: Label,
    /// From the flip node back to the identity.
    pub path: Option<GeodesicPath<T>>,
    /// Frozen nodes.
    pub visited: usize,
}

/// Scores one image and also returns the distance map of the run.
pub fn invariance_map<T, C>(
    img: &Image<T>,
    group: &TransformGroup<T>,
    oracle: &C,
    config: &ScoreConfig,
) -> Result<(InvarianceResult<T>, DistanceMap<T>)>
where
    T: Real,
    C: Classifier<T> + ?Sized,
{
    let norm = img.l2_norm();
    if !(norm > T::zero()) {
        return Err(Error::ZeroImage);
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    let original_label = oracle.classify(img)?;

    let mut lattice = Lattice::for_group(group);
    if let Some(radius) = &config.window {
        if radius.len() != group.dim() || radius.iter().any(|&r| r < 0) {
            return Err(Error::InvalidConfig(format!(
                "window needs {} non-negative radii, got {radius:?}",
                group.dim()
            )));
        }
        lattice = lattice.with_window(radius);
    }
    let fm = FastMarching::new(lattice, config.max_iters);
    let mut field = ImageMetricField::new(img, group);
    let result = fm.run(
        |node| field.metric(node),
        |node, _| {
            let label = if node.is_origin() {
                original_label
            } else {
                let params = group.params_from_lattice(node.coords());
                oracle.classify(&img.warp(group, &params)?)?
            };
            Ok(StopSignal {
                halt: label != original_label,
                label: Some(label),
            })
        },
    )?;

    let visited = result.iterations;
    let scored = match result.outcome {
        Outcome::Hit { node, distance } => {
            let path = result.map.backtrace(&node)?;
            InvarianceResult {
                outcome: ScoreOutcome::Hit,
                delta: Some(distance / norm),
                distance: Some(distance),
                norm,
                flip: Some(group.point_from_lattice(node.coords())),
                flip_label: result.map.get(&node).and_then(|r| r.label),
                original_label,
                path: Some(path),
                visited,
            }
        }
        Outcome::Exhausted | Outcome::Completed => InvarianceResult {
            outcome: ScoreOutcome::Exhausted,
            delta: None,
            distance: None,
            norm,
            flip: None,
            flip_label: None,
            original_label,
            path: None,
            visited,
        },
    };
    Ok((scored, result.map))
}

/// Minimal normalized geodesic distance to a label change.
pub fn invariance_score<T, C>(
    img: &Image<T>,
    group: &TransformGroup<T>,
    oracle: &C,
    config: &ScoreConfig,
) -> Result<InvarianceResult<T>>
where
    T: Real,
    C: Classifier<T> + ?Sized,
{
    invariance_map(img, group, oracle, config).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalConfig {
    pub sample_size: usize,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

#[derive(Debug)]
pub struct ImageScore<T> {
    pub index: usize,
    pub result: Result<InvarianceResult<T>>,
}

impl<T> ImageScore<T> {
    pub fn outcome(&self) -> ScoreOutcome {
        match &self.result {
            Ok(r) => r.outcome,
            Err(Error::DegenerateMetric(_)) => ScoreOutcome::Degenerate,
            Err(_) => ScoreOutcome::Error,
        }
    }
}

#[derive(Debug)]
pub struct GlobalScore<T> {
    /// Sorted by dataset index.
    pub images: Vec<ImageScore<T>>,
    /// Mean of Δ over hits; `None` without hits.
    pub mean_delta: Option<T>,
    /// Sample standard deviation of Δ over hits; `None` below two hits.
    pub std: Option<T>,
    pub hits: usize,
    pub exhausted: usize,
    pub degenerate: usize,
    pub errors: usize,
}

/// Indices of a seeded random subset, in increasing order.
pub fn sample_indices(len: usize, sample_size: usize, seed: u64) -> Result<Vec<usize>> {
    if sample_size > len {
        return Err(Error::InvalidConfig(format!(
            "sample size {sample_size} exceeds dataset size {len}"
        )));
    }
    let mut indices: Vec<usize> = (0..len).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    indices.truncate(sample_size);
    indices.sort_unstable();
    Ok(indices)
}

/// Average invariance over a seeded random subset of `images`.
pub fn global_score<T, C>(
    images: &[Image<T>],
    group: &TransformGroup<T>,
    oracle: &C,
    config: &ScoreConfig,
    global: &GlobalConfig,
) -> Result<GlobalScore<T>>
where
    T: Real,
    C: Classifier<T> + ?Sized,
{
    let indices = sample_indices(images.len(), global.sample_size, global.seed)?;
    score_subset(images, &indices, group, oracle, config, global.jobs)
}

/// Scores `images[i]` for every listed index, on up to `jobs` threads
/// (0 lets rayon decide).
pub fn score_subset<T, C>(
    images: &[Image<T>],
    indices: &[usize],
    group: &TransformGroup<T>,
    oracle: &C,
    config: &ScoreConfig,
    jobs: usize,
) -> Result<GlobalScore<T>>
where
    T: Real,
    C: Classifier<T> + ?Sized,
{
    if let Some(&bad) = indices.iter().find(|&&i| i >= images.len()) {
        return Err(Error::InvalidConfig(format!(
            "image index {bad} out of range for {} images",
            images.len()
        )));
    }
    let mut indices = indices.to_vec();
    indices.sort_unstable();
    indices.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let scored: Vec<ImageScore<T>> = pool.install(|| {
        indices
            .par_iter()
            .map(|&index| ImageScore {
                index,
                result: invariance_score(&images[index], group, oracle, config),
            })
            .collect()
    });
    Ok(summarize(scored))
}

/// Fast Marching from the identity over a bounded window, without stopping.
/// With an oracle, every frozen node also gets its label.
pub fn distance_map<T, C>(
    img: &Image<T>,
    group: &TransformGroup<T>,
    oracle: Option<&C>,
    radius: &[i32],
    max_iters: usize,
) -> Result<DistanceMap<T>>
where
    T: Real,
    C: Classifier<T> + ?Sized,
{
    if radius.len() != group.dim() || radius.iter().any(|&r| r < 0) {
        return Err(Error::InvalidConfig(format!(
            "window needs {} non-negative radii, got {radius:?}",
            group.dim()
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    let mut field = ImageMetricField::new(img, group);
    // A blank image is degenerate even when the window holds only the identity.
    field.metric(&Node::origin(group.dim()))?;
    let fm = FastMarching::new(Lattice::for_group(group).with_window(radius), max_iters);
    let result = fm.run(
        |node| field.metric(node),
        |node, _| {
            let label = match oracle {
                Some(o) => Some(o.classify(&img.warp(group, &group.params_from_lattice(node.coords()))?)?),
                None => None,
            };
            Ok(StopSignal { halt: false, label })
        },
    )?;
    Ok(result.map)
}

impl<T: Real> GlobalScore<T> {
    /// Aggregates per-image results that were computed elsewhere.
    pub fn from_scores(images: Vec<ImageScore<T>>) -> Self {
        summarize(images)
    }
}

fn summarize<T: Real>(images: Vec<ImageScore<T>>) -> GlobalScore<T> {
    let deltas: Vec<T> = images
        .iter()
        .filter_map(|s| s.result.as_ref().ok().and_then(|r| r.delta))
        .collect();
    let count = |o: ScoreOutcome| images.iter().filter(|s| s.outcome() == o).count();
    let hits = deltas.len();
    let mean_delta = (hits > 0).then(|| deltas.iter().copied().sum::<T>() / T::from_usize_lossy(hits));
    let std = mean_delta.filter(|_| hits > 1).map(|m| {
        let ss: T = deltas.iter().map(|&d| (d - m) * (d - m)).sum();
        (ss / T::from_usize_lossy(hits - 1)).sqrt()
    });
    GlobalScore {
        exhausted: count(ScoreOutcome::Exhausted),
        degenerate: count(ScoreOutcome::Degenerate),
        errors: count(ScoreOutcome::Error),
        images,
        mean_delta,
        std,
        hits,
    }
}

/// Per-image entry of the JSON results file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageReport {
    pub index: usize,
    pub outcome: ScoreOutcome,
    pub delta: Option<f64>,
    pub flip_label: Option<Label>,
    pub original_label: Option<Label>,
    pub flip_params: Option<Vec<f64>>,
    pub visited: usize,
    pub path: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<String>,
    pub group: String,
    pub steps: Vec<f64>,
    pub max_iters: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub dataset_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean_delta: Option<f64>,
    pub std: Option<f64>,
    pub hits: usize,
    pub exhausted: usize,
    pub degenerate: usize,
    pub errors: usize,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub summary: Summary,
    pub images: Vec<ImageReport>,
}

fn to_f64s<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

impl<T: Real> ImageScore<T> {
    pub fn report(&self) -> ImageReport {
        match &self.result {
            Ok(r) => ImageReport {
                index: self.index,
                outcome: r.outcome,
                delta: r.delta.map(|d| d.to_f64_lossy()),
                flip_label: r.flip_label,
                original_label: Some(r.original_label),
                flip_params: r.flip.as_ref().map(|p| to_f64s(p.params.as_slice())),
                visited: r.visited,
                path: r
                    .path
                    .as_ref()
                    .map(|p| p.points.iter().map(|q| to_f64s(q)).collect())
                    .unwrap_or_default(),
                error: None,
            },
            Err(e) => ImageReport {
                index: self.index,
                outcome: self.outcome(),
                delta: None,
                flip_label: None,
                original_label: None,
                flip_params: None,
                visited: 0,
                path: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    }
}

impl<T: Real> GlobalScore<T> {
    pub fn report(
        &self,
        group: &TransformGroup<T>,
        config: &ScoreConfig,
        global: &GlobalConfig,
        dataset_size: usize,
    ) -> ScoreReport {
        ScoreReport {
            summary: Summary {
                mean_delta: self.mean_delta.map(|v| v.to_f64_lossy()),
                std: self.std.map(|v| v.to_f64_lossy()),
                hits: self.hits,
                exhausted: self.exhausted,
                degenerate: self.degenerate,
                errors: self.errors,
                config: ConfigEcho {
                    input: None,
                    classifier: None,
                    group: group.kind().token().to_string(),
                    steps: to_f64s(group.steps()),
                    max_iters: config.max_iters,
                    sample_size: global.sample_size,
                    seed: global.seed,
                    dataset_size,
                },
            },
            images: self.images.iter().map(ImageScore::report).collect(),
        }
    }
}

/// Random similarity transformations for training-set augmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPolicy {
    /// Pixels, applied independently in x and y.
    pub max_translation: f64,
    pub scale_range: (f64, f64),
    /// Radians.
    pub max_rotation: f64,
    /// Copies per original.
    pub count: usize,
    pub seed: u64,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self {
            max_translation: 3.0,
            scale_range: (0.7, 1.3),
            max_rotation: 0.2,
            count: 1,
            seed: 0,
        }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        let finite = [self.max_translation, lo, hi, self.max_rotation].iter().all(|v| v.is_finite());
        if !finite || self.max_translation < 0.0 || self.max_rotation < 0.0 || !(lo > 0.0) || lo > hi {
            return Err(Error::InvalidConfig(format!("invalid augmentation policy {self:?}")));
        }
        Ok(())
    }

    /// Similarity-group parameters `[tx, ty, a − 1, θ]`, drawn in that order.
    pub fn sample<T: Real, R: Rng>(&self, rng: &mut R) -> Params<T> {
        let t = self.max_translation;
        let tx = rng.gen_range(-t..=t);
        let ty = rng.gen_range(-t..=t);
        let a = rng.gen_range(self.scale_range.0..=self.scale_range.1);
        let theta = rng.gen_range(-self.max_rotation..=self.max_rotation);
        Params::from_slice(&[T::lit(tx), T::lit(ty), T::lit(a - 1.0), T::lit(theta)])
    }
}

/// Appends `policy.count` randomly transformed copies of every image.
pub fn augment<T: Real>(data: &Dataset<T>, policy: &AugmentationPolicy) -> Result<Dataset<T>> {
    policy.validate()?;
    let group = TransformGroup::<T>::new(GroupKind::Similarity);
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut images = data.images.clone();
    let mut labels = data.labels.clone();
    for (img, &label) in data.images.iter().zip(&data.labels) {
        for _ in 0..policy.count {
            let params = policy.sample::<T, _>(&mut rng);
            images.push(img.warp(&group, &params)?);
            labels.push(label);
        }
    }
    Dataset::new(images, labels)
}
