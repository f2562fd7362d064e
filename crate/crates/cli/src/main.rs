use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use geoinv::classifier::{
    open_classifier, protocol, train_logistic, train_nearest_centroid, Dataset, LogisticConfig, Model,
};
use geoinv::fast_marching::export::write_distance_map_csv;
use geoinv::fast_marching::{Node, DEFAULT_MAX_ITERS};
use geoinv::groups::{GroupKind, TransformGroup};
use geoinv::image::io::{load_images, load_labels, save_idx_images, save_idx_labels};
use geoinv::metric::ImageMetricField;
use geoinv::scoring::{
    augment, distance_map, invariance_map, sample_indices, score_subset, AugmentationPolicy, GlobalConfig,
    GlobalScore, ImageScore, ScoreConfig,
};
use geoinv::synthetic::{oriented_bars, shifted_blobs};
use geoinv::Image64;

#[derive(Parser)]
#[command(name = "geoinv", version, about = "Geodesic invariance scores for image classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Invariance score of one image, or the mean over a sampled dataset subset.
    Score(ScoreArgs),
    /// Distance map over a bounded lattice window, as CSV.
    Map(MapArgs),
    /// Invariance of the logistic classifier versus augmentation count, as CSV.
    AugmentExp(AugmentArgs),
    /// Train a built-in classifier and write a model file.
    Train(TrainArgs),
    /// Answer oracle requests on stdin/stdout with a built-in model.
    Serve(ServeArgs),
    /// Metric tensor at every node of a lattice window, as CSV.
    Metric(MetricArgs),
    /// Write a synthetic labeled dataset as IDX files.
    Synth(SynthArgs),
}

#[derive(Args)]
struct GroupArgs {
    /// rot, trans, dilrot or sim.
    #[arg(long, default_value = "trans")]
    group: String,
    /// Per-axis lattice steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<f64>>,
}

impl GroupArgs {
    fn build(&self) -> Result<TransformGroup<f64>> {
        let kind: GroupKind = self.group.parse()?;
        Ok(match &self.steps {
            Some(steps) => TransformGroup::with_steps(kind, steps)?,
            None => TransformGroup::new(kind),
        })
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Single image (PGM, or IDX with --index).
    #[arg(long, conflicts_with = "images", required_unless_present = "images")]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "image")]
    index: usize,
    /// IDX image file to sample from.
    #[arg(long, requires = "sample_size")]
    images: Option<PathBuf>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// builtin:centroid:<file>, builtin:logistic:<file> or exec:<command>.
    #[arg(long)]
    classifier: String,
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Concurrent per-image runs (and oracle worker processes).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// JSON results file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Distance map of the single-image run.
    #[arg(long, requires = "image")]
    map_csv: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[command(flatten)]
    group: GroupArgs,
    /// Odd window side length in lattice nodes, per axis.
    #[arg(long, default_value_t = 41)]
    window: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Adds a per-node label column.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Scored and evaluated set; the training set when omitted.
    #[arg(long, requires = "test_labels")]
    test_images: Option<PathBuf>,
    #[arg(long, requires = "test_images")]
    test_labels: Option<PathBuf>,
    /// Transformed copies per training image, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,3")]
    counts: Vec<usize>,
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    logistic: LogisticArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LogisticArgs {
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
}

impl LogisticArgs {
    fn config(&self, seed: u64) -> LogisticConfig {
        LogisticConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            l2: self.l2,
            seed,
        }
    }
}

#[derive(Args)]
struct PolicyArgs {
    /// Pixels.
    #[arg(long, default_value_t = 3.0)]
    max_translation: f64,
    #[arg(long, default_value_t = 0.7)]
    min_scale: f64,
    #[arg(long, default_value_t = 1.3)]
    max_scale: f64,
    /// Radians.
    #[arg(long, default_value_t = 0.2)]
    max_rotation: f64,
}

impl PolicyArgs {
    fn policy(&self, count: usize, seed: u64) -> AugmentationPolicy {
        AugmentationPolicy {
            max_translation: self.max_translation,
            scale_range: (self.min_scale, self.max_scale),
            max_rotation: self.max_rotation,
            count,
            seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Centroid,
    Logistic,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum)]
    kind: ModelKind,
    #[command(flatten)]
    logistic: LogisticArgs,
    /// Transformed copies per training image added before training.
    #[arg(long, default_value_t = 0)]
    augment: usize,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Classifier selector, usually builtin:<kind>:<file>.
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, default_value_t = 1)]
    window: u32,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Bars,
    Blobs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 16)]
    size: usize,
    /// Random center displacement in pixels.
    #[arg(long, default_value_t = 1.0)]
    jitter: f64,
    /// Bars only: additive uniform noise amplitude.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Blobs only: horizontal distance of each class from the center.
    #[arg(long, default_value_t = 3.0)]
    offset: f64,
    /// Blobs only.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Score(a) => cmd_score(&a),
        Command::Map(a) => cmd_map(&a),
        Command::AugmentExp(a) => cmd_augment(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Serve(a) => cmd_serve(&a),
        Command::Metric(a) => cmd_metric(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geoinv: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// File when given, stdout otherwise. Everything is written in one go at the end.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            f.write_all(bytes)?;
            f.flush().with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn load_one(path: &Path, index: usize) -> Result<Image64> {
    load_indexed(path, index).map(|(img, _)| img)
}

/// The image at `index` and the number of images in the file.
fn load_indexed(path: &Path, index: usize) -> Result<(Image64, usize)> {
    let mut images = load_images::<f64>(path)?;
    ensure!(
        index < images.len(),
        "{} holds {} images, index {index} is out of range",
        path.display(),
        images.len()
    );
    let len = images.len();
    Ok((images.swap_remove(index), len))
}

fn load_dataset(images: &Path, labels: &Path) -> Result<Dataset<f64>> {
    let data = Dataset::new(load_images(images)?, load_labels(labels)?)
        .with_context(|| format!("pairing {} with {}", images.display(), labels.display()))?;
    Ok(data)
}

fn radius_from_window(window: u32, dim: usize) -> Result<Vec<i32>> {
    ensure!(window % 2 == 1, "window must be odd, got {window}");
    Ok(vec![(window / 2) as i32; dim])
}

fn cmd_score(a: &ScoreArgs) -> Result<()> {
    ensure!(a.max_iters >= 1, "max-iters must be at least 1");
    ensure!(a.jobs >= 1, "jobs must be at least 1");
    let group = a.group.build()?;
    let oracle = open_classifier::<f64>(&a.classifier, a.jobs)?;
    let config = ScoreConfig {
        max_iters: a.max_iters,
        window: None,
    };

    let (input, score, sample_size, dataset_size) = if let Some(path) = &a.image {
        let (img, len) = load_indexed(path, a.index)?;
        let (result, map) = invariance_map(&img, &group, &*oracle, &config)
            .with_context(|| format!("scoring {}", path.display()))?;
        if let Some(csv) = &a.map_csv {
            let mut buf = Vec::new();
            write_distance_map_csv(&map, &mut buf)?;
            emit(Some(csv), &buf)?;
        }
        let score = GlobalScore::from_scores(vec![ImageScore {
            index: a.index,
            result: Ok(result),
        }]);
        (path, score, 1, len)
    } else {
        let path = a.images.as_ref().expect("clap requires --image or --images");
        let sample_size = a.sample_size.expect("clap requires --sample-size");
        let images = load_images::<f64>(path)?;
        let indices = sample_indices(images.len(), sample_size, a.seed)?;
        let score = score_subset(&images, &indices, &group, &*oracle, &config, a.jobs)?;
        (path, score, sample_size, images.len())
    };

    let global = GlobalConfig {
        sample_size,
        seed: a.seed,
        jobs: a.jobs,
    };
    let mut report = score.report(&group, &config, &global, dataset_size);
    report.summary.config.input = Some(input.display().to_string());
    report.summary.config.classifier = Some(a.classifier.clone());
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(a.output.as_deref(), json.as_bytes())
}

fn cmd_map(a: &MapArgs) -> Result<()> {
    let group = a.group.build()?;
    let radius = radius_from_window(a.window, group.dim())?;
    let img = load_one(&a.image, a.index)?;
    let oracle = a.classifier.as_deref().map(|s| open_classifier::<f64>(s, 1)).transpose()?;
    let map = distance_map(&img, &group, oracle.as_deref(), &radius, a.max_iters)
        .with_context(|| format!("mapping {}", a.image.display()))?;
    let mut buf = Vec::new();
    write_distance_map_csv(&map, &mut buf)?;
    emit(a.output.as_deref(), &buf)
}

fn cmd_augment(a: &AugmentArgs) -> Result<()> {
    ensure!(!a.counts.is_empty(), "counts list is empty");
    ensure!(a.jobs >= 1, "jobs must be at least 1");
    let group = a.group.build()?;
    let train = load_dataset(&a.images, &a.labels)?;
    let test = match (&a.test_images, &a.test_labels) {
        (Some(i), Some(l)) => load_dataset(i, l)?,
        _ => train.clone(),
    };
    let config = ScoreConfig {
        max_iters: a.max_iters,
        window: None,
    };
    let indices = sample_indices(test.len(), a.sample_size, a.seed)?;

    let mut csv = String::from("count,mean_delta,accuracy,hits,scored\n");
    for &count in &a.counts {
        let augmented = augment(&train, &a.policy.policy(count, a.seed))?;
        let (model, _) = train_logistic(&augmented, &a.logistic.config(a.seed))?;
        let accuracy = test.accuracy(&model)?;
        let score = score_subset(&test.images, &indices, &group, &model, &config, a.jobs)?;
        let mean = score.mean_delta.map(|m| m.to_string()).unwrap_or_default();
        csv.push_str(&format!("{count},{mean},{accuracy},{},{}\n", score.hits, score.images.len()));
    }
    emit(a.output.as_deref(), csv.as_bytes())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut data = load_dataset(&a.images, &a.labels)?;
    if a.augment > 0 {
        data = augment(&data, &a.policy.policy(a.augment, a.seed))?;
    }
    let model = match a.kind {
        ModelKind::Centroid => Model::Centroid(train_nearest_centroid(&data)?),
        ModelKind::Logistic => Model::Linear(train_logistic(&data, &a.logistic.config(a.seed))?.0),
    };
    model.save(&a.output)?;
    println!("training accuracy {}", data.accuracy(&model)?);
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> Result<()> {
    let model = open_classifier::<f64>(&a.model, 1)?;
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    protocol::serve(&*model, stdin, stdout)?;
    Ok(())
}

fn cmd_metric(a: &MetricArgs) -> Result<()> {
    let group = a.group.build()?;
    let radius = radius_from_window(a.window, group.dim())?[0];
    let img = load_one(&a.image, a.index)?;
    let p = group.dim();
    let mut field = ImageMetricField::new(&img, &group);

    let mut header: Vec<String> = (0..p).map(|i| format!("lattice_{i}")).collect();
    header.extend((0..p).flat_map(|i| (0..p).map(move |j| format!("g_{i}_{j}"))));
    let mut csv = header.join(",");
    csv.push('\n');
    let side = 2 * radius + 1;
    for flat in 0..(side as usize).pow(p as u32) {
        let mut coords = vec![0i32; p];
        let mut rest = flat;
        for c in coords.iter_mut().rev() {
            *c = (rest % side as usize) as i32 - radius;
            rest /= side as usize;
        }
        let g = field.metric(&Node::from_slice(&coords))?;
        let mut row: Vec<String> = coords.iter().map(i32::to_string).collect();
        row.extend(g.entries().iter().map(f64::to_string));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    emit(a.output.as_deref(), csv.as_bytes())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.count == 0 {
        bail!("count must be at least 1");
    }
    let data = match a.kind {
        SynthKind::Bars => oriented_bars::<f64>(a.count, a.size, a.jitter, a.noise, a.seed),
        SynthKind::Blobs => shifted_blobs::<f64>(a.count, a.size, a.offset, a.sigma, a.jitter, a.seed),
    };
    save_idx_images(&data.images, &a.images)?;
    save_idx_labels(&data.labels, &a.labels)?;
    Ok(())
}
