//! Built-in models and their binary container.
//!
//! Container layout (little-endian):
//!
//! ```text
//! magic     8 bytes   "MTMODEL1"
//! kind      u32       1 = nearest centroid, 2 = linear
//! classes   u32
//! channels  u32
//! width     u32
//! height    u32
//! tensors   classes × channels·width·height f64 (centroids or weights)
//! biases    classes f64 (linear models only)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Classifier, Label};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const MODEL_MAGIC: &[u8; 8] = b"MTMODEL1";

const KIND_CENTROID: u32 = 1;
const KIND_LINEAR: u32 = 2;

fn check_shape<T: Real>(expected: &Image<T>, img: &Image<T>) -> Result<()> {
    if expected.same_shape(img) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: expected.shape_string(),
            found: img.shape_string(),
        })
    }
}

/// Index of the first maximal score.
fn argmax<T: Real>(scores: impl Iterator<Item = T>) -> Label {
    let mut best = (0, T::neg_infinity());
    for (i, s) in scores.enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0 as Label
}

/// Predicts the class whose mean image is closest in L².
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCentroidModel<T> {
    centroids: Vec<Image<T>>,
}

impl<T: Real> NearestCentroidModel<T> {
    pub fn new(centroids: Vec<Image<T>>) -> Result<Self> {
        if centroids.len() < 2 {
            return Err(Error::InvalidConfig("a classifier needs at least two classes".into()));
        }
        for c in &centroids[1..] {
            check_shape(&centroids[0], c)?;
        }
        Ok(Self { centroids })
    }

    pub fn centroids(&self) -> &[Image<T>] {
        &self.centroids
    }
}

impl<T: Real> Classifier<T> for NearestCentroidModel<T> {
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        check_shape(&self.centroids[0], img)?;
        Ok(argmax(self.centroids.iter().map(|c| {
            -c.samples()
                .iter()
                .zip(img.samples())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
        })))
    }
}

/// `argmax_c ⟨w_c, I⟩ + b_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    weights: Vec<Image<T>>,
    biases: Vec<T>,
}

impl<T: Real> LinearModel<T> {
    pub fn new(weights: Vec<Image<T>>, biases: Vec<T>) -> Result<Self> {
        if weights.len() < 2 || weights.len() != biases.len() {
            return Err(Error::InvalidConfig(format!(
                "linear model needs ≥ 2 classes with one bias each (got {} weights, {} biases)",
                weights.len(),
                biases.len()
            )));
        }
        for w in &weights[1..] {
            check_shape(&weights[0], w)?;
        }
        Ok(Self { weights, biases })
    }

    pub fn weights(&self) -> &[Image<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    pub fn scores(&self, img: &Image<T>) -> Result<Vec<T>> {
        check_shape(&self.weights[0], img)?;
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| Ok(w.inner_product(img)? + b))
            .collect()
    }
}

impl<T: Real> Classifier<T> for LinearModel<T> {
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        Ok(argmax(self.scores(img)?.into_iter()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Centroid(NearestCentroidModel<T>),
    Linear(LinearModel<T>),
}

impl<T: Real> Classifier<T> for Model<T> {
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        match self {
            Model::Centroid(m) => m.classify(img),
            Model::Linear(m) => m.classify(img),
        }
    }
}

impl<T: Real> Model<T> {
    fn tensors(&self) -> &[Image<T>] {
        match self {
            Model::Centroid(m) => &m.centroids,
            Model::Linear(m) => &m.weights,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.tensors().len()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let tensors = self.tensors();
        let first = &tensors[0];
        out.write_all(MODEL_MAGIC)?;
        out.write_u32::<LittleEndian>(match self {
            Model::Centroid(_) => KIND_CENTROID,
            Model::Linear(_) => KIND_LINEAR,
        })?;
        for v in [tensors.len(), first.channels(), first.width(), first.height()] {
            out.write_u32::<LittleEndian>(v as u32)?;
        }
        for t in tensors {
            for &s in t.samples() {
                out.write_f64::<LittleEndian>(s.to_f64_lossy())?;
            }
        }
        if let Model::Linear(m) = self {
            for &b in &m.biases {
                out.write_f64::<LittleEndian>(b.to_f64_lossy())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::format("model", "file too short"))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::format("model", "missing MTMODEL1 magic"));
        }
        let mut header = [0u32; 5];
        for slot in header.iter_mut() {
            *slot = input
                .read_u32::<LittleEndian>()
                .map_err(|_| Error::format("model", "truncated header"))?;
        }
        let [kind, classes, channels, width, height] = header.map(|v| v as usize);
        let per = channels * width * height;
        let mut read_f64s = |n: usize| -> Result<Vec<T>> {
            (0..n)
                .map(|_| {
                    input
                        .read_f64::<LittleEndian>()
                        .map(T::lit)
                        .map_err(|_| Error::format("model", "truncated tensor data"))
                })
                .collect()
        };
        let mut tensors = Vec::with_capacity(classes);
        for _ in 0..classes {
            tensors.push(Image::new(width, height, channels, read_f64s(per)?)?);
        }
        match kind as u32 {
            KIND_CENTROID => Ok(Model::Centroid(NearestCentroidModel::new(tensors)?)),
            KIND_LINEAR => {
                let biases = read_f64s(classes)?;
                Ok(Model::Linear(LinearModel::new(tensors, biases)?))
            }
            other => Err(Error::format("model", format!("unknown model kind {other}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::read(BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
