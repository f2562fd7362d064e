//! Classifier oracles: anything that maps an image to a label.
//!
//! Built-in models (nearest centroid, linear/logistic) run in process;
//! [`ExecOracle`] talks to an external worker over line-delimited JSON.

mod model;
pub mod protocol;
mod subprocess;
mod train;

pub use model::{LinearModel, Model, NearestCentroidModel, MODEL_MAGIC};
pub use subprocess::ExecOracle;
pub use train::{train_logistic, train_nearest_centroid, LogisticConfig, LogisticObjective, TrainingReport};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub type Label = u32;

pub trait Classifier<T: Real>: Send + Sync {
    fn classify(&self, img: &Image<T>) -> Result<Label>;
}

impl<T: Real, C: Classifier<T> + ?Sized> Classifier<T> for &C {
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        (**self).classify(img)
    }
}

impl<T: Real, C: Classifier<T> + ?Sized> Classifier<T> for Box<C> {
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        (**self).classify(img)
    }
}

/// Adapts a closure into a classifier.
pub struct FnClassifier<F>(pub F);

impl<T: Real, F> Classifier<T> for FnClassifier<F>
where
    F: Fn(&Image<T>) -> Label + Send + Sync,
{
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        Ok((self.0)(img))
    }
}

/// Returns the same label for every image.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier(pub Label);

impl<T: Real> Classifier<T> for ConstantClassifier {
    fn classify(&self, _img: &Image<T>) -> Result<Label> {
        Ok(self.0)
    }
}

/// Images with index-aligned labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub images: Vec<Image<T>>,
    pub labels: Vec<Label>,
}

impl<T: Real> Dataset<T> {
    pub fn new(images: Vec<Image<T>>, labels: Vec<Label>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", images.len()),
                found: format!("{} labels", labels.len()),
            });
        }
        if let Some(first) = images.first() {
            if let Some(bad) = images.iter().find(|i| !i.same_shape(first)) {
                return Err(Error::DimensionMismatch {
                    expected: first.shape_string(),
                    found: bad.shape_string(),
                });
            }
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Fraction of images the classifier labels correctly.
    pub fn accuracy<C: Classifier<T> + ?Sized>(&self, classifier: &C) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for (img, &label) in self.images.iter().zip(&self.labels) {
            if classifier.classify(img)? == label {
                correct += 1;
            }
        }
        Ok(correct as f64 / self.len() as f64)
    }

    /// Per-class example counts; `EmptyClass` if a class below the largest
    /// label has none.
    pub(crate) fn class_counts(&self) -> Result<Vec<usize>> {
        let mut counts = vec![0usize; self.num_classes()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass(empty));
        }
        Ok(counts)
    }
}

/// Opens a classifier from a selector:
/// `builtin:centroid:<model-file>`, `builtin:logistic:<model-file>` or
/// `exec:<command line>` (with `workers` processes).
pub fn open_classifier<T: Real>(selector: &str, workers: usize) -> Result<Box<dyn Classifier<T>>> {
    if let Some(command) = selector.strip_prefix("exec:") {
        return Ok(Box::new(ExecOracle::spawn(command, workers.max(1))?));
    }
    let mut parts = selector.splitn(3, ':');
    let (Some("builtin"), Some(kind), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::InvalidConfig(format!(
            "unknown classifier selector {selector:?} (expected builtin:centroid:<file>, builtin:logistic:<file> or exec:<command>)"
        )));
    };
    let model = Model::load(std::path::Path::new(path))?;
    match (kind, model) {
        ("centroid", m @ Model::Centroid(_)) | ("logistic", m @ Model::Linear(_)) => Ok(Box::new(m)),
        ("centroid" | "logistic", _) => Err(Error::InvalidConfig(format!("{path} does not hold a {kind} model"))),
        _ => Err(Error::InvalidConfig(format!("unknown built-in classifier {kind:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_are_validated() {
        assert!(matches!(open_classifier::<f64>("svm:x", 1), Err(Error::InvalidConfig(_))));
        assert!(matches!(open_classifier::<f64>("builtin:tree:x", 1), Err(Error::Io(_)) | Err(Error::InvalidConfig(_))));
        match open_classifier::<f64>("builtin:centroid:/nonexistent/m.bin", 1) {
            Err(e) => assert!(e.to_string().contains("/nonexistent/m.bin")),
            Ok(_) => panic!("missing file accepted"),
        }
    }

    #[test]
    fn selector_kind_must_match_file() {
        let dir = std::env::temp_dir().join(format!("geoinv-sel-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.bin");
        let m = Model::Centroid(NearestCentroidModel::new(vec![Image::<f64>::zeros(2, 2, 1), Image::zeros(2, 2, 1)]).unwrap());
        m.save(&path).unwrap();
        let sel = format!("builtin:centroid:{}", path.display());
        assert_eq!(open_classifier::<f64>(&sel, 1).unwrap().classify(&Image::zeros(2, 2, 1)).unwrap(), 0);
        assert!(open_classifier::<f64>(&format!("builtin:logistic:{}", path.display()), 1).is_err());
        let exec = open_classifier::<f64>(r#"exec:echo '{"protocol": "manitest-oracle/1"}'; while read -r l; do echo '{"id":0,"label":1}'; done"#, 1)
            .unwrap();
        assert_eq!(exec.classify(&Image::zeros(2, 2, 1)).unwrap(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
