//! The `manitest-oracle/1` wire protocol.
//!
//! One JSON object per line over a worker's stdin/stdout. The worker first
//! prints the handshake, then answers requests in order:
//!
//! ```text
//! -> {"id":0,"channels":1,"width":2,"height":1,"pixels":[0.0,1.0]}
//! <- {"id":0,"label":3}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Classifier, Label};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const PROTOCOL: &str = "manitest-oracle/1";

/// Exact first line a worker prints.
pub const HANDSHAKE_LINE: &str = r#"{"protocol": "manitest-oracle/1"}"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub channels: usize,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Request {
    pub fn from_image<T: Real>(id: u64, img: &Image<T>) -> Self {
        Self {
            id,
            channels: img.channels(),
            width: img.width(),
            height: img.height(),
            pixels: img.samples().iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    pub fn to_image<T: Real>(&self) -> Result<Image<T>> {
        Image::new(
            self.width,
            self.height,
            self.channels,
            self.pixels.iter().map(|&v| T::lit(v)).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn is_well_formed(&self) -> bool {
        self.id.is_some() && (self.label.is_some() != self.error.is_some())
    }
}

pub fn parse_handshake(line: &str) -> Result<()> {
    let hs: Handshake = serde_json::from_str(line.trim())
        .map_err(|e| Error::OracleFailure(format!("bad handshake {line:?}: {e}")))?;
    if hs.protocol != PROTOCOL {
        return Err(Error::OracleFailure(format!(
            "worker speaks {:?}, expected {PROTOCOL:?}",
            hs.protocol
        )));
    }
    Ok(())
}

fn answer<T: Real, C: Classifier<T> + ?Sized>(classifier: &C, line: &str) -> Response {
    let request: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(|id| id.as_u64()));
            return Response {
                id,
                label: None,
                error: Some(format!("malformed request: {e}")),
            };
        }
    };
    let result = request.to_image::<T>().and_then(|img| classifier.classify(&img));
    match result {
        Ok(label) => Response {
            id: Some(request.id),
            label: Some(label),
            error: None,
        },
        Err(e) => Response {
            id: Some(request.id),
            label: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs a worker loop until `input` reaches end of file.
pub fn serve<T, C, R, W>(classifier: &C, input: R, mut output: W) -> Result<()>
where
    T: Real,
    C: Classifier<T> + ?Sized,
    R: BufRead,
    W: Write,
{
    writeln!(output, "{HANDSHAKE_LINE}")?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = answer::<T, C>(classifier, &line);
        serde_json::to_writer(&mut output, &response).map_err(|e| Error::OracleFailure(e.to_string()))?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}
