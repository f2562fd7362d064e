//! External classifier workers driven over the wire protocol.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{parse_handshake, Request, Response};
use super::{Classifier, Label};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_RETRIES: usize = 3;

struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::OracleFailure(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let worker = Self { child, stdin, lines: rx };
        match worker.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => parse_handshake(&line)?,
            Ok(Err(e)) => return Err(Error::OracleFailure(format!("{command:?}: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::OracleFailure(format!("{command:?}: no handshake within {timeout:?}")))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::OracleFailure(format!("{command:?} exited before the handshake")))
            }
        }
        Ok(worker)
    }

    fn send(&mut self, request: &Request) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::OracleFailure("worker input closed".into()))?;
        let mut line = serde_json::to_vec(request).map_err(|e| Error::OracleFailure(e.to_string()))?;
        line.push(b'\n');
        stdin
            .write_all(&line)
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::OracleFailure(format!("worker input: {e}")))
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A pool of worker processes, each running `sh -c <command>`.
///
/// Every worker handles one request at a time; concurrent callers block
/// until a worker is free.
pub struct ExecOracle {
    command: String,
    idle: Mutex<Vec<Worker>>,
    freed: Condvar,
    timeout: Duration,
    retries: usize,
    next_id: AtomicU64,
}

impl std::fmt::Debug for ExecOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExecOracle")
            .field("command", &self.command)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExecOracle {
    pub fn spawn(command: &str, workers: usize) -> Result<Self> {
        Self::with_options(command, workers, DEFAULT_TIMEOUT, DEFAULT_RETRIES)
    }

    pub fn with_options(command: &str, workers: usize, timeout: Duration, retries: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidConfig("at least one worker is required".into()));
        }
        let idle = (0..workers)
            .map(|_| Worker::spawn(command, timeout))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            command: command.to_string(),
            idle: Mutex::new(idle),
            freed: Condvar::new(),
            timeout,
            retries,
            next_id: AtomicU64::new(0),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn checkout(&self) -> Worker {
        let mut idle = self.idle.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if let Some(w) = idle.pop() {
                return w;
            }
            idle = self.freed.wait(idle).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn checkin(&self, worker: Worker) {
        self.idle.lock().unwrap_or_else(|e| e.into_inner()).push(worker);
        self.freed.notify_one();
    }

    fn query(&self, worker: &mut Worker, img_request: &mut Request) -> Result<Label> {
        let deadline = Instant::now() + self.timeout;
        let mut malformed = 0;
        loop {
            img_request.id = self.next_id.fetch_add(1, Ordering::Relaxed);
            worker.send(img_request)?;
            loop {
                let remaining = deadline.saturating_duration_since(Instant::now());
                let line = match worker.lines.recv_timeout(remaining) {
                    Ok(Ok(line)) => line,
                    Ok(Err(e)) => return Err(Error::OracleFailure(format!("worker output: {e}"))),
                    Err(RecvTimeoutError::Timeout) => {
                        return Err(Error::OracleFailure(format!("no reply within {:?}", self.timeout)))
                    }
                    Err(RecvTimeoutError::Disconnected) => {
                        return Err(Error::OracleFailure("worker exited".into()))
                    }
                };
                match serde_json::from_str::<Response>(&line) {
                    Ok(r) if r.is_well_formed() && r.id < Some(img_request.id) => continue,
                    Ok(r) if r.is_well_formed() && r.id == Some(img_request.id) => {
                        return match (r.label, r.error) {
                            (Some(label), _) => Ok(label),
                            (None, error) => Err(Error::OracleFailure(format!(
                                "worker error: {}",
                                error.unwrap_or_default()
                            ))),
                        };
                    }
                    _ => {}
                }
                malformed += 1;
                if malformed > self.retries {
                    return Err(Error::OracleFailure(format!(
                        "{malformed} malformed replies, last was {line:?}"
                    )));
                }
                break;
            }
        }
    }
}

impl<T: Real> Classifier<T> for ExecOracle {
    fn classify(&self, img: &Image<T>) -> Result<Label> {
        let mut request = Request::from_image(0, img);
        let mut worker = self.checkout();
        let result = self.query(&mut worker, &mut request);
        self.checkin(worker);
        result
    }
}
