//! Line-protocol client for external generator/classifier processes.
//!
//! A remote model is a child process that answers one JSON request per line
//! on stdin with one JSON response per line on stdout:
//!
//! ```text
//! -> {"op":"decode","z_sem":[..],"z_T":7}
//! <- {"ok":true,"image":{"w":64,"h":64,"px":[..]}}
//! -> {"op":"classify","image":{"w":64,"h":64,"px":[..]}}
//! <- {"ok":true,"logit":-1.25}
//! <- {"ok":false,"error":"message"}
//! ```
//!
//! Floats travel with 17 significant digits, so values survive the round trip
//! bit-exactly and the determinism contract extends across the process
//! boundary. A handle serializes its requests; run several child processes
//! (see [`RemotePool`]) to decode in parallel.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::textio;
use crate::worldmodel::{Classifier, Generator, Image, StochasticCode};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Decode {
        z_sem: &'a [f64],
        #[serde(rename = "z_T")]
        z_t: u64,
    },
    Classify {
        image: &'a Image,
    },
}

#[derive(Deserialize)]
struct Response {
    ok: bool,
    #[serde(default)]
    image: Option<Image>,
    #[serde(default)]
    logit: Option<f64>,
    #[serde(default)]
    error: Option<String>,
}

struct RemoteChild {
    child: Child,
    stdin: ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
}

impl RemoteChild {
    fn spawn(command: &[String]) -> Result<RemoteChild> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::arg("remote command is empty"))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Remote(format!("failed to spawn '{program}': {e}")))?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(RemoteChild {
            child,
            stdin,
            lines: rx,
        })
    }

    fn round_trip(&mut self, request: &Request<'_>, timeout: Duration) -> Result<Response> {
        let mut line = textio::to_json_string(request)?;
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Remote(format!("writing request: {e}")))?;

        let raw = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::Remote(format!("reading response: {e}"))),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                return Err(Error::Remote(format!(
                    "no response within {}s",
                    timeout.as_secs_f64()
                )))
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                let status = self
                    .child
                    .try_wait()
                    .ok()
                    .flatten()
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "unknown".into());
                return Err(Error::Remote(format!(
                    "child closed its output (exit status: {status})"
                )));
            }
        };

        let response: Response = textio::from_json_str(raw.trim_end())
            .map_err(|_| Error::Remote(format!("malformed response: {raw:?}")))?;
        if !response.ok {
            return Err(Error::Remote(format!(
                "model reported failure: {}",
                response.error.unwrap_or_else(|| "(no message)".into())
            )));
        }
        Ok(response)
    }
}

impl Drop for RemoteChild {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Handle to one child process. Requests are serialized: one in flight per
/// child at any time.
pub struct RemoteModel {
    inner: Mutex<RemoteChild>,
    latent_dim: usize,
    timeout: Duration,
}

impl RemoteModel {
    /// Spawns `command` (program plus arguments, no shell interpretation).
    /// The protocol does not carry the latent width, so the caller supplies
    /// it; requests of any other width are rejected locally.
    pub fn spawn(command: &[String], latent_dim: usize, timeout: Duration) -> Result<RemoteModel> {
        Ok(RemoteModel {
            inner: Mutex::new(RemoteChild::spawn(command)?),
            latent_dim,
            timeout,
        })
    }

    pub fn spawn_cmdline(cmdline: &str, latent_dim: usize) -> Result<RemoteModel> {
        let parts: Vec<String> = cmdline.split_whitespace().map(str::to_string).collect();
        RemoteModel::spawn(&parts, latent_dim, DEFAULT_TIMEOUT)
    }

    fn request(&self, request: &Request<'_>) -> Result<Response> {
        let mut guard = self
            .inner
            .lock()
            .map_err(|_| Error::Remote("remote handle poisoned by an earlier panic".into()))?;
        guard.round_trip(request, self.timeout)
    }
}

impl Generator for RemoteModel {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn decode(&self, z_sem: &Vector, z_t: StochasticCode) -> Result<Image> {
        if z_sem.len() != self.latent_dim {
            return Err(Error::dim(format!(
                "remote generator expects latent width {}, got {}",
                self.latent_dim,
                z_sem.len()
            )));
        }
        let response = self.request(&Request::Decode {
            z_sem: z_sem.as_slice(),
            z_t: z_t.seed,
        })?;
        response
            .image
            .ok_or_else(|| Error::Remote("decode response carried no image".into()))
    }
}

impl Classifier for RemoteModel {
    fn classify(&self, image: &Image) -> Result<f64> {
        let response = self.request(&Request::Classify { image })?;
        let logit = response
            .logit
            .ok_or_else(|| Error::Remote("classify response carried no logit".into()))?;
        if !logit.is_finite() {
            return Err(Error::Remote(format!("non-finite logit {logit}")));
        }
        Ok(logit)
    }
}

/// Round-robin pool of identical child processes; implements the same traits
/// so callers can parallelize over latents while each child still sees one
/// request at a time.
pub struct RemotePool {
    models: Vec<RemoteModel>,
    next: AtomicUsize,
}

impl RemotePool {
    pub fn spawn(
        command: &[String],
        copies: usize,
        latent_dim: usize,
        timeout: Duration,
    ) -> Result<RemotePool> {
        if copies == 0 {
            return Err(Error::arg("remote pool needs at least one child"));
        }
        let models = (0..copies)
            .map(|_| RemoteModel::spawn(command, latent_dim, timeout))
            .collect::<Result<Vec<_>>>()?;
        Ok(RemotePool {
            models,
            next: AtomicUsize::new(0),
        })
    }

    fn pick(&self) -> &RemoteModel {
        let i = self.next.fetch_add(1, Ordering::Relaxed);
        &self.models[i % self.models.len()]
    }
}

impl Generator for RemotePool {
    fn latent_dim(&self) -> usize {
        self.models[0].latent_dim
    }

    fn decode(&self, z_sem: &Vector, z_t: StochasticCode) -> Result<Image> {
        self.pick().decode(z_sem, z_t)
    }
}

impl Classifier for RemotePool {
    fn classify(&self, image: &Image) -> Result<f64> {
        self.pick().classify(image)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let z = [1.0f64, -0.5];
        let req = Request::Decode { z_sem: &z, z_t: 7 };
        let s = textio::to_json_string(&req).unwrap();
        assert_eq!(
            s,
            "{\"op\":\"decode\",\"z_sem\":[1.0000000000000000e0,-5.0000000000000000e-1],\"z_T\":7}"
        );
    }

    #[test]
    fn classify_wire_shape() {
        let img = Image::constant(1, 1, 0.5).unwrap();
        let req = Request::Classify { image: &img };
        let s = textio::to_json_string(&req).unwrap();
        assert_eq!(
            s,
            "{\"op\":\"classify\",\"image\":{\"w\":1,\"h\":1,\"px\":[5.0000000000000000e-1]}}"
        );
    }

    #[test]
    fn response_variants_parse() {
        let ok: Response = textio::from_json_str("{\"ok\":true,\"logit\":0.25}").unwrap();
        assert!(ok.ok);
        assert_eq!(ok.logit, Some(0.25));
        let err: Response = textio::from_json_str("{\"ok\":false,\"error\":\"nope\"}").unwrap();
        assert!(!err.ok);
        assert_eq!(err.error.as_deref(), Some("nope"));
    }

    #[test]
    fn spawn_of_missing_program_fails() {
        let cmd = vec!["definitely-not-a-real-program-xyz".to_string()];
        assert!(matches!(
            RemoteModel::spawn(&cmd, 4, Duration::from_secs(1)),
            Err(Error::Remote(_))
        ));
    }
}
