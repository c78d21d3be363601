//! Reference implementation of the remote-model line protocol.
//!
//! Serves decode/classify requests over stdin/stdout, one JSON document per
//! line. Useful as a template for wrapping a real generative model in any
//! language, and used by the test suite to exercise the protocol client.
//!
//! Modes:
//! - `synthetic`: the built-in benchmark generator and classifier.
//! - `constant LEVEL`: decode returns a constant image at LEVEL; classify
//!   returns the first pixel value as the logit.
//! - `garbage`: answers every request with a non-JSON line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use cfdir::cli::RunConfig;
use cfdir::numerics::Vector;
use cfdir::textio;
use cfdir::worldmodel::{
    Classifier, Generator, Image, StochasticCode, SyntheticClassifier, SyntheticGenerator,
};

#[derive(Deserialize)]
struct Request {
    op: String,
    #[serde(default)]
    z_sem: Option<Vec<f64>>,
    #[serde(default, rename = "z_T")]
    z_t: Option<u64>,
    #[serde(default)]
    image: Option<Image>,
}

#[derive(Serialize)]
struct Response {
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    image: Option<Image>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Response {
    fn image(image: Image) -> Response {
        Response {
            ok: true,
            image: Some(image),
            logit: None,
            error: None,
        }
    }

    fn logit(logit: f64) -> Response {
        Response {
            ok: true,
            image: None,
            logit: Some(logit),
            error: None,
        }
    }

    fn error(message: String) -> Response {
        Response {
            ok: false,
            image: None,
            logit: None,
            error: Some(message),
        }
    }
}

enum Mode {
    Synthetic {
        generator: Box<SyntheticGenerator>,
        classifier: Box<SyntheticClassifier>,
    },
    Constant {
        level: f32,
    },
    Garbage,
}

impl Mode {
    fn answer(&self, request: &Request) -> Response {
        match self {
            Mode::Garbage => unreachable!("handled before parsing"),
            Mode::Synthetic {
                generator,
                classifier,
            } => match request.op.as_str() {
                "decode" => {
                    let (Some(z), Some(seed)) = (&request.z_sem, request.z_t) else {
                        return Response::error("decode needs z_sem and z_T".into());
                    };
                    match Vector::new(z.clone())
                        .and_then(|z| generator.decode(&z, StochasticCode { seed }))
                    {
                        Ok(img) => Response::image(img),
                        Err(e) => Response::error(e.to_string()),
                    }
                }
                "classify" => match &request.image {
                    Some(img) => match classifier.classify(img) {
                        Ok(logit) => Response::logit(logit),
                        Err(e) => Response::error(e.to_string()),
                    },
                    None => Response::error("classify needs an image".into()),
                },
                other => Response::error(format!("unknown op '{other}'")),
            },
            Mode::Constant { level } => match request.op.as_str() {
                "decode" => match Image::constant(64, 64, *level) {
                    Ok(img) => Response::image(img),
                    Err(e) => Response::error(e.to_string()),
                },
                "classify" => match &request.image {
                    Some(img) => Response::logit(f64::from(img.pixels()[0])),
                    None => Response::error("classify needs an image".into()),
                },
                other => Response::error(format!("unknown op '{other}'")),
            },
        }
    }
}

fn parse_mode() -> Result<Mode, String> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        None | Some("synthetic") => {
            let config = RunConfig::benchmark();
            let generator =
                SyntheticGenerator::new(config.generator.clone()).map_err(|e| e.to_string())?;
            let classifier = SyntheticClassifier::new(
                config.classifier.clone(),
                config.generator.width,
                config.generator.height,
            )
            .map_err(|e| e.to_string())?;
            Ok(Mode::Synthetic {
                generator: Box::new(generator),
                classifier: Box::new(classifier),
            })
        }
        Some("constant") => {
            let level: f32 = args
                .get(1)
                .ok_or("constant mode needs a level argument")?
                .parse()
                .map_err(|e| format!("bad level: {e}"))?;
            Ok(Mode::Constant { level })
        }
        Some("garbage") => Ok(Mode::Garbage),
        Some(other) => Err(format!("unknown mode '{other}'")),
    }
}

fn main() {
    let mode = match parse_mode() {
        Ok(m) => m,
        Err(msg) => {
            eprintln!("cfdir-modelstub: {msg}");
            std::process::exit(2);
        }
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        if line.trim().is_empty() {
            continue;
        }
        if matches!(mode, Mode::Garbage) {
            writeln!(out, "this is not a protocol response").ok();
            out.flush().ok();
            continue;
        }
        let response = match textio::from_json_str::<Request>(&line) {
            Ok(request) => mode.answer(&request),
            Err(e) => Response::error(format!("malformed request: {e}")),
        };
        let payload = textio::to_json_string(&response).expect("response serializes");
        writeln!(out, "{payload}").ok();
        out.flush().ok();
    }
}
