use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_text};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::training::{OptimizerState, TrainConfig, TrainState};

pub const CHECKPOINT_HEADER: &str = "DEFORMNET-CKPT 1";

/// Everything needed to resume training bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub state: TrainState,
}

/// Canonical text form:
///
/// ```text
/// DEFORMNET-CKPT 1
/// config <n>
/// <n lines of key = value>
/// step <completed steps>
/// arrays <m>
/// array <name> <extent>...      (then one line per leading-axis row)
/// ...
/// end
/// ```
///
/// Arrays are the model parameters in canonical order followed by the Adam
/// moments as `adam.m.<name>` and `adam.v.<name>`. Values use the shortest
/// decimal form that parses back to the same `f64`.
pub fn render_checkpoint(ckpt: &Checkpoint) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_HEADER);
    out.push('\n');
    let entries = ckpt.config.entries();
    let _ = writeln!(out, "config {}", entries.len());
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "step {}", ckpt.state.optimizer.step);

    let params = &ckpt.state.params;
    let opt = &ckpt.state.optimizer;
    let _ = writeln!(out, "arrays {}", 3 * params.len());
    let mut emit = |name: &str, t: &Tensor| {
        out.push_str("array ");
        out.push_str(name);
        for d in t.shape() {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
        let row = t.shape().iter().skip(1).product::<usize>().max(1);
        if t.numel() > 0 {
            for chunk in t.data().chunks(row) {
                let mut first = true;
                for v in chunk {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    let _ = write!(out, "{v:e}");
                }
                out.push('\n');
            }
        }
    };
    for (name, t) in params.iter() {
        emit(name, t);
    }
    for (name, t) in params.names().iter().zip(&opt.first_moment) {
        emit(&format!("adam.m.{name}"), t);
    }
    for (name, t) in params.names().iter().zip(&opt.second_moment) {
        emit(&format!("adam.v.{name}"), t);
    }
    out.push_str("end\n");
    out
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_text(path, &render_checkpoint(ckpt))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    parse_checkpoint(&read_text(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, expecting: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Truncated(format!("file ended while reading {expecting}")))
    }
}

fn inconsistent(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Inconsistent(format!("line {line}: {msg}"))
}

fn keyed<'a>(line: usize, text: &'a str, key: &str) -> Result<&'a str> {
    text.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| inconsistent(line, format!("expected `{key} ...`, found {text:?}")))
}

fn count(line: usize, text: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| inconsistent(line, format!("bad count {text:?}")))
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.next("header")?;
    if header != CHECKPOINT_HEADER {
        return Err(match header.strip_prefix("DEFORMNET-CKPT ") {
            Some(v) => Error::UnsupportedVersion(format!("version {v:?}, this build reads 1")),
            None => Error::Inconsistent(format!("not a checkpoint: header {header:?}")),
        });
    }

    // A canonical file always closes with `end`; anything else was cut off.
    if text.trim_end().lines().next_back().map(str::trim) != Some("end") {
        return Err(Error::Truncated("end marker missing".into()));
    }

    let (ln, l) = lines.next("config header")?;
    let n = count(ln, keyed(ln, l, "config")?)?;
    let mut config = TrainConfig::default();
    for _ in 0..n {
        let (ln, l) = lines.next("config")?;
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| inconsistent(ln, "config line is not key = value"))?;
        config.set(k, v).map_err(|e| inconsistent(ln, e))?;
    }
    config.validate().map_err(|e| Error::Inconsistent(e.to_string()))?;

    let (ln, l) = lines.next("step")?;
    let step: u64 = keyed(ln, l, "step")?
        .parse()
        .map_err(|_| inconsistent(ln, "bad step counter"))?;

    let (ln, l) = lines.next("array count")?;
    let n_arrays = count(ln, keyed(ln, l, "arrays")?)?;
    let mut arrays: Vec<(String, Tensor)> = Vec::with_capacity(n_arrays);
    for _ in 0..n_arrays {
        let (ln, l) = lines.next("array header")?;
        let mut fields = keyed(ln, l, "array")?.split(' ');
        let name = fields
            .next()
            .filter(|n| !n.is_empty())
            .ok_or_else(|| inconsistent(ln, "array without a name"))?
            .to_string();
        let shape: Vec<usize> = fields
            .map(|f| f.parse().map_err(|_| inconsistent(ln, format!("bad extent {f:?}"))))
            .collect::<Result<_>>()?;
        let numel: usize = shape.iter().product();
        let row = shape.iter().skip(1).product::<usize>().max(1);
        let mut data = Vec::with_capacity(numel);
        while data.len() < numel {
            let (ln, l) = lines.next(&format!("values of {name}"))?;
            let before = data.len();
            for tok in l.split(' ') {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| inconsistent(ln, format!("bad value {tok:?} in {name}")))?;
                if !v.is_finite() {
                    return Err(inconsistent(ln, format!("non-finite value in {name}")));
                }
                data.push(v);
            }
            if data.len() - before != row || data.len() > numel {
                return Err(inconsistent(
                    ln,
                    format!("row of {name} has {} values, shape {shape:?} needs {row}", data.len() - before),
                ));
            }
        }
        arrays.push((name, Tensor::new(shape, data)?));
    }
    let (ln, l) = lines.next("end marker")?;
    if l != "end" {
        return Err(inconsistent(ln, format!("expected `end`, found {l:?}")));
    }
    if let Some((ln, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(inconsistent(ln + 1, format!("trailing content {extra:?}")));
    }

    let n_params = config.model.layout().len();
    if arrays.len() != 3 * n_params {
        return Err(Error::Inconsistent(format!(
            "{} arrays, architecture needs {} (parameters and two moments)",
            arrays.len(),
            3 * n_params
        )));
    }
    let second: Vec<(String, Tensor)> = arrays.split_off(2 * n_params);
    let first: Vec<(String, Tensor)> = arrays.split_off(n_params);
    let params = ModelParams::from_named(&config.model, arrays)
        .map_err(|e| Error::Inconsistent(e.to_string()))?;
    let moments = |list: Vec<(String, Tensor)>, prefix: &str| -> Result<Vec<Tensor>> {
        list.into_iter()
            .zip(params.names())
            .map(|((name, t), want)| {
                if name != format!("{prefix}{want}") {
                    Err(Error::Inconsistent(format!("expected {prefix}{want}, found {name}")))
                } else {
                    Ok(t)
                }
            })
            .collect()
    };
    let optimizer = OptimizerState {
        step,
        first_moment: moments(first, "adam.m.")?,
        second_moment: moments(second, "adam.v.")?,
    };
    optimizer
        .check(&params)
        .map_err(|e| Error::Inconsistent(e.to_string()))?;
    Ok(Checkpoint {
        config,
        state: TrainState { params, optimizer },
    })
}
