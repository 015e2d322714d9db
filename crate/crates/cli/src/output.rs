use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::UsageError;

/// Refuses to proceed if an output already exists (without `force`) or if it
/// would overwrite one of the inputs.
pub fn check_outputs(outputs: &[&Path], inputs: &[&Path], force: bool) -> Result<()> {
    for out in outputs {
        if inputs.iter().any(|i| same_file(i, out)) {
            return Err(
                UsageError(format!("output {} would overwrite an input", out.display())).into(),
            );
        }
        if out.exists() && !force {
            return Err(UsageError(format!(
                "{} already exists; pass --force to overwrite",
                out.display()
            ))
            .into());
        }
    }
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `model.json` -> `model.log.jsonl`.
pub fn log_path(model: &Path) -> PathBuf {
    let stem = model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    model.with_file_name(format!("{stem}.log.jsonl"))
}

/// Plain-text table; all-numeric columns are right-aligned.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(String::len).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let is_num = |c: &str| c.parse::<f64>().is_ok() || c == "-";
        let right: Vec<bool> = (0..width.len())
            .map(|k| {
                !self.rows.is_empty()
                    && self.rows.iter().all(|r| r.get(k).is_none_or(|c| is_num(c)))
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&width)
                .zip(&right)
                .map(|((c, w), r)| {
                    if *r {
                        format!("{c:>w$}")
                    } else {
                        format!("{c:<w$}")
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}
