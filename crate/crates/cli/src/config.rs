//! Flat `key = value` configuration files.
//!
//! Keys are the `FitConfig` field names. Blank lines and lines starting with
//! `#` are ignored. Sweep files may additionally set `dataset`, `data_seed`
//! and `scales` (a comma-separated list).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use psne_core::FitConfig;

use crate::error::{CliError, Result};
use crate::io;

/// Parsed entries in file order, each with its 1-based line number.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    path: PathBuf,
    entries: Vec<(u64, String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries: Vec<(u64, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = (i + 1) as u64;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(parse_error(path, line, "expected `key = value`"));
            };
            let key = key.trim().to_owned();
            if key.is_empty() {
                return Err(parse_error(path, line, "empty key"));
            }
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(parse_error(path, line, &format!("duplicate key `{key}`")));
            }
            entries.push((line, key, value.trim().to_owned()));
        }
        Ok(KeyValues { path: path.to_path_buf(), entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = io::read_bytes(path)?;
        let text = String::from_utf8(bytes).map_err(|_| CliError::format(path, "not valid UTF-8"))?;
        Self::parse(&text, path)
    }

    /// Removes `key` and parses its value.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some(pos) = self.entries.iter().position(|(_, k, _)| k == key) else {
            return Ok(None);
        };
        let (line, _, value) = self.entries.remove(pos);
        value
            .parse::<T>()
            .map(Some)
            .map_err(|_| parse_error(&self.path, line, &format!("invalid value {value:?} for `{key}`")))
    }

    /// Removes `key` and parses it as a comma-separated list.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(raw) = self.take::<String>(key)? else {
            return Ok(None);
        };
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| CliError::format(&self.path, format!("invalid list entry {s:?} for `{key}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.first() {
            Some((line, key, _)) => Err(parse_error(&self.path, *line, &format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }

    /// Moves every `FitConfig` key into `config`.
    pub fn apply_fit(&mut self, config: &mut FitConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.take(stringify!($field))? { config.$field = v; })*
            };
        }
        set!(
            embed_dim,
            sharpness,
            learning_rate,
            momentum_initial,
            momentum_final,
            momentum_switch_iter,
            exaggeration,
            exaggeration_iters,
            max_iters,
            tolerance,
            epsilon,
            group_lasso,
            seed,
            exaggeration_renormalize,
        );
        Ok(())
    }
}

fn parse_error(path: &Path, line: u64, message: &str) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, column: 0, message: message.to_owned() }
}

/// Reads a file that may only contain `FitConfig` keys.
pub fn read_fit_config(path: &Path, base: FitConfig) -> Result<FitConfig> {
    let mut kv = KeyValues::read(path)?;
    let mut config = base;
    kv.apply_fit(&mut config)?;
    kv.finish()?;
    Ok(config)
}

/// Renders a config in the same format `read_fit_config` accepts.
pub fn render_fit_config(c: &FitConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "embed_dim = {}", c.embed_dim);
    let _ = writeln!(s, "sharpness = {:?}", c.sharpness);
    let _ = writeln!(s, "learning_rate = {:?}", c.learning_rate);
    let _ = writeln!(s, "momentum_initial = {:?}", c.momentum_initial);
    let _ = writeln!(s, "momentum_final = {:?}", c.momentum_final);
    let _ = writeln!(s, "momentum_switch_iter = {}", c.momentum_switch_iter);
    let _ = writeln!(s, "exaggeration = {:?}", c.exaggeration);
    let _ = writeln!(s, "exaggeration_iters = {}", c.exaggeration_iters);
    let _ = writeln!(s, "max_iters = {}", c.max_iters);
    let _ = writeln!(s, "tolerance = {:?}", c.tolerance);
    let _ = writeln!(s, "epsilon = {:?}", c.epsilon);
    let _ = writeln!(s, "group_lasso = {:?}", c.group_lasso);
    let _ = writeln!(s, "seed = {}", c.seed);
    let _ = writeln!(s, "exaggeration_renormalize = {}", c.exaggeration_renormalize);
    s
}
