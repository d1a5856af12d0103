//! Plain-text `key = value` experiment configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::Grid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    RfBaseline,
    ModelOracle,
    ColumnSuite,
    EnergySuite,
    DecomposeSuite,
    SplitSuite,
    ProbeSweep,
    Counterexample,
    Bochner,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::RfBaseline,
        Kind::ModelOracle,
        Kind::ColumnSuite,
        Kind::EnergySuite,
        Kind::DecomposeSuite,
        Kind::SplitSuite,
        Kind::ProbeSweep,
        Kind::Counterexample,
        Kind::Bochner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::RfBaseline => "rf-baseline",
            Kind::ModelOracle => "model-oracle",
            Kind::ColumnSuite => "column-suite",
            Kind::EnergySuite => "energy-suite",
            Kind::DecomposeSuite => "decompose-suite",
            Kind::SplitSuite => "split-suite",
            Kind::ProbeSweep => "probe-sweep",
            Kind::Counterexample => "counterexample",
            Kind::Bochner => "bochner",
        }
    }

    /// Keys accepted besides `kind` and `seed`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Kind::RfBaseline => &["N", "L", "instances", "band", "pieces", "p_grid", "r_grid", "columns", "column_max"],
            Kind::ModelOracle => &["N", "L", "instances", "r", "squares", "band"],
            Kind::ColumnSuite => &["N", "L", "r", "warmup", "instances", "max_size"],
            Kind::EnergySuite | Kind::DecomposeSuite => &["N", "L", "r", "instances", "squares", "window"],
            Kind::SplitSuite => &["N", "L", "r", "instances", "generic_instances", "squares", "window"],
            Kind::ProbeSweep => {
                &["N", "L", "r", "p", "q", "sizes", "box", "window", "c0", "h", "omega_file", "nu"]
            }
            Kind::Counterexample => &["N", "L", "r", "p", "q", "counts", "orientation", "window", "c0", "h"],
            Kind::Bochner => &["N", "L", "r", "eps", "radius", "n_max", "instances", "band"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub kind: Kind,
    pub seed: u64,
    entries: BTreeMap<String, Entry>,
    base_dir: PathBuf,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl Config {
    /// Configuration with every key at its default.
    pub fn defaults(kind: Kind) -> Self {
        Self { kind, seed: 0, entries: BTreeMap::new(), base_dir: PathBuf::from(".") }
    }

    /// Parses `text`; relative file paths resolve against `base_dir`.
    pub fn parse(kind: Kind, text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self { base_dir: base_dir.to_path_buf(), ..Self::defaults(kind) };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(parse_err(line, format!("field `{key}` has no value")));
            }
            match key {
                "kind" => {
                    if value != kind.name() {
                        return Err(parse_err(line, format!("field `kind` is `{value}` but the run asks for `{kind}`")));
                    }
                }
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| parse_err(line, format!("field `seed`: `{value}` is not an unsigned integer")))?;
                }
                k if kind.keys().contains(&k) => {}
                k => return Err(parse_err(line, format!("unknown field `{k}` for kind {kind}"))),
            }
            if cfg.entries.insert(key.to_string(), Entry { line, value: value.to_string() }).is_some() {
                return Err(parse_err(line, format!("field `{key}` given twice")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.entries.contains_key("N") || self.entries.contains_key("L") {
            self.grid(1024, 64.0)?;
        }
        if let Some(e) = self.entries.get("omega_file") {
            let p = self.base_dir.join(&e.value);
            if !p.is_file() {
                return Err(parse_err(e.line, format!("field `omega_file`: {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Sets a key programmatically, as if it were the last line of the file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "seed" {
            self.seed = value.parse().map_err(|_| parse_err(0, format!("field `seed`: `{value}` is not an unsigned integer")))?;
        } else if !self.kind.keys().contains(&key) {
            return Err(parse_err(0, format!("unknown field `{key}` for kind {}", self.kind)));
        }
        self.entries.insert(key.to_string(), Entry { line: 0, value: value.to_string() });
        self.validate()
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|_| parse_err(e.line, format!("field `{key}`: cannot parse `{}`", e.value))),
        }
    }

    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| parse_err(e.line, format!("field `{key}`: cannot parse `{}`", s.trim()))))
                .collect(),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.entries.get(key).map(|e| self.base_dir.join(&e.value))
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.line).unwrap_or(0)
    }

    pub fn grid(&self, n: usize, period: f64) -> Result<Grid> {
        let n = self.get("N", n)?;
        let period = self.get("L", period)?;
        Grid::new(n, period).map_err(|e| {
            let key = if matches!(e, Error::GridNotPowerOfTwo(_)) { "N" } else { "L" };
            parse_err(self.line_of(key), format!("field `{key}`: {e}"))
        })
    }

    /// Explicit entries, sorted by key, with the effective seed.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect();
        out.insert("kind".into(), self.kind.name().into());
        out.insert("seed".into(), self.seed.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let c = Config::parse(Kind::RfBaseline, "# header\n\nN = 256 # small\nL=32\n", Path::new(".")).unwrap();
        assert_eq!(c.get("N", 0usize).unwrap(), 256);
        assert_eq!(c.grid(1, 1.0).unwrap().len(), 256);
    }

    #[test]
    fn bad_lines_carry_line_numbers() {
        let e = Config::parse(Kind::RfBaseline, "N = 256\nnonsense\n", Path::new(".")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = Config::parse(Kind::RfBaseline, "\n\nN = 100\n", Path::new(".")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = Config::parse(Kind::Bochner, "sizes = 1,2\n", Path::new(".")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = Config::parse(Kind::Bochner, "kind = rf-baseline\n", Path::new(".")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn lists_parse() {
        let c = Config::parse(Kind::ProbeSweep, "sizes = 1, 4,16\n", Path::new(".")).unwrap();
        assert_eq!(c.list("sizes", &[0usize]).unwrap(), vec![1, 4, 16]);
        assert!(c.list::<f64>("nu", &[]).unwrap().is_empty());
    }

    #[test]
    fn missing_file_is_a_parse_error() {
        let e = Config::parse(Kind::ProbeSweep, "omega_file = /nonexistent/omega.txt\n", Path::new(".")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
