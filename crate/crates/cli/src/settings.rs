//! Flag and config-file handling.
//!
//! Every option can come from a flat `key = value` file given by `--config`;
//! flags given on the command line win. Keys are the long flag names without
//! dashes (`L`, `n`, `sym`, `no-interference`, ...).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use qmi::orbitals::{Model, Space};
use qmi::quadrature::{QuadratureScheme, RuleFamily};
use qmi::wavefunction::SymmetryClass;

use crate::CliError;

const KEYS: &[&str] = &[
    "model", "L", "omega", "n", "n-b", "n3", "sym", "space", "panels", "nodes", "tol", "rule", "format", "out",
    "no-interference", "c1sq-grid", "checks", "pair-only", "x1", "x2",
];

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Flat key = value file with defaults for any of these options
    #[arg(long, value_name = "PATH", global = true)]
    pub config: Option<PathBuf>,
    /// box or ho
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Box length
    #[arg(long = "L", value_name = "F", global = true)]
    pub length: Option<String>,
    /// Trap strength
    #[arg(long, value_name = "F", global = true)]
    pub omega: Option<String>,
    /// Quantum numbers, e.g. 1,2,3
    #[arg(long, value_name = "A,B[,C]", global = true)]
    pub n: Option<String>,
    /// s, a or d
    #[arg(long, global = true)]
    pub sym: Option<String>,
    /// position, momentum or both
    #[arg(long, global = true)]
    pub space: Option<String>,
    /// Panels per axis: one count, or three for 1D, 2D and 3D integrals
    #[arg(long, value_name = "K", global = true)]
    pub panels: Option<String>,
    /// Gauss nodes per panel
    #[arg(long, value_name = "K", global = true)]
    pub nodes: Option<String>,
    /// Target absolute error of each entropy
    #[arg(long, value_name = "F", global = true)]
    pub tol: Option<String>,
    /// gl or tanh-sinh
    #[arg(long, global = true)]
    pub rule: Option<String>,
    /// json, csv or table
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Write output here instead of stdout
    #[arg(long, value_name = "PATH", global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Raw option values after merging file and flags.
#[derive(Debug, Clone, Default)]
pub struct Options {
    values: BTreeMap<String, String>,
}

impl Options {
    pub fn load(common: &Common) -> Result<Self, CliError> {
        let mut options = match &common.config {
            Some(path) => Self::from_file(path)?,
            None => Options::default(),
        };
        let flags = [
            ("model", common.model.clone()),
            ("L", common.length.clone()),
            ("omega", common.omega.clone()),
            ("n", common.n.clone()),
            ("sym", common.sym.clone()),
            ("space", common.space.clone()),
            ("panels", common.panels.clone()),
            ("nodes", common.nodes.clone()),
            ("tol", common.tol.clone()),
            ("rule", common.rule.clone()),
            ("format", common.format.clone()),
            ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                options.set(key, v);
            }
        }
        Ok(options)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut options = Options::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Usage(format!("config line {}: unknown key '{key}'", lineno + 1)));
            }
            options.set(key, value.trim().to_string());
        }
        Ok(options)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn set_opt(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Usage(format!("--{key}: cannot parse '{v}'"))))
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("" | "true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(CliError::Usage(format!("--{key}: expected true or false, got '{v}'"))),
        }
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let name = self.get("model").unwrap_or("box");
        let model = match name {
            "box" => Model::particle_in_box(self.number("L")?.unwrap_or(1.0)),
            "ho" | "oscillator" => Model::oscillator(self.number("omega")?.unwrap_or(1.0)),
            other => return Err(CliError::Usage(format!("--model: expected box or ho, got '{other}'"))),
        };
        Ok(model?)
    }

    pub fn quantum_numbers(&self, key: &str) -> Result<Option<Vec<u32>>, CliError> {
        self.get(key).map(|v| parse_list::<u32>(key, v)).transpose()
    }

    pub fn symmetry(&self) -> Result<Option<SymmetryClass>, CliError> {
        Ok(self.get("sym").map(str::parse).transpose()?)
    }

    pub fn spaces(&self) -> Result<Vec<Space>, CliError> {
        match self.get("space").unwrap_or("position") {
            "both" => Ok(vec![Space::Position, Space::Momentum]),
            other => Ok(vec![other.parse()?]),
        }
    }

    /// A single space; `both` is rejected.
    pub fn space(&self) -> Result<Space, CliError> {
        match self.spaces()?.as_slice() {
            [one] => Ok(*one),
            _ => Err(CliError::Usage("this command takes a single --space".into())),
        }
    }

    pub fn format(&self, default: Format) -> Result<Format, CliError> {
        match self.get("format") {
            None => Ok(default),
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some("table") => Ok(Format::Table),
            Some(other) => Err(CliError::Usage(format!("--format: expected json, csv or table, got '{other}'"))),
        }
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    /// The model's default scheme with any overrides applied.
    pub fn scheme(&self, model: &Model, space: Space) -> Result<QuadratureScheme, CliError> {
        let mut scheme = QuadratureScheme::default_for(model, space);
        if let Some(v) = self.get("panels") {
            let counts = parse_list::<usize>("panels", v)?;
            scheme.panels = match counts.as_slice() {
                [k] => [*k; 3],
                [a, b, c] => [*a, *b, *c],
                _ => return Err(CliError::Usage("--panels: give one count or three".into())),
            };
        }
        if let Some(n) = self.number("nodes")? {
            scheme.nodes_per_panel = n;
        }
        if let Some(t) = self.number("tol")? {
            scheme.target_abs_tol = t;
        }
        if let Some(r) = self.get("rule") {
            scheme.rule = r.parse::<RuleFamily>()?;
        }
        scheme.validate()?;
        Ok(scheme)
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("--{key}: cannot parse '{v}'")))
        })
        .collect()
}

/// `a:b` (inclusive) or a comma list.
pub fn parse_range(key: &str, v: &str) -> Result<Vec<u32>, CliError> {
    if let Some((a, b)) = v.split_once(':') {
        let a: u32 = a.trim().parse().map_err(|_| CliError::Usage(format!("--{key}: cannot parse '{v}'")))?;
        let b: u32 = b.trim().parse().map_err(|_| CliError::Usage(format!("--{key}: cannot parse '{v}'")))?;
        if b < a {
            return Err(CliError::Usage(format!("--{key}: empty range '{v}'")));
        }
        return Ok((a..=b).collect());
    }
    parse_list(key, v)
}
