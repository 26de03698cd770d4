//! Command-line driver. Every command resolves its configuration from defaults,
//! an optional TOML file (top-level keys plus a table named after the command)
//! and explicit flags, in that order of precedence.

mod commands;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use commands::{
    geometric_kappas, sphere_cloud, AlgebraConfig, BenchConfig, CheckJetConfig, CubesConfig, ExtendConfig,
    MollifyConfig, ProjectConfig,
};

#[derive(Parser, Debug)]
#[command(name = "cdwhitney", version, about = "Cayley-Dickson jets, mollifiers and Whitney extension")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct GlobalArgs {
    /// Algebra level (dimension 2^r).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    /// Number of algebra components.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Jet order.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Identity suites for the algebra.
    Algebra(commands::AlgebraArgs),
    /// Coordinate-extraction and phrase identities.
    Project(commands::ProjectArgs),
    /// Whitney compatibility report for a jet file.
    CheckJet(commands::CheckJetArgs),
    /// Error of the smoothed function against kappa.
    Mollify(commands::MollifyArgs),
    /// Fit and sample an extension.
    Extend(commands::ExtendArgs),
    /// Export a cube decomposition.
    Cubes(commands::CubesArgs),
    /// Table against doubling multiplication.
    Bench(commands::BenchArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Algebra(_) => "algebra",
            Self::Project(_) => "project",
            Self::CheckJet(_) => "check-jet",
            Self::Mollify(_) => "mollify",
            Self::Extend(_) => "extend",
            Self::Cubes(_) => "cubes",
            Self::Bench(_) => "bench",
        }
    }
}

/// Exit status of a finished command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

/// What a command produced.
pub struct RunOutput {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn merge(into: &mut Map<String, Value>, from: Value) {
    if let Value::Object(m) = from {
        for (k, v) in m {
            into.insert(k.replace('-', "_"), v);
        }
    }
}

/// Layers defaults, file and flags and deserializes the command's configuration.
pub(crate) fn resolve<C, A>(
    command: &str,
    global: &GlobalArgs,
    file: Option<&toml::Table>,
    args: &A,
) -> Result<C>
where
    C: Default + Serialize + DeserializeOwned,
    A: Serialize,
{
    let mut map = match to_value(&C::default())? {
        Value::Object(m) => m,
        _ => return Err(Error::Internal("config is not a table".into())),
    };
    if let Some(t) = file {
        let mut top = toml::Table::new();
        let mut section = None;
        for (k, v) in t {
            match v {
                toml::Value::Table(sub) if k == command => section = Some(sub.clone()),
                toml::Value::Table(_) => {}
                other => {
                    top.insert(k.clone(), other.clone());
                }
            }
        }
        let conv = |t: toml::Table| serde_json::to_value(t).map_err(|e| Error::Internal(e.to_string()));
        merge(&mut map, conv(top)?);
        if let Some(s) = section {
            merge(&mut map, conv(s)?);
        }
    }
    merge(&mut map, to_value(global)?);
    merge(&mut map, to_value(args)?);
    let known = match to_value(&C::default())? {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    map.retain(|k, _| known.contains_key(k));
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::Parse {
        context: format!("configuration for {command}"),
        message: e.to_string(),
    })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))
}

/// SHA-256 of the canonical JSON form of a resolved configuration.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    let text = serde_json::to_string(config).expect("configurations serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Shortest decimal that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// CSV with a header row and a trailing `#` metadata block.
pub(crate) struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish<C: Serialize>(mut self, command: &str, config: &C) -> String {
        let _ = writeln!(self.text, "# command={command}");
        let _ = writeln!(self.text, "# config_sha256={}", config_hash(config));
        let _ = writeln!(self.text, "# cdwhitney={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(self.text, "# config={}", serde_json::to_string(config).expect("serializable"));
        self.text
    }
}

/// Joins a multi-index or point as `a;b;c` so it fits one CSV cell.
pub(crate) fn cell<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub(crate) fn cell_f64(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

pub(crate) fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, text)?;
    Ok(p)
}

/// JSON document with the configuration hash attached.
pub(crate) fn json_with_meta<C: Serialize, T: Serialize>(command: &str, config: &C, body: &T) -> Result<String> {
    let doc = serde_json::json!({
        "meta": {
            "command": command,
            "config_sha256": config_hash(config),
            "cdwhitney": env!("CARGO_PKG_VERSION"),
            "config": config,
        },
        "result": body,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))
}

/// Parses arguments and runs the command.
pub fn run_cli(cli: Cli) -> Result<RunOutput> {
    let file = match &cli.global.config {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Some(text.parse::<toml::Table>().map_err(|e| Error::Parse {
                context: p.display().to_string(),
                message: e.to_string(),
            })?)
        }
        None => None,
    };
    let out = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let name = cli.command.name();
    let g = &cli.global;
    let f = file.as_ref();
    match &cli.command {
        Command::Algebra(a) => commands::algebra(&resolve(name, g, f, a)?, &out),
        Command::Project(a) => commands::project(&resolve(name, g, f, a)?, &out),
        Command::CheckJet(a) => commands::check_jet(&resolve(name, g, f, a)?, &out),
        Command::Mollify(a) => commands::mollify(&resolve(name, g, f, a)?, &out),
        Command::Extend(a) => commands::extend(&resolve(name, g, f, a)?, &out),
        Command::Cubes(a) => commands::cubes(&resolve(name, g, f, a)?, &out),
        Command::Bench(a) => commands::bench(&resolve(name, g, f, a)?, &out),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(cli) {
        Ok(o) => {
            println!("{}", o.summary);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            match o.outcome {
                Outcome::Passed => 0,
                Outcome::Failed => 1,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
