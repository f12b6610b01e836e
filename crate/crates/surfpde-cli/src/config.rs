//! Flat run configuration: one option bag shared by every subcommand, a
//! `key = value` file loader, and the manifest echo written next to outputs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::CliError;

/// Options shared by all subcommands. Each flag mirrors a configuration-file
/// key of the same name (dashes on the command line, underscores in the
/// file); flags given on the command line override file values.
#[derive(Args, Clone, Debug, Default)]
pub struct Opts {
    /// Configuration file with `key = value` lines and `#` comments
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker thread cap (env fallback: SURFPDE_THREADS)
    #[arg(long)]
    pub threads: Option<usize>,

    /// Surface name: sphere | torus | bumpy | rose | tooth | dziuk
    #[arg(long)]
    pub surface: Option<String>,

    /// Target node count
    #[arg(long)]
    pub n: Option<usize>,

    /// Target internodal spacing (alternative to --n)
    #[arg(long)]
    pub h: Option<f64>,

    /// Node spacing for the moving-surface run
    #[arg(long)]
    pub dx: Option<f64>,

    /// PHS exponent (odd, at least 3)
    #[arg(long)]
    pub m: Option<u32>,

    /// Augmented polynomial degree
    #[arg(long)]
    pub l: Option<u32>,

    /// Surface stencil size
    #[arg(long = "n-s")]
    pub n_s: Option<usize>,

    /// Off-surface point count (even)
    #[arg(long = "n-perp")]
    pub n_perp: Option<usize>,

    /// Off-surface spacing as a multiple of the local spacing
    #[arg(long = "eps-normal")]
    pub eps_normal: Option<f64>,

    /// Hyperviscosity strength
    #[arg(long = "eps-hyper")]
    pub eps_hyper: Option<f64>,

    /// Time step
    #[arg(long)]
    pub dt: Option<f64>,

    /// Final integration time
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,

    /// Seed for random initial data
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory (default: surfpde-out)
    #[arg(long = "out-dir", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Primary output file; the extension picks the format where several
    /// apply (.csv, .ply)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Analytic test function: u1 | u2
    #[arg(long)]
    pub test: Option<String>,

    /// Initial bell profile: cosine | gaussian
    #[arg(long)]
    pub init: Option<String>,

    /// Reaction-diffusion preset: spots | stripes
    #[arg(long)]
    pub pattern: Option<String>,

    /// Operator: lap | identity | grad-x | grad-y | grad-z | advect | hyper | transport
    #[arg(long)]
    pub op: Option<String>,

    /// Node index for the weights report
    #[arg(long)]
    pub node: Option<usize>,

    /// Spectrum mode: dense | extremal (default: dense up to N = 6000)
    #[arg(long)]
    pub mode: Option<String>,

    /// Torus major radius
    #[arg(long = "big-r")]
    pub big_r: Option<f64>,

    /// Torus minor radius
    #[arg(long = "small-r")]
    pub small_r: Option<f64>,

    /// Bumpy-sphere amplitude
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Bump frequency, doubling as the rose petal count
    #[arg(long)]
    pub k: Option<usize>,

    /// Rose base offset
    #[arg(long)]
    pub r0: Option<f64>,

    /// Rotation-axis tilt of the built-in sphere velocity field
    #[arg(long)]
    pub alpha: Option<f64>,
}

/// Load the config file when one is given and merge it under the flags, so
/// every flag set on the command line wins over its file value.
pub fn resolve(flags: Opts) -> Result<Opts, CliError> {
    let Some(path) = flags.config.clone() else {
        return Ok(flags);
    };
    let mut merged = parse_file(&path)?;
    overlay(&mut merged, flags);
    Ok(merged)
}

fn overlay(base: &mut Opts, flags: Opts) {
    macro_rules! take {
        ($($field:ident),* $(,)?) => {
            $( if flags.$field.is_some() { base.$field = flags.$field; } )*
        };
    }
    take!(
        config, threads, surface, n, h, dx, m, l, n_s, n_perp, eps_normal, eps_hyper, dt,
        t_final, seed, out_dir, out, test, init, pattern, op, node, mode, big_r, small_r,
        gamma, k, r0, alpha,
    );
}

fn parse_file(path: &Path) -> Result<Opts, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut opts = Opts::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected 'key = value', got '{line}'",
                path.display(),
                idx + 1
            )));
        };
        set_key(&mut opts, key.trim(), value.trim())
            .map_err(|msg| CliError::Usage(format!("{}:{}: {msg}", path.display(), idx + 1)))?;
    }
    Ok(opts)
}

fn set_key(opts: &mut Opts, key: &str, value: &str) -> Result<(), String> {
    fn parse<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("key '{key}': cannot parse '{value}' as {what}"))
    }
    match key {
        "threads" => opts.threads = Some(parse(key, value, "an integer")?),
        "surface" => opts.surface = Some(value.to_string()),
        "n" => opts.n = Some(parse(key, value, "an integer")?),
        "h" => opts.h = Some(parse(key, value, "a number")?),
        "dx" => opts.dx = Some(parse(key, value, "a number")?),
        "m" => opts.m = Some(parse(key, value, "an integer")?),
        "l" => opts.l = Some(parse(key, value, "an integer")?),
        "n_s" => opts.n_s = Some(parse(key, value, "an integer")?),
        "n_perp" => opts.n_perp = Some(parse(key, value, "an integer")?),
        "eps_normal" => opts.eps_normal = Some(parse(key, value, "a number")?),
        "eps_hyper" => opts.eps_hyper = Some(parse(key, value, "a number")?),
        "dt" => opts.dt = Some(parse(key, value, "a number")?),
        "t_final" => opts.t_final = Some(parse(key, value, "a number")?),
        "seed" => opts.seed = Some(parse(key, value, "an integer")?),
        "out_dir" => opts.out_dir = Some(PathBuf::from(value)),
        "out" => opts.out = Some(PathBuf::from(value)),
        "test" => opts.test = Some(value.to_string()),
        "init" => opts.init = Some(value.to_string()),
        "pattern" => opts.pattern = Some(value.to_string()),
        "op" => opts.op = Some(value.to_string()),
        "node" => opts.node = Some(parse(key, value, "an integer")?),
        "mode" => opts.mode = Some(value.to_string()),
        "big_r" => opts.big_r = Some(parse(key, value, "a number")?),
        "small_r" => opts.small_r = Some(parse(key, value, "a number")?),
        "gamma" => opts.gamma = Some(parse(key, value, "a number")?),
        "k" => opts.k = Some(parse(key, value, "an integer")?),
        "r0" => opts.r0 = Some(parse(key, value, "a number")?),
        "alpha" => opts.alpha = Some(parse(key, value, "a number")?),
        other => return Err(format!("unknown configuration key '{other}'")),
    }
    Ok(())
}

/// Cap the global worker pool from --threads or SURFPDE_THREADS. A cap of
/// zero or an unparsable env value is a usage error.
pub fn init_threads(opts: &Opts) -> Result<(), CliError> {
    let threads = match opts.threads {
        Some(t) => Some(t),
        None => match std::env::var("SURFPDE_THREADS") {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "SURFPDE_THREADS must be a positive integer, got '{s}'"
                ))
            })?),
            Err(_) => None,
        },
    };
    let Some(threads) = threads else {
        return Ok(());
    };
    if threads == 0 {
        return Err(CliError::Usage("thread count must be at least 1".to_string()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Run(format!("cannot build thread pool: {e}")))
}

/// Sorted `key = value` echo of the configuration a run actually used,
/// written as `manifest` in the output directory. Contains no timings, so
/// reruns of the same configuration produce identical bytes.
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, opts: &Opts) -> Self {
        let mut manifest = Manifest {
            entries: BTreeMap::new(),
        };
        manifest.set("command", command);
        if let Some(v) = opts.threads {
            manifest.set("threads", v);
        }
        if let Some(v) = &opts.surface {
            manifest.set("surface", v);
        }
        if let Some(v) = opts.n {
            manifest.set("n", v);
        }
        if let Some(v) = opts.h {
            manifest.set("h", v);
        }
        if let Some(v) = opts.dx {
            manifest.set("dx", v);
        }
        if let Some(v) = opts.eps_hyper {
            manifest.set("eps_hyper", v);
        }
        if let Some(v) = opts.dt {
            manifest.set("dt", v);
        }
        if let Some(v) = opts.t_final {
            manifest.set("t_final", v);
        }
        if let Some(v) = opts.seed {
            manifest.set("seed", v);
        }
        if let Some(v) = &opts.test {
            manifest.set("test", v);
        }
        if let Some(v) = &opts.init {
            manifest.set("init", v);
        }
        if let Some(v) = &opts.pattern {
            manifest.set("pattern", v);
        }
        if let Some(v) = &opts.op {
            manifest.set("op", v);
        }
        if let Some(v) = opts.node {
            manifest.set("node", v);
        }
        if let Some(v) = &opts.mode {
            manifest.set("mode", v);
        }
        if let Some(v) = opts.big_r {
            manifest.set("big_r", v);
        }
        if let Some(v) = opts.small_r {
            manifest.set("small_r", v);
        }
        if let Some(v) = opts.gamma {
            manifest.set("gamma", v);
        }
        if let Some(v) = opts.k {
            manifest.set("k", v);
        }
        if let Some(v) = opts.r0 {
            manifest.set("r0", v);
        }
        if let Some(v) = opts.alpha {
            manifest.set("alpha", v);
        }
        manifest
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn set_method(&mut self, config: &surfpde::rbf::PhsPolyConfig) {
        self.set("m", config.m);
        self.set("l", config.l);
        self.set("n_s", config.n_s);
        self.set("n_perp", config.n_perp);
        self.set("eps_normal", config.eps_normal);
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = String::new();
        for (key, value) in &self.entries {
            text.push_str(&format!("{key} = {value}\n"));
        }
        write_text(&dir.join("manifest"), &text)
    }
}

/// Resolve and create the output directory.
pub fn ensure_out_dir(opts: &Opts) -> Result<PathBuf, CliError> {
    let dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("surfpde-out"));
    fs::create_dir_all(&dir).map_err(|e| {
        CliError::Run(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(dir)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}
