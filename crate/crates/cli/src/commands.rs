use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pairing_ep::atlas::{atlas, sweep_gamma, CoalescenceEvent, PointRecord};
use pairing_ep::discriminant::{find_degeneracies, heatmap, roots_to_json};
use pairing_ep::monodromy::{check_enclosure, restore_count, LoopSummary};
use pairing_ep::observables::pairing_energy_cut;
use pairing_ep::spectra::spectrum_along;
use pairing_ep::{Complex64, PairingModel};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

pub const TOOL: &str = "pairing-ep";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(pairing_ep::Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(..) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io(p, e) => write!(f, "cannot write {}: {e}", p.display()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<pairing_ep::Error> for CliError {
    fn from(e: pairing_ep::Error) -> Self {
        CliError::Numeric(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct Header<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_sha256: &'a str,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: Header<'a>,
    config: &'a RunConfig,
    data: T,
}

/// Writes the files of one subcommand under a shared header.
pub struct Writer<'a> {
    out: &'a Path,
    command: &'a str,
    config: &'a RunConfig,
    hash: String,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(out: &'a Path, command: &'a str, config: &'a RunConfig) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| CliError::Io(out.to_path_buf(), e))?;
        Ok(Self {
            out,
            command,
            config,
            hash: config.hash(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| CliError::Io(path.clone(), e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        let text = format!(
            "# {TOOL} {VERSION} command={} config_sha256={}\n{body}",
            self.command, self.hash
        );
        self.put(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: T) -> Result<()> {
        let doc = Document {
            header: Header {
                tool: TOOL,
                version: VERSION,
                command: self.command,
                config_sha256: &self.hash,
            },
            config: self.config,
            data,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("output serializes");
        text.push('\n');
        self.put(name, &text)
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

fn model(config: &RunConfig) -> Result<PairingModel> {
    PairingModel::new(config.model_spec()).map_err(|e| CliError::Config(ConfigError(format!("model: {e}"))))
}

fn inside(window: ([f64; 2], [f64; 2]), g: Complex64) -> bool {
    let (re, im) = window;
    (re[0]..=re[1]).contains(&g.re) && (im[0]..=im[1]).contains(&g.im)
}

#[derive(Serialize)]
struct AtlasData {
    gamma: f64,
    window_re: [f64; 2],
    window_im: [f64; 2],
    points: Vec<PointRecord>,
}

/// `degeneracies.json` with the classified points inside the window and
/// `heatmap.csv` with |D(g)| on the grid.
pub fn cmd_atlas(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let m = model(config)?;
    let a = &config.atlas;
    let window = (a.re, a.im);
    let points: Vec<PointRecord> = atlas(&m, &config.atlas_options())?
        .iter()
        .filter(|p| inside(window, p.g0()))
        .map(PointRecord::from)
        .collect();
    let grid = heatmap(&m, (a.re[0], a.re[1]), (a.im[0], a.im[1]), a.nx, a.ny)?;
    let mut csv = String::from("g_re,g_im,abs_D,log10_abs_D\n");
    for (g, d) in grid {
        let _ = writeln!(csv, "{:.12e},{:.12e},{:.12e},{:.12e}", g.re, g.im, d, d.max(f64::MIN_POSITIVE).log10());
    }
    let mut w = Writer::new(out, "atlas", config)?;
    w.json(
        "degeneracies.json",
        AtlasData {
            gamma: config.model.gamma,
            window_re: a.re,
            window_im: a.im,
            points,
        },
    )?;
    w.csv("heatmap.csv", &csv)?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct SweepData<'a> {
    gamma_range: [f64; 2],
    steps: usize,
    events: &'a [CoalescenceEvent],
    ambiguous_links: &'a [(usize, usize)],
}

/// `trajectory.csv` with every point per γ sample and `events.json` with
/// the located coalescences.
pub fn cmd_sweep(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let m = model(config)?;
    let s = &config.sweep;
    let trajectory = sweep_gamma(&m, (s.gamma[0], s.gamma[1]), s.steps, &config.atlas_options())?;
    let mut w = Writer::new(out, "sweep", config)?;
    w.csv("trajectory.csv", &trajectory.to_csv())?;
    w.json(
        "events.json",
        SweepData {
            gamma_range: s.gamma,
            steps: s.steps,
            events: &trajectory.events,
            ambiguous_links: &trajectory.ambiguous_links,
        },
    )?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct EncircleData {
    enclosed: serde_json::Value,
    summary: LoopSummary,
}

/// `phases.csv` with θ and E along the loop and `summary.json` with the
/// permutations, per-loop phases and restoration periods.
pub fn cmd_encircle(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let m = model(config)?;
    let spec = config.loop_spec();
    let roots = find_degeneracies(&m, &config.atlas_options().finder)?;
    check_enclosure(&spec, &roots)?;
    let enclosed: Vec<_> = roots
        .iter()
        .filter(|r| (r.g0 - spec.center).norm() < spec.radius)
        .cloned()
        .collect();
    let (count, trace) = restore_count(&m, &spec, spec.loops)?;
    let mut w = Writer::new(out, "encircle", config)?;
    w.csv("phases.csv", &trace.to_csv())?;
    w.json(
        "summary.json",
        EncircleData {
            enclosed: roots_to_json(&enclosed),
            summary: LoopSummary::new(&trace, Some(count)),
        },
    )?;
    Ok(w.finish())
}

/// `spectrum.csv` with the labeled eigenvalues and `pairing_energy.csv` with
/// the diagonal pairing energies along the segment.
pub fn cmd_cut(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let m = model(config)?;
    let c = &config.cut;
    let start = Complex64::new(c.start[0], c.start[1]);
    let end = Complex64::new(c.end[0], c.end[1]);
    let spectrum = spectrum_along(&m, start, end, c.samples, false)?;
    let pair = (c.states[0] - 1, c.states[1] - 1);
    let energies = pairing_energy_cut(&m, start, end, c.samples, pair)?;
    let mut w = Writer::new(out, "cut", config)?;
    w.csv("spectrum.csv", &spectrum.to_csv())?;
    w.csv("pairing_energy.csv", &energies.to_csv())?;
    Ok(w.finish())
}
