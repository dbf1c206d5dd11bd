use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use transwave_core::model::LengthUnit;
use transwave_core::series::Quantity;
use transwave_core::Engine;

/// Electromagnetic and electromechanical wave laboratory.
#[derive(Debug, Parser)]
#[command(name = "transwave", version)]
pub struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for the noise-injection utilities.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Suppress informational messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a network file.
    Gen(GenArgs),
    /// Run an engine on a network and scenario; writes waves.csv and manifest.json.
    Simulate(SimulateArgs),
    /// Closed-form inertia density and wave speeds of a network.
    Theory(TheoryArgs),
    /// Detect arrivals in a waveform file and fit the propagation speed.
    Speed(SpeedArgs),
    /// Sensitivity sweep of the fitted speed over one parameter.
    Sweep(SweepArgs),
    /// Locate an event from sensor arrival times.
    Locate(LocateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Ring23,
}

#[derive(Debug, Subcommand)]
pub enum Shape {
    /// Closed ring of identical buses.
    Ring {
        /// Start from a named parameter set; other flags override it.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, value_parser = at_least::<3>)]
        buses: Option<usize>,
        /// Length of every line, km.
        #[arg(long)]
        line_km: Option<f64>,
        #[command(flatten)]
        template: TemplateArgs,
    },
    /// Rectangular grid with planar coordinates.
    Mesh {
        #[arg(long, value_parser = at_least::<2>)]
        rows: usize,
        #[arg(long, value_parser = at_least::<2>)]
        cols: usize,
        #[arg(long, default_value_t = 100.0)]
        spacing_km: f64,
        #[command(flatten)]
        template: TemplateArgs,
    },
}

/// Per-bus and per-line values; unset ones come from the ring-23 set.
#[derive(Debug, Clone, Args)]
pub struct TemplateArgs {
    /// Per-machine inertia constant, s.
    #[arg(long)]
    pub h: Option<f64>,
    /// Machine rating, MW.
    #[arg(long)]
    pub gen_mw: Option<f64>,
    /// Coherent machines per bus.
    #[arg(long)]
    pub coh: Option<u32>,
    /// Load per bus, MW.
    #[arg(long)]
    pub load_mw: Option<f64>,
    /// Internal voltage, pu.
    #[arg(long)]
    pub emf: Option<f64>,
    /// Buses without generators.
    #[arg(long, conflicts_with_all = ["h", "gen_mw", "coh"])]
    pub no_gen: bool,
    /// Series resistance carried into the swing reactance, ohm/km.
    #[arg(long)]
    pub r_ohm_km: Option<f64>,
    /// Inductance per unit length, H.
    #[arg(long)]
    pub l_per_len: Option<f64>,
    /// Capacitance per unit length, F.
    #[arg(long)]
    pub c_per_len: Option<f64>,
    #[arg(long, value_enum)]
    pub len_unit: Option<UnitArg>,
    /// Network file to write; defaults to network.json in --out.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    M,
    Km,
}

impl From<UnitArg> for LengthUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::M => LengthUnit::M,
            UnitArg::Km => LengthUnit::Km,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Swing,
    Emt,
    Hybrid,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Swing => Engine::Swing,
            EngineArg::Emt => Engine::Emt,
            EngineArg::Hybrid => Engine::Hybrid,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "manifest")]
    pub network: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub scenario: Option<PathBuf>,
    /// Override the scenario's engine.
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Repeat a previous run from its manifest alone.
    #[arg(long, conflicts_with_all = ["network", "scenario", "engine"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Override every machine's inertia constant, s.
    #[arg(long)]
    pub h: Option<f64>,
    /// Override every line's inductance per unit length, H.
    #[arg(long)]
    pub l_per_len: Option<f64>,
    /// Override every line's capacitance per unit length, F.
    #[arg(long)]
    pub c_per_len: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    Domega,
    Delta,
    V,
}

impl From<QuantityArg> for Quantity {
    fn from(q: QuantityArg) -> Self {
        match q {
            QuantityArg::Domega => Quantity::Domega,
            QuantityArg::Delta => Quantity::Delta,
            QuantityArg::V => Quantity::Voltage,
        }
    }
}

fn at_least<const N: usize>(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= N => Ok(v),
        Ok(v) => Err(format!("must be at least {N}, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be > 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be >= 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn numbers<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct SpeedArgs {
    /// Waveform CSV as written by simulate.
    #[arg(long)]
    pub waves: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    /// Bus where the disturbance happened.
    #[arg(long)]
    pub origin: usize,
    #[arg(long, value_enum, default_value = "domega")]
    pub quantity: QuantityArg,
    /// Deviation that counts as an arrival; the quantity's default if unset.
    #[arg(long, value_parser = positive)]
    pub threshold: Option<f64>,
    /// Disturbance onset, s.
    #[arg(long, default_value_t = 0.0)]
    pub onset: f64,
    /// Also write sensors.csv for these buses, ready for `locate`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub sensors: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Sweep description (JSON).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("speed_mode").required(true).args(["speed", "fit_speed"]))]
pub struct LocateArgs {
    /// sensor_id,x_km,y_km,arrival_s[,weight]
    #[arg(long)]
    pub arrivals: PathBuf,
    /// Known propagation speed, km/s.
    #[arg(long, value_parser = positive)]
    pub speed: Option<f64>,
    /// Fit the speed jointly with the position.
    #[arg(long)]
    pub fit_speed: bool,
    /// Search region xmin,ymin,xmax,ymax in km.
    #[arg(long, value_parser = numbers::<4>, allow_hyphen_values = true)]
    pub bounds: Option<[f64; 4]>,
    /// True event position x,y in km; adds abs_error_km.
    #[arg(long, value_parser = numbers::<2>, allow_hyphen_values = true)]
    pub truth: Option<[f64; 2]>,
    /// Add uniform timing noise of this half-width (s), seeded by --seed.
    #[arg(long, value_parser = non_negative)]
    pub jitter: Option<f64>,
}
