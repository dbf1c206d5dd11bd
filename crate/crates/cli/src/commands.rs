use std::io::Write;
use std::path::Path;

use transwave_core::analysis::sweep::{apply_parameter, write_sweep_csv};
use transwave_core::analysis::{
    default_threshold, detect_arrivals, run_sensitivity_sweep, theory_report, SweepParameter, SweepSpec,
};
use transwave_core::emt::run_emt;
use transwave_core::hybrid::run_hybrid;
use transwave_core::locate::{
    estimate_speed_and_locate, jitter_arrivals, locate, read_arrivals_csv, sensor_arrivals, write_arrivals_csv, Bounds,
};
use transwave_core::model::{build_mesh, build_ring, presets, BusTemplate, LineTemplate, NetworkModel, SystemBases};
use transwave_core::series::{Quantity, TimeSeriesSet};
use transwave_core::swing::run_swing;
use transwave_core::Engine;

use crate::cli::{Cli, GenArgs, LocateArgs, Shape, SimulateArgs, SpeedArgs, SweepArgs, TemplateArgs, TheoryArgs};
use crate::error::{exit, CliError, CliResult};
use crate::files::{self, RunManifest, Scenario, MANIFEST_FILE, WAVES_FILE};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Global options and the sink for command results.
pub struct Context<'a> {
    pub out_dir: &'a Path,
    pub seed: u64,
    pub quiet: bool,
    pub stdout: &'a mut dyn Write,
}

impl Context<'_> {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn print(&mut self, text: impl AsRef<str>) -> CliResult<()> {
        emit(writeln!(self.stdout, "{}", text.as_ref()))
    }
}

/// A closed pipe on stdout (`| head`) is not a failure.
fn emit(r: std::io::Result<()>) -> CliResult<()> {
    match r {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn gen(ctx: &mut Context, args: &GenArgs) -> CliResult<()> {
    let bases = SystemBases::default();
    let (built, template) = match &args.shape {
        Shape::Ring {
            preset: _,
            buses,
            line_km,
            template,
        } => {
            let n = buses.unwrap_or(presets::RING23_BUSES);
            let km = line_km.unwrap_or(presets::RING23_LINE_KM);
            let model = build_ring(bases, n, km, &bus_template(template), &line_template(template))
                .map_err(|e| CliError::usage(format!("{e} (--buses, --line-km)")))?;
            (model, template)
        }
        Shape::Mesh {
            rows,
            cols,
            spacing_km,
            template,
        } => {
            let model = build_mesh(
                bases,
                *rows,
                *cols,
                *spacing_km,
                &bus_template(template),
                &line_template(template),
            )
            .map_err(|e| CliError::usage(format!("{e} (--rows, --cols, --spacing-km)")))?;
            (model, template)
        }
    };
    let report = built.validate();
    if !report.is_valid() {
        return Err(CliError::config(format!("generated network is invalid:\n{report}")));
    }
    let path = template
        .output
        .clone()
        .unwrap_or_else(|| files::out_path(ctx.out_dir, "network.json"));
    files::write_json(&path, &built)?;
    ctx.info(format!(
        "wrote {} buses, {} lines to {}",
        built.buses.len(),
        built.lines.len(),
        path.display()
    ));
    Ok(())
}

fn bus_template(t: &TemplateArgs) -> BusTemplate {
    let base = presets::ring23_bus();
    BusTemplate {
        gen_rating: if t.no_gen { None } else { t.gen_mw.or(base.gen_rating) },
        inertia_h: if t.no_gen { None } else { t.h.or(base.inertia_h) },
        coherent_count: t.coh.unwrap_or(base.coherent_count),
        load_p: t.load_mw.unwrap_or(base.load_p),
        emf_pu: t.emf.unwrap_or(base.emf_pu),
    }
}

fn line_template(t: &TemplateArgs) -> LineTemplate {
    let base = presets::ring23_line();
    LineTemplate {
        r_per_len: t.r_ohm_km.unwrap_or(base.r_per_len),
        l_per_len: t.l_per_len.unwrap_or(base.l_per_len),
        c_per_len: t.c_per_len.unwrap_or(base.c_per_len),
        len_unit_em: t.len_unit.map_or(base.len_unit_em, Into::into),
    }
}

pub fn simulate(ctx: &mut Context, args: &SimulateArgs) -> CliResult<()> {
    let (model, scenario, network_path, scenario_path, seed) = match &args.manifest {
        Some(path) => {
            let m: RunManifest = files::read_json(path)?;
            let report = m.network.validate();
            if !report.is_valid() {
                return Err(CliError::config(format!("invalid network:\n{report}")).in_file(path));
            }
            (m.network, m.scenario, m.network_path, m.scenario_path, m.seed)
        }
        None => {
            let (net, sc) = match (&args.network, &args.scenario) {
                (Some(n), Some(s)) => (n, s),
                _ => {
                    return Err(CliError::usage(
                        "--network and --scenario are required without --manifest",
                    ))
                }
            };
            let model = files::read_network(net)?;
            let mut scenario: Scenario = files::read_json(sc)?;
            if let Some(e) = args.engine {
                scenario.engine = e.into();
            }
            (
                model,
                scenario,
                net.display().to_string(),
                sc.display().to_string(),
                ctx.seed,
            )
        }
    };
    let scenario = scenario.resolved(&model)?;
    let series = run_engine(&model, &scenario)?;

    let mut csv = Vec::new();
    series.write_csv(&mut csv)?;
    files::write_file(&files::out_path(ctx.out_dir, WAVES_FILE), &csv)?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        engine: scenario.engine,
        network_path,
        scenario_path,
        outputs: vec![WAVES_FILE.to_string()],
        seed,
        network: model,
        scenario,
    };
    files::write_json(&files::out_path(ctx.out_dir, MANIFEST_FILE), &manifest)?;
    ctx.info(format!(
        "{} engine: {} samples x {} columns -> {}",
        manifest.engine,
        series.len(),
        series.channels.len() + 1,
        files::out_path(ctx.out_dir, WAVES_FILE).display()
    ));
    Ok(())
}

pub fn run_engine(model: &NetworkModel, scenario: &Scenario) -> CliResult<TimeSeriesSet> {
    let d = &scenario.disturbances;
    Ok(match scenario.engine {
        Engine::Swing => run_swing(model, &scenario.swing, d)?,
        Engine::Emt => run_emt(model, &scenario.emt, d)?,
        Engine::Hybrid => run_hybrid(model, &scenario.hybrid, d)?,
    })
}

pub fn theory(ctx: &mut Context, args: &TheoryArgs) -> CliResult<()> {
    let mut model = files::read_network(&args.network)?;
    let overrides = [
        (SweepParameter::InertiaH, args.h, "--h"),
        (SweepParameter::LPerLen, args.l_per_len, "--l-per-len"),
        (SweepParameter::CPerLen, args.c_per_len, "--c-per-len"),
    ];
    for (param, value, flag) in overrides {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::usage(format!("{flag} must be > 0, got {v}")));
            }
            model = apply_parameter(&model, param, v);
        }
    }
    let r = theory_report(&model)?;
    ctx.print(format!("inertia_density_s_per_km,{}", r.inertia_density))?;
    ctx.print(format!("v_mech_kms,{}", r.v_mech_kms))?;
    ctx.print(format!("v_em_ms,{}", r.v_em_ms))?;
    ctx.print(format!("light_speed_ms,{}", r.light_speed_ms))
}

pub fn speed(ctx: &mut Context, args: &SpeedArgs) -> CliResult<()> {
    let model = files::read_network(&args.network)?;
    let text = files::read_text(&args.waves)?;
    let series = TimeSeriesSet::read_csv(text.as_bytes()).map_err(|e| CliError::from(e).in_file(&args.waves))?;
    let quantity: Quantity = args.quantity.into();
    if series.buses_with(quantity).is_empty() {
        return Err(CliError::config(format!("no {quantity} channels")).in_file(&args.waves));
    }
    let threshold = args.threshold.unwrap_or_else(|| default_threshold(quantity, &model));
    let report = detect_arrivals(&series, quantity, args.origin, &model, threshold, args.onset)?;

    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    files::write_file(&files::out_path(ctx.out_dir, "arrivals.csv"), &csv)?;
    if let Some(buses) = &args.sensors {
        if let Some(bad) = buses.iter().find(|&&b| b >= model.n_buses()) {
            return Err(CliError::config(format!("--sensors: bus {bad} does not exist")));
        }
        let arrivals = sensor_arrivals(&report, &model, buses);
        let mut csv = Vec::new();
        write_arrivals_csv(&arrivals, &mut csv)?;
        files::write_file(&files::out_path(ctx.out_dir, "sensors.csv"), &csv)?;
        ctx.info(format!(
            "{} of {} sensors detected the wave",
            arrivals.len(),
            buses.len()
        ));
    }
    ctx.print(format!("speed_kms,{}", report.fitted_speed))?;
    ctx.print(format!("r2,{}", report.fit_r2))?;
    ctx.print(format!("detected,{}", report.detected()))
}

pub fn sweep(ctx: &mut Context, args: &SweepArgs) -> CliResult<()> {
    let model = files::read_network(&args.network)?;
    let spec: SweepSpec = files::read_json(&args.config)?;
    let points = run_sensitivity_sweep(&model, &spec)?;
    let mut csv = Vec::new();
    write_sweep_csv(&points, &mut csv)?;
    files::write_file(&files::out_path(ctx.out_dir, "sweep.csv"), &csv)?;
    emit(ctx.stdout.write_all(&csv))?;
    for p in points.iter().filter(|p| !p.ok()) {
        ctx.info(format!("point {}: {}", p.param_value, p.status));
    }
    if !points.iter().any(|p| p.ok()) {
        return Err(CliError::new(exit::DIVERGENCE, "no sweep point succeeded"));
    }
    Ok(())
}

pub fn locate_cmd(ctx: &mut Context, args: &LocateArgs) -> CliResult<()> {
    let text = files::read_text(&args.arrivals)?;
    let mut arrivals = read_arrivals_csv(text.as_bytes()).map_err(|e| CliError::from(e).in_file(&args.arrivals))?;
    if let Some(amp) = args.jitter {
        arrivals = jitter_arrivals(&arrivals, amp, ctx.seed);
    }
    let bounds = args
        .bounds
        .map(|[x0, y0, x1, y1]| Bounds::new([x0, y0], [x1, y1]))
        .transpose()
        .map_err(|e| CliError::usage(format!("--bounds: {e}")))?;
    let mut est = match args.speed {
        Some(v) if !args.fit_speed => locate(&arrivals, v, bounds)?,
        _ => estimate_speed_and_locate(&arrivals, bounds)?,
    };
    if let Some(truth) = args.truth {
        est = est.with_truth(truth);
    }
    for w in est.warnings() {
        ctx.info(format!("warning: {w}"));
    }
    let json = est.to_json();
    files::write_json(&files::out_path(ctx.out_dir, "location.json"), &json)?;
    ctx.print(serde_json::to_string_pretty(&json)?)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    use crate::cli::Command;
    let mut ctx = Context {
        out_dir: &cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
        stdout,
    };
    match &cli.command {
        Command::Gen(a) => gen(&mut ctx, a),
        Command::Simulate(a) => simulate(&mut ctx, a),
        Command::Theory(a) => theory(&mut ctx, a),
        Command::Speed(a) => speed(&mut ctx, a),
        Command::Sweep(a) => sweep(&mut ctx, a),
        Command::Locate(a) => locate_cmd(&mut ctx, a),
    }
}
