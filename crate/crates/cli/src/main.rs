//! `fieldbot`: every pipeline stage plus the full simulation, one subcommand each.
//!
//! Exit status: 0 on success, 1 when the inputs are well formed but the
//! operation fails (the message names the condition, e.g. `Unreachable`),
//! 2 for usage, I/O and parse errors.

mod overlay;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fieldbot_core::calibration::{
    builtin_samples, fit_polynomial, mse, parse_samples, predict_moisture, published_model, CalibrationError,
    PolynomialModel,
};
use fieldbot_core::config::PipelineConfig;
use fieldbot_core::estimator::estimate_moisture;
use fieldbot_core::mapper::{map_field, GridSpec, MapperError};
use fieldbot_core::nav::{compile_commands, format_commands, Pose};
use fieldbot_core::planner::{Cell, GridPath, PlanError, Planner};
use fieldbot_core::raster::{read_pixmap, write_ppm, RasterError, RgbRaster};
use fieldbot_core::sim::{render_aerial, run, Scenario, SimError};
use fieldbot_core::Error;

#[derive(Parser)]
#[command(name = "fieldbot", version, about = "Sensor-triggered field inspection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Least-squares fit of a calibration polynomial to gray,moisture samples.
    Fit {
        /// Sample file, or `builtin` for the reference table.
        #[arg(long)]
        samples: String,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moisture for an average gray level.
    Predict {
        #[arg(long)]
        gray: f64,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Shortest path on the occupancy grid of a top-down field image.
    Plan {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        src: Cell,
        #[arg(long)]
        dst: Cell,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rotate/forward commands for a grid path (`r,c->r,c->...` or a file holding one).
    Compile {
        #[arg(long)]
        path: String,
        #[arg(long)]
        cm_per_px: f64,
        #[arg(long)]
        cell_px: usize,
        #[arg(long, allow_hyphen_values = true)]
        heading: f64,
    },
    /// Moisture estimate from a close-range soil image.
    Estimate {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Runs a scenario and writes the event log and per-dispatch images.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        ticks: u32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-down image of a scenario's field.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    /// Bad invocation, unreadable file or malformed input.
    Usage(String),
    Domain(Error),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        if is_parse_error(&e) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Domain(e)
        }
    }
}

fn is_parse_error(e: &Error) -> bool {
    match e {
        Error::Config(_) | Error::Raster(RasterError::Codec(_)) => true,
        Error::Calibration(CalibrationError::Parse { .. }) | Error::Plan(PlanError::Parse(_)) => true,
        Error::Mapper(MapperError::Raster(RasterError::Codec(_))) => true,
        Error::Sim(SimError::Config(_) | SimError::Calibration(CalibrationError::Parse { .. })) => true,
        _ => false,
    }
}

type CmdResult = Result<String, Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("IoError: {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("IoError: {}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Usage(format!("IoError: {}: {e}", path.display())))
}

fn read_image(path: &Path) -> Result<RgbRaster, Failure> {
    Ok(read_pixmap(&read(path)?)?.into_rgb())
}

fn load_model(path: &Path) -> Result<PolynomialModel, Failure> {
    Ok(read_text(path)?.parse::<PolynomialModel>()?)
}

/// Config file plus the directory its relative paths refer to.
fn load_config(path: Option<&Path>) -> Result<(PipelineConfig, PathBuf), Failure> {
    match path {
        None => Ok((PipelineConfig::default(), PathBuf::from("."))),
        Some(p) => {
            let cfg = read_text(p)?.parse::<PipelineConfig>()?;
            Ok((cfg, p.parent().map(Path::to_path_buf).unwrap_or_default()))
        }
    }
}

fn fit(samples: &str, degree: usize, out: Option<&Path>) -> CmdResult {
    let samples = if samples == "builtin" { builtin_samples() } else { parse_samples(&read_text(Path::new(samples))?)? };
    let model = fit_polynomial(&samples, degree)?;
    let mut s = format!("degree={degree}\n");
    for (i, c) in model.coeffs().iter().enumerate() {
        s += &format!("c{i}={c:.3}\n");
    }
    s += &format!("mse={:.3}\n", mse(&model, &samples));
    if let Some(out) = out {
        write(out, model.to_string())?;
    }
    Ok(s)
}

fn predict(gray: f64, model: Option<&Path>) -> CmdResult {
    let model = model.map(load_model).transpose()?.unwrap_or_else(published_model);
    let p = predict_moisture(&model, gray)?;
    Ok(format!("moisture={:.3}\nclamped={}\n", p.moisture, p.clamped))
}

fn plan(image: &Path, src: Cell, dst: Cell, config: Option<&Path>, out: &Path) -> CmdResult {
    let (cfg, _) = load_config(config)?;
    for w in cfg.mapper.warnings() {
        eprintln!("warning: {w}");
    }
    let mapped = map_field(&read_image(image)?, &cfg.mapper)?;
    let path = Planner::new(cfg.planner).shortest_path(&mapped.grid, src, dst)?;
    write(out, write_ppm(&overlay::draw_path(&mapped.field, mapped.grid.spec(), &path)))?;
    Ok(format!("{path}\n"))
}

fn compile(path: &str, cm_per_px: f64, cell_px: usize, heading: f64) -> CmdResult {
    let text = if Path::new(path).is_file() { read_text(Path::new(path))? } else { path.to_string() };
    let path: GridPath = text.trim().parse()?;
    let rows = path.cells().iter().map(|c| c.row).max().unwrap() + 1;
    let cols = path.cells().iter().map(|c| c.col).max().unwrap() + 1;
    if !(cm_per_px > 0.0 && cm_per_px.is_finite()) || cell_px == 0 {
        return Err(Failure::Usage("InvalidArgument: --cm-per-px and --cell-px must be positive".into()));
    }
    let spec = GridSpec::new(rows, cols, cell_px, cm_per_px)?;
    let cmds = compile_commands(&path, &spec, Pose::new(path.source(), heading))?;
    Ok(format_commands(&cmds))
}

fn estimate(image: &Path, config: Option<&Path>, model: Option<&Path>) -> CmdResult {
    let (cfg, base) = load_config(config)?;
    let model = match (model, &cfg.model_path) {
        (Some(m), _) => load_model(m)?,
        (None, Some(m)) => load_model(&base.join(m))?,
        (None, None) => published_model(),
    };
    let est = estimate_moisture(&read_image(image)?, &model, &cfg.estimator)?;
    Ok(format!(
        "moisture={:.3}\navg_gray={:.3}\nkept_fraction={:.3}\nclamped={}\n",
        est.moisture, est.avg_gray, est.kept_fraction, est.clamped
    ))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = read_text(path)?;
    Ok(Scenario::parse(&text, path.parent())?)
}

fn simulate(scenario: &Path, ticks: u32, seed: Option<u64>, out: &Path) -> CmdResult {
    let mut sc = load_scenario(scenario)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let result = run(&sc, ticks)?;
    fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("IoError: {}: {e}", out.display())))?;
    write(&out.join("events.log"), result.log.to_string())?;
    let subfields = sc.subfields();
    for d in &result.dispatches {
        let stem = format!("dispatch_t{:04}_{}", d.tick, subfields[d.subfield].name);
        if let Some(path) = &d.path {
            let img = overlay::draw_path(&result.mapped.field, result.mapped.grid.spec(), path);
            write(&out.join(format!("{stem}_path.ppm")), write_ppm(&img))?;
        }
        if let Some(soil) = &d.soil {
            write(&out.join(format!("{stem}_soil.ppm")), write_ppm(&soil.image))?;
        }
    }
    Ok(format!(
        "events={}\ndispatches={}\nlog={}\n",
        result.log.events().len(),
        result.dispatches.len(),
        out.join("events.log").display()
    ))
}

fn render(scenario: &Path, out: &Path) -> CmdResult {
    let sc = load_scenario(scenario)?;
    sc.validate()?;
    let img = render_aerial(sc.field.width, sc.field.height, &sc.path(), sc.mapper.cm_per_px, sc.seed);
    write(out, write_ppm(&img))?;
    Ok(format!("width={}\nheight={}\n", img.width(), img.height()))
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Fit { samples, degree, out } => fit(&samples, degree, out.as_deref()),
        Command::Predict { gray, model } => predict(gray, model.as_deref()),
        Command::Plan { image, src, dst, config, out } => plan(&image, src, dst, config.as_deref(), &out),
        Command::Compile { path, cm_per_px, cell_px, heading } => compile(&path, cm_per_px, cell_px, heading),
        Command::Estimate { image, config, model } => estimate(&image, config.as_deref(), model.as_deref()),
        Command::Simulate { scenario, ticks, seed, out } => simulate(&scenario, ticks, seed, &out),
        Command::Render { scenario, out } => render(&scenario, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
