//! The subcommands behind the `vanet` binary, callable without a process.

use std::io::Write;
use std::path::PathBuf;

use vanet_core::Method;

use crate::config::ConfigMap;
use crate::error::{input, CliError};
use crate::experiment::{OutputFormat, SweepSpec, SweptParam};
use crate::output::{csv_string, read_csv_file, write_rows};
use crate::plot::{emit_plot, group_series, Axes, XField};
use crate::threshold::find_threshold;

/// Distance from the 0.5 floor that counts as "reached".
pub const DEFAULT_EPSILON: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Analytic,
    Oracle,
    Sweep,
    Threshold,
    Plot,
}

fn io_err(source: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn forced_method(cfg: &mut ConfigMap, method: Method) -> Result<(), CliError> {
    match cfg.get::<Method>("method")? {
        Some(m) if m != method => Err(cfg.error_at(
            "method",
            format!(
                "method = {} conflicts with the `{}` subcommand",
                m.as_str(),
                method.as_str()
            ),
        )),
        _ => cfg.set("method", method.as_str()),
    }
}

fn axes_for(cfg: &ConfigMap, spec: Option<&SweepSpec>) -> Result<Axes, CliError> {
    let x = match (cfg.get::<XField>("x")?, spec.and_then(|s| s.sweep.as_ref())) {
        (Some(x), _) => x,
        (None, Some((SweptParam::RoadLength, _))) => XField::RoadLength,
        (None, Some((SweptParam::Density, _))) => XField::Density,
        (None, _) => XField::Pm,
    };
    Ok(Axes {
        x,
        title: cfg.raw("title").map(str::to_string),
    })
}

/// Evaluates the configured experiment. Rows go to every `out` path, or to
/// `stdout` as CSV when none is given.
fn evaluate(cfg: &ConfigMap, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = SweepSpec::from_config(cfg)?;
    let rows = spec.run()?;
    if spec.outputs.is_empty() {
        stdout
            .write_all(csv_string(&rows)?.as_bytes())
            .map_err(io_err)?;
    } else {
        let axes = axes_for(cfg, Some(&spec))?;
        for path in &spec.outputs {
            write_rows(path, &rows, &axes)?;
        }
    }
    Ok(())
}

fn input_rows(cfg: &ConfigMap) -> Result<Option<Vec<crate::ResultRow>>, CliError> {
    let Some(paths) = cfg.get_list::<PathBuf>("input")? else {
        return Ok(None);
    };
    let mut rows = Vec::new();
    for path in paths {
        rows.extend(read_csv_file(&path)?);
    }
    Ok(Some(rows))
}

fn threshold(cfg: &ConfigMap, stdout: &mut dyn Write) -> Result<(), CliError> {
    let eps = cfg.get_or("eps", DEFAULT_EPSILON)?;
    let rows = match input_rows(cfg)? {
        Some(rows) => rows,
        None => {
            let spec = SweepSpec::from_config(cfg)?;
            if !matches!(spec.sweep, Some((SweptParam::MaliceProb, _))) {
                return Err(input(
                    "threshold needs `input = FILE.csv` or a config with sweep = malice_prob",
                ));
            }
            spec.run()?
        }
    };
    if rows.is_empty() {
        return Err(input("threshold needs a non-empty curve"));
    }
    for series in group_series(&rows, XField::Pm)? {
        let curve: Vec<(f64, f64)> = series.points.iter().map(|p| (p.0, p.1)).collect();
        let found = find_threshold(&curve, eps)?;
        let value = found.map_or_else(|| "none".to_string(), |v| v.to_string());
        writeln!(stdout, "{}\tp_th={value}", series.label).map_err(io_err)?;
    }
    Ok(())
}

fn plot(cfg: &ConfigMap, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rows = input_rows(cfg)?.ok_or_else(|| CliError::MissingKey("input".into()))?;
    let axes = axes_for(cfg, None)?;
    let svg = emit_plot(&rows, &axes)?;
    match cfg.get_list::<PathBuf>("out")? {
        None => stdout.write_all(svg.as_bytes()).map_err(io_err),
        Some(paths) => {
            for path in paths {
                if OutputFormat::of(&path)? != OutputFormat::Svg {
                    return Err(cfg.error_at("out", "plot writes .svg files only"));
                }
                std::fs::write(&path, &svg).map_err(|source| CliError::Io { path, source })?;
            }
            Ok(())
        }
    }
}

pub fn execute(
    command: Command,
    mut cfg: ConfigMap,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Simulate => {
            forced_method(&mut cfg, Method::Simulation)?;
            evaluate(&cfg, stdout)
        }
        Command::Analytic => {
            forced_method(&mut cfg, Method::Analytic)?;
            evaluate(&cfg, stdout)
        }
        Command::Oracle => {
            forced_method(&mut cfg, Method::Oracle)?;
            evaluate(&cfg, stdout)
        }
        Command::Sweep => {
            if !cfg.contains("sweep") {
                return Err(CliError::MissingKey("sweep".into()));
            }
            evaluate(&cfg, stdout)
        }
        Command::Threshold => threshold(&cfg, stdout),
        Command::Plot => plot(&cfg, stdout),
    }
}
