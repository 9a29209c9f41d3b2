use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use sea_core::evolve;
use sea_core::integrator::detect_fixed_point;
use sea_core::oracles::{ppt_classification, Entanglement};

use crate::commands::{write_csv, write_file};
use crate::config::{AxisConfig, RangeSpec, RunConfig, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::json::fmt_f64;

/// Columns after `index` and the swept parameters.
pub const SWEEP_COLUMNS: &[&str] = &[
    "min_eigenvalue",
    "entropy",
    "energy",
    "entropy_production",
    "entropy_production_gram",
    "max_dissipator_norm",
    "ppt_min_eigenvalue",
    "entanglement",
];

/// Appended when `sweep.evolve` is set.
pub const SWEEP_EVOLVE_COLUMNS: &[&str] =
    &["final_entropy", "final_max_dissipator_norm", "max_energy_drift", "settling_time", "classification"];

/// Parses `NAME[*K][,NAME[*K]...]=START:STOP:STEP` or `=V[,V...]`.
pub fn parse_axis(spec: &str) -> CliResult<AxisConfig> {
    let bad = |why: &str| CliError::config("--axis", format!("{spec:?}: {why}"));
    let (names, values) = spec.split_once('=').ok_or_else(|| bad("missing '='"))?;
    let mut set = BTreeMap::new();
    for item in names.split(',') {
        let (name, k) = match item.split_once('*') {
            Some((n, k)) => (n.trim(), k.trim().parse::<f64>().map_err(|_| bad("bad multiplier"))?),
            None => (item.trim(), 1.0),
        };
        if name.is_empty() {
            return Err(bad("empty parameter name"));
        }
        set.insert(name.to_string(), k);
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad("bad number"));
    let parts: Vec<&str> = values.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => Ok(AxisConfig {
            set,
            values: None,
            range: Some(RangeSpec { start: num(start)?, stop: num(stop)?, step: num(step)? }),
        }),
        [list] => {
            let v = list.split(',').filter(|x| !x.trim().is_empty()).map(num).collect::<CliResult<Vec<f64>>>()?;
            Ok(AxisConfig { set, values: Some(v), range: None })
        }
        _ => Err(bad("expected START:STOP:STEP or a comma-separated list")),
    }
}

struct Grid {
    parameters: Vec<String>,
    /// Parameter values per point, in `parameters` order; the last axis varies fastest.
    points: Vec<Vec<f64>>,
}

fn grid(sweep: &SweepConfig) -> CliResult<Grid> {
    if sweep.axes.is_empty() {
        return Err(CliError::config("sweep.axes", "empty grid"));
    }
    let mut parameters: Vec<String> = Vec::new();
    let mut axes = Vec::with_capacity(sweep.axes.len());
    for (k, axis) in sweep.axes.iter().enumerate() {
        let values = axis.grid_values(&format!("sweep.axes[{k}]"))?;
        if values.is_empty() {
            return Err(CliError::config(&format!("sweep.axes[{k}]"), "empty grid"));
        }
        for name in axis.set.keys() {
            if parameters.contains(name) {
                return Err(CliError::config(&format!("sweep.axes[{k}].set"), format!("{name:?} is swept twice")));
            }
            parameters.push(name.clone());
        }
        axes.push(values);
    }
    let mut points = vec![Vec::new()];
    for (axis, values) in sweep.axes.iter().zip(&axes) {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.extend(axis.set.values().map(|k| k * v));
                    q
                })
            })
            .collect();
    }
    Ok(Grid { parameters, points })
}

fn evaluate(cfg: &RunConfig, sweep: &SweepConfig, parameters: &[String], point: &[f64]) -> CliResult<Vec<String>> {
    let mut cfg = cfg.clone();
    for (name, &v) in parameters.iter().zip(point) {
        cfg.set_parameter(name, v)?;
    }
    cfg.validate()?;
    let system = cfg.system()?;
    let rho = cfg.initial_state()?;
    let mut row: Vec<String> = point.iter().map(|&v| fmt_f64(v)).collect();
    let ep = system.entropy_production(&rho).map_err(CliError::run)?;
    let dmax = system
        .dissipators(&rho)
        .map_err(CliError::run)?
        .iter()
        .map(|d| d.anticommutator.norm())
        .fold(0.0, f64::max);
    row.push(fmt_f64(rho.spectrum()[0]));
    row.push(fmt_f64(system.params().boltzmann * rho.entropy()));
    row.push(fmt_f64(rho.expectation(system.model().hamiltonian())));
    row.push(fmt_f64(ep.total));
    row.push(fmt_f64(ep.gram_total));
    row.push(fmt_f64(dmax));
    if system.model().structure().dims() == [2, 2] {
        let (class, min) = ppt_classification(&rho, sweep.ppt_tol).map_err(CliError::run)?;
        row.push(fmt_f64(min));
        row.push(match class {
            Entanglement::Separable => "separable".into(),
            Entanglement::Entangled => "entangled".into(),
        });
    } else {
        row.extend([String::new(), String::new()]);
    }
    if sweep.evolve {
        let icfg = cfg.integrator()?;
        let traj = evolve(&rho, &system, &icfg).map_err(CliError::run)?;
        let class = detect_fixed_point(&traj, icfg.fixed_point_tol).map_err(CliError::run)?;
        let last = traj.last();
        row.push(fmt_f64(last.entropy));
        row.push(fmt_f64(last.dissipator_norms.iter().copied().fold(0.0, f64::max)));
        row.push(fmt_f64(traj.max_energy_drift()));
        row.push(traj.settling_time(icfg.fixed_point_tol).map(fmt_f64).unwrap_or_default());
        row.push(class.to_string());
    }
    Ok(row)
}

/// Axes given on the command line replace those of the config.
pub fn cmd_sweep(cfg: &RunConfig, axes: &[String], out: Option<&Path>) -> CliResult<i32> {
    let mut sweep = cfg.sweep.clone().unwrap_or(SweepConfig { axes: Vec::new(), evolve: false, ppt_tol: 1e-12 });
    if !axes.is_empty() {
        sweep.axes = axes.iter().map(|a| parse_axis(a)).collect::<CliResult<_>>()?;
    }
    let grid = grid(&sweep)?;
    info!("sweeping {} points over {:?}", grid.points.len(), grid.parameters);
    let results: Vec<CliResult<Vec<String>>> =
        grid.points.par_iter().map(|p| evaluate(cfg, &sweep, &grid.parameters, p)).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        let mut row = vec![index.to_string()];
        row.extend(r.map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("grid point {index}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("grid point {index}: {m}")),
        })?);
        rows.push(row);
    }
    let mut header = vec!["index".to_string()];
    header.extend(grid.parameters.iter().cloned());
    header.extend(SWEEP_COLUMNS.iter().map(|s| s.to_string()));
    if sweep.evolve {
        header.extend(SWEEP_EVOLVE_COLUMNS.iter().map(|s| s.to_string()));
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, &header, &rows)?;
    if let Some(dir) = out.or(cfg.output.dir.as_deref()) {
        write_file(dir, "sweep.csv", &buf)?;
    }
    print!("{}", String::from_utf8(buf).expect("CSV output is UTF-8"));
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_syntax() {
        let a = parse_axis("b,a*-1=0:0.5:0.05").unwrap();
        assert_eq!(a.set.get("a"), Some(&-1.0));
        assert_eq!(a.grid_values("x").unwrap().len(), 11);
        let b = parse_axis("tau_0=0.5,1,2").unwrap();
        assert_eq!(b.values, Some(vec![0.5, 1.0, 2.0]));
        assert!(parse_axis("tau_0").is_err());
        assert!(parse_axis("=1").is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let sweep = SweepConfig {
            axes: vec![parse_axis("a=1,2").unwrap(), parse_axis("b=10,20,30").unwrap()],
            evolve: false,
            ppt_tol: 1e-12,
        };
        let g = grid(&sweep).unwrap();
        assert_eq!(g.parameters, vec!["a", "b"]);
        assert_eq!(g.points[..2], [vec![1.0, 10.0], vec![1.0, 20.0]]);
        assert_eq!(g.points.len(), 6);
    }
}
