//! The five subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use fracdisk::analysis::{
    run_evolution_study, run_steady_study_with_reference, ConvergenceRecord, EvolutionStudyConfig,
    SteadyStudyConfig, TimeGridSchedule,
};
use fracdisk::disk_basis::fmt_num;
use fracdisk::io::{cached_reference, EvolutionManifest};
use fracdisk::solvers::load_vector;
use fracdisk::sources::manufactured_rhs;
use fracdisk::{
    assemble_matrices, evolve, project_source, reconstruct, snapshot, steady_solve, PolarGrid,
    SourceSpec, SpectralField, TimeSeparableRHS,
};
use std::f64::consts::PI;

use crate::config::{Command, RunConfig};
use crate::Failure;

/// Cap used by `steady`, `evolve` and `project` when `--R` is absent.
pub const DEFAULT_CAP: usize = 40;
/// Final time of `evolve` for time-independent sources; the last frame is
/// then within 1% of the steady field for α in [1.1, 2].
pub const DEFAULT_T_STEADY_SOURCE: f64 = 0.5;
/// Final time of `evolve` for the manufactured source.
pub const DEFAULT_T_MANUFACTURED: f64 = 1.5;
/// Step count of `evolve` when neither `--dt` nor `N` is given.
pub const DEFAULT_STEPS: usize = 200;

pub fn run(command: &Command, cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| Failure::output(format!("cannot create {}: {e}", cfg.out.display())))?;
    match command {
        Command::Steady(_) => steady(cfg),
        Command::Evolve(_) => evolve_cmd(cfg),
        Command::ConvergeSteady(_) => converge_steady(cfg),
        Command::ConvergeEvolve(_) => converge_evolve(cfg),
        Command::Project(_) => project(cfg),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::output(format!("cannot write {}: {e}", path.display())))
}

fn write_grid(path: &Path, grid: &PolarGrid) -> Result<(), Failure> {
    let file = File::create(path)
        .map_err(|e| Failure::output(format!("cannot write {}: {e}", path.display())))?;
    grid.write_csv(BufWriter::new(file))?;
    Ok(())
}

/// Field on the configured polar grid.
fn field_grid(field: &SpectralField, scaled: bool, cfg: &RunConfig) -> Result<PolarGrid, Failure> {
    let (radii, angles) = PolarGrid::uniform_axes(cfg.grid.0, cfg.grid.1)?;
    Ok(reconstruct(field, scaled, &radii, &angles)?)
}

/// Profile along the line through the origin at angle `phi`, as `s,r,phi,value`
/// with signed coordinate `s` running from -1 to 1.
fn write_cross_section(
    path: &Path,
    field: &SpectralField,
    phi: f64,
    nr: usize,
) -> Result<(), Failure> {
    let (radii, _) = PolarGrid::uniform_axes(nr, 1)?;
    let grid = reconstruct(field, true, &radii, &[phi, phi + PI])?;
    let file = File::create(path)
        .map_err(|e| Failure::output(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "s,r,phi,value")?;
    for i in (1..radii.len()).rev() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(-radii[i]),
            fmt_num(radii[i]),
            fmt_num(phi + PI),
            fmt_num(grid.values[i][1])
        )?;
    }
    for (i, r) in radii.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(*r),
            fmt_num(*r),
            fmt_num(phi),
            fmt_num(grid.values[i][0])
        )?;
    }
    w.flush()?;
    Ok(())
}

fn steady(cfg: &RunConfig) -> Result<(), Failure> {
    let cap = cfg.cap.unwrap_or(DEFAULT_CAP);
    let source = cfg.source.clone().unwrap_or_else(SourceSpec::bubble);
    let f = project_source(&source, cap, cfg.params.alpha())?;
    let sol = steady_solve(&f, cap, &cfg.params)?;
    write_text(&cfg.out.join("solution.json"), &sol.u.to_json()?)?;
    write_grid(&cfg.out.join("field.csv"), &field_grid(&sol.u, true, cfg)?)?;
    write_cross_section(&cfg.out.join("cross_x.csv"), &sol.u, 0.0, cfg.grid.0)?;
    write_cross_section(&cfg.out.join("cross_y.csv"), &sol.u, PI / 2.0, cfg.grid.0)?;
    println!(
        "steady: alpha={} k1={} k2={} R={} source={} unknowns={} residual={:.3e}",
        cfg.params.alpha(),
        cfg.params.k1(),
        cfg.params.k2(),
        cap,
        source.id(),
        sol.u.len(),
        sol.residual_norm
    );
    Ok(())
}

/// Number of steps from `dt` or `N`, checking that `dt` divides `T`.
fn step_count(cfg: &RunConfig, t_final: f64) -> Result<usize, Failure> {
    if t_final == 0.0 {
        return Ok(0);
    }
    match (cfg.dt, cfg.n_steps) {
        (Some(dt), _) => {
            let n = (t_final / dt).round();
            if n < 1.0 || (n * dt - t_final).abs() > 1e-9 * t_final {
                return Err(Failure::config(format!(
                    "dt = {dt} does not divide T = {t_final}"
                )));
            }
            Ok(n as usize)
        }
        (None, Some(0)) => Err(Failure::config("N must be positive when T > 0")),
        (None, Some(n)) => Ok(n),
        (None, None) => Ok(DEFAULT_STEPS),
    }
}

fn evolve_cmd(cfg: &RunConfig) -> Result<(), Failure> {
    let cap = cfg.cap.unwrap_or(DEFAULT_CAP);
    let alpha = cfg.params.alpha();
    let source = cfg.source.clone().unwrap_or_else(SourceSpec::bubble);
    let manufactured = source == SourceSpec::Manufactured;
    let t_final = cfg.t_final.unwrap_or(if manufactured {
        DEFAULT_T_MANUFACTURED
    } else {
        DEFAULT_T_STEADY_SOURCE
    });
    let n_steps = step_count(cfg, t_final)?;
    let times = match &cfg.times {
        Some(t) => t.clone(),
        None if n_steps == 0 => vec![0.0],
        None => (1..=4).map(|q| t_final * q as f64 / 4.0).collect(),
    };

    let matrices = assemble_matrices(cap, &cfg.params)?;
    let zero = SpectralField::new(alpha, alpha / 2.0, Some(cap))?;
    let state = if manufactured {
        let rhs = TimeSeparableRHS::model(alpha, cap)?;
        evolve(
            &zero,
            |t| manufactured_rhs(&rhs, t, &matrices),
            t_final,
            n_steps,
            &matrices,
        )?
    } else {
        let f = project_source(&source, cap, alpha)?;
        let load = load_vector(&f, &matrices.set);
        evolve(&zero, |_| Ok(load.clone()), t_final, n_steps, &matrices)?
    };
    let snaps = snapshot(&state, &times)?;

    let mut files = Vec::with_capacity(snaps.len());
    for (k, field) in snaps.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        write_grid(&cfg.out.join(&name), &field_grid(field, true, cfg)?)?;
        write_text(
            &cfg.out.join(format!("snapshot_{k:03}.json")),
            &field.to_json()?,
        )?;
        files.push(name);
    }
    let manifest = EvolutionManifest {
        t_final,
        n_steps,
        dt: state.dt,
        times: times.clone(),
        files,
    };
    write_text(&cfg.out.join("manifest.json"), &manifest.to_json()?)?;
    println!(
        "evolve: alpha={} R={} source={} T={} N={} snapshots={}",
        alpha,
        cap,
        source.id(),
        t_final,
        n_steps,
        times.len()
    );
    Ok(())
}

fn write_record(cfg: &RunConfig, rec: &ConvergenceRecord) -> Result<(), Failure> {
    write_text(&cfg.out.join("convergence.csv"), &rec.to_csv())?;
    let table = rec.to_table();
    write_text(&cfg.out.join("convergence.txt"), &table)?;
    let json = serde_json::to_string_pretty(rec).map_err(|e| Failure::output(e.to_string()))?;
    write_text(&cfg.out.join("convergence.json"), &json)?;
    print!("{table}");
    Ok(())
}

fn converge_steady(cfg: &RunConfig) -> Result<(), Failure> {
    let defaults = SteadyStudyConfig::default();
    let custom = cfg.caps.is_some() || cfg.source.as_ref().is_some_and(|s| *s != defaults.source);
    let study = SteadyStudyConfig {
        params: cfg.params,
        source: cfg.source.clone().unwrap_or(defaults.source.clone()),
        caps: cfg.caps.clone().unwrap_or(defaults.caps.clone()),
        reference_cap: cfg.ref_cap.unwrap_or(defaults.reference_cap),
        regularity: cfg
            .regularity
            .or(if custom { None } else { defaults.regularity }),
    };
    study.validate()?;
    let reference = cached_reference(&cfg.out.join("cache"), &study)?;
    let rec = run_steady_study_with_reference(&study, &reference)?;
    write_record(cfg, &rec)
}

fn converge_evolve(cfg: &RunConfig) -> Result<(), Failure> {
    let defaults = EvolutionStudyConfig::default();
    let (r0, dt0) = defaults.schedule.entries[0];
    let schedule = TimeGridSchedule::optimal(
        cfg.cap.unwrap_or(r0),
        cfg.dt.unwrap_or(dt0),
        cfg.schedule_p.unwrap_or(defaults.schedule.p),
        cfg.levels.unwrap_or(defaults.schedule.entries.len()),
    )?;
    let study = EvolutionStudyConfig {
        params: cfg.params,
        schedule,
        t_final: cfg.t_final.unwrap_or(defaults.t_final),
        measure: cfg.measure.unwrap_or(defaults.measure),
        tail_degree: defaults.tail_degree,
    };
    let rec = run_evolution_study(&study)?;
    write_record(cfg, &rec)
}

fn project(cfg: &RunConfig) -> Result<(), Failure> {
    let cap = cfg.cap.unwrap_or(DEFAULT_CAP);
    let source = cfg.source.clone().unwrap_or_else(SourceSpec::bubble);
    let f = project_source(&source, cap, cfg.params.alpha())?;
    write_text(&cfg.out.join("coefficients.json"), &f.to_json()?)?;
    write_grid(&cfg.out.join("source.csv"), &field_grid(&f, false, cfg)?)?;
    println!(
        "project: source={} R={} coefficients={}",
        source.id(),
        cap,
        f.len()
    );
    Ok(())
}
