//! Error norms, convergence rates and the convergence-study harnesses.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::disk_basis::{fmt_num, hs_norm, IndexSet, SpectralField};
use crate::error::{invalid, Result};
use crate::operator::{assemble_mass, assemble_matrices, theory_constants, ModelParams};
use crate::solvers::{evolve, steady_solve};
use crate::sources::{manufactured_rhs, project_source, SourceSpec, TimeSeparableRHS};

/// `hs_norm(u - v, s)`; both fields must share the weight exponent.
pub fn field_error(u: &SpectralField, v: &SpectralField, s: f64) -> Result<f64> {
    Ok(hs_norm(&u.difference(v)?, s))
}

/// `log(E_cur/E_prev) / log((R_prev+2)/(R_cur+2))`.
pub fn convergence_rate(e_prev: f64, e_cur: f64, r_prev: usize, r_cur: usize) -> f64 {
    (e_cur / e_prev).ln() / ((r_prev as f64 + 2.0) / (r_cur as f64 + 2.0)).ln()
}

/// Predicted rates for a source of regularity `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalRates {
    /// `r + α/2`, the rate quoted for the steady table.
    pub steady_table_rate: f64,
    /// `(α + r - s)/2`, the exponent of the steady error bound.
    pub steady_bound_exponent: f64,
    /// `(r + α/2)/4`, the balancing exponent `p` of the time-space schedule.
    pub evolution_p: f64,
}

/// Evaluates the three predicted rates.
pub fn theoretical_rates(alpha: f64, r: f64, s: f64) -> Result<TheoreticalRates> {
    if !(r >= -alpha / 2.0) {
        return invalid(format!("regularity r = {r} must be at least -alpha/2"));
    }
    Ok(TheoreticalRates {
        steady_table_rate: r + alpha / 2.0,
        steady_bound_exponent: (alpha + r - s) / 2.0,
        evolution_p: (r + alpha / 2.0) / 4.0,
    })
}

/// `(Δt Σ_n hs_norm(g_n, s)²)^{1/2}` over the supplied time levels.
pub fn discrete_time_norm(fields: &[SpectralField], dt: f64, s: f64) -> f64 {
    (dt * fields.iter().map(|f| hs_norm(f, s).powi(2)).sum::<f64>()).sqrt()
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// Radial-degree cap.
    #[serde(rename = "R")]
    pub cap: usize,
    /// Time step, for evolution studies.
    pub dt: Option<f64>,
    /// Measured error.
    pub error: f64,
    /// Rate against the previous row.
    pub rate: Option<f64>,
}

/// A convergence table with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    /// Rows in refinement order.
    pub rows: Vec<ConvergenceRow>,
    /// Predicted rate printed under the table.
    pub theoretical_rate: Option<f64>,
    /// Fractional order.
    pub alpha: f64,
    /// Diffusivity along `x1`.
    pub k1: f64,
    /// Diffusivity along `x2`.
    pub k2: f64,
    /// Source identifier.
    pub source: String,
    /// Description of the error measure.
    pub norm: String,
}

impl ConvergenceRecord {
    /// Builds a record from `(R, Δt, error)` triples, filling in the rates.
    pub fn from_errors(
        entries: &[(usize, Option<f64>, f64)],
        params: &ModelParams,
        source: &str,
        norm: &str,
        theoretical_rate: Option<f64>,
    ) -> Self {
        let rows = entries
            .iter()
            .enumerate()
            .map(|(i, &(cap, dt, error))| ConvergenceRow {
                cap,
                dt,
                error,
                rate: (i > 0)
                    .then(|| convergence_rate(entries[i - 1].2, error, entries[i - 1].0, cap)),
            })
            .collect();
        Self {
            rows,
            theoretical_rate,
            alpha: params.alpha(),
            k1: params.k1(),
            k2: params.k2(),
            source: source.to_string(),
            norm: norm.to_string(),
        }
    }

    /// CSV with header `R,dt,error,rate`; absent values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,dt,error,rate\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.cap,
                r.dt.map(fmt_num).unwrap_or_default(),
                fmt_num(r.error),
                r.rate.map(fmt_num).unwrap_or_default()
            );
        }
        out
    }

    /// Fixed-width text table with a trailing `Theoretical CR` line.
    pub fn to_table(&self) -> String {
        let has_dt = self.rows.iter().any(|r| r.dt.is_some());
        let mut out = String::new();
        if has_dt {
            let _ = writeln!(out, "{:>5} {:>10} {:>10} {:>7}", "R", "dt", "error", "CR");
        } else {
            let _ = writeln!(out, "{:>5} {:>10} {:>7}", "R", "error", "CR");
        }
        for r in &self.rows {
            let rate = r
                .rate
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into());
            if has_dt {
                let dt = r.dt.map(|v| format!("{v}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    out,
                    "{:>5} {:>10} {:>10.2e} {:>7}",
                    r.cap, dt, r.error, rate
                );
            } else {
                let _ = writeln!(out, "{:>5} {:>10.2e} {:>7}", r.cap, r.error, rate);
            }
        }
        if let Some(t) = self.theoretical_rate {
            let _ = writeln!(out, "Theoretical CR: {t}");
        }
        out
    }
}

/// Setup of a steady convergence study against a high-degree reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStudyConfig {
    /// Model parameters.
    pub params: ModelParams,
    /// Source term.
    pub source: SourceSpec,
    /// Ascending caps to measure.
    pub caps: Vec<usize>,
    /// Cap of the reference solution.
    pub reference_cap: usize,
    /// Source regularity used for the printed predicted rate.
    pub regularity: Option<f64>,
}

impl Default for SteadyStudyConfig {
    /// `α = 1.7`, `K = diag(3, 9)`, the cusp source, reference cap 88.
    fn default() -> Self {
        Self {
            params: ModelParams::new(1.7, 3.0, 9.0).expect("valid defaults"),
            source: SourceSpec::cusp(),
            caps: vec![4, 12, 20, 28, 34, 42, 50, 58],
            reference_cap: 88,
            regularity: Some(3.5),
        }
    }
}

impl SteadyStudyConfig {
    /// Checks cap ordering.
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        if self.caps.is_empty() {
            return invalid("study needs at least one cap");
        }
        if self.caps.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("caps must be strictly increasing");
        }
        if self.caps.last().copied().unwrap_or(0) >= self.reference_cap {
            return invalid("every cap must be below the reference cap");
        }
        Ok(())
    }
}

/// Steady solution at cap `cap` for the configured source.
pub fn steady_field(config: &SteadyStudyConfig, cap: usize) -> Result<SpectralField> {
    let f = project_source(&config.source, cap, config.params.alpha())?;
    Ok(steady_solve(&f, cap, &config.params)?.u)
}

/// Runs the study with a freshly computed reference.
pub fn run_steady_study(config: &SteadyStudyConfig) -> Result<ConvergenceRecord> {
    config.validate()?;
    let reference = steady_field(config, config.reference_cap)?;
    run_steady_study_with_reference(config, &reference)
}

/// Runs the study against a supplied reference solution.
pub fn run_steady_study_with_reference(
    config: &SteadyStudyConfig,
    reference: &SpectralField,
) -> Result<ConvergenceRecord> {
    config.validate()?;
    let mut entries = Vec::with_capacity(config.caps.len());
    for &cap in &config.caps {
        let u = steady_field(config, cap)?;
        entries.push((cap, None, field_error(reference, &u, 0.0)?));
    }
    let theoretical = match config.regularity {
        Some(r) => Some(theoretical_rates(config.params.alpha(), r, 0.0)?.steady_table_rate),
        None => None,
    };
    Ok(ConvergenceRecord::from_errors(
        &entries,
        &config.params,
        config.source.id(),
        "L2 weighted alpha/2",
        theoretical.map(|v| (v * 1e6).round() / 1e6),
    ))
}

/// Refinement schedule `(R_i, Δt_i)` with `Δt_{i+1} = Δt_i/2`, `R_{i+1} = ⌈R_i 2^{1/p}⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGridSchedule {
    /// `(R, Δt)` pairs.
    pub entries: Vec<(usize, f64)>,
    /// Balancing exponent `p`.
    pub p: f64,
}

impl TimeGridSchedule {
    /// Builds `count` refinement levels starting from `(r0, dt0)`.
    pub fn optimal(r0: usize, dt0: f64, p: f64, count: usize) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return invalid(format!("schedule exponent p must be positive, got {p}"));
        }
        if !(dt0.is_finite() && dt0 > 0.0) {
            return invalid(format!("initial time step must be positive, got {dt0}"));
        }
        if r0 == 0 && count > 1 {
            return invalid("schedule must start from R >= 1 to refine");
        }
        let factor = 2f64.powf(1.0 / p);
        let mut entries = Vec::with_capacity(count);
        let (mut r, mut dt) = (r0, dt0);
        for _ in 0..count {
            entries.push((r, dt));
            let next = ((r as f64) * factor - 1e-12).ceil() as usize;
            r = next.max(r + 1);
            dt /= 2.0;
        }
        Ok(Self { entries, p })
    }
}

/// Error measure of an evolution study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionErrorMeasure {
    /// `max_n ‖u(t_n) - U^n‖_{L²_{α/2}}` (coefficient Parseval sum).
    #[default]
    L2Norm,
    /// `max_n ‖ω^{α/4}(u(t_n) - U^n)‖_{L²_{α/2}}`, evaluated with the mass matrix.
    MassEnergy,
}

/// Setup of the manufactured-solution evolution study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionStudyConfig {
    /// Model parameters.
    pub params: ModelParams,
    /// Refinement schedule.
    pub schedule: TimeGridSchedule,
    /// Final time.
    pub t_final: f64,
    /// Error measure.
    pub measure: EvolutionErrorMeasure,
    /// Minimum radial degree of the exact-solution expansion; the actual
    /// degree is `max(2R, tail_degree)`.
    pub tail_degree: usize,
}

impl Default for EvolutionStudyConfig {
    /// `α = 1.7`, `K = diag(3, 9)`, schedule from `(2, 0.5)` with `p = 1.0875`, `T = 3/2`.
    fn default() -> Self {
        Self {
            params: ModelParams::new(1.7, 3.0, 9.0).expect("valid defaults"),
            schedule: TimeGridSchedule::optimal(2, 0.5, 1.0875, 6).expect("valid defaults"),
            t_final: 1.5,
            measure: EvolutionErrorMeasure::L2Norm,
            tail_degree: 120,
        }
    }
}

/// Max-over-time error of one evolution run at `(cap, dt)`.
pub fn evolution_error(config: &EvolutionStudyConfig, cap: usize, dt: f64) -> Result<f64> {
    let alpha = config.params.alpha();
    let n_steps = (config.t_final / dt).round() as usize;
    if n_steps == 0 || ((n_steps as f64) * dt - config.t_final).abs() > 1e-9 * config.t_final {
        return invalid(format!(
            "time step {dt} does not divide the final time {}",
            config.t_final
        ));
    }
    let degree = (2 * cap).max(config.tail_degree);
    let rhs = TimeSeparableRHS::model(alpha, degree)?;
    let matrices = assemble_matrices(cap, &config.params)?;
    let g0 = SpectralField::new(alpha, alpha / 2.0, Some(cap))?;
    let state = evolve(
        &g0,
        |t| manufactured_rhs(&rhs, t, &matrices),
        config.t_final,
        n_steps,
        &matrices,
    )?;
    let mut worst = 0.0f64;
    match config.measure {
        EvolutionErrorMeasure::L2Norm => {
            for (n, u) in state.steps.iter().enumerate() {
                let exact = rhs.exact(n as f64 * state.dt);
                worst = worst.max(field_error(&exact, u, 0.0)?);
            }
        }
        EvolutionErrorMeasure::MassEnergy => {
            let big = IndexSet::new(degree);
            let mass = assemble_mass(&big, alpha)?;
            let g = rhs.spatial.to_vector(&big);
            for (n, u) in state.steps.iter().enumerate() {
                let tv = rhs.temporal(n as f64 * state.dt);
                let e: Vec<f64> = big
                    .indices()
                    .iter()
                    .zip(&g)
                    .map(|(b, gv)| tv * gv - u.get(b))
                    .collect();
                worst = worst.max(mass.energy(&e)?.max(0.0).sqrt());
            }
        }
    }
    Ok(worst)
}

/// Runs every schedule level and tabulates max-over-time errors.
pub fn run_evolution_study(config: &EvolutionStudyConfig) -> Result<ConvergenceRecord> {
    if config.schedule.entries.is_empty() {
        return invalid("schedule is empty");
    }
    let mut entries = Vec::with_capacity(config.schedule.entries.len());
    for &(cap, dt) in &config.schedule.entries {
        entries.push((cap, Some(dt), evolution_error(config, cap, dt)?));
    }
    let norm = match config.measure {
        EvolutionErrorMeasure::L2Norm => "max over time, L2 weighted alpha/2",
        EvolutionErrorMeasure::MassEnergy => "max over time, mass-matrix energy",
    };
    Ok(ConvergenceRecord::from_errors(
        &entries,
        &config.params,
        "manufactured",
        norm,
        Some(config.schedule.p),
    ))
}

/// Norms of the exact solution entering the evolution error bound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EvolutionNorms {
    /// `‖ω^{α/2} u_tt‖²` in `L²(0, T; H^{-α/2}_{α/2})`.
    pub utt_sq: f64,
    /// `|||u|||²` in `H^r_{α/2}`.
    pub triple_sq: f64,
    /// `max_n ‖u(t_n)‖²_{H^r_{α/2}}`.
    pub max_hr_sq: f64,
}

impl EvolutionNorms {
    /// Norms of `T(t) g` on the grid `t_n = nΔt`, `n = 0..=N`.
    ///
    /// The `u_tt` term is approximated by `∫ T''² dt · ‖g‖²_{H^{-α/2}}` with a
    /// composite midpoint rule of 2000 panels.
    pub fn for_model(rhs: &TimeSeparableRHS, r: f64, dt: f64, n_steps: usize) -> Self {
        let alpha = rhs.spatial.alpha();
        let g_hr = hs_norm(&rhs.spatial, r).powi(2);
        let g_neg = hs_norm(&rhs.spatial, -alpha / 2.0).powi(2);
        let t_end = n_steps as f64 * dt;
        let panels = 2000;
        let h = t_end / panels as f64;
        let int_tpp: f64 = (0..panels)
            .map(|i| rhs.temporal_second_derivative((i as f64 + 0.5) * h).powi(2) * h)
            .sum();
        let temps: Vec<f64> = (0..=n_steps).map(|n| rhs.temporal(n as f64 * dt)).collect();
        Self {
            utt_sq: int_tpp * g_neg,
            triple_sq: dt * temps.iter().map(|t| t * t).sum::<f64>() * g_hr,
            max_hr_sq: temps.iter().fold(0.0f64, |m, t| m.max(t * t)) * g_hr,
        }
    }
}

/// Four-term upper bound on `max_q ‖ω^{α/4}(u(t_q) - U^q)‖²`.
///
/// `C_ω` is evaluated at `s = α/2`.
pub fn predicted_evolution_bound(
    params: &ModelParams,
    r: f64,
    dt: f64,
    cap: usize,
    norms: &EvolutionNorms,
) -> f64 {
    let alpha = params.alpha();
    let c = theory_constants(alpha, params.k1(), params.k2(), alpha / 2.0);
    let h = 1.0 / (cap as f64 + 2.0);
    8.0 * dt * dt / (3.0 * c.c_coe) * norms.utt_sq
        + 16.0 * c.c_omega.powi(2) / (dt * dt * c.c_coe) * h.powf(r + alpha / 2.0) * norms.triple_sq
        + 2.0 * h.powf(r) * norms.max_hr_sq
        + 2.0
            * h.powf(r - alpha / 2.0)
            * (4.0 * c.c_cts.powi(2) / c.c_coe + c.c_coe)
            * norms.triple_sq
}

/// Steady error bound `2^{8-2α} (1/(R+2))^{(α+r-s)/2} ‖f‖_{H^r_{α/2}}`.
pub fn steady_error_bound(alpha: f64, r: f64, s: f64, cap: usize, f_norm: f64) -> f64 {
    2f64.powf(8.0 - 2.0 * alpha) * (1.0 / (cap as f64 + 2.0)).powf((alpha + r - s) / 2.0) * f_norm
}
