//! Steady chain solves, forward operator application and the backward Euler
//! time stepper.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::disk_basis::{basis_norm_sq, IndexSet, Mu, SpectralField};
use crate::error::{invalid, Error, Result};
use crate::operator::{
    assemble_stiffness, scale_chains, ModelParams, OperatorMatrices, ScaledChain,
};

/// Result of a steady solve on `X_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadySolution {
    /// Solution coefficients `u_R` at weight `α/2`.
    pub u: SpectralField,
    /// `‖S u - F‖ / ‖F‖` over `X_R` (zero for a zero load).
    pub residual_norm: f64,
    /// Parameters of the solve.
    pub params: ModelParams,
}

/// Solves one tridiagonal chain by elimination without pivoting.
///
/// Fails if a pivot drops below `1e-13` times the largest chain entry.
pub fn solve_tridiagonal(chain: &ScaledChain, rhs: &[f64]) -> Result<Vec<f64>> {
    let k = chain.diag.len();
    if rhs.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "chain of length {k} with right-hand side of length {}",
            rhs.len()
        )));
    }
    let scale = chain
        .diag
        .iter()
        .chain(&chain.upper)
        .chain(&chain.lower)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut piv = vec![0.0; k];
    let mut y = vec![0.0; k];
    for i in 0..k {
        let (p, r) = if i == 0 {
            (chain.diag[0], rhs[0])
        } else {
            let m = chain.lower[i - 1] / piv[i - 1];
            (
                chain.diag[i] - m * chain.upper[i - 1],
                rhs[i] - m * y[i - 1],
            )
        };
        if !(p.abs() > 1e-13 * scale) {
            return Err(Error::Numerical(format!(
                "pivot {p:e} at row {i} of a chain of length {k}"
            )));
        }
        piv[i] = p;
        y[i] = r;
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut r = y[i];
        if i + 1 < k {
            r -= chain.upper[i] * x[i + 1];
        }
        x[i] = r / piv[i];
    }
    Ok(x)
}

/// Load vector `F_i = f_i h²_i` from load coefficients `f` on `set`.
pub fn load_vector(f: &SpectralField, set: &IndexSet) -> Vec<f64> {
    set.indices()
        .iter()
        .map(|b| f.get(b) * basis_norm_sq(*b, f.gamma()))
        .collect()
}

/// Solves `B(u_R, v) = ⟨f, v⟩` for all `v ∈ X_R`.
///
/// `f` holds load coefficients at weight `α/2`; entries outside `X_R` are ignored.
pub fn steady_solve(f: &SpectralField, cap: usize, params: &ModelParams) -> Result<SteadySolution> {
    check_field(f, params)?;
    let set = IndexSet::new(cap);
    let load = load_vector(f, &set);
    solve_load(&load, &set, params)
}

/// Solves `S u = F` for a load vector already in `set` order.
pub fn solve_load(load: &[f64], set: &IndexSet, params: &ModelParams) -> Result<SteadySolution> {
    if load.len() != set.len() {
        return Err(Error::DimensionMismatch(format!(
            "load of length {} for an index set of size {}",
            load.len(),
            set.len()
        )));
    }
    let alpha = params.alpha();
    let stiffness = assemble_stiffness(set, params);
    let mut u = vec![0.0; set.len()];
    for mu in Mu::BOTH {
        let sys = scale_chains(&stiffness, mu, alpha);
        let chains = stiffness.chains.iter().filter(|c| c.mu == mu);
        for (chain, scaled) in chains.zip(&sys.chains) {
            let rhs: Vec<f64> = scaled
                .indices
                .iter()
                .enumerate()
                .map(|(k, b)| sys.row_factor(*b) * load[chain.start + k])
                .collect();
            let d = solve_tridiagonal(scaled, &rhs)?;
            for (k, b) in scaled.indices.iter().enumerate() {
                u[chain.start + k] = d[k] / sys.column_factor(*b);
            }
        }
    }
    let su = stiffness.apply(&u)?;
    let num: f64 = su
        .iter()
        .zip(load)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = load.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual_norm = if den > 0.0 { num / den } else { num };
    Ok(SteadySolution {
        u: SpectralField::from_vector(set, alpha, alpha / 2.0, &u)?,
        residual_norm,
        params: *params,
    })
}

fn check_field(f: &SpectralField, params: &ModelParams) -> Result<()> {
    if (f.gamma() - params.gamma()).abs() > 1e-15 || (f.alpha() - params.alpha()).abs() > 1e-15 {
        return invalid(format!(
            "field at (alpha, gamma) = ({}, {}) does not match alpha = {}",
            f.alpha(),
            f.gamma(),
            params.alpha()
        ));
    }
    Ok(())
}

/// Load coefficients `f` with `f_i h²_i = (S u)_i`, rows restricted to the cap of `u`.
///
/// Without a cap, the smallest `X_R` containing every stored coefficient is used.
pub fn apply_operator(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    check_field(u, params)?;
    let cap = u.cap().unwrap_or_else(|| u.max_stored_degree());
    let set = IndexSet::new(cap);
    let su = assemble_stiffness(&set, params).apply(&u.to_vector(&set))?;
    let f: Vec<f64> = set
        .indices()
        .iter()
        .zip(&su)
        .map(|(b, v)| v / basis_norm_sq(*b, u.gamma()))
        .collect();
    SpectralField::from_vector(&set, u.alpha(), u.gamma(), &f)
}

/// Stored iterates of a backward Euler run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    /// `U^0, …, U^N`.
    pub steps: Vec<SpectralField>,
    /// Final time `T`.
    pub t_final: f64,
    /// Number of steps `N`.
    pub n_steps: usize,
    /// Step `Δt = T/N` (zero when `N = 0`).
    pub dt: f64,
}

impl EvolutionState {
    /// Grid times `t_n = nΔt`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| n as f64 * self.dt).collect()
    }

    /// Grid index of `t`, if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.n_steps == 0 {
            return (t.abs() <= 1e-12).then_some(0);
        }
        let k = (t / self.dt).round();
        if k < 0.0 || k > self.n_steps as f64 {
            return None;
        }
        let tol = 1e-9 * self.t_final.abs().max(1.0);
        ((t - k * self.dt).abs() <= tol).then_some(k as usize)
    }
}

/// Fields stored at the requested grid times.
pub fn snapshot(state: &EvolutionState, times: &[f64]) -> Result<Vec<SpectralField>> {
    times
        .iter()
        .map(|&t| {
            state
                .index_of(t)
                .map(|k| state.steps[k].clone())
                .ok_or_else(|| Error::InvalidParameter(format!("time {t} is not a grid point")))
        })
        .collect()
}

struct BlockFactor {
    positions: Vec<usize>,
    factor: Cholesky<f64, nalgebra::Dyn>,
}

/// Factors `M + Δt S` block by block; blocks are `(μ, l mod 2)` classes.
fn factor_blocks(matrices: &OperatorMatrices, dt: f64) -> Result<Vec<BlockFactor>> {
    let set = &matrices.set;
    let mut out = Vec::new();
    let mut local = vec![usize::MAX; set.len()];
    for mu in Mu::BOTH {
        for parity in 0..2 {
            let positions: Vec<usize> = set
                .indices()
                .iter()
                .enumerate()
                .filter(|(_, b)| b.mu() == mu && b.l() % 2 == parity)
                .map(|(p, _)| p)
                .collect();
            if positions.is_empty() {
                continue;
            }
            for (k, &p) in positions.iter().enumerate() {
                local[p] = k;
            }
            let k = positions.len();
            let mut a = DMatrix::zeros(k, k);
            for blk in &matrices.mass.blocks {
                if blk.mu != mu || blk.l % 2 != parity {
                    continue;
                }
                for (i, &pi) in blk.positions.iter().enumerate() {
                    for (j, &pj) in blk.positions.iter().enumerate() {
                        a[(local[pi], local[pj])] += blk.get(i, j);
                    }
                }
            }
            for c in matrices.stiffness.chains.iter().filter(|c| c.mu == mu) {
                if c.indices[0].l() % 2 != parity {
                    continue;
                }
                for i in 0..c.len() {
                    let li = local[c.start + i];
                    a[(li, li)] += dt * c.diag[i];
                    if i + 1 < c.len() {
                        let lj = local[c.start + i + 1];
                        a[(li, lj)] += dt * c.off[i];
                        a[(lj, li)] += dt * c.off[i];
                    }
                }
            }
            let factor = Cholesky::new(a).ok_or_else(|| {
                Error::Numerical(format!(
                    "M + dt S is not positive definite on block (mu = {}, l parity {parity})",
                    mu.sign()
                ))
            })?;
            out.push(BlockFactor { positions, factor });
        }
    }
    Ok(out)
}

/// Runs backward Euler: `(M + ΔtS) c^n = M c^{n-1} + Δt load(t_n)`, `c^0 = P_R(g)`.
///
/// `load(t)` returns the vector `(f(·, t), P_i)_{α/2}` in index-set order.
pub fn evolve(
    g: &SpectralField,
    mut load: impl FnMut(f64) -> Result<Vec<f64>>,
    t_final: f64,
    n_steps: usize,
    matrices: &OperatorMatrices,
) -> Result<EvolutionState> {
    check_field(g, &matrices.params)?;
    if !(t_final.is_finite() && t_final >= 0.0) {
        return invalid(format!("final time must be non-negative, got {t_final}"));
    }
    if n_steps > 0 && t_final == 0.0 {
        return invalid("a positive number of steps needs a positive final time");
    }
    let set = &matrices.set;
    let (alpha, gamma) = (g.alpha(), g.gamma());
    let dt = if n_steps == 0 {
        0.0
    } else {
        t_final / n_steps as f64
    };
    let mut c = g.to_vector(set);
    let mut steps = Vec::with_capacity(n_steps + 1);
    steps.push(SpectralField::from_vector(set, alpha, gamma, &c)?);
    if n_steps > 0 {
        let blocks = factor_blocks(matrices, dt)?;
        for n in 1..=n_steps {
            let t = n as f64 * dt;
            let f = load(t)?;
            if f.len() != set.len() {
                return Err(Error::DimensionMismatch(format!(
                    "load of length {} for an index set of size {}",
                    f.len(),
                    set.len()
                )));
            }
            let mut rhs = matrices.mass.apply(&c)?;
            for (r, v) in rhs.iter_mut().zip(&f) {
                *r += dt * v;
            }
            for b in &blocks {
                let local =
                    DVector::from_iterator(b.positions.len(), b.positions.iter().map(|&p| rhs[p]));
                let x = b.factor.solve(&local);
                for (k, &p) in b.positions.iter().enumerate() {
                    c[p] = x[k];
                }
            }
            steps.push(SpectralField::from_vector(set, alpha, gamma, &c)?);
        }
    }
    Ok(EvolutionState {
        steps,
        t_final,
        n_steps,
        dt,
    })
}

/// Weighted energy `(cᵀ M c)^{1/2}` of a field on the index set of `matrices`.
pub fn mass_energy(field: &SpectralField, matrices: &OperatorMatrices) -> Result<f64> {
    Ok(matrices
        .mass
        .energy(&field.to_vector(&matrices.set))?
        .max(0.0)
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk_basis::BasisIndex;
    use crate::operator::assemble_matrices;

    #[test]
    fn zero_load_gives_zero() {
        let p = ModelParams::new(1.7, 3.0, 9.0).unwrap();
        let f = SpectralField::new(1.7, 0.85, Some(6)).unwrap();
        let s = steady_solve(&f, 6, &p).unwrap();
        assert!(s.u.is_empty());
        assert_eq!(s.residual_norm, 0.0);
    }

    #[test]
    fn constant_mode_load() {
        let p = ModelParams::new(1.7, 3.0, 9.0).unwrap();
        let mut f = SpectralField::new(1.7, 0.85, Some(4)).unwrap();
        let b = BasisIndex::new(0, 0, Mu::Plus).unwrap();
        f.set(b, 1.0).unwrap();
        let s = steady_solve(&f, 4, &p).unwrap();
        let m = assemble_matrices(4, &p).unwrap();
        let dense = m.stiffness.to_dense();
        let load = load_vector(&f, &m.set);
        let x = dense.lu().solve(&DVector::from_vec(load)).unwrap();
        for (i, idx) in m.set.indices().iter().enumerate() {
            assert!((s.u.get(idx) - x[i]).abs() < 1e-12 * x.amax());
        }
        assert!(s.residual_norm < 1e-13);
    }

    #[test]
    fn zero_evolution() {
        let p = ModelParams::new(1.7, 3.0, 9.0).unwrap();
        let m = assemble_matrices(4, &p).unwrap();
        let g = SpectralField::new(1.7, 0.85, Some(4)).unwrap();
        let st = evolve(&g, |_| Ok(vec![0.0; m.set.len()]), 1.0, 4, &m).unwrap();
        assert_eq!(st.steps.len(), 5);
        assert!(st.steps.iter().all(|s| s.is_empty()));
        assert_eq!(snapshot(&st, &[]).unwrap().len(), 0);
        assert!(snapshot(&st, &[0.3]).is_err());
        assert_eq!(snapshot(&st, &[0.25, 1.0]).unwrap().len(), 2);
    }
}
