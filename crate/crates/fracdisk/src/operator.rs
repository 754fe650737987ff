//! Assembly of the discrete operator.
//!
//! Stiffness entries `B(P_i, P_j)` are formed by expanding the gradient of
//! `ω^{α/2} P_i` (and its Riesz-potential image) in the basis at weight
//! `γ = α/2 - 1` and pairing the expansions through orthogonality. Because
//! every gradient term shifts `(l, n)` to `(l ± 1, n or n+1)`, only basis
//! functions of equal radial degree and parity couple, which yields one
//! symmetric tridiagonal chain per (parity, degree) pair.
//!
//! With the V_{0,1} = 1/2 convention, a gradient term that lands on an
//! `L = 0` target has twice the coefficient of the general formula. The
//! expansions below include that factor, and the scaled right-hand side of
//! `l = 0` rows carries a matching factor 1/2 so that the scaled blocks are
//! the symmetric matrices with generic diagonal `2(k1+k2)` and off-diagonal
//! `k1 - k2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::disk_basis::{
    angular_constant, basis_norm_sq, check_alpha, BasisIndex, ChainSpan, IndexSet, Mu,
};
use crate::error::{invalid, Error, Result};
use crate::specfun::{gauss_jacobi, jacobi_eval_all, ln_gamma_ratio, JacobiParams};

/// Fractional order and diffusivity `K = diag(k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ModelParams {
    alpha: f64,
    k1: f64,
    k2: f64,
}

impl ModelParams {
    /// Validates `α ∈ (1, 2]` and `k1, k2 > 0`.
    pub fn new(alpha: f64, k1: f64, k2: f64) -> Result<Self> {
        check_alpha(alpha)?;
        for (name, k) in [("k1", k1), ("k2", k2)] {
            if !(k.is_finite() && k > 0.0) {
                return invalid(format!("{name} must be positive and finite, got {k}"));
            }
        }
        Ok(Self { alpha, k1, k2 })
    }

    /// Fractional order `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Diffusivity along `x1`.
    pub fn k1(&self) -> f64 {
        self.k1
    }

    /// Diffusivity along `x2`.
    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Solution weight exponent `α/2`.
    pub fn gamma(&self) -> f64 {
        self.alpha / 2.0
    }

    /// The same problem with `k1` and `k2` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.alpha,
            k1: self.k2,
            k2: self.k1,
        }
    }
}

/// A sparse expansion `Σ c_T P^{(α/2-1)}_T`.
pub type Expansion = Vec<(BasisIndex, f64)>;

/// Expansions of `∂_{x_c}(ω^{α/2} P_idx)` (after dividing out `ω^{α/2-1}`)
/// and of `(-Δ)^{(α-2)/2} ∂_{x_c}(ω^{α/2} P_idx)`, for `c = 1, 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaExpansions {
    /// `[∂x1, ∂x2]` gradient expansions.
    pub gradient: [Expansion; 2],
    /// `[∂x1, ∂x2]` Riesz-potential expansions.
    pub riesz: [Expansion; 2],
}

/// Multiplier of the Riesz potential of order `α - 2` on `ω^{α/2-1} P^{(α/2-1)}_{L,N}`:
/// `2^{α-2} Γ(N+α/2)Γ(N+α/2+L) / (Γ(N+1)Γ(N+L+1))`.
pub fn riesz_multiplier(l: usize, n: usize, alpha: f64) -> f64 {
    let a = alpha / 2.0;
    let (lf, nf) = (l as f64, n as f64);
    let ln = (alpha - 2.0) * std::f64::consts::LN_2
        + ln_gamma_ratio(nf + 1.0, a - 1.0).expect("alpha > 1")
        + ln_gamma_ratio(nf + lf + 1.0, a - 1.0).expect("alpha > 1");
    ln.exp()
}

/// Pseudo-eigenvalue `λ_{l,n} = 2^α Γ(n+1+α/2)Γ(n+1+α/2+l) / (Γ(n+1)Γ(n+1+l))`.
pub fn pseudo_eigenvalue(l: usize, n: usize, alpha: f64) -> f64 {
    let a = alpha / 2.0;
    let (lf, nf) = (l as f64, n as f64);
    (alpha * std::f64::consts::LN_2
        + ln_gamma_ratio(nf + 1.0, a).expect("alpha > 0")
        + ln_gamma_ratio(nf + lf + 1.0, a).expect("alpha > 0"))
    .exp()
}

/// Gradient and Riesz expansions of `ω^{α/2} P^{(α/2)}_idx`.
pub fn lemma_expansions(idx: BasisIndex, alpha: f64) -> LemmaExpansions {
    let a = alpha / 2.0;
    let (l, n) = (idx.l() as i64, idx.n() as i64);
    let nf = n as f64;
    let mu = idx.mu();
    let sign = mu.sign();
    let push = |list: &mut Expansion, tl: i64, tn: i64, tmu: Mu, c: f64| {
        if let Some(t) = BasisIndex::checked(tl, tn, tmu) {
            let c = if t.l() == 0 { 2.0 * c } else { c };
            list.push((t, c));
        }
    };
    let mut gx: Expansion = Vec::with_capacity(2);
    push(&mut gx, l + 1, n, mu, -(nf + a));
    push(&mut gx, l - 1, n + 1, mu, -(nf + 1.0));
    let mut gy: Expansion = Vec::with_capacity(2);
    push(&mut gy, l + 1, n, mu.flip(), -sign * (nf + a));
    push(&mut gy, l - 1, n + 1, mu.flip(), sign * (nf + 1.0));
    let riesz_of = |g: &Expansion| -> Expansion {
        g.iter()
            .map(|(t, c)| (*t, c * riesz_multiplier(t.l(), t.n(), alpha)))
            .collect()
    };
    let rx = riesz_of(&gx);
    let ry = riesz_of(&gy);
    LemmaExpansions {
        gradient: [gx, gy],
        riesz: [rx, ry],
    }
}

/// Stiffness entry `B(P_i, P_j)`.
pub fn bilinear_entry(i: BasisIndex, j: BasisIndex, params: &ModelParams) -> f64 {
    if i.mu() != j.mu() || i.radial_degree() != j.radial_degree() {
        return 0.0;
    }
    let ei = lemma_expansions(i, params.alpha);
    let ej = lemma_expansions(j, params.alpha);
    let gamma = params.alpha / 2.0 - 1.0;
    let mut total = 0.0;
    for (c, k) in [params.k1, params.k2].into_iter().enumerate() {
        let mut part = 0.0;
        for (ti, ci) in &ei.riesz[c] {
            for (tj, cj) in &ej.gradient[c] {
                if ti == tj {
                    part += ci * cj * basis_norm_sq(*ti, gamma);
                }
            }
        }
        total += k * part;
    }
    total
}

/// Column scaling `d = Γ(n+1+α/2)/Γ(n+1) · u`.
pub fn solution_scale(n: usize, alpha: f64) -> f64 {
    ln_gamma_ratio(n as f64 + 1.0, alpha / 2.0)
        .expect("alpha > 0")
        .exp()
}

/// Right-hand-side scaling `f̃ = s_l · 2^{2-α} Γ(n+1+l)/Γ(n+1+α/2+l) · f` with
/// `s_0 = 1/2` and `s_l = 1` otherwise.
pub fn load_scale(l: usize, n: usize, alpha: f64) -> f64 {
    let base = ((2.0 - alpha) * std::f64::consts::LN_2
        - ln_gamma_ratio((n + l) as f64 + 1.0, alpha / 2.0).expect("alpha > 0"))
    .exp();
    if l == 0 {
        0.5 * base
    } else {
        base
    }
}

/// One stencil chain of the stiffness matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    /// Parity of the chain.
    #[serde(serialize_with = "ser_mu")]
    pub mu: Mu,
    /// Radial degree shared by all members.
    pub degree: usize,
    /// Position of the first member in the index set.
    pub start: usize,
    /// Members in order of decreasing `l`.
    pub indices: Vec<BasisIndex>,
    /// Diagonal entries.
    pub diag: Vec<f64>,
    /// Entries coupling member `k` and `k + 1`.
    pub off: Vec<f64>,
}

fn ser_mu<S: serde::Serializer>(mu: &Mu, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_i8(i8::from(*mu))
}

impl Chain {
    fn from_span(span: &ChainSpan, set: &IndexSet, params: &ModelParams) -> Self {
        let indices = set.indices()[span.start..span.start + span.len].to_vec();
        let diag = indices
            .iter()
            .map(|&b| bilinear_entry(b, b, params))
            .collect();
        let off = indices
            .windows(2)
            .map(|w| bilinear_entry(w[0], w[1], params))
            .collect();
        Self {
            mu: span.mu,
            degree: span.degree,
            start: span.start,
            indices,
            diag,
            off,
        }
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// True for an empty chain (never produced by assembly).
    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

/// The stiffness matrix stored as tridiagonal chains over `X_R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StiffnessChains {
    /// All chains, in index-set order.
    pub chains: Vec<Chain>,
    dim: usize,
}

impl StiffnessChains {
    /// Dimension of the underlying index set.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Computes `S x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "stiffness of size {} applied to vector of length {}",
                self.dim,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.dim];
        for c in &self.chains {
            let s = c.start;
            for k in 0..c.len() {
                y[s + k] += c.diag[k] * x[s + k];
                if k + 1 < c.len() {
                    y[s + k] += c.off[k] * x[s + k + 1];
                    y[s + k + 1] += c.off[k] * x[s + k];
                }
            }
        }
        Ok(y)
    }

    /// Dense copy, for diagnostics and small problems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for c in &self.chains {
            let s = c.start;
            for k in 0..c.len() {
                m[(s + k, s + k)] = c.diag[k];
                if k + 1 < c.len() {
                    m[(s + k, s + k + 1)] = c.off[k];
                    m[(s + k + 1, s + k)] = c.off[k];
                }
            }
        }
        m
    }
}

/// One dense mass block over the indices sharing `(l, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassBlock {
    /// Angular order.
    pub l: usize,
    /// Parity.
    pub mu: Mu,
    /// Positions of the members in the index set, by increasing `n`.
    pub positions: Vec<usize>,
    /// Row-major `k × k` block.
    pub matrix: Vec<f64>,
}

impl MassBlock {
    /// Block size.
    pub fn size(&self) -> usize {
        self.positions.len()
    }

    /// Entry `(i, j)` of the block.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.size() + j]
    }
}

/// Mass matrix `M_ij = ∫ ω^α P_i P_j` stored as dense `(l, μ)` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MassBlocks {
    /// All blocks.
    pub blocks: Vec<MassBlock>,
    dim: usize,
}

impl MassBlocks {
    /// Computes `M x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "mass of size {} applied to vector of length {}",
                self.dim,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.dim];
        for b in &self.blocks {
            let k = b.size();
            for i in 0..k {
                let mut s = 0.0;
                for j in 0..k {
                    s += b.matrix[i * k + j] * x[b.positions[j]];
                }
                y[b.positions[i]] += s;
            }
        }
        Ok(y)
    }

    /// `xᵀ M x`.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        let y = self.apply(x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| a * b).sum())
    }

    /// Dense copy, for diagnostics and small problems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let k = b.size();
            for i in 0..k {
                for j in 0..k {
                    m[(b.positions[i], b.positions[j])] = b.matrix[i * k + j];
                }
            }
        }
        m
    }
}

/// Mass entries `∫ ω^α P_{l,n_i,μ} P_{l,n_j,μ}` for `n_i, n_j ∈ 0..=n_max`, row-major.
pub fn mass_block(l: usize, n_max: usize, alpha: f64) -> Result<Vec<f64>> {
    let a = alpha / 2.0;
    let rule = gauss_jacobi(JacobiParams::new(alpha, l as f64)?, n_max + 8)?;
    let pref = angular_constant(l) * 2f64.powf(-(alpha + l as f64 + 2.0));
    let params = JacobiParams::new(a, l as f64)?;
    let k = n_max + 1;
    let mut out = vec![0.0; k * k];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = jacobi_eval_all(params, n_max, t);
        for i in 0..k {
            for j in i..k {
                out[i * k + j] += w * p[i] * p[j];
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            let v = pref * out[i * k + j];
            out[i * k + j] = v;
            out[j * k + i] = v;
        }
    }
    Ok(out)
}

/// Stiffness chains and mass blocks over one `X_R`.
#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    /// Model parameters the matrices were assembled for.
    pub params: ModelParams,
    /// The index set `X_R`.
    pub set: IndexSet,
    /// Stiffness `S`.
    pub stiffness: StiffnessChains,
    /// Mass `M`.
    pub mass: MassBlocks,
}

/// Assembles only the stiffness chains over `X_R`.
pub fn assemble_stiffness(set: &IndexSet, params: &ModelParams) -> StiffnessChains {
    StiffnessChains {
        chains: set
            .chains()
            .iter()
            .map(|s| Chain::from_span(s, set, params))
            .collect(),
        dim: set.len(),
    }
}

/// Assembles the mass blocks over `X_R`.
pub fn assemble_mass(set: &IndexSet, alpha: f64) -> Result<MassBlocks> {
    let mut groups: std::collections::BTreeMap<(Mu, usize), Vec<(usize, usize)>> =
        std::collections::BTreeMap::new();
    for (p, b) in set.indices().iter().enumerate() {
        groups.entry((b.mu(), b.l())).or_default().push((b.n(), p));
    }
    let mut blocks = Vec::with_capacity(groups.len());
    for ((mu, l), mut members) in groups {
        members.sort();
        let n_max = members.last().map(|m| m.0).unwrap_or(0);
        let full = mass_block(l, n_max, alpha)?;
        let kf = n_max + 1;
        let k = members.len();
        let mut matrix = vec![0.0; k * k];
        for (i, (ni, _)) in members.iter().enumerate() {
            for (j, (nj, _)) in members.iter().enumerate() {
                matrix[i * k + j] = full[ni * kf + nj];
            }
        }
        blocks.push(MassBlock {
            l,
            mu,
            positions: members.iter().map(|m| m.1).collect(),
            matrix,
        });
    }
    Ok(MassBlocks {
        blocks,
        dim: set.len(),
    })
}

/// Assembles stiffness and mass over `X_R`.
pub fn assemble_matrices(cap: usize, params: &ModelParams) -> Result<OperatorMatrices> {
    let set = IndexSet::new(cap);
    let stiffness = assemble_stiffness(&set, params);
    let mass = assemble_mass(&set, params.alpha)?;
    Ok(OperatorMatrices {
        params: *params,
        set,
        stiffness,
        mass,
    })
}

impl OperatorMatrices {
    /// JSON dump of the chain descriptors (diagonal and off-diagonal arrays).
    pub fn dump_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            alpha: f64,
            k1: f64,
            k2: f64,
            #[serde(rename = "R")]
            cap: usize,
            chains: &'a [Chain],
        }
        Ok(serde_json::to_string_pretty(&Dump {
            alpha: self.params.alpha,
            k1: self.params.k1,
            k2: self.params.k2,
            cap: self.set.cap(),
            chains: &self.stiffness.chains,
        })?)
    }
}

/// One scaled chain `A d = f̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledChain {
    /// Members in chain order.
    pub indices: Vec<BasisIndex>,
    /// Diagonal of `A`.
    pub diag: Vec<f64>,
    /// Super-diagonal `A[k][k+1]`.
    pub upper: Vec<f64>,
    /// Sub-diagonal `A[k+1][k]`.
    pub lower: Vec<f64>,
}

impl ScaledChain {
    /// Largest relative asymmetry `|upper - lower| / max|entry|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .diag
            .iter()
            .chain(&self.upper)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        self.upper
            .iter()
            .zip(&self.lower)
            .map(|(u, l)| (u - l).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the symmetric part of the block.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let k = self.diag.len();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            m[(i, i)] = self.diag[i];
            if i + 1 < k {
                let v = 0.5 * (self.upper[i] + self.lower[i]);
                m[(i, i + 1)] = v;
                m[(i + 1, i)] = v;
            }
        }
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    }
}

/// The scaled block system of one parity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSystem {
    /// Parity of every chain.
    pub mu: Mu,
    /// Chains in order of increasing radial degree.
    pub chains: Vec<ScaledChain>,
    /// Fractional order used for the scaling maps.
    pub alpha: f64,
}

impl ScaledSystem {
    /// Row factor mapping a load `F_i = f_i h²_i` to `f̃_i`.
    pub fn row_factor(&self, idx: BasisIndex) -> f64 {
        load_scale(idx.l(), idx.n(), self.alpha) / basis_norm_sq(idx, self.alpha / 2.0)
    }

    /// Column factor mapping `u_j` to `d_j`.
    pub fn column_factor(&self, idx: BasisIndex) -> f64 {
        solution_scale(idx.n(), self.alpha)
    }
}

/// Builds the scaled system of one parity from the stiffness chains.
pub fn scale_chains(stiffness: &StiffnessChains, mu: Mu, alpha: f64) -> ScaledSystem {
    let chains = stiffness
        .chains
        .iter()
        .filter(|c| c.mu == mu)
        .map(|c| {
            let rho: Vec<f64> = c
                .indices
                .iter()
                .map(|&b| load_scale(b.l(), b.n(), alpha) / basis_norm_sq(b, alpha / 2.0))
                .collect();
            let kappa: Vec<f64> = c
                .indices
                .iter()
                .map(|b| solution_scale(b.n(), alpha))
                .collect();
            let k = c.len();
            ScaledChain {
                indices: c.indices.clone(),
                diag: (0..k).map(|i| rho[i] * c.diag[i] / kappa[i]).collect(),
                upper: (0..k.saturating_sub(1))
                    .map(|i| rho[i] * c.off[i] / kappa[i + 1])
                    .collect(),
                lower: (0..k.saturating_sub(1))
                    .map(|i| rho[i + 1] * c.off[i] / kappa[i])
                    .collect(),
            }
        })
        .collect();
    ScaledSystem { mu, chains, alpha }
}

/// Assembles the scaled tridiagonal system of parity `mu` over `X_R`.
pub fn assemble_scaled_system(cap: usize, params: &ModelParams, mu: Mu) -> ScaledSystem {
    let set = IndexSet::new(cap);
    scale_chains(&assemble_stiffness(&set, params), mu, params.alpha)
}

/// Eigenvalue enclosure `[2 min(k1,k2), 4 max(k1,k2)]` of every scaled block.
pub fn gershgorin_bounds(k1: f64, k2: f64) -> (f64, f64) {
    (2.0 * k1.min(k2), 4.0 * k1.max(k2))
}

/// Continuity, coercivity and weight-comparison constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    /// `C_cts = 5 · 2^α · max(k1, k2)`.
    pub c_cts: f64,
    /// `C_coe = 2^{α-4} · min(k1, k2)`.
    pub c_coe: f64,
    /// `C_ω = (1 + 2α²)^s`.
    pub c_omega: f64,
}

/// Evaluates the theory constants.
pub fn theory_constants(alpha: f64, k1: f64, k2: f64, s: f64) -> TheoryConstants {
    TheoryConstants {
        c_cts: k1.max(k2) * 2f64.powf(alpha) * 5.0,
        c_coe: 2f64.powf(alpha - 4.0) * k1.min(k2),
        c_omega: (1.0 + 2.0 * alpha * alpha).powf(s),
    }
}
