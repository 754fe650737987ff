//! The orthogonal basis `P^{(γ)}_{l,n,μ}` of `L²_γ` on the unit disk.
//!
//! A basis function is `V_{l,μ}(x) · P_n^{(γ,l)}(2r² - 1)` with the solid
//! harmonics `V_{0,1} = 1/2`, `V_{l,1} = r^l cos(lφ)` and
//! `V_{l,-1} = r^l sin(lφ)`. The module provides index bookkeeping, pointwise
//! evaluation, the closed-form norms and their shift identities, the
//! approximation index set `X_R`, coefficient-space Sobolev norms and field
//! reconstruction on polar grids.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::{gauss_jacobi, jacobi_eval_all, ln_gamma_ratio, JacobiParams};

/// Angular parity of a basis function: `Plus` is the cosine family (μ = +1),
/// `Minus` the sine family (μ = -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Mu {
    /// μ = +1, cosine harmonics.
    Plus,
    /// μ = -1, sine harmonics.
    Minus,
}

impl Mu {
    /// Both parities, cosine first.
    pub const BOTH: [Mu; 2] = [Mu::Plus, Mu::Minus];

    /// `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Mu::Plus => 1.0,
            Mu::Minus => -1.0,
        }
    }

    /// The other parity.
    pub fn flip(self) -> Mu {
        match self {
            Mu::Plus => Mu::Minus,
            Mu::Minus => Mu::Plus,
        }
    }
}

impl From<Mu> for i8 {
    fn from(m: Mu) -> i8 {
        match m {
            Mu::Plus => 1,
            Mu::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Mu {
    type Error = Error;
    fn try_from(v: i8) -> Result<Mu> {
        match v {
            1 => Ok(Mu::Plus),
            -1 => Ok(Mu::Minus),
            _ => invalid(format!("mu must be +1 or -1, got {v}")),
        }
    }
}

/// Identifies one basis function `P_{l,n,μ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawIndex", into = "RawIndex")]
pub struct BasisIndex {
    l: usize,
    n: usize,
    mu: Mu,
}

#[derive(Serialize, Deserialize)]
struct RawIndex {
    l: usize,
    n: usize,
    mu: Mu,
}

impl TryFrom<RawIndex> for BasisIndex {
    type Error = Error;
    fn try_from(r: RawIndex) -> Result<Self> {
        BasisIndex::new(r.l, r.n, r.mu)
    }
}

impl From<BasisIndex> for RawIndex {
    fn from(b: BasisIndex) -> Self {
        RawIndex {
            l: b.l,
            n: b.n,
            mu: b.mu,
        }
    }
}

impl BasisIndex {
    /// Builds an index, rejecting the excluded sine mode `(0, n, -1)`.
    pub fn new(l: usize, n: usize, mu: Mu) -> Result<Self> {
        if l == 0 && mu == Mu::Minus {
            return invalid(format!("(0, {n}, -1) is not a basis function"));
        }
        Ok(Self { l, n, mu })
    }

    /// Builds an index from signed components, returning `None` when `l < 0`,
    /// `n < 0` or the index is the excluded sine mode. Such functions are
    /// identically zero under the trivial extension convention.
    pub fn checked(l: i64, n: i64, mu: Mu) -> Option<Self> {
        if l < 0 || n < 0 || (l == 0 && mu == Mu::Minus) {
            None
        } else {
            Some(Self {
                l: l as usize,
                n: n as usize,
                mu,
            })
        }
    }

    /// Angular order `l`.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Radial Jacobi degree `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Parity `μ`.
    pub fn mu(&self) -> Mu {
        self.mu
    }

    /// Polynomial degree `l + 2n` of the basis function.
    pub fn radial_degree(&self) -> usize {
        self.l + 2 * self.n
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {:+})", self.l, self.n, i8::from(self.mu))
    }
}

/// Checks a weight exponent `γ > -1`.
pub fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > -1.0 {
        Ok(())
    } else {
        invalid(format!("weight exponent must exceed -1, got {gamma}"))
    }
}

/// Checks a fractional order `α ∈ (1, 2]`.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        invalid(format!("alpha must lie in (1, 2], got {alpha}"))
    }
}

/// Angular normalisation `C_{l,μ}`: `π/2` for `l = 0`, `π` otherwise.
pub fn angular_constant(l: usize) -> f64 {
    if l == 0 {
        PI / 2.0
    } else {
        PI
    }
}

/// Solid-harmonic factor `V_{l,μ}(r, φ)`.
pub fn solid_harmonic(l: usize, mu: Mu, r: f64, phi: f64) -> f64 {
    if l == 0 {
        return 0.5;
    }
    let lf = l as f64;
    let ang = match mu {
        Mu::Plus => (lf * phi).cos(),
        Mu::Minus => (lf * phi).sin(),
    };
    r.powi(l as i32) * ang
}

/// Evaluates `P^{(γ)}_{l,n,μ}` at polar coordinates `(r, φ)`.
pub fn eval_basis(idx: BasisIndex, gamma: f64, r: f64, phi: f64) -> f64 {
    let params = JacobiParams::new(gamma, idx.l as f64).expect("gamma validated by caller");
    let jac = crate::specfun::jacobi_eval(params, idx.n, 2.0 * r * r - 1.0);
    solid_harmonic(idx.l, idx.mu, r, phi) * jac
}

/// `h²_{l,n}(γ) = ‖P^{(γ)}_{l,n,μ}‖²_{L²_γ}`.
pub fn basis_norm_sq(idx: BasisIndex, gamma: f64) -> f64 {
    norm_sq_ln(idx.l, idx.n, gamma).exp()
}

fn norm_sq_ln(l: usize, n: usize, gamma: f64) -> f64 {
    let (lf, nf) = (l as f64, n as f64);
    let r1 = ln_gamma_ratio(nf + 1.0, gamma).expect("gamma > -1");
    let r2 = ln_gamma_ratio(nf + lf + 1.0, gamma).expect("gamma > -1");
    (0.5 * angular_constant(l)).ln() - (2.0 * nf + gamma + lf + 1.0).ln() + r1 - r2
}

/// Weight-shift identity: `‖P^{(γ+k)}‖²_{γ+k} / ‖P^{(γ)}‖²_γ` as a finite product.
pub fn norm_shift_weight(idx: BasisIndex, gamma: f64, k: usize) -> f64 {
    let (l, n) = (idx.l as f64, idx.n as f64);
    let mut ratio = (2.0 * n + gamma + l + 1.0) / (2.0 * n + gamma + l + 1.0 + k as f64);
    for s in 1..=k {
        let s = s as f64;
        ratio *= (n + gamma + s) / (n + gamma + l + s);
    }
    ratio
}

/// Index-raising identity: `‖P_{l+j,n+m,μ}‖² / ‖P_{l,n,μ}‖²` at fixed `γ`.
pub fn norm_shift_add(idx: BasisIndex, gamma: f64, j: usize, m: usize) -> Result<f64> {
    BasisIndex::new(idx.l + j, idx.n + m, idx.mu)?;
    let (l, n) = (idx.l as f64, idx.n as f64);
    let mut ratio = angular_constant(idx.l + j) / angular_constant(idx.l)
        * (2.0 * n + gamma + l + 1.0)
        / (2.0 * n + 2.0 * m as f64 + gamma + l + j as f64 + 1.0);
    for s in 1..=m {
        let s = s as f64;
        ratio *= (n + gamma + s) / (n + s);
    }
    for s in 1..=(m + j) {
        let s = s as f64;
        ratio *= (n + l + s) / (n + gamma + l + s);
    }
    Ok(ratio)
}

/// Index-lowering identity: `‖P_{l-j,n+m,μ}‖² / ‖P_{l,n,μ}‖²` for `m ≥ j`.
pub fn norm_shift_sub(idx: BasisIndex, gamma: f64, j: usize, m: usize) -> Result<f64> {
    if m < j {
        return invalid(format!(
            "lowering identity needs m >= j, got m = {m}, j = {j}"
        ));
    }
    if j > idx.l {
        return invalid(format!("cannot lower l = {} by {j}", idx.l));
    }
    BasisIndex::new(idx.l - j, idx.n + m, idx.mu)?;
    let (l, n) = (idx.l as f64, idx.n as f64);
    let mut ratio = angular_constant(idx.l - j) / angular_constant(idx.l)
        * (2.0 * n + gamma + l + 1.0)
        / (2.0 * n + 2.0 * m as f64 + gamma + l - j as f64 + 1.0);
    for s in 1..=m {
        let s = s as f64;
        ratio *= (n + gamma + s) / (n + s);
    }
    for s in 1..=(m - j) {
        let s = s as f64;
        ratio *= (n + l + s) / (n + gamma + l + s);
    }
    Ok(ratio)
}

/// Largest radial degree of parity `mu` admitted in `X_R`.
pub fn max_degree(cap: usize, mu: Mu) -> usize {
    let base = if cap % 2 == 1 { cap } else { cap + 1 };
    match mu {
        Mu::Plus => base,
        Mu::Minus => base + 1,
    }
}

/// True when `idx` belongs to `X_R`.
pub fn in_xr(idx: BasisIndex, cap: usize) -> bool {
    idx.radial_degree() <= max_degree(cap, idx.mu)
}

/// All indices of one radial degree and parity, ordered by `l` descending.
pub fn degree_shell(degree: usize, mu: Mu) -> Vec<BasisIndex> {
    (0..=degree / 2)
        .filter_map(|n| BasisIndex::checked((degree - 2 * n) as i64, n as i64, mu))
        .collect()
}

/// Enumerates `X_R` in chain order: parity (`+1` first), radial degree
/// ascending, `l` descending within a degree.
pub fn enumerate_xr(cap: usize) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for mu in Mu::BOTH {
        for d in 0..=max_degree(cap, mu) {
            out.extend(degree_shell(d, mu));
        }
    }
    out
}

/// A contiguous run of `X_R` indices sharing parity and radial degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpan {
    /// Parity of every member.
    pub mu: Mu,
    /// Common radial degree.
    pub degree: usize,
    /// Position of the first member in the index set.
    pub start: usize,
    /// Number of members.
    pub len: usize,
}

/// The ordered index set `X_R` with position lookup and chain spans.
#[derive(Debug, Clone)]
pub struct IndexSet {
    cap: usize,
    indices: Vec<BasisIndex>,
    positions: HashMap<BasisIndex, usize>,
    chains: Vec<ChainSpan>,
}

impl IndexSet {
    /// Builds `X_R` for the cap `R`.
    pub fn new(cap: usize) -> Self {
        let indices = enumerate_xr(cap);
        let positions = indices.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut chains: Vec<ChainSpan> = Vec::new();
        for (i, b) in indices.iter().enumerate() {
            match chains.last_mut() {
                Some(c) if c.mu == b.mu && c.degree == b.radial_degree() => c.len += 1,
                _ => chains.push(ChainSpan {
                    mu: b.mu,
                    degree: b.radial_degree(),
                    start: i,
                    len: 1,
                }),
            }
        }
        Self {
            cap,
            indices,
            positions,
            chains,
        }
    }

    /// The cap `R`.
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True for an empty set (never the case for a valid cap).
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices in chain order.
    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    /// Position of `idx`, if it belongs to the set.
    pub fn position(&self, idx: &BasisIndex) -> Option<usize> {
        self.positions.get(idx).copied()
    }

    /// Stencil chains as contiguous spans.
    pub fn chains(&self) -> &[ChainSpan] {
        &self.chains
    }
}

/// Coefficient expansion `Σ a_{l,n,μ} P^{(γ)}_{l,n,μ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldDoc", into = "FieldDoc")]
pub struct SpectralField {
    alpha: f64,
    gamma: f64,
    cap: Option<usize>,
    coeffs: BTreeMap<BasisIndex, f64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffDoc {
    l: usize,
    n: usize,
    mu: Mu,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct FieldDoc {
    alpha: f64,
    gamma: f64,
    #[serde(rename = "R")]
    cap: Option<usize>,
    coeffs: Vec<CoeffDoc>,
}

impl TryFrom<FieldDoc> for SpectralField {
    type Error = Error;
    fn try_from(doc: FieldDoc) -> Result<Self> {
        let mut f = SpectralField::new(doc.alpha, doc.gamma, doc.cap)?;
        for c in doc.coeffs {
            f.set(BasisIndex::new(c.l, c.n, c.mu)?, c.a)?;
        }
        Ok(f)
    }
}

impl From<SpectralField> for FieldDoc {
    fn from(f: SpectralField) -> Self {
        FieldDoc {
            alpha: f.alpha,
            gamma: f.gamma,
            cap: f.cap,
            coeffs: f
                .coeffs
                .iter()
                .map(|(b, &a)| CoeffDoc {
                    l: b.l,
                    n: b.n,
                    mu: b.mu,
                    a,
                })
                .collect(),
        }
    }
}

impl SpectralField {
    /// An empty (zero) field. `cap = None` means no degree cap.
    pub fn new(alpha: f64, gamma: f64, cap: Option<usize>) -> Result<Self> {
        check_alpha(alpha)?;
        check_gamma(gamma)?;
        Ok(Self {
            alpha,
            gamma,
            cap,
            coeffs: BTreeMap::new(),
        })
    }

    /// Builds a field on `X_R` from a coefficient vector in `set` order.
    pub fn from_vector(set: &IndexSet, alpha: f64, gamma: f64, values: &[f64]) -> Result<Self> {
        if values.len() != set.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for an index set of size {}",
                values.len(),
                set.len()
            )));
        }
        let mut f = Self::new(alpha, gamma, Some(set.cap()))?;
        for (b, &v) in set.indices().iter().zip(values) {
            if v != 0.0 {
                f.coeffs.insert(*b, v);
            }
        }
        Ok(f)
    }

    /// Coefficients in `set` order; entries outside the field are zero.
    pub fn to_vector(&self, set: &IndexSet) -> Vec<f64> {
        set.indices().iter().map(|b| self.get(b)).collect()
    }

    /// Fractional order the field belongs to.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Weight exponent of the basis.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Radial-degree cap `R`, if any.
    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// Coefficient of `idx` (zero when absent).
    pub fn get(&self, idx: &BasisIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    /// Sets a coefficient, rejecting indices outside the cap.
    pub fn set(&mut self, idx: BasisIndex, value: f64) -> Result<()> {
        if let Some(c) = self.cap {
            if !in_xr(idx, c) {
                return invalid(format!("{idx} lies outside X_{c}"));
            }
        }
        if value == 0.0 {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, value);
        }
        Ok(())
    }

    /// Iterates over stored (non-zero) coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (&BasisIndex, &f64)> {
        self.coeffs.iter()
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when every coefficient is zero.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Orthogonal projection onto `X_R` (coefficient truncation).
    pub fn truncate(&self, cap: usize) -> SpectralField {
        SpectralField {
            alpha: self.alpha,
            gamma: self.gamma,
            cap: Some(cap),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(b, _)| in_xr(**b, cap))
                .map(|(b, v)| (*b, *v))
                .collect(),
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= s;
        }
        out.coeffs.retain(|_, v| *v != 0.0);
        out
    }

    /// Coefficientwise difference `self - other`; the result carries the larger cap.
    pub fn difference(&self, other: &SpectralField) -> Result<SpectralField> {
        if self.gamma != other.gamma {
            return invalid(format!(
                "weight exponents differ: {} vs {}",
                self.gamma, other.gamma
            ));
        }
        let cap = match (self.cap, other.cap) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        let mut coeffs = self.coeffs.clone();
        for (b, v) in &other.coeffs {
            *coeffs.entry(*b).or_insert(0.0) -= v;
        }
        coeffs.retain(|_, v| *v != 0.0);
        Ok(SpectralField {
            alpha: self.alpha,
            gamma: self.gamma,
            cap,
            coeffs,
        })
    }

    /// Largest radial degree carrying a stored coefficient.
    pub fn max_stored_degree(&self) -> usize {
        self.coeffs
            .keys()
            .map(|b| b.radial_degree())
            .max()
            .unwrap_or(0)
    }

    /// Serialises the field as JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a field from JSON.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Coefficient-space norm `(Σ (n+1)^s (n+l+1)^s a² h²)^{1/2}` at the field's weight.
///
/// Negative `s` uses the same formula.
pub fn hs_norm(field: &SpectralField, s: f64) -> f64 {
    field
        .iter()
        .map(|(b, &a)| {
            let w = ((b.n as f64 + 1.0) * (b.n as f64 + b.l as f64 + 1.0)).powf(s);
            w * a * a * basis_norm_sq(*b, field.gamma)
        })
        .sum::<f64>()
        .sqrt()
}

/// Field values on a tensor grid of radii and angles.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    /// Radii, strictly increasing in `[0, 1]`.
    pub radii: Vec<f64>,
    /// Angles, strictly increasing in `[0, 2π)`.
    pub angles: Vec<f64>,
    /// `values[i][j]` at `(radii[i], angles[j])`.
    pub values: Vec<Vec<f64>>,
}

impl PolarGrid {
    /// `nr` uniform radii including 0 and 1, `nphi` uniform angles starting at 0.
    pub fn uniform_axes(nr: usize, nphi: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if nr < 2 || nphi < 1 {
            return invalid(format!("grid needs nr >= 2 and nphi >= 1, got {nr}x{nphi}"));
        }
        let radii = (0..nr).map(|i| i as f64 / (nr - 1) as f64).collect();
        let angles = (0..nphi)
            .map(|j| 2.0 * PI * j as f64 / nphi as f64)
            .collect();
        Ok((radii, angles))
    }

    /// Writes the `r,phi,x,y,value` CSV representation with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,phi,x,y,value")?;
        for (i, &r) in self.radii.iter().enumerate() {
            for (j, &phi) in self.angles.iter().enumerate() {
                let (x, y) = (r * phi.cos(), r * phi.sin());
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_num(r),
                    fmt_num(phi),
                    fmt_num(x),
                    fmt_num(y),
                    fmt_num(self.values[i][j])
                )?;
            }
        }
        Ok(())
    }

    /// The CSV representation as a string.
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Formats a real with 17 significant digits, mapping `-0` to `0`.
pub fn fmt_num(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// Radial factors `r^l P_n^{(γ,l)}(2r²-1)` for `n = 0..=n_max`.
pub fn radial_factors(l: usize, n_max: usize, gamma: f64, r: f64) -> Vec<f64> {
    let params = JacobiParams::new(gamma, l as f64).expect("gamma validated by caller");
    let rl = r.powi(l as i32);
    let mut v = jacobi_eval_all(params, n_max, 2.0 * r * r - 1.0);
    for x in v.iter_mut() {
        *x *= rl;
    }
    v
}

/// Evaluates a field at `(r, φ)`; `scaled = true` multiplies by `ω^{α/2}`.
pub fn eval_field(field: &SpectralField, scaled: bool, r: f64, phi: f64) -> f64 {
    let mut by_l: BTreeMap<usize, usize> = BTreeMap::new();
    for b in field.coeffs.keys() {
        let e = by_l.entry(b.l).or_insert(0);
        *e = (*e).max(b.n);
    }
    let mut total = 0.0;
    for (&l, &n_max) in &by_l {
        let rad = radial_factors(l, n_max, field.gamma, r);
        let (c, s) = if l == 0 {
            (0.5, 0.0)
        } else {
            ((l as f64 * phi).cos(), (l as f64 * phi).sin())
        };
        for (b, &a) in field.coeffs.range(
            BasisIndex {
                l,
                n: 0,
                mu: Mu::Plus,
            }..=BasisIndex {
                l,
                n: usize::MAX,
                mu: Mu::Minus,
            },
        ) {
            let ang = match b.mu {
                Mu::Plus => c,
                Mu::Minus => s,
            };
            total += a * rad[b.n] * ang;
        }
    }
    if scaled {
        total * (1.0 - r * r).max(0.0).powf(field.alpha / 2.0)
    } else {
        total
    }
}

/// Reconstructs a field on a polar grid; `scaled = true` returns `ω^{α/2} u`.
pub fn reconstruct(
    field: &SpectralField,
    scaled: bool,
    radii: &[f64],
    angles: &[f64],
) -> Result<PolarGrid> {
    if radii.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return invalid("radii must lie in [0, 1]");
    }
    if scaled && (field.gamma - field.alpha / 2.0).abs() > 1e-14 {
        return invalid("scaled reconstruction needs a field at gamma = alpha/2");
    }
    let mut by_l: BTreeMap<usize, usize> = BTreeMap::new();
    for b in field.coeffs.keys() {
        let e = by_l.entry(b.l).or_insert(0);
        *e = (*e).max(b.n);
    }
    let mut values = vec![vec![0.0; angles.len()]; radii.len()];
    for (&l, &n_max) in &by_l {
        let trig: Vec<(f64, f64)> = angles
            .iter()
            .map(|&p| {
                if l == 0 {
                    (0.5, 0.0)
                } else {
                    ((l as f64 * p).cos(), (l as f64 * p).sin())
                }
            })
            .collect();
        let members: Vec<(BasisIndex, f64)> = field
            .coeffs
            .iter()
            .filter(|(b, _)| b.l == l)
            .map(|(b, a)| (*b, *a))
            .collect();
        for (i, &r) in radii.iter().enumerate() {
            let rad = radial_factors(l, n_max, field.gamma, r);
            let (mut cpart, mut spart) = (0.0, 0.0);
            for (b, a) in &members {
                match b.mu {
                    Mu::Plus => cpart += a * rad[b.n],
                    Mu::Minus => spart += a * rad[b.n],
                }
            }
            for (j, &(c, s)) in trig.iter().enumerate() {
                values[i][j] += cpart * c + spart * s;
            }
        }
    }
    if scaled {
        for (i, &r) in radii.iter().enumerate() {
            let w = (1.0 - r * r).max(0.0).powf(field.alpha / 2.0);
            for v in values[i].iter_mut() {
                *v *= w;
            }
        }
    }
    Ok(PolarGrid {
        radii: radii.to_vec(),
        angles: angles.to_vec(),
        values,
    })
}

/// Tensor quadrature for `∫_Ω ω^γ F dΩ`: Gauss–Jacobi in `t = 2r² - 1` times
/// the trapezoidal rule in `φ`.
///
/// Exact when `F` restricted to each circle is a trigonometric polynomial of
/// degree below `n_angles` and its radial dependence is a polynomial in `t` of
/// degree at most `2 q_radial - 1`.
#[derive(Debug, Clone)]
pub struct DiskQuadrature {
    /// `(r, φ, weight)` triples.
    pub points: Vec<(f64, f64, f64)>,
}

impl DiskQuadrature {
    /// Builds the rule for the weight `ω^γ`.
    pub fn new(gamma: f64, q_radial: usize, n_angles: usize) -> Result<Self> {
        check_gamma(gamma)?;
        if n_angles == 0 {
            return invalid("angular rule needs at least one point");
        }
        let rule = gauss_jacobi(JacobiParams::new(gamma, 0.0)?, q_radial)?;
        let scale = 2f64.powf(-gamma) / 4.0 * 2.0 * PI / n_angles as f64;
        let mut points = Vec::with_capacity(rule.len() * n_angles);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let r = (0.5 * (t + 1.0)).sqrt();
            for j in 0..n_angles {
                let phi = 2.0 * PI * j as f64 / n_angles as f64;
                points.push((r, phi, w * scale));
            }
        }
        Ok(Self { points })
    }

    /// Applies the rule to `f(r, φ)`.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points.iter().map(|&(r, p, w)| w * f(r, p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(l: usize, n: usize, mu: Mu) -> BasisIndex {
        BasisIndex::new(l, n, mu).unwrap()
    }

    #[test]
    fn excluded_sine_mode() {
        assert!(BasisIndex::new(0, 3, Mu::Minus).is_err());
        assert!(BasisIndex::checked(-1, 0, Mu::Plus).is_none());
        assert!(BasisIndex::checked(1, -1, Mu::Plus).is_none());
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_basis(idx(0, 0, Mu::Plus), 0.85, 0.3, 1.0), 0.5);
        let (r, p) = (0.7_f64, 0.4_f64);
        assert!((eval_basis(idx(1, 0, Mu::Minus), 0.2, r, p) - r * p.sin()).abs() < 1e-15);
        let jac =
            crate::specfun::jacobi_eval(JacobiParams::new(0.85, 2.0).unwrap(), 3, 2.0 * 0.36 - 1.0);
        let expect = 0.36 * (2.2f64).cos() * jac;
        assert!((eval_basis(idx(2, 3, Mu::Plus), 0.85, 0.6, 1.1) - expect).abs() < 1e-14);
    }

    #[test]
    fn norm_examples() {
        let v = basis_norm_sq(idx(0, 0, Mu::Plus), 0.85);
        assert!((v - (PI / 4.0) / 1.85).abs() < 1e-14);
        assert!((v - 0.424540).abs() < 1e-6);
        assert_eq!(
            basis_norm_sq(idx(3, 2, Mu::Plus), 0.85),
            basis_norm_sq(idx(3, 2, Mu::Minus), 0.85)
        );
    }

    #[test]
    fn shift_examples() {
        let b = idx(0, 0, Mu::Plus);
        assert_eq!(norm_shift_weight(b, 0.85, 0), 1.0);
        assert!((norm_shift_weight(b, 0.85, 1) - 1.85 / 2.85).abs() < 1e-15);
        assert!((norm_shift_weight(b, 0.85, 1) - 0.649123).abs() < 1e-6);
        assert!(norm_shift_sub(idx(1, 0, Mu::Minus), 0.85, 1, 1).is_err());
        assert!(norm_shift_sub(idx(2, 0, Mu::Plus), 0.85, 2, 1).is_err());
        let sub = norm_shift_sub(idx(2, 0, Mu::Plus), 0.85, 2, 2).unwrap();
        let direct =
            basis_norm_sq(idx(0, 2, Mu::Plus), 0.85) / basis_norm_sq(idx(2, 0, Mu::Plus), 0.85);
        assert!((sub / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xr_small_caps() {
        let r1 = enumerate_xr(1);
        assert_eq!(
            r1,
            vec![
                idx(0, 0, Mu::Plus),
                idx(1, 0, Mu::Plus),
                idx(1, 0, Mu::Minus),
                idx(2, 0, Mu::Minus)
            ]
        );
        let plus3 = enumerate_xr(3)
            .into_iter()
            .filter(|b| b.mu == Mu::Plus)
            .count();
        assert_eq!(plus3, 6);
    }

    #[test]
    fn chain_order_within_degree() {
        let set = IndexSet::new(6);
        for c in set.chains() {
            let members = &set.indices()[c.start..c.start + c.len];
            for w in members.windows(2) {
                assert_eq!(w[0].l, w[1].l + 2);
                assert_eq!(w[0].n + 1, w[1].n);
            }
        }
    }

    #[test]
    fn field_json_roundtrip() {
        let mut f = SpectralField::new(1.7, 0.85, Some(4)).unwrap();
        f.set(idx(1, 0, Mu::Minus), 1.0).unwrap();
        f.set(idx(2, 1, Mu::Plus), -0.25).unwrap();
        assert!(f.set(idx(9, 0, Mu::Plus), 1.0).is_err());
        let s = f.to_json().unwrap();
        assert!(s.contains("\"R\": 4"));
        assert_eq!(SpectralField::from_json(&s).unwrap(), f);
        let bad = s.replace("\"mu\": -1", "\"mu\": 0");
        assert!(SpectralField::from_json(&bad).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let mut f = SpectralField::new(1.7, 0.85, Some(3)).unwrap();
        f.set(idx(1, 0, Mu::Minus), 1.0).unwrap();
        let g = reconstruct(&f, false, &[0.5], &[PI / 2.0]).unwrap();
        assert!((g.values[0][0] - 0.5).abs() < 1e-15);
        let g = reconstruct(&f, true, &[0.0, 1.0], &[0.3, 1.0]).unwrap();
        assert!(g.values[0].iter().all(|&v| v == 0.0));
        assert!(g.values[1].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hs_norm_single_mode() {
        let mut f = SpectralField::new(1.7, 0.85, None).unwrap();
        let b = idx(3, 2, Mu::Plus);
        f.set(b, -2.0).unwrap();
        let expect = 2.0 * (3.0f64 * 6.0).powf(1.25 / 2.0) * basis_norm_sq(b, 0.85).sqrt();
        assert!((hs_norm(&f, 1.25) - expect).abs() < 1e-13 * expect);
        assert_eq!(
            hs_norm(&SpectralField::new(1.7, 0.85, None).unwrap(), 2.0),
            0.0
        );
    }
}
