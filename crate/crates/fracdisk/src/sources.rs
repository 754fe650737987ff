//! Coefficient expansions of the model source terms.
//!
//! Coefficients are taken at weight `γ = α/2`: the coefficient of `P_idx` is
//! `(f, P_idx)_{α/2} / h²_idx`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::disk_basis::{
    basis_norm_sq, check_alpha, enumerate_xr, eval_basis, BasisIndex, DiskQuadrature, Mu,
    SpectralField,
};
use crate::error::{invalid, Error, Result};
use crate::operator::OperatorMatrices;
use crate::specfun::{integrate_adaptive, jacobi_eval, ln_gamma, ln_gamma_signed, JacobiParams};

/// Convention for the `l = 0` cusp coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuspConvention {
    /// The true `L²_{α/2}` projection, which carries the `V_{0,1} = 1/2` factor.
    #[default]
    Exact,
    /// The angular factor evaluated without the `1/2` at `l = 0`, which
    /// doubles every `l = 0` coefficient.
    LemmaLiteral,
}

/// Source descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    /// Radial bubble `A exp(-ρ² / (ρ² - r²))` for `r < ρ`, zero elsewhere.
    Bubble {
        /// Amplitude `A`.
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        /// Support radius `ρ`.
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// `|x1|³ + x2` with analytic coefficients.
    Cusp {
        /// Treatment of the `l = 0` coefficients.
        #[serde(default)]
        convention: CuspConvention,
    },
    /// Spatial profile `|x1|³ + x2` of the manufactured time-dependent solution.
    Manufactured,
}

fn default_amplitude() -> f64 {
    4.0
}

fn default_radius() -> f64 {
    0.2
}

impl SourceSpec {
    /// The bubble with amplitude 4 and radius 0.2.
    pub fn bubble() -> Self {
        SourceSpec::Bubble {
            amplitude: default_amplitude(),
            radius: default_radius(),
        }
    }

    /// The cusp source with exact coefficients.
    pub fn cusp() -> Self {
        SourceSpec::Cusp {
            convention: CuspConvention::Exact,
        }
    }

    /// Short identifier used in file names and hashes.
    pub fn id(&self) -> &'static str {
        match self {
            SourceSpec::Bubble { .. } => "bubble",
            SourceSpec::Cusp { .. } => "cusp",
            SourceSpec::Manufactured => "manufactured",
        }
    }

    /// Parses `bubble`, `cusp` or `manufactured`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "bubble" => Ok(Self::bubble()),
            "cusp" => Ok(Self::cusp()),
            "manufactured" => Ok(SourceSpec::Manufactured),
            other => invalid(format!(
                "unknown source '{other}' (expected bubble, cusp or manufactured)"
            )),
        }
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if let SourceSpec::Bubble { amplitude, radius } = self {
            if !amplitude.is_finite() {
                return invalid("bubble amplitude must be finite");
            }
            if !(*radius > 0.0 && *radius < 1.0) {
                return invalid(format!("bubble radius must lie in (0, 1), got {radius}"));
            }
        }
        Ok(())
    }

    /// Pointwise value at `(x1, x2)`.
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            SourceSpec::Bubble { amplitude, radius } => {
                bubble_value(*amplitude, *radius, (x1 * x1 + x2 * x2).sqrt())
            }
            SourceSpec::Cusp { .. } | SourceSpec::Manufactured => x1.abs().powi(3) + x2,
        }
    }
}

/// Bubble profile as a function of `r`.
pub fn bubble_value(amplitude: f64, radius: f64, r: f64) -> f64 {
    let d = radius * radius - r * r;
    if d <= 0.0 {
        0.0
    } else {
        amplitude * (-radius * radius / d).exp()
    }
}

/// Angular integral `∫ |cos φ|³ cos(lφ) dφ = 24/((l+3)(l+1)(l-1)(l-3)) sin((l-3)π/2)`
/// for even `l`, zero for odd `l`.
pub fn cusp_angular_integral(l: usize) -> f64 {
    if l % 2 == 1 {
        return 0.0;
    }
    let lf = l as f64;
    let sign = if (l / 2) % 2 == 0 { 1.0 } else { -1.0 };
    24.0 / ((lf + 3.0) * (lf + 1.0) * (lf - 1.0) * (lf - 3.0)) * sign
}

/// Radial integral `∫_0^1 r^{3+l} (1-r²)^{α/2} P_n^{(α/2,l)}(2r²-1) r dr`.
///
/// Three closed forms apply: `2n + l <= 3`, `2n + l > 3` with `l ∉ {1, 3}`,
/// and zero for `l ∈ {1, 3}` beyond the first range.
pub fn cusp_radial_integral(l: usize, n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let a = alpha / 2.0;
    let (lf, nf) = (l as f64, n as f64);
    let common = ln_gamma(nf + a + 1.0) - ln_gamma(nf + 1.0) + ln_gamma((lf + 3.0) / 2.0 + 1.0)
        - ln_gamma(nf + a + (lf + 3.0) / 2.0 + 2.0);
    if 2 * n + l <= 3 {
        let h = (3.0 - lf) / 2.0;
        let v = common + ln_gamma(h + 1.0) - ln_gamma(h - nf + 1.0);
        return Ok(0.5 * v.exp());
    }
    if l == 1 || l == 3 {
        return Ok(0.0);
    }
    let half = (lf - 3.0) / 2.0;
    let (lg_den, s_den) = ln_gamma_signed(half)?;
    let (lg_num, s_num) = ln_gamma_signed(nf + half)?;
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(0.5 * parity * s_den * s_num * (common + lg_num - lg_den).exp())
}

/// Coefficient of `P^{(α/2)}_{l,n,+1}` in `|x1|³` for even `l` (exact convention).
pub fn cusp_coefficient(l: usize, n: usize, alpha: f64) -> Result<f64> {
    cusp_coefficient_with(l, n, alpha, CuspConvention::Exact)
}

/// Coefficient of `P^{(α/2)}_{l,n,+1}` in `|x1|³` under the given convention.
pub fn cusp_coefficient_with(
    l: usize,
    n: usize,
    alpha: f64,
    convention: CuspConvention,
) -> Result<f64> {
    if l % 2 == 1 {
        return invalid(format!("cusp coefficients are defined for even l, got {l}"));
    }
    let mut j = cusp_angular_integral(l);
    if l == 0 && convention == CuspConvention::Exact {
        j *= 0.5;
    }
    let idx = BasisIndex::new(l, n, Mu::Plus)?;
    Ok(j * cusp_radial_integral(l, n, alpha)? / basis_norm_sq(idx, alpha / 2.0))
}

/// Coefficients of `|x1|³ + x2` on every index of radial degree `<= max_degree`.
pub fn cusp_field(
    alpha: f64,
    max_degree: usize,
    convention: CuspConvention,
) -> Result<SpectralField> {
    let mut f = SpectralField::new(alpha, alpha / 2.0, None)?;
    for d in (0..=max_degree).step_by(2) {
        for n in 0..=d / 2 {
            let l = d - 2 * n;
            f.set(
                BasisIndex::new(l, n, Mu::Plus)?,
                cusp_coefficient_with(l, n, alpha, convention)?,
            )?;
        }
    }
    if max_degree >= 1 {
        f.set(BasisIndex::new(1, 0, Mu::Minus)?, 1.0)?;
    }
    Ok(f)
}

fn bubble_coefficient(amplitude: f64, radius: f64, n: usize, alpha: f64) -> Result<f64> {
    let a = alpha / 2.0;
    let params = JacobiParams::new(a, 0.0)?;
    let integrand = |r: f64| {
        let v = bubble_value(amplitude, radius, r);
        if v == 0.0 {
            return 0.0;
        }
        (1.0 - r * r).powf(a) * v * 0.5 * jacobi_eval(params, n, 2.0 * r * r - 1.0) * r
    };
    let radial = integrate_adaptive(integrand, 0.0, radius, 1e-13)?;
    let idx = BasisIndex::new(0, n, Mu::Plus)?;
    Ok(2.0 * PI * radial / basis_norm_sq(idx, a))
}

/// Projects a pointwise function onto `X_R` by tensor quadrature at weight `α/2`.
pub fn project_function(
    f: impl Fn(f64, f64) -> f64,
    cap: usize,
    alpha: f64,
) -> Result<SpectralField> {
    check_alpha(alpha)?;
    let gamma = alpha / 2.0;
    let quad = DiskQuadrature::new(gamma, cap + 24, 2 * cap + 32)?;
    let values: Vec<f64> = quad
        .points
        .iter()
        .map(|&(r, p, _)| f(r * p.cos(), r * p.sin()))
        .collect();
    let mut out = SpectralField::new(alpha, gamma, Some(cap))?;
    for idx in enumerate_xr(cap) {
        let s: f64 = quad
            .points
            .iter()
            .zip(&values)
            .map(|(&(r, p, w), v)| w * v * eval_basis(idx, gamma, r, p))
            .sum();
        out.set(idx, s / basis_norm_sq(idx, gamma))?;
    }
    Ok(out)
}

/// Coefficients of the source on `X_R` at weight `α/2`.
pub fn project_source(spec: &SourceSpec, cap: usize, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    spec.validate()?;
    match spec {
        SourceSpec::Bubble { amplitude, radius } => {
            let mut out = SpectralField::new(alpha, alpha / 2.0, Some(cap))?;
            for idx in enumerate_xr(cap) {
                if idx.l() == 0 && idx.mu() == Mu::Plus {
                    out.set(
                        idx,
                        bubble_coefficient(*amplitude, *radius, idx.n(), alpha)?,
                    )?;
                }
            }
            Ok(out)
        }
        SourceSpec::Cusp { convention } => {
            Ok(cusp_field(alpha, cap + 2, *convention)?.truncate(cap))
        }
        SourceSpec::Manufactured => {
            Ok(cusp_field(alpha, cap + 2, CuspConvention::Exact)?.truncate(cap))
        }
    }
}

/// `u(x, t) = T(t) g(x)` with `T(t) = t (t_end - t)³` on `[0, t_end]` and zero after.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeparableRHS {
    /// Spatial coefficients `g` at weight `α/2`.
    pub spatial: SpectralField,
    /// End of the temporal support (3/2 in the model problem).
    pub t_end: f64,
}

impl TimeSeparableRHS {
    /// The model problem: `g = |x1|³ + x2` with coefficients to radial degree `max_degree`.
    pub fn model(alpha: f64, max_degree: usize) -> Result<Self> {
        Ok(Self {
            spatial: cusp_field(alpha, max_degree, CuspConvention::Exact)?,
            t_end: 1.5,
        })
    }

    /// `T(t)`.
    pub fn temporal(&self, t: f64) -> f64 {
        if !(0.0..=self.t_end).contains(&t) {
            return 0.0;
        }
        t * (self.t_end - t).powi(3)
    }

    /// `T'(t)`.
    pub fn temporal_derivative(&self, t: f64) -> f64 {
        if !(0.0..=self.t_end).contains(&t) {
            return 0.0;
        }
        let s = self.t_end - t;
        s.powi(3) - 3.0 * t * s * s
    }

    /// `T''(t)`.
    pub fn temporal_second_derivative(&self, t: f64) -> f64 {
        if !(0.0..=self.t_end).contains(&t) {
            return 0.0;
        }
        let s = self.t_end - t;
        -6.0 * s * s + 6.0 * t * s
    }

    /// Exact solution coefficients `T(t) g`.
    pub fn exact(&self, t: f64) -> SpectralField {
        self.spatial.scaled(self.temporal(t))
    }
}

/// Load vector `T'(t) (M g) + T(t) (S g)` over the index set of `matrices`,
/// with `g` restricted to that index set.
pub fn manufactured_rhs(
    rhs: &TimeSeparableRHS,
    t: f64,
    matrices: &OperatorMatrices,
) -> Result<Vec<f64>> {
    if (rhs.spatial.alpha() - matrices.params.alpha()).abs() > 1e-15 {
        return Err(Error::DimensionMismatch(
            "spatial profile and matrices use different alpha".into(),
        ));
    }
    let g = rhs.spatial.to_vector(&matrices.set);
    let mg = matrices.mass.apply(&g)?;
    let sg = matrices.stiffness.apply(&g)?;
    let (tp, tv) = (rhs.temporal_derivative(t), rhs.temporal(t));
    Ok(mg.iter().zip(&sg).map(|(m, s)| tp * m + tv * s).collect())
}
