//! Scalar special-function kernels.
//!
//! Jacobi polynomials `P_n^{(a,b)}` are evaluated with the classical
//! three-term recurrence, Γ-ratios are formed in log space, and Gauss–Jacobi
//! rules come from the Golub–Welsch eigenproblem followed by Newton
//! polishing of each node against the recurrence. An adaptive Gauss–Kronrod
//! integrator is provided for the few non-polynomial integrands (the radial
//! bubble source).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use statrs::function::gamma::ln_gamma;

/// Exponents of the Jacobi weight `(1 - t)^a (1 + t)^b` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiParams {
    a: f64,
    b: f64,
}

impl JacobiParams {
    /// Builds the parameter pair, rejecting values for which the weight is not integrable.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a <= -1.0 || b <= -1.0 {
            return invalid(format!("Jacobi parameters must exceed -1, got ({a}, {b})"));
        }
        Ok(Self { a, b })
    }

    /// Exponent of `(1 - t)`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Exponent of `(1 + t)`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Total mass `∫(1-t)^a (1+t)^b dt = 2^{a+b+1} B(a+1, b+1)`.
    pub fn weight_mass(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
            - ln_gamma(a + b + 2.0))
        .exp()
    }
}

/// Evaluates `P_n^{(a,b)}(t)` by the three-term recurrence.
pub fn jacobi_eval(params: JacobiParams, n: usize, t: f64) -> f64 {
    let mut out = 0.0;
    jacobi_fill(params, n, t, |k, v| {
        if k == n {
            out = v;
        }
    });
    out
}

/// Evaluates `P_k^{(a,b)}(t)` for every `k = 0..=n_max`.
pub fn jacobi_eval_all(params: JacobiParams, n_max: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    jacobi_fill(params, n_max, t, |k, v| out[k] = v);
    out
}

/// Evaluates the derivative `d/dt P_n^{(a,b)}(t) = (n+a+b+1)/2 · P_{n-1}^{(a+1,b+1)}(t)`.
pub fn jacobi_derivative(params: JacobiParams, n: usize, t: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let shifted = JacobiParams {
        a: params.a + 1.0,
        b: params.b + 1.0,
    };
    0.5 * (n as f64 + params.a + params.b + 1.0) * jacobi_eval(shifted, n - 1, t)
}

fn jacobi_fill(params: JacobiParams, n_max: usize, t: f64, mut sink: impl FnMut(usize, f64)) {
    let (a, b) = (params.a, params.b);
    let mut p_prev = 1.0;
    sink(0, p_prev);
    if n_max == 0 {
        return;
    }
    let mut p_cur = (a + 1.0) + 0.5 * (a + b + 2.0) * (t - 1.0);
    sink(1, p_cur);
    for k in 1..n_max {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let c0 = 2.0 * (kf + 1.0) * (kf + a + b + 1.0) * s;
        let c1 = (s + 1.0) * ((s + 2.0) * s * t + a * a - b * b);
        let c2 = 2.0 * (kf + a) * (kf + b) * (s + 2.0);
        let p_next = (c1 * p_cur - c2 * p_prev) / c0;
        p_prev = p_cur;
        p_cur = p_next;
        sink(k + 1, p_cur);
    }
}

/// Squared weighted norm `|||P_j|||² = ∫(1-t)^a(1+t)^b [P_j^{(a,b)}]² dt`.
pub fn jacobi_norm_sq(params: JacobiParams, j: usize) -> f64 {
    let (a, b) = (params.a, params.b);
    if j == 0 {
        return params.weight_mass();
    }
    let jf = j as f64;
    ((a + b + 1.0) * std::f64::consts::LN_2 - (2.0 * jf + a + b + 1.0).ln()
        + ln_gamma(jf + a + 1.0)
        + ln_gamma(jf + b + 1.0)
        - ln_gamma(jf + 1.0)
        - ln_gamma(jf + a + b + 1.0))
    .exp()
}

/// Weighted norm `|||P_j^{(a,b)}|||`.
pub fn jacobi_norm(params: JacobiParams, j: usize) -> f64 {
    jacobi_norm_sq(params, j).sqrt()
}

/// `ln Γ(x + delta) - ln Γ(x)` for positive arguments.
pub fn ln_gamma_ratio(x: f64, delta: f64) -> Result<f64> {
    if !(x > 0.0) || !(x + delta > 0.0) {
        return invalid(format!(
            "gamma ratio needs positive arguments, got x = {x}, x + delta = {}",
            x + delta
        ));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_gamma(x + delta) - ln_gamma(x))
}

/// `Γ(x + delta) / Γ(x)` computed in log space.
pub fn gamma_ratio(x: f64, delta: f64) -> Result<f64> {
    ln_gamma_ratio(x, delta).map(f64::exp)
}

/// `(ln|Γ(x)|, sign Γ(x))` for any real `x` that is not a non-positive integer.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if x > 0.0 {
        return Ok((ln_gamma(x), 1.0));
    }
    if x == x.floor() {
        return invalid(format!("gamma has a pole at {x}"));
    }
    // Reflection: Γ(x) Γ(1 - x) = π / sin(πx).
    let s = (std::f64::consts::PI * x).sin();
    let ln_abs = std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    Ok((ln_abs, s.signum()))
}

/// A Gauss–Jacobi rule for the weight `(1 - t)^a (1 + t)^b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    /// Weight exponents the rule integrates against.
    pub params: JacobiParams,
    /// Nodes in ascending order, all inside `(-1, 1)`.
    pub nodes: Vec<f64>,
    /// Positive weights matching `nodes`.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True for a rule without nodes (never produced by [`gauss_jacobi`]).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f`, returning `Σ w_i f(t_i)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Builds the `q`-point Gauss–Jacobi rule, exact for polynomials of degree `2q - 1`.
pub fn gauss_jacobi(params: JacobiParams, q: usize) -> Result<QuadratureRule> {
    if q == 0 {
        return invalid("quadrature needs at least one node");
    }
    let (a, b) = (params.a, params.b);
    let mut jm = DMatrix::<f64>::zeros(q, q);
    for k in 0..q {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let diag = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        jm[(k, k)] = diag;
        if k >= 1 {
            let off_sq = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
            } else {
                4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = off_sq.sqrt();
            jm[(k, k - 1)] = off;
            jm[(k - 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.total_cmp(y));

    let qf = q as f64;
    let ln_c =
        (a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(qf + a + 1.0) + ln_gamma(qf + b + 1.0)
            - ln_gamma(qf + a + b + 1.0)
            - ln_gamma(qf + 1.0);
    let mut weights = Vec::with_capacity(q);
    for t in nodes.iter_mut() {
        let mut last_step = f64::INFINITY;
        for _ in 0..60 {
            let p = jacobi_eval(params, q, *t);
            let dp = jacobi_derivative(params, q, *t);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *t -= step;
            last_step = step.abs();
            if last_step <= 1e-16 * t.abs().max(1e-3) {
                break;
            }
        }
        if !(last_step <= 1e-14) || !(t.abs() < 1.0) {
            return Err(Error::Numerical(format!(
                "Gauss-Jacobi node did not converge (a = {a}, b = {b}, q = {q}, step = {last_step:e})"
            )));
        }
        let dp = jacobi_derivative(params, q, *t);
        let w = (ln_c - (1.0 - *t * *t).ln() - 2.0 * dp.abs().ln()).exp();
        weights.push(w);
    }
    Ok(QuadratureRule {
        params,
        nodes,
        weights,
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K15: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = GK_WEIGHTS_K15[7] * fc;
    let mut g = GK_WEIGHTS_G7[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WEIGHTS_K15[i] * s;
        if i % 2 == 1 {
            g += GK_WEIGHTS_G7[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gk15(&mut f, lo, hi);
    let mut pieces = vec![(lo, hi, v, e)];
    let mut total_err = e;
    while total_err > tol {
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "adaptive quadrature stalled at error {total_err:e} (tolerance {tol:e})"
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (a, b, _, _) = pieces.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(Error::Numerical(
                "adaptive quadrature interval underflow".to_string(),
            ));
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        pieces.push((a, m, v1, e1));
        pieces.push((m, b, v2, e2));
        total_err = pieces.iter().map(|p| p.3).sum();
    }
    Ok(pieces.iter().map(|p| p.2).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> JacobiParams {
        JacobiParams::new(a, b).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(JacobiParams::new(-1.0, 0.0).is_err());
        assert!(JacobiParams::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn low_degree_values() {
        assert_eq!(jacobi_eval(p(0.85, 0.0), 0, 0.3), 1.0);
        assert!((jacobi_eval(p(0.85, 0.0), 1, 1.0) - 1.85).abs() < 1e-15);
        // P_1^{(a,b)}(t) = (a+1) + (a+b+2)(t-1)/2
        let v = jacobi_eval(p(0.5, 2.0), 1, -0.4);
        assert!((v - (1.5 + 4.5 * (-1.4) / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn eval_all_matches_single() {
        let pr = p(0.85, 3.0);
        let all = jacobi_eval_all(pr, 9, 0.37);
        for (k, v) in all.iter().enumerate() {
            assert!((v - jacobi_eval(pr, k, 0.37)).abs() <= 1e-13 * v.abs().max(1.0));
        }
    }

    #[test]
    fn norm_examples() {
        assert!((jacobi_norm(p(0.0, 0.0), 0) - 2f64.sqrt()).abs() < 1e-14);
        let expect = (2f64.powf(1.85) / 1.85).sqrt();
        assert!((jacobi_norm(p(0.85, 0.0), 0) - expect).abs() < 1e-14);
        assert!((expect - 1.395940).abs() < 1e-6);
    }

    #[test]
    fn gamma_ratio_basics() {
        assert!((gamma_ratio(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_ratio(4.0, 2.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(gamma_ratio(0.0, 1.0).is_err());
        assert!(gamma_ratio(1.0, -1.5).is_err());
    }

    #[test]
    fn signed_gamma_negative_half_integers() {
        let pi_sqrt = std::f64::consts::PI.sqrt();
        let (l, s) = ln_gamma_signed(-0.5).unwrap();
        assert_eq!(s, -1.0);
        assert!((l.exp() - 2.0 * pi_sqrt).abs() < 1e-13);
        let (l, s) = ln_gamma_signed(-1.5).unwrap();
        assert_eq!(s, 1.0);
        assert!((l.exp() - 4.0 * pi_sqrt / 3.0).abs() < 1e-13);
        assert!(ln_gamma_signed(-2.0).is_err());
    }

    #[test]
    fn midpoint_rule() {
        let r = gauss_jacobi(p(0.0, 0.0), 1).unwrap();
        assert!(r.nodes[0].abs() < 1e-15);
        assert!((r.weights[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_mass() {
        for &(a, b, q) in &[(0.85, 0.0, 5), (1.7, 40.0, 30), (-0.15, 7.0, 12)] {
            let pr = p(a, b);
            let r = gauss_jacobi(pr, q).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s / pr.weight_mass() - 1.0).abs() < 1e-12, "{a} {b} {q}");
        }
    }

    #[test]
    fn adaptive_integrates_smooth_function() {
        let v = integrate_adaptive(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let bump = integrate_adaptive(
            |x: f64| {
                if x.abs() < 1.0 {
                    (-1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            },
            -1.0,
            1.0,
            1e-13,
        )
        .unwrap();
        assert!((bump - 0.443_993_816_168_079_4).abs() < 1e-12);
    }
}
