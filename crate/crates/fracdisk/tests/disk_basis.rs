//! Disk basis: evaluation, norms, index sets, reconstruction and serialisation.

use std::collections::HashSet;
use std::f64::consts::PI;

use fracdisk::disk_basis::{
    basis_norm_sq, enumerate_xr, eval_basis, eval_field, hs_norm, norm_shift_add, norm_shift_sub,
    norm_shift_weight, reconstruct, BasisIndex, DiskQuadrature, IndexSet, Mu, PolarGrid,
    SpectralField,
};
use fracdisk::specfun::{jacobi_eval, JacobiParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn idx(l: usize, n: usize, mu: Mu) -> BasisIndex {
    BasisIndex::new(l, n, mu).unwrap()
}

fn random_field(cap: usize, alpha: f64, seed: u64) -> SpectralField {
    let set = IndexSet::new(cap);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..set.len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    SpectralField::from_vector(&set, alpha, alpha / 2.0, &v).unwrap()
}

#[test]
fn eval_examples() {
    for (r, phi) in [(0.0, 0.0), (0.3, 1.0), (1.0, 4.0)] {
        assert_eq!(eval_basis(idx(0, 0, Mu::Plus), 0.85, r, phi), 0.5);
        let x2 = r * phi.sin();
        assert!((eval_basis(idx(1, 0, Mu::Minus), 0.85, r, phi) - x2).abs() < 1e-15);
    }
    let (r, phi) = (0.6f64, 1.1f64);
    let want = r
        * r
        * (2.0 * phi).cos()
        * jacobi_eval(JacobiParams::new(0.85, 2.0).unwrap(), 3, 2.0 * 0.36 - 1.0);
    assert!((eval_basis(idx(2, 3, Mu::Plus), 0.85, r, phi) - want).abs() < 1e-14);
}

#[test]
fn norm_closed_forms() {
    // ∫_Ω ω^{0.85} (1/2)² = (π/2)·(1/2)·2·∫_0^1 (1-r²)^{0.85} r dr·... = (π/4)/1.85.
    let v = basis_norm_sq(idx(0, 0, Mu::Plus), 0.85);
    assert!((v - 2.0 * PI * 0.25 / 3.7).abs() < 1e-14);
    for l in 1..6 {
        for n in 0..6 {
            assert_eq!(
                basis_norm_sq(idx(l, n, Mu::Plus), 0.85),
                basis_norm_sq(idx(l, n, Mu::Minus), 0.85)
            );
        }
    }
}

#[test]
fn norms_match_quadrature_at_three_weights() {
    let alpha = 1.7;
    for gamma in [alpha / 2.0 - 1.0, alpha / 2.0, alpha] {
        let quad = DiskQuadrature::new(gamma, 16, 32).unwrap();
        for b in enumerate_xr(14)
            .into_iter()
            .filter(|b| b.radial_degree() <= 14)
        {
            let q = quad.integrate(|r, p| eval_basis(b, gamma, r, p).powi(2));
            let h = basis_norm_sq(b, gamma);
            assert!((q / h - 1.0).abs() < 1e-10, "{b} gamma={gamma}: {q} vs {h}");
        }
    }
}

#[test]
fn shift_identity_examples() {
    let g = 0.85;
    assert_eq!(norm_shift_weight(idx(3, 1, Mu::Plus), g, 0), 1.0);
    assert!((norm_shift_weight(idx(0, 0, Mu::Plus), g, 1) - 1.85 / 2.85).abs() < 1e-15);
    let b = idx(4, 3, Mu::Plus);
    let want = basis_norm_sq(b, g + 2.0) / basis_norm_sq(b, g);
    assert!((norm_shift_weight(b, g, 2) / want - 1.0).abs() < 1e-12);

    assert!((norm_shift_add(idx(2, 2, Mu::Minus), g, 0, 0).unwrap() - 1.0).abs() < 1e-15);
    let want = basis_norm_sq(idx(2, 0, Mu::Plus), g) / basis_norm_sq(idx(1, 0, Mu::Plus), g);
    assert!((norm_shift_add(idx(1, 0, Mu::Plus), g, 1, 0).unwrap() / want - 1.0).abs() < 1e-12);

    let want = basis_norm_sq(idx(0, 2, Mu::Plus), g) / basis_norm_sq(idx(2, 0, Mu::Plus), g);
    assert!((norm_shift_sub(idx(2, 0, Mu::Plus), g, 2, 2).unwrap() / want - 1.0).abs() < 1e-12);
}

#[test]
fn shift_preconditions() {
    assert!(norm_shift_sub(idx(2, 0, Mu::Plus), 0.85, 2, 1).is_err());
    assert!(norm_shift_sub(idx(1, 0, Mu::Minus), 0.85, 1, 1).is_err());
    assert!(norm_shift_sub(idx(1, 0, Mu::Plus), 0.85, 2, 2).is_err());
}

#[test]
fn small_index_sets() {
    let want = vec![
        idx(0, 0, Mu::Plus),
        idx(1, 0, Mu::Plus),
        idx(1, 0, Mu::Minus),
        idx(2, 0, Mu::Minus),
    ];
    assert_eq!(enumerate_xr(1), want);
    let plus = enumerate_xr(3)
        .into_iter()
        .filter(|b| b.mu() == Mu::Plus)
        .count();
    assert_eq!(plus, 6);
}

#[test]
fn index_set_counting_oracle() {
    for cap in [0usize, 1, 2, 7, 12, 40, 41] {
        let (top_plus, top_minus) = if cap % 2 == 1 {
            (cap, cap + 1)
        } else {
            (cap + 1, cap + 2)
        };
        let mut count = 0;
        for l in 0..=top_minus {
            for n in 0..=top_minus {
                if l + 2 * n <= top_plus {
                    count += 1;
                }
                if l >= 1 && l + 2 * n <= top_minus {
                    count += 1;
                }
            }
        }
        let list = enumerate_xr(cap);
        assert_eq!(list.len(), count, "cap {cap}");
        let unique: HashSet<_> = list.iter().collect();
        assert_eq!(unique.len(), list.len());
        assert!(list.iter().all(|b| !(b.l() == 0 && b.mu() == Mu::Minus)));
    }
}

#[test]
fn chain_order_within_set() {
    let list = enumerate_xr(9);
    for w in list.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.mu() == b.mu() {
            assert!(
                a.radial_degree() < b.radial_degree()
                    || (a.radial_degree() == b.radial_degree() && a.l() > b.l())
            );
        } else {
            assert_eq!((a.mu(), b.mu()), (Mu::Plus, Mu::Minus));
        }
    }
}

#[test]
fn hs_norm_single_mode() {
    let mut f = SpectralField::new(1.7, 0.85, Some(10)).unwrap();
    assert_eq!(hs_norm(&f, 1.3), 0.0);
    let b = idx(3, 2, Mu::Minus);
    f.set(b, -2.5).unwrap();
    let want = 2.5 * (3.0f64 * 6.0).powf(1.3 / 2.0) * basis_norm_sq(b, 0.85).sqrt();
    assert!((hs_norm(&f, 1.3) / want - 1.0).abs() < 1e-14);
}

#[test]
fn parseval_matches_quadrature() {
    let alpha = 1.7;
    let gamma = alpha / 2.0;
    let quad = DiskQuadrature::new(gamma, 16, 40).unwrap();
    for seed in 0..3 {
        let f = random_field(12, alpha, seed);
        let q = quad.integrate(|r, p| eval_field(&f, false, r, p).powi(2));
        let h = hs_norm(&f, 0.0).powi(2);
        assert!((q / h - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reconstruction_examples() {
    let alpha = 1.7;
    let f = random_field(8, alpha, 11);
    let (radii, angles) = PolarGrid::uniform_axes(11, 16).unwrap();
    let grid = reconstruct(&f, true, &radii, &angles).unwrap();
    assert!(grid.values.last().unwrap().iter().all(|v| *v == 0.0));
    for (i, r) in radii.iter().enumerate() {
        for (j, p) in angles.iter().enumerate() {
            let v = eval_field(&f, true, *r, *p);
            assert!((grid.values[i][j] - v).abs() < 1e-12);
        }
    }

    let mut single = SpectralField::new(alpha, alpha / 2.0, None).unwrap();
    single.set(idx(3, 1, Mu::Plus), 1.0).unwrap();
    let g = reconstruct(&single, false, &[0.0], &angles).unwrap();
    assert!(g.values[0].iter().all(|v| *v == 0.0));

    let mut x2 = SpectralField::new(alpha, alpha / 2.0, None).unwrap();
    x2.set(idx(1, 0, Mu::Minus), 1.0).unwrap();
    assert!((eval_field(&x2, false, 0.5, PI / 2.0) - 0.5).abs() < 1e-15);
}

#[test]
fn scaled_reconstruction_needs_matching_weight() {
    let f = SpectralField::new(1.7, 0.2, None).unwrap();
    assert!(reconstruct(&f, true, &[0.5], &[0.0]).is_err());
    let g = SpectralField::new(1.7, 0.85, None).unwrap();
    assert!(reconstruct(&g, false, &[1.5], &[0.0]).is_err());
}

#[test]
fn csv_schema() {
    let f = random_field(4, 1.7, 3);
    let (radii, angles) = PolarGrid::uniform_axes(3, 4).unwrap();
    let csv = reconstruct(&f, true, &radii, &angles)
        .unwrap()
        .to_csv_string();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "r,phi,x,y,value");
    assert_eq!(lines.len(), 1 + 12);
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
        assert!((cols[2] - cols[0] * cols[1].cos()).abs() < 1e-15);
        assert!((cols[3] - cols[0] * cols[1].sin()).abs() < 1e-15);
        if cols[0] == 1.0 {
            assert_eq!(cols[4], 0.0);
        }
    }
}

#[test]
fn json_round_trip_and_schema() {
    let f = random_field(6, 1.7, 5);
    let text = f.to_json().unwrap();
    let back = SpectralField::from_json(&text).unwrap();
    assert_eq!(back, f);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["R"], 6);
    let first = &doc["coeffs"][0];
    assert!(first["l"].is_u64() && first["n"].is_u64() && first["a"].is_f64());
    assert!(first["mu"] == 1 || first["mu"] == -1);

    let bad = r#"{"alpha":1.7,"gamma":0.85,"R":null,"coeffs":[{"l":0,"n":0,"mu":-1,"a":1.0}]}"#;
    assert!(SpectralField::from_json(bad).is_err());
}

#[test]
fn field_cap_enforced() {
    let mut f = SpectralField::new(1.7, 0.85, Some(2)).unwrap();
    assert!(f.set(idx(4, 0, Mu::Plus), 1.0).is_err());
    assert!(f.set(idx(3, 0, Mu::Plus), 1.0).is_ok());
    assert!(SpectralField::new(1.0, 0.5, None).is_err());
    assert!(SpectralField::new(1.7, -1.0, None).is_err());
}
