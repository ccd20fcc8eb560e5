//! Closed-form Holevo bound and mutual information against an explicit
//! dilation: the noisy homodyne is a beam splitter of transmissivity μ mixing
//! Bob's mode with one half of an EPR pair of variance ν_d, and every
//! conditioning step is carried out on full covariance matrices.

use cvqkd::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn db(v: f64) -> SqueezingSpec {
    SqueezingSpec::from_db(v).unwrap()
}

fn omega(modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Symplectic eigenvalues, each listed once, ascending.
fn symplectic_eigenvalues(g: &DMatrix<f64>) -> Vec<f64> {
    let modes = g.nrows() / 2;
    let eig = SymmetricEigen::new(g.clone());
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let o = omega(modes);
    let m = &root * o.transpose() * g * &o * &root;
    let m = 0.5 * (&m + m.transpose());
    let mut nu2: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    nu2.sort_by(f64::total_cmp);
    nu2.chunks(2).map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt()).collect()
}

fn entropy(g: &DMatrix<f64>) -> f64 {
    symplectic_eigenvalues(g).into_iter().map(entropy_function).sum()
}

fn two_mode(a: f64, b: f64, c: f64) -> [[f64; 4]; 4] {
    [
        [a, 0.0, c, 0.0],
        [0.0, a, 0.0, -c],
        [c, 0.0, b, 0.0],
        [0.0, -c, 0.0, b],
    ]
}

fn sub(g: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])])
}

/// Conditions the modes `keep` on a homodyne measurement of quadrature `q`.
fn homodyne_condition(g: &DMatrix<f64>, keep: &[usize], q: usize) -> DMatrix<f64> {
    let rest = sub(g, keep);
    let v = g[(q, q)];
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| {
        rest[(i, j)] - g[(keep[i], q)] * g[(keep[j], q)] / v
    })
}

struct Oracle {
    holevo: f64,
    mutual_info: f64,
}

fn dilation(m: &SourceMoments, link: &LinkParams) -> Oracle {
    let tau = link.tau;
    let mu = link.noise.mu;
    let nu_d = link.nu_d();
    let b = tau * (m.y + link.chi_c());
    let ab = two_mode(m.x, b, tau.sqrt() * m.z);
    let epr = two_mode(nu_d, nu_d, (nu_d * nu_d - 1.0).max(0.0).sqrt());

    // modes A, B, F0, G
    let mut g = DMatrix::zeros(8, 8);
    for i in 0..4 {
        for j in 0..4 {
            g[(i, j)] = ab[i][j];
            g[(4 + i, 4 + j)] = epr[i][j];
        }
    }
    let mut s = DMatrix::identity(8, 8);
    let (t, r) = (mu.sqrt(), (1.0 - mu).sqrt());
    for k in 0..2 {
        let (bq, fq) = (2 + k, 4 + k);
        s[(bq, bq)] = t;
        s[(bq, fq)] = r;
        s[(fq, bq)] = -r;
        s[(fq, fq)] = t;
    }
    let g = &s * g * s.transpose();

    let s_ab = entropy(&DMatrix::from_fn(4, 4, |i, j| ab[i][j]));
    let afg = homodyne_condition(&g, &[0, 1, 4, 5, 6, 7], 2);
    let holevo = s_ab - entropy(&afg);

    // Alice heterodynes: V_B|A = V_B − σᵀ(γ_A + I)⁻¹σ on the measured quadrature
    let v_b = g[(2, 2)];
    let cov = g[(0, 2)];
    let v_cond = v_b - cov * cov / (g[(0, 0)] + 1.0);
    Oracle {
        holevo,
        mutual_info: 0.5 * (v_b / v_cond).log2(),
    }
}

#[test]
fn reference_noise_points() {
    for kind in SourceKind::ALL {
        for (s, t, tau) in [(5.0, 0.5, 0.5), (10.0, 0.3, 0.1), (16.0, 0.8, 0.01)] {
            let m = source_moments(kind, &db(s), t).unwrap();
            let link = LinkParams::new(tau, NoiseParams::default()).unwrap();
            let o = dilation(&m, &link);
            let h = holevo_quantity(&m, &link).unwrap();
            let i = mutual_information(&m, &link).unwrap();
            assert!((h - o.holevo).abs() < 1e-8, "{kind} {s} dB: {h} vs {}", o.holevo);
            assert!((i - o.mutual_info).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn closed_form_matches_dilation(
        k in prop::sample::select(SourceKind::ALL.to_vec()),
        s in 0.5f64..18.0,
        t in 0.02f64..0.98,
        tau in 1e-3f64..=1.0,
        eps in 0.0f64..0.1,
        mu in 0.2f64..0.99,
        nu_el in 0.0f64..0.2,
    ) {
        let m = source_moments(k, &db(s), t).unwrap();
        let link = LinkParams::new(tau, NoiseParams::new(eps, mu, nu_el).unwrap()).unwrap();
        let o = dilation(&m, &link);
        let h = holevo_quantity(&m, &link).unwrap();
        let scale = 1.0 + o.holevo.abs();
        prop_assert!((h - o.holevo).abs() < 1e-7 * scale, "{} vs {}", h, o.holevo);
        let i = mutual_information(&m, &link).unwrap();
        prop_assert!((i - o.mutual_info).abs() < 1e-9 * (1.0 + i));
    }
}
