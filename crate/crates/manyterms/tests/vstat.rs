mod common;

use common::{dense_annihilator, mean, TestRng};
use manyterms::projection::{factorize, RankMode};
use manyterms::simulation::{self, DecompConfig, DgpSpec};
use manyterms::vstat::{
    decompose_plm, hoeffding_decompose_discrete, oracle_sigma_n_hom, DiscreteDist, OracleData,
    MAX_SUPPORT,
};
use manyterms::Error;
use ndarray::{array, Array1, Array2};

fn random_oracle(rng: &mut TestRng, n: usize, d: usize) -> OracleData {
    let z = rng.normal_vector(n);
    let g = z.mapv(|t| (0.7 * t).sin());
    let mut h = Array2::<f64>::zeros((n, d));
    for kk in 0..d {
        for i in 0..n {
            h[[i, kk]] = (z[i] + kk as f64).cos();
        }
    }
    OracleData {
        g,
        h,
        v: rng.normal_matrix(n, d),
        eps: rng.normal_vector(n),
    }
}

#[test]
fn noise_free_sample_is_pure_bias() {
    let mut rng = TestRng::new(901);
    let n = 40;
    let d = 2;
    let mut oracle = random_oracle(&mut rng, n, d);
    oracle.v.fill(0.0);
    oracle.eps.fill(0.0);
    let p = rng.normal_matrix(n, 7);
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let beta0 = array![1.0, -0.5];

    let rep = decompose_plm(&w, &oracle, beta0.view()).unwrap();
    for kk in 0..d {
        assert_eq!(rep.psi_n[kk], 0.0);
        assert_eq!(rep.r_n[kk], 0.0);
        assert_eq!(rep.u_n[kk], 0.0);
        assert_eq!(rep.diag_term[kk], 0.0);
        // S_n travels through an independent evaluation path, so the match
        // with B_n is floating-point, not structural.
        assert!((rep.s_n[kk] - rep.b_n[kk]).abs() < 1e-12);
    }
}

#[test]
fn error_only_sample_has_no_bias() {
    let mut rng = TestRng::new(902);
    let n = 40;
    let d = 1;
    let mut oracle = random_oracle(&mut rng, n, d);
    oracle.g.fill(0.0);
    oracle.h.fill(0.0);
    let p = rng.normal_matrix(n, 5);
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let beta0 = array![2.0];

    let rep = decompose_plm(&w, &oracle, beta0.view()).unwrap();
    assert_eq!(rep.b_n[0], 0.0);
    assert_eq!(rep.r_n[0], 0.0);
    let sum = rep.b_n[0] + rep.psi_n[0] + rep.u_n[0];
    assert!((rep.s_n[0] - sum).abs() < 1e-12 * rep.s_n[0].abs().max(1.0));
}

#[test]
fn components_match_the_dense_double_loop() {
    let dgp = DgpSpec::model(1, 60).unwrap();
    let sample = simulation::draw_sample(&dgp, 333).unwrap();
    let spec = manyterms::basis::ladder(dgp.d_z, 2)[1].clone();
    assert_eq!(spec.k(), 11);
    let bm = manyterms::basis::build_basis(sample.z.view(), &spec).unwrap();
    let w = factorize(bm.values.view(), None, RankMode::Strict).unwrap();
    let beta0 = array![dgp.beta0];
    let rep = decompose_plm(&w, &sample.oracle, beta0.view()).unwrap();

    let n = 60;
    let m = dense_annihilator(bm.values.view());
    let g = &sample.oracle.g;
    let h = sample.oracle.h.column(0);
    let v = sample.oracle.v.column(0);
    let eps = &sample.oracle.eps;
    let sqrt_n = (n as f64).sqrt();

    let mut b = 0.0;
    let mut r = 0.0;
    let mut diag = 0.0;
    let mut u = 0.0;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mij = m[[i, j]];
            b += h[i] * mij * g[j];
            r += v[i] * mij * g[j] + h[i] * mij * eps[j];
            s += (h[i] + v[i]) * mij * (g[j] + eps[j]);
            if i == j {
                diag += mij * v[i] * eps[i];
            } else {
                u += mij * v[i] * eps[j];
            }
        }
    }
    b /= sqrt_n;
    r /= sqrt_n;
    diag /= sqrt_n;
    u /= sqrt_n;
    s /= sqrt_n;

    assert!((rep.b_n[0] - b).abs() < 1e-9, "B {} vs {}", rep.b_n[0], b);
    assert!((rep.r_n[0] - r).abs() < 1e-9, "R {} vs {}", rep.r_n[0], r);
    assert!((rep.diag_term[0] - diag).abs() < 1e-9);
    assert!((rep.u_n[0] - u).abs() < 1e-9, "U {} vs {}", rep.u_n[0], u);
    assert!((rep.s_n[0] - s).abs() < 1e-9, "S {} vs {}", rep.s_n[0], s);
    assert!((rep.psi_n[0] - (diag + r)).abs() < 1e-9);
}

#[test]
fn decomposition_identity_holds_across_designs() {
    let mut rng = TestRng::new(903);
    for trial in 0..30 {
        let n = 30 + (rng.next_u64() % 40) as usize;
        let d = 1 + (rng.next_u64() % 2) as usize;
        let k = 2 + (rng.next_u64() % 10) as usize;
        let oracle = random_oracle(&mut rng, n, d);
        let p = rng.normal_matrix(n, k);
        let w = factorize(p.view(), None, RankMode::Strict).unwrap();
        let beta0 = rng.normal_vector(d);

        let rep = decompose_plm(&w, &oracle, beta0.view()).unwrap();
        for kk in 0..d {
            let sum = rep.b_n[kk] + rep.psi_n[kk] + rep.u_n[kk];
            let rel = (rep.s_n[kk] - sum).abs() / rep.s_n[kk].abs().max(1.0);
            assert!(rel < 1e-8, "trial {trial}, coordinate {kk}: rel {rel}");
            let psi = rep.diag_term[kk] + rep.r_n[kk];
            assert!((rep.psi_n[kk] - psi).abs() < 1e-14);
        }
    }
}

#[test]
fn decompose_rejects_mismatched_shapes() {
    let mut rng = TestRng::new(904);
    let oracle = random_oracle(&mut rng, 20, 1);
    let p = rng.normal_matrix(25, 3);
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let err = decompose_plm(&w, &oracle, array![1.0].view()).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));

    let p = rng.normal_matrix(20, 3);
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let err = decompose_plm(&w, &oracle, array![1.0, 0.0].view()).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
}

#[test]
fn oracle_sigma_collapses_to_the_homoskedastic_closed_form() {
    // Constant basis on n = 4: M = I - J/4, so every M_ii = 3/4 and the
    // coefficient is sigma_eps^2 sigma_v^2 (1 - K/n) = 0.5 * 2 * 0.75.
    let p = Array2::<f64>::ones((4, 1));
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let cv = Array1::from_elem(4, 2.0);
    let sigma = oracle_sigma_n_hom(&w, 0.5, cv.view(), 2).unwrap();
    assert_eq!(sigma.dim(), (2, 2));
    assert!((sigma[[0, 0]] - 0.75).abs() < 1e-12);
    assert!((sigma[[1, 1]] - 0.75).abs() < 1e-12);
    assert_eq!(sigma[[0, 1]], 0.0);

    let err = oracle_sigma_n_hom(&w, 1.0, Array1::zeros(3).view(), 1).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
    let err = oracle_sigma_n_hom(&w, 1.0, cv.view(), 0).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));

    // Unit variances at K/n = 1/2 give exactly half the identity.
    let mut rng = TestRng::new(905);
    let p = rng.normal_matrix(8, 4);
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let ones = Array1::from_elem(8, 1.0);
    let sigma = oracle_sigma_n_hom(&w, 1.0, ones.view(), 1).unwrap();
    assert!((sigma[[0, 0]] - 0.5).abs() < 1e-12);

    // K = 1 at large n approximates the no-projection limit.
    let p = Array2::<f64>::ones((4000, 1));
    let w = factorize(p.view(), None, RankMode::Strict).unwrap();
    let ones = Array1::from_elem(4000, 1.0);
    let sigma = oracle_sigma_n_hom(&w, 1.0, ones.view(), 1).unwrap();
    assert!((sigma[[0, 0]] - 1.0).abs() < 1e-3);
}

#[test]
fn oracle_sigma_matches_the_dense_quadratic_form_under_heteroskedasticity() {
    // The dense target is (1/n) sum_{i,j} M_ij^2 sigma_eps^2 cv_i; the row
    // sum-of-squares identity sum_j M_ij^2 = M_ii reduces it to the
    // implemented leverage form, so agreement checks that identity end to
    // end on a heteroskedastic design.
    let dgp = DgpSpec::model(2, 80).unwrap();
    let sample = simulation::draw_sample(&dgp, 777).unwrap();
    let spec = manyterms::basis::ladder(dgp.d_z, 1)[0].clone();
    let bm = manyterms::basis::build_basis(sample.z.view(), &spec).unwrap();
    let w = factorize(bm.values.view(), None, RankMode::Strict).unwrap();

    let cv = Array1::from_shape_fn(80, |i| {
        let norm2 = sample.z.row(i).dot(&sample.z.row(i));
        dgp.varsigma * (1.0 + norm2).powi(2)
    });
    let sigma = oracle_sigma_n_hom(&w, 1.3, cv.view(), 1).unwrap();

    let m = dense_annihilator(bm.values.view());
    let mut dense = 0.0;
    for i in 0..80 {
        for j in 0..80 {
            dense += m[[i, j]] * m[[i, j]] * 1.3 * cv[i];
        }
    }
    dense /= 80.0;
    assert!((sigma[[0, 0]] - dense).abs() < 1e-9);
}

#[test]
fn constant_kernel_is_all_bias() {
    let dist = DiscreteDist::new(vec![0.0, 1.0], vec![0.4, 0.6]).unwrap();
    let sample = vec![1.0, 0.0, 1.0];
    let (b, psi, u) = hoeffding_decompose_discrete(|_, _, _, _| 0.7, &dist, &sample).unwrap();
    assert!((b - 9.0 * 0.7).abs() < 1e-12);
    assert!(psi.abs() < 1e-12);
    assert!(u.abs() < 1e-12);
}

#[test]
fn first_argument_kernel_is_all_linear() {
    // u_ij = W_i with E[W] = 0 puts the whole statistic in the linear part:
    // S = n sum_i W_i, B = 0, and the doubly centered pair terms vanish.
    let dist = DiscreteDist::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
    let sample = vec![1.0, 1.0, -1.0, 1.0];
    let (b, psi, u) = hoeffding_decompose_discrete(|_, _, wi, _| wi, &dist, &sample).unwrap();
    let total: f64 = sample.iter().sum();
    assert!(b.abs() < 1e-12);
    assert!((psi - 4.0 * total).abs() < 1e-12);
    assert!(u.abs() < 1e-12);
}

#[test]
fn product_kernel_on_signs_matches_hand_enumeration() {
    // u_ij = W_i W_j with W = ±1 equally likely: the diagonal contributes
    // u_ii = 1 deterministically, so B = n; conditional expectations of the
    // pair terms vanish, so Psi = 0 and U = 2 sum_{j<i} W_i W_j.
    let dist = DiscreteDist::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
    let sample = vec![1.0, -1.0, -1.0, 1.0];
    let (b, psi, u) = hoeffding_decompose_discrete(|_, _, wi, wj| wi * wj, &dist, &sample).unwrap();
    assert!((b - 4.0).abs() < 1e-12);
    assert!(psi.abs() < 1e-12);
    let mut pairs = 0.0;
    for i in 1..4 {
        for j in 0..i {
            pairs += 2.0 * sample[i] * sample[j];
        }
    }
    assert!((u - pairs).abs() < 1e-12);
    // total = (sum W)^2 = 0 for this sample
    assert!((b + psi + u).abs() < 1e-12);
}

#[test]
fn decomposition_reconstructs_the_statistic_and_centers_correctly() {
    // Index-dependent asymmetric kernel over a three-point support. The
    // identity B + Psi + U = sum_{i,j} u_ij must hold per sample, and over
    // the full enumeration of W^n the linear and degenerate parts must
    // average to zero while B reproduces E[S].
    let states = vec![-0.5, 0.3, 1.2];
    let probs = vec![0.2, 0.3, 0.5];
    let dist = DiscreteDist::new(states.clone(), probs.clone()).unwrap();
    let kernel = |i: usize, j: usize, wi: f64, wj: f64| {
        (i as f64 + 1.0) * wi * wj + 0.25 * wj * wj - 0.1 * (j as f64) * wi
    };
    let n = 3;

    let direct = |sample: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += kernel(i, j, sample[i], sample[j]);
            }
        }
        s
    };

    let sample = vec![1.2, -0.5, 0.3];
    let (b, psi, u) = hoeffding_decompose_discrete(kernel, &dist, &sample).unwrap();
    assert!((b + psi + u - direct(&sample)).abs() < 1e-12);

    let mut e_s = 0.0;
    let mut e_psi = 0.0;
    let mut e_u = 0.0;
    let mut e_psi_u = 0.0;
    for a in 0..3 {
        for c in 0..3 {
            for e in 0..3 {
                let tuple = vec![states[a], states[c], states[e]];
                let p = probs[a] * probs[c] * probs[e];
                let (bt, psit, ut) = hoeffding_decompose_discrete(kernel, &dist, &tuple).unwrap();
                assert!((bt - b).abs() < 1e-12, "B must not depend on the sample");
                e_s += p * direct(&tuple);
                e_psi += p * psit;
                e_u += p * ut;
                e_psi_u += p * psit * ut;
            }
        }
    }
    assert!((b - e_s).abs() < 1e-12, "B {b} vs E[S] {e_s}");
    assert!(e_psi.abs() < 1e-12);
    assert!(e_u.abs() < 1e-12);
    // The linear and degenerate projections are orthogonal.
    assert!(e_psi_u.abs() < 1e-12);
}

#[test]
fn discrete_inputs_are_validated() {
    let err =
        DiscreteDist::new(vec![0.0; MAX_SUPPORT + 1], vec![0.0; MAX_SUPPORT + 1]).unwrap_err();
    assert!(matches!(err, Error::SupportTooLarge(n, cap) if n == 101 && cap == 100));

    let err = DiscreteDist::new(vec![0.0, 1.0], vec![1.0]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = DiscreteDist::new(vec![0.0, 1.0], vec![1.5, -0.5]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = DiscreteDist::new(vec![0.0, 1.0], vec![0.4, 0.4]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));

    let dist = DiscreteDist::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let err = hoeffding_decompose_discrete(|_, _, _, _| 1.0, &dist, &[]).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)));
}

fn decomposition_rows(
    n: usize,
    k: usize,
    max_degree: usize,
    reps: usize,
    seed: u64,
) -> Vec<simulation::DecompositionRow> {
    let cfg = DecompConfig {
        dgp: DgpSpec::model(1, n).unwrap(),
        reps,
        k,
        max_degree,
        master_seed: seed,
    };
    simulation::run_decomposition(&cfg).unwrap()
}

#[test]
fn bias_component_is_monotone_along_the_ladder() {
    // With h = g, B_n = ||Mg||^2 / sqrt(n), which is nonnegative and can
    // only shrink as the ladder grows because the spans are nested. The
    // comparison is per replication, not in expectation.
    let reps = 20;
    let seed = 20_240_601;
    let rows6 = decomposition_rows(200, 6, 5, reps, seed);
    let rows26 = decomposition_rows(200, 26, 5, reps, seed);
    let rows131 = decomposition_rows(200, 131, 5, reps, seed);
    for r in 0..reps {
        assert!(rows6[r].b_n >= -1e-12);
        assert!(rows131[r].b_n >= -1e-12);
        assert!(
            rows6[r].b_n >= rows26[r].b_n - 1e-9,
            "rep {r}: {} < {}",
            rows6[r].b_n,
            rows26[r].b_n
        );
        assert!(
            rows26[r].b_n >= rows131[r].b_n - 1e-9,
            "rep {r}: {} < {}",
            rows26[r].b_n,
            rows131[r].b_n
        );
    }
}

#[test]
fn remainder_shrinks_and_degenerate_part_widens_at_large_k() {
    let reps = 200;
    let seed = 20_240_602;
    let rows6 = decomposition_rows(500, 6, 5, reps, seed);
    let rows131 = decomposition_rows(500, 131, 5, reps, seed);

    for row in rows6.iter().chain(rows131.iter()) {
        let sum = row.b_n + row.psi_n + row.u_n;
        assert!((row.s_n - sum).abs() < 1e-8 * row.s_n.abs().max(1.0));
    }

    // R_n is built from Mg and M eps paired with the oracle functions; once
    // the basis absorbs most of g it collapses toward zero.
    let abs_r6 = mean(&rows6.iter().map(|r| r.r_n.abs()).collect::<Vec<_>>());
    let abs_r131 = mean(&rows131.iter().map(|r| r.r_n.abs()).collect::<Vec<_>>());
    assert!(
        abs_r131 < 0.5 * abs_r6,
        "mean |R_n| {abs_r131} at K = 131 vs {abs_r6} at K = 6"
    );

    // The off-diagonal part contributes real variance on top of the
    // diagonal term at K/n = 0.262.
    let diag: Vec<f64> = rows131.iter().map(|r| r.diag_term).collect();
    let both: Vec<f64> = rows131.iter().map(|r| r.diag_term + r.u_n).collect();
    let var = |xs: &[f64]| {
        let m = mean(xs);
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let v_diag = var(&diag);
    let v_both = var(&both);
    assert!(
        v_both > 1.15 * v_diag,
        "var(diag + U) = {v_both} should exceed var(diag) = {v_diag} clearly"
    );
}
