//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (the harness itself reports failures per criterion).
//!
//! Run with `cargo test -p normscape --test acceptance -- --nocapture`.

use std::time::Instant;

use normscape::bounds::{audit_main_theorem, audit_one_step, audit_pq_sandwich, dim_map};
use normscape::norms::{
    alternating_ascent, estimate_unfolding, landscape, matrix_spectral_exact, AscentConfig,
};
use normscape::odeco::{
    check_spectral_is_lambda1, check_upper_cone_equality, generate_pi_od, OdecoFactors,
};
use normscape::{cover_edges, enumerate_partitions, Partition, Tensor64};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> Tensor64 {
    let n: usize = dims.iter().product();
    let data = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor64::new(dims.to_vec(), data).unwrap()
}

/// Order-4 tensor with entries delta(i1,i2) * delta(i3,i4): the outer
/// product of two d x d identity matrices.
fn identity_kron(d: usize) -> Tensor64 {
    let mut data = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            data[i + i * d + j * d * d + j * d * d * d] = 1.0;
        }
    }
    Tensor64::new(vec![d, d, d, d], data).unwrap()
}

/// Spectral norm of an unfolding of identity_kron(d): d^(m/2) where m
/// counts the identity-factor mode pairs {1,2} and {3,4} contained in a
/// single block. Rank-one structure splits across blocks that mix the
/// pairs, and a fully merged pair contributes the norm of a vectorized
/// identity, sqrt(d).
fn identity_kron_expected(pi: &Partition, d: usize) -> f64 {
    let pairs = [[1usize, 2], [3, 4]];
    let contained = pairs
        .iter()
        .filter(|pair| {
            pi.blocks()
                .iter()
                .any(|block| pair.iter().all(|m| block.contains(m)))
        })
        .count();
    (d as f64).powf(contained as f64 / 2.0)
}

#[test]
fn acceptance_01_identity_kron_landscape() {
    let start = Instant::now();
    let config = AscentConfig::default();
    for d in [2usize, 3] {
        let a = identity_kron(d);
        let scape = landscape(&a, 2.0, &config).unwrap();
        assert_eq!(scape.len(), 15);
        for (pi, est) in &scape {
            let expected = identity_kron_expected(pi, d);
            let rel = (est.value - expected).abs() / expected;
            assert!(
                rel <= 1e-6,
                "d={d} {pi}: estimate {} vs expected {expected} (rel {rel:.2e})",
                est.value
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "landscapes took {elapsed:?}");
    println!("acceptance 01 (identity-kron landscape, d in {{2,3}}): PASS ({elapsed:?})");
}

#[test]
fn acceptance_02_bilinear_l1_norm_of_example_matrix() {
    let m = Tensor64::new(vec![2, 2], vec![1.0, 0.0, 1.0, 4.0]).unwrap();
    let est = alternating_ascent(&m, 1.0, &AscentConfig::default()).unwrap();
    assert!((est.value - 4.0).abs() <= 1e-9, "got {}", est.value);

    // Foil values computed independently here: the classical operator
    // 1-norm (max column absolute sum) and the entrywise 1-norm.
    let entry = |i: usize, j: usize| m.data()[i + 2 * j];
    let classical = (0..2)
        .map(|j| (0..2).map(|i| entry(i, j).abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let entrywise: f64 = m.data().iter().map(|x| x.abs()).sum();
    assert_eq!(classical, 5.0);
    assert_eq!(entrywise, 6.0);
    assert!((est.value - classical).abs() > 0.5);
    assert!((est.value - entrywise).abs() > 0.5);
    println!("acceptance 02 (bilinear l1 norm 4, distinct from 5 and 6): PASS");
}

#[test]
fn acceptance_03_invariance_under_all_unfoldings() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let dims = [2usize, 3, 2, 3];
    let tensors: Vec<Tensor64> = (0..100).map(|_| random_tensor(&dims, &mut rng)).collect();
    let partitions = enumerate_partitions(4).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    for t in &tensors {
        let frob = t.frobenius();
        for pi in &partitions {
            let u = t.unfold(pi).unwrap();
            assert!(close(u.frobenius(), frob), "frobenius drift under {pi}");
        }
    }
    for (i, a) in tensors.iter().enumerate() {
        for b in tensors.iter().skip(i + 1) {
            let reference = a.inner_product(b).unwrap();
            for pi in &partitions {
                let ua = a.unfold(pi).unwrap();
                let ub = b.unfold(pi).unwrap();
                let got = ua.inner_product(&ub).unwrap();
                assert!(close(got, reference), "inner product drift under {pi}");
            }
        }
    }
    println!("acceptance 03 (Frobenius/inner-product invariance, 100 tensors x 15 unfoldings): PASS");
}

#[test]
fn acceptance_04_ascent_matches_exact_singular_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let config = AscentConfig {
        restarts: 64,
        ..AscentConfig::default()
    };
    for case in 0..100 {
        let rows = rng.gen_range(2..=8);
        let cols = rng.gen_range(2..=8);
        let m = random_tensor(&[rows, cols], &mut rng);
        let exact = matrix_spectral_exact(&m).unwrap().value;
        let est = alternating_ascent(&m, 2.0, &config.clone().with_seed(9000 + case))
            .unwrap()
            .value;
        let rel = (est - exact).abs() / exact.max(1e-300);
        assert!(rel <= 1e-8, "case {case} ({rows}x{cols}): rel error {rel:.2e}");
    }
    println!("acceptance 04 (alternating ascent vs exact singular value, 100 matrices): PASS");
}

#[test]
fn acceptance_05_landscape_monotone_by_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let config = AscentConfig {
        restarts: 8,
        ..AscentConfig::default()
    };
    let edges = cover_edges(4).unwrap();
    let top = Partition::coarsest(4);
    for case in 0..100 {
        let dims: Vec<usize> = (0..4).map(|_| rng.gen_range(2..=3)).collect();
        let a = random_tensor(&dims, &mut rng);
        let scape = landscape(&a, 2.0, &config.clone().with_seed(case)).unwrap();
        for (finer, coarser) in &edges {
            let lo = scape[finer].value;
            let hi = scape[coarser].value;
            assert!(
                lo <= hi + 1e-12,
                "case {case}: violation {finer} ({lo}) -> {coarser} ({hi})"
            );
        }
        assert_eq!(scape[&top].value, a.frobenius(), "case {case}");
    }
    println!("acceptance 05 (zero cover-edge violations over 100 order-4 tensors): PASS");
}

#[test]
fn acceptance_06_one_step_sharpness_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let config = AscentConfig::default();
    for d1 in [2usize, 3] {
        let d2 = d1 + 1;
        let d = random_tensor(&[2, 2], &mut rng);
        // B = (sum_{i<=d1} e_{1,i} (x) e_{2,i}) (x) D.
        let mut data = vec![0.0; d1 * d2 * 4];
        for i in 0..d1 {
            for (s, &v) in d.data().iter().enumerate() {
                data[i + i * d1 + s * d1 * d2] = v;
            }
        }
        let b = Tensor64::new(vec![d1, d2, 2, 2], data).unwrap();
        let report = audit_one_step(&b, &Partition::finest(4), 0, 1, &config).unwrap();
        assert!(report.passed, "{report:?}");
        let ratio = report.lhs / report.rhs; // |C| / |B|
        let rel = (ratio - (d1 as f64).sqrt()).abs() / (d1 as f64).sqrt();
        assert!(rel <= 1e-6, "d1={d1}: ratio {ratio} (rel {rel:.2e})");
    }
    println!("acceptance 06 (one-step lower bound saturated at sqrt(d1)): PASS");
}

#[test]
fn acceptance_07_factor_saturation_on_identity_kron() {
    let config = AscentConfig::default();
    let pair: Partition = "1,2|3,4".parse().unwrap();
    let finest = Partition::finest(4);
    for d in [2usize, 3] {
        let a = identity_kron(d);
        // Lower bound attained: d^{-1} * |U_pair| = |U_finest|.
        let report = audit_main_theorem(&a, &pair, &finest, &config).unwrap();
        assert!(report.passed, "{report:?}");
        let lf = report.lower_factor.unwrap();
        assert!((lf - 1.0 / d as f64).abs() < 1e-15);
        let gap = (report.rhs - lf * report.lhs).abs();
        assert!(gap <= 1e-8 * report.rhs.max(1.0), "d={d}: lower gap {gap:.2e}");
        // Upper bound attained with swapped arguments: |U_pair| = d * |U_finest|.
        let report = audit_main_theorem(&a, &finest, &pair, &config).unwrap();
        assert!(report.passed, "{report:?}");
        let uf = report.upper_factor.unwrap();
        assert!((uf - d as f64).abs() < 1e-15);
        let gap = (uf * report.lhs - report.rhs).abs();
        assert!(gap <= 1e-8 * report.rhs.max(1.0), "d={d}: upper gap {gap:.2e}");
    }
    println!("acceptance 07 (two-sided factor saturation on identity-kron): PASS");
}

#[test]
fn acceptance_08_overlap_dimension_arithmetic() {
    let pi1: Partition = "1,2|3,4".parse().unwrap();
    let pi2: Partition = "1,2,3|4".parse().unwrap();
    assert_eq!(dim_map(&[2, 3, 4, 5], &pi1, &pi2).unwrap(), 30);
    assert_eq!(dim_map(&[2, 3, 4, 5], &pi2, &pi1).unwrap(), 30);
    assert_eq!(dim_map(&[2, 3, 5, 4], &pi1, &pi2).unwrap(), 30);
    assert_eq!(dim_map(&[2, 3, 5, 4], &pi2, &pi1).unwrap(), 24);
    println!("acceptance 08 (overlap dimension arithmetic, exact integers): PASS");
}

#[test]
fn acceptance_09_block_orthogonal_upper_cones() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let config = AscentConfig {
        restarts: 8,
        ..AscentConfig::default()
    };
    for case in 0..50u64 {
        let k = if rng.gen_bool(0.5) { 3 } else { 4 };
        let dims: Vec<usize> = (0..k).map(|_| rng.gen_range(2..=4)).collect();
        let partitions = enumerate_partitions(k).unwrap();
        let pi = loop {
            let candidate = &partitions[rng.gen_range(0..partitions.len())];
            if !candidate.is_coarsest() {
                break candidate.clone();
            }
        };
        let feasible = pi
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&m| dims[m - 1]).max().unwrap())
            .min()
            .unwrap();
        let r = rng.gen_range(1..=feasible.min(3));
        let mut lambdas = vec![1.0; r];
        lambdas[0] = 2.0;
        let f = generate_pi_od::<f64>(&dims, &pi, r, lambdas.clone(), 7000 + case).unwrap();
        let reports = check_upper_cone_equality(&f, &pi, &config.clone().with_seed(case)).unwrap();
        for report in reports.iter().filter(|r| r.name == "od-upper-cone") {
            assert!(report.passed, "case {case}: {report:?}");
            let rel = (report.rhs - 2.0).abs() / 2.0;
            assert!(rel <= 1e-5, "case {case} {}: rel {rel:.2e}", report.instance);
        }
        // Vectorization: exact Frobenius, equal to sqrt(sum of weights^2).
        let tensor = f.compose();
        let top = estimate_unfolding(&tensor, &Partition::coarsest(k), 2.0, &config, &[]).unwrap();
        assert_eq!(top.value, tensor.frobenius());
        let expected: f64 = lambdas.iter().map(|l| l * l).sum::<f64>().sqrt();
        assert!((top.value - expected).abs() <= 1e-10 * expected);
    }

    // Weight pair (2, 1) on a 2 x 2 matrix. The orthodiagonal realization
    // reports the top weight 2 at the identity unfolding and sqrt(5) at
    // the vectorization.
    let e = |i: usize| vec![if i == 0 { 1.0 } else { 0.0 }, if i == 1 { 1.0 } else { 0.0 }];
    let diag = OdecoFactors::new(
        vec![2, 2],
        Partition::finest(2),
        vec![2.0, 1.0],
        vec![vec![e(0), e(0)], vec![e(1), e(1)]],
    )
    .unwrap();
    let report =
        check_spectral_is_lambda1(&diag, &Partition::finest(2), &AscentConfig::default()).unwrap();
    assert!(report.passed, "{report:?}");
    assert!((report.rhs - 2.0).abs() <= 1e-8);
    let top = matrix_spectral_exact(&diag.compose().unfold(&Partition::coarsest(2)).unwrap());
    assert!(top.is_err()); // vectorization is order 1, not a matrix
    let frob = diag.compose().frobenius();
    assert!((frob - 5f64.sqrt()).abs() <= 1e-12);

    // The matrix 2 e1 (x) e1 + e1 (x) e2 is block-orthogonal only for the
    // single-block partition: the equality check refuses it there, and its
    // vectorization norm is sqrt(5) rather than the top weight.
    let skew = OdecoFactors::new(
        vec![2, 2],
        Partition::coarsest(2),
        vec![2.0, 1.0],
        vec![vec![e(0), e(0)], vec![e(0), e(1)]],
    )
    .unwrap();
    assert!(skew.verify(&Partition::coarsest(2), 1e-12).unwrap());
    assert!(!skew.verify(&Partition::finest(2), 1e-6).unwrap());
    let err = check_spectral_is_lambda1(&skew, &Partition::coarsest(2), &AscentConfig::default());
    assert!(err.is_err());
    let vec_norm = estimate_unfolding(
        &skew.compose(),
        &Partition::coarsest(2),
        2.0,
        &AscentConfig::default(),
        &[],
    )
    .unwrap();
    assert!((vec_norm.value - 5f64.sqrt()).abs() <= 1e-12);
    println!("acceptance 09 (upper-cone equality over 50 seeded factor bundles): PASS");
}

#[test]
fn acceptance_10_pq_sandwich_small_tensors() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let config = AscentConfig {
        restarts: 64,
        ..AscentConfig::default()
    };
    for case in 0..100u64 {
        let a = random_tensor(&[2, 2, 2], &mut rng);
        for (p, q) in [(1.0, 2.0), (2.0, f64::INFINITY)] {
            let report = audit_pq_sandwich(&a, p, q, &config.clone().with_seed(case)).unwrap();
            assert!(report.passed, "case {case} ({p},{q}): {report:?}");
        }
    }
    println!("acceptance 10 (p-q sandwich, 100 tensors x 2 exponent pairs): PASS");
}
