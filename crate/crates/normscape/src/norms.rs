//! lp operator-norm estimation with value-reproducing certificates.
//!
//! The operator norm of an order-k tensor is the supremum of its
//! multilinear form over unit-lp-norm vectors, one per mode. Exact values
//! are available for order-1 tensors (the dual vector norm) and for
//! matrices at p = 2 (the largest singular value); everything else is
//! estimated by multistart alternating ascent. Each estimate carries the
//! certificate vectors attaining it, so every reported value is a
//! guaranteed lower bound on the true norm.
//!
//! Certificates lift along the refinement order: merging blocks of a
//! partition maps a certificate to a feasible point of the coarser problem
//! with the same value. Seeding every coarser ascent with the lifts of its
//! finer cover neighbors makes the whole-lattice landscape monotone along
//! cover edges by construction at p = 2.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::partitions::{cover_edges, enumerate_partitions, Partition, PartitionError};
use crate::scalar::{cast, Scalar};
use crate::tensor::{l2_norm, Tensor, TensorError};

/// Errors from norm estimation.
#[derive(Debug, Error)]
pub enum NormError {
    #[error("norm exponent p = {p} outside [1, inf]")]
    Exponent { p: f64 },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("warm-start lift requires {finer} to refine {coarser}")]
    Order { finer: String, coarser: String },
    #[error("certificate has {got} vectors, partition has {expected} blocks")]
    Certificate { expected: usize, got: usize },
}

/// How a [`NormEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    /// Order-1 dual-norm formula; exact.
    ExactVector,
    /// Largest singular value of a matrix at p = 2; exact.
    ExactMatrixSpectral,
    /// Best value over random multistart alternating ascent.
    AlternatingAscent,
    /// Alternating ascent whose winning start was a lifted certificate.
    WarmStarted,
}

impl EstimateMethod {
    /// True when the value equals the true norm up to rounding, rather
    /// than being a lower-bound estimate.
    pub fn is_exact(self) -> bool {
        matches!(self, EstimateMethod::ExactVector | EstimateMethod::ExactMatrixSpectral)
    }

    pub fn tag(self) -> &'static str {
        match self {
            EstimateMethod::ExactVector => "exact-vector",
            EstimateMethod::ExactMatrixSpectral => "exact-matrix-spectral",
            EstimateMethod::AlternatingAscent => "alternating-ascent",
            EstimateMethod::WarmStarted => "warm-started",
        }
    }
}

/// A certified operator-norm value: the certificate vectors are feasible
/// (unit lp norm per mode) and evaluating the multilinear form at them
/// reproduces `value`, so `value` never exceeds the true norm.
#[derive(Debug, Clone)]
pub struct NormEstimate<F> {
    pub value: F,
    pub p: f64,
    pub certificate: Vec<Vec<F>>,
    pub method: EstimateMethod,
    pub restarts: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// Multistart ascent parameters.
#[derive(Debug, Clone)]
pub struct AscentConfig {
    /// Random starts per estimate.
    pub restarts: usize,
    /// Iteration cap per start (one iteration = one full cycle of modes).
    pub max_iterations: usize,
    /// Relative-improvement stopping threshold.
    pub tolerance: f64,
    /// Master seed; sub-seeds are derived per partition and exponent.
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            restarts: 64,
            max_iterations: 500,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl AscentConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Validates a norm exponent: any real in [1, inf], infinity included.
pub fn check_exponent(p: f64) -> Result<(), NormError> {
    if p.is_nan() || p < 1.0 {
        return Err(NormError::Exponent { p });
    }
    Ok(())
}

/// Holder conjugate: 1/p + 1/q = 1, with 1 and infinity exchanged.
pub fn dual_exponent(p: f64) -> Result<f64, NormError> {
    check_exponent(p)?;
    if p == 1.0 {
        Ok(f64::INFINITY)
    } else if p.is_infinite() {
        Ok(1.0)
    } else {
        Ok(p / (p - 1.0))
    }
}

/// lp norm of a vector.
pub fn p_norm<F: Scalar>(xs: &[F], p: f64) -> F {
    if p.is_infinite() {
        xs.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
    } else if p == 2.0 {
        l2_norm(xs)
    } else if p == 1.0 {
        xs.iter().map(|&x| x.abs()).sum()
    } else {
        let pf = cast::<F>(p);
        xs.iter()
            .map(|&x| x.abs().powf(pf))
            .sum::<F>()
            .powf(pf.recip())
    }
}

fn sign_or_one<F: Scalar>(x: F) -> F {
    if x < F::zero() {
        -F::one()
    } else {
        F::one()
    }
}

fn basis_vector<F: Scalar>(len: usize, index: usize) -> Vec<F> {
    let mut e = vec![F::zero(); len];
    e[index] = F::one();
    e
}

/// Maximizer of `<c, x>` over the unit lp ball: returns the attained value
/// (the dual norm of `c`) and the maximizing unit-lp vector.
///
/// Ties at p = 1 resolve to the lowest index among maximal-magnitude
/// entries; zero entries at p = inf take sign +1. A zero coefficient vector
/// returns value 0 with a deterministic feasible certificate.
fn holder_maximizer<F: Scalar>(c: &[F], p: f64) -> (F, Vec<F>) {
    debug_assert!(!c.is_empty());
    if p == 1.0 {
        // Dual is the max norm; optimum sits on a signed basis vector.
        let mut best = 0usize;
        for (i, &v) in c.iter().enumerate() {
            if v.abs() > c[best].abs() {
                best = i;
            }
        }
        let value = c[best].abs();
        let mut x = basis_vector::<F>(c.len(), best);
        x[best] = sign_or_one(c[best]);
        return (value, x);
    }
    if p.is_infinite() {
        // Dual is the sum norm; optimum is the sign vector.
        let value = c.iter().map(|&v| v.abs()).sum();
        let x = c.iter().map(|&v| sign_or_one(v)).collect();
        return (value, x);
    }
    if p == 2.0 {
        let value = l2_norm(c);
        if value == F::zero() {
            return (F::zero(), basis_vector(c.len(), 0));
        }
        let x = c.iter().map(|&v| v / value).collect();
        return (value, x);
    }
    let q = p / (p - 1.0);
    let value = p_norm(c, q);
    if value == F::zero() {
        return (F::zero(), basis_vector(c.len(), 0));
    }
    let e = cast::<F>(q - 1.0);
    let x: Vec<F> = c
        .iter()
        .map(|&v| sign_or_one(v) * (v.abs() / value).powf(e))
        .collect();
    (value, x)
}

/// Exact operator norm of an order-1 tensor: the dual-norm value with its
/// Holder-equality certificate.
pub fn norm_order1<F: Scalar>(data: &[F], p: f64) -> Result<NormEstimate<F>, NormError> {
    check_exponent(p)?;
    assert!(!data.is_empty(), "order-1 tensor has at least one entry");
    let (value, x) = holder_maximizer(data, p);
    Ok(NormEstimate {
        value,
        p,
        certificate: vec![x],
        method: EstimateMethod::ExactVector,
        restarts: 0,
        converged: true,
        iterations: 0,
    })
}

// ---------------------------------------------------------------------------
// Exact matrix spectral norm via symmetric Jacobi on the Gram matrix.
// ---------------------------------------------------------------------------

/// Cyclic Jacobi eigen-solver for a symmetric n x n matrix (flat,
/// column-major). Returns the largest eigenvalue, its eigenvector, and the
/// number of sweeps used. Deterministic.
fn jacobi_eig_max<F: Scalar>(mut g: Vec<F>, n: usize) -> (F, Vec<F>, usize) {
    let mut v = vec![F::zero(); n * n];
    for i in 0..n {
        v[i + i * n] = F::one();
    }
    let norm0 = l2_norm(&g);
    let tol = F::epsilon() * norm0;
    let two = cast::<F>(2.0);
    let mut sweeps = 0usize;
    for _ in 0..60 {
        let mut off = F::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + g[p + q * n] * g[p + q * n];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = g[p + q * n];
                if apq == F::zero() {
                    continue;
                }
                let theta = (g[q + q * n] - g[p + p * n]) / (two * apq);
                let root = (theta * theta + F::one()).sqrt();
                let t = if theta >= F::zero() {
                    (theta + root).recip()
                } else {
                    (theta - root).recip()
                };
                let c = (t * t + F::one()).sqrt().recip();
                let s = t * c;
                for r in 0..n {
                    let grp = g[r + p * n];
                    let grq = g[r + q * n];
                    g[r + p * n] = c * grp - s * grq;
                    g[r + q * n] = s * grp + c * grq;
                }
                for r in 0..n {
                    let gpr = g[p + r * n];
                    let gqr = g[q + r * n];
                    g[p + r * n] = c * gpr - s * gqr;
                    g[q + r * n] = s * gpr + c * gqr;
                }
                for r in 0..n {
                    let vrp = v[r + p * n];
                    let vrq = v[r + q * n];
                    v[r + p * n] = c * vrp - s * vrq;
                    v[r + q * n] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut best = 0usize;
    for i in 1..n {
        if g[i + i * n] > g[best + best * n] {
            best = i;
        }
    }
    let vec: Vec<F> = (0..n).map(|r| v[r + best * n]).collect();
    (g[best + best * n], vec, sweeps)
}

fn normalize_l2<F: Scalar>(xs: &mut [F]) {
    let n = l2_norm(xs);
    if n > F::zero() {
        for x in xs.iter_mut() {
            *x = *x / n;
        }
    }
}

/// Exact spectral norm (p = 2) of a matrix: the largest singular value with
/// its leading singular pair as certificate. Deterministic for a fixed
/// input; the reported value is the certificate evaluation, so it is a
/// guaranteed lower bound within rounding of the true value.
pub fn matrix_spectral_exact<F: Scalar>(m: &Tensor<F>) -> Result<NormEstimate<F>, NormError> {
    if m.order() != 2 {
        return Err(NormError::Tensor(TensorError::Mismatch {
            context: format!("spectral norm needs a matrix, got order {}", m.order()),
        }));
    }
    let (rows, cols) = (m.dims()[0], m.dims()[1]);
    let data = m.data();
    let entry = |i: usize, j: usize| data[i + j * rows];
    let make_estimate = |value: F, u: Vec<F>, v: Vec<F>, sweeps: usize| NormEstimate {
        value,
        p: 2.0,
        certificate: vec![u, v],
        method: EstimateMethod::ExactMatrixSpectral,
        restarts: 0,
        converged: true,
        iterations: sweeps,
    };
    if m.frobenius() == F::zero() {
        return Ok(make_estimate(
            F::zero(),
            basis_vector(rows, 0),
            basis_vector(cols, 0),
            0,
        ));
    }
    let use_rows = rows <= cols;
    let n = rows.min(cols);
    let mut gram = vec![F::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = F::zero();
            if use_rows {
                for j in 0..cols {
                    acc = acc + entry(a, j) * entry(b, j);
                }
            } else {
                for i in 0..rows {
                    acc = acc + entry(i, a) * entry(i, b);
                }
            }
            gram[a + b * n] = acc;
        }
    }
    let (_, w, sweeps) = jacobi_eig_max(gram, n);
    let (mut u, mut v);
    if use_rows {
        u = w;
        normalize_l2(&mut u);
        v = (0..cols)
            .map(|j| (0..rows).map(|i| entry(i, j) * u[i]).sum())
            .collect::<Vec<F>>();
        normalize_l2(&mut v);
    } else {
        v = w;
        normalize_l2(&mut v);
        u = (0..rows)
            .map(|i| (0..cols).map(|j| entry(i, j) * v[j]).sum())
            .collect::<Vec<F>>();
        normalize_l2(&mut u);
    }
    let mut value = m.multilinear_apply(&[u.clone(), v.clone()])?;
    if value < F::zero() {
        for x in u.iter_mut() {
            *x = -*x;
        }
        value = -value;
    }
    Ok(make_estimate(value, u, v, sweeps))
}

// ---------------------------------------------------------------------------
// Alternating ascent.
// ---------------------------------------------------------------------------

/// One ascent run from a fixed starting certificate.
struct AscentRun<F> {
    certificate: Vec<Vec<F>>,
    iterations: usize,
    converged: bool,
    /// Objective value after each full mode cycle; nondecreasing.
    #[cfg_attr(not(test), allow(dead_code))]
    trace: Vec<F>,
}

fn ascent_single<F: Scalar>(
    a: &Tensor<F>,
    p: f64,
    mut xs: Vec<Vec<F>>,
    max_iterations: usize,
    tolerance: f64,
) -> AscentRun<F> {
    let k = a.order();
    let tol = cast::<F>(tolerance);
    let mut trace = Vec::new();
    let mut prev = a
        .multilinear_apply(&xs)
        .expect("start certificate matches dims");
    let mut converged = false;
    let mut iterations = 0usize;
    for _ in 0..max_iterations {
        iterations += 1;
        let mut cur = prev;
        for n in 0..k {
            // The one-mode subproblem is linear: contract every other mode,
            // then take the Holder-equality maximizer of the coefficients.
            let c = a.contract_all_but(&xs, n).expect("vectors match dims");
            let (value, x) = holder_maximizer(&c, p);
            xs[n] = x;
            cur = value;
        }
        debug_assert!(
            cur >= prev - tol.max(F::epsilon()) * (F::one() + cur.abs()),
            "ascent objective decreased"
        );
        trace.push(cur);
        if cur - prev <= tol * cur.abs().max(F::one()) && iterations > 1 {
            converged = true;
            break;
        }
        prev = cur;
    }
    AscentRun {
        certificate: xs,
        iterations,
        converged,
        trace,
    }
}

fn random_start<F: Scalar, R: Rng>(dims: &[usize], p: f64, rng: &mut R) -> Vec<Vec<F>> {
    dims.iter()
        .map(|&d| {
            let mut x: Vec<F> = (0..d)
                .map(|_| cast::<F>(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let norm = p_norm(&x, p);
            if norm == F::zero() {
                return basis_vector(d, 0);
            }
            for v in x.iter_mut() {
                *v = *v / norm;
            }
            x
        })
        .collect()
}

/// Deterministic feasible certificate for degenerate cases.
fn fallback_certificate<F: Scalar>(dims: &[usize], p: f64) -> Vec<Vec<F>> {
    dims.iter()
        .map(|&d| {
            if p.is_infinite() {
                vec![F::one(); d]
            } else {
                basis_vector(d, 0)
            }
        })
        .collect()
}

/// Multistart alternating ascent for the lp operator norm.
///
/// Cyclically fixes all modes but one and solves the linear one-mode
/// subproblem exactly; the per-iteration value sequence is nondecreasing.
/// Runs `config.restarts` random starts (standard normal entries,
/// p-normalized) and returns the best, re-evaluating the winning
/// certificate so the reported value is exactly what the certificate
/// attains. The value is a certified lower bound and may under-estimate
/// the supremum. An identically zero tensor yields value 0 with a feasible
/// certificate and `converged` set.
pub fn alternating_ascent<F: Scalar>(
    a: &Tensor<F>,
    p: f64,
    config: &AscentConfig,
) -> Result<NormEstimate<F>, NormError> {
    alternating_ascent_seeded(a, p, config, &[])
}

/// [`alternating_ascent`] with extra starting certificates (warm starts)
/// tried before the random starts. The winner decides the method tag.
pub fn alternating_ascent_seeded<F: Scalar>(
    a: &Tensor<F>,
    p: f64,
    config: &AscentConfig,
    extra_starts: &[Vec<Vec<F>>],
) -> Result<NormEstimate<F>, NormError> {
    check_exponent(p)?;
    if a.data().iter().all(|&x| x == F::zero()) {
        return Ok(NormEstimate {
            value: F::zero(),
            p,
            certificate: fallback_certificate(a.dims(), p),
            method: EstimateMethod::AlternatingAscent,
            restarts: 0,
            converged: true,
            iterations: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(F, Vec<Vec<F>>, bool, usize)> = None;
    let mut total_iterations = 0usize;
    let total_starts = extra_starts.len() + config.restarts;
    for index in 0..total_starts {
        let start = if index < extra_starts.len() {
            extra_starts[index].clone()
        } else {
            random_start(a.dims(), p, &mut rng)
        };
        let run = ascent_single(a, p, start, config.max_iterations, config.tolerance);
        total_iterations += run.iterations;
        // Re-evaluate so value and certificate agree bit-for-bit.
        let mut value = a.multilinear_apply(&run.certificate)?;
        let mut certificate = run.certificate;
        if value < F::zero() {
            // Negating one mode vector is always feasible.
            for x in certificate[0].iter_mut() {
                *x = -*x;
            }
            value = -value;
        }
        let replace = match &best {
            None => true,
            Some((bv, ..)) => value > *bv,
        };
        if replace {
            best = Some((value, certificate, run.converged, index));
        }
    }
    let (value, certificate, converged, winner) =
        best.unwrap_or((F::zero(), fallback_certificate(a.dims(), p), true, 0));
    let method = if winner < extra_starts.len() {
        EstimateMethod::WarmStarted
    } else {
        EstimateMethod::AlternatingAscent
    };
    Ok(NormEstimate {
        value,
        p,
        certificate,
        method,
        restarts: total_starts,
        converged,
        iterations: total_iterations,
    })
}

// ---------------------------------------------------------------------------
// Warm-start lifting along the refinement order.
// ---------------------------------------------------------------------------

/// Maps a certificate for the `finer` unfolding to one for the `coarser`
/// unfolding of the same tensor (`finer <= coarser` required, l2 case).
///
/// Each coarser block merges a set of finer blocks; the lifted vector is
/// the vectorized tensor product of their certificate vectors, laid out in
/// the unfolding's index convention. The lift is unit-norm and attains
/// exactly the same multilinear value, which is what makes warm-started
/// landscapes monotone along cover edges.
pub fn warm_start_lift<F: Scalar>(
    certificate: &[Vec<F>],
    dims: &[usize],
    finer: &Partition,
    coarser: &Partition,
) -> Result<Vec<Vec<F>>, NormError> {
    if !finer.is_refinement(coarser)? {
        return Err(NormError::Order {
            finer: finer.to_string(),
            coarser: coarser.to_string(),
        });
    }
    if certificate.len() != finer.level() {
        return Err(NormError::Certificate {
            expected: finer.level(),
            got: certificate.len(),
        });
    }
    for (j, block) in finer.blocks().iter().enumerate() {
        let expected: usize = block.iter().map(|&r| dims[r - 1]).product();
        if certificate[j].len() != expected {
            return Err(NormError::Certificate {
                expected,
                got: certificate[j].len(),
            });
        }
    }
    let mut lifted = Vec::with_capacity(coarser.level());
    for target in coarser.blocks() {
        // Finer blocks merged into this target block, in canonical order.
        let members: Vec<usize> = finer
            .blocks()
            .iter()
            .enumerate()
            .filter(|(_, b)| coarser.block_of(b[0]) == coarser.block_of(target[0]))
            .map(|(j, _)| j)
            .collect();
        let len: usize = target.iter().map(|&r| dims[r - 1]).product();
        let mut index_by_mode = vec![0usize; dims.len()];
        let mut y = Vec::with_capacity(len);
        for pos in 0..len {
            let mut rem = pos;
            for &r in target {
                index_by_mode[r - 1] = rem % dims[r - 1];
                rem /= dims[r - 1];
            }
            let mut prod = F::one();
            for &j in &members {
                let mut offset = 0usize;
                let mut stride = 1usize;
                for &r in &finer.blocks()[j] {
                    offset += index_by_mode[r - 1] * stride;
                    stride *= dims[r - 1];
                }
                prod = prod * certificate[j][offset];
            }
            y.push(prod);
        }
        normalize_l2(&mut y);
        lifted.push(y);
    }
    Ok(lifted)
}

// ---------------------------------------------------------------------------
// Whole-lattice landscapes.
// ---------------------------------------------------------------------------

/// Norm estimates for every partition of the mode set.
pub type Landscape<F> = BTreeMap<Partition, NormEstimate<F>>;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stable sub-seed derivation: mixes the master seed with a textual tag so
/// per-partition streams are independent of evaluation order.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in tag.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(master ^ h)
}

/// Estimate for a single unfolding: exact for order-1 (any p) and for
/// matrices at p = 2, alternating ascent otherwise, with `extra_starts`
/// passed through as warm starts. The random stream is derived from the
/// partition and exponent, so the same configuration reproduces the same
/// estimate regardless of what else was computed.
pub fn estimate_unfolding<F: Scalar>(
    a: &Tensor<F>,
    partition: &Partition,
    p: f64,
    config: &AscentConfig,
    extra_starts: &[Vec<Vec<F>>],
) -> Result<NormEstimate<F>, NormError> {
    check_exponent(p)?;
    let unfolded = a.unfold(partition)?;
    if unfolded.order() == 1 {
        return norm_order1(unfolded.data(), p);
    }
    if unfolded.order() == 2 && p == 2.0 {
        return matrix_spectral_exact(&unfolded);
    }
    let sub = AscentConfig {
        seed: derive_seed(config.seed, &format!("{partition}#p={p}")),
        ..config.clone()
    };
    alternating_ascent_seeded(&unfolded, p, &sub, extra_starts)
}

/// Computes the norm landscape: one estimate per partition of the mode
/// set, processed level by level from the all-singletons partition upward.
/// At p = 2, each coarser ascent is additionally seeded with the lifted
/// certificates of all its finer cover neighbors, so estimates are
/// monotone along cover edges by construction. The single-block estimate
/// is the exact Frobenius norm at p = 2 (the dual-norm value in general).
pub fn landscape<F: Scalar>(
    a: &Tensor<F>,
    p: f64,
    config: &AscentConfig,
) -> Result<Landscape<F>, NormError> {
    check_exponent(p)?;
    let k = a.order();
    let partitions = enumerate_partitions(k)?;
    let mut finer_neighbors: BTreeMap<&Partition, Vec<Partition>> =
        partitions.iter().map(|p| (p, Vec::new())).collect();
    if p == 2.0 {
        for (finer, coarser) in cover_edges(k)? {
            finer_neighbors
                .get_mut(&coarser)
                .expect("edge endpoint enumerated")
                .push(finer);
        }
    }
    let mut result: Landscape<F> = BTreeMap::new();
    for level in (1..=k).rev() {
        for partition in partitions.iter().filter(|p| p.level() == level) {
            let mut seeds = Vec::new();
            for finer in &finer_neighbors[partition] {
                let cert = &result
                    .get(finer)
                    .expect("finer level already estimated")
                    .certificate;
                seeds.push(warm_start_lift(cert, a.dims(), finer, partition)?);
            }
            let estimate = estimate_unfolding(a, partition, p, config, &seeds)?;
            result.insert(partition.clone(), estimate);
        }
    }
    Ok(result)
}
