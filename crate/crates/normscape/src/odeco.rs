//! Blockwise orthogonally decomposable tensors.
//!
//! A tensor is block-orthogonal for a partition when it is a weighted sum
//! of rank-1 terms whose per-block Kronecker vectors are orthonormal
//! across terms. For such tensors the spectral norm of every unfolding in
//! the partition's upper cone (everything coarser, vectorization excluded)
//! equals the top weight, and this module constructs, verifies, and
//! audits exactly that.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::InequalityReport;
use crate::norms::{estimate_unfolding, AscentConfig, NormError};
use crate::partitions::{Partition, PartitionError};
use crate::scalar::{cast, to_f64, Scalar};
use crate::tensor::{l2_norm, outer_rank1, Tensor, TensorError};

/// Verification tolerance for factors built by the generators here.
pub const CONSTRUCTED_TOL: f64 = 1e-10;
/// Verification tolerance for externally loaded factors.
pub const EXTERNAL_TOL: f64 = 1e-6;
/// Relative tolerance on the norm-equality checks.
pub const EQUALITY_TOL: f64 = 1e-6;

/// Errors from factor construction and the block-orthogonality checks.
#[derive(Debug, Error)]
pub enum OdecoError {
    #[error("rank {r} exceeds the largest mode size {max_dim} in block {block}")]
    Rank {
        r: usize,
        block: String,
        max_dim: usize,
    },
    #[error("invalid weights: {0}")]
    Lambdas(String),
    #[error("shape mismatch: {context}")]
    Mismatch { context: String },
    #[error("the norm equality fails at the single-block partition; use a strictly finer one")]
    TopPartition,
    #[error("factors are not block-orthogonal for {partition} at tolerance {tol}")]
    NotBlockOrthogonal { partition: String, tol: f64 },
    #[error("cannot parse factors JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn mismatch(context: impl Into<String>) -> OdecoError {
    OdecoError::Mismatch {
        context: context.into(),
    }
}

/// Weighted rank-1 factors realizing a block-orthogonal decomposition:
/// weights sorted nonincreasing, and for every block of the partition the
/// Gram matrix of the per-term block Kronecker vectors is the identity.
#[derive(Debug, Clone)]
pub struct OdecoFactors<F> {
    dims: Vec<usize>,
    partition: Partition,
    lambdas: Vec<F>,
    /// `factors[term][mode]` is the mode vector of one rank-1 term.
    factors: Vec<Vec<Vec<F>>>,
}

#[derive(Serialize, Deserialize)]
struct OdecoFile<F> {
    dims: Vec<usize>,
    partition: String,
    lambdas: Vec<F>,
    factors: Vec<Vec<Vec<F>>>,
}

impl<F: Scalar> OdecoFactors<F> {
    /// Validates shapes and weight ordering. Block orthogonality is not
    /// enforced here; call [`OdecoFactors::verify`].
    pub fn new(
        dims: Vec<usize>,
        partition: Partition,
        lambdas: Vec<F>,
        factors: Vec<Vec<Vec<F>>>,
    ) -> Result<Self, OdecoError> {
        if partition.k() != dims.len() {
            return Err(mismatch(format!(
                "partition of {} modes with {} dims",
                partition.k(),
                dims.len()
            )));
        }
        if lambdas.is_empty() {
            return Err(OdecoError::Lambdas("no weights".into()));
        }
        for pair in lambdas.windows(2) {
            if pair[1] > pair[0] {
                return Err(OdecoError::Lambdas("not sorted nonincreasing".into()));
            }
        }
        if lambdas.iter().any(|&l| l < F::zero() || !l.is_finite()) {
            return Err(OdecoError::Lambdas("negative or non-finite weight".into()));
        }
        if factors.len() != lambdas.len() {
            return Err(mismatch(format!(
                "{} weights but {} factor terms",
                lambdas.len(),
                factors.len()
            )));
        }
        for (n, term) in factors.iter().enumerate() {
            if term.len() != dims.len() {
                return Err(mismatch(format!(
                    "term {} has {} mode vectors, expected {}",
                    n + 1,
                    term.len(),
                    dims.len()
                )));
            }
            for (i, (vector, &d)) in term.iter().zip(&dims).enumerate() {
                if vector.len() != d {
                    return Err(mismatch(format!(
                        "term {} mode {} vector has length {}, dim is {}",
                        n + 1,
                        i + 1,
                        vector.len(),
                        d
                    )));
                }
                if vector.iter().any(|x| !x.is_finite()) {
                    return Err(mismatch(format!(
                        "term {} mode {} vector has a non-finite entry",
                        n + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(OdecoFactors {
            dims,
            partition,
            lambdas,
            factors,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn lambdas(&self) -> &[F] {
        &self.lambdas
    }

    pub fn factors(&self) -> &[Vec<Vec<F>>] {
        &self.factors
    }

    /// Number of rank-1 terms.
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// The summed rank-1 expansion. For block-orthogonal factors the terms
    /// are mutually orthogonal, so the Frobenius norm equals
    /// `sqrt(sum of squared weights)`.
    pub fn compose(&self) -> Tensor<F> {
        let mut out = Tensor::zeros(self.dims.clone());
        for (lambda, term) in self.lambdas.iter().zip(&self.factors) {
            let rank1 = outer_rank1(term).expect("validated factor shapes");
            out = out.add(&rank1.scale(*lambda)).expect("matching dims");
        }
        out
    }

    /// True iff for every block of `partition` the Gram matrix of the
    /// per-term block Kronecker vectors is the identity within `tol`
    /// (entrywise). Uses the product factorization of block inner
    /// products, so no Kronecker vector is materialized.
    pub fn verify(&self, partition: &Partition, tol: f64) -> Result<bool, OdecoError> {
        if partition.k() != self.dims.len() {
            return Err(mismatch(format!(
                "partition of {} modes checked against {} dims",
                partition.k(),
                self.dims.len()
            )));
        }
        let tol = cast::<F>(tol);
        let r = self.rank();
        for block in partition.blocks() {
            for n in 0..r {
                for m in n..r {
                    let mut g = F::one();
                    for &mode in block {
                        let dot: F = self.factors[n][mode - 1]
                            .iter()
                            .zip(&self.factors[m][mode - 1])
                            .map(|(&a, &b)| a * b)
                            .sum();
                        g = g * dot;
                    }
                    let target = if n == m { F::one() } else { F::zero() };
                    if (g - target).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Unit block Kronecker vector of one term for one block, laid out in
    /// the unfolding index convention (earliest in-block mode fastest).
    fn block_vector(&self, term: usize, block: &[usize]) -> Vec<F> {
        let mut data = vec![F::one()];
        for &mode in block {
            let x = &self.factors[term][mode - 1];
            let mut next = Vec::with_capacity(data.len() * x.len());
            for &v in x {
                for &prev in &data {
                    next.push(prev * v);
                }
            }
            data = next;
        }
        let norm = l2_norm(&data);
        if norm > F::zero() {
            for v in data.iter_mut() {
                *v = *v / norm;
            }
        }
        data
    }

    /// The top-term certificate for the unfolding of `partition`: one unit
    /// block Kronecker vector per block, built from the first term.
    pub fn top_certificate(&self, partition: &Partition) -> Vec<Vec<F>> {
        partition
            .blocks()
            .iter()
            .map(|block| self.block_vector(0, block))
            .collect()
    }
}

impl<F: Scalar + Serialize> OdecoFactors<F> {
    /// Serializes to `{"dims": .., "partition": "..", "lambdas": ..,
    /// "factors": [[mode vectors] per term]}`.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&OdecoFile {
            dims: self.dims.clone(),
            partition: self.partition.to_string(),
            lambdas: self.lambdas.clone(),
            factors: self.factors.clone(),
        })
        .expect("factors serialize")
    }
}

impl<F: Scalar + DeserializeOwned> OdecoFactors<F> {
    pub fn from_json_str(s: &str) -> Result<Self, OdecoError> {
        let file: OdecoFile<F> =
            serde_json::from_str(s).map_err(|e| OdecoError::Json(e.to_string()))?;
        let partition: Partition = file
            .partition
            .parse()
            .map_err(|e: PartitionError| OdecoError::Json(e.to_string()))?;
        OdecoFactors::new(file.dims, partition, file.lambdas, file.factors)
    }
}

fn random_unit<F: Scalar>(d: usize, rng: &mut ChaCha8Rng) -> Vec<F> {
    loop {
        let mut v: Vec<F> = (0..d)
            .map(|_| cast::<F>(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let norm = l2_norm(&v);
        if norm > cast(1e-6) {
            for x in v.iter_mut() {
                *x = *x / norm;
            }
            return v;
        }
    }
}

/// First `r` columns of a random orthogonal matrix: Gaussian columns under
/// modified Gram-Schmidt, re-orthogonalized once.
fn orthonormal_columns<F: Scalar>(d: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<F>> {
    let mut columns: Vec<Vec<F>> = Vec::with_capacity(r);
    while columns.len() < r {
        let mut v: Vec<F> = (0..d)
            .map(|_| cast::<F>(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        for _ in 0..2 {
            for u in &columns {
                let dot: F = u.iter().zip(&v).map(|(&a, &b)| a * b).sum();
                for (x, &ui) in v.iter_mut().zip(u) {
                    *x = *x - dot * ui;
                }
            }
        }
        let norm = l2_norm(&v);
        if norm < cast(1e-6) {
            continue; // resample a degenerate draw
        }
        for x in v.iter_mut() {
            *x = *x / norm;
        }
        columns.push(v);
    }
    columns
}

fn generate_with<F: Scalar>(
    dims: &[usize],
    partition: &Partition,
    r: usize,
    lambdas: Vec<F>,
    seed: u64,
    per_term_companions: bool,
) -> Result<OdecoFactors<F>, OdecoError> {
    if partition.k() != dims.len() {
        return Err(mismatch(format!(
            "partition of {} modes with {} dims",
            partition.k(),
            dims.len()
        )));
    }
    if lambdas.len() != r {
        return Err(OdecoError::Lambdas(format!(
            "rank {r} with {} weights",
            lambdas.len()
        )));
    }
    if r == 0 {
        return Err(OdecoError::Lambdas("rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_mode: Vec<Vec<Vec<F>>> = vec![Vec::new(); dims.len()];
    for block in partition.blocks() {
        // The largest-dimension mode of the block carries the orthonormal
        // family; block inner products then factor as delta * 1 * .. * 1.
        let designated = *block
            .iter()
            .max_by_key(|&&mode| dims[mode - 1])
            .expect("nonempty block");
        let max_dim = dims[designated - 1];
        if r > max_dim {
            return Err(OdecoError::Rank {
                r,
                block: format!(
                    "{}",
                    block
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                max_dim,
            });
        }
        per_mode[designated - 1] = orthonormal_columns(max_dim, r, &mut rng);
        for &mode in block {
            if mode == designated {
                continue;
            }
            if per_term_companions {
                per_mode[mode - 1] = (0..r).map(|_| random_unit(dims[mode - 1], &mut rng)).collect();
            } else {
                let shared = random_unit(dims[mode - 1], &mut rng);
                per_mode[mode - 1] = vec![shared; r];
            }
        }
    }
    let factors: Vec<Vec<Vec<F>>> = (0..r)
        .map(|n| per_mode.iter().map(|vectors| vectors[n].clone()).collect())
        .collect();
    OdecoFactors::new(dims.to_vec(), partition.clone(), lambdas, factors)
}

/// Seeded random block-orthogonal factors: per block, the largest mode
/// carries the first `r` columns of a random orthogonal matrix and every
/// other in-block mode repeats a single random unit vector across terms.
/// The result verifies at [`CONSTRUCTED_TOL`].
pub fn generate_pi_od<F: Scalar>(
    dims: &[usize],
    partition: &Partition,
    r: usize,
    lambdas: Vec<F>,
    seed: u64,
) -> Result<OdecoFactors<F>, OdecoError> {
    generate_with(dims, partition, r, lambdas, seed, false)
}

/// Variant of [`generate_pi_od`] whose non-designated in-block modes take
/// independent random unit vectors per term; orthogonality is still
/// carried by the designated mode, but the companion geometry is no
/// longer aligned across terms.
pub fn generate_pi_od_varied<F: Scalar>(
    dims: &[usize],
    partition: &Partition,
    r: usize,
    lambdas: Vec<F>,
    seed: u64,
) -> Result<OdecoFactors<F>, OdecoError> {
    generate_with(dims, partition, r, lambdas, seed, true)
}

fn require_block_orthogonal<F: Scalar>(
    f: &OdecoFactors<F>,
    partition: &Partition,
    tol: f64,
) -> Result<(), OdecoError> {
    if !f.verify(partition, tol)? {
        return Err(OdecoError::NotBlockOrthogonal {
            partition: partition.to_string(),
            tol,
        });
    }
    Ok(())
}

/// Checks that the spectral norm of the unfolding at `partition` equals
/// the top weight. The top-term certificate is injected as a warm start,
/// so the estimate is at least the top weight by construction; exceeding
/// it materially indicates a bug in the unfolding or the estimator.
/// Rejects the single-block partition, where the equality fails.
pub fn check_spectral_is_lambda1<F: Scalar>(
    f: &OdecoFactors<F>,
    partition: &Partition,
    config: &AscentConfig,
) -> Result<InequalityReport, OdecoError> {
    if partition.k() != f.dims.len() {
        return Err(mismatch(format!(
            "partition of {} modes with {} dims",
            partition.k(),
            f.dims.len()
        )));
    }
    if partition.is_coarsest() {
        return Err(OdecoError::TopPartition);
    }
    require_block_orthogonal(f, partition, EXTERNAL_TOL)?;
    let tensor = f.compose();
    let certificate = f.top_certificate(partition);
    let estimate = estimate_unfolding(&tensor, partition, 2.0, config, &[certificate])?;
    Ok(InequalityReport::evaluate(
        "od-top-weight",
        format!("pi={partition}"),
        Some(1.0),
        Some(1.0),
        to_f64(f.lambdas[0]),
        to_f64(estimate.value),
        EQUALITY_TOL,
        false,
    ))
}

/// Checks the norm equality over the whole upper cone of `partition`: the
/// estimate at every cone element must equal the top weight, each seeded
/// with its own injected top-term certificate. Also emits pairwise
/// equality reports between cone elements (whose meet stays in the cone,
/// so the factors are block-orthogonal for it as well).
pub fn check_upper_cone_equality<F: Scalar>(
    f: &OdecoFactors<F>,
    partition: &Partition,
    config: &AscentConfig,
) -> Result<Vec<InequalityReport>, OdecoError> {
    if partition.k() != f.dims.len() {
        return Err(mismatch(format!(
            "partition of {} modes with {} dims",
            partition.k(),
            f.dims.len()
        )));
    }
    require_block_orthogonal(f, partition, EXTERNAL_TOL)?;
    let tensor = f.compose();
    let cone = partition.upper_cone()?;
    let mut estimates = Vec::with_capacity(cone.len());
    let mut reports = Vec::new();
    for tau in &cone {
        let certificate = f.top_certificate(tau);
        let estimate = estimate_unfolding(&tensor, tau, 2.0, config, &[certificate])?;
        reports.push(InequalityReport::evaluate(
            "od-upper-cone",
            format!("pi={partition};tau={tau}"),
            Some(1.0),
            Some(1.0),
            to_f64(f.lambdas[0]),
            to_f64(estimate.value),
            EQUALITY_TOL,
            false,
        ));
        estimates.push((tau, to_f64(estimate.value)));
    }
    for (a, &(tau1, v1)) in estimates.iter().enumerate() {
        for &(tau2, v2) in estimates.iter().skip(a + 1) {
            reports.push(InequalityReport::evaluate(
                "od-meet-equality",
                format!("pi1={tau1};pi2={tau2}"),
                Some(1.0),
                Some(1.0),
                v1,
                v2,
                2.0 * EQUALITY_TOL,
                false,
            ));
        }
    }
    Ok(reports)
}
