//! Combinatorial overlap factors between unfoldings and audit routines for
//! the norm inequalities they govern.
//!
//! Audits compare certified estimates, which are guaranteed lower bounds on
//! the true norms. Every check is structured so that, wherever possible,
//! the side that must be larger is warm-started from a certificate of the
//! side that must be smaller, making false violations impossible in that
//! direction. Directions that still depend on an unseeded estimate carry
//! the `caveat` flag: a pass there means "no violation detected" rather
//! than proof.

use serde::Serialize;
use thiserror::Error;

use crate::norms::{
    estimate_unfolding, warm_start_lift, AscentConfig, NormError, NormEstimate,
};
use crate::partitions::{cover_edges, enumerate_partitions, Partition, PartitionError};
use crate::scalar::{to_f64, Scalar};
use crate::tensor::{Tensor, TensorError};

/// Relative tolerance applied to every audited inequality.
pub const AUDIT_TOLERANCE: f64 = 1e-8;

/// Errors from bound evaluation and audits.
#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("mode {mode} outside 1..={k}")]
    Range { mode: usize, k: usize },
    #[error("dims {dims:?} do not match partitions over {k} modes")]
    Mismatch { dims: Vec<usize>, k: usize },
    #[error("equal-dims corollaries need identical mode sizes, got {dims:?}")]
    Dims { dims: Vec<usize> },
    #[error("exponents must satisfy 1 <= p <= q, got p = {p}, q = {q}")]
    Exponents { p: f64, q: f64 },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// One audited inequality instance of the form
/// `lower_factor * lhs <= rhs <= upper_factor * lhs`, with absent factors
/// meaning the side is not checked. Slacks record how much room each side
/// had; `caveat` marks verdicts that rest on an unprotected estimate.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub instance: String,
    pub lower_factor: Option<f64>,
    pub upper_factor: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack_lower: Option<f64>,
    pub slack_upper: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub caveat: bool,
}

impl InequalityReport {
    /// Evaluates both sides at the given relative tolerance.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        name: &str,
        instance: String,
        lower_factor: Option<f64>,
        upper_factor: Option<f64>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        caveat: bool,
    ) -> Self {
        let scale = |a: f64, b: f64| a.abs().max(b.abs());
        let mut passed = true;
        let slack_lower = lower_factor.map(|lf| {
            let bound = lf * lhs;
            passed &= rhs >= bound - tolerance * scale(rhs, bound);
            rhs - bound
        });
        let slack_upper = upper_factor.map(|uf| {
            let bound = uf * lhs;
            passed &= rhs <= bound + tolerance * scale(rhs, bound);
            bound - rhs
        });
        InequalityReport {
            name: name.to_string(),
            instance,
            lower_factor,
            upper_factor,
            lhs,
            rhs,
            slack_lower,
            slack_upper,
            tolerance,
            passed,
            caveat,
        }
    }

    /// One JSON object per line, fields in declaration order.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn check_modes(dims: &[usize], block: &[usize]) -> Result<(), BoundsError> {
    let k = dims.len();
    for &mode in block {
        if mode == 0 || mode > k {
            return Err(BoundsError::Range { mode, k });
        }
    }
    Ok(())
}

/// Product of the mode sizes shared by two mode sets; zero when they are
/// disjoint. Symmetric in its block arguments.
pub fn block_overlap_dim(
    dims: &[usize],
    block_a: &[usize],
    block_b: &[usize],
) -> Result<u128, BoundsError> {
    check_modes(dims, block_a)?;
    check_modes(dims, block_b)?;
    let mut product: u128 = 1;
    let mut empty = true;
    for &mode in block_a {
        if block_b.contains(&mode) {
            empty = false;
            product *= dims[mode - 1] as u128;
        }
    }
    Ok(if empty { 0 } else { product })
}

fn check_pair(dims: &[usize], pi1: &Partition, pi2: &Partition) -> Result<(), BoundsError> {
    if pi1.k() != pi2.k() || pi1.k() != dims.len() {
        return Err(BoundsError::Mismatch {
            dims: dims.to_vec(),
            k: pi1.k().max(pi2.k()),
        });
    }
    Ok(())
}

/// Overlap dimension of a partition pair: the product over blocks of `pi1`
/// of the largest overlap with any block of `pi2`. At most the total
/// dimension, with equality exactly when `pi1` equals `pi1 /\ pi2`;
/// asymmetric in its arguments in general.
pub fn dim_map(dims: &[usize], pi1: &Partition, pi2: &Partition) -> Result<u128, BoundsError> {
    check_pair(dims, pi1, pi2)?;
    let mut product: u128 = 1;
    for block in pi1.blocks() {
        let best = pi2
            .blocks()
            .iter()
            .map(|other| block_overlap_dim(dims, block, other))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        product *= best;
    }
    Ok(product)
}

/// Worst-case spectral-norm ratio factors between the unfoldings of `pi1`
/// and `pi2`: `(lower, upper)` with
/// `lower * |U_pi1| <= |U_pi2| <= upper * |U_pi1|`. Always `lower <= 1 <=
/// upper`, both equal to one when the partitions coincide.
pub fn main_theorem_factors(
    dims: &[usize],
    pi1: &Partition,
    pi2: &Partition,
) -> Result<(f64, f64), BoundsError> {
    let total: u128 = dims.iter().map(|&d| d as u128).product();
    let forward = dim_map(dims, pi1, pi2)? as f64;
    let backward = dim_map(dims, pi2, pi1)? as f64;
    let total = total as f64;
    Ok(((forward / total).sqrt(), (total / backward).sqrt()))
}

/// Equal-dims reduction of the factor exponents: with every mode of size
/// `d` the factors become `d^(-c1/2)` and `d^(c2/2)` where
/// `c1 = k - sum over blocks of pi1 of the largest overlap count with pi2`
/// and `c2` is the same with the partitions swapped.
pub fn equal_dims_exponents(pi1: &Partition, pi2: &Partition) -> Result<(usize, usize), BoundsError> {
    if pi1.k() != pi2.k() {
        return Err(BoundsError::Mismatch {
            dims: vec![],
            k: pi1.k().max(pi2.k()),
        });
    }
    let overlap_sum = |a: &Partition, b: &Partition| -> usize {
        a.blocks()
            .iter()
            .map(|block| {
                b.blocks()
                    .iter()
                    .map(|other| block.iter().filter(|m| other.contains(m)).count())
                    .max()
                    .unwrap_or(0)
            })
            .sum()
    };
    Ok((
        pi1.k() - overlap_sum(pi1, pi2),
        pi1.k() - overlap_sum(pi2, pi1),
    ))
}

fn equal_dim(dims: &[usize]) -> Option<usize> {
    let d = dims[0];
    dims.iter().all(|&x| x == d).then_some(d)
}

fn renormalize_certificate<F: Scalar>(cert: &[Vec<F>], p: f64) -> Vec<Vec<F>> {
    cert.iter()
        .map(|x| {
            let norm = crate::norms::p_norm(x, p);
            if norm == F::zero() {
                let mut e = vec![F::zero(); x.len()];
                e[0] = F::one();
                return e;
            }
            x.iter().map(|&v| v / norm).collect()
        })
        .collect()
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

/// Checks `|A|_p <= |A|_q <= dim(A)^(1/p - 1/q) |A|_p` for `1 <= p <= q`.
///
/// The q-side ascent is warm-started from the p-certificate renormalized to
/// the q-ball, which forces the left inequality to hold by construction;
/// the right side compares two estimates and carries the caveat unless the
/// p-value is exact.
pub fn audit_pq_sandwich<F: Scalar>(
    a: &Tensor<F>,
    p: f64,
    q: f64,
    config: &AscentConfig,
) -> Result<InequalityReport, BoundsError> {
    if p.is_nan() || q.is_nan() || p < 1.0 || q < p {
        return Err(BoundsError::Exponents { p, q });
    }
    let identity = Partition::finest(a.order());
    let est_p = estimate_unfolding(a, &identity, p, config, &[])?;
    let seed = renormalize_certificate(&est_p.certificate, q);
    let est_q = estimate_unfolding(a, &identity, q, config, &[seed])?;
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let factor = (a.total_dim() as f64).powf(1.0 / p - inv_q);
    Ok(InequalityReport::evaluate(
        "pq-sandwich",
        format!("p={};q={}", fmt_p(p), fmt_p(q)),
        Some(1.0),
        Some(factor),
        to_f64(est_p.value),
        to_f64(est_q.value),
        AUDIT_TOLERANCE,
        !est_p.method.is_exact(),
    ))
}

/// The lp-norm analogue of the unfolding-pair inequality, combining the
/// p-vs-2 sandwich with the spectral factors. Both sides are plain
/// estimates, so the caveat is set unless both are exact.
pub fn audit_lp_pair<F: Scalar>(
    a: &Tensor<F>,
    p: f64,
    pi1: &Partition,
    pi2: &Partition,
    config: &AscentConfig,
) -> Result<InequalityReport, BoundsError> {
    check_pair(a.dims(), pi1, pi2)?;
    if p.is_nan() || p < 1.0 {
        return Err(BoundsError::Exponents { p, q: p });
    }
    let total = a.total_dim() as f64;
    let forward = dim_map(a.dims(), pi1, pi2)? as f64;
    let backward = dim_map(a.dims(), pi2, pi1)? as f64;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let (lower, upper) = if p <= 2.0 {
        (
            total.powf(-inv_p) * forward.sqrt(),
            total.powf(inv_p) / backward.sqrt(),
        )
    } else {
        (
            total.powf(inv_p - 1.0) * forward.sqrt(),
            total.powf(1.0 - inv_p) / backward.sqrt(),
        )
    };
    let est1 = estimate_unfolding(a, pi1, p, config, &[])?;
    let est2 = estimate_unfolding(a, pi2, p, config, &[])?;
    Ok(InequalityReport::evaluate(
        "lp-unfolding-pair",
        format!("p={p};pi1={pi1};pi2={pi2}", p = fmt_p(p)),
        Some(lower),
        Some(upper),
        to_f64(est1.value),
        to_f64(est2.value),
        AUDIT_TOLERANCE,
        !(est1.method.is_exact() && est2.method.is_exact()),
    ))
}

/// Monotonicity audit over a precomputed p = 2 landscape: one report per
/// cover edge plus the two extrema (minimum at the identity unfolding,
/// maximum equal to the Frobenius norm at the vectorization, checked
/// exactly). All edges are warm-started by construction, so no report
/// carries a caveat.
pub fn audit_monotonicity_with<F: Scalar>(
    a: &Tensor<F>,
    scape: &crate::norms::Landscape<F>,
) -> Result<Vec<InequalityReport>, BoundsError> {
    let k = a.order();
    let mut reports = Vec::new();
    for (finer, coarser) in cover_edges(k)? {
        let lhs = to_f64(scape[&finer].value);
        let rhs = to_f64(scape[&coarser].value);
        reports.push(InequalityReport::evaluate(
            "monotonicity",
            format!("{finer}->{coarser}"),
            Some(1.0),
            None,
            lhs,
            rhs,
            AUDIT_TOLERANCE,
            false,
        ));
    }
    let bottom = to_f64(scape[&Partition::finest(k)].value);
    let minimum = scape
        .values()
        .map(|e| to_f64(e.value))
        .fold(f64::INFINITY, f64::min);
    reports.push(InequalityReport::evaluate(
        "monotonicity-min",
        "finest-attains-minimum".to_string(),
        Some(1.0),
        Some(1.0),
        bottom,
        minimum,
        AUDIT_TOLERANCE,
        false,
    ));
    let top = to_f64(scape[&Partition::coarsest(k)].value);
    reports.push(InequalityReport::evaluate(
        "monotonicity-max-frobenius",
        "coarsest-equals-frobenius".to_string(),
        Some(1.0),
        Some(1.0),
        to_f64(a.frobenius()),
        top,
        0.0,
        false,
    ));
    Ok(reports)
}

/// [`audit_monotonicity_with`] on a freshly computed landscape.
pub fn audit_monotonicity<F: Scalar>(
    a: &Tensor<F>,
    config: &AscentConfig,
) -> Result<Vec<InequalityReport>, BoundsError> {
    let scape = crate::norms::landscape(a, 2.0, config)?;
    audit_monotonicity_with(a, &scape)
}

/// Checks `min(d_i, d_j)^(-1/2) |C| <= |B| <= |C|` where `B` is the
/// unfolding of `pi` and `C` merges its blocks `i` and `j` (0-based).
/// The merged side is warm-started from the lifted certificate of `B`, so
/// the upper direction holds by construction; the lower direction carries
/// the caveat unless `B`'s value is exact.
pub fn audit_one_step<F: Scalar>(
    a: &Tensor<F>,
    pi: &Partition,
    i: usize,
    j: usize,
    config: &AscentConfig,
) -> Result<InequalityReport, BoundsError> {
    if pi.k() != a.order() {
        return Err(BoundsError::Mismatch {
            dims: a.dims().to_vec(),
            k: pi.k(),
        });
    }
    let merged = pi.merge_blocks(i, j)?;
    let est_b = estimate_unfolding(a, pi, 2.0, config, &[])?;
    let lift = warm_start_lift(&est_b.certificate, a.dims(), pi, &merged)?;
    let est_c = estimate_unfolding(a, &merged, 2.0, config, &[lift])?;
    let block_dim = |idx: usize| -> u128 {
        pi.blocks()[idx]
            .iter()
            .map(|&r| a.dims()[r - 1] as u128)
            .product()
    };
    let factor = 1.0 / (block_dim(i).min(block_dim(j)) as f64).sqrt();
    Ok(InequalityReport::evaluate(
        "one-step",
        format!("pi={pi};merge={},{}", i + 1, j + 1),
        Some(factor),
        Some(1.0),
        to_f64(est_c.value),
        to_f64(est_b.value),
        AUDIT_TOLERANCE,
        !est_b.method.is_exact(),
    ))
}

/// One-step audits over every partition and block pair, sharing a single
/// warm-started landscape (whose cover-edge seeding gives the same upper
/// protection as [`audit_one_step`]).
pub fn audit_one_step_all_with<F: Scalar>(
    a: &Tensor<F>,
    scape: &crate::norms::Landscape<F>,
) -> Result<Vec<InequalityReport>, BoundsError> {
    let mut reports = Vec::new();
    for pi in enumerate_partitions(a.order())? {
        let n = pi.level();
        for i in 0..n {
            for j in i + 1..n {
                let merged = pi.merge_blocks(i, j)?;
                let block_dim = |idx: usize| -> u128 {
                    pi.blocks()[idx]
                        .iter()
                        .map(|&r| a.dims()[r - 1] as u128)
                        .product()
                };
                let factor = 1.0 / (block_dim(i).min(block_dim(j)) as f64).sqrt();
                let est_b = &scape[&pi];
                let est_c = &scape[&merged];
                reports.push(InequalityReport::evaluate(
                    "one-step",
                    format!("pi={pi};merge={},{}", i + 1, j + 1),
                    Some(factor),
                    Some(1.0),
                    to_f64(est_c.value),
                    to_f64(est_b.value),
                    AUDIT_TOLERANCE,
                    !est_b.method.is_exact(),
                ));
            }
        }
    }
    Ok(reports)
}

/// Checks the two-sided factor inequality between arbitrary (possibly
/// incomparable) unfoldings. Both unfoldings are warm-started from the
/// lifted certificate of their meet; the verdict still rests on estimates,
/// so the caveat is set unless both values are exact.
pub fn audit_main_theorem<F: Scalar>(
    a: &Tensor<F>,
    pi1: &Partition,
    pi2: &Partition,
    config: &AscentConfig,
) -> Result<InequalityReport, BoundsError> {
    check_pair(a.dims(), pi1, pi2)?;
    let (lower, upper) = main_theorem_factors(a.dims(), pi1, pi2)?;
    let meet = pi1.meet(pi2)?;
    let est_meet = estimate_unfolding(a, &meet, 2.0, config, &[])?;
    let lift1 = warm_start_lift(&est_meet.certificate, a.dims(), &meet, pi1)?;
    let est1 = estimate_unfolding(a, pi1, 2.0, config, &[lift1])?;
    let lift2 = warm_start_lift(&est_meet.certificate, a.dims(), &meet, pi2)?;
    let est2 = estimate_unfolding(a, pi2, 2.0, config, &[lift2])?;
    Ok(InequalityReport::evaluate(
        "unfolding-pair",
        format!("pi1={pi1};pi2={pi2}"),
        Some(lower),
        Some(upper),
        to_f64(est1.value),
        to_f64(est2.value),
        AUDIT_TOLERANCE,
        !(est1.method.is_exact() && est2.method.is_exact()),
    ))
}

/// Checks `|A|_F <= [dim(A) / max_n d_n]^(1/2) |A|_sigma` on any dims.
/// A pass here is proof (the Frobenius side is exact and the spectral side
/// is a lower bound), so the caveat only marks the possibility of a false
/// failure when the spectral estimate is inexact.
pub fn audit_frobenius_ratio<F: Scalar>(
    a: &Tensor<F>,
    config: &AscentConfig,
) -> Result<InequalityReport, BoundsError> {
    let est0 = estimate_unfolding(a, &Partition::finest(a.order()), 2.0, config, &[])?;
    Ok(frobenius_ratio_report(a, &est0))
}

fn frobenius_ratio_report<F: Scalar>(a: &Tensor<F>, est0: &NormEstimate<F>) -> InequalityReport {
    let max_d = *a.dims().iter().max().expect("nonempty dims") as f64;
    let factor = (a.total_dim() as f64 / max_d).sqrt();
    InequalityReport::evaluate(
        "frobenius-ratio",
        format!("dims={:?}", a.dims()),
        None,
        Some(factor),
        to_f64(est0.value),
        to_f64(a.frobenius()),
        AUDIT_TOLERANCE,
        !est0.method.is_exact(),
    )
}

/// The equal-dims corollary families over a shared warm-started landscape:
/// the Frobenius ratio, the per-level bottom-up sandwich around the
/// identity unfolding, the per-partition top-down sandwich around the
/// Frobenius norm, and the per-level ceiling floor on the level minimum.
/// Rejects tensors whose mode sizes differ.
pub fn audit_corollaries<F: Scalar>(
    a: &Tensor<F>,
    config: &AscentConfig,
) -> Result<Vec<InequalityReport>, BoundsError> {
    let d = equal_dim(a.dims()).ok_or_else(|| BoundsError::Dims {
        dims: a.dims().to_vec(),
    })? as f64;
    let k = a.order();
    let scape = crate::norms::landscape(a, 2.0, config)?;
    let mut reports = Vec::new();
    reports.push(frobenius_ratio_report(a, &scape[&Partition::finest(k)]));
    let est0 = to_f64(scape[&Partition::finest(k)].value);
    let frob = to_f64(a.frobenius());
    let est0_exact = scape[&Partition::finest(k)].method.is_exact();
    for level in 1..=k {
        let at_level: Vec<&NormEstimate<F>> = scape
            .iter()
            .filter(|(pi, _)| pi.level() == level)
            .map(|(_, est)| est)
            .collect();
        let values: Vec<f64> = at_level.iter().map(|e| to_f64(e.value)).collect();
        let level_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let level_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let all_exact = at_level.iter().all(|e| e.method.is_exact());
        reports.push(InequalityReport::evaluate(
            "bottom-up-lower",
            format!("level={level}"),
            Some(d.powf(-((k - level) as f64) / 2.0)),
            None,
            level_max,
            est0,
            AUDIT_TOLERANCE,
            !est0_exact,
        ));
        reports.push(InequalityReport::evaluate(
            "bottom-up-upper",
            format!("level={level}"),
            None,
            Some(1.0),
            level_min,
            est0,
            AUDIT_TOLERANCE,
            false,
        ));
        let ceil = k.div_ceil(level);
        reports.push(InequalityReport::evaluate(
            "level-min-floor",
            format!("level={level}"),
            Some(d.powf(-((k - ceil) as f64) / 2.0)),
            None,
            frob,
            level_min,
            AUDIT_TOLERANCE,
            !all_exact,
        ));
    }
    for (pi, est) in &scape {
        let max_block = pi.blocks().iter().map(Vec::len).max().expect("blocks");
        reports.push(InequalityReport::evaluate(
            "top-down",
            format!("pi={pi}"),
            Some(d.powf(-((k - max_block) as f64) / 2.0)),
            Some(1.0),
            frob,
            to_f64(est.value),
            AUDIT_TOLERANCE,
            !est.method.is_exact(),
        ));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::landscape;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    fn random_tensor(dims: &[usize], seed: u64) -> Tensor<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let n: usize = dims.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::new(dims.to_vec(), data).unwrap()
    }

    fn quick() -> AscentConfig {
        AscentConfig {
            restarts: 16,
            ..AscentConfig::default()
        }
    }

    #[test]
    fn block_overlap_examples() {
        let dims = [2usize, 3, 4, 5];
        assert_eq!(block_overlap_dim(&dims, &[1, 2], &[1, 2, 3]).unwrap(), 6);
        assert_eq!(block_overlap_dim(&dims, &[1, 2], &[4]).unwrap(), 0);
        assert_eq!(
            block_overlap_dim(&dims, &[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(),
            120
        );
        assert_eq!(
            block_overlap_dim(&dims, &[1, 2], &[1, 2, 3]).unwrap(),
            block_overlap_dim(&dims, &[1, 2, 3], &[1, 2]).unwrap()
        );
        assert!(block_overlap_dim(&dims, &[0], &[1]).is_err());
        assert!(block_overlap_dim(&dims, &[1], &[5]).is_err());
    }

    #[test]
    fn dim_map_examples() {
        let dims = [2usize, 3, 4, 5];
        let pi1 = p("1,2|3,4");
        let pi2 = p("1,2,3|4");
        assert_eq!(dim_map(&dims, &pi1, &pi2).unwrap(), 30);
        assert_eq!(dim_map(&dims, &pi2, &pi1).unwrap(), 30);
        let dims = [2usize, 3, 5, 4];
        assert_eq!(dim_map(&dims, &pi1, &pi2).unwrap(), 30);
        assert_eq!(dim_map(&dims, &pi2, &pi1).unwrap(), 24);
    }

    #[test]
    fn dim_map_equality_iff_refined_by_meet() {
        // dim_map(pi1, pi2) <= dim(A), equality iff pi1 = pi1 /\ pi2.
        let dims = [3usize, 2, 3, 2];
        let total: u128 = dims.iter().map(|&d| d as u128).product();
        let parts = enumerate_partitions(4).unwrap();
        for pi1 in &parts {
            for pi2 in &parts {
                let value = dim_map(&dims, pi1, pi2).unwrap();
                assert!(value <= total);
                let meet = pi1.meet(pi2).unwrap();
                assert_eq!(value == total, *pi1 == meet, "{pi1} vs {pi2}");
            }
        }
    }

    #[test]
    fn factors_bracket_one_and_reduce_for_equal_dims() {
        let dims = [3usize, 3, 3, 3];
        let parts = enumerate_partitions(4).unwrap();
        for pi1 in &parts {
            for pi2 in &parts {
                let (lower, upper) = main_theorem_factors(&dims, pi1, pi2).unwrap();
                assert!(lower <= 1.0 + 1e-12 && upper >= 1.0 - 1e-12);
                let (c1, c2) = equal_dims_exponents(pi1, pi2).unwrap();
                assert!((lower - 3f64.powf(-(c1 as f64) / 2.0)).abs() < 1e-12);
                assert!((upper - 3f64.powf(c2 as f64 / 2.0)).abs() < 1e-12);
                if pi1 == pi2 {
                    assert_eq!((lower, upper), (1.0, 1.0));
                }
            }
        }
    }

    #[test]
    fn factors_self_and_extremes() {
        let dims = [2usize, 2, 2, 2];
        let (lower, upper) =
            main_theorem_factors(&dims, &p("1,2|3,4"), &Partition::finest(4)).unwrap();
        // c1 = 2, c2 = 0 at equal dims d = 2.
        assert!((lower - 0.5).abs() < 1e-15);
        assert!((upper - 1.0).abs() < 1e-15);
        // Vectorization vs identity at equal dims d: lower = d^{-(k-1)/2}.
        let (lower, _) =
            main_theorem_factors(&dims, &Partition::coarsest(4), &Partition::finest(4)).unwrap();
        assert!((lower - 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn pq_sandwich_example_matrix() {
        let m = Tensor::new(vec![2, 2], vec![1.0, 0.0, 1.0, 4.0]).unwrap();
        let report = audit_pq_sandwich(&m, 1.0, 2.0, &quick()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!((report.lhs - 4.0).abs() < 1e-9);
        let sigma = ((18.0 + 260f64.sqrt()) / 2.0).sqrt();
        assert!((report.rhs - sigma).abs() < 1e-9);
        assert_eq!(report.upper_factor, Some(2.0));
        // Degenerate pair passes with equal sides.
        let report = audit_pq_sandwich(&m, 2.0, 2.0, &quick()).unwrap();
        assert!(report.passed);
        assert_eq!(report.lhs, report.rhs);
        assert!(!report.caveat); // exact matrix value on the p side
        assert!(audit_pq_sandwich(&m, 2.0, 1.0, &quick()).is_err());
    }

    #[test]
    fn pq_sandwich_random_small_tensors() {
        for seed in 0..10 {
            let a = random_tensor(&[2, 2, 2], 600 + seed);
            for (p, q) in [(1.0, 2.0), (2.0, f64::INFINITY)] {
                let report = audit_pq_sandwich(&a, p, q, &quick()).unwrap();
                assert!(report.passed, "seed {seed} ({p},{q}): {report:?}");
            }
        }
    }

    #[test]
    fn monotonicity_reports_pass() {
        let a = random_tensor(&[2, 2, 3], 77);
        let reports = audit_monotonicity(&a, &quick()).unwrap();
        // Cover edges plus the two extrema.
        assert_eq!(reports.len(), cover_edges(3).unwrap().len() + 2);
        for report in &reports {
            assert!(report.passed, "{report:?}");
            assert!(!report.caveat);
        }
        let top = reports
            .iter()
            .find(|r| r.name == "monotonicity-max-frobenius")
            .unwrap();
        assert_eq!(top.lhs, top.rhs); // bit-exact Frobenius at the top
    }

    #[test]
    fn one_step_bounds_hold() {
        let a = random_tensor(&[2, 3, 2], 99);
        let pi = Partition::finest(3);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let report = audit_one_step(&a, &pi, i, j, &quick()).unwrap();
            assert!(report.passed, "{report:?}");
        }
        assert!(audit_one_step(&a, &pi, 1, 1, &quick()).is_err());
    }

    #[test]
    fn one_step_sharpness_witness() {
        // B = (sum_i e_i (x) e_i) (x) D with d1 = 2, d2 = 3: merging the
        // first two modes multiplies the spectral norm by sqrt(d1).
        let d1 = 2usize;
        let d2 = 3usize;
        let d = random_tensor(&[2, 2], 123);
        let mut b = Tensor::<f64>::zeros(vec![d1, d2, 2, 2]);
        let mut data = vec![0.0; d1 * d2 * 4];
        for i in 0..d1 {
            for (s, &v) in d.data().iter().enumerate() {
                data[i + i * d1 + s * d1 * d2] = v;
            }
        }
        b = Tensor::new(b.dims().to_vec(), data).unwrap();
        let report = audit_one_step(&b, &Partition::finest(4), 0, 1, &quick()).unwrap();
        assert!(report.passed, "{report:?}");
        // Lower side saturated: |B| = |D|, |C| = sqrt(d1) |D|.
        let ratio = report.lhs / report.rhs;
        assert!(
            (ratio - (d1 as f64).sqrt()).abs() < 1e-6,
            "ratio {ratio} vs sqrt({d1})"
        );
        assert!(report.slack_lower.unwrap().abs() < 1e-6);
    }

    #[test]
    fn main_theorem_pairs_pass() {
        let a = random_tensor(&[2, 2, 2, 2], 1234);
        let parts = enumerate_partitions(4).unwrap();
        // A deterministic sample of pairs, comparable or not.
        for (offset, pi1) in parts.iter().enumerate().step_by(3) {
            let pi2 = &parts[(offset * 7 + 4) % parts.len()];
            let report = audit_main_theorem(&a, pi1, pi2, &quick()).unwrap();
            assert!(report.passed, "{report:?}");
        }
        let pi = p("1,2|3|4");
        let report = audit_main_theorem(&a, &pi, &pi, &quick()).unwrap();
        assert!(report.passed);
        assert_eq!(report.lhs, report.rhs);
        assert_eq!(report.lower_factor, Some(1.0));
        assert_eq!(report.upper_factor, Some(1.0));
    }

    #[test]
    fn lp_pair_holds_on_small_tensors() {
        let a = random_tensor(&[2, 2, 2], 55);
        for &p_exp in &[1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let report =
                audit_lp_pair(&a, p_exp, &Partition::finest(3), &p("1,2|3"), &quick()).unwrap();
            assert!(report.passed, "p={p_exp}: {report:?}");
            assert!(report.caveat || p_exp == 2.0);
        }
    }

    #[test]
    fn corollaries_pass_on_equal_dims() {
        let a = random_tensor(&[2, 2, 2], 31);
        let reports = audit_corollaries(&a, &quick()).unwrap();
        assert!(!reports.is_empty());
        for report in &reports {
            assert!(report.passed, "{report:?}");
        }
        assert!(matches!(
            audit_corollaries(&random_tensor(&[2, 3, 2], 1), &quick()),
            Err(BoundsError::Dims { .. })
        ));
    }

    #[test]
    fn frobenius_ratio_any_dims() {
        let a = random_tensor(&[2, 3, 4], 71);
        let report = audit_frobenius_ratio(&a, &quick()).unwrap();
        assert!(report.passed, "{report:?}");
        let expected = (24.0f64 / 4.0).sqrt();
        assert!((report.upper_factor.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn order2_audits_have_no_caveats() {
        // Every unfolding of a matrix is exact at p = 2, so no audit
        // verdict rests on an estimate.
        let m = random_tensor(&[3, 4], 7);
        let scape = landscape(&m, 2.0, &quick()).unwrap();
        let mut reports = audit_monotonicity_with(&m, &scape).unwrap();
        reports.extend(audit_one_step_all_with(&m, &scape).unwrap());
        reports.push(audit_frobenius_ratio(&m, &quick()).unwrap());
        reports.push(
            audit_main_theorem(&m, &Partition::finest(2), &Partition::coarsest(2), &quick())
                .unwrap(),
        );
        for report in &reports {
            assert!(report.passed, "{report:?}");
            assert!(!report.caveat, "{report:?}");
        }
    }

    #[test]
    fn report_json_shape() {
        let report = InequalityReport::evaluate(
            "demo",
            "x".to_string(),
            Some(0.5),
            None,
            2.0,
            1.5,
            1e-8,
            true,
        );
        let line = report.to_json_line();
        assert!(line.starts_with("{\"name\":\"demo\""));
        assert!(line.contains("\"slack_upper\":null"));
        assert!(report.passed);
        assert!((report.slack_lower.unwrap() - 0.5).abs() < 1e-15);
    }
}
