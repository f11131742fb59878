//! Dense order-k tensors with a fixed linear layout, and the general
//! unfolding operator indexed by a partition of the modes.
//!
//! Layout: mode 1 varies fastest. The linear offset of the 1-based index
//! `(i_1, .., i_k)` is `sum_r (i_r - 1) * prod_{l<r} d_l`. The single-block
//! unfolding (vectorization) is therefore the identity on the stored data,
//! and every other unfolding is a pure permutation of it.
//!
//! Within a merged block the earliest mode varies fastest, mirroring the
//! global layout. The merged index of block `B` is
//! `m = 1 + sum_{r in B} (i_r - 1) * prod_{l in B, l < r} d_l`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partitions::Partition;
use crate::scalar::Scalar;

/// A 1-based index tuple, one coordinate per mode.
pub type MultiIndex = Vec<usize>;

/// Errors from tensor construction and arithmetic.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("dims {dims:?} require {expected} values, got {got}")]
    Shape {
        dims: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("value at offset {offset} is not finite")]
    NonFinite { offset: usize },
    #[error("shape mismatch: {context}")]
    Mismatch { context: String },
    #[error("index {index:?} out of range for dims {dims:?}")]
    IndexRange { index: Vec<usize>, dims: Vec<usize> },
    #[error("cannot parse tensor JSON: {0}")]
    Json(String),
}

fn mismatch(context: impl Into<String>) -> TensorError {
    TensorError::Mismatch {
        context: context.into(),
    }
}

/// Dense order-k tensor over scalar type `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    dims: Vec<usize>,
    data: Vec<F>,
}

/// On-disk form: `{"dims": [...], "data": [...]}` with data in the
/// mode-1-fastest linear layout.
#[derive(Serialize, Deserialize)]
struct TensorFile<F> {
    dims: Vec<usize>,
    data: Vec<F>,
}

/// Checked product of a dimension vector.
fn total_dim(dims: &[usize]) -> Option<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return None;
    }
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

impl<F: Scalar> Tensor<F> {
    /// Builds a tensor from a dimension vector and flat data in the linear
    /// layout. Rejects length mismatches and non-finite entries.
    pub fn new(dims: Vec<usize>, data: Vec<F>) -> Result<Self, TensorError> {
        let expected = total_dim(&dims).ok_or_else(|| TensorError::Shape {
            dims: dims.clone(),
            expected: 0,
            got: data.len(),
        })?;
        if data.len() != expected {
            return Err(TensorError::Shape {
                dims,
                expected,
                got: data.len(),
            });
        }
        if let Some(offset) = data.iter().position(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite { offset });
        }
        Ok(Tensor { dims, data })
    }

    /// All-zero tensor of the given dims.
    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims).expect("positive dims");
        Tensor {
            dims,
            data: vec![F::zero(); n],
        }
    }

    /// The d x d identity matrix as an order-2 tensor.
    pub fn identity(d: usize) -> Self {
        let mut t = Self::zeros(vec![d, d]);
        for i in 0..d {
            t.data[i + i * d] = F::one();
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// Number of modes.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total dimension: the product of all mode sizes.
    pub fn total_dim(&self) -> usize {
        self.data.len()
    }

    fn check_index(&self, index: &[usize]) -> Result<(), TensorError> {
        let ok = index.len() == self.dims.len()
            && index
                .iter()
                .zip(&self.dims)
                .all(|(&i, &d)| i >= 1 && i <= d);
        if ok {
            Ok(())
        } else {
            Err(TensorError::IndexRange {
                index: index.to_vec(),
                dims: self.dims.clone(),
            })
        }
    }

    /// Entry at a 1-based multi-index.
    pub fn entry(&self, index: &[usize]) -> Result<F, TensorError> {
        self.check_index(index)?;
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            offset += (i - 1) * stride;
            stride *= d;
        }
        Ok(self.data[offset])
    }

    /// Sum of entrywise products with a tensor of identical dims.
    pub fn inner_product(&self, other: &Tensor<F>) -> Result<F, TensorError> {
        if self.dims != other.dims {
            return Err(mismatch(format!(
                "inner product needs identical dims, got {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    /// Frobenius norm; invariant under every unfolding.
    pub fn frobenius(&self) -> F {
        l2_norm(&self.data)
    }

    /// Entrywise scaling; used by equivariance checks.
    pub fn scale(&self, c: F) -> Tensor<F> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    /// Entrywise sum of two tensors of identical dims.
    pub fn add(&self, other: &Tensor<F>) -> Result<Tensor<F>, TensorError> {
        if self.dims != other.dims {
            return Err(mismatch(format!(
                "sum needs identical dims, got {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Tensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    fn check_partition(&self, partition: &Partition) -> Result<(), TensorError> {
        if partition.k() != self.order() {
            return Err(mismatch(format!(
                "partition of {} modes applied to an order-{} tensor",
                partition.k(),
                self.order()
            )));
        }
        Ok(())
    }

    /// The unfolding induced by `partition`: an order-`|partition|` tensor
    /// whose mode `j` has size `prod_{i in B_j} d_i`. A pure permutation of
    /// the stored data; the total element count is preserved.
    pub fn unfold(&self, partition: &Partition) -> Result<Tensor<F>, TensorError> {
        self.check_partition(partition)?;
        let out_dims = unfolded_dims(partition, &self.dims);
        let mult = target_multipliers(partition, &self.dims);
        let mut out = vec![F::zero(); self.data.len()];
        let mut target = 0usize;
        let mut counters = vec![0usize; self.order()];
        for &value in &self.data {
            out[target] = value;
            // Odometer step over the source index, mode 1 fastest.
            for r in 0..self.order() {
                counters[r] += 1;
                if counters[r] < self.dims[r] {
                    target += mult[r];
                    break;
                }
                counters[r] = 0;
                target -= mult[r] * (self.dims[r] - 1);
            }
        }
        Ok(Tensor {
            dims: out_dims,
            data: out,
        })
    }

    /// Inverse of [`Tensor::unfold`]: reassembles an order-k tensor of
    /// `dims` from its unfolding under `partition`. Exact (a permutation).
    pub fn refold(
        unfolded: &Tensor<F>,
        partition: &Partition,
        dims: &[usize],
    ) -> Result<Tensor<F>, TensorError> {
        if partition.k() != dims.len() {
            return Err(mismatch(format!(
                "partition of {} modes cannot refold into {} dims",
                partition.k(),
                dims.len()
            )));
        }
        let expected = unfolded_dims(partition, dims);
        if unfolded.dims != expected {
            return Err(TensorError::Shape {
                dims: unfolded.dims.clone(),
                expected: expected.iter().product(),
                got: unfolded.data.len(),
            });
        }
        let mult = target_multipliers(partition, dims);
        let mut out = vec![F::zero(); unfolded.data.len()];
        let mut source = 0usize;
        let mut counters = vec![0usize; dims.len()];
        for slot in out.iter_mut() {
            *slot = unfolded.data[source];
            for r in 0..dims.len() {
                counters[r] += 1;
                if counters[r] < dims[r] {
                    source += mult[r];
                    break;
                }
                counters[r] = 0;
                source -= mult[r] * (dims[r] - 1);
            }
        }
        Tensor::new(dims.to_vec(), out)
    }

    /// Applies one vector per mode, producing the scalar
    /// `<A, x_1 (x) .. (x) x_k>`; multilinear in each argument.
    pub fn multilinear_apply(&self, vectors: &[Vec<F>]) -> Result<F, TensorError> {
        self.check_vectors(vectors)?;
        let mut data = self.data.clone();
        let mut len = data.len();
        for n in (0..self.order()).rev() {
            let d = self.dims[n];
            len /= d;
            for j in 0..len {
                let mut acc = F::zero();
                for (i, &xi) in vectors[n].iter().enumerate() {
                    acc = acc + data[j + i * len] * xi;
                }
                data[j] = acc;
            }
        }
        Ok(data[0])
    }

    /// Contracts every mode except `keep` (0-based) with the matching
    /// vector, leaving the coefficient vector of the remaining mode.
    pub fn contract_all_but(
        &self,
        vectors: &[Vec<F>],
        keep: usize,
    ) -> Result<Vec<F>, TensorError> {
        self.check_vectors(vectors)?;
        assert!(keep < self.order(), "mode index out of range");
        let mut data = self.data.clone();
        let mut len = data.len();
        for n in (keep + 1..self.order()).rev() {
            let d = self.dims[n];
            len /= d;
            for j in 0..len {
                let mut acc = F::zero();
                for (i, &xi) in vectors[n].iter().enumerate() {
                    acc = acc + data[j + i * len] * xi;
                }
                data[j] = acc;
            }
        }
        for n in 0..keep {
            let d = self.dims[n];
            len /= d;
            for j in 0..len {
                let mut acc = F::zero();
                for (i, &xi) in vectors[n].iter().enumerate() {
                    acc = acc + data[j * d + i] * xi;
                }
                data[j] = acc;
            }
        }
        data.truncate(self.dims[keep]);
        Ok(data)
    }

    fn check_vectors(&self, vectors: &[Vec<F>]) -> Result<(), TensorError> {
        if vectors.len() != self.order() {
            return Err(mismatch(format!(
                "expected {} mode vectors, got {}",
                self.order(),
                vectors.len()
            )));
        }
        for (n, (x, &d)) in vectors.iter().zip(&self.dims).enumerate() {
            if x.len() != d {
                return Err(mismatch(format!(
                    "mode {} vector has length {}, dim is {}",
                    n + 1,
                    x.len(),
                    d
                )));
            }
        }
        Ok(())
    }

    /// Covariant multilinear matrix multiplication: multiplies mode `n` by
    /// `matrices[n]` (shape `d_n x s_n`) for every mode, yielding an order-k
    /// tensor of dims `(s_1, .., s_k)`. For k = 2 this is `M_1^T A M_2`;
    /// with identities everywhere it returns the tensor unchanged.
    pub fn multilinear_matrix_mult(
        &self,
        matrices: &[Tensor<F>],
    ) -> Result<Tensor<F>, TensorError> {
        if matrices.len() != self.order() {
            return Err(mismatch(format!(
                "expected {} matrices, got {}",
                self.order(),
                matrices.len()
            )));
        }
        let mut current = self.clone();
        for (n, m) in matrices.iter().enumerate() {
            if m.order() != 2 {
                return Err(mismatch(format!(
                    "mode {} factor must be a matrix, got order {}",
                    n + 1,
                    m.order()
                )));
            }
            if m.dims[0] != self.dims[n] {
                return Err(mismatch(format!(
                    "mode {} matrix has {} rows, dim is {}",
                    n + 1,
                    m.dims[0],
                    self.dims[n]
                )));
            }
            current = current.mode_product(m, n);
        }
        Ok(current)
    }

    /// Mode-n product with a `d_n x s` matrix: contracts the tensor's mode
    /// `n` against the matrix rows.
    fn mode_product(&self, matrix: &Tensor<F>, n: usize) -> Tensor<F> {
        let d = self.dims[n];
        let s = matrix.dims[1];
        let inner: usize = self.dims[..n].iter().product();
        let outer: usize = self.dims[n + 1..].iter().product();
        let mut out_dims = self.dims.clone();
        out_dims[n] = s;
        let mut out = vec![F::zero(); inner * s * outer];
        for o in 0..outer {
            for j in 0..s {
                for i in 0..d {
                    let w = matrix.data[i + j * d];
                    if w == F::zero() {
                        continue;
                    }
                    let src = o * d * inner + i * inner;
                    let dst = o * s * inner + j * inner;
                    for q in 0..inner {
                        out[dst + q] = out[dst + q] + self.data[src + q] * w;
                    }
                }
            }
        }
        Tensor {
            dims: out_dims,
            data: out,
        }
    }
}

/// Rank-1 tensor `x_1 (x) .. (x) x_k` with entries
/// `x_1[i_1] * .. * x_k[i_k]`.
pub fn outer_rank1<F: Scalar>(vectors: &[Vec<F>]) -> Result<Tensor<F>, TensorError> {
    if vectors.is_empty() || vectors.iter().any(|x| x.is_empty()) {
        return Err(TensorError::Shape {
            dims: vectors.iter().map(|x| x.len()).collect(),
            expected: 0,
            got: 0,
        });
    }
    let mut data = vec![F::one()];
    for x in vectors {
        let mut next = Vec::with_capacity(data.len() * x.len());
        for &v in x {
            for &prev in &data {
                next.push(prev * v);
            }
        }
        data = next;
    }
    Tensor::new(vectors.iter().map(|x| x.len()).collect(), data)
}

/// Dims of the unfolding of a `dims` tensor under `partition`: one merged
/// mode per block, sized by the product of its member dims.
pub fn unfolded_dims(partition: &Partition, dims: &[usize]) -> Vec<usize> {
    partition
        .blocks()
        .iter()
        .map(|block| block.iter().map(|&r| dims[r - 1]).product())
        .collect()
}

/// Per-source-mode multiplier into the unfolded linear offset. Mode `r` in
/// block `j` contributes `(i_r - 1) * J_r * prod_{j' < j} D_{j'}` where
/// `J_r` is the within-block stride (earlier in-block modes vary faster) and
/// `D_{j'}` the earlier merged-mode sizes.
fn target_multipliers(partition: &Partition, dims: &[usize]) -> Vec<usize> {
    let mut mult = vec![0usize; dims.len()];
    let mut block_stride = 1usize;
    for block in partition.blocks() {
        let mut within = 1usize;
        for &r in block {
            mult[r - 1] = within * block_stride;
            within *= dims[r - 1];
        }
        block_stride *= within;
    }
    mult
}

/// Image of the 1-based multi-index `index` under the unfolding map of
/// `partition`: one merged 1-based coordinate per block. Bijective onto the
/// unfolded index grid.
pub fn unfold_index(
    partition: &Partition,
    dims: &[usize],
    index: &[usize],
) -> Result<MultiIndex, TensorError> {
    if partition.k() != dims.len() {
        return Err(mismatch(format!(
            "partition of {} modes with {} dims",
            partition.k(),
            dims.len()
        )));
    }
    let in_range = index.len() == dims.len()
        && index.iter().zip(dims).all(|(&i, &d)| i >= 1 && i <= d);
    if !in_range {
        return Err(TensorError::IndexRange {
            index: index.to_vec(),
            dims: dims.to_vec(),
        });
    }
    let mut out = Vec::with_capacity(partition.level());
    for block in partition.blocks() {
        let mut m = 1usize;
        let mut stride = 1usize;
        for &r in block {
            m += (index[r - 1] - 1) * stride;
            stride *= dims[r - 1];
        }
        out.push(m);
    }
    Ok(out)
}

/// Euclidean norm with a fixed summation order (the data order), shared by
/// the Frobenius norm and the order-1 spectral norm so the two agree
/// bit-for-bit.
pub(crate) fn l2_norm<F: Scalar>(xs: &[F]) -> F {
    xs.iter().map(|&x| x * x).sum::<F>().sqrt()
}

impl<F: Scalar + Serialize> Tensor<F> {
    /// Serializes to the `{"dims": [...], "data": [...]}` JSON form.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&TensorFile {
            dims: self.dims.clone(),
            data: self.data.clone(),
        })
        .expect("tensor serializes")
    }
}

impl<F: Scalar + DeserializeOwned> Tensor<F> {
    /// Parses the JSON form, rejecting length mismatches and non-finite
    /// values.
    pub fn from_json_str(s: &str) -> Result<Self, TensorError> {
        let file: TensorFile<F> =
            serde_json::from_str(s).map_err(|e| TensorError::Json(e.to_string()))?;
        Tensor::new(file.dims, file.data)
    }
}
