/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum entrywise deviation from Hermiticity, relative to the largest entry.
    pub hermitian: f64,
    /// Most negative eigenvalue accepted for a positive semidefinite operator.
    pub psd: f64,
    /// Allowed deviation of a density matrix trace from one.
    pub trace: f64,
    /// Eigenvalues below `support_cutoff * lambda_max` are treated as zero.
    pub support_cutoff: f64,
    /// Weight of `rho` outside the support of `sigma` that still counts as contained.
    pub support_leak: f64,
    /// Allowed deviation of a probability vector sum from one.
    pub probability: f64,
    /// Maximum dimension of any pure state built by the state constructors.
    pub max_pure_dim: usize,
    /// Maximum number of vectors produced by an exhaustive enumeration.
    pub max_enumeration: usize,
    /// Maximum dimension of a dense operator built from `n` letters.
    pub max_operator_dim: usize,
    /// Maximum total number of matrix entries held by one enumeration of
    /// `n`-letter operators.
    pub max_dense_entries: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        psd: 1e-10,
        trace: 1e-10,
        support_cutoff: 1e-12,
        support_leak: 1e-10,
        probability: 1e-12,
        max_pure_dim: 1 << 20,
        max_enumeration: 1 << 20,
        max_operator_dim: 1 << 11,
        max_dense_entries: 1 << 26,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub(crate) const TOL: Tolerances = Tolerances::DEFAULT;

/// `base^n`, or a resource error when it exceeds `TOL.max_operator_dim`.
pub(crate) fn operator_dim(base: usize, n: usize) -> crate::Result<usize> {
    let mut dim = 1usize;
    for _ in 0..n {
        dim = dim.checked_mul(base).filter(|&t| t <= TOL.max_operator_dim).ok_or_else(|| {
            crate::Error::Resource(format!(
                "operators on {n} letters of dimension {base} exceed the limit {}",
                TOL.max_operator_dim
            ))
        })?;
    }
    Ok(dim)
}

/// Guards an enumeration of all `d^n` letter products of `dim`-dimensional
/// outputs.
pub(crate) fn letter_workload(d: usize, dim: usize, n: usize) -> crate::Result<()> {
    let op = operator_dim(dim, n)?;
    let count = crate::codes::checked_power(d as u32, n, TOL.max_enumeration)?;
    count.checked_mul(op * op).filter(|&e| e <= TOL.max_dense_entries).map(|_| ()).ok_or_else(|| {
        crate::Error::Resource(format!(
            "{count} operators of dimension {op} exceed the limit of {} matrix entries",
            TOL.max_dense_entries
        ))
    })
}
