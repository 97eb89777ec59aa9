//! Random states and channels for tests, benchmarks and scans.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec, DensityMatrix, HermitianMatrix};
use crate::states::{CQChannel, ProbabilityVector};

/// Haar-random unit vector.
pub fn pure_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    let v = CVec::from_iterator(
        dim,
        (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    );
    let n = v.norm();
    v.unscale(n)
}

/// Real unit vector, uniform on the sphere.
pub fn real_pure_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    let v = CVec::from_iterator(dim, (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)));
    let n = v.norm();
    v.unscale(n)
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    DensityMatrix::pure(&pure_vector(rng, dim)).expect("nonzero vector")
}

/// Mixed state `G G^† / tr` for a `dim x rank` complex Ginibre matrix `G`.
pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let g = CMat::from_fn(dim, rank, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    DensityMatrix::normalized(HermitianMatrix::hermitian_part(&g * g.adjoint())).expect("Ginibre product is PSD")
}

/// Random probability vector bounded away from zero.
pub fn distribution<R: Rng + ?Sized>(rng: &mut R, len: usize) -> ProbabilityVector {
    let w: Vec<f64> = (0..len).map(|_| 0.1 + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    ProbabilityVector::new(w.into_iter().map(|x| x / s).collect()).expect("valid weights")
}

/// Channel with `d` Haar-random pure outputs of dimension `dim`.
pub fn pure_channel<R: Rng + ?Sized>(rng: &mut R, d: usize, dim: usize) -> CQChannel {
    CQChannel::new((0..d).map(|_| pure_state(rng, dim)).collect()).expect("valid channel")
}

/// Channel with `d` random full-rank outputs of dimension `dim`.
pub fn mixed_channel<R: Rng + ?Sized>(rng: &mut R, d: usize, dim: usize) -> CQChannel {
    CQChannel::new((0..d).map(|_| mixed_state(rng, dim, dim)).collect()).expect("valid channel")
}
