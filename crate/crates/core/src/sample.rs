//! Seeded random generators for states, measurements, and channels.
//!
//! Everything draws from a caller-supplied ChaCha8 stream so that property
//! tests, the acceptance suite, and ensemble runs are reproducible bit for
//! bit. States use the Gram construction G†G / tr(G†G); POVMs coarse-grain a
//! random projective measurement; channels come from random dilations.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::{Channel, KrausMap};
use crate::matrix::{cr, ComplexMatrix};
use crate::quantum::{DensityMatrix, Effect, Povm};

/// Deterministic stream for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_complex_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Full-support random state via the Gram construction.
pub fn random_density_matrix(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = gaussian_complex_matrix(dim, dim, rng);
    let gram = &g.adjoint() * &g;
    let trace = gram.trace().re;
    DensityMatrix::new(gram.scale(cr(1.0 / trace)).hermitian_part())
        .expect("Gram construction yields a valid state")
}

/// Haar-ish random pure state |psi><psi|.
pub fn random_pure_state(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let ket = gaussian_complex_matrix(dim, 1, rng);
    DensityMatrix::pure(&ket).expect("Gaussian ket is nonzero almost surely")
}

/// Random isometry: `rows x cols` with orthonormal columns (rows >= cols).
///
/// Gram-Schmidt with one re-orthogonalization pass on Gaussian columns.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    let g = gaussian_complex_matrix(rows, cols, rng);
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v: Vec<Complex64> = (0..rows).map(|r| g.get(r, j)).collect();
        for _pass in 0..2 {
            for u in &columns {
                let overlap: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u.iter()) {
                    *vi -= overlap * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        columns.push(v);
    }
    ComplexMatrix::from_fn(rows, cols, |r, c| columns[c][r])
}

pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    random_isometry(dim, dim, rng)
}

/// POVM with `n_effects <= dim` outcomes: the rank-1 projectors of a random
/// unitary's columns, coarse-grained round-robin into groups.
pub fn random_povm(dim: usize, n_effects: usize, rng: &mut ChaCha8Rng) -> Povm {
    assert!(
        (1..=dim).contains(&n_effects),
        "need 1 <= n_effects <= dim for a coarse-grained projective POVM"
    );
    let u = random_unitary(dim, rng);
    let mut groups = vec![ComplexMatrix::zeros(dim, dim); n_effects];
    for k in 0..dim {
        let col = ComplexMatrix::from_fn(dim, 1, |r, _| u.get(r, k));
        let proj = &col * &col.adjoint();
        groups[k % n_effects].add_scaled(Complex64::ONE, &proj);
    }
    let effects = groups
        .into_iter()
        .map(|m| Effect::new(m.hermitian_part()).expect("projector sums are valid effects"))
        .collect();
    Povm::new(effects).expect("coarse-grained projective measurement is complete")
}

/// Random channel from a dilation: a Haar-ish unitary on system x environment
/// restricted to the environment's |0> column block.
pub fn random_channel(dim: usize, n_kraus: usize, rng: &mut ChaCha8Rng) -> Channel {
    assert!(n_kraus >= 1);
    let u = random_unitary(dim * n_kraus, rng);
    let ops = (0..n_kraus)
        .map(|j| ComplexMatrix::from_fn(dim, dim, |r, c| u.get(r * n_kraus + j, c * n_kraus)))
        .collect();
    Channel::new(ops).expect("dilation columns are orthonormal")
}

/// Random measurement with `n_outcomes`, each backed by `kraus_per_outcome`
/// operators.
pub fn random_kraus_map(
    dim: usize,
    n_outcomes: usize,
    kraus_per_outcome: usize,
    rng: &mut ChaCha8Rng,
) -> KrausMap {
    let channel = random_channel(dim, n_outcomes * kraus_per_outcome, rng);
    let ops = channel.kraus_ops();
    let outcomes = ops
        .chunks(kraus_per_outcome)
        .map(|chunk| chunk.to_vec())
        .collect();
    KrausMap::new(outcomes).expect("grouped dilation operators form a valid measurement")
}
