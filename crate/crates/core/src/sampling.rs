//! Seeded random inputs for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::ensemble::{Ensemble, ProductState};
use crate::linalg::{CMat, CVec, HermitianOp, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random unit vector.
pub fn random_unit(rng: &mut impl Rng, dim: usize) -> CVec {
    loop {
        let v = CVec::new((0..dim).map(|_| gaussian(rng)).collect());
        if let Ok(u) = v.normalized() {
            return u;
        }
    }
}

/// Uniform point of the probability simplex.
pub fn random_priors(rng: &mut impl Rng) -> [f64; 4] {
    let raw: [f64; 4] = std::array::from_fn(|_| Exp1.sample(rng));
    let total: f64 = raw.iter().sum();
    let mut p = raw.map(|x| x / total);
    // make the sum exact to rounding
    p[3] = 1.0 - p[0] - p[1] - p[2];
    p
}

/// Four Haar-random product states forming a basis, with random priors.
pub fn random_product_ensemble(rng: &mut impl Rng) -> Ensemble {
    loop {
        let states: [ProductState; 4] =
            std::array::from_fn(|_| ProductState::new(random_unit(rng, 2), random_unit(rng, 2)));
        if let Ok(e) = Ensemble::new(random_priors(rng), states) {
            return e;
        }
    }
}

fn gaussian_matrix(rng: &mut impl Rng, dim: usize) -> CMat {
    CMat::from_rows((0..dim).map(|_| (0..dim).map(|_| gaussian(rng)).collect()).collect())
}

/// Hermitian matrix with Gaussian entries, dimension 2 or 4.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianOp {
    let g = gaussian_matrix(rng, dim);
    HermitianOp::from_hermitian_part(&g)
}

/// `G G†` for Gaussian `G`, dimension 2 or 4.
pub fn random_psd(rng: &mut impl Rng, dim: usize) -> HermitianOp {
    let g = gaussian_matrix(rng, dim);
    HermitianOp::from_hermitian_part(&(&g * &g.adjoint()))
}
