//! Seeded random generation of states, unitaries, and instruments for the
//! property suites. Every function is deterministic for a fixed seed: entries
//! are drawn in a fixed order from a counter-based stream cipher RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kraus::KrausInstrument;
use crate::layout::SubsystemLayout;
use crate::linalg::{CMat, CVec, C64};
use crate::state::{DensityMatrix, PureStateVector};

/// Derives a stream of independent sub-seeds from a master seed (SplitMix64
/// finalizer), so per-trial RNGs never share state.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = C64::new(re, im);
        }
    }
    m
}

/// Density matrix of exact rank `rank`: G·G†/tr(G·G†) with G complex Gaussian
/// of width `rank`.
pub fn random_density(layout: &SubsystemLayout, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let n = layout.total_dim();
    if rank == 0 || rank > n {
        return Err(Error::BadArgument(format!(
            "rank {rank} out of range 1..={n}"
        )));
    }
    let mut rng = rng_for(seed);
    let g = gaussian_matrix(&mut rng, n, rank);
    let gram = &g * g.adjoint();
    let trace = gram.trace().re;
    DensityMatrix::new(layout.clone(), gram / C64::new(trace, 0.0))
}

/// Normalized complex-Gaussian vector (Haar-distributed on the unit sphere).
pub fn random_pure(layout: &SubsystemLayout, seed: u64) -> Result<PureStateVector> {
    let n = layout.total_dim();
    let mut rng = rng_for(seed);
    let mut v = CVec::zeros(n);
    for i in 0..n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        v[i] = C64::new(re, im);
    }
    let norm = v.norm();
    PureStateVector::new(layout.clone(), v / C64::new(norm, 0.0))
}

/// Haar-distributed unitary: QR of a complex-Gaussian matrix with the phase
/// normalization Q ← Q·diag(r_jj/|r_jj|).
pub fn random_unitary(dim: usize, seed: u64) -> Result<CMat> {
    if dim == 0 {
        return Err(Error::BadArgument("unitary dimension 0".into()));
    }
    let mut rng = rng_for(seed);
    Ok(haar_from(&mut rng, dim))
}

fn haar_from(rng: &mut ChaCha20Rng, dim: usize) -> CMat {
    let g = gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / C64::new(d.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Instrument with `num_kraus` operators mapping dimension `d_in` to `d_out`:
/// the first `d_in` columns of a Haar unitary on `num_kraus`·`d_out`, split
/// into row blocks of height `d_out`. Completeness holds by construction.
pub fn random_instrument(
    target_label: impl Into<String>,
    d_in: usize,
    d_out: usize,
    num_kraus: usize,
    seed: u64,
) -> Result<KrausInstrument> {
    if num_kraus == 0 {
        return Err(Error::BadArgument("instrument needs num_kraus >= 1".into()));
    }
    if d_in == 0 || d_out == 0 {
        return Err(Error::BadArgument(
            "instrument dimensions must be positive".into(),
        ));
    }
    let total = num_kraus * d_out;
    if d_in > total {
        return Err(Error::BadArgument(format!(
            "cannot satisfy completeness: d_in {d_in} exceeds num_kraus*d_out = {total}"
        )));
    }
    let mut rng = rng_for(seed);
    let haar = haar_from(&mut rng, total);
    let isometry = haar.columns(0, d_in).into_owned();
    let ops: Vec<CMat> = (0..num_kraus)
        .map(|k| isometry.rows(k * d_out, d_out).into_owned())
        .collect();
    KrausInstrument::new(target_label, ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh_values, max_abs, unitarity_defect};

    fn layout(dims: &[usize]) -> SubsystemLayout {
        SubsystemLayout::new(
            dims.iter()
                .enumerate()
                .map(|(i, &d)| (format!("S{i}"), d))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let l = layout(&[2, 3]);
        let a = random_density(&l, 3, 42).unwrap();
        let b = random_density(&l, 3, 42).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = random_density(&l, 3, 43).unwrap();
        assert!(a.max_abs_diff(&c).unwrap() > 1e-3);

        let u = random_unitary(4, 7).unwrap();
        let v = random_unitary(4, 7).unwrap();
        assert_eq!(u, v);

        let p = random_pure(&l, 9).unwrap();
        let q = random_pure(&l, 9).unwrap();
        assert_eq!(p.amplitudes(), q.amplitudes());
    }

    #[test]
    fn density_rank_and_trace_are_exact() {
        for rank in 1..=4 {
            let l = layout(&[4]);
            let rho = random_density(&l, rank, 100 + rank as u64).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
            let above = eigh_values(rho.matrix())
                .iter()
                .filter(|&&x| x > 1e-10)
                .count();
            assert_eq!(above, rank);
        }
        assert!(random_density(&layout(&[2]), 0, 1).is_err());
        assert!(random_density(&layout(&[2]), 3, 1).is_err());
    }

    #[test]
    fn unitaries_are_unitary() {
        for seed in 0..5 {
            let u = random_unitary(5, seed).unwrap();
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }

    #[test]
    fn instruments_are_complete_by_construction() {
        for seed in 0..5 {
            let m = random_instrument("A", 2, 3, 4, seed).unwrap();
            assert_eq!(m.len(), 4);
            assert_eq!(m.input_dim(), 2);
            assert_eq!(m.output_dim(), 3);
            let mut sum = CMat::zeros(2, 2);
            for op in m.operators() {
                sum += op.adjoint() * op;
            }
            assert!(max_abs(&(sum - CMat::identity(2, 2))) < 1e-10);
        }
        assert!(random_instrument("A", 4, 1, 2, 0).is_err());
    }

    #[test]
    fn haar_columns_have_no_preferred_direction() {
        // Empirical mean Bloch vector of U|0> over many samples stays small.
        let n = 10_000;
        let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let u = random_unitary(2, split_seed(2024, i)).unwrap();
            let a = u[(0, 0)];
            let b = u[(1, 0)];
            x += 2.0 * (a.conj() * b).re;
            y += 2.0 * (a.conj() * b).im;
            z += a.norm_sqr() - b.norm_sqr();
        }
        let m = n as f64;
        let mag = ((x / m).powi(2) + (y / m).powi(2) + (z / m).powi(2)).sqrt();
        assert!(mag < 0.05, "mean Bloch magnitude {mag}");
    }

    #[test]
    fn split_seed_decorrelates_indices() {
        let s: Vec<u64> = (0..100).map(|i| split_seed(1, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(split_seed(1, 0), split_seed(2, 0));
    }
}
