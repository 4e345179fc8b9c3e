//! Entropic functionals in bits: von Neumann entropy, conditional entropy,
//! mutual information, conditional mutual information, Holevo quantity, and
//! multipartite mutual information.

use crate::error::{Error, Result};
use crate::kraus::Ensemble;
use crate::linalg::eigh_values;
use crate::state::DensityMatrix;

/// Eigenvalues below this are treated as exact zeros inside the log.
const LOG_CLAMP: f64 = 1e-12;

/// Ordered list of pairwise-disjoint, nonempty label blocks. Blocks may
/// cover only part of a layout; operations trace out the residue first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<String>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (index, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock { index });
            }
            for label in block {
                if !seen.insert(label.clone()) {
                    return Err(Error::OverlappingBlocks(label.clone()));
                }
            }
        }
        Ok(Partition { blocks })
    }

    pub fn two(x: Vec<String>, y: Vec<String>) -> Result<Self> {
        Partition::new(vec![x, y])
    }

    pub fn blocks(&self) -> &[Vec<String>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// All labels mentioned by the blocks, in block order.
    pub fn union(&self) -> Vec<String> {
        self.blocks.iter().flatten().cloned().collect()
    }
}

/// −Σ λ log₂ λ over the spectrum, eigenvalues clamped into [0, 1] with the
/// 0·log 0 = 0 convention.
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    spectrum_entropy(&eigh_values(rho.matrix()))
}

fn spectrum_entropy(eigs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &raw in eigs {
        let l = raw.clamp(0.0, 1.0);
        if l > LOG_CLAMP {
            acc -= l * l.log2();
        }
    }
    acc
}

/// Entropy of the reduction to `labels`; the empty set carries zero entropy.
pub(crate) fn entropy_of(rho: &DensityMatrix, labels: &[String]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    Ok(vn_entropy(&rho.reduce_to(labels)?))
}

/// S(full) − S(given): the entropy of everything else conditioned on `given`.
/// May be negative for entangled states.
pub fn conditional_entropy(rho: &DensityMatrix, given: &[String]) -> Result<f64> {
    let positions = rho.layout().positions_of(given)?;
    if positions.len() == rho.layout().len() {
        return Err(Error::BadArgument(
            "conditioning set covers the whole layout; nothing is left".into(),
        ));
    }
    Ok(vn_entropy(rho) - entropy_of(rho, given)?)
}

/// S(X) + S(Y) − S(XY) for a two-block partition; labels outside the blocks
/// are traced out first.
pub fn mutual_information(rho: &DensityMatrix, part: &Partition) -> Result<f64> {
    if part.len() != 2 {
        return Err(Error::BadArgument(format!(
            "mutual information needs exactly 2 blocks, got {}",
            part.len()
        )));
    }
    let x = &part.blocks()[0];
    let y = &part.blocks()[1];
    let joint = rho.reduce_to(&part.union())?;
    Ok(entropy_of(&joint, x)? + entropy_of(&joint, y)? - vn_entropy(&joint))
}

/// I(A:B|E) = S(AE) + S(BE) − S(ABE) − S(E), computed from four entropies of
/// reductions of the single state restricted to A∪B∪E. An empty conditioning
/// set degenerates to the mutual information.
pub fn conditional_mi(
    rho: &DensityMatrix,
    a: &[String],
    b: &[String],
    e: &[String],
) -> Result<f64> {
    let mut union: Vec<String> = Vec::with_capacity(a.len() + b.len() + e.len());
    union.extend_from_slice(a);
    union.extend_from_slice(b);
    union.extend_from_slice(e);
    {
        let mut seen = std::collections::BTreeSet::new();
        for label in &union {
            if !seen.insert(label.clone()) {
                return Err(Error::OverlappingBlocks(label.clone()));
            }
        }
    }
    let joint = rho.reduce_to(&union)?;
    let ae: Vec<String> = a.iter().chain(e).cloned().collect();
    let be: Vec<String> = b.iter().chain(e).cloned().collect();
    Ok(entropy_of(&joint, &ae)? + entropy_of(&joint, &be)?
        - vn_entropy(&joint)
        - entropy_of(&joint, e)?)
}

/// χ = S(Σ p_k ρ_k) − Σ p_k S(ρ_k).
pub fn holevo(ens: &Ensemble) -> f64 {
    let mixed = vn_entropy(&ens.average());
    let conditional: f64 = ens
        .members()
        .iter()
        .map(|(p, state)| p * vn_entropy(state))
        .sum();
    mixed - conditional
}

/// I_n = Σ_i S(block_i) − S(joint) for n ≥ 2 disjoint blocks.
pub fn multipartite_mi(rho: &DensityMatrix, part: &Partition) -> Result<f64> {
    if part.len() < 2 {
        return Err(Error::TooFewBlocks {
            required: 2,
            got: part.len(),
        });
    }
    let joint = rho.reduce_to(&part.union())?;
    let mut acc = -vn_entropy(&joint);
    for block in part.blocks() {
        acc += entropy_of(&joint, block)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kraus::{apply_instrument, dilate_instrument, KrausInstrument};
    use crate::layout::SubsystemLayout;
    use crate::linalg::{CMat, CVec, C64};
    use crate::random::{random_density, random_pure, random_unitary, split_seed};
    use crate::state::PureStateVector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn s(labels: &[&str]) -> Vec<String> {
        labels.iter().map(|l| l.to_string()).collect()
    }

    fn bell() -> DensityMatrix {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        PureStateVector::new(
            layout,
            CVec::from_vec(vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)]),
        )
        .unwrap()
        .density()
    }

    fn ghz3() -> DensityMatrix {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2), ("C", 2)]).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        let mut v = CVec::zeros(8);
        v[0] = c(r, 0.0);
        v[7] = c(r, 0.0);
        PureStateVector::new(layout, v).unwrap().density()
    }

    fn cc_state() -> DensityMatrix {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c(0.5, 0.0);
        m[(3, 3)] = c(0.5, 0.0);
        DensityMatrix::new(layout, m).unwrap()
    }

    #[test]
    fn entropy_oracle_values() {
        let mm = DensityMatrix::maximally_mixed(SubsystemLayout::new(vec![("A", 2)]).unwrap());
        assert!((vn_entropy(&mm) - 1.0).abs() < 1e-12);
        assert!(vn_entropy(&bell()).abs() < 1e-12);
        let layout = SubsystemLayout::new(vec![("A", 3)]).unwrap();
        let diag = CMat::from_diagonal(&CVec::from_vec(vec![
            c(0.5, 0.0),
            c(0.25, 0.0),
            c(0.25, 0.0),
        ]));
        let rho = DensityMatrix::new(layout, diag).unwrap();
        assert!((vn_entropy(&rho) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_examples() {
        assert!((conditional_entropy(&bell(), &s(&["B"])).unwrap() + 1.0).abs() < 1e-12);
        let a = random_density(&SubsystemLayout::new(vec![("A", 2)]).unwrap(), 2, 5).unwrap();
        let b = random_density(&SubsystemLayout::new(vec![("B", 3)]).unwrap(), 3, 6).unwrap();
        let prod = DensityMatrix::tensor(&a, &b).unwrap();
        assert!((conditional_entropy(&prod, &s(&["B"])).unwrap() - vn_entropy(&a)).abs() < 1e-10);
        assert!(conditional_entropy(&cc_state(), &s(&["B"])).unwrap().abs() < 1e-12);
        assert!(conditional_entropy(&bell(), &s(&["A", "B"])).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let part = Partition::two(s(&["A"]), s(&["B"])).unwrap();
        assert!((mutual_information(&bell(), &part).unwrap() - 2.0).abs() < 1e-12);
        assert!((mutual_information(&cc_state(), &part).unwrap() - 1.0).abs() < 1e-12);
        let a = random_density(&SubsystemLayout::new(vec![("A", 2)]).unwrap(), 2, 7).unwrap();
        let b = random_density(&SubsystemLayout::new(vec![("B", 2)]).unwrap(), 2, 8).unwrap();
        let prod = DensityMatrix::tensor(&a, &b).unwrap();
        assert!(mutual_information(&prod, &part).unwrap().abs() < 1e-10);
        assert!(Partition::two(s(&["A"]), s(&["A"])).is_err());
    }

    #[test]
    fn conditional_mi_examples() {
        let ghz = ghz3();
        let v = conditional_mi(&ghz, &s(&["A"]), &s(&["B"]), &s(&["C"])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let ab = bell();
        let e = random_density(&SubsystemLayout::new(vec![("E", 2)]).unwrap(), 2, 9).unwrap();
        let prod = DensityMatrix::tensor(&ab, &e).unwrap();
        let with_e = conditional_mi(&prod, &s(&["A"]), &s(&["B"]), &s(&["E"])).unwrap();
        let without = conditional_mi(&prod, &s(&["A"]), &s(&["B"]), &[]).unwrap();
        let part = Partition::two(s(&["A"]), s(&["B"])).unwrap();
        let mi = mutual_information(&prod, &part).unwrap();
        assert!((with_e - mi).abs() < 1e-10);
        assert!((without - mi).abs() < 1e-12);
        assert!(conditional_mi(&ghz, &s(&["A"]), &s(&["A"]), &s(&["C"])).is_err());
    }

    #[test]
    fn holevo_examples() {
        let layout = SubsystemLayout::new(vec![("A", 2)]).unwrap();
        let zero = DensityMatrix::basis_state(layout.clone(), 0).unwrap();
        let one = DensityMatrix::basis_state(layout.clone(), 1).unwrap();
        let orth = Ensemble::new(vec![(0.5, zero.clone()), (0.5, one)]).unwrap();
        assert!((holevo(&orth) - 1.0).abs() < 1e-12);

        let same = Ensemble::new(vec![(0.5, zero.clone()), (0.5, zero.clone())]).unwrap();
        assert!(holevo(&same).abs() < 1e-12);

        let r = 1.0 / 2.0_f64.sqrt();
        let plus = PureStateVector::new(layout.clone(), CVec::from_vec(vec![c(r, 0.0), c(r, 0.0)]))
            .unwrap()
            .density();
        let ens = Ensemble::new(vec![(0.5, zero), (0.5, plus)]).unwrap();
        // Average has eigenvalues (1 ± 1/sqrt2)/2; members are pure.
        let lp = (1.0 + r) / 2.0;
        let lm = (1.0 - r) / 2.0;
        let expected = -lp * lp.log2() - lm * lm.log2();
        assert!((holevo(&ens) - expected).abs() < 1e-12);
        assert!((expected - 0.6009).abs() < 5e-5);
    }

    #[test]
    fn multipartite_examples() {
        let all = Partition::new(vec![s(&["A"]), s(&["B"]), s(&["C"])]).unwrap();
        assert!((multipartite_mi(&ghz3(), &all).unwrap() - 3.0).abs() < 1e-12);

        let a = random_density(&SubsystemLayout::new(vec![("A", 2)]).unwrap(), 2, 11).unwrap();
        let b = random_density(&SubsystemLayout::new(vec![("B", 2)]).unwrap(), 1, 12).unwrap();
        let c_ = random_density(&SubsystemLayout::new(vec![("C", 2)]).unwrap(), 2, 13).unwrap();
        let prod = DensityMatrix::tensor(&DensityMatrix::tensor(&a, &b).unwrap(), &c_).unwrap();
        assert!(multipartite_mi(&prod, &all).unwrap().abs() < 1e-10);

        let two = Partition::two(s(&["A"]), s(&["B"])).unwrap();
        let bell = bell();
        let via_multi = multipartite_mi(&bell, &two).unwrap();
        let via_mi = mutual_information(&bell, &two).unwrap();
        assert!((via_multi - 2.0).abs() < 1e-12);
        assert!((via_multi - via_mi).abs() < 1e-15);

        assert!(multipartite_mi(&bell, &Partition::new(vec![s(&["A"])]).unwrap()).is_err());
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        for i in 0..10 {
            let layout = SubsystemLayout::new(vec![("A", 4)]).unwrap();
            let rho = random_density(&layout, 3, split_seed(21, i)).unwrap();
            let u = random_unitary(4, split_seed(22, i)).unwrap();
            let rotated = rho.apply_unitary(&u, &s(&["A"])).unwrap();
            assert!((vn_entropy(&rotated) - vn_entropy(&rho)).abs() < 1e-10);
        }
    }

    #[test]
    fn mutual_information_shrinks_when_discarding() {
        for i in 0..10 {
            let layout =
                SubsystemLayout::new(vec![("X1", 2), ("X2", 2), ("Y1", 2), ("Y2", 2)]).unwrap();
            let rho = random_density(&layout, 4, split_seed(31, i)).unwrap();
            let big = mutual_information(
                &rho,
                &Partition::two(s(&["X1", "X2"]), s(&["Y1", "Y2"])).unwrap(),
            )
            .unwrap();
            let small =
                mutual_information(&rho, &Partition::two(s(&["X1"]), s(&["Y1"])).unwrap()).unwrap();
            assert!(big - small >= -1e-9);
            assert!(big >= -1e-9);
        }
    }

    #[test]
    fn strong_subadditivity_holds_on_random_states() {
        for i in 0..50 {
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2), ("E", 2)]).unwrap();
            let rho = random_density(&layout, 5, split_seed(41, i)).unwrap();
            let v = conditional_mi(&rho, &s(&["A"]), &s(&["B"]), &s(&["E"])).unwrap();
            assert!(v >= -1e-9, "SSA violated: {v}");
        }
    }

    #[test]
    fn pure_bipartite_entropies_balance() {
        for i in 0..10 {
            let layout = SubsystemLayout::new(vec![("X", 3), ("Y", 4)]).unwrap();
            let psi = random_pure(&layout, split_seed(51, i)).unwrap();
            let sx = vn_entropy(&psi.reduced_density(&s(&["X"])).unwrap());
            let sy = vn_entropy(&psi.reduced_density(&s(&["Y"])).unwrap());
            assert!((sx - sy).abs() < 1e-10);
        }
    }

    #[test]
    fn holevo_matches_pointer_mutual_information() {
        for i in 0..5 {
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
            let rho = random_density(&layout, 3, split_seed(61, i)).unwrap();
            let m = crate::random::random_instrument("A", 2, 2, 2, split_seed(62, i)).unwrap();
            let ens = apply_instrument(&rho, &m).unwrap();
            let chi = holevo(&ens);
            let dilated = dilate_instrument(&rho, &m).unwrap();
            let pointer = dilated.layout().labels()[0].clone();
            let mi = mutual_information(
                &dilated,
                &Partition::two(vec![pointer], s(&["A", "B"])).unwrap(),
            )
            .unwrap();
            assert!((chi - mi).abs() < 1e-9, "chi={chi} mi={mi}");
        }
    }

    #[test]
    fn kraus_ensemble_of_z_measurement_has_unit_holevo() {
        let p0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p1 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let m = KrausInstrument::new("A", vec![p0, p1]).unwrap();
        let ens = apply_instrument(&cc_state(), &m).unwrap();
        assert!((holevo(&ens) - 1.0).abs() < 1e-12);
    }
}
