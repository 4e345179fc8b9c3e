//! Multipartite state representations and the tensor bookkeeping on them:
//! Kronecker products, partial traces, factor permutations, purification,
//! embedded unitaries, and trace distance.

use crate::error::{Error, Result};
use crate::layout::SubsystemLayout;
use crate::linalg::{eigh, eigh_values, max_abs, CMat, CVec, C64};

pub const HERMITICITY_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-8;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
pub const NORM_TOL: f64 = 1e-10;
/// Eigenvalues at or below this threshold count as zero for rank purposes.
pub const RANK_TOL: f64 = 1e-12;

/// Density matrix with a labeled tensor-factor layout.
///
/// Construction measures the Hermiticity and trace defects on the raw input,
/// rejects them beyond tolerance, then symmetrizes and renormalizes so that
/// accumulated floating-point drift does not propagate. The eigenvalue floor
/// is checked on the cleaned matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    entries: CMat,
}

impl DensityMatrix {
    pub fn new(layout: SubsystemLayout, entries: CMat) -> Result<Self> {
        let n = layout.total_dim();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::ShapeMismatch {
                rows: entries.nrows(),
                cols: entries.ncols(),
                expected: n,
            });
        }
        let herm_defect = max_abs(&(&entries - entries.adjoint()));
        if herm_defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                defect: herm_defect,
            });
        }
        let trace = entries.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceDeviation {
                defect: (trace - 1.0).abs(),
            });
        }
        let cleaned = clean(entries);
        let min_eig = eigh_values(&cleaned).first().copied().unwrap_or(0.0);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::NotPositive {
                min_eigenvalue: min_eig,
            });
        }
        Ok(DensityMatrix {
            layout,
            entries: cleaned,
        })
    }

    /// Constructor for matrices produced by operations that preserve the type
    /// invariants exactly (partial traces, unitary conjugation, validated
    /// mixtures). Symmetrizes and renormalizes but skips the spectral check.
    pub(crate) fn from_trusted(layout: SubsystemLayout, entries: CMat) -> Self {
        debug_assert_eq!(entries.nrows(), layout.total_dim());
        debug_assert_eq!(entries.ncols(), layout.total_dim());
        DensityMatrix {
            entries: clean(entries),
            layout,
        }
    }

    pub fn from_pure(psi: &PureStateVector) -> Self {
        let v = &psi.amplitudes;
        DensityMatrix::from_trusted(psi.layout.clone(), v * v.adjoint())
    }

    /// |index><index| in the computational basis.
    pub fn basis_state(layout: SubsystemLayout, index: usize) -> Result<Self> {
        Ok(DensityMatrix::from_pure(&PureStateVector::basis(
            layout, index,
        )?))
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let n = layout.total_dim();
        let entries = CMat::identity(n, n) / C64::new(n as f64, 0.0);
        DensityMatrix { layout, entries }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Number of eigenvalues above the rank threshold 1e-12.
    pub fn rank(&self) -> usize {
        eigh_values(&self.entries)
            .iter()
            .filter(|&&l| l > RANK_TOL)
            .count()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        require_same_layout(&self.layout, &other.layout)?;
        Ok(max_abs(&(&self.entries - &other.entries)))
    }

    /// Kronecker product; layouts concatenate and must be label-disjoint.
    pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = a.layout.concat(&b.layout)?;
        Ok(DensityMatrix {
            entries: a.entries.kronecker(&b.entries),
            layout,
        })
    }

    /// Traces out the `drop` labels; the remaining layout keeps its original
    /// order. Dropping nothing is the identity; dropping everything is an
    /// error.
    pub fn partial_trace(&self, drop: &[String]) -> Result<DensityMatrix> {
        if drop.is_empty() {
            return Ok(self.clone());
        }
        let drop_pos = self.layout.positions_of(drop)?;
        if drop_pos.len() == self.layout.len() {
            return Err(Error::TraceEverything);
        }
        let keep_pos: Vec<usize> = (0..self.layout.len())
            .filter(|p| !drop_pos.contains(p))
            .collect();
        let keep_off = self.layout.offsets(&keep_pos);
        let drop_off = self.layout.offsets(&drop_pos);
        let out_layout = self.layout.select(&keep_pos)?;
        let m = keep_off.len();
        let n = self.entries.nrows();
        let src = self.entries.as_slice(); // column-major: (i, j) -> i + j*n
        let mut out = CMat::zeros(m, m);
        for b in 0..m {
            let col_base = keep_off[b];
            for a in 0..m {
                let row_base = keep_off[a];
                let mut acc = C64::new(0.0, 0.0);
                for &t in &drop_off {
                    acc += src[(row_base + t) + (col_base + t) * n];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DensityMatrix::from_trusted(out_layout, out))
    }

    /// Traces out the complement of `keep`; result order follows the layout.
    pub fn reduce_to(&self, keep: &[String]) -> Result<DensityMatrix> {
        let keep_pos = self.layout.positions_of(keep)?;
        let drop: Vec<String> = self
            .layout
            .labels()
            .into_iter()
            .enumerate()
            .filter_map(|(p, l)| (!keep_pos.contains(&p)).then_some(l))
            .collect();
        self.partial_trace(&drop)
    }

    /// Reorders tensor factors to the given label order (a permutation of the
    /// current labels).
    pub fn permuted(&self, order: &[String]) -> Result<DensityMatrix> {
        let table = permutation_table(&self.layout, order)?;
        let n = self.entries.nrows();
        let src = self.entries.as_slice();
        let mut out = CMat::zeros(n, n);
        for j in 0..n {
            let oj = table[j];
            for i in 0..n {
                out[(i, j)] = src[table[i] + oj * n];
            }
        }
        let order_pos = self.layout.positions_of(order)?;
        // positions_of sorts; rebuild in the requested order instead.
        let mut entries = Vec::with_capacity(order.len());
        let _ = order_pos;
        for l in order {
            entries.push((l.clone(), self.layout.dim_of(l)?));
        }
        Ok(DensityMatrix {
            entries: out,
            layout: SubsystemLayout::new(entries)?,
        })
    }

    /// Applies a square unitary acting on the listed labels (in the given
    /// order), embedded as identity elsewhere.
    pub fn apply_unitary(&self, u: &CMat, targets: &[String]) -> Result<DensityMatrix> {
        let target_dim: usize = targets
            .iter()
            .map(|l| self.layout.dim_of(l))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .product();
        if u.nrows() != target_dim || u.ncols() != target_dim {
            return Err(Error::ShapeMismatch {
                rows: u.nrows(),
                cols: u.ncols(),
                expected: target_dim,
            });
        }
        let original_order = self.layout.labels();
        let mut front: Vec<String> = targets.to_vec();
        for l in &original_order {
            if !targets.contains(l) {
                front.push(l.clone());
            }
        }
        let permuted = self.permuted(&front)?;
        let rest_dim = permuted.dim() / target_dim;
        let full = u.kronecker(&CMat::identity(rest_dim, rest_dim));
        let conjugated = &full * &permuted.entries * full.adjoint();
        DensityMatrix {
            entries: conjugated,
            layout: permuted.layout,
        }
        .permuted(&original_order)
    }

    /// Pure state on (original layout, purifier) whose reduction over the
    /// purifier equals this matrix; purifier dimension = numerical rank.
    /// Schmidt coefficients come out in descending order.
    pub fn purify(&self, purifier_label: &str) -> Result<PureStateVector> {
        if self.layout.contains(purifier_label) {
            return Err(Error::DuplicateLabel(purifier_label.to_string()));
        }
        let (vals, vecs) = eigh(&self.entries);
        let kept: Vec<(f64, usize)> = vals
            .iter()
            .enumerate()
            .rev() // descending eigenvalues
            .filter(|(_, &l)| l > RANK_TOL)
            .map(|(i, &l)| (l, i))
            .collect();
        let r = kept.len().max(1);
        let n = self.dim();
        let mut amps = CVec::zeros(n * r);
        for (slot, &(l, col)) in kept.iter().enumerate() {
            let coeff = C64::new(l.sqrt(), 0.0);
            for s in 0..n {
                amps[s * r + slot] = coeff * vecs[(s, col)];
            }
        }
        let layout = self
            .layout
            .concat(&SubsystemLayout::new(vec![(purifier_label, r)])?)?;
        PureStateVector::new(layout, amps)
    }

    /// Projects `label` onto computational basis value `k`; returns the
    /// outcome probability and the normalized conditional state on the
    /// remaining labels (None when the probability is numerically zero).
    pub fn conditioned(&self, label: &str, k: usize) -> Result<(f64, Option<DensityMatrix>)> {
        let pos = self.layout.position(label)?;
        let dim = self.layout.dim_of(label)?;
        if k >= dim {
            return Err(Error::BadArgument(format!(
                "basis value {k} out of range for '{label}' (dim {dim})"
            )));
        }
        let keep_pos: Vec<usize> = (0..self.layout.len()).filter(|&p| p != pos).collect();
        let keep_off = self.layout.offsets(&keep_pos);
        let stride = self.layout.strides()[pos];
        let shift = k * stride;
        let m = keep_off.len();
        let n = self.entries.nrows();
        let src = self.entries.as_slice();
        let mut block = CMat::zeros(m, m);
        for b in 0..m {
            for a in 0..m {
                block[(a, b)] = src[(keep_off[a] + shift) + (keep_off[b] + shift) * n];
            }
        }
        let p = block.trace().re;
        if p < RANK_TOL {
            return Ok((p.max(0.0), None));
        }
        let layout = self.layout.select(&keep_pos)?;
        let state = DensityMatrix::from_trusted(layout, block / C64::new(p, 0.0));
        Ok((p, Some(state)))
    }
}

/// Sum of absolute eigenvalues of a - b (the trace norm of the difference).
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    require_same_layout(a.layout(), b.layout())?;
    let diff = a.matrix() - b.matrix();
    Ok(eigh_values(&diff).iter().map(|l| l.abs()).sum())
}

/// Normalized pure state vector with a labeled layout.
#[derive(Clone, Debug)]
pub struct PureStateVector {
    layout: SubsystemLayout,
    amplitudes: CVec,
}

impl PureStateVector {
    pub fn new(layout: SubsystemLayout, amplitudes: CVec) -> Result<Self> {
        let n = layout.total_dim();
        if amplitudes.len() != n {
            return Err(Error::LengthMismatch {
                len: amplitudes.len(),
                expected: n,
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NormDeviation {
                defect: (norm - 1.0).abs(),
            });
        }
        Ok(PureStateVector {
            layout,
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    pub(crate) fn from_trusted(layout: SubsystemLayout, amplitudes: CVec) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.total_dim());
        let norm = amplitudes.norm();
        PureStateVector {
            layout,
            amplitudes: amplitudes / C64::new(norm, 0.0),
        }
    }

    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::BadArgument(format!(
                "basis index {index} out of range for dimension {n}"
            )));
        }
        let mut amps = CVec::zeros(n);
        amps[index] = C64::new(1.0, 0.0);
        Ok(PureStateVector {
            layout,
            amplitudes: amps,
        })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn tensor(a: &PureStateVector, b: &PureStateVector) -> Result<PureStateVector> {
        let layout = a.layout.concat(&b.layout)?;
        Ok(PureStateVector {
            amplitudes: a.amplitudes.kronecker(&b.amplitudes),
            layout,
        })
    }

    pub fn permuted(&self, order: &[String]) -> Result<PureStateVector> {
        let table = permutation_table(&self.layout, order)?;
        let mut amps = CVec::zeros(self.amplitudes.len());
        for (i, &src) in table.iter().enumerate() {
            amps[i] = self.amplitudes[src];
        }
        let mut entries = Vec::with_capacity(order.len());
        for l in order {
            entries.push((l.clone(), self.layout.dim_of(l)?));
        }
        Ok(PureStateVector {
            amplitudes: amps,
            layout: SubsystemLayout::new(entries)?,
        })
    }

    /// Amplitudes reshaped as a matrix: rows run over the labels NOT listed,
    /// columns over `col_labels` (both in layout order).
    pub fn split_matrix(&self, col_labels: &[String]) -> Result<CMat> {
        let col_pos = self.layout.positions_of(col_labels)?;
        let row_pos: Vec<usize> = (0..self.layout.len())
            .filter(|p| !col_pos.contains(p))
            .collect();
        let row_off = if row_pos.is_empty() {
            vec![0]
        } else {
            self.layout.offsets(&row_pos)
        };
        let col_off = if col_pos.is_empty() {
            vec![0]
        } else {
            self.layout.offsets(&col_pos)
        };
        let mut m = CMat::zeros(row_off.len(), col_off.len());
        for (j, &cj) in col_off.iter().enumerate() {
            for (i, &ri) in row_off.iter().enumerate() {
                m[(i, j)] = self.amplitudes[ri + cj];
            }
        }
        Ok(m)
    }

    /// Density matrix of the `keep` subsystems, computed directly from the
    /// amplitudes (Gram matrix of the split), never forming the global
    /// projector.
    pub fn reduced_density(&self, keep: &[String]) -> Result<DensityMatrix> {
        let keep_pos = self.layout.positions_of(keep)?;
        if keep_pos.is_empty() {
            return Err(Error::EmptyLayout);
        }
        let drop: Vec<String> = self
            .layout
            .labels()
            .into_iter()
            .enumerate()
            .filter_map(|(p, l)| (!keep_pos.contains(&p)).then_some(l))
            .collect();
        let m = self.split_matrix(&drop)?;
        Ok(DensityMatrix::from_trusted(
            self.layout.select(&keep_pos)?,
            &m * m.adjoint(),
        ))
    }
}

fn clean(entries: CMat) -> CMat {
    let sym = (&entries + entries.adjoint()) * C64::new(0.5, 0.0);
    let trace = sym.trace().re;
    sym / C64::new(trace, 0.0)
}

fn require_same_layout(a: &SubsystemLayout, b: &SubsystemLayout) -> Result<()> {
    if a != b {
        return Err(Error::LayoutMismatch {
            context: format!(
                "{:?} vs {:?}",
                a.entries()
                    .iter()
                    .map(|(l, d)| format!("{l}:{d}"))
                    .collect::<Vec<_>>(),
                b.entries()
                    .iter()
                    .map(|(l, d)| format!("{l}:{d}"))
                    .collect::<Vec<_>>()
            ),
        });
    }
    Ok(())
}

/// For each composite index of the permuted layout, the corresponding
/// composite index of the original layout.
fn permutation_table(layout: &SubsystemLayout, order: &[String]) -> Result<Vec<usize>> {
    if order.len() != layout.len() {
        return Err(Error::LayoutMismatch {
            context: format!(
                "permutation lists {} labels, layout has {}",
                order.len(),
                layout.len()
            ),
        });
    }
    let mut perm = Vec::with_capacity(order.len());
    for l in order {
        perm.push(layout.position(l)?);
    }
    {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if seen[p] {
                return Err(Error::DuplicateLabel(
                    order[perm.iter().position(|&q| q == p).unwrap()].clone(),
                ));
            }
            seen[p] = true;
        }
    }
    let dims = layout.dims();
    let strides = layout.strides();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total = layout.total_dim();
    let mut table = Vec::with_capacity(total);
    let mut digits = vec![0usize; perm.len()];
    for _ in 0..total {
        let mut old = 0;
        for (k, &d) in digits.iter().enumerate() {
            old += d * strides[perm[k]];
        }
        table.push(old);
        crate::linalg::increment_digits(&mut digits, &new_dims);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qubit(label: &str) -> SubsystemLayout {
        SubsystemLayout::new(vec![(label, 2)]).unwrap()
    }

    fn bell() -> PureStateVector {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        PureStateVector::new(
            layout,
            CVec::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn constructor_reports_defects() {
        let layout = qubit("A");
        let non_herm =
            CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.3, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(layout.clone(), non_herm),
            Err(Error::NotHermitian { .. })
        ));
        let bad_trace = CMat::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(layout.clone(), bad_trace),
            Err(Error::TraceDeviation { .. })
        ));
        let negative =
            CMat::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(layout, negative),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn tensor_of_maximally_mixed_qubits_is_quarter_identity() {
        let a = DensityMatrix::maximally_mixed(qubit("A"));
        let b = DensityMatrix::maximally_mixed(qubit("B"));
        let ab = DensityMatrix::tensor(&a, &b).unwrap();
        let expected = CMat::identity(4, 4) / c(4.0, 0.0);
        assert!(max_abs(&(ab.matrix() - expected)) < 1e-15);
        assert!(matches!(
            DensityMatrix::tensor(&a, &a),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn tensor_then_partial_trace_recovers_factor() {
        let a = DensityMatrix::new(
            qubit("A"),
            CMat::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]),
        )
        .unwrap();
        let b = DensityMatrix::maximally_mixed(SubsystemLayout::new(vec![("B", 3)]).unwrap());
        let ab = DensityMatrix::tensor(&a, &b).unwrap();
        let back = ab.partial_trace(&["B".into()]).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = bell().density();
        let a = rho.partial_trace(&["B".into()]).unwrap();
        let expected = DensityMatrix::maximally_mixed(qubit("A"));
        assert!(a.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_identity_and_order_independence() {
        let rho = bell().density();
        assert!(
            rho.partial_trace(&[])
                .unwrap()
                .max_abs_diff(&rho)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(matches!(
            rho.partial_trace(&["A".into(), "B".into()]),
            Err(Error::TraceEverything)
        ));

        let layout = SubsystemLayout::new(vec![("X", 2), ("Y", 2), ("Z", 3)]).unwrap();
        let raw = CVec::from_vec(
            (0..12)
                .map(|k| c(((k + 1) as f64).sqrt(), (k as f64) * 0.1))
                .collect::<Vec<_>>(),
        );
        let norm = raw.norm();
        let rho = PureStateVector::new(layout, raw / c(norm, 0.0))
            .unwrap()
            .density();
        let one_shot = rho.partial_trace(&["X".into(), "Z".into()]).unwrap();
        let two_step = rho
            .partial_trace(&["X".into()])
            .unwrap()
            .partial_trace(&["Z".into()])
            .unwrap();
        assert!(one_shot.max_abs_diff(&two_step).unwrap() < 1e-12);
        // Trace preserved.
        assert!((one_shot.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_round_trip() {
        let rho = bell().density();
        let flipped = rho.permuted(&["B".into(), "A".into()]).unwrap();
        let back = flipped.permuted(&["A".into(), "B".into()]).unwrap();
        assert!(back.max_abs_diff(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn purify_examples() {
        // Maximally mixed qubit: Schmidt coefficients (1/sqrt2, 1/sqrt2).
        let mm = DensityMatrix::maximally_mixed(qubit("A"));
        let psi = mm.purify("P").unwrap();
        assert_eq!(psi.layout().dim_of("P").unwrap(), 2);
        let back = psi.reduced_density(&["A".into()]).unwrap();
        assert!(back.max_abs_diff(&mm).unwrap() < 1e-10);

        // Pure input: dim-1 purifier.
        let pure = bell().density();
        let psi2 = pure.purify("P").unwrap();
        assert_eq!(psi2.layout().dim_of("P").unwrap(), 1);

        // diag(1/2, 1/4, 1/4): Schmidt coefficients descending.
        let layout = SubsystemLayout::new(vec![("A", 3)]).unwrap();
        let diag = CMat::from_diagonal(&CVec::from_vec(vec![
            c(0.5, 0.0),
            c(0.25, 0.0),
            c(0.25, 0.0),
        ]));
        let rho = DensityMatrix::new(layout, diag).unwrap();
        let psi3 = rho.purify("P").unwrap();
        let m = psi3.split_matrix(&["P".into()]).unwrap();
        let mut schmidt: Vec<f64> = (0..3).map(|j| m.column(j).norm()).collect();
        schmidt.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((schmidt[0] - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!((schmidt[1] - 0.5).abs() < 1e-12);
        assert!((schmidt[2] - 0.5).abs() < 1e-12);
        let back3 = psi3.reduced_density(&["A".into()]).unwrap();
        assert!(back3.max_abs_diff(&rho).unwrap() < 1e-10);
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityMatrix::basis_state(qubit("A"), 0).unwrap();
        let one = DensityMatrix::basis_state(qubit("A"), 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(qubit("A"));
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 2.0).abs() < 1e-12);
        assert!((trace_distance(&zero, &mixed).unwrap() - 1.0).abs() < 1e-12);
        let other = DensityMatrix::basis_state(qubit("B"), 0).unwrap();
        assert!(trace_distance(&zero, &other).is_err());
    }

    #[test]
    fn pure_norm_is_validated() {
        let layout = qubit("A");
        let bad = CVec::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            PureStateVector::new(layout, bad),
            Err(Error::NormDeviation { .. })
        ));
    }

    #[test]
    fn reduced_density_matches_projector_route() {
        let psi = bell();
        let via_gram = psi.reduced_density(&["A".into()]).unwrap();
        let via_proj = psi.density().partial_trace(&["B".into()]).unwrap();
        assert!(via_gram.max_abs_diff(&via_proj).unwrap() < 1e-14);
    }

    #[test]
    fn conditioning_on_bell_pointer() {
        let rho = bell().density();
        let (p0, s0) = rho.conditioned("A", 0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12);
        let expected = DensityMatrix::basis_state(qubit("B"), 0).unwrap();
        assert!(s0.unwrap().max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn embedded_unitary_acts_on_named_factor() {
        let rho = bell().density();
        let x = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let flipped = rho.apply_unitary(&x, &["B".into()]).unwrap();
        // X on B maps |00>+|11> to |01>+|10|; marginals stay maximally mixed.
        let a = flipped.partial_trace(&["B".into()]).unwrap();
        assert!(
            a.max_abs_diff(&DensityMatrix::maximally_mixed(qubit("A")))
                .unwrap()
                < 1e-12
        );
        let back = flipped.apply_unitary(&x, &["B".into()]).unwrap();
        assert!(back.max_abs_diff(&rho).unwrap() < 1e-12);
    }
}
