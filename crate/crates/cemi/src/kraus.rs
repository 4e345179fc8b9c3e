//! Quantum instruments: validated Kraus families, ensembles of post-states,
//! and the two-ancilla unitary dilation whose pointer decoheres into the
//! instrument outcome.

use crate::error::{Error, Result};
use crate::layout::SubsystemLayout;
use crate::linalg::{complete_to_unitary, max_abs, CMat, C64};
use crate::state::DensityMatrix;

pub const COMPLETENESS_TOL: f64 = 1e-8;
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;
/// Outcomes with probability at or below this are dropped from ensembles.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// A finite Kraus family acting on one named subsystem. Operators may be
/// rectangular (output dimension differs from input) but must share a common
/// shape and satisfy the completeness relation.
#[derive(Clone, Debug)]
pub struct KrausInstrument {
    target_label: String,
    operators: Vec<CMat>,
}

impl KrausInstrument {
    pub fn new(target_label: impl Into<String>, operators: Vec<CMat>) -> Result<Self> {
        let target_label = target_label.into();
        if target_label.is_empty() {
            return Err(Error::BadArgument(
                "instrument target label is empty".into(),
            ));
        }
        if operators.is_empty() {
            return Err(Error::BadArgument(
                "instrument needs at least one Kraus operator".into(),
            ));
        }
        let rows = operators[0].nrows();
        let cols = operators[0].ncols();
        if rows == 0 || cols == 0 {
            return Err(Error::KrausShape {
                index: 0,
                rows,
                cols,
                expected_rows: rows.max(1),
                expected_cols: cols.max(1),
            });
        }
        for (index, op) in operators.iter().enumerate() {
            if op.nrows() != rows || op.ncols() != cols {
                return Err(Error::KrausShape {
                    index,
                    rows: op.nrows(),
                    cols: op.ncols(),
                    expected_rows: rows,
                    expected_cols: cols,
                });
            }
        }
        let mut sum = CMat::zeros(cols, cols);
        for op in &operators {
            sum += op.adjoint() * op;
        }
        let defect = max_abs(&(sum - CMat::identity(cols, cols)));
        if defect > COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus { defect });
        }
        Ok(KrausInstrument {
            target_label,
            operators,
        })
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.operators[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.operators[0].nrows()
    }
}

/// Probability-weighted list of states on a common layout. Zero-probability
/// members are dropped at construction; the rest must sum to one.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let mut sum = 0.0;
        for (index, (p, _)) in members.iter().enumerate() {
            if *p < -ZERO_PROBABILITY {
                return Err(Error::NegativeProbability { value: *p, index });
            }
            sum += p.max(0.0);
        }
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::ProbabilitySum { sum });
        }
        let kept: Vec<(f64, DensityMatrix)> = members
            .into_iter()
            .filter(|(p, _)| *p > ZERO_PROBABILITY)
            .collect();
        if kept.is_empty() {
            return Err(Error::ProbabilitySum { sum: 0.0 });
        }
        for (_, state) in &kept[1..] {
            if state.layout() != kept[0].1.layout() {
                return Err(Error::LayoutMismatch {
                    context: "ensemble members on different layouts".into(),
                });
            }
        }
        Ok(Ensemble { members: kept })
    }

    pub fn members(&self) -> &[(f64, DensityMatrix)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Probability-weighted mixture of the members.
    pub fn average(&self) -> DensityMatrix {
        let mut acc = CMat::zeros(self.members[0].1.dim(), self.members[0].1.dim());
        for (p, state) in &self.members {
            acc += state.matrix() * C64::new(*p, 0.0);
        }
        DensityMatrix::from_trusted(self.members[0].1.layout().clone(), acc)
    }
}

/// Applies each Kraus operator on the instrument's target factor and returns
/// the outcome ensemble {p_k = tr(A_k rho A_k^dag), post-state}. The output
/// layout keeps the original factor order; the target dimension becomes the
/// Kraus output dimension.
pub fn apply_instrument(rho: &DensityMatrix, m: &KrausInstrument) -> Result<Ensemble> {
    let (sigma, rest_order) = target_first(rho, m)?;
    let rest_dim = sigma.dim() / m.input_dim();
    let eye = CMat::identity(rest_dim, rest_dim);
    let out_layout = instrument_output_layout(rho, m)?;
    let mut members = Vec::with_capacity(m.len());
    for op in m.operators() {
        let embedded = op.kronecker(&eye);
        let post = &embedded * sigma.matrix() * embedded.adjoint();
        let p = post.trace().re;
        if p <= ZERO_PROBABILITY {
            continue;
        }
        let front_layout = front_layout(m, rho, rest_order.clone())?;
        let state = DensityMatrix::from_trusted(front_layout, post / C64::new(p, 0.0))
            .permuted(&out_layout.labels())?;
        members.push((p, state));
    }
    Ensemble::new(members)
}

/// Unitary dilation of the instrument on the enlarged space
/// target ⊗ A0 ⊗ A1. Input composite dimensions are
/// (d_in, K, K·d_out) with both ancillas prepared in |0⟩; output composite
/// dimensions of the same space read (d_out, K, K·d_in). The column at input
/// index (i, 0, 0) is Σ_k (A_k|i⟩) ⊗ |k⟩_{A0} ⊗ |k·d_in⟩_{A1}; remaining
/// columns are an orthonormal completion in ascending slot order.
pub fn dilation_unitary(m: &KrausInstrument) -> Result<CMat> {
    let d_in = m.input_dim();
    let d_out = m.output_dim();
    let k_num = m.len();
    let big = d_in * k_num * k_num * d_out;
    let mut constrained = CMat::zeros(big, d_in);
    for i in 0..d_in {
        for (k, op) in m.operators().iter().enumerate() {
            for j in 0..d_out {
                // Output composite (j, k, k*d_in) over dims (d_out, K, K*d_in).
                let row = j * (k_num * k_num * d_in) + k * (k_num * d_in) + k * d_in;
                constrained[(row, i)] = op[(j, i)];
            }
        }
    }
    let packed = complete_to_unitary(&constrained)?;
    // Scatter: input index of the i-th constrained column is (i, 0, 0) over
    // dims (d_in, K, K*d_out); completion columns fill the rest ascending.
    let mut unitary = CMat::zeros(big, big);
    let stride = k_num * k_num * d_out;
    let constrained_slots: Vec<usize> = (0..d_in).map(|i| i * stride).collect();
    for (i, &slot) in constrained_slots.iter().enumerate() {
        unitary.set_column(slot, &packed.column(i));
    }
    let mut next = d_in;
    for slot in 0..big {
        if !constrained_slots.contains(&slot) {
            unitary.set_column(slot, &packed.column(next));
            next += 1;
        }
    }
    Ok(unitary)
}

/// Runs the instrument as a unitary process: appends ancillas A0, A1 in |0⟩,
/// applies the dilation unitary on (target, A0, A1), and traces A1. The
/// result is Σ_k A_k ρ A_k† ⊗ |k⟩⟨k| on layout (pointer, original order),
/// with the pointer label derived fresh from "A0".
pub fn dilate_instrument(rho: &DensityMatrix, m: &KrausInstrument) -> Result<DensityMatrix> {
    let (sigma, rest_order) = target_first(rho, m)?;
    let d_in = m.input_dim();
    let d_out = m.output_dim();
    let k_num = m.len();
    let rest_dim = sigma.dim() / d_in;
    let pointer = rho.layout().fresh_label("A0");
    let scratch = rho.layout().fresh_label("A1");

    let unitary = dilation_unitary(m)?;
    // Ancillas sit in |0>, so only the constrained columns act: the embedded
    // isometry is W = U[:, (i,0,0)] ⊗ I_rest.
    let stride = k_num * k_num * d_out;
    let mut embed = CMat::zeros(unitary.nrows(), d_in);
    for i in 0..d_in {
        embed.set_column(i, &unitary.column(i * stride));
    }
    let w = embed.kronecker(&CMat::identity(rest_dim, rest_dim));
    let dilated = &w * sigma.matrix() * w.adjoint();

    let mut entries = vec![
        (m.target_label().to_string(), d_out),
        (pointer.clone(), k_num),
        (scratch.clone(), k_num * d_in),
    ];
    for l in &rest_order {
        entries.push((l.clone(), rho.layout().dim_of(l)?));
    }
    let full = DensityMatrix::from_trusted(SubsystemLayout::new(entries)?, dilated);
    let traced = full.partial_trace(&[scratch])?;

    let mut final_order = vec![pointer];
    final_order.extend(rho.layout().labels());
    traced.permuted(&final_order)
}

fn target_first(rho: &DensityMatrix, m: &KrausInstrument) -> Result<(DensityMatrix, Vec<String>)> {
    let t = m.target_label().to_string();
    let t_dim = rho.layout().dim_of(&t)?;
    if t_dim != m.input_dim() {
        return Err(Error::ShapeMismatch {
            rows: m.output_dim(),
            cols: m.input_dim(),
            expected: t_dim,
        });
    }
    let rest: Vec<String> = rho
        .layout()
        .labels()
        .into_iter()
        .filter(|l| *l != t)
        .collect();
    let mut order = vec![t];
    order.extend(rest.iter().cloned());
    Ok((rho.permuted(&order)?, rest))
}

fn front_layout(
    m: &KrausInstrument,
    rho: &DensityMatrix,
    rest_order: Vec<String>,
) -> Result<SubsystemLayout> {
    let mut entries = vec![(m.target_label().to_string(), m.output_dim())];
    for l in rest_order {
        let d = rho.layout().dim_of(&l)?;
        entries.push((l, d));
    }
    SubsystemLayout::new(entries)
}

fn instrument_output_layout(rho: &DensityMatrix, m: &KrausInstrument) -> Result<SubsystemLayout> {
    let entries = rho
        .layout()
        .entries()
        .iter()
        .map(|(l, d)| {
            if l == m.target_label() {
                (l.clone(), m.output_dim())
            } else {
                (l.clone(), *d)
            }
        })
        .collect();
    SubsystemLayout::new(entries)
}
