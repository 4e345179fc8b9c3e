//! Conditioned correlation functionals over extensions of a base state, and
//! the explicit extension constructions (trivial, separable-flag, convex-flag,
//! product) whose objective values are pinned by entropy algebra.

use crate::entropy::entropy_of;
use crate::error::{Error, Result};
use crate::layout::SubsystemLayout;
use crate::linalg::{CMat, C64};
use crate::state::DensityMatrix;

pub const REDUCTION_TOL: f64 = 1e-8;

/// One party's holdings inside an extension: the base systems it owns and the
/// auxiliary "prime" systems attached to them (possibly none, possibly dim 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Party {
    pub systems: Vec<String>,
    pub primes: Vec<String>,
}

impl Party {
    pub fn new(systems: Vec<String>, primes: Vec<String>) -> Self {
        Party { systems, primes }
    }

    /// Systems followed by primes: everything the party holds.
    pub fn block(&self) -> Vec<String> {
        self.systems.iter().chain(&self.primes).cloned().collect()
    }
}

/// A state extending a declared base: tracing out every prime and environment
/// label reproduces the base within 1e-8. Parties map base systems to their
/// primes; environment labels belong to no party.
#[derive(Clone, Debug)]
pub struct Extension {
    state: DensityMatrix,
    parties: Vec<Party>,
    environment: Vec<String>,
    base: DensityMatrix,
}

impl Extension {
    pub fn new(
        state: DensityMatrix,
        parties: Vec<Party>,
        environment: Vec<String>,
        base: DensityMatrix,
    ) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::MalformedParties("no parties given".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut claim = |label: &String| -> Result<()> {
            if !seen.insert(label.clone()) {
                return Err(Error::MalformedParties(format!(
                    "label '{label}' assigned twice"
                )));
            }
            Ok(())
        };
        for (k, party) in parties.iter().enumerate() {
            if party.systems.is_empty() {
                return Err(Error::MalformedParties(format!(
                    "party {k} holds no base system"
                )));
            }
            for l in party.systems.iter().chain(&party.primes) {
                claim(l)?;
            }
        }
        for l in &environment {
            claim(l)?;
        }
        for l in &seen {
            if !state.layout().contains(l) {
                return Err(Error::UnknownLabel(l.clone()));
            }
        }
        if seen.len() != state.layout().len() {
            let unassigned: Vec<String> = state
                .layout()
                .labels()
                .into_iter()
                .filter(|l| !seen.contains(l))
                .collect();
            return Err(Error::MalformedParties(format!(
                "labels not assigned to any party or environment: {unassigned:?}"
            )));
        }
        let systems: Vec<String> = parties.iter().flat_map(|p| p.systems.clone()).collect();
        let reduction = state.reduce_to(&systems)?;
        if reduction.layout() != base.layout() {
            return Err(Error::LayoutMismatch {
                context:
                    "declared base layout differs from the reduction over primes and environment"
                        .into(),
            });
        }
        let defect = reduction.max_abs_diff(&base)?;
        if defect > REDUCTION_TOL {
            return Err(Error::ReductionMismatch { defect });
        }
        Ok(Extension {
            state,
            parties,
            environment,
            base,
        })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn environment(&self) -> &[String] {
        &self.environment
    }

    pub fn base(&self) -> &DensityMatrix {
        &self.base
    }

    /// Blocks of full holdings (systems + primes), one per party.
    pub fn party_blocks(&self) -> Vec<Vec<String>> {
        self.parties.iter().map(|p| p.block()).collect()
    }

    /// Blocks of primes only, one per party (possibly empty blocks).
    pub fn prime_blocks(&self) -> Vec<Vec<String>> {
        self.parties.iter().map(|p| p.primes.clone()).collect()
    }
}

/// Attaches a fresh dim-1 prime to every party: the universal baseline
/// extension whose conditioned objective equals the unconditioned functional
/// on the base.
pub fn trivial_extension(base: &DensityMatrix, party_systems: &[Vec<String>]) -> Result<Extension> {
    if party_systems.is_empty() {
        return Err(Error::MalformedParties("no parties given".into()));
    }
    let mut state = base.clone();
    let mut parties = Vec::with_capacity(party_systems.len());
    for systems in party_systems {
        let stem = systems
            .first()
            .ok_or_else(|| Error::MalformedParties("party holds no base system".into()))?;
        let prime = state.layout().fresh_label(&format!("{stem}p"));
        let flag = DensityMatrix::basis_state(SubsystemLayout::new(vec![(prime.clone(), 1)])?, 0)?;
        state = DensityMatrix::tensor(&state, &flag)?;
        parties.push(Party::new(systems.clone(), vec![prime]));
    }
    Extension::new(state, parties, vec![], base.clone())
}

/// A correlation function evaluated on labeled blocks of one state. Empty
/// blocks are legal and carry zero entropy, so conditioning on "nothing"
/// degenerates gracefully.
pub trait CorrelationFunctional: Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, state: &DensityMatrix, blocks: &[Vec<String>]) -> Result<f64>;
}

/// I(X:Y) = S(X) + S(Y) − S(XY); exactly two blocks.
pub struct QuantumMI;

impl CorrelationFunctional for QuantumMI {
    fn name(&self) -> &'static str {
        "quantum-mutual-information"
    }

    fn evaluate(&self, state: &DensityMatrix, blocks: &[Vec<String>]) -> Result<f64> {
        if blocks.len() != 2 {
            return Err(Error::BadArgument(format!(
                "mutual information needs exactly 2 blocks, got {}",
                blocks.len()
            )));
        }
        generalized_mi(state, blocks)
    }
}

/// I_n = Σ S(block_i) − S(joint); at least two blocks.
pub struct MultipartiteMI;

impl CorrelationFunctional for MultipartiteMI {
    fn name(&self) -> &'static str {
        "multipartite-mutual-information"
    }

    fn evaluate(&self, state: &DensityMatrix, blocks: &[Vec<String>]) -> Result<f64> {
        if blocks.len() < 2 {
            return Err(Error::TooFewBlocks {
                required: 2,
                got: blocks.len(),
            });
        }
        generalized_mi(state, blocks)
    }
}

fn generalized_mi(state: &DensityMatrix, blocks: &[Vec<String>]) -> Result<f64> {
    let union: Vec<String> = blocks.iter().flatten().cloned().collect();
    {
        let mut seen = std::collections::BTreeSet::new();
        for label in &union {
            if !seen.insert(label.clone()) {
                return Err(Error::OverlappingBlocks(label.clone()));
            }
        }
    }
    let mut acc = -entropy_of(state, &union)?;
    for block in blocks {
        acc += entropy_of(state, block)?;
    }
    Ok(acc)
}

/// f(AA':BB') − f(A':B') for a two-party extension.
pub fn sym_conditioned(f: &dyn CorrelationFunctional, ext: &Extension) -> Result<f64> {
    if ext.parties().len() != 2 {
        return Err(Error::MalformedParties(format!(
            "symmetric conditioning needs exactly 2 parties, got {}",
            ext.parties().len()
        )));
    }
    let with_systems = f.evaluate(ext.state(), &ext.party_blocks())?;
    let primes_only = f.evaluate(ext.state(), &ext.prime_blocks())?;
    Ok(with_systems - primes_only)
}

/// f(A:BE) − f(A:E) where E is the environment and each block is a party's
/// full holdings.
pub fn asym_conditioned(f: &dyn CorrelationFunctional, ext: &Extension) -> Result<f64> {
    if ext.parties().len() != 2 {
        return Err(Error::MalformedParties(format!(
            "asymmetric conditioning needs exactly 2 parties, got {}",
            ext.parties().len()
        )));
    }
    let a = ext.parties()[0].block();
    let b = ext.parties()[1].block();
    let e = ext.environment().to_vec();
    let be: Vec<String> = b.iter().chain(&e).cloned().collect();
    let with_b = f.evaluate(ext.state(), &[a.clone(), be])?;
    let without = f.evaluate(ext.state(), &[a, e])?;
    Ok(with_b - without)
}

/// ½·[I(AA':BB') − I(A':B')]: the symmetric conditioned mutual information,
/// an upper bound on the base state's conditioned-entanglement value.
pub fn cemi_objective(ext: &Extension) -> Result<f64> {
    Ok(0.5 * sym_conditioned(&QuantumMI, ext)?)
}

/// ½·I(A:B|E) over party holdings conditioned on the environment.
pub fn esq_objective(ext: &Extension) -> Result<f64> {
    if ext.parties().len() != 2 {
        return Err(Error::MalformedParties(format!(
            "conditional-information objective needs exactly 2 parties, got {}",
            ext.parties().len()
        )));
    }
    let a = ext.parties()[0].block();
    let b = ext.parties()[1].block();
    Ok(0.5 * crate::entropy::conditional_mi(ext.state(), &a, &b, ext.environment())?)
}

/// ½·[I_n(A_1A'_1:…:A_nA'_n) − I_n(A'_1:…:A'_n)] for an n-party extension.
pub fn multipartite_cemi_objective(ext: &Extension) -> Result<f64> {
    if ext.parties().len() < 2 {
        return Err(Error::MalformedParties(format!(
            "multipartite objective needs at least 2 parties, got {}",
            ext.parties().len()
        )));
    }
    let f = MultipartiteMI;
    let with_systems = f.evaluate(ext.state(), &ext.party_blocks())?;
    let primes = ext.prime_blocks();
    // All-empty prime blocks carry zero correlation by convention.
    let primes_only = if primes.iter().all(|b| b.is_empty()) {
        0.0
    } else {
        f.evaluate(ext.state(), &primes)?
    };
    Ok(0.5 * (with_systems - primes_only))
}

/// Flagged separable decomposition Σ_ij p_ij φ_A^i ⊗ |i⟩⟨i|_{A'} ⊗ φ_B^j ⊗
/// |j⟩⟨j|_{B'}. Weights reference the two state lists by index; prime
/// dimensions equal the number of distinct indices actually used.
pub fn separable_flag_extension(
    weights: &[(f64, usize, usize)],
    states_a: &[DensityMatrix],
    states_b: &[DensityMatrix],
) -> Result<Extension> {
    if weights.is_empty() {
        return Err(Error::BadArgument("empty separable decomposition".into()));
    }
    let mut sum = 0.0;
    for (index, (p, i, j)) in weights.iter().enumerate() {
        if *p < 0.0 {
            return Err(Error::NegativeProbability { value: *p, index });
        }
        if *i >= states_a.len() || *j >= states_b.len() {
            return Err(Error::BadArgument(format!(
                "weight {index} references state ({i}, {j}) outside the lists"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::ProbabilitySum { sum });
    }
    for s in &states_a[1..] {
        if s.layout() != states_a[0].layout() {
            return Err(Error::LayoutMismatch {
                context: "left-side states on different layouts".into(),
            });
        }
    }
    for s in &states_b[1..] {
        if s.layout() != states_b[0].layout() {
            return Err(Error::LayoutMismatch {
                context: "right-side states on different layouts".into(),
            });
        }
    }

    // Dense flag values in ascending order of the referenced indices.
    let mut used_a: Vec<usize> = weights.iter().map(|w| w.1).collect();
    used_a.sort_unstable();
    used_a.dedup();
    let mut used_b: Vec<usize> = weights.iter().map(|w| w.2).collect();
    used_b.sort_unstable();
    used_b.dedup();

    let a_layout = states_a[0].layout().clone();
    let b_layout = states_b[0].layout().clone();
    let joint_system_layout = a_layout.concat(&b_layout)?;
    let flag_a = joint_system_layout.fresh_label("FA");
    let flag_b = joint_system_layout.fresh_label("FB");
    let flag_a_layout = SubsystemLayout::new(vec![(flag_a.clone(), used_a.len())])?;
    let flag_b_layout = SubsystemLayout::new(vec![(flag_b.clone(), used_b.len())])?;

    let full_layout = a_layout
        .concat(&flag_a_layout)?
        .concat(&b_layout)?
        .concat(&flag_b_layout)?;
    let mut acc = CMat::zeros(full_layout.total_dim(), full_layout.total_dim());
    let mut base_acc = CMat::zeros(
        joint_system_layout.total_dim(),
        joint_system_layout.total_dim(),
    );
    for (p, i, j) in weights {
        let fi = used_a.binary_search(i).unwrap();
        let fj = used_b.binary_search(j).unwrap();
        let flag_i = DensityMatrix::basis_state(flag_a_layout.clone(), fi)?;
        let flag_j = DensityMatrix::basis_state(flag_b_layout.clone(), fj)?;
        let term = DensityMatrix::tensor(
            &DensityMatrix::tensor(&states_a[*i], &flag_i)?,
            &DensityMatrix::tensor(&states_b[*j], &flag_j)?,
        )?;
        acc += term.matrix() * C64::new(*p, 0.0);
        let base_term = DensityMatrix::tensor(&states_a[*i], &states_b[*j])?;
        base_acc += base_term.matrix() * C64::new(*p, 0.0);
    }
    let state = DensityMatrix::from_trusted(full_layout, acc);
    let base = DensityMatrix::from_trusted(joint_system_layout, base_acc);
    Extension::new(
        state,
        vec![
            Party::new(a_layout.labels(), vec![flag_a]),
            Party::new(b_layout.labels(), vec![flag_b]),
        ],
        vec![],
        base,
    )
}

/// Flagged mixture λ·e1 ⊗ |0⟩⟨0|_flags + (1−λ)·e2 ⊗ |1⟩⟨1|_flags, one fresh
/// dim-2 flag joined to each party's primes. Its objective is exactly the
/// convex combination of the two input objectives.
pub fn convex_flag_extension(e1: &Extension, e2: &Extension, lam: f64) -> Result<Extension> {
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::BadArgument(format!(
            "mixing weight {lam} outside [0, 1]"
        )));
    }
    let aligned = align_roles(e1, e2)?;

    let mut flags = Vec::with_capacity(e1.parties().len());
    for k in 0..e1.parties().len() {
        flags.push(e1.state().layout().fresh_label(&format!("G{k}")));
    }
    let mut layout_entries = e1.state().layout().entries().to_vec();
    for f in &flags {
        layout_entries.push((f.clone(), 2));
    }
    let full_layout = SubsystemLayout::new(layout_entries)?;

    // Flag projector |v…v⟩⟨v…v| across all flags has a single diagonal entry.
    let flag_dim = 1usize << flags.len();
    let inner = e1.state().dim();
    let mut acc = CMat::zeros(inner * flag_dim, inner * flag_dim);
    for (weight, state, v) in [
        (lam, e1.state().matrix(), 0usize),
        (1.0 - lam, &aligned, 1usize),
    ] {
        if weight == 0.0 {
            continue;
        }
        // Flag basis index with every flag digit equal to v.
        let flag_index: usize = (0..flags.len()).fold(0, |acc, _| acc * 2 + v);
        for i in 0..inner {
            for j in 0..inner {
                acc[(i * flag_dim + flag_index, j * flag_dim + flag_index)] +=
                    state[(i, j)] * C64::new(weight, 0.0);
            }
        }
    }
    let state = DensityMatrix::from_trusted(full_layout, acc);

    let mixed_base = DensityMatrix::from_trusted(
        e1.base().layout().clone(),
        e1.base().matrix() * C64::new(lam, 0.0) + e2.base().matrix() * C64::new(1.0 - lam, 0.0),
    );
    let parties: Vec<Party> = e1
        .parties()
        .iter()
        .zip(&flags)
        .map(|(p, f)| {
            let mut primes = p.primes.clone();
            primes.push(f.clone());
            Party::new(p.systems.clone(), primes)
        })
        .collect();
    Extension::new(state, parties, e1.environment().to_vec(), mixed_base)
}

/// Checks the two extensions play identical roles (same bases, same prime and
/// environment dimensions position-wise) and returns e2's matrix permuted and
/// relabeled into e1's layout.
fn align_roles(e1: &Extension, e2: &Extension) -> Result<CMat> {
    if e1.parties().len() != e2.parties().len() {
        return Err(Error::MalformedParties(format!(
            "party counts differ: {} vs {}",
            e1.parties().len(),
            e2.parties().len()
        )));
    }
    if e1.base().layout() != e2.base().layout() {
        return Err(Error::LayoutMismatch {
            context: "base layouts differ".into(),
        });
    }
    if e1.environment().len() != e2.environment().len() {
        return Err(Error::LayoutMismatch {
            context: "environment sizes differ".into(),
        });
    }
    // Map each e1 label to its role-partner in e2.
    let mut partner: std::collections::BTreeMap<String, String> = std::collections::BTreeMap::new();
    for (p1, p2) in e1.parties().iter().zip(e2.parties()) {
        let mut s1 = p1.systems.clone();
        let mut s2 = p2.systems.clone();
        s1.sort();
        s2.sort();
        if s1 != s2 {
            return Err(Error::MalformedParties(
                "parties hold different base systems".into(),
            ));
        }
        for s in &p1.systems {
            partner.insert(s.clone(), s.clone());
        }
        if p1.primes.len() != p2.primes.len() {
            return Err(Error::MalformedParties(
                "parties carry different numbers of primes".into(),
            ));
        }
        for (q1, q2) in p1.primes.iter().zip(&p2.primes) {
            if e1.state().layout().dim_of(q1)? != e2.state().layout().dim_of(q2)? {
                return Err(Error::LayoutMismatch {
                    context: format!("prime dims differ: '{q1}' vs '{q2}'"),
                });
            }
            partner.insert(q1.clone(), q2.clone());
        }
    }
    for (v1, v2) in e1.environment().iter().zip(e2.environment()) {
        if e1.state().layout().dim_of(v1)? != e2.state().layout().dim_of(v2)? {
            return Err(Error::LayoutMismatch {
                context: format!("environment dims differ: '{v1}' vs '{v2}'"),
            });
        }
        partner.insert(v1.clone(), v2.clone());
    }
    let order: Vec<String> = e1
        .state()
        .layout()
        .labels()
        .iter()
        .map(|l| partner[l].clone())
        .collect();
    Ok(e2.state().permuted(&order)?.matrix().clone())
}

/// Tensor of two extensions over disjoint labels: parties merge position-wise
/// (systems with systems, primes with primes), so the product extends the
/// tensor of the bases and its objective is the sum of the two objectives.
pub fn product_extension(e1: &Extension, e2: &Extension) -> Result<Extension> {
    if e1.parties().len() != e2.parties().len() {
        return Err(Error::MalformedParties(format!(
            "party counts differ: {} vs {}",
            e1.parties().len(),
            e2.parties().len()
        )));
    }
    let state = DensityMatrix::tensor(e1.state(), e2.state())?;
    let base = DensityMatrix::tensor(e1.base(), e2.base())?;
    let parties: Vec<Party> = e1
        .parties()
        .iter()
        .zip(e2.parties())
        .map(|(p, q)| {
            Party::new(
                p.systems.iter().chain(&q.systems).cloned().collect(),
                p.primes.iter().chain(&q.primes).cloned().collect(),
            )
        })
        .collect();
    let environment: Vec<String> = e1
        .environment()
        .iter()
        .chain(e2.environment())
        .cloned()
        .collect();
    Extension::new(state, parties, environment, base)
}
