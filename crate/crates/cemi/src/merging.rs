//! Operational layer: redistribution costs over a pure global state, routed
//! transfer plans that move each party's systems into a center, and the net
//! qubit flow of an extension. Flow into the center counts positive; a
//! distribution step is the reversed merge with negated sign.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::conditioning::{cemi_objective, Extension, Party};
use crate::entropy::conditional_mi;
use crate::error::{Error, Result};
use crate::state::PureStateVector;

/// A routed-transfer instance: a pure global state whose labels are split
/// among remote parties (each holding systems and side-information primes)
/// and a center, which may hold any number of labels including dim-1 ones.
#[derive(Clone, Debug)]
pub struct MergeScenario {
    global: PureStateVector,
    parties: Vec<Party>,
    center: Vec<String>,
}

impl MergeScenario {
    pub fn new(global: PureStateVector, parties: Vec<Party>, center: Vec<String>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::MalformedParties("no parties".into()));
        }
        let mut seen = BTreeSet::new();
        let mut claim = |label: &String| -> Result<()> {
            if !global.layout().contains(label) {
                return Err(Error::UnknownLabel(label.clone()));
            }
            if !seen.insert(label.clone()) {
                return Err(Error::MalformedParties(format!(
                    "label '{label}' assigned twice"
                )));
            }
            Ok(())
        };
        for p in &parties {
            if p.systems.is_empty() {
                return Err(Error::MalformedParties("party holds no system".into()));
            }
            for l in p.systems.iter().chain(&p.primes) {
                claim(l)?;
            }
        }
        for l in &center {
            claim(l)?;
        }
        if seen.len() != global.layout().len() {
            return Err(Error::MalformedParties(
                "parties and center must cover every label".into(),
            ));
        }
        Ok(MergeScenario {
            global,
            parties,
            center,
        })
    }

    pub fn global(&self) -> &PureStateVector {
        &self.global
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn center(&self) -> &[String] {
        &self.center
    }
}

/// Builds the routed-transfer instance an extension induces: the extension
/// state is purified and the purifier joins the center, together with any
/// declared environment labels. Already-pure states get a dim-1 purifier.
pub fn scenario_from_extension(ext: &Extension) -> Result<MergeScenario> {
    let pur = ext.state().layout().fresh_label("E");
    let global = ext.state().purify(&pur)?;
    let mut center = ext.environment().to_vec();
    center.push(pur);
    MergeScenario::new(global, ext.parties().to_vec(), center)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// A party sends labels to the center; cost counts positive.
    Merge,
    /// The center sends labels back to a party; cost counts negative.
    Distribute,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferStep {
    pub kind: StepKind,
    pub party: usize,
    pub labels: Vec<String>,
}

/// Ordered transfer steps. A valid plan nets exactly the party systems into
/// the center: each system is merged once and never returned, and any prime
/// that rides along is distributed back exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutePlan {
    pub steps: Vec<TransferStep>,
}

impl RoutePlan {
    /// Each party sends its systems straight to the center, primes stay put.
    pub fn direct(scn: &MergeScenario, order: &[usize]) -> Result<RoutePlan> {
        check_order(order, scn.parties.len())?;
        let steps = order
            .iter()
            .map(|&p| TransferStep {
                kind: StepKind::Merge,
                party: p,
                labels: scn.parties[p].systems.clone(),
            })
            .collect();
        Ok(RoutePlan { steps })
    }

    /// Bipartite only: the first party's primes escort its systems to the
    /// center and are sent back after the second party's systems arrive.
    pub fn escorted(scn: &MergeScenario) -> Result<RoutePlan> {
        if scn.parties.len() != 2 {
            return Err(Error::InvalidPlan(format!(
                "escorted plan needs exactly 2 parties, got {}",
                scn.parties.len()
            )));
        }
        let first = &scn.parties[0];
        let mut opening = first.systems.clone();
        opening.extend(first.primes.iter().cloned());
        Ok(RoutePlan {
            steps: vec![
                TransferStep {
                    kind: StepKind::Merge,
                    party: 0,
                    labels: opening,
                },
                TransferStep {
                    kind: StepKind::Merge,
                    party: 1,
                    labels: scn.parties[1].systems.clone(),
                },
                TransferStep {
                    kind: StepKind::Distribute,
                    party: 0,
                    labels: first.primes.clone(),
                },
            ],
        })
    }
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidPlan(format!(
            "order lists {} parties, scenario has {n}",
            order.len()
        )));
    }
    for &p in order {
        if p >= n || seen[p] {
            return Err(Error::InvalidPlan(format!("bad party index {p} in order")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Cost ledger for one executed step, with every role spelled out in global
/// layout order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepCost {
    pub kind: StepKind,
    pub party: usize,
    pub sent: Vec<String>,
    pub sender_retained: Vec<String>,
    pub receiver_held: Vec<String>,
    pub reference: Vec<String>,
    pub cost: f64,
}

/// Qubits needed to move Y from the holder of X∪Y to the holder of Z while
/// the reference R stays untouched: ½·I(R:Y|Z) on the pure global state.
pub fn redistribution_cost(
    global: &PureStateVector,
    r: &[String],
    x: &[String],
    y: &[String],
    z: &[String],
) -> Result<f64> {
    let mut seen = BTreeSet::new();
    for label in r.iter().chain(x).chain(y).chain(z) {
        if !global.layout().contains(label) {
            return Err(Error::UnknownLabel(label.clone()));
        }
        if !seen.insert(label.clone()) {
            return Err(Error::OverlappingBlocks(label.clone()));
        }
    }
    if seen.len() != global.layout().len() {
        return Err(Error::LayoutMismatch {
            context: "redistribution roles must partition the global layout".into(),
        });
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    Ok(0.5 * conditional_mi(&global.density(), r, y, z)?)
}

/// Same cost computed through the complements the purity of the global state
/// provides: ½[S(XY) + S(YZ) − S(Z) − S(X)].
pub fn redistribution_cost_via_complements(
    global: &PureStateVector,
    r: &[String],
    x: &[String],
    y: &[String],
    z: &[String],
) -> Result<f64> {
    // Run the same role validation as the direct formula.
    redistribution_cost(global, r, x, y, z)?;
    if y.is_empty() {
        return Ok(0.0);
    }
    let ent = |labels: &[String]| -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        Ok(crate::entropy::vn_entropy(&global.reduced_density(labels)?))
    };
    let xy: Vec<String> = x.iter().chain(y).cloned().collect();
    let yz: Vec<String> = y.iter().chain(z).cloned().collect();
    Ok(0.5 * (ent(&xy)? + ent(&yz)? - ent(z)? - ent(x)?))
}

struct Holdings {
    parties: Vec<BTreeSet<String>>,
    center: BTreeSet<String>,
}

impl Holdings {
    fn start(scn: &MergeScenario) -> Self {
        Holdings {
            parties: scn
                .parties
                .iter()
                .map(|p| p.systems.iter().chain(&p.primes).cloned().collect())
                .collect(),
            center: scn.center.iter().cloned().collect(),
        }
    }
}

/// Executes a plan step by step. Each step's reference is everything neither
/// the sender nor the receiver holds at that moment; distribution steps are
/// merges run backwards, so their cost enters with a minus sign.
pub fn route_cost(scn: &MergeScenario, plan: &RoutePlan) -> Result<(Vec<StepCost>, f64)> {
    let layout = scn.global.layout();
    let in_layout_order = |set: &BTreeSet<String>| -> Vec<String> {
        layout
            .labels()
            .into_iter()
            .filter(|l| set.contains(l))
            .collect()
    };
    let mut holdings = Holdings::start(scn);
    let mut merged: BTreeSet<String> = BTreeSet::new();
    let mut distributed: BTreeSet<String> = BTreeSet::new();
    let mut ledger = Vec::with_capacity(plan.steps.len());
    let mut total = 0.0;

    for step in &plan.steps {
        if step.party >= scn.parties.len() {
            return Err(Error::InvalidPlan(format!(
                "step names party {} of {}",
                step.party,
                scn.parties.len()
            )));
        }
        let moving: BTreeSet<String> = step.labels.iter().cloned().collect();
        if moving.len() != step.labels.len() {
            return Err(Error::InvalidPlan("step repeats a label".into()));
        }
        let (sender, receiver) = match step.kind {
            StepKind::Merge => (&mut holdings.parties[step.party], &mut holdings.center),
            StepKind::Distribute => (&mut holdings.center, &mut holdings.parties[step.party]),
        };
        for l in &moving {
            if !sender.contains(l) {
                return Err(Error::InvalidPlan(format!(
                    "label '{l}' is not held by the step's sender"
                )));
            }
            let book = match step.kind {
                StepKind::Merge => &mut merged,
                StepKind::Distribute => &mut distributed,
            };
            if !book.insert(l.clone()) {
                return Err(Error::InvalidPlan(format!(
                    "label '{l}' moved twice in the same direction"
                )));
            }
        }

        let y = in_layout_order(&moving);
        let x = in_layout_order(&sender.difference(&moving).cloned().collect());
        let z = in_layout_order(receiver);
        let r_set: BTreeSet<String> = layout
            .labels()
            .into_iter()
            .filter(|l| !sender.contains(l) && !receiver.contains(l))
            .collect();
        let r = in_layout_order(&r_set);
        let cost = redistribution_cost(&scn.global, &r, &x, &y, &z)?;
        let signed = match step.kind {
            StepKind::Merge => cost,
            StepKind::Distribute => -cost,
        };
        total += signed;
        ledger.push(StepCost {
            kind: step.kind,
            party: step.party,
            sent: y.clone(),
            sender_retained: x,
            receiver_held: z,
            reference: r,
            cost: signed,
        });
        for l in &y {
            sender.remove(l);
            receiver.insert(l.clone());
        }
    }

    // The plan must net exactly the party systems into the center.
    for (i, p) in scn.parties.iter().enumerate() {
        for s in &p.systems {
            if !holdings.center.contains(s) {
                return Err(Error::InvalidPlan(format!(
                    "system '{s}' of party {i} never reached the center"
                )));
            }
            if distributed.contains(s) {
                return Err(Error::InvalidPlan(format!(
                    "system '{s}' was sent back out of the center"
                )));
            }
        }
        for pr in &p.primes {
            if merged.contains(pr) != distributed.contains(pr) {
                return Err(Error::InvalidPlan(format!(
                    "prime '{pr}' entered the center without returning"
                )));
            }
        }
    }
    Ok((ledger, total))
}

/// Net qubits flowing into the center under an optimal routed transfer of
/// the extension's party systems: half the conditioned correlation gap,
/// identical to the bound objective on the same extension.
pub fn net_flow(ext: &Extension) -> Result<f64> {
    cemi_objective(ext)
}

/// Sequential transfer for any party count: each party in `order` sends its
/// systems (primes stay home) and the running costs are summed.
pub fn multiparty_route_cost(scn: &MergeScenario, order: &[usize]) -> Result<(Vec<StepCost>, f64)> {
    let plan = RoutePlan::direct(scn, order)?;
    route_cost(scn, &plan)
}
