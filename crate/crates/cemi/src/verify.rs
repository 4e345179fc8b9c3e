//! Seeded property suites for every construction the library exposes:
//! instrument monotonicity on average, additivity in both directions,
//! mixture linearity of the flag construction, route-independence of
//! transfer costs, entropy identities, separable zeros, and pure-base
//! constancy. Every check reports one signed slack: inequalities use
//! slack = LHS − RHS, identities use slack = −|LHS − RHS|, and a check
//! passes iff slack ≥ −tolerance. Failures carry their full inputs so
//! `replay` can reproduce the slack from the record alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conditioning::{
    cemi_objective, convex_flag_extension, separable_flag_extension, Extension, Party,
};
use crate::entropy::{conditional_mi, holevo, mutual_information, vn_entropy, Partition};
use crate::error::{Error, Result};
use crate::kraus::{apply_instrument, dilate_instrument, Ensemble, KrausInstrument};
use crate::layout::SubsystemLayout;
use crate::linalg::{CMat, C64};
use crate::merging::{route_cost, MergeScenario, RoutePlan};
use crate::optimize::{extension_from_params, AnsatzDims, AnsatzParams, Cut};
use crate::random::{random_instrument, random_pure, rng_for, split_seed};
use crate::state::{trace_distance, DensityMatrix, PureStateVector};

pub const TOL_INEQUALITY: f64 = 1e-9;
pub const TOL_IDENTITY: f64 = 1e-9;
pub const TOL_TELESCOPING: f64 = 1e-10;
pub const TOL_DILATION: f64 = 1e-10;
pub const TOL_PURITY: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub tolerance: f64,
    /// Most negative slack seen across all trials.
    pub worst_slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureRecord {
    pub check: String,
    pub trial: u64,
    pub slack: f64,
    pub tolerance: f64,
    /// Self-contained inputs; `replay` rebuilds them and re-evaluates.
    pub inputs: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckSummary>,
    pub failures: Vec<FailureRecord>,
    pub pass: bool,
}

// ---------------------------------------------------------------------------
// Serialization of check inputs (replay round-trips through these).

fn mat_to_value(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn mat_from_value(v: &Value) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| replay_err("matrix must be an array of rows"))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(Value::as_array)
        .map(Vec::len)
        .ok_or_else(|| replay_err("matrix must have at least one row"))?;
    let mut m = CMat::zeros(nrows, ncols);
    for (i, row_v) in rows.iter().enumerate() {
        let row = row_v
            .as_array()
            .filter(|r| r.len() == ncols)
            .ok_or_else(|| replay_err("ragged matrix rows"))?;
        for (j, cell) in row.iter().enumerate() {
            let pair = cell
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| replay_err("matrix entries must be [re, im]"))?;
            let re = pair[0].as_f64().ok_or_else(|| replay_err("non-numeric"))?;
            let im = pair[1].as_f64().ok_or_else(|| replay_err("non-numeric"))?;
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

fn replay_err(reason: &str) -> Error {
    Error::BadStateFile {
        path: "<replay record>".into(),
        reason: reason.into(),
    }
}

fn density_from_value(v: &Value) -> Result<DensityMatrix> {
    match crate::io::parse_state_value(std::path::Path::new("<replay record>"), v)? {
        crate::io::LoadedState::Density(d) => Ok(d),
        crate::io::LoadedState::Pure(p) => Ok(p.density()),
    }
}

fn pure_from_value(v: &Value) -> Result<PureStateVector> {
    match crate::io::parse_state_value(std::path::Path::new("<replay record>"), v)? {
        crate::io::LoadedState::Pure(p) => Ok(p),
        crate::io::LoadedState::Density(_) => Err(replay_err("expected a pure state")),
    }
}

fn labels_from_value(v: &Value) -> Result<Vec<String>> {
    v.as_array()
        .ok_or_else(|| replay_err("expected a label array"))?
        .iter()
        .map(|l| {
            l.as_str()
                .map(str::to_string)
                .ok_or_else(|| replay_err("labels must be strings"))
        })
        .collect()
}

fn parties_to_value(parties: &[Party]) -> Value {
    Value::Array(
        parties
            .iter()
            .map(|p| json!({"systems": p.systems, "primes": p.primes}))
            .collect(),
    )
}

fn parties_from_value(v: &Value) -> Result<Vec<Party>> {
    v.as_array()
        .ok_or_else(|| replay_err("expected a party array"))?
        .iter()
        .map(|p| {
            Ok(Party::new(
                labels_from_value(
                    p.get("systems")
                        .ok_or_else(|| replay_err("party.systems"))?,
                )?,
                labels_from_value(p.get("primes").ok_or_else(|| replay_err("party.primes"))?)?,
            ))
        })
        .collect()
}

pub fn extension_to_value(ext: &Extension) -> Value {
    json!({
        "state": crate::io::density_to_value(ext.state()),
        "parties": parties_to_value(ext.parties()),
        "environment": ext.environment(),
        "base": crate::io::density_to_value(ext.base()),
    })
}

pub fn extension_from_value(v: &Value) -> Result<Extension> {
    let state = density_from_value(v.get("state").ok_or_else(|| replay_err("state"))?)?;
    let parties = parties_from_value(v.get("parties").ok_or_else(|| replay_err("parties"))?)?;
    let environment = labels_from_value(
        v.get("environment")
            .ok_or_else(|| replay_err("environment"))?,
    )?;
    let base = density_from_value(v.get("base").ok_or_else(|| replay_err("base"))?)?;
    Extension::new(state, parties, environment, base)
}

pub fn instrument_to_value(m: &KrausInstrument) -> Value {
    json!({
        "target": m.target_label(),
        "operators": m.operators().iter().map(mat_to_value).collect::<Vec<_>>(),
    })
}

pub fn instrument_from_value(v: &Value) -> Result<KrausInstrument> {
    let target = v
        .get("target")
        .and_then(Value::as_str)
        .ok_or_else(|| replay_err("instrument.target"))?;
    let ops = v
        .get("operators")
        .and_then(Value::as_array)
        .ok_or_else(|| replay_err("instrument.operators"))?
        .iter()
        .map(mat_from_value)
        .collect::<Result<Vec<_>>>()?;
    KrausInstrument::new(target, ops)
}

fn scenario_to_value(scn: &MergeScenario) -> Value {
    json!({
        "global": crate::io::pure_to_value(scn.global()),
        "parties": parties_to_value(scn.parties()),
        "center": scn.center(),
    })
}

fn scenario_from_value(v: &Value) -> Result<MergeScenario> {
    let global = pure_from_value(v.get("global").ok_or_else(|| replay_err("global"))?)?;
    let parties = parties_from_value(v.get("parties").ok_or_else(|| replay_err("parties"))?)?;
    let center = labels_from_value(v.get("center").ok_or_else(|| replay_err("center"))?)?;
    MergeScenario::new(global, parties, center)
}

// ---------------------------------------------------------------------------
// Individual checks. Each returns the signed slack defined in the header.

/// The pre-instrument correlation gap dominates the probability-weighted
/// post-instrument gaps.
pub fn check_locc_inequality(ext: &Extension, m: &KrausInstrument) -> Result<f64> {
    let (before, averaged, _, _) = instrument_gaps(ext, m)?;
    Ok(before - averaged)
}

fn party_gap(
    state: &DensityMatrix,
    a: &[String],
    b: &[String],
    pa: &[String],
    pb: &[String],
) -> Result<f64> {
    let full = mutual_information(state, &Partition::two(a.to_vec(), b.to_vec())?)?;
    let primes = if pa.is_empty() && pb.is_empty() {
        0.0
    } else {
        mutual_information(state, &Partition::two(pa.to_vec(), pb.to_vec())?)?
    };
    Ok(full - primes)
}

/// Shared plumbing: gap of the extension, the weighted post-instrument gaps,
/// the outcome ensemble, and the index of the instrumented party.
fn instrument_gaps(ext: &Extension, m: &KrausInstrument) -> Result<(f64, f64, Ensemble, usize)> {
    let parties = ext.parties();
    if parties.len() != 2 {
        return Err(Error::BadArgument(
            "instrument checks need a bipartite extension".into(),
        ));
    }
    let hit = parties
        .iter()
        .position(|p| p.systems.contains(&m.target_label().to_string()))
        .ok_or_else(|| {
            Error::BadArgument(format!(
                "instrument target '{}' is not a party system",
                m.target_label()
            ))
        })?;
    let block_a = parties[0].block();
    let block_b = parties[1].block();
    let before = party_gap(
        ext.state(),
        &block_a,
        &block_b,
        &parties[0].primes,
        &parties[1].primes,
    )?;
    let ensemble = apply_instrument(ext.state(), m)?;
    let mut averaged = 0.0;
    for (p, member) in ensemble.members() {
        averaged += p * party_gap(
            member,
            &block_a,
            &block_b,
            &parties[0].primes,
            &parties[1].primes,
        )?;
    }
    Ok((before, averaged, ensemble, hit))
}

/// The dilated-state gap minus the averaged gaps equals the four-term
/// combination of Holevo quantities of the untouched reductions.
pub fn check_holevo_decomposition(ext: &Extension, m: &KrausInstrument) -> Result<f64> {
    let (_, averaged, ensemble, hit) = instrument_gaps(ext, m)?;
    let parties = ext.parties();
    let omega = dilate_instrument(ext.state(), m)?;
    let pointer = omega.layout().labels()[0].clone();

    let mut block_hit = parties[hit].block();
    block_hit.insert(0, pointer);
    let block_other = parties[1 - hit].block();
    let dilated_gap = party_gap(
        &omega,
        &block_hit,
        &block_other,
        &parties[0].primes,
        &parties[1].primes,
    )?;

    let chi = |labels: &[String]| -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        let members = ensemble
            .members()
            .iter()
            .map(|(p, s)| Ok((*p, s.reduce_to(labels)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(holevo(&Ensemble::new(members)?))
    };
    let primes_joint: Vec<String> = parties[0]
        .primes
        .iter()
        .chain(&parties[1].primes)
        .cloned()
        .collect();
    let combo = chi(&block_other)? + chi(&primes_joint)?
        - chi(&parties[0].primes)?
        - chi(&parties[1].primes)?;

    Ok(-(dilated_gap - averaged - combo).abs())
}

/// Conditioning the dilation's pointer reproduces the instrument's ensemble:
/// probabilities and post-measurement states agree outcome by outcome.
pub fn check_dilation_match(ext: &Extension, m: &KrausInstrument) -> Result<f64> {
    let ensemble = apply_instrument(ext.state(), m)?;
    let omega = dilate_instrument(ext.state(), m)?;
    let pointer = omega.layout().labels()[0].clone();
    let k_count = omega.layout().dim_of(&pointer)?;

    let mut conditioned = Vec::new();
    for k in 0..k_count {
        if let (p, Some(state)) = omega.conditioned(&pointer, k)? {
            conditioned.push((p, state));
        }
    }
    if conditioned.len() != ensemble.len() {
        return Ok(-1.0);
    }
    let mut defect = 0.0_f64;
    for ((p, member), (q, cond)) in ensemble.members().iter().zip(&conditioned) {
        defect = defect.max((p - q).abs());
        defect = defect.max(member.max_abs_diff(cond)?);
    }
    Ok(-defect)
}

/// Objective of the tensor-product extension equals the sum of objectives.
pub fn check_product_additivity(e1: &Extension, e2: &Extension) -> Result<f64> {
    let product = crate::conditioning::product_extension(e1, e2)?;
    let lhs = cemi_objective(&product)?;
    let rhs = cemi_objective(e1)? + cemi_objective(e2)?;
    Ok(-(lhs - rhs).abs())
}

/// Nested correlation gaps telescope: peeling the outer systems off a joint
/// extension splits its gap into the two intermediate gaps exactly.
pub fn check_telescoping(
    state: &DensityMatrix,
    a_groups: &[Vec<String>; 3],
    b_groups: &[Vec<String>; 3],
) -> Result<f64> {
    let join = |side: &[Vec<String>; 3], from: usize| -> Vec<String> {
        side[from..].iter().flatten().cloned().collect()
    };
    let gap =
        |a: Vec<String>, b: Vec<String>, core_a: Vec<String>, core_b: Vec<String>| -> Result<f64> {
            let outer = mutual_information(state, &Partition::two(a, b)?)?;
            let inner = if core_a.is_empty() && core_b.is_empty() {
                0.0
            } else {
                mutual_information(state, &Partition::two(core_a, core_b)?)?
            };
            Ok(outer - inner)
        };
    let full = gap(
        join(a_groups, 0),
        join(b_groups, 0),
        a_groups[2].clone(),
        b_groups[2].clone(),
    )?;
    let peeled = gap(
        join(a_groups, 0),
        join(b_groups, 0),
        join(a_groups, 1),
        join(b_groups, 1),
    )?;
    let core = gap(
        join(a_groups, 1),
        join(b_groups, 1),
        a_groups[2].clone(),
        b_groups[2].clone(),
    )?;
    Ok(-(full - peeled - core).abs())
}

/// Objective of the flag mixture is the convex combination of objectives.
pub fn check_convex_mixture(e1: &Extension, e2: &Extension, lam: f64) -> Result<f64> {
    let mixed = convex_flag_extension(e1, e2, lam)?;
    let lhs = cemi_objective(&mixed)?;
    let rhs = lam * cemi_objective(e1)? + (1.0 - lam) * cemi_objective(e2)?;
    Ok(-(lhs - rhs).abs())
}

/// Direct and escorted transfer plans cost the same.
pub fn check_route_agreement(scn: &MergeScenario) -> Result<f64> {
    let (_, direct) = route_cost(scn, &RoutePlan::direct(scn, &[0, 1])?)?;
    let (_, escorted) = route_cost(scn, &RoutePlan::escorted(scn)?)?;
    Ok(-(direct - escorted).abs())
}

/// The direct transfer total equals half the conditioned correlation gap of
/// the state the parties hold.
pub fn check_flow_half_gap(scn: &MergeScenario) -> Result<f64> {
    let (_, direct) = route_cost(scn, &RoutePlan::direct(scn, &[0, 1])?)?;
    let parties = scn.parties();
    let held: Vec<String> = parties
        .iter()
        .flat_map(|p| p.systems.iter().chain(&p.primes).cloned())
        .collect();
    let rho = scn.global().reduced_density(&held)?;
    let half_gap = 0.5
        * party_gap(
            &rho,
            &parties[0].block(),
            &parties[1].block(),
            &parties[0].primes,
            &parties[1].primes,
        )?;
    Ok(-(direct - half_gap).abs())
}

/// Every send order of an n-party scenario costs the same total.
pub fn check_order_independence(scn: &MergeScenario) -> Result<f64> {
    let n = scn.parties().len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut totals = Vec::new();
    permute_orders(&mut order, 0, &mut |ord| {
        totals.push(crate::merging::multiparty_route_cost(scn, ord).map(|(_, t)| t));
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in totals {
        let t = t?;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    Ok(-(hi - lo))
}

fn permute_orders(order: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == order.len() {
        visit(order);
        return;
    }
    for i in k..order.len() {
        order.swap(k, i);
        permute_orders(order, k + 1, visit);
        order.swap(k, i);
    }
}

/// Conditioning symmetry: peeling E from either side of the mutual
/// information leaves the same conditional quantity.
pub fn check_conditioning_identity(
    rho: &DensityMatrix,
    a: &[String],
    b: &[String],
    e: &[String],
) -> Result<f64> {
    let be: Vec<String> = b.iter().chain(e).cloned().collect();
    let ae: Vec<String> = a.iter().chain(e).cloned().collect();
    let asym_a = mutual_information(rho, &Partition::two(a.to_vec(), be)?)?
        - mutual_information(rho, &Partition::two(a.to_vec(), e.to_vec())?)?;
    let asym_b = mutual_information(rho, &Partition::two(ae, b.to_vec())?)?
        - mutual_information(rho, &Partition::two(e.to_vec(), b.to_vec())?)?;
    let cmi = conditional_mi(rho, a, b, e)?;
    Ok(-(asym_a - cmi).abs().max((asym_b - cmi).abs()))
}

/// Conditional mutual information is nonnegative.
pub fn check_strong_subadditivity(
    rho: &DensityMatrix,
    a: &[String],
    b: &[String],
    e: &[String],
) -> Result<f64> {
    conditional_mi(rho, a, b, e)
}

/// Complementary marginals of a pure state have equal entropy.
pub fn check_purity_complement(psi: &PureStateVector, x: &[String]) -> Result<f64> {
    let rest: Vec<String> = psi
        .layout()
        .labels()
        .into_iter()
        .filter(|l| !x.contains(l))
        .collect();
    let sx = vn_entropy(&psi.reduced_density(x)?);
    let sy = vn_entropy(&psi.reduced_density(&rest)?);
    Ok(-(sx - sy).abs())
}

/// Flagged separable mixtures have objective zero.
pub fn check_separable_zero(
    weights: &[(f64, usize, usize)],
    states_a: &[DensityMatrix],
    states_b: &[DensityMatrix],
) -> Result<f64> {
    let ext = separable_flag_extension(weights, states_a, states_b)?;
    Ok(-cemi_objective(&ext)?.abs())
}

/// Pure bases make the objective independent of the ansatz parameters,
/// pinned at the base's entanglement entropy across the cut.
pub fn check_pure_constancy(
    base: &PureStateVector,
    cut: &Cut,
    dims: AnsatzDims,
    thetas: &[Vec<f64>],
) -> Result<f64> {
    let rho = base.density();
    let schmidt = vn_entropy(&rho.reduce_to(&cut.a)?);
    let d = dims.generator_dim();
    let mut worst = 0.0_f64;
    for theta in thetas {
        let params = AnsatzParams::new(theta.clone(), d)?;
        let ext = extension_from_params(&rho, cut, dims, &params)?;
        worst = worst.max((cemi_objective(&ext)? - schmidt).abs());
    }
    Ok(-worst)
}

/// Diagnostic (no threshold): mixes the base toward a random density so the
/// trace distance stays ≤ eps and reports how much the objective moves at
/// fixed parameters.
pub fn continuity_smoke(
    base: &DensityMatrix,
    cut: &Cut,
    dims: AnsatzDims,
    params: &AnsatzParams,
    eps: f64,
    seed: u64,
) -> Result<f64> {
    let before = cemi_objective(&extension_from_params(base, cut, dims, params)?)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let other = crate::random::random_density(base.layout(), base.dim(), seed)?;
    let dist = trace_distance(base, &other)?;
    let t = if dist > eps { eps / dist } else { 1.0 };
    let mut mixed = base.matrix() * C64::new(1.0 - t, 0.0);
    mixed += other.matrix() * C64::new(t, 0.0);
    let perturbed = DensityMatrix::new(base.layout().clone(), mixed)?;
    let after = cemi_objective(&extension_from_params(&perturbed, cut, dims, params)?)?;
    Ok((before - after).abs())
}

// ---------------------------------------------------------------------------
// Replay: rebuild a failure's inputs and re-run its check.

pub fn replay(record: &FailureRecord) -> Result<f64> {
    let v = &record.inputs;
    let get = |k: &str| v.get(k).ok_or_else(|| replay_err(k));
    match record.check.as_str() {
        "locc-average-inequality" => check_locc_inequality(
            &extension_from_value(get("extension")?)?,
            &instrument_from_value(get("instrument")?)?,
        ),
        "holevo-decomposition-identity" => check_holevo_decomposition(
            &extension_from_value(get("extension")?)?,
            &instrument_from_value(get("instrument")?)?,
        ),
        "dilation-conditioning-match" => check_dilation_match(
            &extension_from_value(get("extension")?)?,
            &instrument_from_value(get("instrument")?)?,
        ),
        "product-extension-additivity" => check_product_additivity(
            &extension_from_value(get("e1")?)?,
            &extension_from_value(get("e2")?)?,
        ),
        "telescoping-identity" => {
            let state = density_from_value(get("state")?)?;
            let groups = |key: &str| -> Result<[Vec<String>; 3]> {
                let arr = get(key)?
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| replay_err("telescoping groups"))?;
                Ok([
                    labels_from_value(&arr[0])?,
                    labels_from_value(&arr[1])?,
                    labels_from_value(&arr[2])?,
                ])
            };
            check_telescoping(&state, &groups("a_groups")?, &groups("b_groups")?)
        }
        "flag-mixture-equality" => {
            let lam = get("lambda")?
                .as_f64()
                .ok_or_else(|| replay_err("lambda"))?;
            check_convex_mixture(
                &extension_from_value(get("e1")?)?,
                &extension_from_value(get("e2")?)?,
                lam,
            )
        }
        "route-agreement" => check_route_agreement(&scenario_from_value(get("scenario")?)?),
        "flow-equals-half-gap" => check_flow_half_gap(&scenario_from_value(get("scenario")?)?),
        "order-independence" => check_order_independence(&scenario_from_value(get("scenario")?)?),
        "conditioning-identity" => {
            let rho = density_from_value(get("state")?)?;
            check_conditioning_identity(
                &rho,
                &labels_from_value(get("a")?)?,
                &labels_from_value(get("b")?)?,
                &labels_from_value(get("e")?)?,
            )
        }
        "strong-subadditivity" => {
            let rho = density_from_value(get("state")?)?;
            check_strong_subadditivity(
                &rho,
                &labels_from_value(get("a")?)?,
                &labels_from_value(get("b")?)?,
                &labels_from_value(get("e")?)?,
            )
        }
        "purity-complement-entropy" => check_purity_complement(
            &pure_from_value(get("state")?)?,
            &labels_from_value(get("x")?)?,
        ),
        "separable-zero" => {
            let weights = get("weights")?
                .as_array()
                .ok_or_else(|| replay_err("weights"))?
                .iter()
                .map(|w| {
                    let t = w
                        .as_array()
                        .filter(|t| t.len() == 3)
                        .ok_or_else(|| replay_err("weight triple"))?;
                    Ok((
                        t[0].as_f64().ok_or_else(|| replay_err("weight p"))?,
                        t[1].as_u64().ok_or_else(|| replay_err("weight i"))? as usize,
                        t[2].as_u64().ok_or_else(|| replay_err("weight j"))? as usize,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let states = |key: &str| -> Result<Vec<DensityMatrix>> {
                get(key)?
                    .as_array()
                    .ok_or_else(|| replay_err("state list"))?
                    .iter()
                    .map(density_from_value)
                    .collect()
            };
            check_separable_zero(&weights, &states("states_a")?, &states("states_b")?)
        }
        "pure-base-constancy" => {
            let base = pure_from_value(get("base")?)?;
            let cut = Cut::new(
                labels_from_value(get("cut_a")?)?,
                labels_from_value(get("cut_b")?)?,
            );
            let d = get("dims")?
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| replay_err("dims"))?;
            let dims = AnsatzDims::new(
                d[0].as_u64().ok_or_else(|| replay_err("dims"))? as usize,
                d[1].as_u64().ok_or_else(|| replay_err("dims"))? as usize,
                d[2].as_u64().ok_or_else(|| replay_err("dims"))? as usize,
            )?;
            let thetas = get("thetas")?
                .as_array()
                .ok_or_else(|| replay_err("thetas"))?
                .iter()
                .map(|t| {
                    t.as_array()
                        .ok_or_else(|| replay_err("theta"))?
                        .iter()
                        .map(|x| x.as_f64().ok_or_else(|| replay_err("theta entry")))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            check_pure_constancy(&base, &cut, dims, &thetas)
        }
        other => Err(Error::BadArgument(format!("unknown check '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// Suite drivers.

struct CheckDef {
    name: &'static str,
    tolerance: f64,
}

type TrialItems = Vec<(usize, f64, Value)>;

fn drive_suite<F>(
    suite: &str,
    trials: usize,
    seed: u64,
    defs: &[CheckDef],
    trial_fn: F,
) -> Result<SuiteReport>
where
    F: Fn(u64, u64) -> Result<TrialItems> + Sync,
{
    let outcomes: Vec<(u64, TrialItems)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| trial_fn(t, split_seed(seed, t)).map(|items| (t, items)))
        .collect::<Result<Vec<_>>>()?;

    let mut worst = vec![f64::INFINITY; defs.len()];
    let mut failures = Vec::new();
    for (trial, items) in &outcomes {
        for (idx, slack, inputs) in items {
            worst[*idx] = worst[*idx].min(*slack);
            if *slack < -defs[*idx].tolerance {
                failures.push(FailureRecord {
                    check: defs[*idx].name.to_string(),
                    trial: *trial,
                    slack: *slack,
                    tolerance: defs[*idx].tolerance,
                    inputs: inputs.clone(),
                });
            }
        }
    }
    failures.sort_by(|a, b| a.check.cmp(&b.check).then(a.trial.cmp(&b.trial)));
    let checks: Vec<CheckSummary> = defs
        .iter()
        .zip(&worst)
        .map(|(d, &w)| CheckSummary {
            name: d.name.to_string(),
            tolerance: d.tolerance,
            worst_slack: w,
            pass: w >= -d.tolerance,
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        suite: suite.to_string(),
        trials,
        seed,
        checks,
        failures,
        pass,
    })
}

/// Random extension for the suites: a pure state on systems, primes and a
/// hidden environment, with the environment traced out. Prime and
/// environment dims cycle with the trial index so mixed, degenerate and
/// trivial shapes all appear.
fn random_suite_extension(labels: [&str; 4], trial: u64, seed: u64) -> Result<Extension> {
    let prime_dims = [(2, 2), (2, 1), (1, 2)][(trial % 3) as usize];
    let env_dim = [2, 4][(trial % 2) as usize];
    let [a, ap, b, bp] = labels;
    let layout = SubsystemLayout::new(vec![
        (a, 2),
        (ap, prime_dims.0),
        (b, 2),
        (bp, prime_dims.1),
        ("hidden", env_dim),
    ])?;
    let phi = random_pure(&layout, seed)?;
    let held: Vec<String> = [a, ap, b, bp].iter().map(|l| l.to_string()).collect();
    let state = phi.reduced_density(&held)?;
    let base = state.reduce_to(&[a.to_string(), b.to_string()])?;
    Extension::new(
        state,
        vec![
            Party::new(vec![a.to_string()], vec![ap.to_string()]),
            Party::new(vec![b.to_string()], vec![bp.to_string()]),
        ],
        vec![],
        base,
    )
}

pub fn verify_monotonicity(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [
        CheckDef {
            name: "locc-average-inequality",
            tolerance: TOL_INEQUALITY,
        },
        CheckDef {
            name: "holevo-decomposition-identity",
            tolerance: TOL_IDENTITY,
        },
        CheckDef {
            name: "dilation-conditioning-match",
            tolerance: TOL_DILATION,
        },
    ];
    drive_suite("monotonicity", trials, seed, &defs, |trial, tseed| {
        let ext = random_suite_extension(["A", "Ap", "B", "Bp"], trial, split_seed(tseed, 0))?;
        let target = if trial % 2 == 0 { "A" } else { "B" };
        let d_out = [2, 3][((trial / 2) % 2) as usize];
        let kraus_count = [2, 3][((trial / 4) % 2) as usize];
        let m = random_instrument(target, 2, d_out, kraus_count, split_seed(tseed, 1))?;
        let inputs = json!({
            "extension": extension_to_value(&ext),
            "instrument": instrument_to_value(&m),
        });
        Ok(vec![
            (0, check_locc_inequality(&ext, &m)?, inputs.clone()),
            (1, check_holevo_decomposition(&ext, &m)?, inputs.clone()),
            (2, check_dilation_match(&ext, &m)?, inputs),
        ])
    })
}

pub fn verify_additivity(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [
        CheckDef {
            name: "product-extension-additivity",
            tolerance: TOL_IDENTITY,
        },
        CheckDef {
            name: "telescoping-identity",
            tolerance: TOL_TELESCOPING,
        },
    ];
    drive_suite("additivity", trials, seed, &defs, |trial, tseed| {
        let e1 = random_suite_extension(["A", "Ap", "B", "Bp"], trial, split_seed(tseed, 0))?;
        let e2 = random_suite_extension(["C", "Cp", "D", "Dp"], trial + 1, split_seed(tseed, 1))?;
        let product_inputs = json!({
            "e1": extension_to_value(&e1),
            "e2": extension_to_value(&e2),
        });
        let product_slack = check_product_additivity(&e1, &e2)?;

        // A joint extension of a two-factor base, peeled one factor at a time.
        let layout = SubsystemLayout::new(vec![
            ("A", 2),
            ("C", 2),
            ("Pa", 2),
            ("B", 2),
            ("D", 2),
            ("Pb", 2),
        ])?;
        let joint =
            crate::random::random_density(&layout, 1 + (trial % 6) as usize, split_seed(tseed, 2))?;
        let a_groups = [
            vec!["A".to_string()],
            vec!["C".to_string()],
            vec!["Pa".to_string()],
        ];
        let b_groups = [
            vec!["B".to_string()],
            vec!["D".to_string()],
            vec!["Pb".to_string()],
        ];
        let tele_inputs = json!({
            "state": crate::io::density_to_value(&joint),
            "a_groups": a_groups,
            "b_groups": b_groups,
        });
        let tele_slack = check_telescoping(&joint, &a_groups, &b_groups)?;
        Ok(vec![
            (0, product_slack, product_inputs),
            (1, tele_slack, tele_inputs),
        ])
    })
}

pub fn verify_convexity(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [CheckDef {
        name: "flag-mixture-equality",
        tolerance: TOL_IDENTITY,
    }];
    drive_suite("convexity", trials, seed, &defs, |trial, tseed| {
        let e1 = random_suite_extension(["A", "Ap", "B", "Bp"], trial, split_seed(tseed, 0))?;
        let e2 = random_suite_extension(["A", "Ap", "B", "Bp"], trial, split_seed(tseed, 1))?;
        let lam: f64 = {
            use rand::Rng;
            rng_for(split_seed(tseed, 2)).random::<f64>()
        };
        let inputs = json!({
            "e1": extension_to_value(&e1),
            "e2": extension_to_value(&e2),
            "lambda": lam,
        });
        Ok(vec![(0, check_convex_mixture(&e1, &e2, lam)?, inputs)])
    })
}

pub fn verify_conservation(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [
        CheckDef {
            name: "route-agreement",
            tolerance: TOL_INEQUALITY,
        },
        CheckDef {
            name: "flow-equals-half-gap",
            tolerance: TOL_INEQUALITY,
        },
        CheckDef {
            name: "order-independence",
            tolerance: TOL_INEQUALITY,
        },
    ];
    let order_trials = (trials / 5).max(1) as u64;
    drive_suite("conservation", trials, seed, &defs, |trial, tseed| {
        let layout =
            SubsystemLayout::new(vec![("A", 2), ("Ap", 2), ("B", 2), ("Bp", 2), ("E", 2)])?;
        let phi = random_pure(&layout, split_seed(tseed, 0))?;
        let scn = MergeScenario::new(
            phi,
            vec![
                Party::new(vec!["A".into()], vec!["Ap".into()]),
                Party::new(vec!["B".into()], vec!["Bp".into()]),
            ],
            vec!["E".into()],
        )?;
        let inputs = json!({"scenario": scenario_to_value(&scn)});
        let mut items = vec![
            (0, check_route_agreement(&scn)?, inputs.clone()),
            (1, check_flow_half_gap(&scn)?, inputs),
        ];

        if trial < order_trials {
            let layout3 = SubsystemLayout::new(vec![
                ("A", 2),
                ("Pa", 2),
                ("B", 2),
                ("Pb", 2),
                ("C", 2),
                ("Pc", 2),
                ("E", 2),
            ])?;
            let phi3 = random_pure(&layout3, split_seed(tseed, 1))?;
            let scn3 = MergeScenario::new(
                phi3,
                vec![
                    Party::new(vec!["A".into()], vec!["Pa".into()]),
                    Party::new(vec!["B".into()], vec!["Pb".into()]),
                    Party::new(vec!["C".into()], vec!["Pc".into()]),
                ],
                vec!["E".into()],
            )?;
            let inputs3 = json!({"scenario": scenario_to_value(&scn3)});
            items.push((2, check_order_independence(&scn3)?, inputs3));
        }
        Ok(items)
    })
}

pub fn verify_identities(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [
        CheckDef {
            name: "conditioning-identity",
            tolerance: TOL_IDENTITY,
        },
        CheckDef {
            name: "strong-subadditivity",
            tolerance: TOL_INEQUALITY,
        },
        CheckDef {
            name: "purity-complement-entropy",
            tolerance: TOL_PURITY,
        },
    ];
    drive_suite("identities", trials, seed, &defs, |trial, tseed| {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2), ("E", 2)])?;
        let rank = 1 + (trial % 8) as usize;
        let rho = crate::random::random_density(&layout, rank, split_seed(tseed, 0))?;
        let a = vec!["A".to_string()];
        let b = vec!["B".to_string()];
        let e = vec!["E".to_string()];
        let tri_inputs = json!({
            "state": crate::io::density_to_value(&rho),
            "a": a, "b": b, "e": e,
        });

        let dims = [(2usize, 3usize), (3, 2), (2, 2), (4, 2)][(trial % 4) as usize];
        let pure_layout = SubsystemLayout::new(vec![("X", dims.0), ("Y", dims.1)])?;
        let psi = random_pure(&pure_layout, split_seed(tseed, 1))?;
        let pure_inputs = json!({
            "state": crate::io::pure_to_value(&psi),
            "x": ["X"],
        });
        Ok(vec![
            (
                0,
                check_conditioning_identity(&rho, &a, &b, &e)?,
                tri_inputs.clone(),
            ),
            (1, check_strong_subadditivity(&rho, &a, &b, &e)?, tri_inputs),
            (
                2,
                check_purity_complement(&psi, &["X".to_string()])?,
                pure_inputs,
            ),
        ])
    })
}

pub fn verify_separable(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [CheckDef {
        name: "separable-zero",
        tolerance: TOL_IDENTITY,
    }];
    drive_suite("separable", trials, seed, &defs, |trial, tseed| {
        use rand::Rng;
        let terms = 1 + (trial % 3) as usize;
        let la = SubsystemLayout::new(vec![("A", 2)])?;
        let lb = SubsystemLayout::new(vec![("B", 2)])?;
        let states_a: Vec<DensityMatrix> = (0..terms)
            .map(|i| {
                crate::random::random_density(&la, 1 + (i % 2), split_seed(tseed, 10 + i as u64))
            })
            .collect::<Result<_>>()?;
        let states_b: Vec<DensityMatrix> = (0..terms)
            .map(|i| {
                crate::random::random_density(
                    &lb,
                    1 + ((i + 1) % 2),
                    split_seed(tseed, 20 + i as u64),
                )
            })
            .collect::<Result<_>>()?;
        let mut rng = rng_for(split_seed(tseed, 30));
        let mut probs: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.1).collect();
        let norm: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= norm;
        }
        let weights: Vec<(f64, usize, usize)> =
            probs.iter().enumerate().map(|(i, &p)| (p, i, i)).collect();
        let inputs = json!({
            "weights": weights.iter().map(|(p, i, j)| json!([p, i, j])).collect::<Vec<_>>(),
            "states_a": states_a.iter().map(crate::io::density_to_value).collect::<Vec<_>>(),
            "states_b": states_b.iter().map(crate::io::density_to_value).collect::<Vec<_>>(),
        });
        Ok(vec![(
            0,
            check_separable_zero(&weights, &states_a, &states_b)?,
            inputs,
        )])
    })
}

pub fn verify_pure_constancy(trials: usize, seed: u64) -> Result<SuiteReport> {
    let defs = [CheckDef {
        name: "pure-base-constancy",
        tolerance: TOL_IDENTITY,
    }];
    drive_suite("pure-constancy", trials, seed, &defs, |_trial, tseed| {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)])?;
        let base = random_pure(&layout, split_seed(tseed, 0))?;
        let cut = Cut::new(vec!["A".into()], vec!["B".into()]);
        let dims = AnsatzDims::new(2, 2, 2)?;
        let n = dims.generator_dim() * dims.generator_dim();
        let thetas: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                use rand::Rng;
                use rand_distr::StandardNormal;
                let mut rng = rng_for(split_seed(tseed, 1 + i));
                (0..n).map(|_| rng.sample(StandardNormal)).collect()
            })
            .collect();
        let inputs = json!({
            "base": crate::io::pure_to_value(&base),
            "cut_a": ["A"], "cut_b": ["B"],
            "dims": [2, 2, 2],
            "thetas": thetas,
        });
        Ok(vec![(
            0,
            check_pure_constancy(&base, &cut, dims, &thetas)?,
            inputs,
        )])
    })
}

/// Runs the named suite, or all seven for "all", in a fixed order.
pub fn run_suites(which: &str, trials: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    match which {
        "monotonicity" => Ok(vec![verify_monotonicity(trials, seed)?]),
        "additivity" => Ok(vec![verify_additivity(trials, seed)?]),
        "convexity" => Ok(vec![verify_convexity(trials, seed)?]),
        "conservation" => Ok(vec![verify_conservation(trials, seed)?]),
        "all" => Ok(vec![
            verify_monotonicity(trials, seed)?,
            verify_additivity(trials, seed)?,
            verify_convexity(trials, seed)?,
            verify_conservation(trials, seed)?,
            verify_identities(trials, seed)?,
            verify_separable(trials, seed)?,
            verify_pure_constancy(trials, seed)?,
        ]),
        other => Err(Error::BadArgument(format!(
            "unknown suite '{other}' (expected monotonicity, additivity, convexity, conservation, or all)"
        ))),
    }
}
