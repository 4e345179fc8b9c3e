//! One JSON container for states and reports. A state file holds
//! `{labels, dims, kind, matrix}` with complex entries written as `[re, im]`
//! pairs: `kind: "density"` stores the full matrix row by row, `kind: "pure"`
//! stores the flat amplitude vector. Loading re-runs every constructor
//! invariant and names the one that failed together with the measured defect.

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::layout::SubsystemLayout;
use crate::linalg::{CMat, CVec, C64};
use crate::state::{DensityMatrix, PureStateVector};

#[derive(Clone, Debug)]
pub enum LoadedState {
    Density(DensityMatrix),
    Pure(PureStateVector),
}

impl LoadedState {
    pub fn layout(&self) -> &SubsystemLayout {
        match self {
            LoadedState::Density(d) => d.layout(),
            LoadedState::Pure(p) => p.layout(),
        }
    }

    /// The state as a density matrix, converting pure inputs.
    pub fn density(&self) -> DensityMatrix {
        match self {
            LoadedState::Density(d) => d.clone(),
            LoadedState::Pure(p) => p.density(),
        }
    }
}

fn complex_value(c: C64) -> Value {
    json!([c.re, c.im])
}

fn state_container(layout: &SubsystemLayout, kind: &str, matrix: Value) -> Value {
    json!({
        "labels": layout.labels(),
        "dims": layout.dims(),
        "kind": kind,
        "matrix": matrix,
    })
}

pub fn density_to_value(rho: &DensityMatrix) -> Value {
    let n = rho.dim();
    let rows: Vec<Value> = (0..n)
        .map(|i| {
            Value::Array(
                (0..n)
                    .map(|j| complex_value(rho.matrix()[(i, j)]))
                    .collect(),
            )
        })
        .collect();
    state_container(rho.layout(), "density", Value::Array(rows))
}

pub fn pure_to_value(psi: &PureStateVector) -> Value {
    let amps: Vec<Value> = psi.amplitudes().iter().map(|&a| complex_value(a)).collect();
    state_container(psi.layout(), "pure", Value::Array(amps))
}

pub fn save_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_value(path, &density_to_value(rho))
}

pub fn save_pure(path: &Path, psi: &PureStateVector) -> Result<()> {
    write_value(path, &pure_to_value(psi))
}

/// Serializes any report into the shared container format.
pub fn write_value(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn save_report<T: serde::Serialize>(path: &Path, report: &T) -> Result<()> {
    write_value(path, &serde_json::to_value(report)?)
}

pub fn load_report<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::BadStateFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn parse_complex(path: &Path, v: &Value, what: &str) -> Result<C64> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| bad(path, format!("{what} must be a [re, im] pair")))?;
    let re = pair[0]
        .as_f64()
        .ok_or_else(|| bad(path, format!("{what} has a non-numeric real part")))?;
    let im = pair[1]
        .as_f64()
        .ok_or_else(|| bad(path, format!("{what} has a non-numeric imaginary part")))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(bad(path, format!("{what} is not finite")));
    }
    Ok(C64::new(re, im))
}

pub fn load_state(path: &Path) -> Result<LoadedState> {
    let text =
        std::fs::read_to_string(path).map_err(|e| bad(path, format!("cannot read file: {e}")))?;
    let root: Value =
        serde_json::from_str(&text).map_err(|e| bad(path, format!("not valid JSON: {e}")))?;
    parse_state_value(path, &root)
}

pub fn parse_state_value(path: &Path, root: &Value) -> Result<LoadedState> {
    let obj = root
        .as_object()
        .ok_or_else(|| bad(path, "top level must be an object"))?;

    let labels: Vec<String> = obj
        .get("labels")
        .and_then(Value::as_array)
        .ok_or_else(|| bad(path, "missing \"labels\" array"))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| bad(path, "labels must be strings"))
        })
        .collect::<Result<_>>()?;
    let dims: Vec<usize> = obj
        .get("dims")
        .and_then(Value::as_array)
        .ok_or_else(|| bad(path, "missing \"dims\" array"))?
        .iter()
        .map(|v| {
            v.as_u64()
                .filter(|&d| d > 0)
                .map(|d| d as usize)
                .ok_or_else(|| bad(path, "dims must be positive integers"))
        })
        .collect::<Result<_>>()?;
    if labels.len() != dims.len() {
        return Err(bad(
            path,
            format!("{} labels but {} dims", labels.len(), dims.len()),
        ));
    }
    let layout = SubsystemLayout::new(labels.into_iter().zip(dims).collect())
        .map_err(|e| bad(path, format!("invalid layout: {e}")))?;
    let n = layout.total_dim();

    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| bad(path, "missing \"kind\" string"))?;
    let matrix = obj
        .get("matrix")
        .and_then(Value::as_array)
        .ok_or_else(|| bad(path, "missing \"matrix\" array"))?;

    match kind {
        "density" => {
            if matrix.len() != n {
                return Err(bad(
                    path,
                    format!("density matrix has {} rows, layout needs {n}", matrix.len()),
                ));
            }
            let mut entries = CMat::zeros(n, n);
            for (i, row_v) in matrix.iter().enumerate() {
                let row = row_v
                    .as_array()
                    .filter(|r| r.len() == n)
                    .ok_or_else(|| bad(path, format!("row {i} must be an array of {n} entries")))?;
                for (j, cell) in row.iter().enumerate() {
                    entries[(i, j)] = parse_complex(path, cell, &format!("entry ({i},{j})"))?;
                }
            }
            let rho = DensityMatrix::new(layout, entries)
                .map_err(|e| bad(path, format!("not a physical density matrix: {e}")))?;
            Ok(LoadedState::Density(rho))
        }
        "pure" => {
            if matrix.len() != n {
                return Err(bad(
                    path,
                    format!(
                        "amplitude vector has {} entries, layout needs {n}",
                        matrix.len()
                    ),
                ));
            }
            let mut amps = CVec::zeros(n);
            for (i, cell) in matrix.iter().enumerate() {
                amps[i] = parse_complex(path, cell, &format!("amplitude {i}"))?;
            }
            let psi = PureStateVector::new(layout, amps)
                .map_err(|e| bad(path, format!("not a unit state vector: {e}")))?;
            Ok(LoadedState::Pure(psi))
        }
        other => Err(bad(
            path,
            format!("unknown kind \"{other}\" (expected \"density\" or \"pure\")"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_pure};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // Leak the tempdir so the path stays valid for the test body.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn density_round_trip_is_exact() {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 3)]).unwrap();
        let rho = random_density(&layout, 4, 7).unwrap();
        let path = tmp("rho.state");
        save_density(&path, &rho).unwrap();
        match load_state(&path).unwrap() {
            LoadedState::Density(back) => {
                assert_eq!(back.layout(), rho.layout());
                assert!(back.max_abs_diff(&rho).unwrap() < 1e-12);
            }
            _ => panic!("expected density"),
        }
    }

    #[test]
    fn pure_round_trip_is_exact() {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let psi = random_pure(&layout, 9).unwrap();
        let path = tmp("psi.state");
        save_pure(&path, &psi).unwrap();
        match load_state(&path).unwrap() {
            LoadedState::Pure(back) => {
                assert_eq!(back.layout(), psi.layout());
                for i in 0..4 {
                    assert!((back.amplitudes()[i] - psi.amplitudes()[i]).norm() < 1e-12);
                }
            }
            _ => panic!("expected pure"),
        }
    }

    #[test]
    fn loader_names_the_violated_invariant() {
        let path = tmp("bad.state");

        std::fs::write(&path, "{ not json").unwrap();
        let e = load_state(&path).unwrap_err().to_string();
        assert!(e.contains("not valid JSON"), "{e}");

        std::fs::write(
            &path,
            r#"{"labels":["A"],"dims":[2,2],"kind":"pure","matrix":[]}"#,
        )
        .unwrap();
        let e = load_state(&path).unwrap_err().to_string();
        assert!(e.contains("1 labels but 2 dims"), "{e}");

        std::fs::write(
            &path,
            r#"{"labels":["A"],"dims":[2],"kind":"pure","matrix":[[1.0,0.0],[1.0,0.0]]}"#,
        )
        .unwrap();
        let e = load_state(&path).unwrap_err().to_string();
        assert!(e.contains("not a unit state vector"), "{e}");

        // Non-Hermitian density input: the measured defect is reported.
        std::fs::write(
            &path,
            r#"{"labels":["A"],"dims":[2],"kind":"density",
               "matrix":[[[0.5,0.0],[0.4,0.0]],[[0.0,0.0],[0.5,0.0]]]}"#,
        )
        .unwrap();
        let e = load_state(&path).unwrap_err().to_string();
        assert!(e.contains("not a physical density matrix"), "{e}");
        assert!(e.contains("4.000e-1"), "{e}");

        std::fs::write(
            &path,
            r#"{"labels":["A"],"dims":[2],"kind":"mixed","matrix":[]}"#,
        )
        .unwrap();
        let e = load_state(&path).unwrap_err().to_string();
        assert!(e.contains("unknown kind"), "{e}");
    }

    #[test]
    fn reports_round_trip_through_the_container() {
        use crate::optimize::BoundReport;
        let report = BoundReport {
            objective: "cemi".into(),
            best_value: 0.25,
            baseline_trivial: 0.5,
            best_params: Some(vec![0.1, -0.2]),
            restart_values: vec![0.3, 0.25],
            eval_counts: vec![10, 12],
            total_evals: 22,
            wall_time_s: 0.01,
            dims: vec![2, 2, 1],
            seed: 7,
        };
        let path = tmp("bound.report");
        save_report(&path, &report).unwrap();
        let back: BoundReport = load_report(&path).unwrap();
        assert!(back.same_outcome(&report));
    }
}
