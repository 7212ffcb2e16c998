//! CSV artifacts: per-subsystem partitions and controllers, and closed-loop traces.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a file back
//! reproduces the exact values.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use compref::composition::{ClosedLoopTrace, Component};
use compref::refinement::ControlChoice;
use compref::{LocalController, SubsystemAbstraction, SymbolId, ValidTable};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub step: usize,
    pub cell: usize,
    pub path: String,
    pub lows: String,
    pub highs: String,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerRow {
    pub step: usize,
    pub subsystem: usize,
    pub cell: usize,
    pub path: String,
    pub control: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial: usize,
    pub step: usize,
    pub state: String,
    pub control: String,
    pub satisfied: bool,
}

pub fn partition_file(dir: &Path, subsystem: usize) -> PathBuf {
    dir.join(format!("partition_S{}.csv", subsystem + 1))
}

pub fn controller_file(dir: &Path, subsystem: usize) -> PathBuf {
    dir.join(format!("controller_S{}.csv", subsystem + 1))
}

pub fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn split(text: &str) -> Result<Vec<f64>, CliError> {
    text.split_whitespace()
        .map(|v| v.parse().map_err(|e| CliError::Config(format!("bad number `{v}`: {e}"))))
        .collect()
}

fn symbol(cell: usize, path: &str) -> Result<SymbolId, CliError> {
    let path = SymbolId::parse_path(path).map_err(|e| CliError::Config(format!("bad symbol path `{path}`: {e}")))?;
    Ok(SymbolId { cell, path })
}

pub fn partition_rows(component: &Component<f64>) -> Vec<PartitionRow> {
    let abs = &component.abstraction;
    let mut rows = Vec::new();
    for (k, part) in abs.partitions().iter().enumerate() {
        for leaf in part.leaves() {
            let b = part.symbol_box(&leaf).expect("leaf of its own partition");
            rows.push(PartitionRow {
                step: k,
                cell: leaf.cell,
                path: leaf.path_string(),
                lows: join(b.low()),
                highs: join(b.high()),
                valid: component.valid.step(k).contains(&leaf),
            });
        }
    }
    rows
}

pub fn controller_rows(controller: &LocalController<f64>) -> Vec<ControllerRow> {
    controller
        .entries()
        .map(|(k, s, c)| ControllerRow {
            step: k,
            subsystem: controller.subsystem() + 1,
            cell: s.cell,
            path: s.path_string(),
            control: join(&controller.control_values()[c.first]),
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(CliError::io(format!("cannot create {}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(CliError::io(format!("cannot write {}", path.display())))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_component(dir: &Path, component: &Component<f64>) -> Result<(), CliError> {
    let id = component.controller.subsystem();
    write_csv(&partition_file(dir, id), &partition_rows(component))?;
    write_csv(&controller_file(dir, id), &controller_rows(&component.controller))
}

/// Rebuilds a component on top of a fresh abstraction of the same subsystem. The rows must
/// describe exactly the leaves of a refinement of the abstraction's grid.
pub fn component_from_rows(
    mut abs: SubsystemAbstraction<f64>,
    partition: &[PartitionRow],
    controller: &[ControllerRow],
) -> Result<Component<f64>, CliError> {
    let id = abs.spec().id;
    let r = abs.sequence().horizon();
    let bad = |msg: String| CliError::Config(format!("subsystem S{}: {msg}", id + 1));
    let mut steps = vec![BTreeSet::new(); r + 1];
    let mut leaves = vec![BTreeSet::new(); r + 1];
    for row in partition {
        if row.step > r {
            return Err(bad(format!("step {} beyond horizon {r}", row.step)));
        }
        let s = symbol(row.cell, &row.path)?;
        let part = abs.partition_mut(row.step);
        for depth in 0..s.depth() {
            let prefix = SymbolId { cell: s.cell, path: s.path[..depth].to_vec() };
            if !part.contains_symbol(&prefix) {
                return Err(bad(format!("symbol {s} is not in the grid")));
            }
            if part.is_leaf(&prefix) {
                part.split(&prefix).map_err(|e| bad(e.to_string()))?;
            }
        }
        if !part.contains_symbol(&s) {
            return Err(bad(format!("symbol {s} is not in the grid")));
        }
        let b = part.symbol_box(&s).map_err(|e| bad(e.to_string()))?;
        let (lo, hi) = (split(&row.lows)?, split(&row.highs)?);
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0))
        };
        if !close(&lo, b.low()) || !close(&hi, b.high()) {
            return Err(bad(format!("bounds of {s} at step {} do not match its path", row.step)));
        }
        if row.valid {
            steps[row.step].insert(s.clone());
        }
        leaves[row.step].insert(s);
    }
    for (k, want) in leaves.iter().enumerate() {
        let got: BTreeSet<SymbolId> = abs.partition(k).leaves().into_iter().collect();
        if &got != want {
            return Err(bad(format!("rows of step {k} are not exactly the leaves of a refinement")));
        }
    }
    let mut local = LocalController::new(id, abs.spec().controls.clone(), abs.control_values().to_vec());
    for row in controller {
        if row.subsystem != id + 1 {
            return Err(bad(format!("controller row for subsystem S{}", row.subsystem)));
        }
        let s = symbol(row.cell, &row.path)?;
        if row.step >= r || !leaves[row.step].contains(&s) {
            return Err(bad(format!("controller entry for unknown symbol {s} at step {}", row.step)));
        }
        let u = split(&row.control)?;
        let first = abs
            .control_values()
            .iter()
            .position(|v| v.len() == u.len() && v.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-12))
            .ok_or_else(|| bad(format!("control `{}` is not in the control set", row.control)))?;
        local.insert(row.step, s, ControlChoice { first, all: Vec::new() });
    }
    Ok(Component { abstraction: abs, valid: ValidTable::from_steps(steps), controller: local })
}

pub fn read_component(dir: &Path, abs: SubsystemAbstraction<f64>) -> Result<Component<f64>, CliError> {
    let id = abs.spec().id;
    let partition = read_csv(&partition_file(dir, id))?;
    let controller = read_csv(&controller_file(dir, id))?;
    component_from_rows(abs, &partition, &controller)
}

pub fn trace_rows(trial: usize, trace: &ClosedLoopTrace<f64>) -> Vec<TraceRow> {
    trace
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| TraceRow {
            trial,
            step: k,
            state: join(x),
            control: trace.controls.get(k).map(|u| join(u)).unwrap_or_default(),
            satisfied: trace.satisfied,
        })
        .collect()
}
