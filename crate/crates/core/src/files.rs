//! Instance and solution JSON files.
//!
//! Instance files carry either an explicit cost matrix or integer point
//! coordinates (costs are then Euclidean distances rounded half-up).
//! Solution files store the assignment as one integer per client, with -1
//! marking a penalized client.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assign, Instance, Solution};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("exactly one of `costs` and `points` must be present")]
    CostsXorPoints,
    #[error("{0}")]
    Shape(String),
}

#[derive(Serialize, Deserialize)]
struct PointsFile {
    facility_xy: Vec<[i64; 2]>,
    client_xy: Vec<[i64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    facilities: usize,
    clients: usize,
    k: usize,
    capacity: i64,
    metric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    costs: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<PointsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    penalties: Option<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    version: u32,
    open: Vec<usize>,
    assign: Vec<i64>,
    cost: i64,
}

/// Euclidean distance between integer points, rounded half-up.
pub fn rounded_distance(a: [i64; 2], b: [i64; 2]) -> i64 {
    let dx = (a[0] - b[0]) as f64;
    let dy = (a[1] - b[1]) as f64;
    ((dx * dx + dy * dy).sqrt() + 0.5).floor() as i64
}

fn instance_from_file(file: InstanceFile) -> Result<Instance, FileError> {
    if file.version != FORMAT_VERSION {
        return Err(FileError::Version(file.version));
    }
    let cost = match (file.costs, file.points) {
        (Some(costs), None) => {
            if costs.len() != file.facilities
                || costs.iter().any(|row| row.len() != file.clients)
            {
                return Err(FileError::Shape(format!(
                    "costs must be a {}x{} matrix",
                    file.facilities, file.clients
                )));
            }
            costs
        }
        (None, Some(points)) => {
            if points.facility_xy.len() != file.facilities {
                return Err(FileError::Shape(format!(
                    "facility_xy has {} points, expected {}",
                    points.facility_xy.len(),
                    file.facilities
                )));
            }
            if points.client_xy.len() != file.clients {
                return Err(FileError::Shape(format!(
                    "client_xy has {} points, expected {}",
                    points.client_xy.len(),
                    file.clients
                )));
            }
            points
                .facility_xy
                .iter()
                .map(|&f| points.client_xy.iter().map(|&c| rounded_distance(f, c)).collect())
                .collect()
        }
        _ => return Err(FileError::CostsXorPoints),
    };
    if let Some(pen) = &file.penalties {
        if pen.len() != file.clients {
            return Err(FileError::Shape(format!(
                "penalties has {} entries, expected {}",
                pen.len(),
                file.clients
            )));
        }
    }
    Ok(Instance {
        num_facilities: file.facilities,
        num_clients: file.clients,
        capacity: file.capacity,
        k: file.k,
        metric: file.metric,
        cost,
        penalties: file.penalties,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance, FileError> {
    let text = fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    instance_from_file(file)
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<(), FileError> {
    let file = InstanceFile {
        version: FORMAT_VERSION,
        facilities: inst.num_facilities,
        clients: inst.num_clients,
        k: inst.k,
        capacity: inst.capacity,
        metric: inst.metric,
        costs: Some(inst.cost.clone()),
        points: None,
        penalties: inst.penalties.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_solution(path: &Path) -> Result<Solution, FileError> {
    let text = fs::read_to_string(path)?;
    let file: SolutionFile = serde_json::from_str(&text)?;
    if file.version != FORMAT_VERSION {
        return Err(FileError::Version(file.version));
    }
    let mut assign = Vec::with_capacity(file.assign.len());
    for (j, &a) in file.assign.iter().enumerate() {
        if a == -1 {
            assign.push(Assign::Penalty);
        } else if a >= 0 {
            assign.push(Assign::Facility(a as usize));
        } else {
            return Err(FileError::Shape(format!(
                "assign[{j}] = {a}; expected a facility id or -1"
            )));
        }
    }
    Ok(Solution {
        open: BTreeSet::from_iter(file.open),
        assign,
        total_cost: file.cost,
    })
}

pub fn write_solution(path: &Path, sol: &Solution) -> Result<(), FileError> {
    let file = SolutionFile {
        version: FORMAT_VERSION,
        open: sol.open.iter().copied().collect(),
        assign: sol
            .assign
            .iter()
            .map(|a| match a {
                Assign::Facility(f) => *f as i64,
                Assign::Penalty => -1,
            })
            .collect(),
        cost: sol.total_cost,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
