//! JSON file schemas for solutions.
//!
//! Instances have their own schema in [`crate::grid`]. Solvers that prove
//! infeasibility write `{"infeasible":true}` instead of a solution body.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::CellCoord;
use crate::placement::PlacementSolution;
use crate::schedule::{DroneTrace, ScheduleSolution};
use crate::path::PathSolution;
use crate::Outcome;

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("solution JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("rank key {0:?} is not of the form \"row,col\"")]
    BadRankKey(String),
    #[error("solution file does not match the requested kind")]
    KindMismatch,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InfeasibleFile {
    infeasible: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementFile {
    pub stations: Vec<CellCoord>,
    /// Cycle order starting at the depot.
    pub tour: Vec<CellCoord>,
    /// Keys are `"row,col"`.
    pub ranks: BTreeMap<String, u32>,
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub path: Vec<CellCoord>,
    pub visited_stations: Vec<CellCoord>,
    pub length: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub positions: Vec<CellCoord>,
    pub flags: Vec<u8>,
    #[serde(rename = "T")]
    pub completion_time: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub traces: Vec<TraceFile>,
    pub objective: f64,
    pub distance: f64,
}

fn rank_key(c: CellCoord) -> String {
    format!("{},{}", c.row, c.col)
}

fn parse_rank_key(key: &str) -> Result<CellCoord, SolutionFileError> {
    let bad = || SolutionFileError::BadRankKey(key.to_string());
    let (r, c) = key.split_once(',').ok_or_else(bad)?;
    Ok(CellCoord::new(
        r.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("solution serialization cannot fail");
    s.push('\n');
    s
}

fn infeasible_json() -> String {
    pretty(&InfeasibleFile { infeasible: true })
}

/// True when the text is the infeasibility marker document.
pub fn is_infeasible_json(text: &str) -> bool {
    serde_json::from_str::<InfeasibleFile>(text)
        .map(|f| f.infeasible)
        .unwrap_or(false)
}

pub fn placement_to_json(outcome: &Outcome<PlacementSolution>) -> String {
    match outcome {
        Outcome::Infeasible => infeasible_json(),
        Outcome::Feasible(sol) => pretty(&PlacementFile {
            stations: sol.stations.iter().copied().collect(),
            tour: sol.tour.clone(),
            ranks: sol.ranks.iter().map(|(&c, &r)| (rank_key(c), r)).collect(),
            count: sol.station_count,
            seed: sol.seed,
        }),
    }
}

pub fn placement_from_json(text: &str) -> Result<Outcome<PlacementSolution>, SolutionFileError> {
    if is_infeasible_json(text) {
        return Ok(Outcome::Infeasible);
    }
    let file: PlacementFile = serde_json::from_str(text)?;
    let stations: BTreeSet<CellCoord> = file.stations.iter().copied().collect();
    let mut ranks = BTreeMap::new();
    for (key, rank) in &file.ranks {
        ranks.insert(parse_rank_key(key)?, *rank);
    }
    let mut tour_edges = BTreeSet::new();
    if file.tour.len() >= 2 {
        for i in 0..file.tour.len() {
            tour_edges.insert((file.tour[i], file.tour[(i + 1) % file.tour.len()]));
        }
    }
    Ok(Outcome::Feasible(PlacementSolution {
        stations,
        tour: file.tour,
        tour_edges,
        ranks,
        station_count: file.count,
        seed: file.seed,
    }))
}

pub fn path_to_json(outcome: &Outcome<PathSolution>) -> String {
    match outcome {
        Outcome::Infeasible => infeasible_json(),
        Outcome::Feasible(sol) => pretty(&PathFile {
            path: sol.cells.clone(),
            visited_stations: sol.visited_stations.iter().copied().collect(),
            length: sol.length,
        }),
    }
}

pub fn path_from_json(text: &str) -> Result<Outcome<PathSolution>, SolutionFileError> {
    if is_infeasible_json(text) {
        return Ok(Outcome::Infeasible);
    }
    let file: PathFile = serde_json::from_str(text)?;
    let visited: BTreeSet<CellCoord> = file.path.iter().copied().collect();
    Ok(Outcome::Feasible(PathSolution {
        cells: file.path,
        visited,
        visited_stations: file.visited_stations.into_iter().collect(),
        length: file.length,
    }))
}

pub fn schedule_to_json(outcome: &Outcome<ScheduleSolution>) -> String {
    match outcome {
        Outcome::Infeasible => infeasible_json(),
        Outcome::Feasible(sol) => pretty(&ScheduleFile {
            traces: sol
                .traces
                .iter()
                .map(|tr| TraceFile {
                    positions: tr.positions.clone(),
                    flags: tr.flags.clone(),
                    completion_time: tr.completion_time,
                })
                .collect(),
            objective: sol.objective,
            distance: sol.total_distance,
        }),
    }
}

pub fn schedule_from_json(text: &str) -> Result<Outcome<ScheduleSolution>, SolutionFileError> {
    if is_infeasible_json(text) {
        return Ok(Outcome::Infeasible);
    }
    let file: ScheduleFile = serde_json::from_str(text)?;
    Ok(Outcome::Feasible(ScheduleSolution {
        traces: file
            .traces
            .into_iter()
            .map(|tr| DroneTrace {
                positions: tr.positions,
                flags: tr.flags,
                completion_time: tr.completion_time,
            })
            .collect(),
        objective: file.objective,
        total_distance: file.distance,
        deliveries_made: BTreeMap::new(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::build_distance_matrix;
    use crate::grid::{Delivery, GridInstance};
    use crate::placement::PlacementProblem;
    use crate::schedule::{solve_schedule, PickupPolicy, ScheduleProblem};

    #[test]
    fn placement_round_trip() {
        let g = GridInstance::empty(1, 7);
        let dist = build_distance_matrix(&g);
        let p = PlacementProblem::new(&g, &dist, CellCoord::new(0, 2)).unwrap();
        let outcome = crate::placement::solve_placement(&p).unwrap();
        let text = placement_to_json(&outcome);
        let loaded = placement_from_json(&text).unwrap();
        assert_eq!(loaded, outcome);
        assert!(text.contains("\"seed\""));
    }

    #[test]
    fn infeasible_marker_round_trip() {
        let text = placement_to_json(&Outcome::Infeasible);
        assert!(is_infeasible_json(&text));
        assert!(placement_from_json(&text).unwrap().is_infeasible());
        assert!(!is_infeasible_json("{\"stations\":[]}"));
    }

    #[test]
    fn schedule_round_trip() {
        let mut g = GridInstance::empty(1, 2);
        g.warehouses = vec![CellCoord::new(0, 0)];
        g.deliveries = vec![Delivery { cell: CellCoord::new(0, 1), demand: 1 }];
        let p = ScheduleProblem::new(&g, 1, 4, PickupPolicy::AnyWarehouse).unwrap();
        let outcome = solve_schedule(&p).unwrap();
        let text = schedule_to_json(&outcome);
        let loaded = schedule_from_json(&text).unwrap();
        if let (Outcome::Feasible(a), Outcome::Feasible(b)) = (&outcome, &loaded) {
            assert_eq!(a.traces, b.traces);
            assert_eq!(a.objective, b.objective);
        } else {
            panic!("expected feasible outcomes");
        }
    }
}
