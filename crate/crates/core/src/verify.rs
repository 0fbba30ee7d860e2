//! Independent constraint checkers for the three solution types.
//!
//! These are the test oracles for the solvers, so they share no solver
//! internals: distances are recomputed from the grid with a fresh sweep
//! rather than trusting a caller-supplied matrix, and route costs are
//! re-derived from hop geometry. Each failed rule yields one [`Violation`]
//! carrying a stable catalogue identifier (`Eq2-obstacle`,
//! `Eq29-collision`, ...), a location, and a human-readable measure.
//!
//! Identifiers `Eq13-objective`, `Eq21-objective`, and `count-consistency`
//! extend the constraint catalogue with recomputation checks on reported
//! objective values and redundant count fields.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::distance::build_distance_matrix;
use crate::grid::{CellCoord, GridInstance};
use crate::path::{battery_feasible, PathSolution};
use crate::placement::PlacementSolution;
use crate::schedule::{completion_from_flags, step_flag, ScheduleProblem, ScheduleSolution};

/// Numeric tolerance for recomputed objective values.
pub const VERIFY_EPS: f64 = 1e-6;

/// One broken constraint instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint_id: String,
    pub location: String,
    pub detail: String,
}

impl Violation {
    fn new(id: &str, location: impl Into<String>, detail: impl Into<String>) -> Self {
        Violation { constraint_id: id.to_string(), location: location.into(), detail: detail.into() }
    }
}

/// Supplementary scheduling facts that are reported rather than enforced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    /// Every 1-to-0 flag drop, including terminal homecomings.
    pub literal_pickups: usize,
    /// Drops followed by a later delivery of the same drone.
    pub effective_pickups: usize,
    pub total_demand: u32,
    pub drones_end_at_warehouses: bool,
}

/// Check a placement against the stationing rules: no stations on
/// obstacles, full coverage within range, exact in/out degrees, depot
/// anchoring, and rank rows that exclude disjoint subtours. Degree, edge,
/// and rank rules are waived for a single station.
pub fn verify_placement(g: &GridInstance, sol: &PlacementSolution) -> Vec<Violation> {
    let mut out = Vec::new();
    let dist = build_distance_matrix(g);
    let d_max = g.d_max;
    let k = sol.stations.len();

    if sol.station_count != k {
        out.push(Violation::new(
            "count-consistency",
            "solution",
            format!("count field says {} but {} stations are listed", sol.station_count, k),
        ));
    }
    let tour_set: BTreeSet<CellCoord> = sol.tour.iter().copied().collect();
    if !sol.tour.is_empty() && tour_set != sol.stations {
        out.push(Violation::new(
            "count-consistency",
            "solution",
            "tour order does not list exactly the station set".to_string(),
        ));
    }

    for &s in &sol.stations {
        if !g.is_traversable(s) {
            out.push(Violation::new("Eq2-obstacle", format!("cell {s}"), "station on a blocked or out-of-range cell"));
        }
    }

    for free in g.free_cells() {
        let covered = sol.stations.iter().any(|&s| dist.within(free, s, d_max));
        if !covered {
            out.push(Violation::new(
                "Eq3-coverage",
                format!("cell {free}"),
                format!("no station within {d_max:.6}"),
            ));
        }
    }

    let depot = match g.depot {
        Some(d) => Some(d),
        None => sol.ranks.iter().find(|(_, &r)| r == 1).map(|(&c, _)| c),
    };
    match depot {
        Some(d) if sol.stations.contains(&d) => {}
        Some(d) => out.push(Violation::new("Eq7-depot", format!("cell {d}"), "depot cell holds no station")),
        None => out.push(Violation::new("Eq7-depot", "solution", "no rank-1 station identifies a depot")),
    }

    if k >= 2 {
        for &(a, b) in &sol.tour_edges {
            if a == b {
                out.push(Violation::new("Eq4-edge", format!("edge {a}->{b}"), "self-loop"));
                continue;
            }
            if !sol.stations.contains(&a) || !sol.stations.contains(&b) {
                out.push(Violation::new("Eq4-edge", format!("edge {a}->{b}"), "edge endpoint is not a station"));
                continue;
            }
            if !dist.within(a, b, d_max) {
                out.push(Violation::new(
                    "Eq4-edge",
                    format!("edge {a}->{b}"),
                    format!("hop distance {:.6} exceeds {d_max:.6}", dist.get(a, b)),
                ));
            }
        }
        let mut outdeg: BTreeMap<CellCoord, usize> = BTreeMap::new();
        let mut indeg: BTreeMap<CellCoord, usize> = BTreeMap::new();
        for &(a, b) in &sol.tour_edges {
            *outdeg.entry(a).or_default() += 1;
            *indeg.entry(b).or_default() += 1;
        }
        let mut degrees_ok = true;
        for &s in &sol.stations {
            let od = outdeg.get(&s).copied().unwrap_or(0);
            let id = indeg.get(&s).copied().unwrap_or(0);
            if od != 1 {
                degrees_ok = false;
                out.push(Violation::new("Eq5-outflow", format!("cell {s}"), format!("{od} outgoing edges, expected 1")));
            }
            if id != 1 {
                degrees_ok = false;
                out.push(Violation::new("Eq6-inflow", format!("cell {s}"), format!("{id} incoming edges, expected 1")));
            }
        }

        if let Some(d) = depot {
            for (&s, &r) in &sol.ranks {
                if s == d && r != 1 {
                    out.push(Violation::new("Eq8-subtour", format!("cell {s}"), format!("depot has rank {r}, expected 1")));
                }
            }
            for &s in &sol.stations {
                if !sol.ranks.contains_key(&s) {
                    out.push(Violation::new("Eq8-subtour", format!("cell {s}"), "station has no rank"));
                }
            }
            for &(a, b) in &sol.tour_edges {
                if a == d || b == d {
                    continue;
                }
                match (sol.ranks.get(&a), sol.ranks.get(&b)) {
                    (Some(&ra), Some(&rb)) if rb < ra + 1 => {
                        out.push(Violation::new(
                            "Eq8-subtour",
                            format!("edge {a}->{b}"),
                            format!("rank {rb} is not above rank {ra}"),
                        ));
                    }
                    _ => {}
                }
            }
            // Cycle decomposition: with clean degrees the successor walk
            // from the depot must reach every station.
            if degrees_ok && sol.stations.contains(&d) {
                let succ: BTreeMap<CellCoord, CellCoord> = sol.tour_edges.iter().copied().collect();
                let mut visited = BTreeSet::from([d]);
                let mut cur = d;
                while let Some(&nxt) = succ.get(&cur) {
                    if !visited.insert(nxt) {
                        break;
                    }
                    cur = nxt;
                }
                if visited.len() != k {
                    out.push(Violation::new(
                        "Eq8-subtour",
                        "solution",
                        format!("tour edges decompose into multiple cycles ({} of {k} stations reached)", visited.len()),
                    ));
                }
            }
        }
    } else if !sol.tour_edges.is_empty() {
        out.push(Violation::new("Eq4-edge", "solution", "tour edges present for a single station"));
    }
    out
}

/// Check a route against the path rules: pinned endpoints, no obstacles,
/// chain degrees over the visited set, the battery neighborhood rule, and
/// the recomputed bilinear length. All but the endpoint and obstacle rules
/// are waived for the degenerate single-cell route.
pub fn verify_path(g: &GridInstance, sol: &PathSolution) -> Vec<Violation> {
    let mut out = Vec::new();
    let [start, goal] = g.endpoints;

    if sol.cells.is_empty() {
        out.push(Violation::new("Eq14-endpoints", "solution", "empty cell sequence"));
        return out;
    }
    if sol.cells[0] != start {
        out.push(Violation::new("Eq14-endpoints", format!("cell {}", sol.cells[0]), format!("route starts off the initial point {start}")));
    }
    if *sol.cells.last().unwrap() != goal {
        out.push(Violation::new("Eq14-endpoints", format!("cell {}", sol.cells.last().unwrap()), format!("route ends off the final point {goal}")));
    }

    for &c in &sol.cells {
        if !g.is_traversable(c) {
            out.push(Violation::new("Eq15-obstacle", format!("cell {c}"), "route crosses a blocked or out-of-range cell"));
        }
    }

    let visited: BTreeSet<CellCoord> = sol.cells.iter().copied().collect();
    if visited.len() != sol.cells.len() {
        out.push(Violation::new("Eq17-degree", "solution", "route repeats a cell"));
    }
    if sol.visited != visited {
        out.push(Violation::new("count-consistency", "solution", "visited set disagrees with the cell sequence"));
    }
    let expect_stations: BTreeSet<CellCoord> = visited.intersection(&g.stations).copied().collect();
    if sol.visited_stations != expect_stations {
        out.push(Violation::new("Eq16-stations", "solution", "visited stations are not exactly the visited cells holding stations"));
    }

    let trivial = start == goal && sol.cells.len() == 1;
    if !trivial {
        for w in sol.cells.windows(2) {
            if !w[0].is_moore_adjacent(w[1]) {
                out.push(Violation::new(
                    "Eq17-degree",
                    format!("cell {}", w[1]),
                    format!("consecutive cells {} and {} are not adjacent", w[0], w[1]),
                ));
            }
        }
        for &c in &visited {
            let neighbor_count = g
                .neighbors_unchecked(c)
                .into_iter()
                .filter(|n| visited.contains(n))
                .count();
            let expected = if c == start || c == goal { 1 } else { 2 };
            if neighbor_count != expected {
                out.push(Violation::new(
                    "Eq17-degree",
                    format!("cell {c}"),
                    format!("{neighbor_count} visited neighbors, expected {expected}"),
                ));
            }
        }
        for &c in &visited {
            if !battery_feasible(g, &visited, &g.stations, c) {
                out.push(Violation::new(
                    "Eq18-battery",
                    format!("cell {c}"),
                    "not enough visited stations in the surrounding block",
                ));
            }
        }
    }

    // Recompute the bilinear cost from hop geometry.
    let mut length = 0.0;
    for &a in &visited {
        for &b in &visited {
            if a.is_moore_adjacent(b) {
                length += a.hop_cost(b);
            }
        }
    }
    length *= 0.5;
    if (length - sol.length).abs() > VERIFY_EPS {
        out.push(Violation::new(
            "Eq13-objective",
            "solution",
            format!("reported length {} but the visited set costs {length}", sol.length),
        ));
    }
    out
}

/// Check a schedule against the fleet rules: warehouse starts, stepwise
/// movement, flag replay, demand and effective-supply accounting,
/// collision freedom, and recomputed completion times and objective.
pub fn verify_schedule(p: &ScheduleProblem, sol: &ScheduleSolution) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = p.grid;
    let len = p.horizon + 1;

    if sol.traces.len() != p.n_drones {
        out.push(Violation::new(
            "Eq23-presence",
            "solution",
            format!("{} traces for {} drones", sol.traces.len(), p.n_drones),
        ));
        return out;
    }

    let mut shape_ok = true;
    for (n, tr) in sol.traces.iter().enumerate() {
        if tr.positions.len() != len || tr.flags.len() != len {
            shape_ok = false;
            out.push(Violation::new(
                "Eq23-presence",
                format!("drone {n}"),
                format!(
                    "expected {len} timesteps, trace has {} positions and {} flags",
                    tr.positions.len(),
                    tr.flags.len()
                ),
            ));
        }
        for (t, &c) in tr.positions.iter().enumerate() {
            if !g.in_bounds(c) {
                shape_ok = false;
                out.push(Violation::new("Eq23-presence", format!("drone {n}, t={t}"), format!("cell {c} is outside the grid")));
            }
        }
    }
    if !shape_ok {
        return out;
    }

    for (n, tr) in sol.traces.iter().enumerate() {
        if tr.positions[0] != g.warehouses[n] {
            out.push(Violation::new(
                "Eq22-connectedness",
                format!("drone {n}, t=0"),
                format!("starts at {} instead of its warehouse {}", tr.positions[0], g.warehouses[n]),
            ));
        }
        for t in 1..len {
            let (a, b) = (tr.positions[t - 1], tr.positions[t]);
            if a != b && !a.is_moore_adjacent(b) {
                out.push(Violation::new(
                    "Eq22-connectedness",
                    format!("drone {n}, t={t}"),
                    format!("jumps from {a} to {b}"),
                ));
            }
        }

        if tr.flags[0] != 1 {
            out.push(Violation::new("Eq24-initial-flag", format!("drone {n}, t=0"), format!("initial flag {} instead of 1", tr.flags[0])));
        }
        for t in 1..len {
            let expected = step_flag(tr.flags[t - 1], tr.positions[t], p, n);
            if tr.flags[t] != expected {
                let id = if tr.flags[t - 1] == 0 { "Eq25-flag-delivery" } else { "Eq26-flag-return" };
                out.push(Violation::new(
                    id,
                    format!("drone {n}, t={t}"),
                    format!("flag {} at {} but the transition rules give {expected}", tr.flags[t], tr.positions[t]),
                ));
            }
        }

        let recomputed = completion_from_flags(&tr.flags);
        if tr.completion_time != recomputed {
            out.push(Violation::new(
                "Eq30-completion",
                format!("drone {n}"),
                format!("completion time {} but the last load happens at {recomputed}", tr.completion_time),
            ));
        }
    }

    // Collision freedom.
    for t in 0..len {
        for a in 0..p.n_drones {
            for b in a + 1..p.n_drones {
                if sol.traces[a].positions[t] == sol.traces[b].positions[t] {
                    out.push(Violation::new(
                        "Eq29-collision",
                        format!("t={t}"),
                        format!("drones {a} and {b} share cell {}", sol.traces[a].positions[t]),
                    ));
                }
            }
        }
    }

    // Demand and supply accounting from the flag transitions.
    let report = schedule_report(p, sol);
    let mut per_cell: BTreeMap<CellCoord, u32> = BTreeMap::new();
    for tr in &sol.traces {
        for t in 1..len {
            if tr.flags[t - 1] == 0 && tr.flags[t] == 1 && p.is_delivery_cell(tr.positions[t]) {
                *per_cell.entry(tr.positions[t]).or_default() += 1;
            }
        }
    }
    for d in &g.deliveries {
        let got = per_cell.get(&d.cell).copied().unwrap_or(0);
        if got != d.demand {
            out.push(Violation::new(
                "Eq28-demand",
                format!("cell {}", d.cell),
                format!("{got} deliveries for demand {}", d.demand),
            ));
        }
    }
    if report.effective_pickups as u32 != report.total_demand {
        out.push(Violation::new(
            "Eq27-supply",
            "solution",
            format!(
                "effective pickups {} do not match total demand {} (literal pickup count {})",
                report.effective_pickups, report.total_demand, report.literal_pickups
            ),
        ));
    }

    // Objective recomputation. Octile length stands in for the hop cost
    // on malformed jumping traces so the check stays total.
    let step = |a: CellCoord, b: CellCoord| {
        if a.chebyshev(b) <= 1 {
            a.hop_cost(b)
        } else {
            a.octile(b)
        }
    };
    let distance: f64 = sol
        .traces
        .iter()
        .map(|tr| tr.positions.windows(2).map(|w| step(w[0], w[1])).sum::<f64>())
        .sum();
    let times: usize = sol.traces.iter().map(|tr| completion_from_flags(&tr.flags)).sum();
    let objective = p.weight_distance * distance + p.weight_time * times as f64;
    if (distance - sol.total_distance).abs() > VERIFY_EPS {
        out.push(Violation::new(
            "Eq21-objective",
            "solution",
            format!("reported distance {} but the traces travel {distance}", sol.total_distance),
        ));
    }
    if (objective - sol.objective).abs() > VERIFY_EPS {
        out.push(Violation::new(
            "Eq21-objective",
            "solution",
            format!("reported objective {} but recomputation gives {objective}", sol.objective),
        ));
    }
    out
}

/// Facts the checker reports without enforcing: both supply-accounting
/// variants and whether the fleet finishes parked at warehouses.
pub fn schedule_report(p: &ScheduleProblem, sol: &ScheduleSolution) -> ScheduleReport {
    let mut literal = 0usize;
    let mut effective = 0usize;
    for tr in &sol.traces {
        let len = tr.flags.len().min(tr.positions.len());
        let mut drops: Vec<usize> = Vec::new();
        let mut deliveries: Vec<usize> = Vec::new();
        for t in 1..len {
            if tr.flags[t - 1] == 1 && tr.flags[t] == 0 {
                drops.push(t);
            }
            if tr.flags[t - 1] == 0 && tr.flags[t] == 1 && p.is_delivery_cell(tr.positions[t]) {
                deliveries.push(t);
            }
        }
        literal += drops.len();
        effective += drops
            .iter()
            .filter(|&&t| deliveries.iter().any(|&d| d > t))
            .count();
    }
    let ends_home = sol.traces.iter().all(|tr| {
        tr.positions
            .last()
            .is_some_and(|c| p.grid.warehouses.contains(c))
    });
    ScheduleReport {
        literal_pickups: literal,
        effective_pickups: effective,
        total_demand: p.grid.total_demand(),
        drones_end_at_warehouses: ends_home,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::build_distance_matrix;
    use crate::grid::Delivery;
    use crate::path::{solve_shortest_path, PathProblem};
    use crate::placement::{solve_placement, PlacementProblem};
    use crate::schedule::{solve_schedule, DroneTrace, PickupPolicy};
    use crate::Outcome;

    #[test]
    fn solver_placement_output_is_clean() {
        let mut g = GridInstance::empty(5, 5);
        g.obstacles.insert(CellCoord::new(2, 2));
        let dist = build_distance_matrix(&g);
        let p = PlacementProblem::new(&g, &dist, CellCoord::new(1, 1)).unwrap();
        if let Outcome::Feasible(sol) = solve_placement(&p).unwrap() {
            g.depot = Some(CellCoord::new(1, 1));
            assert_eq!(verify_placement(&g, &sol), vec![]);
        } else {
            panic!("5x5 grid with one obstacle must be coverable");
        }
    }

    #[test]
    fn missing_depot_is_flagged() {
        let g = GridInstance::empty(2, 2);
        let sol = PlacementSolution {
            stations: [CellCoord::new(0, 1)].into(),
            tour: vec![CellCoord::new(0, 1)],
            tour_edges: BTreeSet::new(),
            ranks: [(CellCoord::new(0, 1), 2)].into(),
            station_count: 1,
            seed: 0,
        };
        let violations = verify_placement(&g, &sol);
        assert!(violations.iter().any(|v| v.constraint_id == "Eq7-depot"));
    }

    #[test]
    fn disjoint_two_cycles_are_flagged_as_subtours() {
        // Four stations in two mutual pairs; degrees are all 1 but the
        // edges never link the pairs.
        let g = GridInstance::empty(8, 8);
        let a = CellCoord::new(0, 0);
        let b = CellCoord::new(0, 1);
        let c = CellCoord::new(7, 6);
        let d = CellCoord::new(7, 7);
        let sol = PlacementSolution {
            stations: [a, b, c, d].into(),
            tour: vec![a, b, c, d],
            tour_edges: [(a, b), (b, a), (c, d), (d, c)].into(),
            ranks: [(a, 1), (b, 2), (c, 3), (d, 4)].into(),
            station_count: 4,
            seed: 0,
        };
        let mut g2 = g.clone();
        g2.depot = Some(a);
        let violations = verify_placement(&g2, &sol);
        assert!(violations.iter().any(|v| v.constraint_id == "Eq8-subtour"));
    }

    #[test]
    fn solver_path_output_is_clean() {
        let mut g = GridInstance::empty(4, 4);
        for c in [(0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (2, 0)] {
            g.stations.insert(CellCoord::new(c.0, c.1));
        }
        g.endpoints = [CellCoord::new(0, 0), CellCoord::new(3, 3)];
        let dist = build_distance_matrix(&g);
        let p = PathProblem::new(&g, &dist).unwrap();
        if let Outcome::Feasible(sol) = solve_shortest_path(&p).unwrap() {
            assert_eq!(verify_path(&g, &sol), vec![]);
        }
    }

    #[test]
    fn route_through_obstacle_is_flagged() {
        let mut g = GridInstance::empty(1, 3);
        g.obstacles.insert(CellCoord::new(0, 1));
        g.endpoints = [CellCoord::new(0, 0), CellCoord::new(0, 2)];
        g.obstacles.remove(&CellCoord::new(0, 0));
        let cells = vec![CellCoord::new(0, 0), CellCoord::new(0, 1), CellCoord::new(0, 2)];
        let visited: BTreeSet<_> = cells.iter().copied().collect();
        let sol = PathSolution {
            cells,
            visited: visited.clone(),
            visited_stations: BTreeSet::new(),
            length: 2.0,
        };
        let violations = verify_path(&g, &sol);
        assert!(violations.iter().any(|v| v.constraint_id == "Eq15-obstacle"));
    }

    #[test]
    fn single_nearby_station_fails_battery_rule() {
        let mut g = GridInstance::empty(1, 4);
        g.stations.insert(CellCoord::new(0, 0));
        g.stations.insert(CellCoord::new(0, 3));
        g.endpoints = [CellCoord::new(0, 0), CellCoord::new(0, 3)];
        let cells: Vec<_> = (0..4).map(|c| CellCoord::new(0, c)).collect();
        let visited: BTreeSet<_> = cells.iter().copied().collect();
        let stations: BTreeSet<_> = visited.intersection(&g.stations).copied().collect();
        let sol = PathSolution { cells, visited, visited_stations: stations, length: 3.0 };
        let violations = verify_path(&g, &sol);
        // The interior cells see only one visited station each.
        assert!(violations.iter().any(|v| v.constraint_id == "Eq18-battery"));
    }

    fn two_drone_problem(g: &GridInstance) -> ScheduleProblem<'_> {
        ScheduleProblem::new(g, 2, 4, PickupPolicy::AnyWarehouse).unwrap()
    }

    #[test]
    fn solver_schedule_output_is_clean() {
        let mut g = GridInstance::empty(1, 2);
        g.warehouses = vec![CellCoord::new(0, 0)];
        g.deliveries = vec![Delivery { cell: CellCoord::new(0, 1), demand: 1 }];
        let p = ScheduleProblem::new(&g, 1, 4, PickupPolicy::AnyWarehouse).unwrap();
        let sol = solve_schedule(&p).unwrap().expect_feasible("solvable");
        assert_eq!(verify_schedule(&p, &sol), vec![]);
        let report = schedule_report(&p, &sol);
        assert!(report.drones_end_at_warehouses);
        assert_eq!(report.effective_pickups, 1);
        assert_eq!(report.literal_pickups, 2);
    }

    #[test]
    fn shared_cell_is_a_collision() {
        let mut g = GridInstance::empty(3, 3);
        g.warehouses = vec![CellCoord::new(0, 0), CellCoord::new(2, 2)];
        let p = two_drone_problem(&g);
        let meet = CellCoord::new(1, 1);
        let mk = |home: CellCoord| DroneTrace {
            positions: vec![home, meet, home, home, home],
            flags: vec![1, 1, 0, 0, 0],
            completion_time: 2,
        };
        let sol = ScheduleSolution {
            traces: vec![mk(CellCoord::new(0, 0)), mk(CellCoord::new(2, 2))],
            objective: 0.0,
            total_distance: 0.0,
            deliveries_made: BTreeMap::new(),
        };
        let violations = verify_schedule(&p, &sol);
        assert!(violations
            .iter()
            .any(|v| v.constraint_id == "Eq29-collision" && v.location == "t=1"));
    }

    #[test]
    fn teleport_is_flagged() {
        let mut g = GridInstance::empty(4, 4);
        g.warehouses = vec![CellCoord::new(0, 0), CellCoord::new(3, 3)];
        let p = two_drone_problem(&g);
        let jumps = DroneTrace {
            positions: vec![
                CellCoord::new(0, 0),
                CellCoord::new(0, 2),
                CellCoord::new(0, 2),
                CellCoord::new(0, 2),
                CellCoord::new(0, 2),
            ],
            flags: vec![1, 1, 1, 1, 1],
            completion_time: 0,
        };
        let stays = DroneTrace {
            positions: vec![CellCoord::new(3, 3); 5],
            flags: vec![1, 0, 0, 0, 0],
            completion_time: 1,
        };
        let sol = ScheduleSolution {
            traces: vec![jumps, stays],
            objective: 0.0,
            total_distance: 0.0,
            deliveries_made: BTreeMap::new(),
        };
        let violations = verify_schedule(&p, &sol);
        assert!(violations
            .iter()
            .any(|v| v.constraint_id == "Eq22-connectedness" && v.location.contains("t=1")));
    }
}
