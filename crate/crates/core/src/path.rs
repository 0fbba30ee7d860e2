//! Exact battery-constrained shortest path between two endpoints.
//!
//! The route is a set of visited cells whose induced Moore-adjacency graph
//! is a single chain: each endpoint touches exactly one visited neighbor
//! and every other visited cell exactly two. Its cost is the bilinear one,
//! half the sum of hop distances over *all* ordered visited adjacent pairs,
//! which for a chain is just the walked length. The battery rule requires
//! every visited cell to keep enough visited stations in its closed 3x3
//! neighborhood: one if the cell is itself a visited station (it counts
//! itself), two otherwise — the drone must reach a station and come back.
//!
//! The solver is a best-first branch and bound over partial chains with the
//! unconstrained obstacle-aware distance to the goal as the admissible
//! bound. Extending a chain onto a cell adjacent to any earlier visited
//! cell would permanently break the degree rule, so such moves are pruned;
//! the battery rule is only decidable once the goal is reached, because the
//! visited-station set still grows along the way. Cells that cannot ever
//! satisfy it (non-station cells with fewer than two stations nearby) are
//! masked out statically. Ties between equal-length optima go to the
//! lexicographically smallest cell sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeSet;

use crate::distance::DistanceMatrix;
use crate::grid::{CellCoord, GridInstance, DEFAULT_D_MAX};
use crate::{ModelError, Outcome};

/// Inputs of one routing solve. The battery neighborhood realizes the
/// two-hop charge range, so `d_max` is pinned to `2*sqrt(2)`.
#[derive(Debug, Clone)]
pub struct PathProblem<'a> {
    pub grid: &'a GridInstance,
    pub dist: &'a DistanceMatrix,
    pub d_max: f64,
}

impl<'a> PathProblem<'a> {
    pub fn new(grid: &'a GridInstance, dist: &'a DistanceMatrix) -> Result<Self, ModelError> {
        for &e in &grid.endpoints {
            if !grid.is_traversable(e) {
                return Err(ModelError::EndpointNotTraversable { cell: e });
            }
        }
        if dist.rows() != grid.rows || dist.cols() != grid.cols {
            return Err(ModelError::DistanceDimsMismatch);
        }
        Ok(PathProblem { grid, dist, d_max: DEFAULT_D_MAX })
    }
}

/// An optimal feasible route.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSolution {
    /// The walked cells in order, endpoints first and last.
    pub cells: Vec<CellCoord>,
    pub visited: BTreeSet<CellCoord>,
    pub visited_stations: BTreeSet<CellCoord>,
    pub length: f64,
}

/// The bilinear route cost: half the sum of `d(a, b)` over all ordered
/// pairs of visited cells that are Moore-adjacent, not only consecutive
/// ones. Visited sets that touch themselves pay for every contact.
pub fn path_cost(visited: &BTreeSet<CellCoord>, dist: &DistanceMatrix) -> f64 {
    let mut total = 0.0;
    for &a in visited {
        for &b in visited {
            if a.is_moore_adjacent(b) {
                total += dist.get(a, b);
            }
        }
    }
    0.5 * total
}

/// Evaluate the battery rule for one cell against a visited set:
/// unvisited cells pass trivially, a visited station needs one visited
/// station in its closed neighborhood (itself suffices), any other
/// visited cell needs two.
pub fn battery_feasible(
    g: &GridInstance,
    visited: &BTreeSet<CellCoord>,
    stations: &BTreeSet<CellCoord>,
    cell: CellCoord,
) -> bool {
    if !visited.contains(&cell) {
        return true;
    }
    let is_visited_station = stations.contains(&cell);
    let required = if is_visited_station { 1 } else { 2 };
    let mut nearby = 0;
    for n in g.closed_neighborhood(cell) {
        if stations.contains(&n) && visited.contains(&n) {
            nearby += 1;
            if nearby >= required {
                return true;
            }
        }
    }
    false
}

#[derive(PartialEq)]
struct Node {
    priority: f64,
    cost: f64,
    path: Vec<u16>,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: smaller priority wins, then the lexicographically
        // smaller path, for reproducible witnesses.
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.path.cmp(&self.path))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solve the routing problem exactly, or report that no feasible route
/// exists.
pub fn solve_shortest_path(p: &PathProblem) -> Result<Outcome<PathSolution>, ModelError> {
    let g = p.grid;
    let [start, goal] = g.endpoints;
    for e in [start, goal] {
        if !g.is_traversable(e) {
            return Err(ModelError::EndpointNotTraversable { cell: e });
        }
    }

    if start == goal {
        // Degenerate single-cell route; the chain and battery rules are
        // waived because no movement happens.
        let visited = BTreeSet::from([start]);
        let visited_stations: BTreeSet<_> =
            visited.intersection(&g.stations).copied().collect();
        return Ok(Outcome::Feasible(PathSolution {
            cells: vec![start],
            visited,
            visited_stations,
            length: 0.0,
        }));
    }

    let n = g.num_cells();
    // Static mask: a non-station cell with fewer than two stations in its
    // closed neighborhood can never satisfy the battery rule.
    let allowed: Vec<bool> = (0..n)
        .map(|i| {
            let c = g.cell_at(i);
            if !g.is_traversable(c) {
                return false;
            }
            if g.stations.contains(&c) {
                return true;
            }
            let nearby = g
                .closed_neighborhood(c)
                .iter()
                .filter(|s| g.stations.contains(s))
                .count();
            nearby >= 2
        })
        .collect();

    let start_i = g.cell_index(start) as u16;
    let goal_i = g.cell_index(goal);
    if !allowed[start_i as usize] || !allowed[goal_i] {
        return Ok(Outcome::Infeasible);
    }

    // Precomputed neighbor lists and membership masks.
    let neighbors: Vec<Vec<u16>> = (0..n)
        .map(|i| {
            g.neighbors_unchecked(g.cell_at(i))
                .into_iter()
                .map(|c| g.cell_index(c) as u16)
                .collect()
        })
        .collect();

    let words = n.div_ceil(64);
    let bit = |m: &[u64], i: usize| m[i >> 6] & (1 << (i & 63)) != 0;

    let mut heap = BinaryHeap::new();
    let h0 = p.dist.get(start, goal);
    if !h0.is_finite() {
        return Ok(Outcome::Infeasible);
    }
    heap.push(Node { priority: h0, cost: 0.0, path: vec![start_i] });

    while let Some(Node { cost, path, .. }) = heap.pop() {
        let last = *path.last().unwrap() as usize;
        if last == goal_i {
            let visited: BTreeSet<CellCoord> =
                path.iter().map(|&i| g.cell_at(i as usize)).collect();
            if visited.iter().all(|&c| battery_feasible(g, &visited, &g.stations, c)) {
                let visited_stations: BTreeSet<_> =
                    visited.intersection(&g.stations).copied().collect();
                let length = path_cost(&visited, p.dist);
                let cells = path.iter().map(|&i| g.cell_at(i as usize)).collect();
                return Ok(Outcome::Feasible(PathSolution {
                    cells,
                    visited,
                    visited_stations,
                    length,
                }));
            }
            continue;
        }

        let mut member = vec![0u64; words];
        for &i in &path {
            member[(i as usize) >> 6] |= 1 << (i & 63);
        }
        let last_cell = g.cell_at(last);
        'next: for &nb in &neighbors[last] {
            let nbu = nb as usize;
            if !allowed[nbu] || bit(&member, nbu) {
                continue;
            }
            // Touching any earlier visited cell would give that cell a
            // third visited neighbor (or an endpoint a second), which no
            // extension can repair.
            let nb_cell = g.cell_at(nbu);
            for &other in &neighbors[nbu] {
                if other as usize != last && bit(&member, other as usize) {
                    continue 'next;
                }
            }
            let h = p.dist.get(nb_cell, goal);
            if !h.is_finite() {
                continue;
            }
            let step = p.dist.get(last_cell, nb_cell);
            let mut path2 = path.clone();
            path2.push(nb);
            heap.push(Node { priority: cost + step + h, cost: cost + step, path: path2 });
        }
    }
    Ok(Outcome::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{build_distance_matrix, DIST_EPS};
    use std::f64::consts::SQRT_2;

    fn instance(
        rows: usize,
        cols: usize,
        obstacles: &[(usize, usize)],
        stations: &[(usize, usize)],
        endpoints: [(usize, usize); 2],
    ) -> GridInstance {
        let mut g = GridInstance::empty(rows, cols);
        for &(r, c) in obstacles {
            g.obstacles.insert(CellCoord::new(r, c));
        }
        for &(r, c) in stations {
            g.stations.insert(CellCoord::new(r, c));
        }
        g.endpoints = [
            CellCoord::new(endpoints[0].0, endpoints[0].1),
            CellCoord::new(endpoints[1].0, endpoints[1].1),
        ];
        g
    }

    fn solve(g: &GridInstance) -> Outcome<PathSolution> {
        let dist = build_distance_matrix(g);
        let p = PathProblem::new(g, &dist).unwrap();
        solve_shortest_path(&p).unwrap()
    }

    #[test]
    fn identical_endpoints_yield_trivial_path() {
        let g = instance(3, 3, &[], &[(0, 1)], [(1, 1), (1, 1)]);
        let sol = solve(&g).expect_feasible("trivial");
        assert_eq!(sol.cells, vec![CellCoord::new(1, 1)]);
        assert_eq!(sol.length, 0.0);
    }

    #[test]
    fn no_stations_means_infeasible() {
        let g = instance(3, 3, &[], &[], [(0, 0), (2, 2)]);
        assert!(solve(&g).is_infeasible());
    }

    #[test]
    fn all_station_line_walks_straight() {
        let g = instance(
            1,
            4,
            &[],
            &[(0, 0), (0, 1), (0, 2), (0, 3)],
            [(0, 0), (0, 3)],
        );
        let sol = solve(&g).expect_feasible("line");
        assert_eq!(sol.cells.len(), 4);
        assert!((sol.length - 3.0).abs() < DIST_EPS);
        assert_eq!(sol.visited_stations.len(), 4);
    }

    #[test]
    fn endpoint_on_obstacle_is_an_error() {
        let mut g = instance(3, 3, &[], &[(0, 0)], [(0, 0), (2, 2)]);
        g.obstacles.insert(CellCoord::new(2, 2));
        let dist = build_distance_matrix(&g);
        assert!(matches!(
            PathProblem::new(&g, &dist),
            Err(ModelError::EndpointNotTraversable { .. })
        ));
    }

    #[test]
    fn cost_counts_every_adjacent_pair() {
        let g = GridInstance::empty(3, 3);
        let dist = build_distance_matrix(&g);
        let two: BTreeSet<_> = [CellCoord::new(0, 0), CellCoord::new(0, 1)].into();
        assert!((path_cost(&two, &dist) - 1.0).abs() < DIST_EPS);

        let ell: BTreeSet<_> =
            [CellCoord::new(0, 0), CellCoord::new(0, 1), CellCoord::new(1, 1)].into();
        assert!((path_cost(&ell, &dist) - (2.0 + SQRT_2)).abs() < DIST_EPS);

        assert_eq!(path_cost(&BTreeSet::new(), &dist), 0.0);
    }

    #[test]
    fn battery_truth_table() {
        let mut g = GridInstance::empty(3, 3);
        g.stations.insert(CellCoord::new(1, 1));
        let lone_station: BTreeSet<_> = [CellCoord::new(1, 1)].into();
        // A visited station counts itself.
        assert!(battery_feasible(&g, &lone_station, &g.stations, CellCoord::new(1, 1)));

        // A visited non-station next to a single visited station fails:
        // it needs two.
        let pair: BTreeSet<_> = [CellCoord::new(1, 1), CellCoord::new(1, 2)].into();
        assert!(!battery_feasible(&g, &pair, &g.stations, CellCoord::new(1, 2)));

        // Unvisited cells pass trivially.
        assert!(battery_feasible(&g, &lone_station, &g.stations, CellCoord::new(0, 0)));
    }

    #[test]
    fn length_equals_bilinear_cost_of_visited_set() {
        let g = instance(
            2,
            4,
            &[],
            &[(0, 0), (1, 1), (0, 2), (1, 3)],
            [(0, 0), (1, 3)],
        );
        let dist = build_distance_matrix(&g);
        let p = PathProblem::new(&g, &dist).unwrap();
        if let Outcome::Feasible(sol) = solve_shortest_path(&p).unwrap() {
            assert_eq!(sol.length, path_cost(&sol.visited, &dist));
        }
    }

    #[test]
    fn optimum_at_least_unconstrained_distance() {
        let g = instance(
            3,
            3,
            &[],
            &[(0, 0), (1, 1), (2, 2), (0, 2), (2, 0)],
            [(0, 0), (2, 2)],
        );
        let dist = build_distance_matrix(&g);
        let p = PathProblem::new(&g, &dist).unwrap();
        if let Outcome::Feasible(sol) = solve_shortest_path(&p).unwrap() {
            let lb = dist.get(g.endpoints[0], g.endpoints[1]);
            assert!(sol.length >= lb - DIST_EPS);
        }
    }
}
