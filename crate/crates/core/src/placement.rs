//! Exact minimum charging-station placement with tour connectivity.
//!
//! A placement is feasible when every traversable cell has a station within
//! the single-charge range `d_max` (by obstacle-aware distance) and the
//! stations form one directed cycle whose hops all fit in `d_max`, anchored
//! at a depot station. The cycle requirement mirrors the degree-plus-rank
//! formulation: one outgoing and one incoming edge per station, with depot
//! rank 1 and ranks strictly increasing along every non-depot edge.
//!
//! The solver runs iterative deepening on the station count. For each
//! count it searches station subsets containing the depot in lexicographic
//! order, pruning on coverage reachability, a per-station cover bound, and
//! cycle feasibility, so the first subset found is both optimal and the
//! lexicographically smallest optimum. Hamiltonicity of a candidate subset
//! is decided by bitmask dynamic programming.
//!
//! Degenerate sizes keep the model's intent without ill-defined degree
//! constraints: a single station has no tour edges, and a pair forms the
//! 2-cycle when the two stations are within range.

use std::collections::{BTreeMap, BTreeSet};

use crate::distance::DistanceMatrix;
use crate::grid::{CellCoord, GridInstance};
use crate::{ModelError, Outcome};

/// Default cap on the station count and on the rank range.
pub const DEFAULT_MAX_STATIONS: usize = 20;

/// Big-M constant of the rank (subtour elimination) rows.
pub const RANK_BIG_M: f64 = 100.0;

/// Inputs of one placement solve.
#[derive(Debug, Clone)]
pub struct PlacementProblem<'a> {
    pub grid: &'a GridInstance,
    pub dist: &'a DistanceMatrix,
    pub d_max: f64,
    pub depot: CellCoord,
    pub max_stations: usize,
    /// RNG seed used to pick the depot, recorded for reproducibility;
    /// 0 when the depot was fixed by the caller.
    pub depot_seed: u64,
}

impl<'a> PlacementProblem<'a> {
    pub fn new(
        grid: &'a GridInstance,
        dist: &'a DistanceMatrix,
        depot: CellCoord,
    ) -> Result<Self, ModelError> {
        if !grid.is_traversable(depot) {
            return Err(ModelError::DepotNotTraversable { cell: depot });
        }
        Ok(PlacementProblem {
            grid,
            dist,
            d_max: grid.d_max,
            depot,
            max_stations: DEFAULT_MAX_STATIONS,
            depot_seed: 0,
        })
    }
}

/// An optimal station placement with its connecting tour.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution {
    pub stations: BTreeSet<CellCoord>,
    /// Cycle order starting at the depot; a single entry for one station.
    pub tour: Vec<CellCoord>,
    pub tour_edges: BTreeSet<(CellCoord, CellCoord)>,
    pub ranks: BTreeMap<CellCoord, u32>,
    pub station_count: usize,
    pub seed: u64,
}

// Fixed-width bitset over cell indices; the exact search is desk-scale
// and capped at 256 cells.
const MASK_WORDS: usize = 4;
pub(crate) const MAX_SOLVER_CELLS: usize = MASK_WORDS * 64;
type Mask = [u64; MASK_WORDS];

const EMPTY_MASK: Mask = [0; MASK_WORDS];

fn mask_set(m: &mut Mask, i: usize) {
    m[i >> 6] |= 1 << (i & 63);
}

fn mask_test(m: &Mask, i: usize) -> bool {
    m[i >> 6] & (1 << (i & 63)) != 0
}

fn mask_or(a: &Mask, b: &Mask) -> Mask {
    let mut out = *a;
    for (o, w) in out.iter_mut().zip(b) {
        *o |= w;
    }
    out
}

fn mask_count(m: &Mask) -> u32 {
    m.iter().map(|w| w.count_ones()).sum()
}

fn mask_and_count(a: &Mask, b: &Mask) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

fn mask_eq(a: &Mask, b: &Mask) -> bool {
    a == b
}

/// Decide whether `stations` admits a single cycle whose every hop is
/// within `d_max`, returning a witness cycle order when one exists.
///
/// Singletons are trivially connected (no tour edges are required), and a
/// pair forms the 2-cycle when the two stations are mutually in range.
pub fn hamiltonian_cycle_exists(
    stations: &BTreeSet<CellCoord>,
    dist: &DistanceMatrix,
    d_max: f64,
) -> Option<Vec<CellCoord>> {
    let members: Vec<CellCoord> = stations.iter().copied().collect();
    let k = members.len();
    assert!(k <= 24, "cycle search supports at most 24 stations, got {k}");
    match k {
        0 => return None,
        1 => return Some(members),
        2 => {
            return dist
                .within(members[0], members[1], d_max)
                .then_some(members);
        }
        _ => {}
    }

    let adj: Vec<u32> = (0..k)
        .map(|i| {
            let mut bits = 0u32;
            for j in 0..k {
                if i != j && dist.within(members[i], members[j], d_max) {
                    bits |= 1 << j;
                }
            }
            bits
        })
        .collect();

    // dp[mask] = endpoints v reachable by a path over exactly `mask`,
    // starting from node 0.
    let full = (1u32 << k) - 1;
    let mut dp = vec![0u32; 1 << k];
    dp[1] = 1;
    for mask in 1..=full {
        if mask & 1 == 0 || dp[mask as usize] == 0 {
            continue;
        }
        let mut ends = dp[mask as usize];
        while ends != 0 {
            let v = ends.trailing_zeros() as usize;
            ends &= ends - 1;
            let mut nexts = adj[v] & !mask;
            while nexts != 0 {
                let w = nexts.trailing_zeros() as usize;
                nexts &= nexts - 1;
                dp[(mask | (1 << w)) as usize] |= 1 << w;
            }
        }
    }

    let closers = dp[full as usize] & adj[0];
    if closers == 0 {
        return None;
    }
    // Reconstruct deterministically: smallest closing endpoint, then the
    // smallest predecessor at each step.
    let mut order = vec![closers.trailing_zeros() as usize];
    let mut mask = full;
    while order.len() < k {
        let v = *order.last().unwrap();
        mask &= !(1 << v);
        let preds = dp[mask as usize] & adj[v];
        debug_assert!(preds != 0, "endpoint recorded in dp must have a predecessor");
        order.push(preds.trailing_zeros() as usize);
    }
    order.reverse();
    debug_assert_eq!(order[0], 0);
    Some(order.into_iter().map(|i| members[i]).collect())
}

/// Rank the stations of a witness cycle: the depot gets rank 1 and ranks
/// increase by one following the cycle direction from the depot.
pub fn assign_ranks(
    cycle: &[CellCoord],
    depot: CellCoord,
) -> Result<BTreeMap<CellCoord, u32>, ModelError> {
    let start = cycle
        .iter()
        .position(|&c| c == depot)
        .ok_or(ModelError::DepotNotInCycle { cell: depot })?;
    let k = cycle.len();
    let mut ranks = BTreeMap::new();
    for offset in 0..k {
        ranks.insert(cycle[(start + offset) % k], offset as u32 + 1);
    }
    Ok(ranks)
}

struct Search<'a> {
    problem: &'a PlacementProblem<'a>,
    /// Candidate station cells (depot's range component), ascending.
    candidates: Vec<CellCoord>,
    depot_pos: usize,
    /// Free cells covered by each candidate, as free-index masks.
    cover: Vec<Mask>,
    all_free: Mask,
    depot_cover: Mask,
    /// cover union over candidates[i..].
    suffix_union: Vec<Mask>,
    /// max cover size over candidates[i..].
    suffix_max: Vec<u32>,
    /// Range adjacency between candidates, as candidate-index masks.
    reach: Vec<Mask>,
}

impl<'a> Search<'a> {
    /// DFS for a feasible set of exactly `k` stations (depot included),
    /// visiting subsets in lexicographic order.
    fn find(&self, k: usize) -> Option<Vec<usize>> {
        let mut chosen = Vec::with_capacity(k - 1);
        self.dfs(k, 0, self.depot_cover, &mut chosen)
    }

    fn dfs(&self, k: usize, from: usize, covered: Mask, chosen: &mut Vec<usize>) -> Option<Vec<usize>> {
        if chosen.len() == k - 1 {
            if !mask_eq(&covered, &self.all_free) {
                return None;
            }
            return self.cycle_ok(chosen).then(|| chosen.clone());
        }
        let need = k - 1 - chosen.len();
        let last = self.candidates.len().saturating_sub(need);
        for i in from..=last {
            if i == self.depot_pos {
                continue;
            }
            if !mask_eq(&mask_or(&covered, &self.suffix_union[i]), &self.all_free) {
                // Coverage can only shrink for later starts.
                return None;
            }
            let next_covered = mask_or(&covered, &self.cover[i]);
            let uncovered = mask_count(&self.all_free) - mask_count(&next_covered);
            let slots = (need - 1) as u32;
            if uncovered > slots * self.suffix_max.get(i + 1).copied().unwrap_or(0) {
                continue;
            }
            chosen.push(i);
            if self.cycle_possible(k, i + 1, chosen) {
                if let Some(found) = self.dfs(k, i + 1, next_covered, chosen) {
                    return Some(found);
                }
            }
            chosen.pop();
        }
        None
    }

    /// Cheap necessary condition: within the pool of still-eligible
    /// stations, every chosen one keeps enough in-range partners and the
    /// chosen set stays in one range component.
    fn cycle_possible(&self, k: usize, suffix_from: usize, chosen: &[usize]) -> bool {
        if k < 3 {
            return k < 2
                || self.problem.dist.within(
                    self.candidates[self.depot_pos],
                    self.candidates[chosen[0]],
                    self.problem.d_max,
                );
        }
        let mut pool = EMPTY_MASK;
        mask_set(&mut pool, self.depot_pos);
        for &c in chosen {
            mask_set(&mut pool, c);
        }
        for i in suffix_from..self.candidates.len() {
            mask_set(&mut pool, i);
        }
        let mut members = vec![self.depot_pos];
        members.extend_from_slice(chosen);
        for &m in &members {
            if mask_and_count(&self.reach[m], &pool) < 2 {
                return false;
            }
        }
        // Connectivity of the chosen members through the pool.
        let mut visited = EMPTY_MASK;
        let mut queue = vec![self.depot_pos];
        mask_set(&mut visited, self.depot_pos);
        while let Some(v) = queue.pop() {
            for w in 0..self.candidates.len() {
                if mask_test(&pool, w) && !mask_test(&visited, w) && mask_test(&self.reach[v], w) {
                    mask_set(&mut visited, w);
                    queue.push(w);
                }
            }
        }
        members.iter().all(|&m| mask_test(&visited, m))
    }

    fn cycle_ok(&self, chosen: &[usize]) -> bool {
        self.witness(chosen).is_some()
    }

    fn witness(&self, chosen: &[usize]) -> Option<Vec<CellCoord>> {
        let mut stations: BTreeSet<CellCoord> = chosen.iter().map(|&i| self.candidates[i]).collect();
        stations.insert(self.candidates[self.depot_pos]);
        hamiltonian_cycle_exists(&stations, self.problem.dist, self.problem.d_max)
    }
}

/// Solve the placement problem exactly: fewest stations, ties broken by
/// the lexicographically smallest station set.
pub fn solve_placement(
    p: &PlacementProblem,
) -> Result<Outcome<PlacementSolution>, ModelError> {
    let g = p.grid;
    if !g.is_traversable(p.depot) {
        return Err(ModelError::DepotNotTraversable { cell: p.depot });
    }
    if p.max_stations == 0 {
        return Err(ModelError::MaxStationsZero);
    }
    if g.num_cells() > MAX_SOLVER_CELLS {
        return Err(ModelError::GridTooLarge { cells: g.num_cells(), limit: MAX_SOLVER_CELLS });
    }
    if p.dist.rows() != g.rows || p.dist.cols() != g.cols {
        return Err(ModelError::DistanceDimsMismatch);
    }

    let free = g.free_cells();
    let free_pos: BTreeMap<CellCoord, usize> =
        free.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut all_free = EMPTY_MASK;
    for i in 0..free.len() {
        mask_set(&mut all_free, i);
    }

    let cover_mask = |s: CellCoord| {
        let mut m = EMPTY_MASK;
        for (&cell, &i) in &free_pos {
            if p.dist.within(cell, s, p.d_max) {
                mask_set(&mut m, i);
            }
        }
        m
    };

    // One station: the depot must cover everything by itself.
    let depot_cover = cover_mask(p.depot);
    if mask_eq(&depot_cover, &all_free) {
        return Ok(Outcome::Feasible(build_solution(p, vec![p.depot])?));
    }

    // Two or more stations must all sit in the depot's range component.
    let mut component = BTreeSet::from([p.depot]);
    let mut frontier = vec![p.depot];
    while let Some(v) = frontier.pop() {
        for &c in &free {
            if !component.contains(&c) && p.dist.within(v, c, p.d_max) {
                component.insert(c);
                frontier.push(c);
            }
        }
    }
    let candidates: Vec<CellCoord> = component.into_iter().collect();
    let cover: Vec<Mask> = candidates.iter().map(|&s| cover_mask(s)).collect();

    // A free cell no candidate can cover makes every k >= 2 infeasible too.
    let mut reachable_union = EMPTY_MASK;
    for m in &cover {
        reachable_union = mask_or(&reachable_union, m);
    }
    if !mask_eq(&reachable_union, &all_free) {
        return Ok(Outcome::Infeasible);
    }

    let mut suffix_union = vec![EMPTY_MASK; candidates.len() + 1];
    let mut suffix_max = vec![0u32; candidates.len() + 1];
    for i in (0..candidates.len()).rev() {
        suffix_union[i] = mask_or(&suffix_union[i + 1], &cover[i]);
        suffix_max[i] = suffix_max[i + 1].max(mask_count(&cover[i]));
    }

    let reach: Vec<Mask> = candidates
        .iter()
        .map(|&a| {
            let mut m = EMPTY_MASK;
            for (j, &b) in candidates.iter().enumerate() {
                if a != b && p.dist.within(a, b, p.d_max) {
                    mask_set(&mut m, j);
                }
            }
            m
        })
        .collect();

    let depot_pos = candidates.binary_search(&p.depot).expect("depot is in its own component");

    // Admissible lower bound: free cells whose candidate cover sets are
    // pairwise disjoint each demand their own station.
    let mut options: Vec<Mask> = vec![EMPTY_MASK; free.len()];
    for (s, m) in cover.iter().enumerate() {
        for (f, opt) in options.iter_mut().enumerate() {
            if mask_test(m, f) {
                mask_set(opt, s);
            }
        }
    }
    let mut used = EMPTY_MASK;
    let mut lower = 0usize;
    for opt in &options {
        if mask_and_count(opt, &used) == 0 {
            used = mask_or(&used, opt);
            lower += 1;
        }
    }

    let search = Search {
        problem: p,
        candidates,
        depot_pos,
        cover,
        all_free,
        depot_cover,
        suffix_union,
        suffix_max,
        reach,
    };

    let upper = p.max_stations.min(search.candidates.len());
    for k in lower.max(2)..=upper {
        if let Some(chosen) = search.find(k) {
            let cycle = search.witness(&chosen).expect("feasible subset has a cycle witness");
            return Ok(Outcome::Feasible(build_solution(p, cycle)?));
        }
    }
    Ok(Outcome::Infeasible)
}

/// Canonicalize a witness cycle (depot first, smaller second station) and
/// assemble the full solution.
fn build_solution(p: &PlacementProblem, cycle: Vec<CellCoord>) -> Result<PlacementSolution, ModelError> {
    let k = cycle.len();
    let start = cycle
        .iter()
        .position(|&c| c == p.depot)
        .ok_or(ModelError::DepotNotInCycle { cell: p.depot })?;
    let mut tour: Vec<CellCoord> = (0..k).map(|i| cycle[(start + i) % k]).collect();
    if k >= 3 && tour[1] > tour[k - 1] {
        tour[1..].reverse();
    }

    let mut tour_edges = BTreeSet::new();
    if k >= 2 {
        for i in 0..k {
            tour_edges.insert((tour[i], tour[(i + 1) % k]));
        }
    }
    let ranks = assign_ranks(&tour, p.depot)?;
    Ok(PlacementSolution {
        stations: tour.iter().copied().collect(),
        tour,
        tour_edges,
        ranks,
        station_count: k,
        seed: p.depot_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{build_distance_matrix, DIST_EPS};
    use crate::grid::DEFAULT_D_MAX;

    fn grid(rows: usize, cols: usize, obstacles: &[(usize, usize)]) -> GridInstance {
        let mut g = GridInstance::empty(rows, cols);
        for &(r, c) in obstacles {
            g.obstacles.insert(CellCoord::new(r, c));
        }
        g
    }

    fn solve(g: &GridInstance, depot: (usize, usize)) -> Outcome<PlacementSolution> {
        let dist = build_distance_matrix(g);
        let p = PlacementProblem::new(g, &dist, CellCoord::new(depot.0, depot.1)).unwrap();
        solve_placement(&p).unwrap()
    }

    #[test]
    fn two_by_two_needs_one_station() {
        let g = grid(2, 2, &[]);
        let sol = solve(&g, (0, 0)).expect_feasible("2x2 is coverable");
        assert_eq!(sol.station_count, 1);
        assert_eq!(sol.tour, vec![CellCoord::new(0, 0)]);
        assert!(sol.tour_edges.is_empty());
        assert_eq!(sol.ranks[&CellCoord::new(0, 0)], 1);
    }

    #[test]
    fn line_grid_needs_two_stations() {
        let g = grid(1, 7, &[]);
        let sol = solve(&g, (0, 2)).expect_feasible("1x7 line is coverable");
        assert_eq!(sol.station_count, 2);
        // Lexicographically smallest optimal set; the pair is connected by
        // the 2-cycle.
        let want: BTreeSet<_> = [CellCoord::new(0, 2), CellCoord::new(0, 4)].into();
        assert_eq!(sol.stations, want);
        assert_eq!(sol.tour_edges.len(), 2);
    }

    #[test]
    fn disconnected_free_cells_are_infeasible() {
        // A full obstacle column splits the free cells in two.
        let g = grid(1, 7, &[(0, 3)]);
        assert!(solve(&g, (0, 1)).is_infeasible());
    }

    #[test]
    fn depot_on_obstacle_is_an_error() {
        let g = grid(3, 3, &[(1, 1)]);
        let dist = build_distance_matrix(&g);
        assert!(matches!(
            PlacementProblem::new(&g, &dist, CellCoord::new(1, 1)),
            Err(ModelError::DepotNotTraversable { .. })
        ));
    }

    #[test]
    fn zero_max_stations_is_an_error() {
        let g = grid(2, 2, &[]);
        let dist = build_distance_matrix(&g);
        let mut p = PlacementProblem::new(&g, &dist, CellCoord::new(0, 0)).unwrap();
        p.max_stations = 0;
        assert!(matches!(solve_placement(&p), Err(ModelError::MaxStationsZero)));
    }

    #[test]
    fn cycle_on_complete_triangle() {
        let g = grid(3, 3, &[]);
        let dist = build_distance_matrix(&g);
        let stations: BTreeSet<_> =
            [CellCoord::new(0, 0), CellCoord::new(0, 2), CellCoord::new(2, 0)].into();
        let cycle = hamiltonian_cycle_exists(&stations, &dist, DEFAULT_D_MAX).unwrap();
        assert_eq!(cycle.len(), 3);
    }

    #[test]
    fn collinear_path_graph_has_no_cycle() {
        let g = grid(1, 5, &[]);
        let dist = build_distance_matrix(&g);
        let stations: BTreeSet<_> =
            [CellCoord::new(0, 0), CellCoord::new(0, 2), CellCoord::new(0, 4)].into();
        assert!(hamiltonian_cycle_exists(&stations, &dist, DEFAULT_D_MAX).is_none());
    }

    #[test]
    fn singleton_cycle_is_trivial() {
        let g = grid(2, 2, &[]);
        let dist = build_distance_matrix(&g);
        let stations: BTreeSet<_> = [CellCoord::new(0, 0)].into();
        assert_eq!(
            hamiltonian_cycle_exists(&stations, &dist, DEFAULT_D_MAX),
            Some(vec![CellCoord::new(0, 0)])
        );
    }

    #[test]
    fn far_pair_has_no_cycle() {
        let g = grid(1, 7, &[]);
        let dist = build_distance_matrix(&g);
        let stations: BTreeSet<_> = [CellCoord::new(0, 0), CellCoord::new(0, 6)].into();
        assert!(hamiltonian_cycle_exists(&stations, &dist, DEFAULT_D_MAX).is_none());
    }

    #[test]
    fn ranks_follow_cycle_from_depot() {
        let depot = CellCoord::new(1, 1);
        let a = CellCoord::new(0, 0);
        let b = CellCoord::new(2, 2);
        let ranks = assign_ranks(&[depot, a, b], depot).unwrap();
        assert_eq!(ranks[&depot], 1);
        assert_eq!(ranks[&a], 2);
        assert_eq!(ranks[&b], 3);

        assert_eq!(assign_ranks(&[depot], depot).unwrap().len(), 1);
        assert!(assign_ranks(&[a, b], depot).is_err());
    }

    #[test]
    fn ranks_satisfy_big_m_rows_on_four_cycle() {
        let depot = CellCoord::new(0, 0);
        let a = CellCoord::new(0, 1);
        let b = CellCoord::new(1, 1);
        let c = CellCoord::new(1, 0);
        let cycle = [depot, a, b, c];
        let ranks = assign_ranks(&cycle, depot).unwrap();
        for w in cycle.windows(2) {
            let (from, to) = (w[0], w[1]);
            if from == depot || to == depot {
                continue;
            }
            let lhs = ranks[&to] as f64;
            let rhs = ranks[&from] as f64 - RANK_BIG_M * (1.0 - 1.0) + 1.0;
            assert!(lhs >= rhs - DIST_EPS);
        }
    }

    #[test]
    fn larger_d_max_never_needs_more_stations() {
        for bits in [0u64, 0b1001, 0b100010] {
            let mut g = grid(4, 4, &[]);
            for i in 0..16 {
                if bits & (1 << i) != 0 && i != 5 {
                    g.obstacles.insert(g.cell_at(i));
                }
            }
            let dist = build_distance_matrix(&g);
            let depot = CellCoord::new(1, 1);
            let mut p = PlacementProblem::new(&g, &dist, depot).unwrap();
            let base = solve_placement(&p).unwrap();
            p.d_max *= 1.5;
            let wider = solve_placement(&p).unwrap();
            match (base, wider) {
                (Outcome::Feasible(b), Outcome::Feasible(w)) => {
                    assert!(w.station_count <= b.station_count)
                }
                (Outcome::Infeasible, _) => {}
                (Outcome::Feasible(_), Outcome::Infeasible) => {
                    panic!("enlarging d_max lost feasibility")
                }
            }
        }
    }
}
