//! Brute-force reference oracles for the acceptance suite.
//!
//! These deliberately avoid the solvers' search machinery: placement
//! enumerates station subsets in ascending cardinality with a permutation
//! cycle check, routing enumerates chain-shaped cell sets by depth-first
//! search, and scheduling enumerates entire trajectories.

use std::collections::BTreeSet;

use dronegrid::distance::{build_distance_matrix, DIST_EPS};
use dronegrid::grid::{CellCoord, GridInstance};
use dronegrid::schedule::{step_flag, ScheduleProblem};

/// Minimal feasible station count by subset enumeration, or `None` when no
/// subset of size at most `max_k` works.
pub fn placement_bruteforce(g: &GridInstance, depot: CellCoord, max_k: usize) -> Option<usize> {
    let dist = build_distance_matrix(g);
    let d_max = g.d_max;
    let free = g.free_cells();
    let candidates: Vec<CellCoord> = free.iter().copied().filter(|&c| c != depot).collect();

    let covered_by = |stations: &[CellCoord]| {
        free.iter()
            .all(|&cell| stations.iter().any(|&s| dist.within(cell, s, d_max)))
    };
    let cycle_exists = |stations: &[CellCoord]| {
        let k = stations.len();
        match k {
            0 => false,
            1 => true,
            2 => dist.within(stations[0], stations[1], d_max),
            _ => {
                // Fix the first station and try every order of the rest.
                let mut rest: Vec<usize> = (1..k).collect();
                permutations(&mut rest, 0, &mut |perm| {
                    let mut prev = stations[0];
                    for &i in perm {
                        if !dist.within(prev, stations[i], d_max) {
                            return false;
                        }
                        prev = stations[i];
                    }
                    dist.within(prev, stations[0], d_max)
                })
            }
        }
    };

    for k in 1..=max_k {
        let mut chosen = vec![depot];
        if combinations(&candidates, k - 1, 0, &mut chosen, &mut |stations| {
            covered_by(stations) && cycle_exists(stations)
        }) {
            return Some(k);
        }
    }
    None
}

/// Visit all `size`-combinations of `pool[from..]` appended to `chosen`;
/// true as soon as `accept` passes.
fn combinations(
    pool: &[CellCoord],
    size: usize,
    from: usize,
    chosen: &mut Vec<CellCoord>,
    accept: &mut impl FnMut(&[CellCoord]) -> bool,
) -> bool {
    if size == 0 {
        return accept(chosen);
    }
    for i in from..=pool.len().saturating_sub(size) {
        chosen.push(pool[i]);
        if combinations(pool, size - 1, i + 1, chosen, accept) {
            chosen.pop();
            return true;
        }
        chosen.pop();
    }
    false
}

/// Visit all permutations of `items[from..]`; true as soon as one passes.
fn permutations(items: &mut Vec<usize>, from: usize, test: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if from == items.len() {
        return test(items);
    }
    for i in from..items.len() {
        items.swap(from, i);
        if permutations(items, from + 1, test) {
            items.swap(from, i);
            return true;
        }
        items.swap(from, i);
    }
    false
}

/// Minimal feasible route length by exhaustive enumeration of chain-shaped
/// visited sets, or `None` when no feasible route exists.
pub fn path_bruteforce(g: &GridInstance) -> Option<f64> {
    let [start, goal] = g.endpoints;
    if !g.is_traversable(start) || !g.is_traversable(goal) {
        return None;
    }
    if start == goal {
        return Some(0.0);
    }

    fn battery_ok(g: &GridInstance, visited: &BTreeSet<CellCoord>) -> bool {
        visited.iter().all(|&c| {
            if g.stations.contains(&c) {
                return true;
            }
            let nearby = g
                .closed_neighborhood(c)
                .iter()
                .filter(|n| g.stations.contains(n) && visited.contains(n))
                .count();
            nearby >= 2
        })
    }

    fn chain_cost(visited: &BTreeSet<CellCoord>) -> f64 {
        let mut total = 0.0;
        for &a in visited {
            for &b in visited {
                if a.is_moore_adjacent(b) {
                    total += a.hop_cost(b);
                }
            }
        }
        0.5 * total
    }

    fn dfs(g: &GridInstance, goal: CellCoord, path: &mut Vec<CellCoord>, best: &mut Option<f64>) {
        let last = *path.last().unwrap();
        if last == goal {
            let visited: BTreeSet<CellCoord> = path.iter().copied().collect();
            if battery_ok(g, &visited) {
                let cost = chain_cost(&visited);
                if best.map_or(true, |b| cost < b) {
                    *best = Some(cost);
                }
            }
            return;
        }
        for next in moore_neighbors_of(g, last) {
            if !g.is_traversable(next) || path.contains(&next) {
                continue;
            }
            // Chain shape: the new cell may touch only its predecessor,
            // otherwise some cell ends up with too many visited neighbors
            // for good.
            let touches_older = path[..path.len() - 1]
                .iter()
                .any(|&p| p.is_moore_adjacent(next));
            if touches_older {
                continue;
            }
            path.push(next);
            dfs(g, goal, path, best);
            path.pop();
        }
    }

    let mut best = None;
    let mut path = vec![start];
    dfs(g, goal, &mut path, &mut best);
    best
}

/// In-bounds Moore neighbors, independent of the library's helper order.
fn moore_neighbors_of(g: &GridInstance, c: CellCoord) -> Vec<CellCoord> {
    let mut out = Vec::with_capacity(8);
    for dr in -1i64..=1 {
        for dc in -1i64..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (r, col) = (c.row as i64 + dr, c.col as i64 + dc);
            if r >= 0 && col >= 0 && (r as usize) < g.rows && (col as usize) < g.cols {
                out.push(CellCoord::new(r as usize, col as usize));
            }
        }
    }
    out
}

/// Minimal feasible single-drone schedule objective by trajectory
/// enumeration, or `None` when the horizon admits no feasible plan.
pub fn schedule_bruteforce_single(p: &ScheduleProblem) -> Option<f64> {
    assert_eq!(p.n_drones, 1, "the trajectory oracle covers one drone");
    let g = p.grid;
    let home = g.warehouses[0];

    struct Ctx<'a> {
        p: &'a ScheduleProblem<'a>,
        best: Option<f64>,
    }

    fn explore(
        ctx: &mut Ctx,
        positions: &mut Vec<CellCoord>,
        flags: &mut Vec<u8>,
        last_pickup: usize,
        distance: f64,
    ) {
        let g = ctx.p.grid;
        let t = positions.len() - 1;
        if t == ctx.p.horizon {
            // Feasible completion: demands met exactly and the drone ends
            // parked on a warehouse.
            if !g.warehouses.contains(positions.last().unwrap()) {
                return;
            }
            let mut ok = true;
            for d in &g.deliveries {
                let count = (1..flags.len())
                    .filter(|&i| flags[i - 1] == 0 && flags[i] == 1 && positions[i] == d.cell)
                    .count() as u32;
                if count != d.demand {
                    ok = false;
                    break;
                }
            }
            if !ok {
                return;
            }
            let objective =
                ctx.p.weight_distance * distance + ctx.p.weight_time * last_pickup as f64;
            if ctx.best.map_or(true, |b| objective < b) {
                ctx.best = Some(objective);
            }
            return;
        }
        let here = *positions.last().unwrap();
        let mut moves = vec![here];
        moves.extend(moore_neighbors_of(g, here));
        for next in moves {
            let flag = *flags.last().unwrap();
            let new_flag = step_flag(flag, next, ctx.p, 0);
            let new_pickup = if flag == 1 && new_flag == 0 { t + 1 } else { last_pickup };
            positions.push(next);
            flags.push(new_flag);
            explore(ctx, positions, flags, new_pickup, distance + here.hop_cost(next));
            positions.pop();
            flags.pop();
        }
    }

    let mut ctx = Ctx { p, best: None };
    let mut positions = vec![home];
    let mut flags = vec![1u8];
    explore(&mut ctx, &mut positions, &mut flags, 0, 0.0);
    ctx.best
}

/// Tolerance alias so acceptance assertions read uniformly.
pub const EPS: f64 = DIST_EPS;

use dronegrid::generate::{generate_instance, GenParams, InstanceKind};
use dronegrid::grid::Delivery;

/// The seeded placement benchmark: 50 random 6x6 grids.
pub fn placement_suite() -> Vec<GridInstance> {
    (1..=50u64)
        .map(|seed| {
            generate_instance(&GenParams::new(InstanceKind::Placement, seed, 6, 6, 0.2))
                .expect("placement suite generation")
        })
        .collect()
}

/// The seeded routing benchmark: 50 random 5x5 instances with varying
/// station counts (a mix of feasible and infeasible ones).
pub fn path_suite() -> Vec<GridInstance> {
    (1..=50u64)
        .map(|seed| {
            let mut params = GenParams::new(InstanceKind::Path, seed, 5, 5, 0.15);
            params.stations = 6 + (seed % 5) as usize;
            generate_instance(&params).expect("path suite generation")
        })
        .collect()
}

/// The seeded scheduling benchmark: 20 single-drone 4x4 instances with
/// horizons of at most 6.
pub fn schedule_suite() -> Vec<(GridInstance, usize)> {
    (1..=20u64)
        .map(|seed| {
            let mut params = GenParams::new(InstanceKind::Schedule, seed, 4, 4, 0.0);
            params.warehouses = 1;
            params.deliveries = 1;
            params.max_demand = 2;
            let g = generate_instance(&params).expect("schedule suite generation");
            let horizon = 5 + (seed % 2) as usize;
            (g, horizon)
        })
        .collect()
}

/// Single warehouse next to a single delivery cell: the pinned-objective
/// scenario.
pub fn adjacent_delivery_instance() -> GridInstance {
    let mut g = GridInstance::empty(1, 2);
    g.warehouses = vec![CellCoord::new(0, 0)];
    g.deliveries = vec![Delivery { cell: CellCoord::new(0, 1), demand: 1 }];
    g
}

/// Two warehouses and three delivery sites with demands 2, 1, 1 on an
/// open 10x10 grid, sized for a 14-step horizon.
pub fn fig5_instance() -> GridInstance {
    let mut g = GridInstance::empty(10, 10);
    g.warehouses = vec![CellCoord::new(6, 2), CellCoord::new(2, 6)];
    g.deliveries = vec![
        Delivery { cell: CellCoord::new(8, 0), demand: 2 },
        Delivery { cell: CellCoord::new(4, 4), demand: 1 },
        Delivery { cell: CellCoord::new(0, 8), demand: 1 },
    ];
    g
}
