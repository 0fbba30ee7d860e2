//! Exact multi-drone delivery scheduling over a fixed time horizon.
//!
//! Each drone carries one package at a time and toggles a binary phase
//! flag: 1 while heading back empty, 0 while out delivering. The flag
//! starts at 1 and its transitions are forced by position: an empty-handed
//! drone (flag 1) arriving at a pickup-eligible warehouse loads a package
//! (flag drops to 0), and a loaded drone (flag 0) arriving at a delivery
//! cell drops it off (flag rises to 1). Because the transitions are
//! unavoidable, routes must steer around delivery cells with exhausted
//! demand while loaded and around warehouses unless a pickup is intended.
//!
//! A schedule is feasible when every delivery cell sees exactly its demand
//! in drop-offs, no two drones share a cell at the same timestep, and every
//! drone ends the horizon parked at a warehouse. The objective combines
//! total travel distance (lateral 1, diagonal sqrt(2), waiting free) with
//! the per-drone completion times, the time of each drone's last load.
//! This model has no battery limits, and obstacles play no role in it.
//!
//! The solver is best-first search over joint states (time, positions,
//! flags, remaining demand, per-drone last load time) with dominance
//! pruning and admissible remaining-cost bounds, exact at desk scale.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::grid::{CellCoord, GridInstance};
use crate::{ModelError, Outcome};

/// Objective weight on total travel distance.
pub const WEIGHT_DISTANCE: f64 = 0.7;
/// Objective weight on the summed completion times.
pub const WEIGHT_TIME: f64 = 0.3;

/// Where a returning drone may load its next package.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PickupPolicy {
    /// Any warehouse restocks any drone.
    #[default]
    AnyWarehouse,
    /// Drones only load at the warehouse they started from.
    OwnWarehouse,
}

/// Inputs of one scheduling solve. Drone `i` starts at `warehouses[i]`.
#[derive(Debug, Clone)]
pub struct ScheduleProblem<'a> {
    pub grid: &'a GridInstance,
    pub n_drones: usize,
    pub horizon: usize,
    pub weight_distance: f64,
    pub weight_time: f64,
    pub policy: PickupPolicy,
}

impl<'a> ScheduleProblem<'a> {
    pub fn new(
        grid: &'a GridInstance,
        n_drones: usize,
        horizon: usize,
        policy: PickupPolicy,
    ) -> Result<Self, ModelError> {
        if n_drones == 0 {
            return Err(ModelError::ZeroDrones);
        }
        if n_drones > grid.warehouses.len() {
            return Err(ModelError::TooManyDrones { drones: n_drones, warehouses: grid.warehouses.len() });
        }
        if horizon == 0 {
            return Err(ModelError::HorizonZero);
        }
        Ok(ScheduleProblem {
            grid,
            n_drones,
            horizon,
            weight_distance: WEIGHT_DISTANCE,
            weight_time: WEIGHT_TIME,
            policy,
        })
    }

    pub fn own_warehouse(&self, drone: usize) -> CellCoord {
        self.grid.warehouses[drone]
    }

    pub fn pickup_eligible(&self, drone: usize, cell: CellCoord) -> bool {
        match self.policy {
            PickupPolicy::AnyWarehouse => self.grid.warehouses.contains(&cell),
            PickupPolicy::OwnWarehouse => cell == self.own_warehouse(drone),
        }
    }

    pub fn is_delivery_cell(&self, cell: CellCoord) -> bool {
        self.grid.deliveries.iter().any(|d| d.cell == cell)
    }
}

/// Forced flag transition for one step: the flag after arriving at
/// `next_cell` with the given flag.
pub fn step_flag(flag: u8, next_cell: CellCoord, p: &ScheduleProblem, drone: usize) -> u8 {
    if flag == 0 {
        u8::from(p.is_delivery_cell(next_cell))
    } else {
        u8::from(!p.pickup_eligible(drone, next_cell))
    }
}

/// One drone's full trajectory: positions and flags for t = 0..=H.
#[derive(Debug, Clone, PartialEq)]
pub struct DroneTrace {
    pub positions: Vec<CellCoord>,
    pub flags: Vec<u8>,
    pub completion_time: usize,
}

/// Latest t with a 1-to-0 flag drop, or 0 when the flag never drops.
pub fn completion_time(trace: &DroneTrace) -> usize {
    completion_from_flags(&trace.flags)
}

pub(crate) fn completion_from_flags(flags: &[u8]) -> usize {
    (1..flags.len())
        .rev()
        .find(|&t| flags[t - 1] == 1 && flags[t] == 0)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Pickup,
    Delivery,
}

/// A load or drop-off, with the supply-accounting verdict for loads: a
/// pickup is effective when the same drone delivers afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: usize,
    pub kind: EventKind,
    pub cell: CellCoord,
    pub effective: bool,
}

/// Read the pickup/delivery events off a trace, validating that the flag
/// sequence replays exactly through [`step_flag`].
pub fn extract_events(
    trace: &DroneTrace,
    p: &ScheduleProblem,
    drone: usize,
) -> Result<Vec<Event>, ModelError> {
    if trace.flags.len() != trace.positions.len() || trace.flags.first() != Some(&1) {
        return Err(ModelError::InconsistentTrace { drone, t: 0 });
    }
    let mut events = Vec::new();
    for t in 1..trace.flags.len() {
        let expected = step_flag(trace.flags[t - 1], trace.positions[t], p, drone);
        if trace.flags[t] != expected {
            return Err(ModelError::InconsistentTrace { drone, t });
        }
        match (trace.flags[t - 1], trace.flags[t]) {
            (1, 0) => events.push(Event {
                t,
                kind: EventKind::Pickup,
                cell: trace.positions[t],
                effective: false,
            }),
            (0, 1) => events.push(Event {
                t,
                kind: EventKind::Delivery,
                cell: trace.positions[t],
                effective: true,
            }),
            _ => {}
        }
    }
    let mut last_delivery = None;
    for (i, e) in events.iter().enumerate() {
        if e.kind == EventKind::Delivery {
            last_delivery = Some(i);
        }
    }
    if let Some(limit) = last_delivery {
        for e in &mut events[..limit] {
            if e.kind == EventKind::Pickup {
                e.effective = true;
            }
        }
    }
    Ok(events)
}

/// A complete multi-drone plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSolution {
    pub traces: Vec<DroneTrace>,
    pub objective: f64,
    pub total_distance: f64,
    pub deliveries_made: BTreeMap<CellCoord, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct StateKey {
    t: u16,
    positions: Vec<u16>,
    flags: u32,
    remaining: Vec<u8>,
    last_pickup: Vec<u16>,
}

#[derive(PartialEq)]
struct QueueNode {
    f: f64,
    g: f64,
    key: StateKey,
}

impl Eq for QueueNode {}

impl Ord for QueueNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f; among equal f prefer later timesteps (closer to
        // done), then the smallest key for reproducible witnesses.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.key.t.cmp(&other.key.t))
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for QueueNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Searcher<'a> {
    p: &'a ScheduleProblem<'a>,
    delivery_cells: Vec<CellCoord>,
    warehouse_cells: Vec<CellCoord>,
    /// Cheapest warehouse-to-cell travel per delivery cell.
    warehouse_leg: Vec<f64>,
}

impl<'a> Searcher<'a> {
    fn cell(&self, i: u16) -> CellCoord {
        self.p.grid.cell_at(i as usize)
    }

    fn flag(key_flags: u32, n: usize) -> u8 {
        ((key_flags >> n) & 1) as u8
    }

    /// Admissible lower bound on the remaining objective.
    ///
    /// Distance: every undelivered unit induces two disjoint route
    /// segments, an approach into its cell (from a warehouse, or directly
    /// from a loaded drone) and a departure back to some warehouse for the
    /// next load or the final park. Their sum competes with the plain
    /// everyone-heads-home bound and the larger one is used. Time: for
    /// each returning drone, the final load cannot happen before it
    /// reaches a load-eligible warehouse, which lifts its completion time
    /// to at least that arrival; independently, units beyond the currently
    /// loaded ones each force one more load event.
    fn remaining_bound(&self, key: &StateKey) -> f64 {
        let mut unit_legs = 0.0;
        let mut carriers = 0usize;
        for n in 0..self.p.n_drones {
            if Self::flag(key.flags, n) == 0 {
                carriers += 1;
            }
        }
        let total_rem: u32 = key.remaining.iter().map(|&r| r as u32).sum();
        for (ci, &rem) in key.remaining.iter().enumerate() {
            if rem == 0 {
                continue;
            }
            let target = self.delivery_cells[ci];
            let mut approach = self.warehouse_leg[ci];
            for n in 0..self.p.n_drones {
                if Self::flag(key.flags, n) == 0 {
                    approach = approach.min(self.cell(key.positions[n]).octile(target));
                }
            }
            // Departure leg: cheapest way from the delivery cell back to
            // any warehouse.
            let departure = self.warehouse_leg[ci];
            unit_legs += rem as f64 * (approach + departure);
        }
        let mut go_home = 0.0;
        for n in 0..self.p.n_drones {
            let pos = self.cell(key.positions[n]);
            let nearest = self
                .warehouse_cells
                .iter()
                .map(|w| pos.octile(*w))
                .fold(f64::INFINITY, f64::min);
            go_home += nearest;
        }

        let event_count = (total_rem as usize).saturating_sub(carriers) as f64;
        let mut terminal_lift = 0.0;
        for n in 0..self.p.n_drones {
            if Self::flag(key.flags, n) == 1 {
                let pos = self.cell(key.positions[n]);
                let to_eligible = self
                    .warehouse_cells
                    .iter()
                    .filter(|w| self.p.pickup_eligible(n, **w))
                    .map(|w| pos.chebyshev(*w))
                    .min();
                let must_load = match self.p.policy {
                    // Flag 1 is never parkable at a warehouse here, so one
                    // more load is unavoidable.
                    PickupPolicy::AnyWarehouse => true,
                    // A drone may park flag-1 at a foreign warehouse.
                    PickupPolicy::OwnWarehouse => false,
                };
                if must_load {
                    if let Some(steps) = to_eligible {
                        let arrival = key.t as usize + steps.max(1);
                        terminal_lift +=
                            (arrival as f64 - key.last_pickup[n] as f64).max(0.0);
                    }
                }
            }
        }
        self.p.weight_distance * unit_legs.max(go_home)
            + self.p.weight_time * event_count.max(terminal_lift)
    }

    /// A state is complete when nothing is left to deliver, every drone
    /// sits at a warehouse, and waiting in place causes no further flag
    /// transitions (so padding to the horizon is free).
    fn is_goal(&self, key: &StateKey) -> bool {
        if key.remaining.iter().any(|&r| r > 0) {
            return false;
        }
        for n in 0..self.p.n_drones {
            let pos = self.cell(key.positions[n]);
            if !self.p.grid.warehouses.contains(&pos) {
                return false;
            }
            let flag = Self::flag(key.flags, n);
            if step_flag(flag, pos, self.p, n) != flag {
                return false;
            }
        }
        true
    }

    /// Necessary timing conditions: each outstanding delivery must still be
    /// reachable by some drone, and every drone must still make a warehouse.
    fn can_finish(&self, key: &StateKey) -> bool {
        let left = self.p.horizon - key.t as usize;
        for n in 0..self.p.n_drones {
            let pos = self.cell(key.positions[n]);
            let home = self
                .warehouse_cells
                .iter()
                .map(|w| pos.chebyshev(*w))
                .min()
                .unwrap_or(usize::MAX);
            if home > left {
                return false;
            }
        }
        for (ci, &rem) in key.remaining.iter().enumerate() {
            if rem == 0 {
                continue;
            }
            let target = self.delivery_cells[ci];
            let mut best = usize::MAX;
            for n in 0..self.p.n_drones {
                let pos = self.cell(key.positions[n]);
                let steps = if Self::flag(key.flags, n) == 0 {
                    pos.chebyshev(target)
                } else {
                    self.p
                        .grid
                        .warehouses
                        .iter()
                        .filter(|w| self.p.pickup_eligible(n, **w))
                        .map(|w| pos.chebyshev(*w) + w.chebyshev(target))
                        .min()
                        .unwrap_or(usize::MAX)
                };
                best = best.min(steps);
            }
            if best > left {
                return false;
            }
        }
        true
    }
}

/// Solve the scheduling problem exactly within the horizon.
pub fn solve_schedule(p: &ScheduleProblem) -> Result<Outcome<ScheduleSolution>, ModelError> {
    if p.n_drones == 0 {
        return Err(ModelError::ZeroDrones);
    }
    if p.n_drones > p.grid.warehouses.len() {
        return Err(ModelError::TooManyDrones { drones: p.n_drones, warehouses: p.grid.warehouses.len() });
    }
    if p.horizon == 0 {
        return Err(ModelError::HorizonZero);
    }
    assert!(p.n_drones <= 32, "flag bitmask supports at most 32 drones");

    let g = p.grid;
    let starts: Vec<u16> = (0..p.n_drones)
        .map(|n| g.cell_index(g.warehouses[n]) as u16)
        .collect();
    {
        let mut sorted = starts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != starts.len() {
            // Two drones on one start cell collide at t = 0.
            return Ok(Outcome::Infeasible);
        }
    }

    let delivery_cells: Vec<CellCoord> = g.deliveries.iter().map(|d| d.cell).collect();
    let demands: Vec<u8> = g
        .deliveries
        .iter()
        .map(|d| u8::try_from(d.demand).unwrap_or(u8::MAX))
        .collect();
    let warehouse_cells = g.warehouses.clone();
    let warehouse_leg: Vec<f64> = delivery_cells
        .iter()
        .map(|c| {
            warehouse_cells
                .iter()
                .map(|w| w.octile(*c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let searcher = Searcher { p, delivery_cells, warehouse_cells, warehouse_leg };

    let start_key = StateKey {
        t: 0,
        positions: starts,
        flags: (1u32 << p.n_drones) - 1,
        remaining: demands,
        last_pickup: vec![0; p.n_drones],
    };

    // Best g per state plus the predecessor that achieved it.
    let mut seen: HashMap<StateKey, (f64, Option<StateKey>)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let g0 = 0.0;
    seen.insert(start_key.clone(), (g0, None));
    heap.push(QueueNode { f: searcher.remaining_bound(&start_key), g: g0, key: start_key });

    while let Some(QueueNode { g: gval, key, .. }) = heap.pop() {
        match seen.get(&key) {
            Some(&(b, _)) if gval > b => continue,
            None => continue,
            _ => {}
        }
        if searcher.is_goal(&key) {
            return Ok(Outcome::Feasible(reconstruct(p, &searcher, &seen, key)));
        }
        if key.t as usize == p.horizon {
            continue;
        }

        // Per-drone candidate moves with their forced effects.
        let mut options: Vec<Vec<(u16, u8, Option<usize>, bool)>> = Vec::with_capacity(p.n_drones);
        for n in 0..p.n_drones {
            let here = searcher.cell(key.positions[n]);
            let mut cand = vec![here];
            cand.extend(g.neighbors_unchecked(here));
            let flag = Searcher::flag(key.flags, n);
            let mut list = Vec::with_capacity(cand.len());
            for c in cand {
                let new_flag = step_flag(flag, c, p, n);
                let mut delivery = None;
                let mut pickup = false;
                if flag == 0 && new_flag == 1 {
                    let ci = searcher.delivery_cells.iter().position(|&d| d == c).unwrap();
                    if key.remaining[ci] == 0 {
                        // A forced drop-off past the cell's demand can
                        // never be feasible.
                        continue;
                    }
                    delivery = Some(ci);
                } else if flag == 1 && new_flag == 0 {
                    pickup = true;
                }
                list.push((g.cell_index(c) as u16, new_flag, delivery, pickup));
            }
            options.push(list);
        }

        let t1 = key.t + 1;
        let mut chosen = vec![0usize; p.n_drones];
        enumerate_joint(&options, 0, &mut chosen, &mut |picks: &[usize]| {
            let mut positions = Vec::with_capacity(p.n_drones);
            for (n, &i) in picks.iter().enumerate() {
                positions.push(options[n][i].0);
            }
            // Vertex collisions.
            for a in 0..positions.len() {
                for b in a + 1..positions.len() {
                    if positions[a] == positions[b] {
                        return;
                    }
                }
            }
            let mut flags = 0u32;
            let mut remaining = key.remaining.clone();
            let mut last_pickup = key.last_pickup.clone();
            let mut step_cost = 0.0;
            for (n, &i) in picks.iter().enumerate() {
                let (cell, new_flag, delivery, pickup) = options[n][i];
                flags |= u32::from(new_flag) << n;
                if let Some(ci) = delivery {
                    if remaining[ci] == 0 {
                        return;
                    }
                    remaining[ci] -= 1;
                }
                if pickup {
                    last_pickup[n] = t1;
                }
                step_cost += searcher.cell(key.positions[n]).hop_cost(searcher.cell(cell));
            }
            let mut time_cost = 0.0;
            for n in 0..p.n_drones {
                time_cost += (last_pickup[n] - key.last_pickup[n]) as f64;
            }
            let next = StateKey { t: t1, positions, flags, remaining, last_pickup };
            if !searcher.can_finish(&next) {
                return;
            }
            let g2 = gval + p.weight_distance * step_cost + p.weight_time * time_cost;
            let better = match seen.get(&next) {
                Some(&(b, _)) => g2 < b,
                None => true,
            };
            if better {
                seen.insert(next.clone(), (g2, Some(key.clone())));
                let f = g2 + searcher.remaining_bound(&next);
                heap.push(QueueNode { f, g: g2, key: next });
            }
        });
    }
    Ok(Outcome::Infeasible)
}

fn enumerate_joint(
    options: &[Vec<(u16, u8, Option<usize>, bool)>],
    depth: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == options.len() {
        visit(chosen);
        return;
    }
    for i in 0..options[depth].len() {
        chosen[depth] = i;
        enumerate_joint(options, depth + 1, chosen, visit);
    }
}

fn reconstruct(
    p: &ScheduleProblem,
    searcher: &Searcher,
    seen: &HashMap<StateKey, (f64, Option<StateKey>)>,
    goal: StateKey,
) -> ScheduleSolution {
    let mut chain = vec![goal];
    while let Some((_, Some(prev))) = seen.get(chain.last().unwrap()) {
        chain.push(prev.clone());
    }
    chain.reverse();

    let h = p.horizon;
    let mut traces = Vec::with_capacity(p.n_drones);
    for n in 0..p.n_drones {
        let mut positions: Vec<CellCoord> =
            chain.iter().map(|k| searcher.cell(k.positions[n])).collect();
        let mut flags: Vec<u8> = chain.iter().map(|k| Searcher::flag(k.flags, n)).collect();
        // Pad the remaining horizon by waiting at the final warehouse; goal
        // states are chosen so waiting is transition-free.
        while positions.len() < h + 1 {
            positions.push(*positions.last().unwrap());
            flags.push(*flags.last().unwrap());
        }
        let completion_time = completion_from_flags(&flags);
        traces.push(DroneTrace { positions, flags, completion_time });
    }

    let total_distance: f64 = traces
        .iter()
        .map(|tr| {
            tr.positions
                .windows(2)
                .map(|w| w[0].hop_cost(w[1]))
                .sum::<f64>()
        })
        .sum();
    let time_sum: usize = traces.iter().map(|tr| tr.completion_time).sum();
    let objective = p.weight_distance * total_distance + p.weight_time * time_sum as f64;

    let mut deliveries_made = BTreeMap::new();
    for (n, tr) in traces.iter().enumerate() {
        let events = extract_events(tr, p, n).expect("solver traces replay cleanly");
        for e in events {
            if e.kind == EventKind::Delivery {
                *deliveries_made.entry(e.cell).or_insert(0u32) += 1;
            }
        }
    }

    ScheduleSolution { traces, objective, total_distance, deliveries_made }
}
