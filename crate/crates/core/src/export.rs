//! Materialize the three formulations as linear 0-1 programs.
//!
//! Every product of binaries is linearized with standard AND rows, so the
//! exported text is a plain mixed 0-1 program an external MILP solver can
//! consume directly. Variable names are deterministic functions of the
//! indices (`B_i_j`, `E_i_j_k_l`, `X_n_i_j_t`, `f_n_t`, `T_n`, ...); cell
//! indices are 0-based and drones are numbered from 1.
//!
//! The matching `*_assignment` builders map a solved solution onto the
//! full variable set of the exported model, for [`crate::lp::evaluate_against`].

use std::collections::BTreeMap;

use crate::distance::DistanceMatrix;
use crate::grid::{CellCoord, GridInstance};
use crate::lp::{Constraint, LinearModel, LpError, Relation, Variable};
use crate::path::{PathProblem, PathSolution};
use crate::placement::{PlacementProblem, PlacementSolution, RANK_BIG_M};
use crate::schedule::{EventKind, ScheduleProblem, ScheduleSolution};

/// Cap on the position-variable count of a scheduling export.
pub const SCHEDULE_VAR_BUDGET: usize = 200_000;

fn b_name(c: CellCoord) -> String {
    format!("B_{}_{}", c.row, c.col)
}

fn e_name(a: CellCoord, b: CellCoord) -> String {
    format!("E_{}_{}_{}_{}", a.row, a.col, b.row, b.col)
}

fn t_name(c: CellCoord) -> String {
    format!("T_{}_{}", c.row, c.col)
}

fn x_name(c: CellCoord) -> String {
    format!("X_{}_{}", c.row, c.col)
}

fn v_name(c: CellCoord) -> String {
    format!("V_{}_{}", c.row, c.col)
}

fn edge_name(a: CellCoord, b: CellCoord) -> String {
    format!("e_{}_{}_{}_{}", a.row, a.col, b.row, b.col)
}

fn xt_name(drone: usize, c: CellCoord, t: usize) -> String {
    format!("X_{}_{}_{}_{}", drone + 1, c.row, c.col, t)
}

fn f_name(drone: usize, t: usize) -> String {
    format!("f_{}_{}", drone + 1, t)
}

fn tn_name(drone: usize) -> String {
    format!("T_{}", drone + 1)
}

fn move_name(drone: usize, a: CellCoord, b: CellCoord, t: usize) -> String {
    format!("m_{}_{}_{}_{}_{}_{}", drone + 1, a.row, a.col, b.row, b.col, t)
}

/// Sum coefficients of repeated variables so each row names a variable
/// at most once.
fn merge_terms(terms: Vec<(f64, String)>) -> Vec<(f64, String)> {
    let mut merged: BTreeMap<String, f64> = BTreeMap::new();
    for (coef, var) in terms {
        *merged.entry(var).or_insert(0.0) += coef;
    }
    merged.into_iter().map(|(var, coef)| (coef, var)).collect()
}

/// All ordered pairs of traversable cells within `d_max` of one another.
fn eligible_pairs(g: &GridInstance, dist: &DistanceMatrix, d_max: f64) -> Vec<(CellCoord, CellCoord)> {
    let free = g.free_cells();
    let mut out = Vec::new();
    for &a in &free {
        for &b in &free {
            if a != b && dist.within(a, b, d_max) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Export the station placement model: coverage rows, edge-station links,
/// unit in/out degrees, the depot fix, and big-M rank rows. Pairs beyond
/// `d_max` get no edge variable at all, which pins them to zero.
pub fn export_placement(p: &PlacementProblem) -> LinearModel {
    let g = p.grid;
    let mut m = LinearModel {
        comments: vec![
            "station placement model".to_string(),
            format!("rank rows use big-M {} and ranks in [1, {}]", RANK_BIG_M, p.max_stations),
            "cell pairs farther than d_max have no edge variable (pinned 0)".to_string(),
            "degree rows presume at least two stations; a lone covering station".to_string(),
            "is handled outside this model".to_string(),
        ],
        ..Default::default()
    };

    for i in 0..g.num_cells() {
        let c = g.cell_at(i);
        m.variables.insert(b_name(c), Variable::binary());
        if g.is_traversable(c) {
            m.variables
                .insert(t_name(c), Variable::integer(1.0, p.max_stations as f64));
        }
    }
    let pairs = eligible_pairs(g, p.dist, p.d_max);
    for &(a, b) in &pairs {
        m.variables.insert(e_name(a, b), Variable::binary());
    }

    m.objective = (0..g.num_cells())
        .map(|i| (1.0, b_name(g.cell_at(i))))
        .collect();

    for &c in &g.obstacles {
        m.constraints.push(Constraint {
            name: format!("obstacle_{}_{}", c.row, c.col),
            terms: vec![(1.0, b_name(c))],
            relation: Relation::Eq,
            rhs: 0.0,
        });
    }

    for free in g.free_cells() {
        let terms: Vec<(f64, String)> = g
            .free_cells()
            .into_iter()
            .filter(|&s| p.dist.within(free, s, p.d_max))
            .map(|s| (1.0, b_name(s)))
            .collect();
        m.constraints.push(Constraint {
            name: format!("cover_{}_{}", free.row, free.col),
            terms,
            relation: Relation::Ge,
            rhs: 1.0,
        });
    }

    for &(a, b) in &pairs {
        m.constraints.push(Constraint {
            name: format!("edge_tail_{}_{}_{}_{}", a.row, a.col, b.row, b.col),
            terms: vec![(1.0, e_name(a, b)), (-1.0, b_name(a))],
            relation: Relation::Le,
            rhs: 0.0,
        });
        m.constraints.push(Constraint {
            name: format!("edge_head_{}_{}_{}_{}", a.row, a.col, b.row, b.col),
            terms: vec![(1.0, e_name(a, b)), (-1.0, b_name(b))],
            relation: Relation::Le,
            rhs: 0.0,
        });
    }

    for free in g.free_cells() {
        let mut out_terms: Vec<(f64, String)> = pairs
            .iter()
            .filter(|&&(a, _)| a == free)
            .map(|&(a, b)| (1.0, e_name(a, b)))
            .collect();
        out_terms.push((-1.0, b_name(free)));
        m.constraints.push(Constraint {
            name: format!("outflow_{}_{}", free.row, free.col),
            terms: out_terms,
            relation: Relation::Eq,
            rhs: 0.0,
        });
        let mut in_terms: Vec<(f64, String)> = pairs
            .iter()
            .filter(|&&(_, b)| b == free)
            .map(|&(a, b)| (1.0, e_name(a, b)))
            .collect();
        in_terms.push((-1.0, b_name(free)));
        m.constraints.push(Constraint {
            name: format!("inflow_{}_{}", free.row, free.col),
            terms: in_terms,
            relation: Relation::Eq,
            rhs: 0.0,
        });
    }

    m.constraints.push(Constraint {
        name: "depot".to_string(),
        terms: vec![(1.0, b_name(p.depot))],
        relation: Relation::Eq,
        rhs: 1.0,
    });

    for &(a, b) in &pairs {
        if a == p.depot || b == p.depot {
            continue;
        }
        m.constraints.push(Constraint {
            name: format!("rank_{}_{}_{}_{}", a.row, a.col, b.row, b.col),
            terms: vec![(1.0, t_name(b)), (-1.0, t_name(a)), (-RANK_BIG_M, e_name(a, b))],
            relation: Relation::Ge,
            rhs: 1.0 - RANK_BIG_M,
        });
    }
    m
}

/// Map a placement solution onto the exported variable set.
pub fn placement_assignment(
    model: &LinearModel,
    sol: &PlacementSolution,
) -> BTreeMap<String, f64> {
    let mut a = BTreeMap::new();
    for name in model.variables.keys() {
        let parts: Vec<&str> = name.split('_').collect();
        let value = match parts.as_slice() {
            ["B", r, c] => {
                let cell = CellCoord::new(r.parse().unwrap(), c.parse().unwrap());
                f64::from(sol.stations.contains(&cell))
            }
            ["E", i, j, k, l] => {
                let from = CellCoord::new(i.parse().unwrap(), j.parse().unwrap());
                let to = CellCoord::new(k.parse().unwrap(), l.parse().unwrap());
                f64::from(sol.tour_edges.contains(&(from, to)))
            }
            ["T", r, c] => {
                let cell = CellCoord::new(r.parse().unwrap(), c.parse().unwrap());
                sol.ranks.get(&cell).copied().unwrap_or(1) as f64
            }
            _ => unreachable!("unexpected placement variable {name}"),
        };
        a.insert(name.clone(), value);
    }
    a
}

/// Export the routing model: endpoint and obstacle fixes, visited-station
/// links, edge AND rows with the halved bilinear objective, unit/pair
/// degree rows, and the battery neighborhood rows.
pub fn export_path(p: &PathProblem) -> LinearModel {
    let g = p.grid;
    let mut m = LinearModel {
        comments: vec![
            "battery-constrained shortest path model".to_string(),
            "objective is half the bilinear adjacency cost over visited cells".to_string(),
        ],
        ..Default::default()
    };

    for i in 0..g.num_cells() {
        let c = g.cell_at(i);
        m.variables.insert(x_name(c), Variable::binary());
        m.variables.insert(v_name(c), Variable::binary());
    }
    // Ordered Moore-adjacent traversable pairs.
    let mut adj_pairs: Vec<(CellCoord, CellCoord)> = Vec::new();
    for a in g.free_cells() {
        for b in g.neighbors_unchecked(a) {
            if g.is_traversable(b) {
                adj_pairs.push((a, b));
            }
        }
    }
    for &(a, b) in &adj_pairs {
        m.variables.insert(edge_name(a, b), Variable::binary());
    }

    m.objective = adj_pairs
        .iter()
        .map(|&(a, b)| (0.5 * a.hop_cost(b), edge_name(a, b)))
        .collect();

    let [start, goal] = g.endpoints;
    m.constraints.push(Constraint {
        name: "endpoint_start".to_string(),
        terms: vec![(1.0, x_name(start))],
        relation: Relation::Eq,
        rhs: 1.0,
    });
    m.constraints.push(Constraint {
        name: "endpoint_goal".to_string(),
        terms: vec![(1.0, x_name(goal))],
        relation: Relation::Eq,
        rhs: 1.0,
    });

    for &c in &g.obstacles {
        m.constraints.push(Constraint {
            name: format!("obstacle_{}_{}", c.row, c.col),
            terms: vec![(1.0, x_name(c))],
            relation: Relation::Eq,
            rhs: 0.0,
        });
    }

    for i in 0..g.num_cells() {
        let c = g.cell_at(i);
        if g.stations.contains(&c) {
            m.constraints.push(Constraint {
                name: format!("vis_station_{}_{}", c.row, c.col),
                terms: vec![(1.0, v_name(c)), (-1.0, x_name(c))],
                relation: Relation::Eq,
                rhs: 0.0,
            });
        } else {
            m.constraints.push(Constraint {
                name: format!("vis_zero_{}_{}", c.row, c.col),
                terms: vec![(1.0, v_name(c))],
                relation: Relation::Eq,
                rhs: 0.0,
            });
        }
    }

    for &(a, b) in &adj_pairs {
        let e = edge_name(a, b);
        m.constraints.push(Constraint {
            name: format!("edge_tail_{}_{}_{}_{}", a.row, a.col, b.row, b.col),
            terms: vec![(1.0, e.clone()), (-1.0, x_name(a))],
            relation: Relation::Le,
            rhs: 0.0,
        });
        m.constraints.push(Constraint {
            name: format!("edge_head_{}_{}_{}_{}", a.row, a.col, b.row, b.col),
            terms: vec![(1.0, e.clone()), (-1.0, x_name(b))],
            relation: Relation::Le,
            rhs: 0.0,
        });
        m.constraints.push(Constraint {
            name: format!("edge_and_{}_{}_{}_{}", a.row, a.col, b.row, b.col),
            terms: vec![(1.0, e), (-1.0, x_name(a)), (-1.0, x_name(b))],
            relation: Relation::Ge,
            rhs: -1.0,
        });
    }

    for c in g.free_cells() {
        let expected = if c == start || c == goal { 1.0 } else { 2.0 };
        let mut terms: Vec<(f64, String)> = g
            .neighbors_unchecked(c)
            .into_iter()
            .filter(|n| g.is_traversable(*n))
            .map(|n| (1.0, edge_name(c, n)))
            .collect();
        terms.push((-expected, x_name(c)));
        m.constraints.push(Constraint {
            name: format!("degree_{}_{}", c.row, c.col),
            terms,
            relation: Relation::Eq,
            rhs: 0.0,
        });
    }

    for c in g.free_cells() {
        let mut terms: Vec<(f64, String)> = g
            .closed_neighborhood(c)
            .into_iter()
            .map(|n| (1.0, v_name(n)))
            .collect();
        terms.push((-2.0, x_name(c)));
        // The cell's own visited-station variable counts twice: once in
        // the block sum and once for the self-service allowance.
        terms.push((1.0, v_name(c)));
        m.constraints.push(Constraint {
            name: format!("battery_{}_{}", c.row, c.col),
            terms: merge_terms(terms),
            relation: Relation::Ge,
            rhs: 0.0,
        });
    }
    m
}

/// Map a path solution onto the exported variable set.
pub fn path_assignment(model: &LinearModel, sol: &PathSolution) -> BTreeMap<String, f64> {
    let mut a = BTreeMap::new();
    for name in model.variables.keys() {
        let parts: Vec<&str> = name.split('_').collect();
        let value = match parts.as_slice() {
            ["X", r, c] => {
                let cell = CellCoord::new(r.parse().unwrap(), c.parse().unwrap());
                f64::from(sol.visited.contains(&cell))
            }
            ["V", r, c] => {
                let cell = CellCoord::new(r.parse().unwrap(), c.parse().unwrap());
                f64::from(sol.visited_stations.contains(&cell))
            }
            ["e", i, j, k, l] => {
                let from = CellCoord::new(i.parse().unwrap(), j.parse().unwrap());
                let to = CellCoord::new(k.parse().unwrap(), l.parse().unwrap());
                f64::from(sol.visited.contains(&from) && sol.visited.contains(&to))
            }
            _ => unreachable!("unexpected path variable {name}"),
        };
        a.insert(name.clone(), value);
    }
    a
}

/// Export the fleet scheduling model over the full time expansion:
/// presence and movement rows, linearized flag dynamics, pickup/delivery
/// transition binaries, demand rows, the effective-supply row (the
/// literal total-drop variant stays in the header comments since terminal
/// homecomings would break its equality), pairwise collision rows, and
/// completion-time bounds.
pub fn export_schedule(p: &ScheduleProblem) -> Result<LinearModel, LpError> {
    let g = p.grid;
    let cells: Vec<CellCoord> = (0..g.num_cells()).map(|i| g.cell_at(i)).collect();
    let h = p.horizon;
    let position_vars = p.n_drones * cells.len() * (h + 1);
    if position_vars > SCHEDULE_VAR_BUDGET {
        return Err(LpError::ModelTooLarge { vars: position_vars, budget: SCHEDULE_VAR_BUDGET });
    }

    let total_demand = g.total_demand();
    let mut m = LinearModel {
        comments: vec![
            "fleet scheduling model".to_string(),
            format!("horizon {h}, {} drones, weights 0.7 distance / 0.3 time", p.n_drones),
            "active supply row: effective pickups (followed by a delivery) equal demand".to_string(),
            format!(
                "literal variant (inactive): sum of all pick_n_t = {total_demand} \
                 overcounts terminal homecomings"
            ),
            format!("completion bounds use the horizon {h} as big-M"),
        ],
        ..Default::default()
    };

    for n in 0..p.n_drones {
        for &c in &cells {
            for t in 0..=h {
                m.variables.insert(xt_name(n, c, t), Variable::binary());
            }
        }
        for t in 0..=h {
            m.variables.insert(f_name(n, t), Variable::binary());
        }
        m.variables.insert(tn_name(n), Variable::integer(0.0, h as f64));
        for t in 1..=h {
            m.variables.insert(format!("pick_{}_{}", n + 1, t), Variable::binary());
            m.variables.insert(format!("del_{}_{}", n + 1, t), Variable::binary());
            m.variables.insert(format!("hasdel_{}_{}", n + 1, t), Variable::binary());
            m.variables.insert(format!("eff_{}_{}", n + 1, t), Variable::binary());
            for d in &g.deliveries {
                m.variables
                    .insert(format!("delat_{}_{}_{}_{}", n + 1, d.cell.row, d.cell.col, t), Variable::binary());
            }
        }
        for t in 0..h {
            for &a in &cells {
                for b in g.neighbors_unchecked(a) {
                    m.variables.insert(move_name(n, a, b, t), Variable::binary());
                }
            }
        }
    }

    // Objective: weighted travel plus weighted completion times.
    let mut objective: Vec<(f64, String)> = Vec::new();
    for n in 0..p.n_drones {
        for t in 0..h {
            for &a in &cells {
                for b in g.neighbors_unchecked(a) {
                    objective.push((p.weight_distance * a.hop_cost(b), move_name(n, a, b, t)));
                }
            }
        }
        objective.push((p.weight_time, tn_name(n)));
    }
    m.objective = objective;

    for n in 0..p.n_drones {
        let dn = n + 1;
        m.constraints.push(Constraint {
            name: format!("init_pos_{dn}"),
            terms: vec![(1.0, xt_name(n, g.warehouses[n], 0))],
            relation: Relation::Eq,
            rhs: 1.0,
        });
        m.constraints.push(Constraint {
            name: format!("init_flag_{dn}"),
            terms: vec![(1.0, f_name(n, 0))],
            relation: Relation::Eq,
            rhs: 1.0,
        });
        for t in 0..=h {
            m.constraints.push(Constraint {
                name: format!("presence_{dn}_{t}"),
                terms: cells.iter().map(|&c| (1.0, xt_name(n, c, t))).collect(),
                relation: Relation::Eq,
                rhs: 1.0,
            });
        }
        for t in 0..h {
            for &c in &cells {
                let mut terms: Vec<(f64, String)> = g
                    .closed_neighborhood(c)
                    .into_iter()
                    .map(|b| (1.0, xt_name(n, b, t + 1)))
                    .collect();
                terms.push((-1.0, xt_name(n, c, t)));
                m.constraints.push(Constraint {
                    name: format!("move_{dn}_{}_{}_{t}", c.row, c.col),
                    terms,
                    relation: Relation::Ge,
                    rhs: 0.0,
                });
            }
        }

        // Move AND rows.
        for t in 0..h {
            for &a in &cells {
                for b in g.neighbors_unchecked(a) {
                    let mv = move_name(n, a, b, t);
                    let tail = xt_name(n, a, t);
                    let head = xt_name(n, b, t + 1);
                    m.constraints.push(Constraint {
                        name: format!("mv_tail_{dn}_{}_{}_{}_{}_{t}", a.row, a.col, b.row, b.col),
                        terms: vec![(1.0, mv.clone()), (-1.0, tail.clone())],
                        relation: Relation::Le,
                        rhs: 0.0,
                    });
                    m.constraints.push(Constraint {
                        name: format!("mv_head_{dn}_{}_{}_{}_{}_{t}", a.row, a.col, b.row, b.col),
                        terms: vec![(1.0, mv.clone()), (-1.0, head.clone())],
                        relation: Relation::Le,
                        rhs: 0.0,
                    });
                    m.constraints.push(Constraint {
                        name: format!("mv_and_{dn}_{}_{}_{}_{}_{t}", a.row, a.col, b.row, b.col),
                        terms: vec![(1.0, mv), (-1.0, tail), (-1.0, head)],
                        relation: Relation::Ge,
                        rhs: -1.0,
                    });
                }
            }
        }

        // Flag dynamics, linearized per step.
        let delivery_cells: Vec<CellCoord> = g.deliveries.iter().map(|d| d.cell).collect();
        let eligible: Vec<CellCoord> = g
            .warehouses
            .iter()
            .copied()
            .filter(|w| p.pickup_eligible(n, *w))
            .collect();
        for t in 0..h {
            let at_l: Vec<(f64, String)> = delivery_cells
                .iter()
                .map(|&c| (1.0, xt_name(n, c, t + 1)))
                .collect();
            // Previous flag 0: next flag equals presence on a delivery cell.
            let mut up = vec![(1.0, f_name(n, t + 1)), (-1.0, f_name(n, t))];
            up.extend(at_l.iter().map(|(c, v)| (-c, v.clone())));
            m.constraints.push(Constraint {
                name: format!("flag_del_hi_{dn}_{t}"),
                terms: up,
                relation: Relation::Le,
                rhs: 0.0,
            });
            let mut lo = vec![(1.0, f_name(n, t + 1)), (1.0, f_name(n, t))];
            lo.extend(at_l.iter().map(|(c, v)| (-c, v.clone())));
            m.constraints.push(Constraint {
                name: format!("flag_del_lo_{dn}_{t}"),
                terms: lo,
                relation: Relation::Ge,
                rhs: 0.0,
            });
            // Previous flag 1: next flag is 1 unless on an eligible warehouse.
            let at_w: Vec<(f64, String)> = eligible
                .iter()
                .map(|&c| (1.0, xt_name(n, c, t + 1)))
                .collect();
            let mut hi = vec![(1.0, f_name(n, t + 1)), (1.0, f_name(n, t))];
            hi.extend(at_w.iter().cloned());
            m.constraints.push(Constraint {
                name: format!("flag_ret_hi_{dn}_{t}"),
                terms: hi,
                relation: Relation::Le,
                rhs: 2.0,
            });
            let mut lo = vec![(1.0, f_name(n, t + 1)), (-1.0, f_name(n, t))];
            lo.extend(at_w.iter().cloned());
            m.constraints.push(Constraint {
                name: format!("flag_ret_lo_{dn}_{t}"),
                terms: lo,
                relation: Relation::Ge,
                rhs: 0.0,
            });
        }

        // Transition binaries: pick = f(t-1) AND NOT f(t); del = NOT f(t-1) AND f(t).
        for t in 1..=h {
            let pick = format!("pick_{dn}_{t}");
            let del = format!("del_{dn}_{t}");
            let prev = f_name(n, t - 1);
            let cur = f_name(n, t);
            m.constraints.push(Constraint {
                name: format!("pick_a_{dn}_{t}"),
                terms: vec![(1.0, pick.clone()), (-1.0, prev.clone())],
                relation: Relation::Le,
                rhs: 0.0,
            });
            m.constraints.push(Constraint {
                name: format!("pick_b_{dn}_{t}"),
                terms: vec![(1.0, pick.clone()), (1.0, cur.clone())],
                relation: Relation::Le,
                rhs: 1.0,
            });
            m.constraints.push(Constraint {
                name: format!("pick_c_{dn}_{t}"),
                terms: vec![(1.0, pick.clone()), (-1.0, prev.clone()), (1.0, cur.clone())],
                relation: Relation::Ge,
                rhs: 0.0,
            });
            m.constraints.push(Constraint {
                name: format!("del_a_{dn}_{t}"),
                terms: vec![(1.0, del.clone()), (1.0, prev.clone())],
                relation: Relation::Le,
                rhs: 1.0,
            });
            m.constraints.push(Constraint {
                name: format!("del_b_{dn}_{t}"),
                terms: vec![(1.0, del.clone()), (-1.0, cur.clone())],
                relation: Relation::Le,
                rhs: 0.0,
            });
            m.constraints.push(Constraint {
                name: format!("del_c_{dn}_{t}"),
                terms: vec![(1.0, del.clone()), (1.0, prev), (-1.0, cur)],
                relation: Relation::Ge,
                rhs: 0.0,
            });

            // hasdel_n_t: some delivery strictly after t.
            let hasdel = format!("hasdel_{dn}_{t}");
            let later: Vec<String> = (t + 1..=h).map(|t2| format!("del_{dn}_{t2}")).collect();
            for (i, l) in later.iter().enumerate() {
                m.constraints.push(Constraint {
                    name: format!("hasdel_ge_{dn}_{t}_{i}"),
                    terms: vec![(1.0, hasdel.clone()), (-1.0, l.clone())],
                    relation: Relation::Ge,
                    rhs: 0.0,
                });
            }
            let mut cap = vec![(1.0, hasdel.clone())];
            cap.extend(later.iter().map(|l| (-1.0, l.clone())));
            m.constraints.push(Constraint {
                name: format!("hasdel_le_{dn}_{t}"),
                terms: cap,
                relation: Relation::Le,
                rhs: 0.0,
            });

            // eff = pick AND hasdel.
            let eff = format!("eff_{dn}_{t}");
            m.constraints.push(Constraint {
                name: format!("eff_a_{dn}_{t}"),
                terms: vec![(1.0, eff.clone()), (-1.0, pick.clone())],
                relation: Relation::Le,
                rhs: 0.0,
            });
            m.constraints.push(Constraint {
                name: format!("eff_b_{dn}_{t}"),
                terms: vec![(1.0, eff.clone()), (-1.0, hasdel.clone())],
                relation: Relation::Le,
                rhs: 0.0,
            });
            m.constraints.push(Constraint {
                name: format!("eff_c_{dn}_{t}"),
                terms: vec![(1.0, eff), (-1.0, pick.clone()), (-1.0, hasdel)],
                relation: Relation::Ge,
                rhs: -1.0,
            });

            // delat = del AND at-cell, for demand accounting.
            for d in &g.deliveries {
                let da = format!("delat_{dn}_{}_{}_{t}", d.cell.row, d.cell.col);
                let at = xt_name(n, d.cell, t);
                m.constraints.push(Constraint {
                    name: format!("delat_a_{dn}_{}_{}_{t}", d.cell.row, d.cell.col),
                    terms: vec![(1.0, da.clone()), (-1.0, del.clone())],
                    relation: Relation::Le,
                    rhs: 0.0,
                });
                m.constraints.push(Constraint {
                    name: format!("delat_b_{dn}_{}_{}_{t}", d.cell.row, d.cell.col),
                    terms: vec![(1.0, da.clone()), (-1.0, at.clone())],
                    relation: Relation::Le,
                    rhs: 0.0,
                });
                m.constraints.push(Constraint {
                    name: format!("delat_c_{dn}_{}_{}_{t}", d.cell.row, d.cell.col),
                    terms: vec![(1.0, da), (-1.0, del.clone()), (-1.0, at)],
                    relation: Relation::Ge,
                    rhs: -1.0,
                });
            }

            // Completion time dominates every pickup instant.
            m.constraints.push(Constraint {
                name: format!("ctime_{dn}_{t}"),
                terms: vec![(1.0, tn_name(n)), (-(t as f64), pick)],
                relation: Relation::Ge,
                rhs: 0.0,
            });
        }
    }

    // Effective supply matches total demand.
    let mut supply: Vec<(f64, String)> = Vec::new();
    for n in 0..p.n_drones {
        for t in 1..=h {
            supply.push((1.0, format!("eff_{}_{}", n + 1, t)));
        }
    }
    m.constraints.push(Constraint {
        name: "supply_effective".to_string(),
        terms: supply,
        relation: Relation::Eq,
        rhs: total_demand as f64,
    });

    for d in &g.deliveries {
        let mut terms: Vec<(f64, String)> = Vec::new();
        for n in 0..p.n_drones {
            for t in 1..=h {
                terms.push((1.0, format!("delat_{}_{}_{}_{}", n + 1, d.cell.row, d.cell.col, t)));
            }
        }
        m.constraints.push(Constraint {
            name: format!("demand_{}_{}", d.cell.row, d.cell.col),
            terms,
            relation: Relation::Eq,
            rhs: d.demand as f64,
        });
    }

    for a in 0..p.n_drones {
        for b in a + 1..p.n_drones {
            for &c in &cells {
                for t in 0..=h {
                    m.constraints.push(Constraint {
                        name: format!("collide_{}_{}_{}_{}_{t}", a + 1, b + 1, c.row, c.col),
                        terms: vec![(1.0, xt_name(a, c, t)), (1.0, xt_name(b, c, t))],
                        relation: Relation::Le,
                        rhs: 1.0,
                    });
                }
            }
        }
    }
    Ok(m)
}

/// Map a schedule solution onto the exported variable set.
pub fn schedule_assignment(
    model: &LinearModel,
    p: &ScheduleProblem,
    sol: &ScheduleSolution,
) -> BTreeMap<String, f64> {
    // Precompute per-drone transition tables.
    let n_drones = sol.traces.len();
    let mut picks: Vec<Vec<bool>> = Vec::with_capacity(n_drones);
    let mut dels: Vec<Vec<bool>> = Vec::with_capacity(n_drones);
    for tr in &sol.traces {
        let len = tr.flags.len();
        let mut pk = vec![false; len];
        let mut dl = vec![false; len];
        for t in 1..len {
            pk[t] = tr.flags[t - 1] == 1 && tr.flags[t] == 0;
            dl[t] = tr.flags[t - 1] == 0 && tr.flags[t] == 1;
        }
        picks.push(pk);
        dels.push(dl);
    }
    let _ = p;

    let mut a = BTreeMap::new();
    for name in model.variables.keys() {
        let parts: Vec<&str> = name.split('_').collect();
        let value = match parts.as_slice() {
            ["X", n, r, c, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                let cell = CellCoord::new(r.parse().unwrap(), c.parse().unwrap());
                f64::from(sol.traces[n - 1].positions[t] == cell)
            }
            ["f", n, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                f64::from(sol.traces[n - 1].flags[t])
            }
            ["T", n] => {
                let n: usize = n.parse().unwrap();
                sol.traces[n - 1].completion_time as f64
            }
            ["m", n, i, j, k, l, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                let from = CellCoord::new(i.parse().unwrap(), j.parse().unwrap());
                let to = CellCoord::new(k.parse().unwrap(), l.parse().unwrap());
                let tr = &sol.traces[n - 1];
                f64::from(tr.positions[t] == from && tr.positions[t + 1] == to)
            }
            ["pick", n, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                f64::from(picks[n - 1][t])
            }
            ["del", n, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                f64::from(dels[n - 1][t])
            }
            ["hasdel", n, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                f64::from(dels[n - 1][t + 1..].iter().any(|&d| d))
            }
            ["eff", n, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                f64::from(picks[n - 1][t] && dels[n - 1][t + 1..].iter().any(|&d| d))
            }
            ["delat", n, r, c, t] => {
                let (n, t): (usize, usize) = (n.parse().unwrap(), t.parse().unwrap());
                let cell = CellCoord::new(r.parse().unwrap(), c.parse().unwrap());
                let tr = &sol.traces[n - 1];
                f64::from(dels[n - 1][t] && tr.positions[t] == cell)
            }
            _ => unreachable!("unexpected schedule variable {name}"),
        };
        a.insert(name.clone(), value);
    }
    a
}

/// Count delivery events per cell for reporting.
pub fn deliveries_by_cell(
    p: &ScheduleProblem,
    sol: &ScheduleSolution,
) -> BTreeMap<CellCoord, u32> {
    let mut map = BTreeMap::new();
    for (n, tr) in sol.traces.iter().enumerate() {
        if let Ok(events) = crate::schedule::extract_events(tr, p, n) {
            for e in events {
                if e.kind == EventKind::Delivery {
                    *map.entry(e.cell).or_insert(0) += 1;
                }
            }
        }
    }
    map
}
