use dronegrid::grid::{CellCoord, Delivery, GridInstance};
use dronegrid::schedule::{solve_schedule, PickupPolicy, ScheduleProblem};

fn main() {
    let mut g = GridInstance::empty(10, 10);
    g.warehouses = vec![CellCoord::new(6, 2), CellCoord::new(2, 6)];
    g.deliveries = vec![
        Delivery { cell: CellCoord::new(8, 0), demand: 2 },
        Delivery { cell: CellCoord::new(4, 4), demand: 1 },
        Delivery { cell: CellCoord::new(0, 8), demand: 1 },
    ];
    let p = ScheduleProblem::new(&g, 2, 14, PickupPolicy::AnyWarehouse).unwrap();
    let t0 = std::time::Instant::now();
    let out = solve_schedule(&p).unwrap();
    let dt = t0.elapsed();
    match out {
        dronegrid::Outcome::Feasible(sol) => {
            println!("objective={:.4} distance={:.4} in {:?}", sol.objective, sol.total_distance, dt);
            for tr in &sol.traces {
                println!("T={} flags={:?}", tr.completion_time, tr.flags);
                println!("  pos={:?}", tr.positions.iter().map(|c| (c.row, c.col)).collect::<Vec<_>>());
            }
        }
        dronegrid::Outcome::Infeasible => println!("infeasible in {:?}", dt),
    }
}
