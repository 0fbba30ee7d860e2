use dronegrid::distance::build_distance_matrix;
use dronegrid::generate::{generate_instance, GenParams, InstanceKind};
use dronegrid::path::{solve_shortest_path, PathProblem};
use dronegrid::Outcome;
use std::time::Instant;

fn main() {
    for (stations_base, density) in [(6usize, 0.15f64), (8, 0.12), (10, 0.08)] {
        let t0 = Instant::now();
        let mut feas = 0;
        for seed in 1..=50u64 {
            let mut params = GenParams::new(InstanceKind::Path, seed, 5, 5, density);
            params.stations = stations_base + (seed % 5) as usize;
            let g = generate_instance(&params).unwrap();
            let dist = build_distance_matrix(&g);
            let p = PathProblem::new(&g, &dist).unwrap();
            if let Outcome::Feasible(_) = solve_shortest_path(&p).unwrap() { feas += 1; }
        }
        println!("path 5x5 stations~{stations_base}+0..5 density {density}: {feas}/50 feasible in {:?}", t0.elapsed());
    }
}
