//! Desk-scale exact optimization for drone delivery logistics on 2D
//! obstacle grids.
//!
//! Three solvers share one grid world:
//!
//! - [`placement`]: fewest charging stations covering every free cell
//!   within the single-charge range, connected by one directed tour.
//! - [`path`]: shortest endpoint-to-endpoint route whose every cell keeps
//!   enough charging stations in reach.
//! - [`schedule`]: collision-free multi-drone delivery plans over a fixed
//!   time horizon, minimizing a weighted distance/time objective.
//!
//! Each solver is exact and paired with an independent checker in
//! [`verify`]; [`export`] materializes the three models as LP text for
//! external cross-checks, and [`render`] draws instances and solutions as
//! portable pixmaps. The `dronegrid` binary wires everything into a CLI.

pub mod cli;
pub mod distance;
pub mod export;
pub mod generate;
pub mod grid;
pub mod io;
pub mod lp;
pub mod path;
pub mod schedule;
pub mod verify;
pub mod placement;
pub mod render;

pub use distance::{build_distance_matrix, shortest_distance, DistanceMatrix};
pub use grid::{parse_instance, render_instance, CellCoord, GridInstance};

/// Argument and consistency errors shared by the solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("depot {cell} is not a traversable cell")]
    DepotNotTraversable { cell: CellCoord },
    #[error("max_stations must be at least 1")]
    MaxStationsZero,
    #[error("endpoint {cell} is not a traversable cell")]
    EndpointNotTraversable { cell: CellCoord },
    #[error("depot {cell} is not part of the given cycle")]
    DepotNotInCycle { cell: CellCoord },
    #[error("{drones} drones need {drones} distinct start warehouses, instance has {warehouses}")]
    TooManyDrones { drones: usize, warehouses: usize },
    #[error("at least one drone is required")]
    ZeroDrones,
    #[error("horizon must be at least 1")]
    HorizonZero,
    #[error("trace breaks the flag transition rules at t={t} (drone {drone})")]
    InconsistentTrace { drone: usize, t: usize },
    #[error("grid has {cells} cells; the exact solver supports at most {limit}")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("distance matrix dimensions do not match the grid")]
    DistanceDimsMismatch,
}

/// Result of an exact solve: either an optimal solution or a proof of
/// infeasibility within the model's bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Feasible(T),
    Infeasible,
}

impl<T> Outcome<T> {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Outcome::Infeasible)
    }

    pub fn feasible(self) -> Option<T> {
        match self {
            Outcome::Feasible(t) => Some(t),
            Outcome::Infeasible => None,
        }
    }

    pub fn as_ref(&self) -> Outcome<&T> {
        match self {
            Outcome::Feasible(t) => Outcome::Feasible(t),
            Outcome::Infeasible => Outcome::Infeasible,
        }
    }

    #[track_caller]
    pub fn expect_feasible(self, msg: &str) -> T {
        match self {
            Outcome::Feasible(t) => t,
            Outcome::Infeasible => panic!("{msg}"),
        }
    }
}
