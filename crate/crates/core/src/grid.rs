//! The 2D grid world shared by all solvers: cell coordinates, obstacle
//! lookups, Moore (8-connected) adjacency, and the JSON instance format.

use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default single-charge travel distance: two hops in any direction.
pub const DEFAULT_D_MAX: f64 = 2.0 * SQRT_2;

/// A grid cell address, row-major with (0, 0) in the top-left corner.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
}

impl CellCoord {
    pub fn new(row: usize, col: usize) -> Self {
        CellCoord { row, col }
    }

    /// Chebyshev distance: number of Moore hops between two cells.
    pub fn chebyshev(self, other: CellCoord) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    /// True when the cells differ and are within one Moore hop.
    pub fn is_moore_adjacent(self, other: CellCoord) -> bool {
        self != other && self.chebyshev(other) == 1
    }

    /// Cost of a single move: 0 to stay, 1 lateral, sqrt(2) diagonal.
    /// Only meaningful for equal or Moore-adjacent cells.
    pub fn hop_cost(self, other: CellCoord) -> f64 {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        debug_assert!(dr <= 1 && dc <= 1, "hop_cost needs neighboring cells");
        match dr + dc {
            0 => 0.0,
            1 => 1.0,
            _ => SQRT_2,
        }
    }

    /// Shortest travel distance under Moore moves on an empty grid.
    pub fn octile(self, other: CellCoord) -> f64 {
        let dr = self.row.abs_diff(other.row) as f64;
        let dc = self.col.abs_diff(other.col) as f64;
        let (lo, hi) = if dr < dc { (dr, dc) } else { (dc, dr) };
        hi - lo + lo * SQRT_2
    }
}

impl From<(usize, usize)> for CellCoord {
    fn from((row, col): (usize, usize)) -> Self {
        CellCoord { row, col }
    }
}

impl From<CellCoord> for (usize, usize) {
    fn from(c: CellCoord) -> Self {
        (c.row, c.col)
    }
}

impl std::fmt::Display for CellCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// A delivery request: target cell plus how many packages it needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Delivery {
    pub cell: CellCoord,
    pub demand: u32,
}

/// One problem world: dimensions, obstacles, and the site sets used by the
/// individual solvers. Instances are immutable once validated and safe to
/// share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridInstance {
    pub rows: usize,
    pub cols: usize,
    pub obstacles: BTreeSet<CellCoord>,
    pub stations: BTreeSet<CellCoord>,
    pub endpoints: [CellCoord; 2],
    pub warehouses: Vec<CellCoord>,
    pub deliveries: Vec<Delivery>,
    pub d_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depot: Option<CellCoord>,
}

/// A structurally well-formed instance that breaks a domain rule.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("{what} cell {cell} is out of bounds for a {rows}x{cols} grid")]
    OutOfBounds { what: &'static str, cell: CellCoord, rows: usize, cols: usize },
    #[error("station at {cell} sits on an obstacle")]
    StationOnObstacle { cell: CellCoord },
    #[error("{what} at {cell} sits on an obstacle")]
    SiteOnObstacle { what: &'static str, cell: CellCoord },
    #[error("delivery at {cell} has demand {demand}; demands must be at least 1")]
    BadDemand { cell: CellCoord, demand: u32 },
    #[error("delivery cell {cell} appears more than once")]
    DuplicateDelivery { cell: CellCoord },
    #[error("d_max must be a finite nonnegative number, got {0}")]
    BadDMax(f64),
}

/// Failure to turn text into a valid [`GridInstance`].
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance JSON, line {line} column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Out-of-bounds coordinate handed to an operation that requires bounds.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("cell {cell} is out of bounds for a {rows}x{cols} grid")]
pub struct OutOfBoundsError {
    pub cell: CellCoord,
    pub rows: usize,
    pub cols: usize,
}

impl GridInstance {
    /// An empty rows x cols world with the default travel distance and
    /// endpoints pinned to the top-left corner.
    pub fn empty(rows: usize, cols: usize) -> Self {
        GridInstance {
            rows,
            cols,
            obstacles: BTreeSet::new(),
            stations: BTreeSet::new(),
            endpoints: [CellCoord::new(0, 0), CellCoord::new(0, 0)],
            warehouses: Vec::new(),
            deliveries: Vec::new(),
            d_max: DEFAULT_D_MAX,
            depot: None,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn in_bounds(&self, c: CellCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    /// Row-major index of a cell; callers must ensure bounds.
    pub fn cell_index(&self, c: CellCoord) -> usize {
        c.row * self.cols + c.col
    }

    pub fn cell_at(&self, index: usize) -> CellCoord {
        CellCoord::new(index / self.cols, index % self.cols)
    }

    /// True iff the cell is in bounds and not an obstacle.
    pub fn is_traversable(&self, c: CellCoord) -> bool {
        self.in_bounds(c) && !self.obstacles.contains(&c)
    }

    /// The in-bounds cells at Chebyshev distance exactly 1 from `c`, in
    /// row-major order. Obstacles are not filtered; callers decide.
    pub fn moore_neighbors(&self, c: CellCoord) -> Result<Vec<CellCoord>, OutOfBoundsError> {
        if !self.in_bounds(c) {
            return Err(OutOfBoundsError { cell: c, rows: self.rows, cols: self.cols });
        }
        Ok(self.neighbors_unchecked(c))
    }

    pub(crate) fn neighbors_unchecked(&self, c: CellCoord) -> Vec<CellCoord> {
        let mut out = Vec::with_capacity(8);
        let r0 = c.row.saturating_sub(1);
        let c0 = c.col.saturating_sub(1);
        for r in r0..=(c.row + 1).min(self.rows.saturating_sub(1)) {
            for col in c0..=(c.col + 1).min(self.cols.saturating_sub(1)) {
                let n = CellCoord::new(r, col);
                if n != c {
                    out.push(n);
                }
            }
        }
        out
    }

    /// The closed 3x3 neighborhood of `c`, clipped to the grid.
    pub fn closed_neighborhood(&self, c: CellCoord) -> Vec<CellCoord> {
        let mut out = Vec::with_capacity(9);
        let r0 = c.row.saturating_sub(1);
        let c0 = c.col.saturating_sub(1);
        for r in r0..=(c.row + 1).min(self.rows.saturating_sub(1)) {
            for col in c0..=(c.col + 1).min(self.cols.saturating_sub(1)) {
                out.push(CellCoord::new(r, col));
            }
        }
        out
    }

    /// All traversable cells, row-major.
    pub fn free_cells(&self) -> Vec<CellCoord> {
        (0..self.num_cells())
            .map(|i| self.cell_at(i))
            .filter(|&c| !self.obstacles.contains(&c))
            .collect()
    }

    pub fn total_demand(&self) -> u32 {
        self.deliveries.iter().map(|d| d.demand).sum()
    }

    /// Check every domain invariant; parsing runs this automatically.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ValidationError::EmptyGrid { rows: self.rows, cols: self.cols });
        }
        let oob = |what: &'static str, cell: CellCoord| ValidationError::OutOfBounds {
            what,
            cell,
            rows: self.rows,
            cols: self.cols,
        };
        for &c in &self.obstacles {
            if !self.in_bounds(c) {
                return Err(oob("obstacle", c));
            }
        }
        for &c in &self.stations {
            if !self.in_bounds(c) {
                return Err(oob("station", c));
            }
            if self.obstacles.contains(&c) {
                return Err(ValidationError::StationOnObstacle { cell: c });
            }
        }
        for &c in &self.endpoints {
            if !self.in_bounds(c) {
                return Err(oob("endpoint", c));
            }
            if self.obstacles.contains(&c) {
                return Err(ValidationError::SiteOnObstacle { what: "endpoint", cell: c });
            }
        }
        for &c in &self.warehouses {
            if !self.in_bounds(c) {
                return Err(oob("warehouse", c));
            }
            if self.obstacles.contains(&c) {
                return Err(ValidationError::SiteOnObstacle { what: "warehouse", cell: c });
            }
        }
        let mut seen = BTreeSet::new();
        for d in &self.deliveries {
            if !self.in_bounds(d.cell) {
                return Err(oob("delivery", d.cell));
            }
            if self.obstacles.contains(&d.cell) {
                return Err(ValidationError::SiteOnObstacle { what: "delivery", cell: d.cell });
            }
            if d.demand == 0 {
                return Err(ValidationError::BadDemand { cell: d.cell, demand: d.demand });
            }
            if !seen.insert(d.cell) {
                return Err(ValidationError::DuplicateDelivery { cell: d.cell });
            }
        }
        if let Some(c) = self.depot {
            if !self.in_bounds(c) {
                return Err(oob("depot", c));
            }
            if self.obstacles.contains(&c) {
                return Err(ValidationError::SiteOnObstacle { what: "depot", cell: c });
            }
        }
        if !self.d_max.is_finite() || self.d_max < 0.0 {
            return Err(ValidationError::BadDMax(self.d_max));
        }
        Ok(())
    }
}

/// Parse and validate an instance document.
pub fn parse_instance(text: &str) -> Result<GridInstance, InstanceError> {
    let inst: GridInstance = serde_json::from_str(text).map_err(|e| InstanceError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    inst.validate()?;
    Ok(inst)
}

/// Serialize an instance to its canonical JSON text. Set-valued coordinate
/// arrays come out sorted; `parse_instance` round-trips the result.
pub fn render_instance(g: &GridInstance) -> String {
    let mut s = serde_json::to_string_pretty(g).expect("instance serialization cannot fail");
    s.push('\n');
    s
}
