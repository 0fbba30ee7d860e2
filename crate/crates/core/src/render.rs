//! Raster rendering of instances and solutions as binary portable pixmaps.
//!
//! Color key, matching the figures this tool produces:
//! black obstacles, blue stations and delivery sites, white free cells,
//! red endpoints and warehouses, purple visited stations (or drone 1),
//! green visited cells (or drone 2). Schedules render one frame per
//! timestep plus a trajectory summary sheet.

use thiserror::Error;

use crate::grid::{CellCoord, GridInstance};
use crate::path::PathSolution;
use crate::placement::PlacementSolution;
use crate::schedule::ScheduleSolution;

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];
pub const WHITE: Rgb = [255, 255, 255];
pub const BLUE: Rgb = [0, 0, 255];
pub const RED: Rgb = [255, 0, 0];
pub const PURPLE: Rgb = [128, 0, 128];
pub const GREEN: Rgb = [0, 128, 0];
/// Cells crossed by more than one drone on the summary sheet.
pub const OVERLAP: Rgb = [64, 64, 64];

/// Drone colors cycle through this list.
pub const DRONE_COLORS: [Rgb; 6] =
    [PURPLE, GREEN, [255, 165, 0], [0, 128, 128], [255, 0, 255], [128, 128, 0]];

/// Palette order of the optional legend strip.
pub const LEGEND_ORDER: [Rgb; 6] = [BLACK, BLUE, WHITE, RED, PURPLE, GREEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderSpec {
    pub cell_px: usize,
    pub legend: bool,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec { cell_px: 16, legend: false }
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cell_px must be at least 4, got {0}")]
    CellTooSmall(usize),
    #[error("solution cell {0} lies outside the grid")]
    OutOfBounds(CellCoord),
    #[error("solution does not fit the instance: {0}")]
    Mismatch(String),
}

/// One output image; schedules produce several.
#[derive(Debug, Clone)]
pub struct Frame {
    /// File-name suffix (empty for single-image renders).
    pub label: String,
    pub ppm: Vec<u8>,
}

struct Canvas {
    grid_rows: usize,
    grid_cols: usize,
    cell_px: usize,
    legend: bool,
    cells: Vec<Rgb>,
}

impl Canvas {
    fn new(g: &GridInstance, spec: RenderSpec) -> Self {
        Canvas {
            grid_rows: g.rows,
            grid_cols: g.cols,
            cell_px: spec.cell_px,
            legend: spec.legend,
            cells: vec![WHITE; g.rows * g.cols],
        }
    }

    fn paint(&mut self, c: CellCoord, color: Rgb) {
        self.cells[c.row * self.grid_cols + c.col] = color;
    }

    fn to_ppm(&self) -> Vec<u8> {
        let px = self.cell_px;
        let width = self.grid_cols * px;
        let legend_rows = if self.legend { px } else { 0 };
        let height = self.grid_rows * px + legend_rows;
        let mut out = Vec::with_capacity(width * height * 3 + 32);
        out.extend_from_slice(format!("P6\n{width} {height}\n255\n").as_bytes());
        for y in 0..self.grid_rows * px {
            let row = y / px;
            for x in 0..width {
                let col = x / px;
                out.extend_from_slice(&self.cells[row * self.grid_cols + col]);
            }
        }
        for _ in 0..legend_rows {
            for x in 0..width {
                let idx = x / px;
                let color = LEGEND_ORDER.get(idx).copied().unwrap_or(WHITE);
                out.extend_from_slice(&color);
            }
        }
        out
    }
}

fn check_spec(spec: RenderSpec) -> Result<(), RenderError> {
    if spec.cell_px < 4 {
        return Err(RenderError::CellTooSmall(spec.cell_px));
    }
    Ok(())
}

fn check_cells<'a>(
    g: &GridInstance,
    cells: impl IntoIterator<Item = &'a CellCoord>,
) -> Result<(), RenderError> {
    for &c in cells {
        if !g.in_bounds(c) {
            return Err(RenderError::OutOfBounds(c));
        }
    }
    Ok(())
}

fn paint_base(canvas: &mut Canvas, g: &GridInstance) {
    for d in &g.deliveries {
        canvas.paint(d.cell, BLUE);
    }
    for &s in &g.stations {
        canvas.paint(s, BLUE);
    }
    for &w in &g.warehouses {
        canvas.paint(w, RED);
    }
    for &o in &g.obstacles {
        canvas.paint(o, BLACK);
    }
}

/// Draw the bare instance.
pub fn render_instance_image(g: &GridInstance, spec: RenderSpec) -> Result<Vec<u8>, RenderError> {
    check_spec(spec)?;
    let mut canvas = Canvas::new(g, spec);
    paint_base(&mut canvas, g);
    for &e in &g.endpoints {
        canvas.paint(e, RED);
    }
    Ok(canvas.to_ppm())
}

/// Draw a placement: stations blue on white, obstacles black.
pub fn render_placement(
    g: &GridInstance,
    sol: &PlacementSolution,
    spec: RenderSpec,
) -> Result<Vec<u8>, RenderError> {
    check_spec(spec)?;
    check_cells(g, &sol.stations)?;
    let mut canvas = Canvas::new(g, spec);
    for &o in &g.obstacles {
        canvas.paint(o, BLACK);
    }
    for &s in &sol.stations {
        canvas.paint(s, BLUE);
    }
    Ok(canvas.to_ppm())
}

/// Draw a route: visited cells green, visited stations purple, unvisited
/// stations blue, endpoints red.
pub fn render_path(
    g: &GridInstance,
    sol: &PathSolution,
    spec: RenderSpec,
) -> Result<Vec<u8>, RenderError> {
    check_spec(spec)?;
    check_cells(g, &sol.cells)?;
    let mut canvas = Canvas::new(g, spec);
    for &s in &g.stations {
        canvas.paint(s, BLUE);
    }
    for &c in &sol.visited {
        canvas.paint(c, GREEN);
    }
    for &s in &sol.visited_stations {
        canvas.paint(s, PURPLE);
    }
    for &e in &g.endpoints {
        canvas.paint(e, RED);
    }
    for &o in &g.obstacles {
        canvas.paint(o, BLACK);
    }
    Ok(canvas.to_ppm())
}

/// Draw a schedule as one frame per timestep plus a summary sheet of the
/// full trajectories (overlapping cells in gray).
pub fn render_schedule(
    g: &GridInstance,
    sol: &ScheduleSolution,
    spec: RenderSpec,
) -> Result<Vec<Frame>, RenderError> {
    check_spec(spec)?;
    let horizon = match sol.traces.first() {
        Some(tr) => tr.positions.len(),
        None => return Err(RenderError::Mismatch("schedule has no traces".into())),
    };
    for tr in &sol.traces {
        if tr.positions.len() != horizon {
            return Err(RenderError::Mismatch("traces have unequal lengths".into()));
        }
        check_cells(g, &tr.positions)?;
    }

    let digits = (horizon.saturating_sub(1)).to_string().len().max(2);
    let mut frames = Vec::with_capacity(horizon + 1);
    for t in 0..horizon {
        let mut canvas = Canvas::new(g, spec);
        for d in &g.deliveries {
            canvas.paint(d.cell, BLUE);
        }
        for &w in &g.warehouses {
            canvas.paint(w, RED);
        }
        for (n, tr) in sol.traces.iter().enumerate() {
            canvas.paint(tr.positions[t], DRONE_COLORS[n % DRONE_COLORS.len()]);
        }
        frames.push(Frame { label: format!("t{t:0digits$}"), ppm: canvas.to_ppm() });
    }

    let mut summary = Canvas::new(g, spec);
    for d in &g.deliveries {
        summary.paint(d.cell, BLUE);
    }
    for &w in &g.warehouses {
        summary.paint(w, RED);
    }
    let mut touched: std::collections::BTreeMap<CellCoord, usize> = Default::default();
    for (n, tr) in sol.traces.iter().enumerate() {
        for &c in &tr.positions {
            match touched.get(&c) {
                Some(&owner) if owner != n => summary.paint(c, OVERLAP),
                Some(_) => {}
                None => {
                    touched.insert(c, n);
                    summary.paint(c, DRONE_COLORS[n % DRONE_COLORS.len()]);
                }
            }
        }
    }
    frames.push(Frame { label: "summary".into(), ppm: summary.to_ppm() });
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Delivery;
    use std::collections::{BTreeMap, BTreeSet};

    fn pixel(ppm: &[u8], width: usize, x: usize, y: usize) -> Rgb {
        let header_end = ppm
            .windows(4)
            .position(|w| w == b"255\n")
            .map(|p| p + 4)
            .unwrap();
        let off = header_end + (y * width + x) * 3;
        [ppm[off], ppm[off + 1], ppm[off + 2]]
    }

    #[test]
    fn empty_grid_renders_all_white() {
        let g = GridInstance::empty(3, 4);
        let spec = RenderSpec { cell_px: 4, legend: false };
        let ppm = render_instance_image(&g, spec).unwrap();
        assert!(ppm.starts_with(b"P6\n16 12\n255\n"));
        // Endpoints default to (0,0); everything else is white.
        assert_eq!(pixel(&ppm, 16, 15, 11), WHITE);
        assert_eq!(pixel(&ppm, 16, 7, 7), WHITE);
    }

    #[test]
    fn placement_paints_stations_blue() {
        let mut g = GridInstance::empty(2, 2);
        g.obstacles.insert(CellCoord::new(1, 0));
        let sol = PlacementSolution {
            stations: [CellCoord::new(0, 0)].into(),
            tour: vec![CellCoord::new(0, 0)],
            tour_edges: BTreeSet::new(),
            ranks: [(CellCoord::new(0, 0), 1)].into(),
            station_count: 1,
            seed: 0,
        };
        let spec = RenderSpec { cell_px: 4, legend: false };
        let ppm = render_placement(&g, &sol, spec).unwrap();
        assert_eq!(pixel(&ppm, 8, 0, 0), BLUE);
        assert_eq!(pixel(&ppm, 8, 0, 4), BLACK);
        assert_eq!(pixel(&ppm, 8, 4, 4), WHITE);
    }

    #[test]
    fn path_palette_roles() {
        let mut g = GridInstance::empty(1, 4);
        g.stations.insert(CellCoord::new(0, 1));
        g.stations.insert(CellCoord::new(0, 2));
        g.endpoints = [CellCoord::new(0, 0), CellCoord::new(0, 3)];
        let cells: Vec<CellCoord> = (0..3).map(|c| CellCoord::new(0, c)).collect();
        let visited: BTreeSet<CellCoord> = cells.iter().copied().collect();
        let sol = PathSolution {
            cells,
            visited: visited.clone(),
            visited_stations: [CellCoord::new(0, 1)].into(),
            length: 2.0,
        };
        let spec = RenderSpec { cell_px: 4, legend: false };
        let ppm = render_path(&g, &sol, spec).unwrap();
        assert_eq!(pixel(&ppm, 16, 0, 0), RED); // start endpoint
        assert_eq!(pixel(&ppm, 16, 4, 0), PURPLE); // visited station
        assert_eq!(pixel(&ppm, 16, 8, 0), GREEN); // visited free cell
        assert_eq!(pixel(&ppm, 16, 12, 0), RED); // goal endpoint
    }

    #[test]
    fn schedule_frames_track_drones() {
        let mut g = GridInstance::empty(1, 3);
        g.warehouses = vec![CellCoord::new(0, 0)];
        g.deliveries = vec![Delivery { cell: CellCoord::new(0, 2), demand: 1 }];
        let sol = ScheduleSolution {
            traces: vec![crate::schedule::DroneTrace {
                positions: vec![CellCoord::new(0, 0), CellCoord::new(0, 1)],
                flags: vec![1, 0],
                completion_time: 1,
            }],
            objective: 0.0,
            total_distance: 1.0,
            deliveries_made: BTreeMap::new(),
        };
        let spec = RenderSpec { cell_px: 4, legend: false };
        let frames = render_schedule(&g, &sol, spec).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0].label, "t00");
        assert_eq!(frames[2].label, "summary");
        // Drone sits on its warehouse at t=0, so the drone color wins.
        assert_eq!(pixel(&frames[0].ppm, 12, 0, 0), PURPLE);
        assert_eq!(pixel(&frames[1].ppm, 12, 4, 0), PURPLE);
        assert_eq!(pixel(&frames[1].ppm, 12, 8, 0), BLUE);
    }

    #[test]
    fn tiny_cell_px_is_rejected() {
        let g = GridInstance::empty(2, 2);
        let spec = RenderSpec { cell_px: 3, legend: false };
        assert!(matches!(
            render_instance_image(&g, spec),
            Err(RenderError::CellTooSmall(3))
        ));
    }

    #[test]
    fn legend_strip_appends_palette() {
        let g = GridInstance::empty(2, 8);
        let spec = RenderSpec { cell_px: 4, legend: true };
        let ppm = render_instance_image(&g, spec).unwrap();
        assert!(ppm.starts_with(b"P6\n32 12\n255\n"));
        assert_eq!(pixel(&ppm, 32, 0, 8), BLACK);
        assert_eq!(pixel(&ppm, 32, 4, 8), BLUE);
        assert_eq!(pixel(&ppm, 32, 28, 8), WHITE);
    }
}
