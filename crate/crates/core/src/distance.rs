//! Obstacle-aware all-pairs shortest distances over the 8-connected grid.
//!
//! Lateral hops cost 1, diagonal hops sqrt(2), and obstacle cells are
//! unreachable (+infinity), so every entry has the form `p + q*sqrt(2)`.
//! The matrix is built with one Dijkstra sweep per traversable source and
//! is immutable afterwards.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;

use crate::grid::{CellCoord, GridInstance, OutOfBoundsError};

/// Comparison slack for distances; far below the smallest gap between
/// distinct `p + q*sqrt(2)` sums at desk scale.
pub const DIST_EPS: f64 = 1e-9;

/// Whether a diagonal step may pass between two diagonally touching
/// obstacles. Traversability is defined per cell, so the default permits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CornerRule {
    #[default]
    Permitted,
    Forbidden,
}

/// Dense table of shortest obstacle-avoiding distances between all cell
/// pairs. `+inf` marks obstacle endpoints and disconnected pairs.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    d: Vec<f64>,
}

#[derive(PartialEq)]
struct QueueEntry {
    dist: f64,
    cell: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the smallest distance first.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Build the distance matrix with the default corner rule.
pub fn build_distance_matrix(g: &GridInstance) -> DistanceMatrix {
    build_distance_matrix_with(g, CornerRule::default())
}

/// Build the distance matrix under an explicit corner rule.
pub fn build_distance_matrix_with(g: &GridInstance, rule: CornerRule) -> DistanceMatrix {
    let n = g.num_cells();
    let mut d = vec![f64::INFINITY; n * n];
    let traversable: Vec<bool> = (0..n).map(|i| g.is_traversable(g.cell_at(i))).collect();

    for source in 0..n {
        if !traversable[source] {
            continue;
        }
        dijkstra_from(g, &traversable, rule, source, &mut d[source * n..(source + 1) * n]);
    }
    DistanceMatrix { rows: g.rows, cols: g.cols, d }
}

fn dijkstra_from(
    g: &GridInstance,
    traversable: &[bool],
    rule: CornerRule,
    source: usize,
    dist: &mut [f64],
) {
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(QueueEntry { dist: 0.0, cell: source });

    while let Some(QueueEntry { dist: du, cell: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        let uc = g.cell_at(u);
        for nc in g.neighbors_unchecked(uc) {
            let v = g.cell_index(nc);
            if !traversable[v] {
                continue;
            }
            if rule == CornerRule::Forbidden && uc.row != nc.row && uc.col != nc.col {
                let side_a = CellCoord::new(uc.row, nc.col);
                let side_b = CellCoord::new(nc.row, uc.col);
                if !g.is_traversable(side_a) || !g.is_traversable(side_b) {
                    continue;
                }
            }
            let alt = du + uc.hop_cost(nc);
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(QueueEntry { dist: alt, cell: v });
            }
        }
    }
}

impl DistanceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    fn index_of(&self, c: CellCoord) -> usize {
        c.row * self.cols + c.col
    }

    pub fn in_bounds(&self, c: CellCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    /// Table lookup without bounds checking; used by the solvers on
    /// already-validated coordinates.
    pub fn get(&self, a: CellCoord, b: CellCoord) -> f64 {
        self.d[self.index_of(a) * self.num_cells() + self.index_of(b)]
    }

    /// True when `a` can reach `b` within `limit` (at tolerance [`DIST_EPS`]).
    pub fn within(&self, a: CellCoord, b: CellCoord, limit: f64) -> bool {
        self.get(a, b) <= limit + DIST_EPS
    }

    /// Dump as CSV with header `i,j,k,l,distance`; infinity prints as `inf`.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,k,l,distance")?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..self.rows {
                    for l in 0..self.cols {
                        let d = self.get(CellCoord::new(i, j), CellCoord::new(k, l));
                        if d.is_finite() {
                            writeln!(w, "{i},{j},{k},{l},{d}")?;
                        } else {
                            writeln!(w, "{i},{j},{k},{l},inf")?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Bounds-checked lookup of the shortest distance between two cells.
pub fn shortest_distance(
    m: &DistanceMatrix,
    a: CellCoord,
    b: CellCoord,
) -> Result<f64, OutOfBoundsError> {
    for c in [a, b] {
        if !m.in_bounds(c) {
            return Err(OutOfBoundsError { cell: c, rows: m.rows, cols: m.cols });
        }
    }
    Ok(m.get(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridInstance;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    /// Exhaustive DFS over simple paths; the independent oracle for small
    /// grids. Returns +inf when no obstacle-avoiding path exists.
    fn min_simple_path_cost(g: &GridInstance, from: CellCoord, to: CellCoord) -> f64 {
        fn dfs(
            g: &GridInstance,
            at: CellCoord,
            to: CellCoord,
            cost: f64,
            seen: &mut Vec<CellCoord>,
            best: &mut f64,
        ) {
            if cost >= *best {
                return;
            }
            if at == to {
                *best = cost;
                return;
            }
            for n in g.neighbors_unchecked(at) {
                if g.is_traversable(n) && !seen.contains(&n) {
                    seen.push(n);
                    dfs(g, n, to, cost + at.hop_cost(n), seen, best);
                    seen.pop();
                }
            }
        }
        if !g.is_traversable(from) || !g.is_traversable(to) {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        let mut seen = vec![from];
        dfs(g, from, to, 0.0, &mut seen, &mut best);
        best
    }

    fn grid_with_obstacles(rows: usize, cols: usize, obstacles: &[(usize, usize)]) -> GridInstance {
        let mut g = GridInstance::empty(rows, cols);
        for &(r, c) in obstacles {
            g.obstacles.insert(CellCoord::new(r, c));
        }
        g
    }

    #[test]
    fn single_hops() {
        let g = GridInstance::empty(3, 3);
        let m = build_distance_matrix(&g);
        assert!((m.get(CellCoord::new(0, 0), CellCoord::new(0, 1)) - 1.0).abs() < DIST_EPS);
        assert!((m.get(CellCoord::new(0, 0), CellCoord::new(1, 1)) - SQRT_2).abs() < DIST_EPS);
        assert_eq!(m.get(CellCoord::new(1, 1), CellCoord::new(1, 1)), 0.0);
    }

    #[test]
    fn center_obstacle_detour() {
        let g = grid_with_obstacles(3, 3, &[(1, 1)]);
        let m = build_distance_matrix(&g);
        let got = m.get(CellCoord::new(0, 0), CellCoord::new(2, 2));
        let oracle = min_simple_path_cost(&g, CellCoord::new(0, 0), CellCoord::new(2, 2));
        assert!((got - (2.0 + SQRT_2)).abs() < DIST_EPS);
        assert!((got - oracle).abs() < DIST_EPS);
    }

    #[test]
    fn obstacle_pairs_are_infinite() {
        let g = grid_with_obstacles(3, 3, &[(1, 1)]);
        let m = build_distance_matrix(&g);
        assert!(m.get(CellCoord::new(0, 0), CellCoord::new(1, 1)).is_infinite());
        assert!(m.get(CellCoord::new(1, 1), CellCoord::new(1, 1)).is_infinite());
    }

    #[test]
    fn line_grid_distance() {
        let g = GridInstance::empty(1, 3);
        let m = build_distance_matrix(&g);
        let got = m.get(CellCoord::new(0, 0), CellCoord::new(0, 2));
        let oracle = min_simple_path_cost(&g, CellCoord::new(0, 0), CellCoord::new(0, 2));
        assert!((got - 2.0).abs() < DIST_EPS);
        assert!((got - oracle).abs() < DIST_EPS);
    }

    #[test]
    fn shortest_distance_checks_bounds() {
        let g = GridInstance::empty(2, 2);
        let m = build_distance_matrix(&g);
        assert!(shortest_distance(&m, CellCoord::new(0, 0), CellCoord::new(2, 0)).is_err());
        assert_eq!(
            shortest_distance(&m, CellCoord::new(0, 0), CellCoord::new(0, 0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn corner_rule_blocks_squeeze() {
        let g = grid_with_obstacles(3, 3, &[(0, 1), (1, 0)]);
        let permitted = build_distance_matrix(&g);
        let forbidden = build_distance_matrix_with(&g, CornerRule::Forbidden);
        let a = CellCoord::new(0, 0);
        let b = CellCoord::new(1, 1);
        assert!((permitted.get(a, b) - SQRT_2).abs() < DIST_EPS);
        assert!(forbidden.get(a, b).is_infinite());
    }

    #[test]
    fn wall_detour_matches_enumeration() {
        let g = grid_with_obstacles(3, 4, &[(0, 1), (1, 1)]);
        let m = build_distance_matrix(&g);
        let a = CellCoord::new(0, 0);
        let b = CellCoord::new(0, 3);
        let oracle = min_simple_path_cost(&g, a, b);
        assert!((m.get(a, b) - oracle).abs() < DIST_EPS);
    }

    #[test]
    fn csv_dump_has_header_and_inf() {
        let g = grid_with_obstacles(2, 2, &[(0, 1)]);
        let m = build_distance_matrix(&g);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,k,l,distance"));
        assert!(text.contains("0,0,0,1,inf"));
        assert!(text.contains("0,0,0,0,0"));
        assert_eq!(text.lines().count(), 1 + 16);
    }

    fn seeded_grid(rows: usize, cols: usize, bits: u64) -> GridInstance {
        let mut g = GridInstance::empty(rows, cols);
        for i in 0..(rows * cols).min(48) {
            if bits & (1u64 << i) != 0 {
                g.obstacles.insert(g.cell_at(i));
            }
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn invariants_on_random_grids(rows in 2usize..8, cols in 2usize..8, bits: u64) {
            let g = seeded_grid(rows, cols, bits);
            let m = build_distance_matrix(&g);
            let n = g.num_cells();
            for a in 0..n {
                let ca = g.cell_at(a);
                if g.is_traversable(ca) {
                    prop_assert_eq!(m.get(ca, ca), 0.0);
                } else {
                    prop_assert!(m.get(ca, ca).is_infinite());
                }
                for b in 0..n {
                    let cb = g.cell_at(b);
                    let dab = m.get(ca, cb);
                    prop_assert!((dab - m.get(cb, ca)).abs() < DIST_EPS || dab.is_infinite());
                    if !g.is_traversable(ca) || !g.is_traversable(cb) {
                        prop_assert!(dab.is_infinite());
                    }
                }
            }
        }

        #[test]
        fn triangle_inequality(rows in 2usize..6, cols in 2usize..6, bits: u64) {
            let g = seeded_grid(rows, cols, bits);
            let m = build_distance_matrix(&g);
            let free = g.free_cells();
            for &a in &free {
                for &b in &free {
                    for &c in &free {
                        let direct = m.get(a, c);
                        let via = m.get(a, b) + m.get(b, c);
                        if direct.is_finite() || via.is_finite() {
                            prop_assert!(direct <= via + DIST_EPS);
                        }
                    }
                }
            }
        }

        #[test]
        fn oracle_equivalence_small(rows in 2usize..5, cols in 2usize..5, bits: u64) {
            let g = seeded_grid(rows, cols, bits);
            let m = build_distance_matrix(&g);
            let free = g.free_cells();
            prop_assume!(!free.is_empty());
            let a = free[0];
            for &b in free.iter().take(6) {
                let oracle = min_simple_path_cost(&g, a, b);
                let got = m.get(a, b);
                if oracle.is_finite() {
                    prop_assert!((got - oracle).abs() < DIST_EPS);
                } else {
                    prop_assert!(got.is_infinite());
                }
            }
        }

        #[test]
        fn adding_obstacle_never_shrinks_distances(
            rows in 2usize..6, cols in 2usize..6, bits: u64, extra in 0usize..36
        ) {
            let g = seeded_grid(rows, cols, bits);
            prop_assume!(extra < g.num_cells());
            let cell = g.cell_at(extra);
            prop_assume!(g.is_traversable(cell));
            let before = build_distance_matrix(&g);
            let mut g2 = g.clone();
            g2.obstacles.insert(cell);
            let after = build_distance_matrix(&g2);
            for a in 0..g.num_cells() {
                for b in 0..g.num_cells() {
                    let ca = g.cell_at(a);
                    let cb = g.cell_at(b);
                    let d0 = before.get(ca, cb);
                    let d1 = after.get(ca, cb);
                    if d1.is_finite() {
                        prop_assert!(d1 >= d0 - DIST_EPS);
                    }
                }
            }
        }
    }
}
