//! Finger-to-key optimal transport with boolean weights.
//!
//! Every active key (row) is pressed by exactly one finger (column) and every
//! finger presses at most one key; the minimum total fingertip travel over
//! such pairings is `d_ot`. This is a rectangular linear sum assignment,
//! solved here by shortest augmenting paths on reduced costs with row/column
//! dual potentials (the Jonker-Volgenant family).
//!
//! Solutions are made unique: among all pairings whose cost is within a
//! relative `1e-12` of the optimum, the one with the lexicographically
//! smallest column sequence (rows in ascending order) is returned. The
//! brute-force oracle applies the same rule, so both agree pair for pair.

use std::fmt::Write as _;

use thiserror::Error;

use crate::keyboard::{key_press_point, KeyIndex, KeySet, KeyboardGeometry, Point3};

/// Largest row count accepted by the brute-force oracle.
pub const BRUTE_FORCE_MAX_ROWS: usize = 7;

const TIE_RTOL: f64 = 1e-12;
const NONE: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignError {
    #[error("infeasible: {rows} keys but only {cols} fingers")]
    Infeasible { rows: usize, cols: usize },
    #[error("brute force limited to {BRUTE_FORCE_MAX_ROWS} rows, got {0}")]
    TooLarge(usize),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
}

/// Dense row-major matrix of non-negative, finite costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssignError> {
        if data.len() != rows * cols {
            return Err(AssignError::InvalidCost(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(AssignError::InvalidCost(format!(
                "entries must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(AssignError::InvalidCost("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn transpose(&self) -> CostMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Total cost of `pairs`.
    pub fn cost_of(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(r, c)| self.get(r, c)).sum()
    }
}

/// A solved pairing. `pairs` holds (row, column), sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    fn from_cols(cost: &CostMatrix, col_for_row: &[usize]) -> Self {
        let pairs: Vec<(usize, usize)> = col_for_row.iter().copied().enumerate().collect();
        Self {
            total_cost: cost.cost_of(&pairs),
            pairs,
        }
    }

    pub fn column_for_row(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }

    /// Checks the transport constraints against a `rows x cols` problem:
    /// each row exactly once, each column at most once.
    pub fn satisfies_constraints(&self, rows: usize, cols: usize) -> bool {
        let mut row_hits = vec![0u32; rows];
        let mut col_hits = vec![0u32; cols];
        for &(r, c) in &self.pairs {
            if r >= rows || c >= cols {
                return false;
            }
            row_hits[r] += 1;
            col_hits[c] += 1;
        }
        row_hits.iter().all(|&h| h == 1) && col_hits.iter().all(|&h| h <= 1)
    }
}

fn tie_tolerance(optimum: f64) -> f64 {
    TIE_RTOL * optimum.abs().max(1.0)
}

/// Minimum-cost assignment of `rows` into distinct `cols` (subsets of the
/// matrix). Returns the chosen column per listed row, or `None` if there
/// are more rows than columns.
fn shortest_augmenting_path(cost: &CostMatrix, rows: &[usize], cols: &[usize]) -> Option<Vec<usize>> {
    let nr = rows.len();
    let nc = cols.len();
    if nr > nc {
        return None;
    }
    let c = |i: usize, j: usize| cost.get(rows[i], cols[j]);

    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc];
    let mut col4row = vec![NONE; nr];
    let mut row4col = vec![NONE; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut path = vec![NONE; nc];
    let mut visited_rows = vec![false; nr];
    let mut visited_cols = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur_row in 0..nr {
        shortest.fill(f64::INFINITY);
        path.fill(NONE);
        visited_rows.fill(false);
        visited_cols.fill(false);
        remaining.clear();
        remaining.extend(0..nc);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            visited_rows[i] = true;
            let mut lowest = f64::INFINITY;
            let mut pick = NONE;
            for (slot, &j) in remaining.iter().enumerate() {
                let reduced = min_val + c(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    path[j] = i;
                    shortest[j] = reduced;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    pick = slot;
                }
            }
            if pick == NONE {
                return None;
            }
            min_val = lowest;
            let j = remaining.swap_remove(pick);
            visited_cols[j] = true;
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..nr {
            if visited_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for j in 0..nc {
            if visited_cols[j] {
                v[j] -= min_val - shortest[j];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    Some(col4row.into_iter().map(|j| cols[j]).collect())
}

/// Solves the assignment exactly, with the lexicographic tie-break.
pub fn solve_assignment(cost: &CostMatrix) -> Result<Assignment, AssignError> {
    let (nr, nc) = (cost.rows(), cost.cols());
    if nr > nc {
        return Err(AssignError::Infeasible { rows: nr, cols: nc });
    }
    if nr == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }
    let all_rows: Vec<usize> = (0..nr).collect();
    let all_cols: Vec<usize> = (0..nc).collect();
    let mut current = shortest_augmenting_path(cost, &all_rows, &all_cols)
        .expect("rows <= cols is always solvable");
    let optimum = Assignment::from_cols(cost, &current).total_cost;
    let limit = optimum + tie_tolerance(optimum);

    // Fix rows in order, each to the smallest column that still admits a
    // completion within tolerance of the optimum.
    let mut used = vec![false; nc];
    let mut prefix_cost = 0.0;
    for r in 0..nr {
        let rest_rows: Vec<usize> = (r + 1..nr).collect();
        for j in 0..current[r] {
            if used[j] || prefix_cost + cost.get(r, j) > limit {
                continue;
            }
            let free: Vec<usize> = (0..nc).filter(|&c| !used[c] && c != j).collect();
            let Some(tail) = shortest_augmenting_path(cost, &rest_rows, &free) else {
                continue;
            };
            let tail_cost: f64 = rest_rows.iter().zip(&tail).map(|(&i, &c)| cost.get(i, c)).sum();
            if prefix_cost + cost.get(r, j) + tail_cost <= limit {
                current[r] = j;
                current[r + 1..].copy_from_slice(&tail);
                break;
            }
        }
        used[current[r]] = true;
        prefix_cost += cost.get(r, current[r]);
    }
    Ok(Assignment::from_cols(cost, &current))
}

/// Exhaustive oracle: enumerates every injective row-to-column mapping.
pub fn brute_force_assignment(cost: &CostMatrix) -> Result<Assignment, AssignError> {
    let (nr, nc) = (cost.rows(), cost.cols());
    if nr > nc {
        return Err(AssignError::Infeasible { rows: nr, cols: nc });
    }
    if nr > BRUTE_FORCE_MAX_ROWS {
        return Err(AssignError::TooLarge(nr));
    }

    struct Search<'a> {
        cost: &'a CostMatrix,
        used: Vec<bool>,
        cols: Vec<usize>,
        best: f64,
        limit: f64,
        found: Option<Vec<usize>>,
    }

    impl Search<'_> {
        // Finds the minimum total cost. Branches whose partial sum already
        // reaches the best are pruned (costs are non-negative).
        fn minimize(&mut self, row: usize, partial: f64) {
            if row == self.cost.rows() {
                self.best = self.best.min(partial);
                return;
            }
            for c in 0..self.cost.cols() {
                if self.used[c] {
                    continue;
                }
                let next = partial + self.cost.get(row, c);
                if next >= self.best {
                    continue;
                }
                self.used[c] = true;
                self.minimize(row + 1, next);
                self.used[c] = false;
            }
        }

        // Finds the lexicographically first mapping within `limit`.
        fn first_within(&mut self, row: usize, partial: f64) -> bool {
            if row == self.cost.rows() {
                self.found = Some(self.cols.clone());
                return true;
            }
            for c in 0..self.cost.cols() {
                if self.used[c] {
                    continue;
                }
                let next = partial + self.cost.get(row, c);
                if next > self.limit {
                    continue;
                }
                self.used[c] = true;
                self.cols.push(c);
                if self.first_within(row + 1, next) {
                    return true;
                }
                self.cols.pop();
                self.used[c] = false;
            }
            false
        }
    }

    let mut search = Search {
        cost,
        used: vec![false; nc],
        cols: Vec::with_capacity(nr),
        best: f64::INFINITY,
        limit: 0.0,
        found: None,
    };
    search.minimize(0, 0.0);
    if nr == 0 {
        search.best = 0.0;
    }
    search.limit = search.best + tie_tolerance(search.best);
    search.used.fill(false);
    search.first_within(0, 0.0);
    let cols = search.found.expect("optimum is always within its own tolerance");
    Ok(Assignment::from_cols(cost, &cols))
}

/// Result of the best-effort solve: every finger takes at most one key and
/// the keys left over are reported.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAssignment {
    pub assignment: Assignment,
    /// Rows that received no column.
    pub dropped_rows: Vec<usize>,
}

/// Like [`solve_assignment`], but when there are more rows than columns it
/// solves the transposed problem, so the min-cost subset of rows is kept.
pub fn solve_best_effort(cost: &CostMatrix) -> Result<PartialAssignment, AssignError> {
    if cost.rows() <= cost.cols() {
        return Ok(PartialAssignment {
            assignment: solve_assignment(cost)?,
            dropped_rows: Vec::new(),
        });
    }
    let t = solve_assignment(&cost.transpose())?;
    let mut pairs: Vec<(usize, usize)> = t.pairs.iter().map(|&(c, r)| (r, c)).collect();
    pairs.sort_unstable();
    let kept: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let dropped_rows = (0..cost.rows()).filter(|r| !kept.contains(r)).collect();
    Ok(PartialAssignment {
        assignment: Assignment {
            total_cost: cost.cost_of(&pairs),
            pairs,
        },
        dropped_rows,
    })
}

/// Euclidean fingertip-to-key costs for one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyCosts {
    pub costs: CostMatrix,
    /// Row keys, ascending.
    pub keys: Vec<KeyIndex>,
    /// Row targets, aligned with `keys`.
    pub targets: Vec<Point3>,
}

/// Builds the cost matrix: rows are active keys in ascending order, columns
/// are fingertips in the given order.
pub fn build_cost_matrix(fingertips: &[Point3], active: &KeySet, geom: &KeyboardGeometry) -> KeyCosts {
    let keys = active.to_vec();
    let targets: Vec<Point3> = keys.iter().map(|&k| key_press_point(k, geom)).collect();
    let data = targets
        .iter()
        .flat_map(|t| fingertips.iter().map(move |f| f.distance(*t)))
        .collect();
    KeyCosts {
        costs: CostMatrix {
            rows: keys.len(),
            cols: fingertips.len(),
            data,
        },
        keys,
        targets,
    }
}

/// Renders a cost matrix as an aligned table; selected cells are starred.
pub fn render_table(
    cost: &CostMatrix,
    assignment: Option<&Assignment>,
    row_labels: &[String],
    col_labels: &[String],
) -> String {
    let label = |labels: &[String], i: usize, prefix: &str| {
        labels.get(i).cloned().unwrap_or_else(|| format!("{prefix}{i}"))
    };
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(cost.rows() + 1);
    let mut header = vec![String::new()];
    header.extend((0..cost.cols()).map(|c| label(col_labels, c, "c")));
    cells.push(header);
    for r in 0..cost.rows() {
        let mut line = vec![label(row_labels, r, "r")];
        for c in 0..cost.cols() {
            let mark = assignment
                .map(|a| a.pairs.contains(&(r, c)))
                .unwrap_or(false);
            line.push(format!("{:.4}{}", cost.get(r, c), if mark { "*" } else { " " }));
        }
        cells.push(line);
    }
    let ncols = cost.cols() + 1;
    let widths: Vec<usize> = (0..ncols)
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if let Some(a) = assignment {
        let _ = writeln!(out, "d_ot = {:.6}", a.total_cost);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[Vec<f64>]) -> CostMatrix {
        CostMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn one_by_one() {
        let a = solve_assignment(&m(&[vec![0.3]])).unwrap();
        assert_eq!(a.pairs, vec![(0, 0)]);
        assert_eq!(a.total_cost, 0.3);
    }

    #[test]
    fn uncrossed_pairing() {
        // keys at x = {0, 1}, fingers at x = {0.1, 0.9}
        let cost = m(&[vec![0.1, 0.9], vec![0.9, 0.1]]);
        let a = solve_assignment(&cost).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert!((a.total_cost - 0.2).abs() < 1e-12);
    }

    #[test]
    fn brute_force_small() {
        let a = brute_force_assignment(&m(&[vec![1.0, 2.0], vec![2.0, 1.0]])).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost, 2.0);
        let row = brute_force_assignment(&m(&[vec![0.5, 0.2, 0.9, 0.2]])).unwrap();
        assert_eq!(row.pairs, vec![(0, 1)]);
    }

    #[test]
    fn errors() {
        let tall = m(&[vec![1.0], vec![2.0]]);
        assert_eq!(solve_assignment(&tall), Err(AssignError::Infeasible { rows: 2, cols: 1 }));
        assert_eq!(brute_force_assignment(&tall), Err(AssignError::Infeasible { rows: 2, cols: 1 }));
        let big = CostMatrix::new(8, 8, vec![1.0; 64]).unwrap();
        assert_eq!(brute_force_assignment(&big), Err(AssignError::TooLarge(8)));
        assert!(CostMatrix::new(1, 2, vec![1.0, -1.0]).is_err());
        assert!(CostMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(CostMatrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let flat = CostMatrix::new(3, 5, vec![1.0; 15]).unwrap();
        let a = solve_assignment(&flat).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        // Two optima of cost 2: (0,1),(1,0) and (0,0),(1,1).
        let cost = m(&[vec![1.0, 1.0, 5.0], vec![1.0, 1.0, 5.0]]);
        assert_eq!(solve_assignment(&cost).unwrap().pairs, vec![(0, 0), (1, 1)]);
        let cost = m(&[vec![3.0, 1.0, 1.0], vec![0.0, 9.0, 0.0]]);
        let a = solve_assignment(&cost).unwrap();
        assert_eq!(a, brute_force_assignment(&cost).unwrap());
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn agrees_with_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let rows = rng.gen_range(1..=6);
            let cols = rng.gen_range(rows..=9);
            // Coarse values force many exact ties.
            let data = (0..rows * cols).map(|_| f64::from(rng.gen_range(0..4u8))).collect();
            let cost = CostMatrix::new(rows, cols, data).unwrap();
            let a = solve_assignment(&cost).unwrap();
            let b = brute_force_assignment(&cost).unwrap();
            assert_eq!(a, b, "{cost:?}");
        }
    }

    #[test]
    fn best_effort_drops_costliest_keys() {
        // three keys, two fingers; key 1 is far from both
        let cost = m(&[vec![0.1, 0.5], vec![3.0, 3.0], vec![0.5, 0.1]]);
        let p = solve_best_effort(&cost).unwrap();
        assert_eq!(p.assignment.pairs, vec![(0, 0), (2, 1)]);
        assert_eq!(p.dropped_rows, vec![1]);
        assert!((p.assignment.total_cost - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cost_matrix_geometry() {
        let geom = KeyboardGeometry::default();
        let key = KeyIndex::new(39).unwrap();
        let at_key = key_press_point(key, &geom);
        let keys: KeySet = [key].into_iter().collect();
        let kc = build_cost_matrix(&[at_key], &keys, &geom);
        assert_eq!(kc.costs.rows(), 1);
        assert_eq!(kc.costs.get(0, 0), 0.0);

        let g0 = KeyboardGeometry {
            origin: Point3::new(0.03 - 0.0225 * 0.5, 0.04, 0.0),
            ..geom
        };
        let a0: KeySet = [KeyIndex::new(0).unwrap()].into_iter().collect();
        let kc = build_cost_matrix(&[Point3::ZERO], &a0, &g0);
        assert!((kc.costs.get(0, 0) - 0.05).abs() < 1e-15);

        let two: KeySet = [KeyIndex::new(10).unwrap(), KeyIndex::new(3).unwrap()].into_iter().collect();
        let kc = build_cost_matrix(&[Point3::ZERO; 10], &two, &geom);
        assert_eq!((kc.costs.rows(), kc.costs.cols()), (2, 10));
        assert_eq!(kc.keys[0].index(), 3);
    }

    #[test]
    fn table_marks_selection() {
        let cost = m(&[vec![0.1, 0.9], vec![0.9, 0.1]]);
        let a = solve_assignment(&cost).unwrap();
        let t = render_table(&cost, Some(&a), &["k39".into()], &[]);
        assert!(t.contains("k39"));
        assert!(t.contains("0.1000*"));
        assert!(t.contains("d_ot = 0.200000"));
    }
}
