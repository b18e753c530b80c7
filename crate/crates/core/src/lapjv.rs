//! Dense linear assignment via Jonker-Volgenant: column reduction, augmenting
//! row reduction, then shortest augmenting paths for the remaining free rows.
//!
//! Rectangular instances are padded to square with a constant cost one above
//! the largest entry. [`brute_force_assignment`] enumerates injections and is
//! the reference the solver is tested against.

use itertools::Itertools;

use crate::Real;

/// Absolute tolerance separating reduced costs during row reduction.
pub const EPSILON: f64 = 1e-9;

/// Largest row count accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_MAX_ROWS: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LapError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("row-major data has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite cost at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("brute force limited to {BRUTE_FORCE_MAX_ROWS} rows, got {0}")]
    TooLarge(usize),
}

/// Row-major dense cost matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LapError> {
        if rows == 0 || cols == 0 {
            return Err(LapError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LapError::Shape {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LapError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LapError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(LapError::Shape {
                expected: cols,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self, LapError> {
        let data = (0..rows * cols).map(|p| f(p / cols, p % cols)).collect();
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let data = (0..self.rows * self.cols)
            .map(|p| self.get(p % self.rows, p / self.rows))
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn max_entry(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Sum of costs over the assigned pairs, accumulated in row order.
    pub fn cost_of(&self, row_to_col: &[Option<usize>]) -> T {
        row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| self.get(r, c)))
            .fold(T::zero(), |acc, v| acc + v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// Column assigned to each row, `None` for rows left out of a
    /// rectangular instance with more rows than columns.
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: T,
}

impl<T> Assignment<T> {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

/// Row and column potentials at termination.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals<T> {
    pub row: Vec<T>,
    pub col: Vec<T>,
}

pub fn solve_square<T: Real>(m: &CostMatrix<T>) -> Result<Assignment<T>, LapError> {
    solve_square_with_duals(m).map(|(a, _)| a)
}

pub fn solve_square_with_duals<T: Real>(
    m: &CostMatrix<T>,
) -> Result<(Assignment<T>, Duals<T>), LapError> {
    if !m.is_square() {
        return Err(LapError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let (row_sol, duals) = JonkerVolgenant::new(m).solve();
    let row_to_col: Vec<Option<usize>> = row_sol.into_iter().map(Some).collect();
    let total_cost = m.cost_of(&row_to_col);
    Ok((
        Assignment {
            row_to_col,
            total_cost,
        },
        duals,
    ))
}

/// Minimum-cost assignment of a possibly rectangular matrix. With
/// `rows <= cols` every row is assigned; otherwise every column is, and the
/// surplus rows are left unassigned.
pub fn solve_rectangular<T: Real>(m: &CostMatrix<T>) -> Result<Assignment<T>, LapError> {
    if m.rows > m.cols {
        let inner = solve_rectangular(&m.transpose())?;
        let mut row_to_col = vec![None; m.rows];
        for (col, row) in inner.pairs() {
            row_to_col[row] = Some(col);
        }
        let total_cost = m.cost_of(&row_to_col);
        return Ok(Assignment {
            row_to_col,
            total_cost,
        });
    }
    if m.is_square() {
        return solve_square(m);
    }
    let pad = m.max_entry() + T::one();
    let padded = CostMatrix::from_fn(
        m.cols,
        m.cols,
        |r, c| {
            if r < m.rows {
                m.get(r, c)
            } else {
                pad
            }
        },
    )?;
    let full = solve_square(&padded)?;
    let row_to_col = full.row_to_col[..m.rows].to_vec();
    let total_cost = m.cost_of(&row_to_col);
    Ok(Assignment {
        row_to_col,
        total_cost,
    })
}

/// Exact optimum by enumerating every injection of rows into columns
/// (or of columns into rows when the matrix is tall).
pub fn brute_force_assignment<T: Real>(m: &CostMatrix<T>) -> Result<Assignment<T>, LapError> {
    if m.rows > m.cols {
        let inner = brute_force_assignment(&m.transpose())?;
        let mut row_to_col = vec![None; m.rows];
        for (col, row) in inner.pairs() {
            row_to_col[row] = Some(col);
        }
        let total_cost = m.cost_of(&row_to_col);
        return Ok(Assignment {
            row_to_col,
            total_cost,
        });
    }
    if m.rows > BRUTE_FORCE_MAX_ROWS {
        return Err(LapError::TooLarge(m.rows));
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    for cols in (0..m.cols).permutations(m.rows) {
        let cost = cols
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (r, &c)| acc + m.get(r, c));
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, cols));
        }
    }
    let (total_cost, cols) = best.expect("at least one injection");
    Ok(Assignment {
        row_to_col: cols.into_iter().map(Some).collect(),
        total_cost,
    })
}

const UNASSIGNED: usize = usize::MAX;

struct JonkerVolgenant<'a, T> {
    costs: &'a CostMatrix<T>,
    dim: usize,
    row_sol: Vec<usize>,
    col_sol: Vec<usize>,
    v: Vec<T>,
    free: Vec<usize>,
    eps: T,
}

impl<'a, T: Real> JonkerVolgenant<'a, T> {
    fn new(costs: &'a CostMatrix<T>) -> Self {
        let dim = costs.rows;
        Self {
            costs,
            dim,
            row_sol: vec![UNASSIGNED; dim],
            col_sol: vec![UNASSIGNED; dim],
            v: vec![T::zero(); dim],
            free: Vec::with_capacity(dim),
            eps: T::lit(EPSILON),
        }
    }

    #[inline]
    fn cost(&self, i: usize, j: usize) -> T {
        self.costs.get(i, j)
    }

    fn solve(mut self) -> (Vec<usize>, Duals<T>) {
        self.column_reduction();
        for _ in 0..2 {
            if self.free.is_empty() {
                break;
            }
            self.augmenting_row_reduction();
        }
        let free = std::mem::take(&mut self.free);
        for row in free {
            self.augment(row);
        }
        let row = (0..self.dim)
            .map(|i| {
                let j = self.row_sol[i];
                self.cost(i, j) - self.v[j]
            })
            .collect();
        let duals = Duals { row, col: self.v };
        (self.row_sol, duals)
    }

    // Column reduction followed by reduction transfer.
    fn column_reduction(&mut self) {
        let n = self.dim;
        let mut matches = vec![0usize; n];
        for j in (0..n).rev() {
            let mut imin = 0;
            let mut min = self.cost(0, j);
            for i in 1..n {
                let c = self.cost(i, j);
                if c < min {
                    min = c;
                    imin = i;
                }
            }
            self.v[j] = min;
            matches[imin] += 1;
            if matches[imin] == 1 {
                self.row_sol[imin] = j;
                self.col_sol[j] = imin;
            } else if self.v[j] < self.v[self.row_sol[imin]] {
                let j1 = self.row_sol[imin];
                self.row_sol[imin] = j;
                self.col_sol[j] = imin;
                self.col_sol[j1] = UNASSIGNED;
            } else {
                self.col_sol[j] = UNASSIGNED;
            }
        }
        for i in 0..n {
            match matches[i] {
                0 => self.free.push(i),
                1 => {
                    let j1 = self.row_sol[i];
                    let min = (0..n)
                        .filter(|&j| j != j1)
                        .map(|j| self.cost(i, j) - self.v[j])
                        .fold(T::infinity(), T::min);
                    if min.is_finite() {
                        self.v[j1] = self.v[j1] - min;
                    }
                }
                _ => {}
            }
        }
    }

    fn augmenting_row_reduction(&mut self) {
        let n = self.dim;
        let mut pending = std::mem::take(&mut self.free);
        let mut k = 0;
        while k < pending.len() {
            let i = pending[k];
            k += 1;
            // first and second smallest reduced cost in row i
            let mut umin = self.cost(i, 0) - self.v[0];
            let mut j1 = 0;
            let mut usubmin = T::infinity();
            let mut j2 = UNASSIGNED;
            for j in 1..n {
                let h = self.cost(i, j) - self.v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let strictly_better = usubmin - umin > self.eps;
            let mut i0 = self.col_sol[j1];
            if strictly_better {
                self.v[j1] = self.v[j1] - (usubmin - umin);
            } else if i0 != UNASSIGNED && j2 != UNASSIGNED {
                j1 = j2;
                i0 = self.col_sol[j2];
            }
            self.row_sol[i] = j1;
            self.col_sol[j1] = i;
            if i0 != UNASSIGNED {
                self.row_sol[i0] = UNASSIGNED;
                if strictly_better {
                    // retry the displaced row immediately
                    k -= 1;
                    pending[k] = i0;
                } else {
                    self.free.push(i0);
                }
            }
        }
    }

    // Dijkstra-style shortest augmenting path from `free_row`.
    fn augment(&mut self, free_row: usize) {
        let n = self.dim;
        let mut d: Vec<T> = (0..n).map(|j| self.cost(free_row, j) - self.v[j]).collect();
        let mut pred = vec![free_row; n];
        let mut cols: Vec<usize> = (0..n).collect();
        // cols[..low] are scanned, cols[low..up] hold the current minimum,
        // cols[up..] are still to be scanned
        let mut low = 0;
        let mut up = 0;
        let mut last = 0;
        let mut min = T::zero();
        let end_of_path = 'search: loop {
            if up == low {
                last = low;
                min = d[cols[up]];
                up += 1;
                for k in up..n {
                    let j = cols[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        cols.swap(k, up);
                        up += 1;
                    }
                }
                let free_col = cols[low..up]
                    .iter()
                    .copied()
                    .filter(|&j| self.col_sol[j] == UNASSIGNED)
                    .min();
                if let Some(j) = free_col {
                    break 'search j;
                }
            }
            let j1 = cols[low];
            low += 1;
            let i = self.col_sol[j1];
            let h = self.cost(i, j1) - self.v[j1] - min;
            let mut k = up;
            while k < n {
                let j = cols[k];
                let v2 = self.cost(i, j) - self.v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    d[j] = v2;
                    if v2 == min {
                        if self.col_sol[j] == UNASSIGNED {
                            break 'search j;
                        }
                        cols.swap(k, up);
                        up += 1;
                    }
                }
                k += 1;
            }
        };
        // update potentials of the scanned columns
        for &j in &cols[..last] {
            self.v[j] = self.v[j] + d[j] - min;
        }
        let mut j = end_of_path;
        loop {
            let i = pred[j];
            self.col_sol[j] = i;
            let next = self.row_sol[i];
            self.row_sol[i] = j;
            if i == free_row {
                break;
            }
            j = next;
        }
    }
}
