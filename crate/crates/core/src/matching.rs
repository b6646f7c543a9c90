//! Square min-cost assignment (shortest augmenting path Hungarian method)
//! with dual potentials kept around, so that replacing one row's costs can be
//! re-solved with a single augmentation instead of from scratch.
//!
//! Costs are non-negative integers; [`UNREACHABLE`] marks a forbidden pair.
//! Any optimum whose value reaches `UNREACHABLE` means no finite perfect
//! assignment exists.

/// Cost of a forbidden pair. Large enough that one forbidden pair outweighs
/// any finite assignment of up to a few thousand rows.
pub const UNREACHABLE: i64 = 1 << 32;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Assignment {
    n: usize,
    costs: Vec<i64>,
    u: Vec<i64>,
    v: Vec<i64>,
    col_of_row: Vec<usize>,
    row_of_col: Vec<usize>,
}

impl Assignment {
    /// Solves an `n x n` problem given row-major costs.
    pub fn solve(n: usize, costs: Vec<i64>) -> Assignment {
        assert_eq!(costs.len(), n * n, "cost matrix must be square");
        let mut a = Assignment {
            n,
            costs,
            u: vec![0; n],
            v: vec![0; n],
            col_of_row: vec![NONE; n],
            row_of_col: vec![NONE; n],
        };
        for row in 0..n {
            a.insert_row(row);
        }
        a
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Total cost, or `None` when no finite perfect assignment exists.
    pub fn value(&self) -> Option<i64> {
        let total: i64 = (0..self.n)
            .map(|r| self.costs[r * self.n + self.col_of_row[r]])
            .sum();
        (total < UNREACHABLE).then_some(total)
    }

    pub fn col_of_row(&self, row: usize) -> usize {
        self.col_of_row[row]
    }

    /// Optimal value after replacing the costs of one row, leaving `self`
    /// untouched. Only the dual and assignment vectors are copied.
    pub fn value_with_row(&self, row: usize, new_costs: &[i64]) -> Option<i64> {
        assert_eq!(new_costs.len(), self.n);
        let n = self.n;
        let cost = |r: usize, j: usize| {
            if r == row {
                new_costs[j]
            } else {
                self.costs[r * n + j]
            }
        };
        let mut duals = Duals {
            u: self.u.clone(),
            v: self.v.clone(),
            col_of_row: self.col_of_row.clone(),
            row_of_col: self.row_of_col.clone(),
        };
        duals.reinsert(n, row, &cost);
        let total: i64 = (0..n).map(|r| cost(r, duals.col_of_row[r])).sum();
        (total < UNREACHABLE).then_some(total)
    }

    /// Replaces one row's costs and restores optimality with one augmentation.
    pub fn replace_row(&mut self, row: usize, new_costs: &[i64]) {
        assert_eq!(new_costs.len(), self.n);
        let n = self.n;
        self.costs[row * n..(row + 1) * n].copy_from_slice(new_costs);
        let mut duals = self.take_duals();
        let costs = &self.costs;
        duals.reinsert(n, row, &|r, j| costs[r * n + j]);
        self.put_duals(duals);
    }

    fn insert_row(&mut self, row: usize) {
        let n = self.n;
        let mut duals = self.take_duals();
        let costs = &self.costs;
        duals.insert(n, row, &|r, j| costs[r * n + j]);
        self.put_duals(duals);
    }

    fn take_duals(&mut self) -> Duals {
        Duals {
            u: std::mem::take(&mut self.u),
            v: std::mem::take(&mut self.v),
            col_of_row: std::mem::take(&mut self.col_of_row),
            row_of_col: std::mem::take(&mut self.row_of_col),
        }
    }

    fn put_duals(&mut self, d: Duals) {
        self.u = d.u;
        self.v = d.v;
        self.col_of_row = d.col_of_row;
        self.row_of_col = d.row_of_col;
    }
}

struct Duals {
    u: Vec<i64>,
    v: Vec<i64>,
    col_of_row: Vec<usize>,
    row_of_col: Vec<usize>,
}

impl Duals {
    /// Unassigns `row`, makes its dual feasible again for its (possibly new)
    /// costs, and re-inserts it.
    fn reinsert(&mut self, n: usize, row: usize, cost: &impl Fn(usize, usize) -> i64) {
        let col = self.col_of_row[row];
        if col != NONE {
            self.row_of_col[col] = NONE;
            self.col_of_row[row] = NONE;
        }
        self.u[row] = (0..n).map(|j| cost(row, j) - self.v[j]).min().unwrap_or(0);
        self.insert(n, row, cost);
    }

    /// Dijkstra over reduced costs from an unassigned row to a free column,
    /// then flips the path. Requires `row` unassigned and duals feasible.
    fn insert(&mut self, n: usize, row: usize, cost: &impl Fn(usize, usize) -> i64) {
        let mut dist = vec![i64::MAX; n];
        let mut prev_col = vec![NONE; n];
        let mut done = vec![false; n];
        let mut visited: Vec<usize> = Vec::with_capacity(n);
        // Column we arrived through (NONE for the start row) and the row we
        // scan from next.
        let mut cur_row = row;
        let mut cur_col = NONE;
        let mut cur_dist = 0i64;
        loop {
            let ur = self.u[cur_row];
            let mut best = i64::MAX;
            let mut best_col = NONE;
            for j in 0..n {
                if done[j] {
                    continue;
                }
                let d = cur_dist + cost(cur_row, j) - ur - self.v[j];
                if d < dist[j] {
                    dist[j] = d;
                    prev_col[j] = cur_col;
                }
                if dist[j] < best {
                    best = dist[j];
                    best_col = j;
                }
            }
            done[best_col] = true;
            visited.push(best_col);
            cur_dist = best;
            cur_col = best_col;
            if self.row_of_col[best_col] == NONE {
                break;
            }
            cur_row = self.row_of_col[best_col];
        }
        let total = cur_dist;
        // Keeps reduced costs non-negative and makes the path tight.
        for &j in &visited {
            let shift = total - dist[j];
            let r = self.row_of_col[j];
            if r != NONE {
                self.u[r] += shift;
            }
            self.v[j] -= shift;
        }
        self.u[row] += total;
        let mut col = cur_col;
        loop {
            let from = prev_col[col];
            let r = if from == NONE { row } else { self.row_of_col[from] };
            self.row_of_col[col] = r;
            self.col_of_row[r] = col;
            if from == NONE {
                break;
            }
            col = from;
        }
    }
}
