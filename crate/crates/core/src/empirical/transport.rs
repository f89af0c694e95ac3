//! Dense min-cost transportation solver (simplex on the transportation
//! polytope) used as the exact engine behind the bounded-Lipschitz distance.
//!
//! The caller hands over source masses `a`, sink masses `b` with equal totals
//! and a dense cost matrix; costs here are always a metric truncated at 2,
//! but the solver only needs finiteness. It returns the optimal value, the
//! dual potentials, and the basic flows so the caller can verify optimality
//! independently (dual feasibility, complementary slackness, zero duality
//! gap) instead of trusting the pivot loop.
//!
//! Implementation: northwest-corner start, then MODI pivots with Dantzig
//! pricing and a candidate cache; after a generous pivot budget the pricing
//! degrades to Bland's rule, whose termination guarantee covers degenerate
//! ties. Exceeding the overall budget is reported as a solver error, never
//! as a silent suboptimal answer.

use crate::error::{Error, Result};

pub(crate) struct TransportOutcome {
    pub value: f64,
    /// row (source) potentials
    pub u: Vec<f64>,
    /// column (sink) potentials
    pub v: Vec<f64>,
    /// basic cells (i, j, flow); flows can be 0 on degenerate bases
    pub cells: Vec<(usize, usize, f64)>,
}

/// Reduced costs below this are treated as improving directions.
const PIVOT_TOL: f64 = 1e-12;
const CANDIDATE_CACHE: usize = 64;

struct Basis {
    n: usize,
    m: usize,
    /// slot -> (row, col); slots are stable across pivots
    cell: Vec<(usize, usize)>,
    flow: Vec<f64>,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
}

impl Basis {
    fn northwest(a: &[f64], b: &[f64]) -> Basis {
        let (n, m) = (a.len(), b.len());
        let mut cell = Vec::with_capacity(n + m - 1);
        let mut flow = Vec::with_capacity(n + m - 1);
        let mut row_adj = vec![Vec::new(); n];
        let mut col_adj = vec![Vec::new(); m];
        let mut a_rem = a.to_vec();
        let mut b_rem = b.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = a_rem[i].min(b_rem[j]).max(0.0);
            let slot = cell.len();
            cell.push((i, j));
            flow.push(q);
            row_adj[i].push(slot);
            col_adj[j].push(slot);
            a_rem[i] -= q;
            b_rem[j] -= q;
            if i == n - 1 && j == m - 1 {
                break;
            }
            // advance exactly one index per step: n + m - 1 cells total, and
            // the staircase is a spanning tree even with degenerate zeros
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 {
                i += 1;
            } else if a_rem[i] <= b_rem[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Basis { n, m, cell, flow, row_adj, col_adj }
    }

    /// Solve `u_i + v_j = c_ij` on the basis tree (u[0] = 0).
    fn duals(&self, cost: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut u = vec![f64::NAN; self.n];
        let mut v = vec![f64::NAN; self.m];
        let mut stack = Vec::with_capacity(self.n + self.m);
        u[0] = 0.0;
        stack.push(Node::Row(0));
        while let Some(node) = stack.pop() {
            match node {
                Node::Row(r) => {
                    for &s in &self.row_adj[r] {
                        let (_, c) = self.cell[s];
                        if v[c].is_nan() {
                            v[c] = cost[r * self.m + c] - u[r];
                            stack.push(Node::Col(c));
                        }
                    }
                }
                Node::Col(c) => {
                    for &s in &self.col_adj[c] {
                        let (r, _) = self.cell[s];
                        if u[r].is_nan() {
                            u[r] = cost[r * self.m + c] - v[c];
                            stack.push(Node::Row(r));
                        }
                    }
                }
            }
        }
        if u.iter().any(|x| x.is_nan()) || v.iter().any(|x| x.is_nan()) {
            return Err(Error::Solver("transport basis is not a spanning tree".into()));
        }
        Ok((u, v))
    }

    /// Tree path from row `ei` to col `ej` as basis slots.
    fn path(&self, ei: usize, ej: usize) -> Result<Vec<usize>> {
        // predecessor slot per node, encoded: rows 0..n, cols n..n+m
        let mut pred = vec![usize::MAX; self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        let mut queue = std::collections::VecDeque::new();
        seen[ei] = true;
        queue.push_back(Node::Row(ei));
        'bfs: while let Some(node) = queue.pop_front() {
            match node {
                Node::Row(r) => {
                    for &s in &self.row_adj[r] {
                        let (_, c) = self.cell[s];
                        if !seen[self.n + c] {
                            seen[self.n + c] = true;
                            pred[self.n + c] = s;
                            if c == ej {
                                break 'bfs;
                            }
                            queue.push_back(Node::Col(c));
                        }
                    }
                }
                Node::Col(c) => {
                    for &s in &self.col_adj[c] {
                        let (r, _) = self.cell[s];
                        if !seen[r] {
                            seen[r] = true;
                            pred[r] = s;
                            queue.push_back(Node::Row(r));
                        }
                    }
                }
            }
        }
        if !seen[self.n + ej] {
            return Err(Error::Solver("transport basis lost connectivity".into()));
        }
        let mut slots = Vec::new();
        let mut node = self.n + ej;
        loop {
            let s = pred[node];
            slots.push(s);
            let (r, c) = self.cell[s];
            // step to the other endpoint of the edge
            node = if node == self.n + c { r } else { self.n + c };
            if node == ei {
                break;
            }
        }
        slots.reverse();
        Ok(slots)
    }

    /// Pivot the entering cell (ei, ej) into the basis.
    fn pivot(&mut self, ei: usize, ej: usize) -> Result<()> {
        let path = self.path(ei, ej)?;
        if path.len() % 2 == 0 {
            return Err(Error::Solver("transport cycle has even path length".into()));
        }
        // slots at odd positions (1-indexed) lose flow
        let mut theta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        for (k, &s) in path.iter().enumerate() {
            if k % 2 == 0 && self.flow[s] < theta {
                theta = self.flow[s];
                leave_pos = k;
            }
        }
        for (k, &s) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[s] -= theta;
            } else {
                self.flow[s] += theta;
            }
        }
        let leaving = path[leave_pos];
        let (lr, lc) = self.cell[leaving];
        self.row_adj[lr].retain(|&s| s != leaving);
        self.col_adj[lc].retain(|&s| s != leaving);
        self.cell[leaving] = (ei, ej);
        self.flow[leaving] = theta;
        self.row_adj[ei].push(leaving);
        self.col_adj[ej].push(leaving);
        Ok(())
    }
}

enum Node {
    Row(usize),
    Col(usize),
}

/// Exact min-cost transport of `a` onto `b` under the dense `cost` matrix
/// (row-major, `a.len() x b.len()`). Totals must match within 1e-9.
pub(crate) fn min_cost_transport(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
) -> Result<TransportOutcome> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::Solver("transport needs nonempty sides".into()));
    }
    if cost.len() != n * m {
        return Err(Error::Solver("cost matrix shape mismatch".into()));
    }
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    if (sa - sb).abs() > 1e-9 * sa.abs().max(1.0) {
        return Err(Error::Solver(format!("unbalanced transport: {sa} vs {sb}")));
    }
    if a.iter().chain(b).any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Solver("transport masses must be nonnegative".into()));
    }

    let mut basis = Basis::northwest(a, b);
    let bland_after = 50 * (n + m) + 1000;
    let budget = 400 * (n + m) + 20_000;
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for iter in 0..budget {
        let (u, v) = basis.duals(cost)?;
        let bland = iter >= bland_after;

        // try the candidate cache first: entering cells only need SOME
        // negative reduced cost, freshness is re-checked against current duals
        let mut entering = None;
        if !bland {
            while let Some(&(i, j)) = candidates.last() {
                if cost[i * m + j] - u[i] - v[j] < -PIVOT_TOL {
                    entering = Some((i, j));
                    break;
                }
                candidates.pop();
            }
        }
        if entering.is_none() {
            candidates.clear();
            if bland {
                'scan: for i in 0..n {
                    for j in 0..m {
                        if cost[i * m + j] - u[i] - v[j] < -PIVOT_TOL {
                            entering = Some((i, j));
                            break 'scan;
                        }
                    }
                }
            } else {
                // full Dantzig scan, keeping runners-up for later pivots
                let mut pool: Vec<(f64, usize, usize)> = Vec::new();
                for i in 0..n {
                    let (ui, row) = (u[i], &cost[i * m..(i + 1) * m]);
                    for (j, c) in row.iter().enumerate() {
                        let r = c - ui - v[j];
                        if r < -PIVOT_TOL {
                            pool.push((r, i, j));
                        }
                    }
                }
                pool.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
                if let Some(&(_, i, j)) = pool.last() {
                    entering = Some((i, j));
                    let keep = pool.len().saturating_sub(1).min(CANDIDATE_CACHE);
                    candidates =
                        pool[pool.len() - 1 - keep..pool.len() - 1].iter().map(|&(_, i, j)| (i, j)).collect();
                }
            }
        } else {
            candidates.pop();
        }

        match entering {
            None => {
                let value = basis
                    .cell
                    .iter()
                    .zip(&basis.flow)
                    .map(|(&(i, j), f)| f * cost[i * m + j])
                    .sum();
                let cells = basis
                    .cell
                    .iter()
                    .zip(&basis.flow)
                    .map(|(&(i, j), &f)| (i, j, f))
                    .collect();
                return Ok(TransportOutcome { value, u, v, cells });
            }
            Some((i, j)) => basis.pivot(i, j)?,
        }
    }
    Err(Error::Solver(format!("transport pivot budget exhausted on {n}x{m} instance")))
}
