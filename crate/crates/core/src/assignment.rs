//! Matching primitives shared by every metric: confidence-ordered greedy
//! matching (AP-style) and optimal linear assignment (identity metrics,
//! tracker association).

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignError {
    /// No complete matching of size `min(rows, cols)` exists.
    #[error("no complete assignment exists")]
    Infeasible,
    #[error("cost matrix entries must be non-negative and finite")]
    InvalidCost,
}

/// Rectangular cost matrix; `None` marks a forbidden pair. Kept as an
/// explicit marker rather than a huge sentinel so feasibility is a visible
/// property of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Option<f64>>,
}

impl CostMatrix {
    /// All-forbidden matrix of the given shape.
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        CostMatrix { rows, cols, entries: vec![None; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignError> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        let mut m = CostMatrix::forbidden(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                m.set(i, j, c)?;
            }
        }
        Ok(m)
    }

    pub fn set(&mut self, row: usize, col: usize, cost: f64) -> Result<(), AssignError> {
        if !cost.is_finite() || cost < 0.0 {
            return Err(AssignError::InvalidCost);
        }
        self.entries[row * self.cols + col] = Some(cost);
        Ok(())
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.entries[row * self.cols + col]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn transposed(&self) -> CostMatrix {
        let mut t = CostMatrix::forbidden(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.entries[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }
}

/// Result of a matching: `(row, col)` pairs plus the leftovers on each side.
/// Each row and column appears at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Matching {
    fn from_pairs(pairs: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &pairs {
            row_used[r] = true;
            col_used[c] = true;
        }
        Matching {
            pairs,
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Greedy matching
// ---------------------------------------------------------------------------

/// Score-ordered greedy matching: predictions are visited by descending
/// score (ties broken by ascending nearest-truth distance, then input
/// order), each claiming its nearest still-unmatched ground truth within
/// `gate`. Rows index predictions, columns ground truths.
pub fn greedy_match<P, G>(
    preds: &[P],
    gts: &[G],
    score: impl Fn(&P) -> f64,
    distance: impl Fn(&P, &G) -> f64,
    gate: f64,
) -> Matching {
    let nearest: Vec<f64> = preds
        .iter()
        .map(|p| {
            gts.iter()
                .map(|g| distance(p, g))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        score(&preds[b])
            .partial_cmp(&score(&preds[a]))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(nearest[a].partial_cmp(&nearest[b]).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.cmp(&b))
    });

    let mut gt_taken = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for &pi in &order {
        let mut best: Option<(f64, usize)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if gt_taken[gi] {
                continue;
            }
            let d = distance(&preds[pi], g);
            if d <= gate {
                match best {
                    Some((bd, _)) if bd <= d => {}
                    _ => best = Some((d, gi)),
                }
            }
        }
        if let Some((_, gi)) = best {
            gt_taken[gi] = true;
            pairs.push((pi, gi));
        }
    }
    Matching::from_pairs(pairs, preds.len(), gts.len())
}

// ---------------------------------------------------------------------------
// Optimal assignment
// ---------------------------------------------------------------------------

/// Minimum-cost complete assignment of size `min(rows, cols)` by the
/// Jonker-Volgenant shortest-augmenting-path scheme, O(n² m).
pub fn hungarian(costs: &CostMatrix) -> Result<Matching, AssignError> {
    if costs.rows() > costs.cols() {
        let m = hungarian(&costs.transposed())?;
        let mut pairs: Vec<(usize, usize)> = m.pairs.into_iter().map(|(r, c)| (c, r)).collect();
        pairs.sort_unstable();
        return Ok(Matching::from_pairs(pairs, costs.rows(), costs.cols()));
    }
    let n = costs.rows();
    let m = costs.cols();
    if n == 0 {
        return Ok(Matching::from_pairs(Vec::new(), n, m));
    }

    let cost_at = |r: usize, c: usize| costs.get(r, c).unwrap_or(f64::INFINITY);

    // job[c] = row assigned to column c; column m is the virtual start column
    let mut job: Vec<Option<usize>> = vec![None; m + 1];
    let mut row_potential = vec![0.0f64; n];
    let mut col_potential = vec![0.0f64; m + 1];

    for row in 0..n {
        let mut cur_col = m;
        job[m] = Some(row);
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut prev_col = vec![usize::MAX; m + 1];
        let mut visited = vec![false; m + 1];

        while let Some(r) = job[cur_col] {
            visited[cur_col] = true;
            let mut delta = f64::INFINITY;
            let mut next_col = m;
            for c in 0..m {
                if visited[c] {
                    continue;
                }
                let reduced = cost_at(r, c) - row_potential[r] - col_potential[c];
                if reduced < min_to[c] {
                    min_to[c] = reduced;
                    prev_col[c] = cur_col;
                }
                if min_to[c] < delta {
                    delta = min_to[c];
                    next_col = c;
                }
            }
            if delta == f64::INFINITY {
                // every unvisited column is only reachable through forbidden
                // pairs: no complete assignment
                return Err(AssignError::Infeasible);
            }
            for c in 0..=m {
                if visited[c] {
                    if let Some(rr) = job[c] {
                        row_potential[rr] += delta;
                    }
                    col_potential[c] -= delta;
                } else {
                    min_to[c] -= delta;
                }
            }
            cur_col = next_col;
        }

        // augment along the alternating path back to the virtual column
        while cur_col != m {
            let pc = prev_col[cur_col];
            job[cur_col] = job[pc];
            cur_col = pc;
        }
    }

    let mut pairs: Vec<(usize, usize)> = job[..m]
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.map(|r| (r, c)))
        .collect();
    pairs.sort_unstable();
    Ok(Matching::from_pairs(pairs, n, m))
}

/// Total cost of a matching on the given matrix (forbidden pairs count as
/// infinite).
pub fn matching_cost(costs: &CostMatrix, m: &Matching) -> f64 {
    m.pairs
        .iter()
        .map(|&(r, c)| costs.get(r, c).unwrap_or(f64::INFINITY))
        .sum()
}
