use std::collections::BTreeMap;

use super::{IouMatrix, MatchResult, TIE_TOLERANCE};

/// Unique matching: the one-to-one assignment maximising the sum of matched
/// IoUs, using only entries strictly above `threshold`.
///
/// The profit matrix (IoU above the threshold, zero elsewhere) is zero-padded
/// to a square and solved as a maximum-weight assignment; assignments with
/// zero profit are discarded, so perfect IoU = 1 pairs are kept. The problem
/// is split into connected components of the above-threshold graph and each
/// component is solved with an O(n³) Hungarian pass, followed by a
/// lexicographic tie-break over the equality subgraph of the optimal duals.
pub fn unique_match(ious: &IouMatrix, threshold: f64) -> MatchResult {
    let (n, m) = (ious.rows(), ious.cols());
    let mut dsu = DisjointSets::new(n + m);
    for i in 0..n {
        for (j, &v) in ious.row(i).iter().enumerate() {
            if v > threshold {
                dsu.union(i, n + j);
            }
        }
    }

    let mut components: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for i in 0..n {
        components.entry(dsu.find(i)).or_default().0.push(i);
    }
    for j in 0..m {
        components.entry(dsu.find(n + j)).or_default().1.push(j);
    }

    let mut choice = vec![None; n];
    for (rows, cols) in components.values() {
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let local = solve_component(ious, threshold, rows, cols);
        for (r, c) in local.into_iter().enumerate() {
            choice[rows[r]] = c.map(|c| cols[c]);
        }
    }
    MatchResult::from_assignment(ious, threshold, &choice)
}

fn solve_component(
    ious: &IouMatrix,
    threshold: f64,
    rows: &[usize],
    cols: &[usize],
) -> Vec<Option<usize>> {
    let (nr, nc) = (rows.len(), cols.len());
    let size = nr.max(nc);
    let mut profit = vec![0.0; size * size];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            let v = ious.get(i, j);
            if v > threshold {
                profit[r * size + c] = v;
            }
        }
    }
    let cost: Vec<f64> = profit.iter().map(|&p| -p).collect();
    let mut solution = Assignment::solve(size, &cost);
    solution.prefer_lower_indices(nr, nc, &profit, &cost);

    (0..nr)
        .map(|r| {
            let c = solution.row_to_col[r];
            (c < nc && profit[r * size + c] > 0.0).then_some(c)
        })
        .collect()
}

/// A minimum-cost perfect assignment together with its optimal dual potentials.
struct Assignment {
    size: usize,
    row_to_col: Vec<usize>,
    col_to_row: Vec<usize>,
    row_potential: Vec<f64>,
    col_potential: Vec<f64>,
}

impl Assignment {
    /// Shortest augmenting path Hungarian algorithm on a dense square matrix.
    fn solve(size: usize, cost: &[f64]) -> Self {
        // 1-based internally; index 0 is the virtual source column.
        let mut u = vec![0.0; size + 1];
        let mut v = vec![0.0; size + 1];
        let mut owner = vec![0usize; size + 1];
        let mut way = vec![0usize; size + 1];
        let mut min_slack = vec![0.0; size + 1];
        let mut used = vec![false; size + 1];

        for i in 1..=size {
            owner[0] = i;
            let mut j0 = 0usize;
            min_slack.fill(f64::INFINITY);
            used.fill(false);
            loop {
                used[j0] = true;
                let i0 = owner[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0usize;
                for j in 1..=size {
                    if used[j] {
                        continue;
                    }
                    let reduced = cost[(i0 - 1) * size + (j - 1)] - u[i0] - v[j];
                    if reduced < min_slack[j] {
                        min_slack[j] = reduced;
                        way[j] = j0;
                    }
                    if min_slack[j] < delta {
                        delta = min_slack[j];
                        j1 = j;
                    }
                }
                for j in 0..=size {
                    if used[j] {
                        u[owner[j]] += delta;
                        v[j] -= delta;
                    } else {
                        min_slack[j] -= delta;
                    }
                }
                j0 = j1;
                if owner[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                owner[j0] = owner[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }

        let mut row_to_col = vec![0; size];
        let mut col_to_row = vec![0; size];
        for j in 1..=size {
            row_to_col[owner[j] - 1] = j - 1;
            col_to_row[j - 1] = owner[j] - 1;
        }
        Self {
            size,
            row_to_col,
            col_to_row,
            row_potential: u[1..].to_vec(),
            col_potential: v[1..].to_vec(),
        }
    }

    #[inline]
    fn is_tight(&self, cost: &[f64], row: usize, col: usize) -> bool {
        cost[row * self.size + col] - self.row_potential[row] - self.col_potential[col]
            <= TIE_TOLERANCE
    }

    /// Moves to the optimal assignment whose real rows, in index order, pick
    /// the lowest-indexed positive-profit column available.
    ///
    /// Optimal assignments are exactly the perfect matchings of the tight
    /// subgraph, so each candidate improvement is an alternating cycle over
    /// tight edges that leaves already-decided rows untouched.
    fn prefer_lower_indices(
        &mut self,
        real_rows: usize,
        real_cols: usize,
        profit: &[f64],
        cost: &[f64],
    ) {
        let mut decided_col = vec![false; self.size];
        for row in 0..real_rows {
            let current = self.row_to_col[row];
            let current_key = if current < real_cols && profit[row * self.size + current] > 0.0 {
                current
            } else {
                usize::MAX
            };
            for col in 0..current_key.min(real_cols) {
                if decided_col[col]
                    || profit[row * self.size + col] <= 0.0
                    || !self.is_tight(cost, row, col)
                {
                    continue;
                }
                if self.rotate_into(row, col, &decided_col, cost) {
                    break;
                }
            }
            decided_col[self.row_to_col[row]] = true;
        }
    }

    /// Gives `col` to `row` by finding an alternating cycle of tight edges
    /// that ends with some other row taking `row`'s current column.
    fn rotate_into(&mut self, row: usize, col: usize, decided_col: &[bool], cost: &[f64]) -> bool {
        let freed = self.row_to_col[row];
        let start = self.col_to_row[col];
        let mut seen_col = vec![false; self.size];
        seen_col[col] = true;
        let mut parent = vec![usize::MAX; self.size];
        let mut queue = std::collections::VecDeque::from([start]);
        let mut last = None;

        'search: while let Some(r) = queue.pop_front() {
            for c in 0..self.size {
                if seen_col[c] || decided_col[c] || !self.is_tight(cost, r, c) {
                    continue;
                }
                if c == freed {
                    last = Some(r);
                    break 'search;
                }
                seen_col[c] = true;
                let next = self.col_to_row[c];
                parent[next] = r;
                queue.push_back(next);
            }
        }

        let Some(mut r) = last else {
            return false;
        };
        let mut take = freed;
        loop {
            let previous = self.row_to_col[r];
            self.row_to_col[r] = take;
            self.col_to_row[take] = r;
            take = previous;
            if r == start {
                break;
            }
            r = parent[r];
        }
        debug_assert_eq!(take, col);
        self.row_to_col[row] = col;
        self.col_to_row[col] = row;
        true
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
