/// Detection-to-finger assignment with explicit outcomes for unmatched rows
/// (false positives) and unmatched columns (undetected fingers).
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentSolution {
    /// Matched `(detection, finger)` pairs, ascending.
    pub pairs: Vec<(usize, usize)>,
    pub false_positive: Vec<bool>,
    pub undetected: Vec<bool>,
    pub objective: f64,
}

impl AssignmentSolution {
    pub fn e(&self, s: usize, t: usize) -> bool {
        self.pairs.contains(&(s, t))
    }
}

/// Objective of a given set of pairs: `Σ w_st + λ Σ_unmatched-s w_s + λ · #unmatched-t`.
pub fn assignment_objective(pairs: &[(usize, usize)], w_st: &[Vec<f64>], w_s: &[f64], t: usize, lambda: f64) -> f64 {
    let mut row_used = vec![false; w_s.len()];
    let mut col_used = vec![false; t];
    let mut cost = 0.0;
    for &(s, tt) in pairs {
        row_used[s] = true;
        col_used[tt] = true;
        cost += w_st[s][tt];
    }
    for (s, used) in row_used.iter().enumerate() {
        if !used {
            cost += lambda * w_s[s];
        }
    }
    cost + lambda * col_used.iter().filter(|u| !**u).count() as f64
}

/// Exact minimizer of the assignment program. `w_st` is `S × T` (infinite
/// entries cannot be matched), `w_s` has length `S`, and `t` is the number of
/// fingers so that `S = 0` is expressible. Among optimal solutions the one
/// with the lexicographically smallest ascending pair list wins.
pub fn solve_assignment(w_st: &[Vec<f64>], w_s: &[f64], t: usize, lambda: f64) -> AssignmentSolution {
    let s = w_s.len();
    assert_eq!(w_st.len(), s, "one weight row per detection");
    assert!(w_st.iter().all(|r| r.len() == t), "one weight per finger");
    let all_rows: Vec<usize> = (0..s).collect();
    let all_cols: Vec<usize> = (0..t).collect();
    let optimum = sub_optimum(w_st, w_s, lambda, &all_rows, &all_cols);
    let tol = 1e-9 * (1.0 + optimum.abs());

    let mut pairs = Vec::new();
    let mut free_cols = all_cols;
    let mut spent = 0.0;
    for row in 0..s {
        let rest_rows: Vec<usize> = (row..s).collect();
        let unmatched_rest = lambda * rest_rows.iter().map(|&r| w_s[r]).sum::<f64>() + lambda * free_cols.len() as f64;
        if spent + unmatched_rest <= optimum + tol {
            break;
        }
        let later: Vec<usize> = (row + 1..s).collect();
        let mut matched = false;
        for (k, &col) in free_cols.iter().enumerate() {
            let w = w_st[row][col];
            if !w.is_finite() {
                continue;
            }
            let mut cols = free_cols.clone();
            cols.remove(k);
            if spent + w + sub_optimum(w_st, w_s, lambda, &later, &cols) <= optimum + tol {
                pairs.push((row, col));
                spent += w;
                free_cols = cols;
                matched = true;
                break;
            }
        }
        if !matched {
            spent += lambda * w_s[row];
        }
    }
    let mut false_positive = vec![true; s];
    let mut undetected = vec![true; t];
    for &(r, c) in &pairs {
        false_positive[r] = false;
        undetected[c] = false;
    }
    let objective = assignment_objective(&pairs, w_st, w_s, t, lambda);
    AssignmentSolution {
        pairs,
        false_positive,
        undetected,
        objective,
    }
}

/// Optimal cost restricted to the given rows and columns, via the augmented
/// square problem: real rows may take their own dummy column at `λ w_s`,
/// real columns may take a dummy row at `λ`, dummies pair up at zero cost.
fn sub_optimum(w_st: &[Vec<f64>], w_s: &[f64], lambda: f64, rows: &[usize], cols: &[usize]) -> f64 {
    let (r, c) = (rows.len(), cols.len());
    let n = r + c;
    if n == 0 {
        return 0.0;
    }
    let mut finite_total = lambda * (rows.iter().map(|&i| w_s[i]).sum::<f64>() + c as f64);
    for &i in rows {
        for &j in cols {
            if w_st[i][j].is_finite() {
                finite_total += w_st[i][j].abs();
            }
        }
    }
    let forbidden = 2.0 * finite_total + 1.0;
    let mut cost = vec![vec![forbidden; n]; n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            if w_st[i][j].is_finite() {
                cost[a][b] = w_st[i][j];
            }
        }
        cost[a][c + a] = lambda * w_s[i];
    }
    for b in 0..c {
        cost[r + b][b] = lambda;
        for a in 0..r {
            cost[r + b][c + a] = 0.0;
        }
    }
    let assign = hungarian(&cost);
    assign.iter().enumerate().map(|(a, &b)| cost[a][b]).sum()
}

/// Minimum-cost perfect matching on a square matrix (shortest augmenting
/// paths with potentials). Returns the column of each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}
