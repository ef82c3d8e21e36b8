//! Dense linear solves for Markov chains.

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let (piv, best) = (k..n)
            .map(|i| (i, a[i][k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < 1e-13 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        let pivot_row = a[k].clone();
        let pk = pivot_row[k];
        for i in k + 1..n {
            let f = a[i][k] / pk;
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * pivot_row[j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Values of a Markov chain `x_s = r_s + Σ_t P(s,t)·x_t` with some states
/// pinned to known values.
pub fn solve_chain(rows: &[Vec<(usize, f64)>], rewards: &[f64], fixed: &[Option<f64>]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut index = vec![usize::MAX; n];
    let mut unknown = Vec::new();
    for s in 0..n {
        if fixed[s].is_none() {
            index[s] = unknown.len();
            unknown.push(s);
        }
    }
    let m = unknown.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += 1.0;
        b[i] += rewards[s];
        for &(t, p) in &rows[s] {
            match fixed[t] {
                Some(v) => b[i] += p * v,
                None => a[i][index[t]] -= p,
            }
        }
    }
    let x = solve_dense(a, b)?;
    Some(
        (0..n)
            .map(|s| fixed[s].unwrap_or_else(|| x[index[s]]))
            .collect(),
    )
}
