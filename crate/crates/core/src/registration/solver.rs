use nalgebra::{DMatrix, DVector};

use crate::par;
use crate::residual::{ResidualBlock, Term};

/// Rows per partial sum. Fixed so the reduction order never depends on the
/// number of threads.
const ROW_CHUNK: usize = 256;

/// Maximum damping increases before a step is given up.
pub const MAX_DAMPING_RETRIES: usize = 5;

pub fn term_weight(term: Term, gamma_c: f64) -> f64 {
    if term == Term::Collision {
        gamma_c
    } else {
        1.0
    }
}

/// Weighted energy `Σ_terms weight · Σ_rows w r²`.
pub fn total_energy(blocks: &[ResidualBlock], gamma_c: f64) -> f64 {
    blocks.iter().map(|b| term_weight(b.term, gamma_c) * b.energy()).sum()
}

/// `JᵀWJ` and `JᵀWr` over all blocks.
pub fn normal_equations(blocks: &[ResidualBlock], gamma_c: f64, dof: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut jtj = DMatrix::zeros(dof, dof);
    let mut jtr = DVector::zeros(dof);
    for b in blocks {
        if b.is_empty() {
            continue;
        }
        assert!(b.has_jacobian(), "block without derivatives");
        assert_eq!(b.dof, dof);
        let tw = term_weight(b.term, gamma_c);
        let partials = par::map_chunks(&b.residuals, ROW_CHUNK, |start, rows| {
            let mut a = DMatrix::<f64>::zeros(dof, dof);
            let mut g = DVector::<f64>::zeros(dof);
            for (k, r) in rows.iter().enumerate() {
                let i = start + k;
                let w = tw * b.weights[i];
                let row = b.jacobian_row(i);
                for p in 0..dof {
                    let jp = row[p] * w;
                    if jp == 0.0 {
                        continue;
                    }
                    g[p] += jp * r;
                    for q in p..dof {
                        a[(p, q)] += jp * row[q];
                    }
                }
            }
            (a, g)
        });
        for (a, g) in partials {
            jtj += a;
            jtr += g;
        }
    }
    for p in 0..dof {
        for q in 0..p {
            jtj[(p, q)] = jtj[(q, p)];
        }
    }
    (jtj, jtr)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub delta: DVector<f64>,
    /// Damping actually used, after any increases.
    pub damping: f64,
    /// The damped system stayed singular; `delta` is zero.
    pub failed: bool,
}

/// Solves `(JᵀWJ + μI) Δ = −JᵀWr` with `W = γ_c` on collision rows.
pub fn gauss_newton_step(blocks: &[ResidualBlock], gamma_c: f64, damping: f64, dof: usize) -> Step {
    let (jtj, jtr) = normal_equations(blocks, gamma_c, dof);
    solve_damped(&jtj, &jtr, damping)
}

pub fn solve_damped(jtj: &DMatrix<f64>, jtr: &DVector<f64>, damping: f64) -> Step {
    let n = jtr.len();
    let mut mu = damping;
    for _ in 0..=MAX_DAMPING_RETRIES {
        let mut a = jtj.clone();
        for i in 0..n {
            a[(i, i)] += mu;
        }
        if let Some(ch) = a.cholesky() {
            let delta = -ch.solve(jtr);
            if delta.iter().all(|x| x.is_finite()) {
                return Step {
                    delta,
                    damping: mu,
                    failed: false,
                };
            }
        }
        mu = if mu > 0.0 { mu * 10.0 } else { 1e-9 };
    }
    Step {
        delta: DVector::zeros(n),
        damping: mu,
        failed: true,
    }
}
