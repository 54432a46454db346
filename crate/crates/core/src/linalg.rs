//! Thin wrappers over nalgebra for the dense linear algebra used by the
//! bifurcation and master-equation code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a general real square matrix.
///
/// The matrix is first split into the irreducible diagonal blocks of its
/// Frobenius normal form (strongly connected components of the sparsity
/// graph), whose eigenvalues are computed separately with faer's dense
/// Hessenberg-QR solver. nalgebra's Schur iteration fails to converge on the
/// larger master-equation generators.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(m.nrows());
    for block in strongly_connected_blocks(m) {
        out.extend(block_eigenvalues(&block, m)?);
    }
    Ok(out)
}

/// Strongly connected components of the graph with an arc `c -> r` for
/// every non-zero off-diagonal entry `m[(r, c)]` (iterative Tarjan).
pub fn strongly_connected_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|c| (0..n).filter(|&r| r != c && m[(r, c)] != 0.0).collect())
        .collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut blocks = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    blocks.push(comp);
                }
            }
        }
    }
    blocks
}

fn block_eigenvalues(block: &[usize], m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = block.len();
    if n == 1 {
        return Ok(vec![Complex64::new(m[(block[0], block[0])], 0.0)]);
    }
    let sub = faer::Mat::<f64>::from_fn(n, n, |r, c| m[(block[r], block[c])]);
    sub.eigenvalues().map_err(|_| Error::EigenConvergence(n))
}

/// Eigenvalue with the largest real part.
pub fn leading_eigenvalue(m: &DMatrix<f64>) -> Result<Complex64> {
    eigenvalues(m)?
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| Error::InvalidParams("empty matrix".into()))
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

/// Sum of all k×k principal minors of `m`.
pub fn principal_minor_sum(m: &DMatrix<f64>, k: usize) -> f64 {
    let n = m.nrows();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut total = 0.0;
    loop {
        let sub = DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
        total += det(&sub);
        // next combination
        let mut p = k;
        while p > 0 && idx[p - 1] == n - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        idx[p - 1] += 1;
        for q in p..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    total
}

/// Roots of the monic polynomial `x^n + c[n-1] x^(n-1) + ... + c[0]` from
/// the eigenvalues of its companion matrix.
pub fn monic_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let n = c.len();
    let comp = DMatrix::from_fn(n, n, |r, col| {
        if r == 0 {
            -c[n - 1 - col]
        } else if r == col + 1 {
            1.0
        } else {
            0.0
        }
    });
    eigenvalues(&comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_block_eigenvalues() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        assert!((ev[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[2] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn blocked_eigenvalues_match_direct_schur() {
        // block upper-triangular once rows/columns are permuted
        let m = DMatrix::from_row_slice(4, 4, &[
            -1.0, 0.0, 2.0, 0.0, //
            0.0, -3.0, 0.0, 1.0, //
            0.0, 0.0, -2.0, 0.0, //
            0.0, 4.0, 0.0, -1.0,
        ]);
        assert_eq!(strongly_connected_blocks(&m).len(), 3);
        let mut a: Vec<(f64, f64)> = eigenvalues(&m).unwrap().iter().map(|z| (z.re, z.im)).collect();
        let mut b: Vec<(f64, f64)> = nalgebra::Schur::new(m).complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn minors_of_diagonal_matrix_are_elementary_symmetric() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        assert!((principal_minor_sum(&m, 1) - 10.0).abs() < 1e-12);
        assert!((principal_minor_sum(&m, 2) - 35.0).abs() < 1e-12);
        assert!((principal_minor_sum(&m, 3) - 50.0).abs() < 1e-12);
        assert!((principal_minor_sum(&m, 4) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn companion_roots() {
        // (x-1)(x-2)(x+3) = x^3 - 7x + 6
        let mut r: Vec<f64> = monic_roots(&[6.0, -7.0, 0.0]).unwrap().iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        for (a, b) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
