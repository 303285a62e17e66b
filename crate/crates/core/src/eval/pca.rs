//! Two-component PCA for embedding views.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// N × n_components scores.
    pub scores: Matrix,
    /// Population variance along each component.
    pub explained_variance: Vec<f64>,
}

/// Project centred rows onto the leading eigenvectors of the column covariance.
///
/// When rows are fewer than columns the eigenproblem is solved on the Gram matrix instead,
/// which has the same non-zero spectrum. Each component's sign is fixed so that its
/// largest-magnitude score is positive.
pub fn pca(x: &Matrix, n_components: usize) -> Result<Projection> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 || n_components == 0 || n_components > n.min(d) {
        return Err(Error::Domain(format!("PCA of {n}x{d} into {n_components} components")));
    }
    let mut means = vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let xc = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - means[j]);
    let nf = n as f64;
    let mut scores = Matrix::zeros(n, n_components);
    let mut var = Vec::with_capacity(n_components);
    if d <= n {
        let cov = xc.transpose() * &xc / nf;
        let eig = SymmetricEigen::new(cov);
        let order = descending(eig.eigenvalues.as_slice());
        for (c, &e) in order.iter().take(n_components).enumerate() {
            let v = eig.eigenvectors.column(e);
            let s = &xc * v;
            for i in 0..n {
                scores.set(i, c, s[i]);
            }
            var.push(eig.eigenvalues[e].max(0.0));
        }
    } else {
        let gram = &xc * xc.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = descending(eig.eigenvalues.as_slice());
        for (c, &e) in order.iter().take(n_components).enumerate() {
            let mu = eig.eigenvalues[e].max(0.0);
            let u = eig.eigenvectors.column(e);
            for i in 0..n {
                scores.set(i, c, u[i] * mu.sqrt());
            }
            var.push(mu / nf);
        }
    }
    for c in 0..n_components {
        let mut best = 0;
        for i in 0..n {
            if scores.get(i, c).abs() > scores.get(best, c).abs() {
                best = i;
            }
        }
        if scores.get(best, c) < 0.0 {
            for i in 0..n {
                scores.set(i, c, -scores.get(i, c));
            }
        }
    }
    Ok(Projection {
        scores,
        explained_variance: var,
    })
}

fn descending(v: &[f64]) -> Vec<usize> {
    let mut o: Vec<usize> = (0..v.len()).collect();
    o.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    o
}
