//! Dense nonsymmetric eigendecomposition (real Schur form) of the operator
//! matrix, with left and right eigenvectors from the same factorization.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use num_complex::Complex64;

use crate::kernel::DiscreteOperator;

pub(crate) struct DenseEigen {
    pub values: Vec<Complex64>,
    /// `right[k]` satisfies `A v = values[k] v`.
    pub right: Vec<Vec<Complex64>>,
    /// `left[k]` satisfies `u A = values[k] u` (bilinear, no conjugation).
    pub left: Vec<Vec<Complex64>>,
}

/// Runs sequentially so repeated calls are bit-identical.
pub(crate) fn dense_eigen(op: &DiscreteOperator) -> Result<DenseEigen, String> {
    let n = op.len();
    let a = Mat::from_fn(n, n, |i, j| op.entry(i, j));
    let mut s_re = Diag::<f64>::zeros(n);
    let mut s_im = Diag::<f64>::zeros(n);
    let mut ul = Mat::<f64>::zeros(n, n);
    let mut ur = Mat::<f64>::zeros(n, n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(evd::evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::evd_real(
        a.as_ref(),
        s_re.as_mut(),
        s_im.as_mut(),
        Some(ul.as_mut()),
        Some(ur.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| format!("{e:?}"))?;

    let mut values = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        let (re, im) = (s_re[k], s_im[k]);
        if im == 0.0 {
            values.push(Complex64::new(re, 0.0));
            right.push((0..n).map(|i| Complex64::new(ur[(i, k)], 0.0)).collect());
            left.push((0..n).map(|i| Complex64::new(ul[(i, k)], 0.0)).collect());
            k += 1;
        } else {
            // packed pair: columns k, k+1 hold real and imaginary parts of
            // the vector belonging to re + i·im; the partner is its conjugate
            let v: Vec<Complex64> = (0..n).map(|i| Complex64::new(ur[(i, k)], ur[(i, k + 1)])).collect();
            // left vectors come back as u with uᴴA = βuᴴ; the measure is conj(u)
            let u: Vec<Complex64> = (0..n).map(|i| Complex64::new(ul[(i, k)], -ul[(i, k + 1)])).collect();
            values.push(Complex64::new(re, im));
            values.push(Complex64::new(re, -im));
            right.push(v.iter().map(|z| z.conj()).collect());
            right.insert(right.len() - 1, v);
            left.push(u.iter().map(|z| z.conj()).collect());
            left.insert(left.len() - 1, u);
            k += 2;
        }
    }
    Ok(DenseEigen { values, right, left })
}
