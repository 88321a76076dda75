//! Small dense row-major kernels used by the collocation transforms.

/// `C = A · B` with `A` of shape `n × k` and `B` of shape `k × m`, all row-major.
pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    let mut c = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut c[i * m..(i + 1) * m];
        for (p, &aip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * m..(p + 1) * m];
            for (cv, bv) in row.iter_mut().zip(brow) {
                *cv += aip * bv;
            }
        }
    }
    c
}
