//! Dense kernels on row-major buffers.

/// Strided read-only matrix view.
#[derive(Clone, Copy)]
struct View<'a> {
    data: &'a [f64],
    row: usize,
    col: usize,
}

impl View<'_> {
    #[inline(always)]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.row + c * self.col]
    }
}

const TR: usize = 4;
const TC: usize = 8;

/// `out[n x m] = a[n x k] * b[k x m]` for strided `a` and row-contiguous `b`.
///
/// Rows of `a` are packed four at a time so the inner loop reads both
/// operands contiguously. Each output entry accumulates its `k` products in
/// index order, so results do not depend on the tiling.
fn gemm(a: View<'_>, b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        return unsafe { gemm_avx2(a, b, n, k, m) };
    }
    gemm_portable(a, b, n, k, m)
}

/// Same code compiled with 256-bit vectors. FMA stays disabled, so every
/// product and sum rounds exactly as in the portable build.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn gemm_avx2(a: View<'_>, b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    gemm_portable(a, b, n, k, m)
}

#[inline(always)]
fn gemm_portable(a: View<'_>, b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    let full_cols = m - m % TC;
    let mut pack = vec![0.0; k * TR];
    let mut i = 0;
    while i + TR <= n {
        for (p, slot) in pack.chunks_exact_mut(TR).enumerate() {
            for (r, v) in slot.iter_mut().enumerate() {
                *v = a.at(i + r, p);
            }
        }
        for j in (0..full_cols).step_by(TC) {
            let mut acc = [[0.0f64; TC]; TR];
            for (ap, b_row) in pack.chunks_exact(TR).zip(b.chunks_exact(m)) {
                let bt: &[f64; TC] = b_row[j..j + TC].try_into().expect("tile width");
                for (acc_row, &av) in acc.iter_mut().zip(ap) {
                    for (o, &bv) in acc_row.iter_mut().zip(bt) {
                        *o += av * bv;
                    }
                }
            }
            for (r, acc_row) in acc.iter().enumerate() {
                out[(i + r) * m + j..(i + r) * m + j + TC].copy_from_slice(acc_row);
            }
        }
        for c in full_cols..m {
            let mut acc = [0.0f64; TR];
            for (ap, b_row) in pack.chunks_exact(TR).zip(b.chunks_exact(m)) {
                let bv = b_row[c];
                for (o, &av) in acc.iter_mut().zip(ap) {
                    *o += av * bv;
                }
            }
            for (r, v) in acc.into_iter().enumerate() {
                out[(i + r) * m + c] = v;
            }
        }
        i += TR;
    }
    for r in i..n {
        for c in 0..m {
            let mut acc = 0.0;
            for p in 0..k {
                acc += a.at(r, p) * b[p * m + c];
            }
            out[r * m + c] = acc;
        }
    }
    out
}

/// `out[n x m] = a[n x k] * b[k x m]`.
pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    gemm(View { data: a, row: k, col: 1 }, b, n, k, m)
}

/// `out[n x k] = g[n x m] * b[k x m]^T`.
pub(crate) fn matmul_nt(g: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut bt = vec![0.0; m * k];
    for (p, b_row) in b.chunks_exact(m).take(k).enumerate() {
        for (j, &v) in b_row.iter().enumerate() {
            bt[j * k + p] = v;
        }
    }
    gemm(View { data: g, row: m, col: 1 }, &bt, n, m, k)
}

/// `out[k x m] = a[n x k]^T * g[n x m]`.
pub(crate) fn matmul_tn(a: &[f64], g: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    gemm(View { data: a, row: 1, col: k }, g, k, n, m)
}
