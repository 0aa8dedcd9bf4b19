//! Strided GEMM views over row-major buffers, backed by `matrixmultiply`.

#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    data: &'a [f64],
    off: usize,
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

pub(crate) struct ViewMut<'a> {
    data: &'a mut [f64],
    off: usize,
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

fn last_index(off: usize, rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        off
    } else {
        off + (rows - 1) * rs + (cols - 1) * cs
    }
}

impl<'a> View<'a> {
    /// Row-major `rows × cols` block starting at `off` with row stride `ld`.
    pub fn new(data: &'a [f64], off: usize, rows: usize, cols: usize, ld: usize) -> Self {
        Self::strided(data, off, rows, cols, ld, 1)
    }

    pub fn strided(data: &'a [f64], off: usize, rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        assert!(
            rows == 0 || cols == 0 || last_index(off, rows, cols, rs, cs) < data.len(),
            "view out of bounds"
        );
        View { data, off, rows, cols, rs, cs }
    }

    /// The transposed view (no copy).
    pub fn t(self) -> Self {
        View {
            data: self.data,
            off: self.off,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }
}

impl<'a> ViewMut<'a> {
    pub fn new(data: &'a mut [f64], off: usize, rows: usize, cols: usize, ld: usize) -> Self {
        assert!(
            rows == 0 || cols == 0 || last_index(off, rows, cols, ld, 1) < data.len(),
            "view out of bounds"
        );
        ViewMut { data, off, rows, cols, rs: ld, cs: 1 }
    }
}

/// `c ← alpha·a·b + beta·c`. When `beta == 0` the previous contents of `c`
/// are ignored.
pub(crate) fn gemm(alpha: f64, a: View<'_>, b: View<'_>, beta: f64, c: ViewMut<'_>) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension mismatch");
    assert_eq!(a.rows, c.rows, "gemm row mismatch");
    assert_eq!(b.cols, c.cols, "gemm column mismatch");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                let idx = c.off + i * c.rs + j * c.cs;
                c.data[idx] = if beta == 0.0 { 0.0 } else { beta * c.data[idx] };
            }
        }
        return;
    }
    // SAFETY: every view was bounds-checked at construction, strides are
    // non-negative, and `c` is borrowed mutably so it cannot alias `a`/`b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr().add(a.off),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr().add(b.off),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.data.as_mut_ptr().add(c.off),
            c.rs as isize,
            c.cs as isize,
        );
    }
}
