//! Row-major GEMM on top of `matrixmultiply`.

use crate::par;

/// Strided read-only matrix view.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub rs: isize,
    pub cs: isize,
}

impl<'a> View<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> View<'a> {
        debug_assert!(data.len() >= rows * cols);
        View { data, rows, cols, rs: cols as isize, cs: 1 }
    }

    pub fn t(self) -> View<'a> {
        View {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }
}

struct SendPtr(*mut f64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

/// Column block used to split wide products; fixed so results do not depend
/// on the thread count.
const COL_BLOCK: usize = 2048;

/// `c = alpha * a b + beta * c` with `c` row-major `a.rows x b.cols`.
pub(crate) fn gemm(alpha: f64, a: View, b: View, beta: f64, c: &mut [f64]) {
    assert_eq!(a.cols, b.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let blocks = n.div_ceil(COL_BLOCK);
    let cp = SendPtr(c.as_mut_ptr());
    let cp = &cp;
    let run = |blk: usize| {
        let n0 = blk * COL_BLOCK;
        let nb = COL_BLOCK.min(n - n0);
        // SAFETY: every block writes a disjoint set of columns of `c`, and the
        // strides keep all reads inside `a.data` and `b.data`.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                nb,
                alpha,
                a.data.as_ptr(),
                a.rs,
                a.cs,
                b.data.as_ptr().offset(n0 as isize * b.cs),
                b.rs,
                b.cs,
                beta,
                cp.0.add(n0),
                n as isize,
                1,
            );
        }
    };
    if blocks == 1 {
        run(0);
    } else {
        let _ = par::map_range(blocks, |blk| run(blk));
    }
}
