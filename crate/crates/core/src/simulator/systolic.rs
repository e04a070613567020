//! Functional, cycle-stepped weight-stationary array.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `rows x cols` PEs. Inputs move right one PE per cycle, partial sums move
/// down; row `m` of the streamed matrix enters PE row `r` at cycle `m + r`.
#[derive(Debug, Clone)]
pub struct SystolicArray {
    rows: usize,
    cols: usize,
    active_rows: usize,
    active_cols: usize,
    weights: Vec<f32>,
}

impl SystolicArray {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            active_rows: 0,
            active_cols: 0,
            weights: Vec::new(),
        }
    }

    /// Loads a `k x c` weight block into the top-left PEs; the rest hold zero.
    pub fn load_weights(&mut self, w: &Tensor) -> Result<()> {
        if w.rows() > self.rows || w.cols() > self.cols {
            return Err(Error::Shape(format!(
                "{}x{} weights on a {}x{} array",
                w.rows(),
                w.cols(),
                self.rows,
                self.cols
            )));
        }
        self.active_rows = w.rows();
        self.active_cols = w.cols();
        self.weights = w.data().to_vec();
        Ok(())
    }

    /// Cycles from the first input entering until the last output leaves.
    pub fn pass_cycles(&self, m: usize) -> u64 {
        (m + self.rows + self.cols - 2) as u64
    }

    /// Streams `a` (`M x k`) and returns the `M x c` product with its cycle count.
    ///
    /// Each PE sums top-down, so the accumulation order is fixed by row index.
    pub fn stream(&self, a: &Tensor) -> Result<(Tensor, u64)> {
        let (kr, kc) = (self.active_rows, self.active_cols);
        if a.cols() != kr {
            return Err(Error::Shape(format!(
                "streamed matrix has {} columns, {} weight rows loaded",
                a.cols(),
                kr
            )));
        }
        let m = a.rows();
        let mut out = Tensor::zeros_matrix(m, kc);
        if m == 0 || kr == 0 || kc == 0 {
            return Ok((out, self.pass_cycles(m)));
        }
        let mut a_reg = vec![0.0f32; kr * kc];
        let mut p_reg = vec![0.0f32; kr * kc];
        let last = m + kr + kc - 2;
        for t in 0..last {
            for r in (0..kr).rev() {
                for c in (0..kc).rev() {
                    let a_in = if c == 0 {
                        match t.checked_sub(r) {
                            Some(row) if row < m => a.get2(row, r),
                            _ => 0.0,
                        }
                    } else {
                        a_reg[r * kc + c - 1]
                    };
                    let p_in = if r == 0 { 0.0 } else { p_reg[(r - 1) * kc + c] };
                    a_reg[r * kc + c] = a_in;
                    p_reg[r * kc + c] = p_in + a_in * self.weights[r * kc + c];
                    if r == kr - 1 {
                        if let Some(row) = t.checked_sub(r + c) {
                            if row < m {
                                out.set2(row, c, p_reg[r * kc + c]);
                            }
                        }
                    }
                }
            }
        }
        Ok((out, self.pass_cycles(m)))
    }
}

fn block(t: &Tensor, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Tensor {
    let mut out = Tensor::zeros_matrix(rows.len(), cols.len());
    for (i, r) in rows.clone().enumerate() {
        for (j, c) in cols.clone().enumerate() {
            out.set2(i, j, t.get2(r, c));
        }
    }
    out
}

/// Tiles `a * b` over an `rows x cols` array, K tiles outermost.
pub fn systolic_gemm(a: &Tensor, b: &Tensor, rows: usize, cols: usize) -> Result<Tensor> {
    if a.cols() != b.rows() {
        return Err(Error::Shape(format!(
            "inner dimensions differ: {}x{} * {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut acc = Tensor::zeros_matrix(m, n);
    let mut pe = SystolicArray::new(rows, cols);
    for k0 in (0..k).step_by(rows) {
        let kr = k0..(k0 + rows).min(k);
        let a_blk = block(a, 0..m, kr.clone());
        for n0 in (0..n).step_by(cols) {
            let nr = n0..(n0 + cols).min(n);
            pe.load_weights(&block(b, kr.clone(), nr.clone()))?;
            let (part, _) = pe.stream(&a_blk)?;
            for i in 0..m {
                for (j, col) in nr.clone().enumerate() {
                    let v = acc.get2(i, col) + part.get2(i, j);
                    acc.set2(i, col, v);
                }
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::gemm;

    #[test]
    fn full_array_pass_takes_m_plus_r_plus_c_minus_two() {
        let mut pe = SystolicArray::new(4, 3);
        let w = Tensor::matrix(4, 3, (0..12).map(|v| v as f32).collect()).unwrap();
        pe.load_weights(&w).unwrap();
        let a = Tensor::matrix(5, 4, (0..20).map(|v| (v % 7) as f32).collect()).unwrap();
        let (out, cycles) = pe.stream(&a).unwrap();
        assert_eq!(cycles, 5 + 4 + 3 - 2);
        assert_eq!(out, gemm(&a, &w).unwrap());
    }

    #[test]
    fn partial_occupancy_and_tiling() {
        let a = Tensor::matrix(7, 5, (0..35).map(|v| (v % 5) as f32 - 2.0).collect()).unwrap();
        let b = Tensor::matrix(5, 6, (0..30).map(|v| (v % 3) as f32).collect()).unwrap();
        assert_eq!(systolic_gemm(&a, &b, 2, 4).unwrap(), gemm(&a, &b).unwrap());
        assert_eq!(systolic_gemm(&a, &b, 8, 8).unwrap(), gemm(&a, &b).unwrap());
    }

    #[test]
    fn oversized_weights_rejected() {
        let mut pe = SystolicArray::new(2, 2);
        assert!(pe.load_weights(&Tensor::zeros_matrix(3, 1)).is_err());
    }
}
