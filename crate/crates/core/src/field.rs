//! Nodal scalar fields on a [`MappedGrid`].

use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{GridRef, MappedGrid};

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: GridRef,
    /// Row-major by column: `values[i * ns + j]`.
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &GridRef) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &GridRef, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ns
            )));
        }
        Ok(ScalarField { grid: grid.clone(), values })
    }

    /// Sample `f(i, j)` at every node.
    pub fn from_nodes(grid: &GridRef, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            for j in 0..grid.ns {
                values.push(f(i, j));
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    /// Sample a function of physical coordinates `(x, y)`.
    pub fn from_xy(grid: &GridRef, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        Self::from_nodes(grid, |i, j| f(grid.x[i], grid.y(i, j)))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ns + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.values[i * self.grid.ns + j]
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let ns = self.grid.ns;
        &self.values[i * ns..(i + 1) * ns]
    }

    pub fn bottom_values(&self) -> Vec<f64> {
        (0..self.grid.nx).map(|i| self.at(i, 0)).collect()
    }

    pub fn top_values(&self) -> Vec<f64> {
        (0..self.grid.nx).map(|i| self.at(i, self.grid.ns - 1)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_same(&self, other: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_layout(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.grid.nx, self.grid.ns, other.grid.nx, other.grid.ns
            )))
        }
    }

    /// `self + factor * other`, nodewise.
    pub fn axpy(&self, factor: f64, other: &ScalarField) -> Result<ScalarField> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(ScalarField { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpy(1.0, other)
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Same values attached to another grid with the same layout.
    pub fn rebased(&self, grid: &GridRef) -> Result<ScalarField> {
        if !self.grid.same_layout(grid) {
            return Err(Error::GridMismatch("rebase onto a different layout".into()));
        }
        Ok(ScalarField { grid: grid.clone(), values: self.values.clone() })
    }

    /// Largest oscillation `max_j - min_j` across x of the field at fixed `j`.
    pub fn x_oscillation(&self) -> f64 {
        let g = &self.grid;
        (0..g.ns)
            .map(|j| {
                let (lo, hi) = (0..g.nx)
                    .map(|i| self.at(i, j))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `x_index,s_index,x,y,value`.
    pub fn write_csv(&self, w: impl Write) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "x_index,s_index,x,y,value")?;
        let g = &self.grid;
        for i in 0..g.nx {
            for j in 0..g.ns {
                writeln!(w, "{},{},{:.17e},{:.17e},{:.17e}", i, j, g.x[i], g.y(i, j), self.at(i, j))?;
            }
        }
        w.flush()
    }

    /// Little-endian block: `u64 nx`, `u64 ns`, then `nx * ns` doubles in index order.
    pub fn write_binary(&self, w: impl Write) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(&(self.grid.nx as u64).to_le_bytes())?;
        w.write_all(&(self.grid.ns as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.write_binary(std::fs::File::create(path)?)?)
    }

    pub fn read_binary(grid: &GridRef, r: impl Read) -> Result<ScalarField> {
        let mut r = BufReader::new(r);
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let nx = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let ns = u64::from_le_bytes(word) as usize;
        if nx != grid.nx || ns != grid.ns {
            return Err(Error::GridMismatch(format!("file holds {nx}x{ns}, grid is {}x{}", grid.nx, grid.ns)));
        }
        let mut values = Vec::with_capacity(nx * ns);
        for _ in 0..nx * ns {
            r.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        if !r.fill_buf()?.is_empty() {
            return Err(Error::GridMismatch("trailing bytes after field payload".into()));
        }
        ScalarField::from_values(grid, values)
    }
}

/// Lagrange interpolation through `(xs[k], ys[k])` evaluated at `t`.
pub fn lagrange(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, (&xk, &yk)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (m, &xm) in xs.iter().enumerate() {
            if m != k {
                w *= (t - xm) / (xk - xm);
            }
        }
        acc += w * yk;
    }
    acc
}

/// First index of a window of `width` consecutive nodes centred on `t` in a uniform
/// grid `0, h, 2h, ..`, clamped to `[0, n - width]`.
pub fn stencil_start(t: f64, h: f64, n: usize, width: usize) -> usize {
    let centre = (t / h).floor() as isize - (width as isize - 1) / 2;
    centre.clamp(0, (n - width) as isize) as usize
}

/// One-sided fourth-order derivative at the first node of a uniform sample.
pub fn one_sided_d1(v: [f64; 5], h: f64) -> f64 {
    (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
}

impl MappedGrid {
    /// `d/ds` of a column at the bottom (`top = false`) or top boundary, fourth order.
    pub fn boundary_ds(&self, column: &[f64], top: bool) -> f64 {
        let n = column.len();
        if top {
            -one_sided_d1([column[n - 1], column[n - 2], column[n - 3], column[n - 4], column[n - 5]], self.ds)
        } else {
            one_sided_d1([column[0], column[1], column[2], column[3], column[4]], self.ds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryShape, FourierSeries};

    #[test]
    fn binary_round_trip() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.1);
        let grid = MappedGrid::build(&shape, 12, 9).unwrap();
        let f = ScalarField::from_xy(&grid, |x, y| x.sin() * y);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 12 * 9);
        let back = ScalarField::read_binary(&grid, buf.as_slice()).unwrap();
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let grid = MappedGrid::build(&BoundaryShape::flat(), 8, 8).unwrap();
        let f = ScalarField::zeros(&grid);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x_index,s_index,x,y,value"));
        assert_eq!(text.lines().count(), 65);
    }

    #[test]
    fn one_sided_derivative_exact_for_quartics() {
        let h = 0.1;
        let p = |t: f64| 1.0 + 2.0 * t - t * t + 0.5 * t.powi(3) - 0.25 * t.powi(4);
        let v = [0, 1, 2, 3, 4].map(|k| p(k as f64 * h));
        assert!((one_sided_d1(v, h) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let xs = [0.0, 0.5, 1.0, 1.5];
        let ys = xs.map(|x: f64| x.powi(3) - x);
        assert!((lagrange(&xs, &ys, 0.7) - (0.343 - 0.7)).abs() < 1e-14);
    }
}
