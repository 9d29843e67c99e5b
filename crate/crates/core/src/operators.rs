//! Finite-difference Laplacian and Helmholtz operators on the mapped grid.
//!
//! With `y = b(x) + s T(x)` the physical Laplacian becomes
//!
//! ```text
//! Delta u = U_xx - 2a U_xs + (a^2 + 1/T^2) U_ss + s_xx U_s
//! ```
//!
//! which is discretised with centred second differences; the mixed term uses
//! the four diagonal neighbours, giving a 9-point stencil. Boundary rows are
//! identity rows and interior rows never reference boundary columns: boundary
//! couplings are moved to the right-hand side at solve time, so the matrix of
//! a flat channel with constant potential is exactly symmetric.

use std::sync::OnceLock;

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{GridRef, MappedGrid};

/// Margin on the stability test `c > -lambda1`.
pub const STABILITY_MARGIN: f64 = 1e-6;
/// Relative 2-norm residual accepted from a linear solve.
pub const SOLVE_TOL: f64 = 1e-10;

const EIGEN_TOL: f64 = 1e-8;
const EIGEN_MAX_ITER: usize = 2000;

/// Stencil slot of offset `(di, dj)`, both in `-1..=1`.
#[inline]
pub fn slot(di: isize, dj: isize) -> usize {
    ((di + 1) * 3 + (dj + 1)) as usize
}

fn laplacian_stencil(grid: &MappedGrid, i: usize, j: usize) -> [f64; 9] {
    let (dx, ds) = (grid.dx, grid.ds);
    let t = grid.thickness[i][0];
    let a = grid.slope(i, j);
    let sxx = grid.s_xx(i, j);
    let css = a * a + 1.0 / (t * t);
    let mut st = [0.0; 9];
    st[slot(-1, 0)] += 1.0 / (dx * dx);
    st[slot(1, 0)] += 1.0 / (dx * dx);
    st[slot(0, -1)] += css / (ds * ds) - sxx / (2.0 * ds);
    st[slot(0, 1)] += css / (ds * ds) + sxx / (2.0 * ds);
    st[slot(0, 0)] -= 2.0 / (dx * dx) + 2.0 * css / (ds * ds);
    let mixed = -2.0 * a / (4.0 * dx * ds);
    if mixed != 0.0 {
        st[slot(1, 1)] += mixed;
        st[slot(-1, -1)] += mixed;
        st[slot(1, -1)] -= mixed;
        st[slot(-1, 1)] -= mixed;
    }
    st
}

/// Sparse system over all grid nodes with Dirichlet identity rows.
struct System {
    nx: usize,
    ns: usize,
    stencils: Vec<[f64; 9]>,
    lu: OnceLock<std::result::Result<Lu<usize, f64>, String>>,
}

impl System {
    fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let nx = self.nx as isize;
        (-1..=1isize).flat_map(move |di| {
            (-1..=1isize).map(move |dj| {
                let ii = (i as isize + di).rem_euclid(nx) as usize;
                (slot(di, dj), ii, (j as isize + dj) as usize)
            })
        })
    }

    fn is_boundary(&self, j: usize) -> bool {
        j == 0 || j + 1 == self.ns
    }

    fn triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mut t = Vec::with_capacity(9 * self.nx * self.ns);
        for i in 0..self.nx {
            for j in 0..self.ns {
                let r = i * self.ns + j;
                if self.is_boundary(j) {
                    t.push(Triplet::new(r, r, 1.0));
                    continue;
                }
                let st = &self.stencils[r];
                for (k, ii, jj) in self.neighbours(i, j) {
                    if self.is_boundary(jj) || (st[k] == 0.0 && k != slot(0, 0)) {
                        continue;
                    }
                    t.push(Triplet::new(r, ii * self.ns + jj, st[k]));
                }
            }
        }
        t
    }

    fn matrix(&self) -> SparseColMat<usize, f64> {
        let n = self.nx * self.ns;
        SparseColMat::try_new_from_triplets(n, n, &self.triplets()).expect("stencil indices are in range")
    }

    fn factor(&self) -> Result<&Lu<usize, f64>> {
        // faer's threaded kernels reduce in a pool-size dependent order; results
        // must not depend on how many sweep points run at once
        static SEQUENTIAL: std::sync::Once = std::sync::Once::new();
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
        self.lu
            .get_or_init(|| self.matrix().sp_lu().map_err(|e| format!("{e:?}")))
            .as_ref()
            .map_err(|e| Error::SingularSystem(format!("LU factorisation failed: {e}")))
    }

    /// Matrix-vector product of the assembled system (not of the full stencil).
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for i in 0..self.nx {
            for j in 0..self.ns {
                let r = i * self.ns + j;
                if self.is_boundary(j) {
                    y[r] = x[r];
                    continue;
                }
                let st = &self.stencils[r];
                y[r] = self
                    .neighbours(i, j)
                    .filter(|&(_, _, jj)| !self.is_boundary(jj))
                    .map(|(k, ii, jj)| st[k] * x[ii * self.ns + jj])
                    .sum();
            }
        }
        y
    }

    /// Solve `A x = b` with up to three steps of iterative refinement.
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self.factor()?;
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let rhs = Col::<f64>::from_fn(b.len(), |k| b[k]);
        let sol = lu.solve(&rhs);
        let mut x: Vec<f64> = (0..b.len()).map(|k| sol[k]).collect();
        for _ in 0..3 {
            let ax = self.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let rel = norm2(&r) / bnorm;
            if !rel.is_finite() {
                break;
            }
            if rel <= SOLVE_TOL {
                return Ok(x);
            }
            let corr = lu.solve(&Col::<f64>::from_fn(r.len(), |k| r[k]));
            for (xk, k) in x.iter_mut().zip(0..) {
                *xk += corr[k];
            }
        }
        let ax = self.matvec(&x);
        let rel = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
        if rel <= SOLVE_TOL {
            Ok(x)
        } else {
            Err(Error::SingularSystem(format!("relative residual {rel:.3e} after refinement")))
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Discrete `Delta - diag(c)` with Dirichlet rows on `s = 0` and `s = 1`.
pub struct LinearOperator {
    pub grid: GridRef,
    system: System,
    /// Smallest value of the potential `c` over interior nodes.
    pub potential_min: f64,
    /// True when the assembled matrix equals its transpose entrywise.
    pub symmetric: bool,
}

impl std::fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearOperator")
            .field("nx", &self.grid.nx)
            .field("ns", &self.grid.ns)
            .field("potential_min", &self.potential_min)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

pub fn assemble_laplacian(grid: &GridRef) -> LinearOperator {
    build_operator(grid, None)
}

/// `Delta - diag(c)`; with `c = F'(psi0)` this is the linearised operator.
pub fn assemble_helmholtz(grid: &GridRef, c: &ScalarField) -> Result<LinearOperator> {
    if !grid.same_layout(&c.grid) {
        return Err(Error::GridMismatch("potential lives on another grid".into()));
    }
    Ok(build_operator(grid, Some(&c.values)))
}

fn raw_stencils(grid: &MappedGrid, potential: Option<&[f64]>) -> Vec<[f64; 9]> {
    let mut stencils = Vec::with_capacity(grid.len());
    for i in 0..grid.nx {
        for j in 0..grid.ns {
            let mut st = if grid.is_boundary(j) { [0.0; 9] } else { laplacian_stencil(grid, i, j) };
            if let Some(c) = potential {
                if !grid.is_boundary(j) {
                    st[slot(0, 0)] -= c[grid.index(i, j)];
                }
            }
            stencils.push(st);
        }
    }
    stencils
}

fn build_operator(grid: &GridRef, potential: Option<&[f64]>) -> LinearOperator {
    let system = System {
        nx: grid.nx,
        ns: grid.ns,
        stencils: raw_stencils(grid, potential),
        lu: OnceLock::new(),
    };
    let potential_min = match potential {
        Some(c) => (0..grid.nx)
            .flat_map(|i| (1..grid.ns - 1).map(move |j| (i, j)))
            .map(|(i, j)| c[grid.index(i, j)])
            .fold(f64::INFINITY, f64::min),
        None => 0.0,
    };
    let symmetric = is_symmetric(&system);
    LinearOperator {
        grid: grid.clone(),
        system,
        potential_min,
        symmetric,
    }
}

fn is_symmetric(sys: &System) -> bool {
    for i in 0..sys.nx {
        for j in 1..sys.ns - 1 {
            let st = &sys.stencils[i * sys.ns + j];
            for di in -1..=1isize {
                for dj in -1..=1isize {
                    let jj = (j as isize + dj) as usize;
                    if sys.is_boundary(jj) {
                        continue;
                    }
                    let ii = (i as isize + di).rem_euclid(sys.nx as isize) as usize;
                    let other = &sys.stencils[ii * sys.ns + jj];
                    if st[slot(di, dj)] != other[slot(-di, -dj)] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

impl LinearOperator {
    /// The assembled sparse matrix, boundary rows included.
    pub fn matrix(&self) -> SparseColMat<usize, f64> {
        self.system.matrix()
    }

    pub fn stencil(&self, i: usize, j: usize) -> [f64; 9] {
        self.system.stencils[self.grid.index(i, j)]
    }

    pub fn max_row_nonzeros(&self) -> usize {
        let mut counts = vec![0usize; self.grid.len()];
        for t in self.system.triplets() {
            counts[t.row] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// Full stencil applied at interior nodes (boundary neighbours included); zero on the boundary.
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        if !self.grid.same_layout(&u.grid) {
            return Err(Error::GridMismatch("operand lives on another grid".into()));
        }
        let sys = &self.system;
        Ok(ScalarField::from_nodes(&self.grid, |i, j| {
            if sys.is_boundary(j) {
                return 0.0;
            }
            let st = &sys.stencils[i * sys.ns + j];
            sys.neighbours(i, j).map(|(k, ii, jj)| st[k] * u.values[ii * sys.ns + jj]).sum()
        }))
    }

    fn stability_precheck(&self) -> Result<()> {
        if self.potential_min >= 0.0 {
            return Ok(());
        }
        let lambda1 = self.grid.lambda1()?;
        if self.potential_min <= -lambda1 + STABILITY_MARGIN {
            return Err(Error::SingularSystem(format!(
                "potential reaches {:.4} <= -lambda1 = {:.4}",
                self.potential_min, -lambda1
            )));
        }
        Ok(())
    }

    /// Solve for interior values with homogeneous Dirichlet data.
    pub(crate) fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut b = rhs.to_vec();
        for i in 0..self.grid.nx {
            b[self.grid.index(i, 0)] = 0.0;
            b[self.grid.index(i, self.grid.ns - 1)] = 0.0;
        }
        self.system.solve(&b)
    }
}

/// Solve `op u = rhs` in the interior with `u = bottom` at `s = 0` and `u = top` at `s = 1`.
pub fn solve_dirichlet(op: &LinearOperator, rhs: &ScalarField, bottom: &[f64], top: &[f64]) -> Result<ScalarField> {
    let g = &op.grid;
    if !g.same_layout(&rhs.grid) || bottom.len() != g.nx || top.len() != g.nx {
        return Err(Error::GridMismatch("rhs or boundary samples do not match the operator".into()));
    }
    if !bottom.iter().chain(top).all(|v| v.is_finite()) || !rhs.is_finite() {
        return Err(Error::SingularSystem("non-finite data".into()));
    }
    op.stability_precheck()?;
    let sys = &op.system;
    let ns = g.ns;
    let mut b = rhs.values.clone();
    for i in 0..g.nx {
        b[i * ns] = bottom[i];
        b[i * ns + ns - 1] = top[i];
    }
    for i in 0..g.nx {
        for j in 1..ns - 1 {
            let st = &sys.stencils[i * ns + j];
            for (k, ii, jj) in sys.neighbours(i, j) {
                if sys.is_boundary(jj) {
                    b[i * ns + j] -= st[k] * b[ii * ns + jj];
                }
            }
        }
    }
    let x = sys.solve(&b)?;
    ScalarField::from_values(g, x)
}

/// Principal Dirichlet eigenvalue of `-Delta` by inverse power iteration.
pub fn smallest_eigenvalue(grid: &MappedGrid) -> Result<f64> {
    let sys = System {
        nx: grid.nx,
        ns: grid.ns,
        stencils: raw_stencils(grid, None),
        lu: OnceLock::new(),
    };
    let mut v: Vec<f64> = (0..grid.len())
        .map(|k| {
            let j = k % grid.ns;
            if grid.is_boundary(j) { 0.0 } else { (std::f64::consts::PI * grid.s[j]).sin() }
        })
        .collect();
    let mut last = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITER {
        let w = sys.solve(&v)?;
        let wv: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let ww: f64 = w.iter().map(|a| a * a).sum();
        let estimate = -wv / ww;
        let norm = ww.sqrt();
        v = w.into_iter().map(|a| a / norm).collect();
        change = ((estimate - last) / estimate).abs();
        if change <= EIGEN_TOL {
            return Ok(estimate);
        }
        last = estimate;
    }
    Err(Error::NoConvergence {
        iterations: EIGEN_MAX_ITER,
        last_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryShape, FourierSeries};
    use std::f64::consts::PI;

    fn flat(nx: usize, ns: usize) -> GridRef {
        MappedGrid::build(&BoundaryShape::flat(), nx, ns).unwrap()
    }

    #[test]
    fn affine_in_y_is_annihilated() {
        let g = flat(16, 9);
        let u = ScalarField::from_xy(&g, |_, y| 3.0 * y - 0.25);
        let lu = assemble_laplacian(&g).apply(&u).unwrap();
        assert!(lu.max_abs() < 1e-12);
    }

    #[test]
    fn zero_potential_matches_laplacian() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.1);
        let g = MappedGrid::build(&shape, 16, 9).unwrap();
        let a = assemble_laplacian(&g);
        let b = assemble_helmholtz(&g, &ScalarField::zeros(&g)).unwrap();
        for i in 0..16 {
            for j in 0..9 {
                assert_eq!(a.stencil(i, j), b.stencil(i, j));
            }
        }
        assert!(a.max_row_nonzeros() <= 9);
    }

    #[test]
    fn constant_potential_shifts_diagonal() {
        let g = flat(16, 9);
        let c = ScalarField::from_nodes(&g, |_, _| 0.5);
        let a = assemble_laplacian(&g);
        let b = assemble_helmholtz(&g, &c).unwrap();
        assert_eq!(b.stencil(3, 4)[slot(0, 0)], a.stencil(3, 4)[slot(0, 0)] - 0.5);
        assert!(a.symmetric && b.symmetric);
    }

    #[test]
    fn perturbed_grid_is_not_symmetric() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.1);
        let g = MappedGrid::build(&shape, 16, 9).unwrap();
        assert!(!assemble_laplacian(&g).symmetric);
    }

    #[test]
    fn couette_profile_recovered() {
        let g = flat(16, 17);
        let op = assemble_laplacian(&g);
        let rhs = ScalarField::from_nodes(&g, |_, _| -1.0);
        let zeros = vec![0.0; 16];
        let u = solve_dirichlet(&op, &rhs, &zeros, &zeros).unwrap();
        let exact = ScalarField::from_xy(&g, |_, y| 0.5 * (1.0 - y * y));
        // second differences are exact on quadratics
        assert!(u.max_abs_diff(&exact).unwrap() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = flat(16, 9);
        let op = assemble_laplacian(&g);
        let u = solve_dirichlet(&op, &ScalarField::zeros(&g), &[0.0; 16], &[0.0; 16]).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn unstable_potential_rejected() {
        let g = flat(16, 33);
        let c = ScalarField::from_nodes(&g, |_, _| -3.0);
        let op = assemble_helmholtz(&g, &c).unwrap();
        let rhs = ScalarField::from_nodes(&g, |_, _| 1.0);
        assert!(matches!(
            solve_dirichlet(&op, &rhs, &[0.0; 16], &[0.0; 16]),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn flat_eigenvalue() {
        let g = flat(16, 65);
        let l = smallest_eigenvalue(&g).unwrap();
        assert!((l / (PI * PI / 4.0) - 1.0).abs() < 1e-2, "{l}");
        assert_eq!(g.lambda1().unwrap(), l);
    }
}
