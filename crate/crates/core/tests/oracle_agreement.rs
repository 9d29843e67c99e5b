use islands_core::geometry::{BoundaryShape, FourierSeries, MappedGrid};
use islands_core::oracles::{brute_force_extrema, couette_phi, mode_ode_solve, FourierData};
use islands_core::steady::{initial_guess, solve_shear, solve_steady_with, NewtonOptions, Nonlinearity};
use islands_core::topology::critical::periodic_distance;
use islands_core::topology::{find_critical_points, CriticalKind};
use islands_core::{solve_first_order, solve_perturbed, ScalarField};

fn base(f: &Nonlinearity, n: usize) -> ScalarField {
    let grid = MappedGrid::build(&BoundaryShape::flat(), n, n + 1).unwrap();
    let p = solve_shear(f, 0.0, 0.0, n + 1).unwrap();
    solve_steady_with(&grid, f, &initial_guess(&grid, &p), NewtonOptions::default()).unwrap().field
}

#[test]
fn extrema_match_brute_force_search() {
    let f = Nonlinearity::wavy();
    let p = solve_shear(&f, 0.0, 0.0, 65).unwrap();
    let cases = [
        (FourierSeries::zero(), FourierSeries::cosine(1, 1.0)),
        (FourierSeries::cosine(2, 0.5), FourierSeries::cosine(1, 1.0)),
        (FourierSeries::sine(1, 0.7), FourierSeries::cosine(3, 0.8)),
    ];
    for (g, h) in cases {
        let shape = BoundaryShape::perturbed_flat(g, h.clone(), 0.05);
        let (grid, sol) = solve_perturbed(&shape, &f, 64, 65, &p, NewtonOptions::default()).unwrap();
        let found: Vec<_> = find_critical_points(&sol.field).into_iter().filter(|c| matches!(c.kind, CriticalKind::Max | CriticalKind::Min)).collect();
        let brute = brute_force_extrema(&sol.field, 4);
        assert_eq!(found.len(), brute.len(), "h = {h:?}");
        let tol = 2.0 * grid.dx / 4.0;
        for b in &brute {
            let near = found.iter().map(|c| periodic_distance((c.x, c.y), (b.x, b.y))).fold(f64::INFINITY, f64::min);
            assert!(near <= tol, "brute-force extremum at ({}, {}) unmatched, nearest {near}", b.x, b.y);
        }
    }
}

#[test]
fn single_mode_phi_matches_mode_ode() {
    let f = Nonlinearity::wavy();
    let n = 64;
    let psi0 = base(&f, n);
    let p = solve_shear(&f, 0.0, 0.0, 2001).unwrap();
    let fprime: Vec<f64> = p.psi.iter().map(|&v| f.d1(v)).collect();
    let (_, d_top) = islands_core::expansion::wall_normal_derivatives(&psi0);
    for k in 1..=3 {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(k, 1.0), 0.0);
        let phi = solve_first_order(&psi0.grid, &f, &psi0, &shape).unwrap();
        let mode = mode_ode_solve(k, &fprime, 2001).unwrap();
        let g = &phi.grid;
        let mut err = 0.0f64;
        for i in 0..g.nx {
            let amp = -d_top[i] * (k as f64 * g.x[i]).cos();
            for j in 0..g.ns {
                let y = -1.0 + 2.0 * g.s[j];
                err = err.max((phi.at(i, j) - amp * mode.value_at(y)).abs());
            }
        }
        assert!(err < 2e-3 * phi.max_abs(), "mode {k}: {err}");
    }
}

#[test]
fn couette_phi_converges_at_second_order() {
    let f = Nonlinearity::couette();
    let g = FourierSeries::cosine(2, 0.5);
    let h = FourierSeries::cosine(1, 1.0);
    // psi0' = -y, so the wall data is h and g
    let (hd, gd) = (FourierData::from_series(&h), FourierData::from_series(&g));
    let mut errs = Vec::new();
    for n in [32, 64] {
        let psi0 = base(&f, n);
        let phi = solve_first_order(&psi0.grid, &f, &psi0, &BoundaryShape::perturbed_flat(g.clone(), h.clone(), 0.0)).unwrap();
        let exact = ScalarField::from_xy(&psi0.grid, |x, y| couette_phi(&hd, &gd, x, y));
        errs.push(phi.max_abs_diff(&exact).unwrap() / exact.max_abs());
    }
    let order = (errs[0] / errs[1]).log2();
    assert!(errs[1] <= 1e-3, "{errs:?}");
    assert!((1.8..=2.2).contains(&order), "order {order}");
}
