use islands_core::geometry::FourierSeries;
use islands_core::harness::{run_expand, run_genericity, run_solve, run_sweep, write_sweep, ExperimentConfig};

fn couette_cos(eps: &[f64]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.shape.pert_top = FourierSeries::cosine(1, 1.0);
    cfg.grid.nx = 48;
    cfg.grid.ns = 49;
    cfg.sweep.epsilons = eps.to_vec();
    cfg
}

#[test]
fn single_epsilon_sweep_matches_individual_runs() {
    let eps = 0.02;
    let cfg = couette_cos(&[eps]);
    let (sweep, _) = run_sweep(&cfg, 1).unwrap();
    assert_eq!(sweep.points.len(), 1);
    let mut one = cfg.clone();
    one.shape.epsilon = eps;
    let (solve, _) = run_solve(&one).unwrap();
    assert_eq!(serde_json::to_string(&sweep.points[0]).unwrap(), serde_json::to_string(&solve.point).unwrap());
    let expand = run_expand(&one).unwrap();
    assert_eq!(sweep.points[0].r_max, Some(expand.report.r_max));
    assert_eq!(serde_json::to_string(&sweep.b0).unwrap(), serde_json::to_string(&expand.b0).unwrap());
}

#[test]
fn two_epsilons_emit_records_without_a_slope() {
    let cfg = couette_cos(&[0.04, 0.02]);
    let (sweep, _) = run_sweep(&cfg, 1).unwrap();
    assert_eq!(sweep.points.len(), 2);
    assert!(sweep.points.iter().all(|p| p.ok && p.max_height.is_some()));
    assert!(sweep.height_fit.is_none());
    assert!(sweep.remainder_fit.is_none());
    assert_eq!(sweep.epsilon_star, Some(0.04));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_pools() {
    let cfg = couette_cos(&[0.04, 0.02, 0.01, 0.005]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (rec, res) = run_sweep(&cfg, 1).unwrap();
    write_sweep(a.path(), &rec, &res).unwrap();
    let (rec, res) = run_sweep(&cfg, 3).unwrap();
    write_sweep(b.path(), &rec, &res).unwrap();
    for name in ["results.csv", "summary.json", "plots/psi_eps0.01.svg", "fields/psi_eps0.01.bin"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let csv = std::fs::read_to_string(a.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epsilon,r_max,height,slope_so_far"));
    assert_eq!(csv.lines().count(), 5);

    let mut g = couette_cos(&[0.02]);
    g.seed = 7;
    g.sweep.samples = 3;
    g.sweep.complement_samples = 1;
    let s1 = serde_json::to_string(&run_genericity(&g, 1).unwrap()).unwrap();
    let s2 = serde_json::to_string(&run_genericity(&g, 2).unwrap()).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn island_plot_has_lens_and_saddle_marker() {
    let cfg = couette_cos(&[0.04]);
    let dir = tempfile::tempdir().unwrap();
    let (rec, res) = run_sweep(&cfg, 1).unwrap();
    write_sweep(dir.path(), &rec, &res).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("plots/psi_eps0.04.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml") || svg.starts_with("<!--"));
    assert!(svg.contains("<polygon"), "no filled island");
    assert!(svg.contains("stroke=\"#000\" stroke-width=\"2\""), "no saddle marker");
    assert!(svg.contains("fill=\"#d62828\""), "no maximum marker");
    assert!(svg.trim_end().ends_with("</svg>"));
}
