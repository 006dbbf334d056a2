use darkshelf::background::BackgroundHistory;
use darkshelf::field::Grid;
use darkshelf::perturbation::Perturbation;
use darkshelf::simulator::{exact_soliton, run, soliton_field, SimConfig};
use darkshelf::soliton::CoreParams;

fn max_error(intervals: usize, params: &CoreParams, z: f64) -> f64 {
    let grid = Grid::new(100.0, intervals).unwrap();
    let dz = SimConfig::max_dz(&grid);
    let cfg = SimConfig::new(0.0, Perturbation::none(), dz, usize::MAX);
    let history = BackgroundHistory::constant(params.u_inf, z).unwrap();
    let snaps = run(&cfg, &soliton_field(params, grid).unwrap(), &history, z).unwrap();
    let last = snaps.last().unwrap();
    let exact = exact_soliton(params, grid, last.z).unwrap();
    exact.samples.iter().zip(&last.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

#[test]
fn refinement_converges_at_fourth_order() {
    for params in [CoreParams::black(1.0).unwrap(), CoreParams::new(1.0, 2.0, 0.0, 0.0).unwrap()] {
        let coarse = max_error(2048, &params, 5.0);
        let fine = max_error(4096, &params, 5.0);
        let order = (coarse / fine).log2();
        assert!(order > 3.7 && order < 4.3, "observed order {order} ({coarse:e} -> {fine:e})");
    }
}

#[test]
fn total_phase_difference_is_conserved() {
    let grid = Grid::new(60.0, 2048).unwrap();
    let params = CoreParams::new(1.0, 2.2, 0.0, 0.0).unwrap();
    for f in [Perturbation::dispersive_damping(1.0).unwrap(), Perturbation::linear_damping(0.5).unwrap(), Perturbation::two_photon(0.5).unwrap()] {
        assert!(f.phase_symmetric());
        let history = BackgroundHistory::evolve(&f, 1.0, 0.05, 10.0, 1000).unwrap();
        let dz = SimConfig::max_dz(&grid);
        let cfg = SimConfig::new(0.05, f, dz, (0.5 / dz) as usize);
        let snaps = run(&cfg, &soliton_field(&params, grid).unwrap(), &history, 10.0).unwrap();
        let jump = |s: &darkshelf::field::FieldState| (s.samples[s.samples.len() - 1] / s.samples[0]).arg();
        let first = jump(&snaps[0]);
        for s in &snaps {
            assert!((jump(s) - first).abs() < 1e-6, "z = {}", s.z);
        }
    }
}
