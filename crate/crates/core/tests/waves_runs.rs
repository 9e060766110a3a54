use kpp_shift::waves::{
    check_weak_decay_inequality, measure_decay, relax_from_super_solution, relax_to_wave,
    uniqueness_probe, RelaxConfig,
};
use kpp_shift::{speeds, Case, ChiProfile, Parameters};

#[test]
fn locked_wave_relaxes_with_strong_decay() {
    let p = Parameters::benchmark(Case::Decreasing, 1.5);
    let chi = ChiProfile::logistic(&p).unwrap();
    let w = relax_to_wave(&p, &chi, RelaxConfig::default_grid(), &RelaxConfig::default()).unwrap();
    assert!(w.converged && w.increment < 1e-10);
    assert!(w.residual < 1e-6, "{}", w.residual);
    assert!(w.monotone && w.in_range);
    assert!(w.max_increase <= 1e-8, "{}", w.max_increase);
    let (_, lambda_s) = speeds::decay_rates(&p).unwrap();
    assert!((lambda_s - 5.2360680).abs() < 1e-7);
    let fit = measure_decay(&w, 1e-14, 1e-8).unwrap();
    assert!((fit.lambda - lambda_s).abs() / lambda_s < 0.05, "{fit:?}");
}

#[test]
fn two_initializations_reach_one_profile() {
    let p = Parameters::benchmark(Case::Decreasing, 1.5);
    let chi = ChiProfile::logistic(&p).unwrap();
    let rep = uniqueness_probe(&p, &chi, RelaxConfig::default_grid(), &RelaxConfig::default(), &[5.0, 15.0])
        .unwrap();
    assert!(rep.all_converged);
    assert!(rep.max_distance < 1e-4, "{rep:?}");
}

#[test]
fn anomalous_profile_satisfies_weak_decay_bound() {
    let p = Parameters::benchmark(Case::Decreasing, 2.5);
    let chi = ChiProfile::logistic(&p).unwrap();
    let cfg = RelaxConfig { t_max: 50.0, ..RelaxConfig::default() };
    let w = relax_from_super_solution(&p, &chi, RelaxConfig::default_grid(), &cfg).unwrap();
    let rep = check_weak_decay_inequality(&w.grid.points(), &w.u, &p, 2.0, 1e-8);
    assert!(rep.evaluated > 100 && rep.positive, "{rep:?}");
}

#[test]
fn relaxation_refuses_other_regimes() {
    let p = Parameters::benchmark(Case::Decreasing, 0.5);
    let chi = ChiProfile::logistic(&p).unwrap();
    assert!(relax_to_wave(&p, &chi, RelaxConfig::default_grid(), &RelaxConfig::default()).is_err());
}
