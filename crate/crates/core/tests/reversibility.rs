mod common;

use revgas::dynamics::{init_state, reverse_velocities, Integrator};
use revgas::experiments::{run_free_expansion, run_loschmidt, CollisionCounter, LoschmidtProtocol, Setup};
use revgas::entropy::coarse_grain;
use revgas::perturb::PerturbationSpec;

#[test]
fn forward_then_back_through_collisions_is_exact() {
    let config = common::build(&common::gas(100, 2000, 100, 4));
    let integ = config.fixed_integrator().unwrap();
    let start = init_state(&integ, 100, 4).unwrap();
    let mut state = start.clone();
    let mut counter = CollisionCounter::new(&integ, &state);
    for _ in 0..2000 {
        integ.step(&mut state).unwrap();
        counter.update(&integ, &state);
    }
    assert!(counter.collisions() >= 10, "only {} collisions", counter.collisions());
    for _ in 0..2000 {
        integ.step_back(&mut state).unwrap();
    }
    assert_eq!(state, start);
}

#[test]
fn step_back_from_the_start_runs_into_negative_time() {
    let config = common::build(&common::gas(20, 10, 1, 2));
    let integ = config.fixed_integrator().unwrap();
    let start = init_state(&integ, 20, 2).unwrap();
    let mut s = start.clone();
    integ.step_back(&mut s).unwrap();
    assert_eq!(s.time_step_index(), -1);
    integ.step(&mut s).unwrap();
    assert_eq!(s, start);
}

#[test]
fn reversing_then_stepping_mirrors_step_back() {
    let config = common::build(&common::gas(60, 500, 100, 9));
    let integ = config.fixed_integrator().unwrap();
    let start = init_state(&integ, 60, 9).unwrap();
    let mut back = start.clone();
    let mut mirrored = reverse_velocities(&start);
    for _ in 0..500 {
        integ.step_back(&mut back).unwrap();
        integ.step(&mut mirrored).unwrap();
    }
    assert_eq!(back.positions(), mirrored.positions());
    assert_eq!(reverse_velocities(&back).velocities(), mirrored.velocities());
}

#[test]
fn unperturbed_reversal_returns_bit_exactly() {
    let config = common::build(&common::gas(100, 3000, 100, 5));
    let integ = config.fixed_integrator().unwrap();
    let setup = Setup::from_config(&config, &integ).unwrap();
    let out = run_loschmidt(&setup, &LoschmidtProtocol::new(3000, PerturbationSpec::none())).unwrap();
    assert!(out.exact_return);
    let first = out.series.samples()[0];
    let last = *out.series.last().unwrap();
    assert_eq!(last.step, 6000);
    assert_eq!(first.return_fraction, last.return_fraction);
    assert_eq!(first.entropy_macro, last.entropy_macro);
}

#[test]
fn reversal_at_zero_runs_the_time_mirror() {
    let steps = 1500;
    let config = common::build(&common::gas(100, steps, 50, 6));
    let integ = config.fixed_integrator().unwrap();
    let setup = Setup::from_config(&config, &integ).unwrap();
    let protocol = LoschmidtProtocol {
        return_steps: Some(steps),
        ..LoschmidtProtocol::new(0, PerturbationSpec::none())
    };
    let out = run_loschmidt(&setup, &protocol).unwrap();

    let mut back = init_state(&integ, 100, 6).unwrap();
    for s in out.series.samples() {
        while (-back.time_step_index()) < s.step as i64 {
            integ.step_back(&mut back).unwrap();
        }
        let m = coarse_grain(&integ, &back, setup.grid);
        assert_eq!(s.entropy_macro, m.entropy_macroscopic, "step {}", s.step);
    }

    // The forward expansion shares the starting entropy, and both legs
    // spread out to the same plateau.
    let forward = run_free_expansion(&setup).unwrap();
    assert_eq!(forward.samples()[0].entropy_macro, out.series.samples()[0].entropy_macro);
    let (a, b) = (forward.last().unwrap().entropy_macro, out.series.last().unwrap().entropy_macro);
    assert!((a - b).abs() / a < 0.05, "{a} vs {b}");
}

#[test]
fn entropy_ignores_velocity_reversal() {
    let config = common::build(&common::gas(100, 700, 100, 8));
    let integ = config.fixed_integrator().unwrap();
    let setup = Setup::from_config(&config, &integ).unwrap();
    let mut s = init_state(&integ, 100, 8).unwrap();
    integ.run(&mut s, 700).unwrap();
    let a = coarse_grain(&integ, &s, setup.grid);
    let b = coarse_grain(&integ, &reverse_velocities(&s), setup.grid);
    assert_eq!(a, b);
}
