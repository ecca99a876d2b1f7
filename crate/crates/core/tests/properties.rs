use proptest::prelude::*;

use sburgers_core::noise::BrownianGrid;
use sburgers_core::scheme::{
    reference_solution, simulate, simulate_coupled, SamplerMode, SchemeConfig,
};
use sburgers_core::spectral::{
    burgers_nonlinearity, project, semigroup_apply, OperatorSpectrum, SpectralVector,
};
use sburgers_core::taming::{tame, TamingProfile};

fn state(max_len: usize) -> impl Strategy<Value = SpectralVector> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_len).prop_map(|v| SpectralVector::new(v).unwrap())
}

proptest! {
    #[test]
    fn projection_is_idempotent(v in state(40), n in 1usize..50) {
        let once = project(&v, n);
        prop_assert_eq!(project(&once, n), once.clone());
        prop_assert!(once.norm() <= v.norm());
    }

    #[test]
    fn semigroup_contracts_and_composes(v in state(24), s in 0.0f64..0.05, t in 0.0f64..0.05) {
        let spec = OperatorSpectrum::new(v.len()).unwrap();
        let st = semigroup_apply(&v, s + t, &spec);
        prop_assert!(st.norm() <= v.norm() * (-std::f64::consts::PI.powi(2) * (s + t)).exp() + 1e-12);
        let composed = semigroup_apply(&semigroup_apply(&v, s, &spec), t, &spec);
        prop_assert!(st.max_abs_diff(&composed) <= 1e-13 * (1.0 + v.norm()));
    }

    #[test]
    fn taming_never_grows_the_state(v in state(24), n in 1usize..10_000) {
        let profile = TamingProfile::default();
        let t = tame(&v, n, &profile);
        prop_assert!(t.norm() <= v.norm());
        prop_assert!(t.norm() <= profile.norm_cap() * (n as f64).powf(profile.gamma()) + 1e-12);
    }

    #[test]
    fn nonlinearity_is_energy_neutral(v in state(20), c in -3.0f64..3.0) {
        let f = burgers_nonlinearity(&v, c, v.len());
        let scale = c.abs() * v.norm_squared() * v.sobolev_norm(0.5) + 1e-300;
        prop_assert!(v.dot(&f).abs() <= 1e-10 * scale);
    }
}

#[test]
fn reference_matches_the_fine_scheme_on_the_same_path() {
    let mut cfg = SchemeConfig::new(12, 64);
    cfg.sampler = SamplerMode::Grid { master_steps: 256 };
    let grid = BrownianGrid::generate(cfg.seed, 3, 12, 256, cfg.horizon).unwrap();
    let via_grid = simulate(&cfg, 3).unwrap();
    let reference = reference_solution(&cfg, &grid).unwrap();
    assert_eq!(via_grid.final_state(), reference.final_state());

    let mut coarse = cfg.clone();
    coarse.steps = 8;
    let (c, f) = simulate_coupled(&coarse, &cfg, &grid).unwrap();
    assert_eq!(f.final_state(), reference.final_state());
    // Coupled on one path, so the gap is a discretization error, far below
    // the spread between independent paths.
    let other = BrownianGrid::generate(cfg.seed, 4, 12, 256, cfg.horizon).unwrap();
    let independent = reference_solution(&cfg, &other).unwrap();
    let coupled_gap = (c.final_state() - f.final_state()).norm();
    let path_gap = (independent.final_state() - f.final_state()).norm();
    assert!(coupled_gap < path_gap, "{coupled_gap} vs {path_gap}");
}

#[test]
fn trajectories_do_not_depend_on_evaluation_order() {
    let cfg = SchemeConfig::new(8, 16);
    let forward: Vec<_> = (0..6).map(|id| simulate(&cfg, id).unwrap()).collect();
    for id in (0..6).rev() {
        assert_eq!(simulate(&cfg, id).unwrap(), forward[id as usize]);
    }
    assert_ne!(forward[0], forward[1]);
}
