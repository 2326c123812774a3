use mdiqkd_core::oracle::{evolve_single_photon_pair, oracle_yield_and_error};
use mdiqkd_core::single_photon::{error_11, pair_yields, yield_11};
use mdiqkd_core::ExperimentParams;

const ETAS: [f64; 5] = [0.0, 0.01, 0.145, 0.5, 1.0];
const DARK: [f64; 3] = [0.0, 1e-6, 1e-3];
const MISALIGN: [f64; 2] = [0.0, 0.015];

fn grid() -> impl Iterator<Item = ExperimentParams> {
    ETAS.into_iter().flat_map(|ea| {
        ETAS.into_iter().flat_map(move |eb| {
            DARK.into_iter().flat_map(move |p_d| {
                MISALIGN
                    .into_iter()
                    .map(move |e_d| ExperimentParams { p_d, e_d, ..ExperimentParams::ideal(ea, eb) })
            })
        })
    })
}

#[test]
fn yield_and_error_match_fock_simulation() {
    for p in grid() {
        let (y, ey) = oracle_yield_and_error(p.eta_a, p.eta_b, p.p_d, p.e_d);
        assert!((y - yield_11(&p)).abs() <= 1e-12, "{p:?}: {y} vs {}", yield_11(&p));
        assert!((ey - error_11(&p).1).abs() <= 1e-12, "{p:?}: {ey} vs {}", error_11(&p).1);
    }
}

#[test]
fn individual_click_patterns_match() {
    for p in grid() {
        let pats = evolve_single_photon_pair(0.0, 0.0, p.eta_a, p.eta_b, p.p_d);
        let find = |c: [bool; 4]| pats.iter().find(|x| x.clicks == c).unwrap().probability;
        let want = pair_yields(&p);
        for (got, want) in [
            (find([true, false, true, false]), want.y_r0s0),
            (find([false, true, false, true]), want.y_r1s1),
            (find([true, false, false, true]), want.y_r0s1),
            (find([false, true, true, false]), want.y_r1s0),
        ] {
            assert!((got - want).abs() <= 1e-12, "{p:?}: {got} vs {want}");
        }
    }
}

#[test]
fn tabulated_point_matches() {
    let p = ExperimentParams::table_one(0.0145, 0.0145);
    let (y, ey) = oracle_yield_and_error(p.eta_a, p.eta_b, p.p_d, p.e_d);
    assert!((y - yield_11(&p)).abs() <= 1e-12);
    assert!((ey / y - error_11(&p).0).abs() <= 1e-12);
}

#[test]
fn opposite_phase_swaps_the_error_class() {
    for p in grid() {
        let aligned = evolve_single_photon_pair(0.0, 0.0, p.eta_a, p.eta_b, p.p_d);
        let opposite = evolve_single_photon_pair(std::f64::consts::PI, 0.0, p.eta_a, p.eta_b, p.p_d);
        let get = |v: &[mdiqkd_core::ClickPattern], c: [bool; 4]| v.iter().find(|x| x.clicks == c).unwrap().probability;
        let (r0s0, r0s1) = ([true, false, true, false], [true, false, false, true]);
        assert!((get(&aligned, r0s0) - get(&opposite, r0s1)).abs() <= 1e-12);
        assert!((get(&aligned, r0s1) - get(&opposite, r0s0)).abs() <= 1e-12);
    }
}
