//! Independent-oracle tests: numerical integration, finite differences, and
//! exhaustive enumeration checking the closed forms, analytic derivatives,
//! and dynamic-programming metrics against implementations that share no
//! code with them.

mod common;

use bolocor::evaluation::{discrete_frechet, dtw_distance, mean_distance, Trajectory};
use bolocor::photometric::energy_and_derivatives;
use bolocor::sensor::{
    cooling_response, heating_response, simulate_pixel_sequence, FrameTiming, SimulationMode,
    TimeConstants,
};
use common::*;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const MICROSECOND: f64 = 1e-6;

#[test]
fn heating_closed_form_matches_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let tau_h = rng.random_range(0.004..0.040);
        let i_ss = rng.random_range(-300.0..500.0);
        let i_init = rng.random_range(-100.0..400.0);
        let t = rng.random_range(0.001..0.040);
        let closed = heating_response(i_ss, tau_h, t, i_init).unwrap();
        let integrated = rk4(i_init, |y| (i_ss - y) / tau_h, t, MICROSECOND);
        assert!(
            relative_error(closed, integrated, 1e-9) <= 1e-6,
            "closed {closed} vs rk4 {integrated} (tau_h {tau_h}, t {t})"
        );
    }
}

#[test]
fn cooling_closed_form_matches_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let tau_c = rng.random_range(0.004..0.040);
        let i0 = rng.random_range(-200.0..500.0);
        let t = rng.random_range(0.001..0.060);
        let closed = cooling_response(i0, tau_c, t).unwrap();
        let integrated = rk4(i0, |y| -y / tau_c, t, MICROSECOND);
        assert!(
            relative_error(closed, integrated, 1e-9) <= 1e-6,
            "closed {closed} vs rk4 {integrated} (tau_c {tau_c}, t {t})"
        );
    }
}

#[test]
fn physical_mode_simulation_matches_frame_by_frame_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let taus = TimeConstants::new(
            rng.random_range(0.006..0.020),
            rng.random_range(0.006..0.020),
        )
        .unwrap();
        let period = 1.0 / 30.0;
        let frames = 6;
        let timings: Vec<FrameTiming> = (0..frames)
            .map(|k| {
                let exposure = rng.random_range(0.004..0.020);
                FrameTiming::new(k as f64 * period, exposure, period - exposure).unwrap()
            })
            .collect();
        let film: Vec<f64> = (0..frames).map(|_| rng.random_range(0.0..400.0)).collect();

        let raw =
            simulate_pixel_sequence(&film, &timings, taus, SimulationMode::PhysicalOde).unwrap();

        // Reference: integrate the pixel ODE through each exposure (driven
        // toward the film value) and each readout (driven toward zero).
        let mut state = 0.0;
        for (k, timing) in timings.iter().enumerate() {
            state = rk4(
                state,
                |y| (film[k] - y) / taus.tau_h(),
                timing.exposure(),
                MICROSECOND,
            );
            assert!(
                relative_error(raw[k], state, 1e-9) <= 1e-6,
                "frame {k}: simulated {} vs rk4 {state}",
                raw[k]
            );
            state = rk4(state, |y| -y / taus.tau_c(), timing.readout(), MICROSECOND);
        }
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for round in 0..30 {
        let instance = random_energy_instance(&mut rng);
        let report = energy_and_derivatives(
            &instance.correspondences,
            &instance.seq,
            instance.taus,
            &instance.kernel,
        )
        .unwrap();
        let numeric = fd_gradient(|t| instance.energy_at(t), instance.taus, 1e-6);
        for axis in 0..2 {
            let rel = relative_error(report.gradient[axis], numeric[axis], 1e-9);
            assert!(
                rel <= 1e-5,
                "round {round} axis {axis}: analytic {} vs fd {} (rel {rel:.3e})",
                report.gradient[axis],
                numeric[axis]
            );
        }
    }
}

#[test]
fn gauss_newton_diagonal_matches_second_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for round in 0..30 {
        let instance = random_energy_instance(&mut rng);
        let report = energy_and_derivatives(
            &instance.correspondences,
            &instance.seq,
            instance.taus,
            &instance.kernel,
        )
        .unwrap();
        let numeric = fd_second_diag(|t| instance.energy_at(t), instance.taus, 3e-5);
        for axis in 0..2 {
            let analytic = report.gauss_newton_hessian[axis][axis];
            let rel = relative_error(analytic, numeric[axis], 1e-9);
            assert!(
                rel <= 1e-3,
                "round {round} axis {axis}: GN {analytic} vs fd {} (rel {rel:.3e})",
                numeric[axis]
            );
        }
    }
}

fn short_points() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(
        prop::array::uniform3(-5.0f64..5.0),
        1..=6,
    )
}

fn as_trajectory(points: &[[f64; 3]]) -> Trajectory {
    Trajectory::new(
        points
            .iter()
            .enumerate()
            .map(|(k, &p)| (k as f64 * 0.1, p))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn frechet_equals_exhaustive_enumeration(a in short_points(), b in short_points()) {
        let got = discrete_frechet(&as_trajectory(&a), &as_trajectory(&b)).unwrap();
        let want = brute_frechet(&a, &b);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn dtw_equals_exhaustive_enumeration(a in short_points(), b in short_points()) {
        let got = dtw_distance(&as_trajectory(&a), &as_trajectory(&b)).unwrap();
        let want = brute_dtw(&a, &b);
        prop_assert_eq!(got, want);
    }
}

#[test]
fn metrics_are_invariant_under_rigid_motion() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for _ in 0..50 {
        let len_a = rng.random_range(2..10);
        let len_b = rng.random_range(2..10);
        let a = random_trajectory(&mut rng, len_a);
        // Reuse a's timestamps where possible so the matched-mean metric has
        // pairs to average; extra samples beyond a's length stay unmatched.
        let mut samples = Vec::with_capacity(len_b);
        let mut t = a.samples().last().unwrap().0;
        for k in 0..len_b {
            let stamp = if k < len_a {
                a.samples()[k].0
            } else {
                t += rng.random_range(0.01..0.5);
                t
            };
            let p = [
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ];
            samples.push((stamp, p));
        }
        let b = Trajectory::new(samples).unwrap();

        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let shift = [
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        ];
        let transform = |traj: &Trajectory| {
            Trajectory::new(
                traj.samples()
                    .iter()
                    .map(|&(t, p)| {
                        let q = [
                            p[0] * angle.cos() - p[1] * angle.sin() + shift[0],
                            p[0] * angle.sin() + p[1] * angle.cos() + shift[1],
                            p[2] + shift[2],
                        ];
                        (t, q)
                    })
                    .collect(),
            )
            .unwrap()
        };
        let (ta, tb) = (transform(&a), transform(&b));

        let df = discrete_frechet(&a, &b).unwrap();
        let dtw = dtw_distance(&a, &b).unwrap();
        let md = mean_distance(&a, &b).unwrap();
        let df_t = discrete_frechet(&ta, &tb).unwrap();
        let dtw_t = dtw_distance(&ta, &tb).unwrap();
        let md_t = mean_distance(&ta, &tb).unwrap();

        assert!(relative_error(df, df_t, 1e-12) <= 1e-9);
        assert!(relative_error(dtw, dtw_t, 1e-12) <= 1e-9);
        assert!(relative_error(md.mean, md_t.mean, 1e-12) <= 1e-9);
        assert_eq!(md.matched, md_t.matched);
        assert_eq!(md.unmatched, md_t.unmatched);
    }
}
