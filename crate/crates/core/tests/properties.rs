//! Property tests over the public API.

use hankel_dmd::ar_oracle::{ar_from_basis, ar_predict, companion, SpectralBasis};
use hankel_dmd::dmd::{DmdModel, TruncationPolicy};
use hankel_dmd::dynamics::{elements_to_state, solve_kepler, state_to_elements, GravityModel, OrbitalElements};
use hankel_dmd::experiments::{sweep_window, SweepContext};
use hankel_dmd::io::{trajectory_from_str, trajectory_to_string};
use hankel_dmd::numerics::{self, RealMatrix};
use hankel_dmd::tle::{parse_tle, serialize_tle, TleRecord};
use hankel_dmd::{build_hankel, fit, Execution, Trajectory};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

/// Real signal `Σ a_m cos(ω_m k + φ_m)` in every row, with per-row
/// amplitudes and phases.
fn tones(omegas: &[f64], amps: &[(f64, f64)], rows: usize, len: usize) -> Trajectory {
    let states = RealMatrix::from_fn(rows, len, |d, k| {
        omegas
            .iter()
            .enumerate()
            .map(|(m, w)| {
                let (a, phi) = amps[(m + d) % amps.len()];
                a * (w * k as f64 + phi + d as f64).cos()
            })
            .sum()
    });
    let labels = (0..rows).map(|d| format!("x{d}")).collect();
    Trajectory::new(1.0, 0.0, states, labels).unwrap()
}

/// Frequencies in `(0.2, π − 0.2)`, pairwise at least 0.25 rad apart.
fn separated(count: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.2f64..(PI - 0.2), count).prop_filter("separated", |w| {
        let mut s = w.clone();
        s.sort_by(f64::total_cmp);
        s.windows(2).all(|p| p[1] - p[0] > 0.25)
    })
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((0.5f64..2.0, 0.0f64..TAU), 1..4)
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

fn designator() -> impl Strategy<Value = String> {
    ("[0-9]{5}", "[A-Z]{1,3}").prop_map(|(a, b)| format!("{:<8}", format!("{a}{b}")))
}

fn exponent_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        (any::<bool>(), 10_000u32..100_000, -8i32..=9).prop_map(|(neg, m, e)| {
            let v: f64 = format!("0.{m}e{e}").parse().unwrap();
            if neg {
                -v
            } else {
                v
            }
        }),
    ]
}

prop_compose! {
    fn tle_record()(
        norad_id in 0u32..100_000,
        intl_designator in designator(),
        epoch_year in 0u32..100,
        epoch_day in 100_000_000u64..36_700_000_000,
        ndot in -99_999_999i64..100_000_000,
        mean_motion_ddot in exponent_value(),
        bstar in exponent_value(),
        element_set in 0u32..10_000,
        inclination in 0u32..=1_800_000,
        raan in 0u32..3_600_000,
        ecc in 0u32..10_000_000,
        argp in 0u32..3_600_000,
        mean_anomaly in 0u32..3_600_000,
        mean_motion in 10_000_000u64..1_700_000_000,
        rev_number in 0u32..100_000,
    ) -> TleRecord {
        TleRecord {
            norad_id,
            classification: 'U',
            intl_designator,
            epoch_year,
            epoch_day: epoch_day as f64 / 1e8,
            mean_motion_dot: ndot as f64 / 1e8,
            mean_motion_ddot,
            bstar,
            ephemeris_type: '0',
            element_set,
            inclination: inclination as f64 / 1e4,
            raan: raan as f64 / 1e4,
            eccentricity: ecc as f64 / 1e7,
            argp: argp as f64 / 1e4,
            mean_anomaly: mean_anomaly as f64 / 1e4,
            mean_motion: mean_motion as f64 / 1e8,
            rev_number,
            line1_checksum: 0,
            line2_checksum: 0,
        }
    }
}

fn last_digit(line: &str) -> u8 {
    line.as_bytes()[68] - b'0'
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tle_parse_inverts_serialize(mut rec in tle_record()) {
        let (l1, l2) = serialize_tle(&rec).unwrap();
        prop_assert_eq!(l1.len(), 69);
        prop_assert_eq!(l2.len(), 69);
        rec.line1_checksum = last_digit(&l1);
        rec.line2_checksum = last_digit(&l2);
        prop_assert_eq!(parse_tle(&l1, &l2).unwrap(), rec);
    }

    #[test]
    fn tle_single_digit_change_fails_checksum(rec in tle_record(), pick in any::<prop::sample::Index>(), bump in 1u8..10) {
        let (l1, l2) = serialize_tle(&rec).unwrap();
        let digits: Vec<usize> = l1.bytes().take(68).enumerate().filter(|(_, b)| b.is_ascii_digit()).map(|(i, _)| i).collect();
        let at = digits[pick.index(digits.len())];
        let mut bytes = l1.into_bytes();
        bytes[at] = b'0' + (bytes[at] - b'0' + bump) % 10;
        let corrupted = String::from_utf8(bytes).unwrap();
        prop_assert!(parse_tle(&corrupted, &l2).is_err());
    }

    #[test]
    fn kepler_residual(m in -20.0f64..20.0, e in 0.0f64..0.99) {
        let ea = solve_kepler(m, e).unwrap();
        prop_assert!(wrap(ea - e * ea.sin() - m).abs() < 1e-12);
    }

    #[test]
    fn elements_survive_state_round_trip(
        a in 6600.0f64..45_000.0,
        e in 0.01f64..0.9,
        i in 1.0f64..179.0,
        raan in 0.0f64..360.0,
        argp in 0.0f64..360.0,
        f in 0.0f64..360.0,
    ) {
        let g = GravityModel::earth();
        let el = OrbitalElements { a, e, i, raan, argp, true_anomaly: f };
        let (r, v) = elements_to_state(&el, &g).unwrap();
        let back = state_to_elements(&r, &v, &g).unwrap();
        prop_assert!((back.a - a).abs() < 1e-8 * a);
        prop_assert!((back.e - e).abs() < 1e-10);
        prop_assert!((back.i - i).abs() < 1e-8);
        for (x, y) in [(back.raan, raan), (back.argp, argp), (back.true_anomaly, f)] {
            prop_assert!(wrap((x - y).to_radians()).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn retained_rank_grows_with_energy(
        mut s in proptest::collection::vec(0.0f64..10.0, 1..15),
        lo in 0.5f64..1.0,
        hi in 0.5f64..1.0,
    ) {
        s.sort_by(|a, b| b.total_cmp(a));
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let r_lo = TruncationPolicy::energy(lo).rank_for(&s, 20, 20);
        let r_hi = TruncationPolicy::energy(hi).rank_for(&s, 20, 20);
        prop_assert!(r_lo <= r_hi);
        prop_assert!(r_hi <= s.len());
    }

    #[test]
    fn pseudoinverse_of_wide_matrix_is_right_inverse(
        rows in 1usize..5,
        extra in 1usize..5,
        seed in proptest::collection::vec(-1.0f64..1.0, 81),
    ) {
        let cols = rows + extra;
        let a = RealMatrix::from_fn(rows, cols, |i, j| seed[i * 9 + j] + if i == j { 3.0 } else { 0.0 });
        let pinv = numerics::pseudoinverse(&a, numerics::DEFAULT_RANK_TOL).unwrap();
        let right = a.transpose() * (&a * a.transpose()).try_inverse().unwrap();
        prop_assert!((&pinv - &right).norm() < 1e-10 * right.norm());
        prop_assert!((&a * &pinv * &a - &a).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn trajectory_text_round_trip_is_exact(
        dt in 1e-6f64..1e6,
        t0 in -1e9f64..1e9,
        rows in 1usize..4,
        values in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 12),
    ) {
        let cols = values.len() / rows;
        let states = RealMatrix::from_fn(rows, cols, |i, j| values[j * rows + i]);
        let labels = (0..rows).map(|d| format!("c{d}")).collect();
        let traj = Trajectory::new(dt, t0, states, labels).unwrap();
        let back = trajectory_from_str(&trajectory_to_string(&traj)).unwrap();
        prop_assert_eq!(back, traj);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ar_from_basis_reproduces_any_signal_in_its_span(
        omegas in (1usize..4).prop_flat_map(separated),
        amps in amplitudes(),
        extra in 0usize..3,
    ) {
        let basis = SpectralBasis::real_signal(&omegas, false).unwrap();
        let order = basis.len() + extra;
        let ar = ar_from_basis(&basis, order).unwrap();
        let traj = tones(&omegas, &amps, 2, order + 30);
        let x = traj.states();
        let predicted = ar_predict(&ar, &x.columns(0, order).into_owned(), 30).unwrap();
        let scale = x.norm();
        prop_assert!((predicted - x.columns(order, 30)).norm() < 1e-8 * scale);

        let eig = numerics::eig(&companion(&ar)).unwrap();
        for w in &omegas {
            let target = num_complex::Complex64::from_polar(1.0, *w);
            let gap = eig.values.iter().map(|v| (v - target).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(gap < 1e-7, "ω = {w}, gap {gap}");
        }
    }

    #[test]
    fn dmd_on_tones_is_conjugate_closed_and_real(
        omegas in (1usize..4).prop_flat_map(separated),
        amps in amplitudes(),
    ) {
        let l = 2 * omegas.len();
        let traj = tones(&omegas, &amps, 2, 40);
        let pair = build_hankel(&traj, l).unwrap();
        let model = fit(&pair, &TruncationPolicy::default(), 1.0).unwrap();
        let rank_h = numerics::numerical_rank(&model.singular_values, 1e-10);
        prop_assert_eq!(model.rank, rank_h);
        prop_assert_eq!(model.rank, 2 * omegas.len());
        for v in &model.eigenvalues {
            let gap = model.eigenvalues.iter().map(|u| (u - v.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(gap < 1e-8);
        }
        let scale = traj.states().norm() / (traj.len() as f64).sqrt();
        for k in 0..traj.len() {
            let (x, imag) = model.predict_with_residual(k);
            prop_assert!(imag < 1e-6 * scale);
            prop_assert!((x - traj.state(k)).norm() < 1e-7 * scale);
        }
    }

    #[test]
    fn forecast_matches_ar_on_tones(
        omegas in (1usize..3).prop_flat_map(separated),
        amps in amplitudes(),
    ) {
        let l = 2 * omegas.len();
        let traj = tones(&omegas, &amps, 3, 50);
        let model = fit(&build_hankel(&traj, l).unwrap(), &TruncationPolicy::default(), 1.0).unwrap();
        let basis = SpectralBasis::real_signal(&omegas, false).unwrap();
        let ar = ar_from_basis(&basis, l).unwrap();
        let history = traj.states().columns(10, l).into_owned();
        let dmd = model.forecast(&history, 20).unwrap();
        let oracle = ar_predict(&ar, &history, 20).unwrap();
        prop_assert!((&dmd - &oracle).norm() < 1e-7 * oracle.norm());
    }

    #[test]
    fn linear_map_is_recovered_exactly(
        thetas in proptest::collection::vec(0.1f64..3.0, 2),
        radii in proptest::collection::vec(0.9f64..1.0, 2),
        x0 in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mut a = RealMatrix::zeros(4, 4);
        for b in 0..2 {
            let (s, c) = thetas[b].sin_cos();
            let r = radii[b];
            a[(2 * b, 2 * b)] = r * c;
            a[(2 * b, 2 * b + 1)] = -r * s;
            a[(2 * b + 1, 2 * b)] = r * s;
            a[(2 * b + 1, 2 * b + 1)] = r * c;
        }
        let mut states = RealMatrix::zeros(4, 30);
        states.set_column(0, &nalgebra::DVector::from_vec(x0.iter().map(|v| v + 0.1).collect()));
        for k in 1..30 {
            let next = &a * states.column(k - 1);
            states.set_column(k, &next);
        }
        let labels = (0..4).map(|d| format!("x{d}")).collect();
        let traj = Trajectory::new(0.5, 0.0, states, labels).unwrap();
        let model = fit(&build_hankel(&traj, 1).unwrap(), &TruncationPolicy::energy(1.0), 0.5).unwrap();
        let scale = traj.state(0).norm();
        for k in 0..traj.len() {
            prop_assert!((model.predict(k) - traj.state(k)).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn model_json_round_trip_is_exact(
        omegas in (1usize..3).prop_flat_map(separated),
        amps in amplitudes(),
        l in 4usize..8,
    ) {
        let traj = tones(&omegas, &amps, 2, 40);
        let model = fit(&build_hankel(&traj, l).unwrap(), &TruncationPolicy::default(), 1.0).unwrap();
        prop_assert_eq!(DmdModel::from_json(&model.to_json().unwrap()).unwrap(), model);
    }

    #[test]
    fn window_sweep_is_deterministic_and_rank_never_drops(
        omegas in (1usize..3).prop_flat_map(separated),
        amps in amplitudes(),
    ) {
        let traj = tones(&omegas, &amps, 2, 120);
        let periods = [1.0, 1.5, 2.0, 3.0, 4.0];
        let ctx = SweepContext::new(20.0);
        let seq = sweep_window(&traj, 4, &periods, &ctx.with_execution(Execution::Sequential)).unwrap();
        let par = sweep_window(&traj, 4, &periods, &ctx.with_execution(Execution::Parallel)).unwrap();
        prop_assert_eq!(&seq, &par);
        let ranks: Vec<usize> = seq.ranks().into_iter().flatten().collect();
        prop_assert_eq!(ranks.len(), periods.len());
        prop_assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{ranks:?}");
    }
}
