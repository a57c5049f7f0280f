use std::sync::Arc;

use ecmsim::ecm::{monte_carlo_evolve, stationary_distribution, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use ecmsim::schedule::{format_schedule, parse_schedule};
use ecmsim::{EcmMatrix, NamedSchedule, Schedule, SimulationModel, StateVector};
use proptest::prelude::*;

/// Column-stochastic matrix with entries bounded away from zero.
fn ecm(n: usize) -> impl Strategy<Value = EcmMatrix> {
    prop::collection::vec(0.05f64..1.0, n * n).prop_map(move |w| {
        let mut rows = vec![vec![0.0; n]; n];
        for src in 0..n {
            let total: f64 = (0..n).map(|d| w[d * n + src]).sum();
            for (dest, row) in rows.iter_mut().enumerate() {
                row[src] = w[dest * n + src] / total;
            }
        }
        EcmMatrix::from_rows("M", &rows).unwrap()
    })
}

fn counts(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1000.0, n)
}

fn sized() -> impl Strategy<Value = (EcmMatrix, Vec<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| (ecm(n), counts(n), counts(n)))
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

/// A model over three random matrices with random schedules of `length`.
fn model(length: usize) -> impl Strategy<Value = SimulationModel> {
    (2usize..=4).prop_flat_map(move |n| {
        (
            ecm(n),
            ecm(n),
            ecm(n),
            prop::collection::vec(1.0f64..500.0, n),
            prop::collection::vec(prop::collection::vec(0usize..3, length), 1..6),
        )
            .prop_map(move |(a, b, c, init, scheds)| {
                let conds = vec![a.with_label("A"), b.with_label("B"), c.with_label("C")];
                let schedules = scheds.into_iter().enumerate().map(|(i, ix)| {
                    let s = Schedule::new(ix.iter().map(|&k| ["A", "B", "C"][k])).unwrap();
                    NamedSchedule::new(format!("sched_{i}"), s)
                });
                SimulationModel::new(names(n), conds, init, length)
                    .unwrap()
                    .with_schedules(schedules)
                    .unwrap()
            })
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn conservative_evolution_preserves_population(m in model(40)) {
        let total = m.initial().total();
        for traj in m.evolve_all(None).unwrap() {
            for s in &traj.states {
                prop_assert!(close(s.total(), total, 1e-12), "{} vs {}", s.total(), total);
                prop_assert!(s.counts().iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn step_is_linear((m, x, y) in sized(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let n = x.len();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let mx = m.step(&StateVector::unnamed(x).unwrap()).unwrap();
        let my = m.step(&StateVector::unnamed(y).unwrap()).unwrap();
        let mc = m.step(&StateVector::unnamed(combo).unwrap()).unwrap();
        for i in 0..n {
            let expect = a * mx.counts()[i] + b * my.counts()[i];
            prop_assert!(close(mc.counts()[i], expect, 1e-12));
        }
    }

    #[test]
    fn repeated_steps_equal_matrix_power((m, x, _) in sized(), k in 0u32..30) {
        let mut s = StateVector::unnamed(x.clone()).unwrap();
        for _ in 0..k {
            s = m.step(&s).unwrap();
        }
        let direct = m.power(k).step(&StateVector::unnamed(x).unwrap()).unwrap();
        for (a, b) in s.counts().iter().zip(direct.counts()) {
            prop_assert!(close(*a, *b, 1e-10), "{a} vs {b}");
        }
    }

    #[test]
    fn composition_applies_right_factor_first(
        (a, b) in (2usize..=5).prop_flat_map(|n| (ecm(n), ecm(n)))
    ) {
        let n = a.size();
        let x = StateVector::unnamed((0..n).map(|i| 10.0 * (i + 1) as f64).collect()).unwrap();
        let two_steps = a.step(&b.step(&x).unwrap()).unwrap();
        let composed = a.compose(&b).unwrap();
        for (p, q) in two_steps.counts().iter().zip(composed.step(&x).unwrap().counts()) {
            prop_assert!(close(*p, *q, 1e-12));
        }
        prop_assert!(composed.is_conservative());
    }

    #[test]
    fn evolve_all_is_independent_of_jobs(m in model(25), jobs in 2usize..9) {
        let serial = m.evolve_all(Some(1)).unwrap();
        let parallel = m.evolve_all(Some(jobs)).unwrap();
        prop_assert_eq!(&serial, &parallel);
        for (traj, s) in serial.iter().zip(m.schedules()) {
            prop_assert_eq!(&traj.schedule_label, &s.name);
            prop_assert_eq!(traj, &m.evolve_named(s).unwrap());
        }
    }

    #[test]
    fn stationary_distribution_is_fixed_point((m, _, _) in sized()) {
        let p = stationary_distribution(&m, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE).unwrap();
        prop_assert!(close(p.iter().sum::<f64>(), 1.0, 1e-12));
        let next = m.step(&StateVector::unnamed(p.clone()).unwrap()).unwrap();
        for (a, b) in p.iter().zip(next.counts()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn formatted_schedule_parses_back(labels in prop::collection::vec("[A-Za-z_][A-Za-z0-9_]{0,6}", 1..40)) {
        let s = Schedule::new(labels.iter().map(String::as_str)).unwrap();
        let text = format_schedule(&s);
        prop_assert_eq!(parse_schedule(&text, s.len()).unwrap(), s);
    }

    #[test]
    fn repeat_groups_expand_by_count(
        head in prop::collection::vec("[A-Z]", 0..4),
        body in prop::collection::vec("[A-Z]", 1..4),
        k in 1usize..20,
        tail in prop::collection::vec("[A-Z]", 1..3),
        length in 1usize..120,
    ) {
        let mut pattern = String::new();
        for h in &head {
            pattern.push_str(h);
            pattern.push(',');
        }
        pattern.push_str(&format!("({})x{k},({})*", body.join(","), tail.join(" ")));
        let fixed = head.len() + body.len() * k;
        match parse_schedule(&pattern, length) {
            Ok(s) => {
                prop_assert!(length >= fixed);
                prop_assert_eq!(s.len(), length);
                let mut expected: Vec<String> = head.clone();
                for _ in 0..k {
                    expected.extend(body.iter().cloned());
                }
                let mut i = 0;
                while expected.len() < length {
                    expected.push(tail[i % tail.len()].clone());
                    i += 1;
                }
                prop_assert_eq!(s.labels(), &expected[..]);
            }
            Err(e) => {
                prop_assert!(length < fixed, "{e}");
            }
        }
    }

    #[test]
    fn parser_never_panics(pattern in "[A-Za-z0-9_(),x* \t]{0,40}", length in 0usize..200) {
        if let Ok(s) = parse_schedule(&pattern, length) {
            prop_assert_eq!(s.len(), length);
        }
    }

    #[test]
    fn parser_never_panics_on_arbitrary_text(pattern in ".{0,60}", length in 0usize..50) {
        let _ = parse_schedule(&pattern, length);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn monte_carlo_within_five_sigma(m in model(4), seed in any::<u64>()) {
        let agents = 1_000_000usize;
        let s = &m.schedules()[0];
        let exact = m.evolve_named(s).unwrap();
        let mc = monte_carlo_evolve(&m, &s.schedule, agents, seed, 0).unwrap();
        let total = m.initial().total();
        for (det, sim) in exact.states.iter().zip(&mc.states) {
            prop_assert_eq!(sim.total(), agents as f64);
            for (d, c) in det.counts().iter().zip(sim.counts()) {
                let p = d / total;
                let sigma = (agents as f64 * p * (1.0 - p)).sqrt().max(1e-9);
                prop_assert!((c - agents as f64 * p).abs() <= 5.0 * sigma + 1e-6,
                    "count {c}, expected {}", agents as f64 * p);
            }
        }
    }
}

#[test]
fn monte_carlo_streams_are_reproducible() {
    let a = EcmMatrix::from_rows("A", &[[0.9, 0.44], [0.1, 0.56]]).unwrap();
    let m = SimulationModel::new(names(2), vec![a], vec![127.0, 111.0], 20).unwrap();
    let s = Schedule::constant("A", 20).unwrap();
    let one = monte_carlo_evolve(&m, &s, 1000, 5, 0).unwrap();
    assert_eq!(one, monte_carlo_evolve(&m, &s, 1000, 5, 0).unwrap());
    assert_ne!(one, monte_carlo_evolve(&m, &s, 1000, 5, 1).unwrap());
    assert_ne!(one, monte_carlo_evolve(&m, &s, 1000, 6, 0).unwrap());
    assert!(one.states.iter().all(|s| s.counts().iter().all(|c| c.fract() == 0.0)));
}

#[test]
fn state_names_follow_model() {
    let a = EcmMatrix::identity("I", 3).unwrap();
    let m = SimulationModel::new(names(3), vec![a], vec![1.0, 2.0, 3.0], 2)
        .unwrap()
        .with_schedule(NamedSchedule::new("x", Schedule::constant("I", 2).unwrap()))
        .unwrap();
    let traj = m.evolve_all(None).unwrap().remove(0);
    let expected: Arc<[String]> = names(3).into();
    assert_eq!(traj.status_names(), &expected);
    assert_eq!(traj.length(), 2);
}
