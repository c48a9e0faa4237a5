//! Derived values checked against oracles written independently of the
//! library code: brute-force enumeration, a dense master-equation stepper,
//! hand expansions and direct evaluation of the closed forms.

use std::collections::HashMap;

use cloudq::arcsine::{
    arcsine_t_count, chebyshev_fit, choose_config, linf_error, min_pieces, published_candidates,
};
use cloudq::division::{
    amplitude_expectation, divide_step, history_label_semantics_check, marginalize,
    readout_probability, replay, run_merged, run_tree, HistoryBranch, DEFAULT_BRANCH_CAP,
};
use cloudq::fixedpoint::{
    emulate_up_pipeline, fp_arcsin_pp, fp_decode, fp_div, fp_encode, fp_mul_const_int_ui, fp_sqrt,
    sweep, Branch, Mode, PipelineOptions,
};
use cloudq::master::{
    euler_step, evolve, expected_count, marginal, ssa_estimate, ProbabilityTable, SsaConfig,
};
use cloudq::presets::preset;
use cloudq::resource::{
    error_budget_with, estimate_case, gate_cost_uadd, gate_cost_uc, gate_cost_usin,
    oracle_iterations, primitive_cost, register_counts, Primitive,
};
use cloudq::state_space::{
    enumerate_states, label_count, partition_count_asymptotic, partition_count_exact, KernelSpec,
    MassDistribution, TransitionTable,
};

fn constant(k0: f64) -> KernelSpec {
    KernelSpec::Constant { k0 }
}

fn state(counts: &[u32]) -> MassDistribution {
    MassDistribution::new(counts.to_vec()).unwrap()
}

// Partitions of `n` with parts at most `max`, by plain recursion.
fn brute_partitions(n: u32, max: u32) -> u64 {
    if n == 0 {
        return 1;
    }
    (1..=max.min(n)).map(|k| brute_partitions(n - k, k)).sum()
}

// Count vectors of every partition of `n`, by recursion on the largest part.
fn brute_states(n: u32) -> Vec<Vec<u32>> {
    fn go(rem: u32, max: u32, counts: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            out.push(counts.clone());
            return;
        }
        for k in (1..=max.min(rem)).rev() {
            counts[k as usize - 1] += 1;
            go(rem - k, k, counts, out);
            counts[k as usize - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut vec![0; n as usize], &mut out);
    out
}

// Dense explicit-Euler stepper over count vectors with its own rate formula.
fn dense_master(
    n: u32,
    kernel: impl Fn(u32, u32) -> f64,
    dt: f64,
    steps: u32,
) -> HashMap<Vec<u32>, f64> {
    let states = brute_states(n);
    let index: HashMap<Vec<u32>, usize> = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(k, s)| (s, k))
        .collect();
    let mut p = vec![0.0; states.len()];
    let mut mono = vec![0; n as usize];
    mono[0] = n;
    p[index[&mono]] = 1.0;
    for _ in 0..steps {
        let mut next = p.clone();
        for (k, s) in states.iter().enumerate() {
            for i in 1..=n {
                for j in i..=n - i {
                    let (a, b) = (s[i as usize - 1] as f64, s[j as usize - 1] as f64);
                    let rate = if i == j {
                        0.5 * kernel(i, j) * a * (a - 1.0) * dt
                    } else {
                        kernel(i, j) * a * b * dt
                    };
                    if rate <= 0.0 {
                        continue;
                    }
                    let mut t = s.clone();
                    t[i as usize - 1] -= 1;
                    t[j as usize - 1] -= 1;
                    t[(i + j) as usize - 1] += 1;
                    next[k] -= rate * p[k];
                    next[index[&t]] += rate * p[k];
                }
            }
        }
        p = next;
    }
    states.into_iter().zip(p).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn partition_counts_match_brute_force() {
    for n in 1..=40 {
        assert_eq!(
            partition_count_exact(n).unwrap(),
            brute_partitions(n, n) as u128,
            "N = {n}"
        );
    }
    assert_eq!(partition_count_exact(5).unwrap(), 7);
    assert_eq!(partition_count_exact(40).unwrap(), 37338);
    for n in 1..=12 {
        let mut mine: Vec<Vec<u32>> = brute_states(n);
        let mut lib: Vec<Vec<u32>> = enumerate_states(n, 60)
            .unwrap()
            .iter()
            .map(|s| s.counts().to_vec())
            .collect();
        mine.sort();
        lib.sort();
        assert_eq!(mine, lib, "N = {n}");
    }
}

#[test]
fn partition_asymptotics() {
    let hr =
        |n: f64| (std::f64::consts::PI * (2.0 * n / 3.0).sqrt()).exp() / (4.0 * n * 3f64.sqrt());
    assert!(close(partition_count_asymptotic(1), hr(1.0), 1e-12));
    assert!(close(partition_count_asymptotic(1), 1.88, 0.01));
    assert!((partition_count_asymptotic(40) / 3.99e4 - 1.0).abs() < 0.01);
}

#[test]
fn label_counts_match_pair_enumeration() {
    for n in 1..=80u32 {
        let pairs = (1..=n)
            .flat_map(|i| (i..=n).map(move |j| (i, j)))
            .filter(|&(i, j)| i + j <= n)
            .count();
        assert_eq!(label_count(n), pairs, "N = {n}");
    }
    let t = TransitionTable::new(3, &constant(1.0), 0.1).unwrap();
    assert_eq!(t.pairs(), &[(1, 1), (1, 2)]);
    assert_eq!(label_count(40), 400);
}

#[test]
fn monodisperse_collision() {
    for n in 2..=10u32 {
        let mut expect = vec![0; n as usize];
        expect[0] = n - 2;
        expect[1] = 1;
        assert_eq!(
            MassDistribution::monodisperse(n)
                .collide(1, 1)
                .unwrap()
                .counts(),
            &expect[..]
        );
    }
}

#[test]
fn three_droplets_two_steps_by_hand() {
    // K dt = 0.05: (3,0,0) -> (1,1,0) with probability 0.15, (1,1,0) -> (0,0,1) at 0.05.
    let t = TransitionTable::new(3, &constant(1.0), 0.05).unwrap();
    let p = evolve(
        &ProbabilityTable::point(MassDistribution::monodisperse(3)),
        &t,
        2,
    )
    .unwrap();
    assert!(close(p.get(&state(&[3, 0, 0])), 0.85 * 0.85, 1e-15));
    assert!(close(
        p.get(&state(&[1, 1, 0])),
        0.85 * 0.15 + 0.15 * 0.95,
        1e-15
    ));
    assert!(close(p.get(&state(&[0, 0, 1])), 0.15 * 0.05, 1e-15));
    assert!(close(p.get(&state(&[1, 1, 0])), 0.27, 1e-15));
    assert!(close(marginal(&p, 1, 1).unwrap(), 0.27, 1e-15));
    assert!(close(p.total(), 1.0, 1e-15));
}

#[test]
fn master_matches_dense_oracle() {
    type Pair = (KernelSpec, fn(u32, u32) -> f64);
    let kernels: [Pair; 3] = [
        (KernelSpec::Constant { k0: 1.0 }, |_, _| 1.0),
        (KernelSpec::Sum { k0: 1.0 }, |i, j| (i + j) as f64),
        (KernelSpec::Product { k0: 1.0 }, |i, j| (i * j) as f64),
    ];
    for (spec, k) in &kernels {
        for n in 2..=8u32 {
            let dt = 0.4 / (n * n * n) as f64;
            let t = TransitionTable::new(n, spec, dt).unwrap();
            let p = evolve(
                &ProbabilityTable::point(MassDistribution::monodisperse(n)),
                &t,
                12,
            )
            .unwrap();
            let dense = dense_master(n, k, dt, 12);
            for (s, v) in &dense {
                assert!(close(p.get(&state(s)), *v, 1e-13), "{spec:?} N={n} {s:?}");
            }
        }
    }
}

#[test]
fn two_droplets_are_geometric() {
    for (kdt, m) in [(0.1, 1u64), (0.1, 7), (0.02, 40), (0.5, 3)] {
        let t = TransitionTable::new(2, &constant(1.0), kdt).unwrap();
        let p = evolve(
            &ProbabilityTable::point(MassDistribution::monodisperse(2)),
            &t,
            m,
        )
        .unwrap();
        let collided = 1.0 - (1.0 - kdt).powi(m as i32);
        assert!(close(p.get(&state(&[0, 1])), collided, 1e-14));
        assert!(close(expected_count(&p, 2).unwrap(), collided, 1e-14));
    }
}

#[test]
fn long_run_reaches_absorbing_state() {
    let t = TransitionTable::new(5, &constant(1.0), 0.05).unwrap();
    let p = evolve(
        &ProbabilityTable::point(MassDistribution::monodisperse(5)),
        &t,
        2000,
    )
    .unwrap();
    assert!(p.get(&MassDistribution::absorbing(5)) > 0.999);
    let fixed = euler_step(&ProbabilityTable::point(MassDistribution::absorbing(5)), &t).unwrap();
    assert_eq!(fixed.get(&MassDistribution::absorbing(5)), 1.0);
}

#[test]
fn ssa_two_droplets_exponential() {
    let t = TransitionTable::new(2, &constant(1.0), 0.01).unwrap();
    let cfg = SsaConfig {
        n_runs: 20_000,
        seed: 7,
        t_end: 1.0,
    };
    let e = ssa_estimate(&t, &cfg, &MassDistribution::monodisperse(2), 2).unwrap();
    let exact = 1.0 - (-1.0f64).exp();
    assert!((e.mean - exact).abs() <= 3.0 * e.stderr, "{e:?} vs {exact}");
}

#[test]
fn division_two_droplets() {
    let t = TransitionTable::new(2, &constant(1.0), 0.1).unwrap();
    let kids = divide_step(
        &[HistoryBranch::root(MassDistribution::monodisperse(2))],
        &t,
    )
    .unwrap();
    let by_label: HashMap<usize, (Vec<u32>, f64)> = kids
        .iter()
        .map(|b| (b.history[0], (b.state.counts().to_vec(), b.prob)))
        .collect();
    assert_eq!(by_label.len(), 2);
    assert_eq!(by_label[&1].0, vec![0, 1]);
    assert!(close(by_label[&1].1, 0.1, 1e-15));
    assert_eq!(by_label[&0].0, vec![2, 0]);
    assert!(close(by_label[&0].1, 0.9, 1e-15));

    let p = marginalize(&kids, 2).unwrap();
    assert!(close(amplitude_expectation(&p, 2).unwrap(), 0.1, 1e-15));
    // Count register for bin 2 holds n2 / 2^q with q = 1.
    assert!(close(readout_probability(&p, 2).unwrap(), 0.05, 1e-15));
}

#[test]
fn division_children_carry_transition_rates() {
    let t = TransitionTable::new(4, &KernelSpec::Sum { k0: 0.5 }, 0.02).unwrap();
    let root = MassDistribution::monodisperse(4);
    let kids = divide_step(&[HistoryBranch::root(root.clone())], &t).unwrap();
    let mut stay = 1.0;
    for h in 1..=t.label_count() {
        let r = t.transition_rate(&root, h).unwrap();
        stay -= r;
        let kid = kids.iter().find(|b| b.history == [h]);
        match kid {
            Some(b) => {
                assert!(close(b.prob, r, 1e-15));
                assert_eq!(b.state, t.apply_transition(&root, h).unwrap());
            }
            None => assert_eq!(r, 0.0),
        }
    }
    let s = kids.iter().find(|b| b.history == [0]).unwrap();
    assert!(close(s.prob, stay, 1e-15));
    for m in [1, 2] {
        let check = history_label_semantics_check(&t, &root, m, DEFAULT_BRANCH_CAP).unwrap();
        assert!(check.passed(), "{check:?}");
    }
    let tree = run_tree(&t, &root, 2, DEFAULT_BRANCH_CAP).unwrap();
    for b in &tree {
        assert_eq!(replay(&t, &root, &b.history).unwrap(), b.state);
    }
}

#[test]
fn merged_and_tree_follow_dense_oracle() {
    let t = TransitionTable::new(3, &constant(1.0), 0.02).unwrap();
    let start = MassDistribution::monodisperse(3);
    let merged = run_merged(&t, &start, 5).unwrap();
    for (s, v) in dense_master(3, |_, _| 1.0, 0.02, 5) {
        assert!(close(merged.get(&state(&s)), v, 1e-15));
    }
    let tree = marginalize(&run_tree(&t, &start, 2, DEFAULT_BRANCH_CAP).unwrap(), 3).unwrap();
    assert!(tree.max_abs_diff(&run_merged(&t, &start, 2).unwrap()) <= 1e-15);
}

#[test]
fn fixed_point_arithmetic() {
    let six = fp_encode(6.0, 4, Mode::Integer).unwrap();
    let v = fp_decode(&fp_mul_const_int_ui(&six, 0.1, 42).unwrap());
    assert!(v <= 0.6 + 1e-16 && 0.6 - v < 2f64.powi(-41));

    let half = fp_encode(0.5, 42, Mode::Real).unwrap();
    let root = fp_decode(&fp_sqrt(&half).unwrap());
    assert!(
        root <= std::f64::consts::FRAC_1_SQRT_2
            && std::f64::consts::FRAC_1_SQRT_2 - root < 2f64.powi(-41)
    );

    // Truncated quotient against exact integer long division of the encodings.
    let a = fp_encode(0.3, 42, Mode::Real).unwrap();
    let b = fp_encode(0.7, 42, Mode::Real).unwrap();
    let q = fp_div(&a, &b).unwrap();
    assert_eq!(q.bits, (a.bits << 41) / b.bits);
    assert!((fp_decode(&q) - 3.0 / 7.0).abs() < 2.0 * 2f64.powi(-41));
}

#[test]
fn piecewise_arcsine_values() {
    let pp = min_pieces(5, 1e-12, 4096).unwrap();
    let q = pp.quantize(42).unwrap();
    let ulp = 2f64.powi(-41);
    for (x, y) in [
        (0.5, std::f64::consts::FRAC_PI_6),
        (0.1, 0.1001674211615598),
    ] {
        let a = fp_encode(x, 42, Mode::Real).unwrap();
        let out = fp_decode(&fp_arcsin_pp(&a, &q, false).unwrap().value);
        assert!((out - y).abs() <= 1e-12 + 8.0 * ulp, "asin({x}) = {out}");
    }
    assert!((0.1001674211615598f64 - 0.100167).abs() < 1e-6);
}

#[test]
fn quarter_boundary_branches_agree() {
    // r / s = 1/4 exactly: both sides of the comparison give pi/6.
    let direct = PipelineOptions {
        branch: Branch::Direct,
        ..PipelineOptions::reference(42)
    };
    let complement = PipelineOptions {
        branch: Branch::Complement,
        ..PipelineOptions::reference(42)
    };
    let a = emulate_up_pipeline(1, 1, 0.125, 0.5, &direct).unwrap();
    let b = emulate_up_pipeline(1, 1, 0.125, 0.5, &complement).unwrap();
    assert!(a.theta.bits.abs_diff(b.theta.bits) <= 2);
    assert!((fp_decode(&a.theta) - std::f64::consts::FRAC_PI_6).abs() < 4.0 * 2f64.powi(-41));
}

#[test]
fn polynomial_fit_limits() {
    let small = chebyshev_fit(0.0, 0.01, 1, 4096).unwrap();
    assert!(linf_error(&small, 4096) <= 1e-6);
    let wide = chebyshev_fit(0.0, 0.5, 5, 4096).unwrap();
    assert!(linf_error(&wide, 4096) > 1e-12);
}

#[test]
fn arcsine_configuration_choice() {
    // Direct evaluation of the ARCSIN T-count closed form.
    let t = |n: i128, d: i128, m: i128| {
        let lg = (m as f64).log2().ceil() as i128;
        (32 * m * (n - 2) + 8 * d * (n * n + n - 1) + 16 * d * m * (lg - 1)) as u128
    };
    for eps in [1e-12, 1e-13, 1e-14, 1e-15] {
        for n in [42u32, 46, 49] {
            let cands = published_candidates(eps);
            for &(d, m) in &cands {
                assert_eq!(arcsine_t_count(n, d, m), t(n as i128, d as i128, m as i128));
            }
            let best = cands
                .iter()
                .copied()
                .min_by_key(|&(d, m)| (t(n as i128, d as i128, m as i128), d));
            assert_eq!(choose_config(&cands, n), best);
        }
    }
    assert_eq!(
        choose_config(&published_candidates(1e-13), 46),
        Some((6, 12))
    );
    assert_eq!(
        choose_config(&published_candidates(1e-12), 42),
        Some((5, 15))
    );
}

#[test]
fn gate_costs_by_hand() {
    let cost = |p| primitive_cost(&p).cost.t_count;
    assert_eq!(cost(Primitive::Div { n: 42 }), 18 * 42 * 42 - 30 * 42);
    assert_eq!(cost(Primitive::Div { n: 42 }), 30492);
    let tiny = primitive_cost(&Primitive::Toffoli { n: 1 });
    assert!(tiny.clamped && tiny.cost.t_count == 0);

    let c = preset("paper-case-1").unwrap();
    // q_h = 9 for H = 400: AddConst(9) + Toffoli(9).
    assert_eq!(gate_cost_uadd(&c).t_count, (4 * 9 - 8) + (4 * 9 - 8));
    assert_eq!(gate_cost_uadd(&c).t_count, 56);
    let usin = (12.0 * 42.0 + 6.6 * (4.0f64 / 1e-13).log2() + 8.0 * 9.0 - 16.0).ceil() as u128;
    assert_eq!(gate_cost_usin(&c).t_count, usin);
    assert_eq!(usin, 859);
    let uc = (1.15 * 40.0 * (40.0f64 / 1e-8).log2()).ceil() as u128;
    assert_eq!(gate_cost_uc(&c, 1).unwrap().t_count, uc);
    assert_eq!(uc, 1468);

    let q = register_counts(&c);
    assert_eq!(c.history_width(), 9);
    assert_eq!(q.history, 9 * 2000);
    assert_eq!(cloudq::division::count_register_width(40, 1), 6);
}

#[test]
fn oracle_iteration_counts() {
    let by_hand = |eps: f64, delta: f64| {
        (1.4 / eps * (2.0 / delta * (std::f64::consts::PI / (4.0 * eps)).log2()).ln()).ceil() as u64
    };
    assert_eq!(
        oracle_iterations(9.9e-3, 0.01).unwrap(),
        by_hand(9.9e-3, 0.01)
    );
    assert_eq!(oracle_iterations(9.9e-3, 0.01).unwrap(), 1010);
    assert_eq!(oracle_iterations(9.9e-4, 0.01).unwrap(), 10696);
    assert!(oracle_iterations(1.0, 0.01).is_err());
}

#[test]
fn error_budget_terms() {
    assert_eq!(
        error_budget_with(1010.0, 2000.0, 400.0, 0.0, 0.0, 0.0, 9.9e-3),
        9.9e-3
    );
    let c = preset("paper-case-1").unwrap();
    let mut narrow = c.clone();
    narrow.eps_calculation = Some(2f64.powi(-41));
    let e = estimate_case(&narrow).unwrap().error.eps_max;
    let by_hand =
        2.0 * 1010.0 * 2000.0 * 400.0 * (2f64.powi(-41) + 1e-13) + 2.0 * 1010.0 * 1e-8 + 9.9e-3;
    assert!(close(e, by_hand, 1e-15));
    assert!((e / 1.0e-2 - 1.0).abs() <= 0.2);
}

#[test]
fn published_total_ratios() {
    let ratio = |a: &str, b: &str| {
        let t = |n| estimate_case(&preset(n).unwrap()).unwrap().totals.t_count as f64;
        t(a) / t(b)
    };
    // Published ratios are 8.2e16/4.9e14, 6.2e15/4.9e14 and 8.7e15/4.9e14.
    for (case, published) in [
        ("paper-case-3", 8.2e16 / 4.9e14),
        ("paper-case-4", 6.2e15 / 4.9e14),
        ("paper-case-5", 8.7e15 / 4.9e14),
    ] {
        let r = ratio(case, "paper-case-1");
        assert!(
            (r / published - 1.0).abs() < 0.05,
            "{case}: {r} vs {published}"
        );
    }
}

#[test]
fn pipeline_sweep_goldens() {
    let pp = min_pieces(5, 1e-12, 4096).unwrap();
    let at = |w: u32, n: usize| sweep(&pp.quantize(w).unwrap(), n, 0x5eed).unwrap();
    let r42 = at(42, 10_000);
    assert_eq!(r42.max_error, 3.086418536438497e-11);
    assert!(r42.max_downstream_error <= 2f64.powi(-38));
    assert!(at(20, 2000).max_error / at(30, 2000).max_error >= 32.0);
    // Past about 50 bits the register error is negligible and the fit error dominates.
    let wide: Vec<f64> = [50, 55, 60]
        .iter()
        .map(|&w| at(w, 2000).max_error)
        .collect();
    for e in &wide {
        assert!(*e <= pp.max_error && *e >= 0.5 * pp.max_error, "{wide:?}");
    }
    assert!((wide[1] - wide[2]).abs() / wide[2] < 0.01);
}
