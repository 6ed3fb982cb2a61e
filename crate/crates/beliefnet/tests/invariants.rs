//! Cross-module invariants: measure algebra, construction safety, update
//! semantics, and determinism of the generation and orchestration layers.

use proptest::prelude::*;

use beliefnet::classify::{classify_structure, h_g, k_g, DEFAULT_CLASSIFY_TOL};
use beliefnet::core::{
    make_binary_structure, AgentType, BeliefProfile, PrivateSignalStructure, WorldSignalStructure,
};
use beliefnet::dynamics::{
    agent_update, network_step, run, sample_signal, AgentSpec, SimulationState,
};
use beliefnet::metrics::expected_truth_ratio;
use beliefnet::rng::{derive_seed, role, Stream};
use beliefnet::topology::{
    general_influence, generate_er, left_unit_eigenvector, uniform_influence, Network,
};
use beliefnet::Error;

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

fn prob_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, len).prop_map(normalized)
}

fn structure_with(signals: usize, states: usize) -> impl Strategy<Value = PrivateSignalStructure> {
    prop::collection::vec(
        prop::collection::vec(0.05f64..1.0, signals).prop_map(normalized),
        states,
    )
    .prop_map(|cols| PrivateSignalStructure::from_columns(cols).unwrap())
}

proptest! {
    /// k >= h for every admissible (g, L, m, r): Jensen's inequality.
    #[test]
    fn k_dominates_h((g, l) in (2usize..5, 2usize..5).prop_flat_map(|(signals, states)| {
        (prob_vec(signals..signals + 1), structure_with(signals, states))
    })) {
        let world = WorldSignalStructure::new(g).unwrap();
        for r in 0..l.state_count() {
            for m in (0..l.state_count()).filter(|&m| m != r) {
                let h = h_g(&world, &l, m, r).unwrap();
                let k = k_g(&world, &l, m, r).unwrap();
                prop_assert!(k >= h - 1e-12, "k = {k} < h = {h}");
            }
        }
    }

    /// h(m, r) = -h(r, m) exactly as computed.
    #[test]
    fn h_is_antisymmetric((g, l) in (2usize..6, 2usize..5).prop_flat_map(|(signals, states)| {
        (prob_vec(signals..signals + 1), structure_with(signals, states))
    })) {
        let world = WorldSignalStructure::new(g).unwrap();
        for r in 0..l.state_count() {
            for m in (0..l.state_count()).filter(|&m| m != r) {
                let forward = h_g(&world, &l, m, r).unwrap();
                let backward = h_g(&world, &l, r, m).unwrap();
                prop_assert!((forward + backward).abs() <= 1e-12);
            }
        }
    }

    /// Construction over arbitrary float vectors either satisfies every
    /// invariant or fails with a typed error; it never panics and never
    /// yields an invalid value.
    #[test]
    fn construction_is_total(raw in prop::collection::vec(-1.0f64..2.0, 1..6)) {
        match WorldSignalStructure::new(raw.clone()) {
            Ok(world) => {
                prop_assert!(world.probabilities().iter().all(|&p| p > 0.0));
                prop_assert!((world.probabilities().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            Err(Error::Domain(_)) => {}
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
        }
        match BeliefProfile::new(raw) {
            Ok(profile) => {
                prop_assert!(profile.beliefs().iter().all(|&b| b >= 0.0));
                prop_assert!((profile.beliefs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
            Err(Error::Domain(_)) => {}
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
        }
    }

    /// Same totality property for the matrix-valued and label-valued types.
    #[test]
    fn structure_and_state_space_construction_is_total(
        cols in prop::collection::vec(prop::collection::vec(-0.5f64..1.5, 2..4), 1..4),
        labels in prop::collection::vec("[a-c]{1,2}", 1..4),
        real_state in 0usize..4,
    ) {
        match PrivateSignalStructure::from_columns(cols) {
            Ok(l) => {
                for m in 0..l.state_count() {
                    prop_assert!(l.column(m).iter().all(|&x| x > 0.0));
                    prop_assert!((l.column(m).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
            }
            Err(Error::Domain(_)) => {}
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
        }
        match beliefnet::core::StateSpace::new(labels.clone(), real_state) {
            Ok(space) => {
                prop_assert!(space.len() >= 2);
                prop_assert!(space.real_state() < space.len());
                for (i, a) in labels.iter().enumerate() {
                    prop_assert!(!labels[..i].contains(a));
                }
            }
            Err(Error::Domain(_)) => {}
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
        }
    }

    /// Binary-structure round trip is exact, bit for bit.
    #[test]
    fn binary_structure_round_trip(alpha in 1e-6f64..0.999999, beta in 1e-6f64..0.999999) {
        let l = make_binary_structure(alpha, beta).unwrap();
        let (a, b) = l.binary_parameters().unwrap();
        prop_assert_eq!(a.to_bits(), alpha.to_bits());
        prop_assert_eq!(b.to_bits(), beta.to_bits());
    }

    /// Binary classification against the closed-form region membership for
    /// g = [0.8, 0.2]: away from the boundary lines,
    /// Conservative <=> (alpha - beta)(alpha - 0.8) < 0 and Negative <=> h > 0.
    #[test]
    fn classification_matches_region_algebra(alpha in 0.02f64..0.98, beta in 0.02f64..0.98) {
        let g = WorldSignalStructure::binary(0.8).unwrap();
        let l = make_binary_structure(alpha, beta).unwrap();
        let h = h_g(&g, &l, 1, 0).unwrap();
        let k = k_g(&g, &l, 1, 0).unwrap();
        prop_assume!(h.abs() > 1e-6 && k.abs() > 1e-6);
        let got = classify_structure(&g, &l, 0, DEFAULT_CLASSIFY_TOL).unwrap();
        let expect = if h > 0.0 {
            AgentType::Negative
        } else if (alpha - beta) * (alpha - 0.8) < 0.0 {
            AgentType::Conservative
        } else {
            AgentType::Radical
        };
        prop_assert_eq!(got, expect, "({}, {}): h={}, k={}", alpha, beta, h, k);
    }

    /// Relabeling the signal space (permuting rows of L together with g)
    /// leaves h, k, and the classification unchanged up to rounding.
    #[test]
    fn classification_invariant_under_signal_relabeling(
        (g, l) in (3usize..6, 2usize..4).prop_flat_map(|(signals, states)| {
            (prob_vec(signals..signals + 1), structure_with(signals, states))
        }),
        seed in 0u64..1000,
    ) {
        let world = WorldSignalStructure::new(g.clone()).unwrap();
        let mut perm: Vec<usize> = (0..g.len()).collect();
        Stream::from_seed(seed).shuffle(&mut perm);

        let g2: Vec<f64> = perm.iter().map(|&s| g[s]).collect();
        let cols2: Vec<Vec<f64>> = (0..l.state_count())
            .map(|m| perm.iter().map(|&s| l.likelihood(s, m)).collect())
            .collect();
        let world2 = WorldSignalStructure::new(g2).unwrap();
        let l2 = PrivateSignalStructure::from_columns(cols2).unwrap();

        for m in 1..l.state_count() {
            let dh = h_g(&world, &l, m, 0).unwrap() - h_g(&world2, &l2, m, 0).unwrap();
            let dk = k_g(&world, &l, m, 0).unwrap() - k_g(&world2, &l2, m, 0).unwrap();
            prop_assert!(dh.abs() < 1e-12 && dk.abs() < 1e-12);
        }
    }

    /// Uniform influence rows sum to 1 within 1e-15 * n.
    #[test]
    fn uniform_influence_rows_are_stochastic(seed in 0u64..500, gamma in 0.05f64..1.0) {
        let net = generate_er(40, 0.15, seed, 1000).unwrap();
        let a = uniform_influence(&net, gamma).unwrap();
        for i in 0..40 {
            let sum: f64 = a.row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-15 * 40.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The left unit eigenvector satisfies its residual contract and is
    /// equivariant under relabeling of the agents.
    #[test]
    fn eigenvector_residual_and_permutation(seed in 0u64..200, gamma in 0.2f64..1.0) {
        let n = 25;
        let tol = 1e-12;
        let net = generate_er(n, 0.2, seed, 1000).unwrap();
        let a = uniform_influence(&net, gamma).unwrap();
        let v = left_unit_eigenvector(&a, tol, 100_000).unwrap();

        prop_assert!(v.iter().all(|&x| x >= 0.0));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut residual = 0.0;
        for j in 0..n {
            let col: f64 = (0..n).map(|i| v[i] * a.weight(i, j)).sum();
            residual += (col - v[j]).abs();
        }
        prop_assert!(residual <= 10.0 * tol, "residual {residual}");

        // relabel agents by a seeded permutation
        let mut perm: Vec<usize> = (0..n).collect();
        Stream::from_seed(seed ^ 0xABCD).shuffle(&mut perm);
        let edges: Vec<(usize, usize)> = net
            .directed_edges()
            .iter()
            .map(|&(j, i)| (perm[j], perm[i]))
            .collect();
        let net2 = Network::new(n, &edges).unwrap();
        let a2 = uniform_influence(&net2, gamma).unwrap();
        let v2 = left_unit_eigenvector(&a2, tol, 100_000).unwrap();
        for i in 0..n {
            prop_assert!((v2[perm[i]] - v[i]).abs() <= 10.0 * tol);
        }
    }

    /// Lemma-style drift check: conservative structures keep the expected
    /// truth ratio above 1 at random interior beliefs (exact finite sum).
    #[test]
    fn conservative_truth_ratio_exceeds_one(seed in 0u64..400) {
        let g = WorldSignalStructure::binary(0.8).unwrap();
        let mut stream = Stream::from_seed(seed);
        let (l, _) = loop {
            let alpha = stream.uniform_in(0.02, 0.98);
            let beta = stream.uniform_in(0.02, 0.98);
            let l = make_binary_structure(alpha, beta).unwrap();
            if classify_structure(&g, &l, 0, DEFAULT_CLASSIFY_TOL).unwrap()
                == AgentType::Conservative
            {
                break (l, (alpha, beta));
            }
        };
        for _ in 0..16 {
            let u = stream.uniform_in(1e-9, 1.0 - 1e-9);
            let mu = BeliefProfile::new(vec![u, 1.0 - u]).unwrap();
            let ratio = expected_truth_ratio(&g, &l, &mu, 0).unwrap();
            prop_assert!(ratio > 1.0 - 1e-12, "ratio {ratio} at belief {u}");
        }
    }
}

/// The measures see L only through the per-signal likelihood ratios: two
/// structures with identical ratio profiles but different columns carry
/// identical h, k, and classification for every world structure.
#[test]
fn classification_depends_only_on_likelihood_ratios() {
    // ratios rho = (2, 0.5, 1) against the real column; both real columns
    // below satisfy sum(rho * l_r) = 1, so both matrices are valid
    let rho = [2.0, 0.5, 1.0];
    let mut structures = Vec::new();
    for real in [vec![0.15, 0.3, 0.55], vec![0.25, 0.5, 0.25]] {
        let alt: Vec<f64> = real.iter().zip(rho).map(|(&lr, r)| r * lr).collect();
        structures.push(PrivateSignalStructure::from_columns(vec![real, alt]).unwrap());
    }
    for g in [vec![0.5, 0.3, 0.2], vec![0.1, 0.1, 0.8]] {
        let world = WorldSignalStructure::new(g).unwrap();
        let h: Vec<f64> = structures
            .iter()
            .map(|l| h_g(&world, l, 1, 0).unwrap())
            .collect();
        let k: Vec<f64> = structures
            .iter()
            .map(|l| k_g(&world, l, 1, 0).unwrap())
            .collect();
        assert!((h[0] - h[1]).abs() < 1e-12, "h {h:?}");
        assert!((k[0] - k[1]).abs() < 1e-12, "k {k:?}");
        assert_eq!(
            classify_structure(&world, &structures[0], 0, DEFAULT_CLASSIFY_TOL).unwrap(),
            classify_structure(&world, &structures[1], 0, DEFAULT_CLASSIFY_TOL).unwrap()
        );
    }
}

/// ER edge counts stay in the binomial band 495 +/- 100 for n = 100,
/// p = 0.1 in at least 99 of 100 seeds (the band is ~6.4 sigma wide, so a
/// single excursion is already generous).
#[test]
fn er_edge_count_band() {
    let mut in_band = 0;
    for seed in 0..100u64 {
        let net = generate_er(100, 0.1, seed, 1000).unwrap();
        let undirected = net.directed_edges().len() / 2;
        if (395..=595).contains(&undirected) {
            in_band += 1;
        }
    }
    assert!(in_band >= 99, "{in_band}/100 in band");
}

/// The whole-network step equals per-agent updates applied in any order
/// against the frozen snapshot.
#[test]
fn step_is_order_independent() {
    let n = 12;
    let seed = 314;
    let net = generate_er(n, 0.4, seed, 1000).unwrap();
    let influence = uniform_influence(&net, 0.6).unwrap();
    let world = WorldSignalStructure::binary(0.8).unwrap();
    let mut init = Stream::from_seed(derive_seed(seed, &[role::INITIAL_BELIEFS]));
    let specs: Vec<AgentSpec> = (0..n)
        .map(|_| {
            let u = init.next_f64();
            AgentSpec::new(
                make_binary_structure(0.6, 0.4).unwrap(),
                world.clone(),
                BeliefProfile::new(vec![u, 1.0 - u]).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let state = SimulationState {
        t: 0,
        beliefs: specs.iter().map(|s| s.initial_belief.clone()).collect(),
        last_signals: None,
    };
    let mut streams: Vec<Stream> = (0..n)
        .map(|i| Stream::from_seed(derive_seed(seed, &[role::SIGNALS, i as u64])))
        .collect();

    // pre-draw the same signals the engine will draw
    let mut probe = streams.clone();
    let signals: Vec<usize> = (0..n)
        .map(|i| sample_signal(&specs[i].world, &mut probe[i]))
        .collect();

    let (stepped, _) = network_step(&state, &specs, &influence, &mut streams).unwrap();
    assert_eq!(stepped.last_signals.as_deref(), Some(&signals[..]));

    // replay the update agent by agent in reverse order
    for i in (0..n).rev() {
        let row = influence.row(i);
        let mut weights = vec![row[i]];
        let mut neighbors = Vec::new();
        for (j, &w) in row.iter().enumerate() {
            if j != i && w > 0.0 {
                weights.push(w);
                neighbors.push(&state.beliefs[j]);
            }
        }
        let manual = agent_update(
            &specs[i].structure,
            &state.beliefs[i],
            &neighbors,
            &weights,
            signals[i],
        )
        .unwrap();
        assert_eq!(manual, stepped.beliefs[i], "agent {i}");
    }
}

/// Per-step update mass is conserved before renormalization: the largest
/// recorded deviation of a raw sum from 1 stays within 1e-12.
#[test]
fn update_conserves_probability_mass() {
    let net = generate_er(30, 0.2, 2024, 1000).unwrap();
    let influence = uniform_influence(&net, 0.5).unwrap();
    let world = WorldSignalStructure::binary(0.8).unwrap();
    let mut init = Stream::from_seed(1);
    let specs: Vec<AgentSpec> = (0..30)
        .map(|_| {
            let u = init.next_f64();
            AgentSpec::new(
                make_binary_structure(0.7, 0.3).unwrap(),
                world.clone(),
                BeliefProfile::new(vec![u, 1.0 - u]).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let traj = run(&specs, &influence, 0, 200, 55, 50).unwrap();
    assert!(traj.metadata.max_normalization_deviation <= 1e-12);
    assert_eq!(traj.metadata.clamped_entries, 0);
}

/// Hand-assembled uniform rows and the uniform constructor give the same
/// matrix, and therefore the same trajectory.
#[test]
fn uniform_weights_reduce_to_general_form() {
    let n = 15;
    let net = generate_er(n, 0.3, 77, 1000).unwrap();
    let gamma = 0.7;
    let uniform = uniform_influence(&net, gamma).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = gamma;
            for &j in net.neighbors(i) {
                row[j] = (1.0 - gamma) / net.neighbors(i).len() as f64;
            }
            row
        })
        .collect();
    let general = general_influence(&net, &rows).unwrap();
    assert_eq!(uniform, general);
}
