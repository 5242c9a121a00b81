mod common;

use std::collections::{BTreeSet, VecDeque};

use atrisk_core::bn::{fit_cpts, joint_probability, posterior, Dag, Evidence, NetworkConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nodes reachable from `source` by an active trail given `observed`
/// (the Bayes-ball traversal over (node, direction) pairs).
fn reachable(dag: &Dag, source: &str, observed: &BTreeSet<String>) -> BTreeSet<String> {
    let parents = |n: &str| -> Vec<String> { dag.parents(n).iter().map(|s| s.to_string()).collect() };
    let children = |n: &str| -> Vec<String> {
        dag.edges
            .iter()
            .filter(|(p, _)| p == n)
            .map(|(_, c)| c.clone())
            .collect()
    };
    // Observed nodes and their ancestors: where a collider is activated.
    let mut activating = BTreeSet::new();
    let mut stack: Vec<String> = observed.iter().cloned().collect();
    while let Some(n) = stack.pop() {
        if activating.insert(n.clone()) {
            stack.extend(parents(&n));
        }
    }
    // `true` means the ball arrived from a child (travelling up).
    let mut queue = VecDeque::from([(source.to_string(), true)]);
    let mut visited = BTreeSet::new();
    let mut reached = BTreeSet::new();
    while let Some((n, up)) = queue.pop_front() {
        if !visited.insert((n.clone(), up)) {
            continue;
        }
        let is_observed = observed.contains(&n);
        if !is_observed {
            reached.insert(n.clone());
        }
        if up && !is_observed {
            queue.extend(parents(&n).into_iter().map(|p| (p, true)));
            queue.extend(children(&n).into_iter().map(|c| (c, false)));
        } else if !up {
            if !is_observed {
                queue.extend(children(&n).into_iter().map(|c| (c, false)));
            }
            if activating.contains(&n) {
                queue.extend(parents(&n).into_iter().map(|p| (p, true)));
            }
        }
    }
    reached
}

fn net_strategy() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn posterior_matches_enumeration((seed, n) in net_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_net(&mut rng, n, 4);
        let query = format!("X{}", rng.random_range(0..n));
        let evidence = common::random_evidence(&mut rng, &net, &query);
        let expected = common::enumerate_posterior(&net, &evidence, &query).unwrap();
        let got = posterior(&net, &evidence, &query).unwrap();
        for (a, b) in got.probabilities.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn joint_probability_is_the_cpt_product((seed, n) in net_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_net(&mut rng, n, 3);
        // Summing the joint of every full assignment gives one.
        let nodes = &net.dag().nodes;
        let total: usize = nodes.iter().map(|n| n.categories.len()).product();
        let mut sum = 0.0;
        for mut code in 0..total {
            let mut ev = Evidence::new();
            for node in nodes {
                let c = code % node.categories.len();
                code /= node.categories.len();
                ev.insert(node.name.clone(), node.categories[c].clone());
            }
            sum += joint_probability(&net, &ev).unwrap();
        }
        prop_assert!((sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn evidence_order_does_not_matter((seed, n) in net_strategy(), shuffle in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_net(&mut rng, n, 4);
        let query = format!("X{}", rng.random_range(0..n));
        let evidence = common::random_evidence(&mut rng, &net, &query);
        let mut pairs: Vec<(String, String)> =
            evidence.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let mut shuffler = ChaCha8Rng::seed_from_u64(shuffle);
        use rand::seq::SliceRandom;
        pairs.shuffle(&mut shuffler);
        let reordered: Evidence = pairs.into_iter().collect();
        prop_assert_eq!(
            posterior(&net, &evidence, &query).unwrap(),
            posterior(&net, &reordered, &query).unwrap()
        );
    }

    #[test]
    fn d_separated_evidence_is_irrelevant((seed, n) in (any::<u64>(), 2usize..=6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_net(&mut rng, n, 3);
        let query = format!("X{}", rng.random_range(0..n));
        let evidence = common::random_evidence(&mut rng, &net, &query);
        let observed: BTreeSet<String> = evidence.iter().map(|(k, _)| k.to_string()).collect();
        let active = reachable(net.dag(), &query, &observed);
        let base = posterior(&net, &evidence, &query).unwrap();
        for node in &net.dag().nodes {
            if node.name == query || observed.contains(&node.name) || active.contains(&node.name) {
                continue;
            }
            for category in &node.categories {
                let more = evidence.clone().with(node.name.clone(), category.clone());
                let p = posterior(&net, &more, &query).unwrap();
                for (a, b) in p.probabilities.iter().zip(&base.probabilities) {
                    prop_assert!((a - b).abs() <= 1e-9, "{} should be d-separated", node.name);
                }
            }
        }
    }

    #[test]
    fn fitted_rows_sum_to_one(
        (seed, n) in net_strategy(),
        rows in 0usize..40,
        alpha in prop_oneof![Just(0.0), 0.01f64..3.0],
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = common::random_net(&mut rng, n, 4).dag().clone();
        let data: Vec<Vec<String>> = (0..rows)
            .map(|_| {
                dag.nodes
                    .iter()
                    .map(|node| node.categories[rng.random_range(0..node.categories.len())].clone())
                    .collect()
            })
            .collect();
        match fit_cpts(&dag, &data, alpha) {
            Ok(net) => {
                for cpt in net.cpts() {
                    for row in &cpt.rows {
                        prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
                        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    }
                }
            }
            // No data and no smoothing leaves nothing to estimate from.
            Err(_) => prop_assert!(rows == 0),
        }
    }

    #[test]
    fn config_round_trip((seed, n) in net_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_net(&mut rng, n, 4);
        let text = NetworkConfig::from_net(&net).to_toml().unwrap();
        let back = NetworkConfig::parse(&text).unwrap().to_net().unwrap();
        prop_assert_eq!(back.dag(), net.dag());
        for (a, b) in back.cpts().iter().zip(net.cpts()) {
            prop_assert_eq!(&a.parents, &b.parents);
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                for (x, y) in ra.iter().zip(rb) {
                    prop_assert!((x - y).abs() <= 1e-15);
                }
            }
        }
    }
}

#[test]
fn bayes_ball_oracle_knows_the_classic_cases() {
    use atrisk_core::bn::NodeSpec;
    let node = |n: &str| NodeSpec::new(n, ["0", "1"]);
    let edge = |a: &str, b: &str| (a.to_string(), b.to_string());
    // A -> B -> C and A -> D <- E
    let dag = Dag::new(
        ["A", "B", "C", "D", "E"].map(node).to_vec(),
        vec![edge("A", "B"), edge("B", "C"), edge("A", "D"), edge("E", "D")],
    );
    let obs = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    assert!(reachable(&dag, "A", &obs(&[])).contains("C"));
    assert!(!reachable(&dag, "A", &obs(&["B"])).contains("C"));
    assert!(!reachable(&dag, "A", &obs(&[])).contains("E"));
    assert!(reachable(&dag, "A", &obs(&["D"])).contains("E"));
}
