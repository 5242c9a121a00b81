// Shared by several test targets; not every target uses every helper.
#![allow(dead_code)]

use atrisk_core::bn::{Cpt, Dag, DiscreteBayesNet, Evidence, NodeSpec};
use rand::Rng;

/// Random DAG over `n` nodes named `X0..`, edges only from lower to higher
/// index, cardinalities in 2..=max_card, strictly positive CPT rows.
pub fn random_net<R: Rng>(rng: &mut R, n: usize, max_card: usize) -> DiscreteBayesNet {
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_card)).collect();
    let nodes: Vec<NodeSpec> = (0..n)
        .map(|i| NodeSpec::new(format!("X{i}"), (0..cards[i]).map(|c| format!("c{c}"))))
        .collect();
    let mut edges = Vec::new();
    for child in 0..n {
        for parent in 0..child {
            if rng.random_bool(0.45) {
                edges.push((format!("X{parent}"), format!("X{child}")));
            }
        }
    }
    let dag = Dag::new(nodes, edges);
    let cpts = (0..n)
        .map(|i| {
            let name = format!("X{i}");
            let parents: Vec<String> = dag.parents(&name).iter().map(|p| p.to_string()).collect();
            let rows_needed: usize = parents
                .iter()
                .map(|p| cards[p[1..].parse::<usize>().unwrap()])
                .product();
            let rows = (0..rows_needed)
                .map(|_| {
                    let raw: Vec<f64> = (0..cards[i]).map(|_| rng.random_range(0.05..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    let mut row: Vec<f64> = raw.iter().map(|x| x / total).collect();
                    // Put the rounding residue on the last entry so the row sums to 1.
                    let head: f64 = row[..row.len() - 1].iter().sum();
                    *row.last_mut().unwrap() = 1.0 - head;
                    row
                })
                .collect();
            Cpt {
                node: name,
                parents,
                rows,
            }
        })
        .collect();
    DiscreteBayesNet::new(dag, cpts).expect("generated net is valid")
}

/// Posterior of `query` by summing the full joint over every assignment
/// consistent with `evidence`. Returns `None` when the evidence has zero
/// probability.
pub fn enumerate_posterior(net: &DiscreteBayesNet, evidence: &Evidence, query: &str) -> Option<Vec<f64>> {
    let nodes = &net.dag().nodes;
    let cards: Vec<usize> = nodes.iter().map(|n| n.categories.len()).collect();
    let index_of = |name: &str| nodes.iter().position(|n| n.name == name).unwrap();
    let fixed: Vec<Option<usize>> = nodes
        .iter()
        .map(|n| {
            evidence
                .get(&n.name)
                .map(|label| n.categories.iter().position(|c| c == label).unwrap())
        })
        .collect();
    let q = index_of(query);
    let mut out = vec![0.0; cards[q]];
    let total: usize = cards.iter().product();
    let mut assignment = vec![0usize; nodes.len()];
    for mut code in 0..total {
        for (slot, &card) in assignment.iter_mut().zip(&cards) {
            *slot = code % card;
            code /= card;
        }
        if fixed.iter().zip(&assignment).any(|(f, a)| f.is_some_and(|f| f != *a)) {
            continue;
        }
        let mut p = 1.0;
        for cpt in net.cpts() {
            let mut row = 0;
            for parent in &cpt.parents {
                let j = index_of(parent);
                row = row * cards[j] + assignment[j];
            }
            p *= cpt.rows[row][assignment[index_of(&cpt.node)]];
        }
        out[assignment[q]] += p;
    }
    let z: f64 = out.iter().sum();
    (z > 0.0).then(|| out.iter().map(|x| x / z).collect())
}

/// Random evidence over a random subset of nodes, never touching `skip`.
pub fn random_evidence<R: Rng>(rng: &mut R, net: &DiscreteBayesNet, skip: &str) -> Evidence {
    let mut ev = Evidence::new();
    for node in &net.dag().nodes {
        if node.name != skip && rng.random_bool(0.5) {
            let c = rng.random_range(0..node.categories.len());
            ev.insert(node.name.clone(), node.categories[c].clone());
        }
    }
    ev
}
