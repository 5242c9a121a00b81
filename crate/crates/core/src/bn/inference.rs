//! Variable elimination over table factors.

use std::collections::BTreeSet;

use super::{BnError, DiscreteBayesNet, Distribution, Evidence};

/// Table over a sorted scope of variables; the last variable varies fastest.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn scalar(value: f64) -> Self {
        Self {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// CPT of `node` with observed variables fixed and dropped from the scope.
    fn from_cpt(net: &DiscreteBayesNet, node: usize, observed: &[Option<usize>]) -> Self {
        let cards = net.cards();
        let family: Vec<usize> = net
            .parent_indices(node)
            .iter()
            .copied()
            .chain(std::iter::once(node))
            .collect();
        let mut vars: Vec<usize> = family
            .iter()
            .copied()
            .filter(|&v| observed[v].is_none())
            .collect();
        vars.sort_unstable();
        let scope_cards: Vec<usize> = vars.iter().map(|&v| cards[v]).collect();
        let size = scope_cards.iter().product();

        let mut assignment: Vec<usize> = observed.iter().map(|o| o.unwrap_or(0)).collect();
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; vars.len()];
        for _ in 0..size {
            for (&v, &c) in vars.iter().zip(&counter) {
                assignment[v] = c;
            }
            let row = net.cpt_entry(
                node,
                net.parent_indices(node).iter().map(|&p| assignment[p]),
            );
            values.push(row[assignment[node]]);
            increment(&mut counter, &scope_cards);
        }
        Self {
            vars,
            cards: scope_cards,
            values,
        }
    }

    fn product(&self, other: &Factor) -> Factor {
        let vars: Vec<usize> = self
            .vars
            .iter()
            .chain(&other.vars)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.card_of(*v)
                    .or_else(|| other.card_of(*v))
                    .expect("variable in one operand")
            })
            .collect();
        let map_a = projection(&vars, self);
        let map_b = projection(&vars, other);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; vars.len()];
        for _ in 0..size {
            let ia: usize = map_a.iter().zip(&counter).map(|(s, c)| s * c).sum();
            let ib: usize = map_b.iter().zip(&counter).map(|(s, c)| s * c).sum();
            values.push(self.values[ia] * other.values[ib]);
            increment(&mut counter, &cards);
        }
        Factor { vars, cards, values }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        let card = cards.remove(pos);
        let kept = Factor {
            vars,
            cards,
            values: Vec::new(),
        };
        let size: usize = kept.cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; kept.vars.len()];
        for _ in 0..size {
            let base: usize = counter
                .iter()
                .enumerate()
                .map(|(i, c)| c * strides[if i < pos { i } else { i + 1 }])
                .sum();
            values.push((0..card).map(|k| self.values[base + k * strides[pos]]).sum());
            increment(&mut counter, &kept.cards);
        }
        Factor { values, ..kept }
    }

    fn card_of(&self, var: usize) -> Option<usize> {
        self.vars
            .iter()
            .position(|&v| v == var)
            .map(|i| self.cards[i])
    }
}

/// Stride of each `scope` variable inside `factor` (zero when absent).
fn projection(scope: &[usize], factor: &Factor) -> Vec<usize> {
    let strides = factor.strides();
    scope
        .iter()
        .map(|v| {
            factor
                .vars
                .iter()
                .position(|u| u == v)
                .map_or(0, |i| strides[i])
        })
        .collect()
}

fn increment(counter: &mut [usize], cards: &[usize]) {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < cards[i] {
            return;
        }
        counter[i] = 0;
    }
}

/// Exact `P(query | evidence)`.
///
/// Nodes that are not ancestors of the query or of an observed node are
/// dropped first, since their CPTs marginalize to one. The remaining hidden
/// variables are eliminated greedily by minimum degree in the interaction
/// graph, ties broken by node name.
pub fn posterior(
    net: &DiscreteBayesNet,
    evidence: &Evidence,
    query: &str,
) -> Result<Distribution, BnError> {
    let q = net
        .node_index(query)
        .ok_or_else(|| BnError::UnknownNode(query.to_string()))?;
    let observed = net.resolve(evidence)?;
    if observed[q].is_some() {
        return Err(BnError::QueryObserved(query.to_string()));
    }

    let relevant = ancestral_set(net, q, &observed);
    let mut factors: Vec<Factor> = (0..net.len())
        .filter(|&i| relevant[i])
        .map(|i| Factor::from_cpt(net, i, &observed))
        .collect();

    let mut hidden: BTreeSet<usize> = (0..net.len())
        .filter(|&i| relevant[i] && i != q && observed[i].is_none())
        .collect();
    let names: Vec<&str> = net.dag().nodes.iter().map(|n| n.name.as_str()).collect();
    while let Some(var) = next_elimination(&hidden, &factors, &names) {
        hidden.remove(&var);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        let joined = touching
            .iter()
            .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
        factors.push(joined.sum_out(var));
    }

    let joint = factors
        .iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
    debug_assert_eq!(joint.vars, vec![q]);
    let total: f64 = joint.values.iter().sum();
    if total.is_nan() || total <= 0.0 || total.is_infinite() {
        return Err(BnError::InconsistentEvidence);
    }
    Ok(Distribution {
        node: query.to_string(),
        probabilities: joint.values.iter().map(|v| v / total).collect(),
    })
}

/// Query, observed nodes, and all their ancestors.
fn ancestral_set(net: &DiscreteBayesNet, query: usize, observed: &[Option<usize>]) -> Vec<bool> {
    let mut keep = vec![false; net.len()];
    let mut stack: Vec<usize> = std::iter::once(query)
        .chain((0..net.len()).filter(|&i| observed[i].is_some()))
        .collect();
    while let Some(i) = stack.pop() {
        if keep[i] {
            continue;
        }
        keep[i] = true;
        stack.extend(net.parent_indices(i).iter().copied().filter(|&p| !keep[p]));
    }
    keep
}

fn next_elimination(hidden: &BTreeSet<usize>, factors: &[Factor], names: &[&str]) -> Option<usize> {
    hidden
        .iter()
        .map(|&v| {
            let neighbours: BTreeSet<usize> = factors
                .iter()
                .filter(|f| f.vars.contains(&v))
                .flat_map(|f| f.vars.iter().copied())
                .filter(|&u| u != v)
                .collect();
            (neighbours.len(), names[v], v)
        })
        .min()
        .map(|(_, _, v)| v)
}

/// Product of the CPT entries selected by a full assignment.
pub fn joint_probability(net: &DiscreteBayesNet, assignment: &Evidence) -> Result<f64, BnError> {
    let values = net.resolve(assignment)?;
    let values: Vec<usize> = values
        .iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| BnError::PartialAssignment(net.dag().nodes[i].name.clone())))
        .collect::<Result<_, _>>()?;
    Ok((0..net.len())
        .map(|i| {
            net.cpt_entry(i, net.parent_indices(i).iter().map(|&p| values[p]))[values[i]]
        })
        .product())
}
