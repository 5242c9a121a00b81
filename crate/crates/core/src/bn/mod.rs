//! Discrete Bayesian networks.
//!
//! A network is a [`Dag`] over categorical nodes plus one [`Cpt`] per node. The
//! joint distribution factorizes as the product of CPT entries, and
//! [`posterior`] answers conditional queries exactly by variable elimination.
//!
//! CPT rows are indexed by the joint parent assignment in mixed radix over the
//! CPT's parent list, with the last parent varying fastest.

mod config;
mod fit;
mod inference;

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

pub use config::{CptConfig, NetworkConfig, NodeConfig};
pub use fit::fit_cpts;
pub use inference::{joint_probability, posterior};

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BnError {
    #[error("node `{0}` is declared more than once")]
    DuplicateNode(String),
    #[error("node `{0}` needs at least two categories")]
    TooFewCategories(String),
    #[error("node `{node}` repeats category `{category}`")]
    DuplicateCategory { node: String, category: String },
    #[error("edge `{parent}` -> `{child}` names undeclared node `{unknown}`")]
    UnknownEdgeNode {
        parent: String,
        child: String,
        unknown: String,
    },
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no category `{category}`")]
    UnknownCategory { node: String, category: String },
    #[error("no CPT given for node `{0}`")]
    MissingCpt(String),
    #[error("more than one CPT given for node `{0}`")]
    DuplicateCpt(String),
    #[error("CPT for `{node}` lists parents {found:?} but the graph has {expected:?}")]
    CptParents {
        node: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("CPT for `{node}` is malformed: {reason}")]
    CptShape { node: String, reason: String },
    #[error("smoothing pseudocount must be finite and nonnegative, got {0}")]
    InvalidSmoothing(f64),
    #[error("cannot estimate CPTs from an empty dataset without smoothing")]
    EmptyData,
    #[error("data row {row} has {found} values, expected {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("data row {row}: node `{node}` has no category `{category}`")]
    RowCategory {
        row: usize,
        node: String,
        category: String,
    },
    #[error("query node `{0}` is part of the evidence")]
    QueryObserved(String),
    #[error("evidence has probability zero under the model")]
    InconsistentEvidence,
    #[error("assignment does not cover node `{0}`")]
    PartialAssignment(String),
    #[error("network config: {0}")]
    Config(String),
}

/// A categorical random variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: String,
    pub categories: Vec<String>,
}

impl NodeSpec {
    pub fn new<N, C, S>(name: N, categories: C) -> Self
    where
        N: Into<String>,
        C: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.categories.len()
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }

    fn check(&self) -> Result<(), BnError> {
        if self.categories.len() < 2 {
            return Err(BnError::TooFewCategories(self.name.clone()));
        }
        let mut seen = HashSet::new();
        for c in &self.categories {
            if !seen.insert(c.as_str()) {
                return Err(BnError::DuplicateCategory {
                    node: self.name.clone(),
                    category: c.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Directed graph over declared nodes; edges are `(parent, child)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dag {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(String, String)>,
}

impl Dag {
    pub fn new(nodes: Vec<NodeSpec>, edges: Vec<(String, String)>) -> Self {
        Self { nodes, edges }
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Parents of `name` in edge-list order.
    pub fn parents(&self, name: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(_, c)| c == name)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    /// Checks every structural invariant and returns the node names in
    /// topological order. Among ready nodes, declaration order wins.
    pub fn validate(&self) -> Result<Vec<&str>, BnError> {
        let order = self.topological_indices()?;
        Ok(order.into_iter().map(|i| self.nodes[i].name.as_str()).collect())
    }

    pub(crate) fn topological_indices(&self) -> Result<Vec<usize>, BnError> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            node.check()?;
            if index.insert(node.name.as_str(), i).is_some() {
                return Err(BnError::DuplicateNode(node.name.clone()));
            }
        }

        let n = self.nodes.len();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (p, c) in &self.edges {
            let lookup = |name: &String| {
                index.get(name.as_str()).copied().ok_or_else(|| BnError::UnknownEdgeNode {
                    parent: p.clone(),
                    child: c.clone(),
                    unknown: name.clone(),
                })
            };
            let (pi, ci) = (lookup(p)?, lookup(c)?);
            if !seen.insert((pi, ci)) {
                return Err(BnError::DuplicateEdge(p.clone(), c.clone()));
            }
            children[pi].push(ci);
            parents[ci].push(pi);
        }

        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }

        // Every leftover node still has a leftover parent, so walking parents
        // from any of them must revisit a node.
        let start = (0..n).find(|&i| indegree[i] > 0).expect("leftover node");
        let mut path = vec![start];
        let mut position = HashMap::from([(start, 0usize)]);
        let mut current = start;
        loop {
            let next = parents[current]
                .iter()
                .copied()
                .find(|&p| indegree[p] > 0)
                .expect("leftover parent");
            if let Some(&at) = position.get(&next) {
                let mut cycle: Vec<String> = path[at..]
                    .iter()
                    .rev()
                    .map(|&i| self.nodes[i].name.clone())
                    .collect();
                cycle.push(cycle[0].clone());
                return Err(BnError::Cycle(cycle));
            }
            position.insert(next, path.len());
            path.push(next);
            current = next;
        }
    }
}

/// Validates `dag` and returns a topological order of its node names.
pub fn validate_dag(dag: &Dag) -> Result<Vec<&str>, BnError> {
    dag.validate()
}

/// Conditional probability table of one node given its parents.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub node: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Partial assignment of category labels to nodes. Keyed storage makes the
/// insertion order irrelevant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Evidence {
    assignments: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: impl Into<String>, category: impl Into<String>) -> &mut Self {
        self.assignments.insert(node.into(), category.into());
        self
    }

    pub fn with(mut self, node: impl Into<String>, category: impl Into<String>) -> Self {
        self.insert(node, category);
        self
    }

    pub fn remove(&mut self, node: &str) -> Option<String> {
        self.assignments.remove(node)
    }

    pub fn get(&self, node: &str) -> Option<&str> {
        self.assignments.get(node).map(String::as_str)
    }

    pub fn contains(&self, node: &str) -> bool {
        self.assignments.contains_key(node)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str, &str) -> bool) {
        self.assignments.retain(|k, v| keep(k, v));
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self {
            assignments: iter
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }
}

/// Marginal distribution of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub node: String,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn probability(&self, index: usize) -> f64 {
        self.probabilities[index]
    }
}

/// A validated DAG with one CPT per node. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBayesNet {
    dag: Dag,
    cpts: Vec<Cpt>,
    cards: Vec<usize>,
    parents: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl DiscreteBayesNet {
    /// Builds a network, checking the DAG and that `cpts` holds exactly one
    /// well-formed table per node whose parent list matches the graph.
    pub fn new(dag: Dag, cpts: Vec<Cpt>) -> Result<Self, BnError> {
        dag.topological_indices()?;
        let index: HashMap<String, usize> = dag
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        let cards: Vec<usize> = dag.nodes.iter().map(NodeSpec::cardinality).collect();
        let parents: Vec<Vec<usize>> = dag
            .nodes
            .iter()
            .map(|n| dag.parents(&n.name).iter().map(|p| index[*p]).collect())
            .collect();

        let mut slots: Vec<Option<Cpt>> = vec![None; dag.nodes.len()];
        for cpt in cpts {
            let i = *index
                .get(&cpt.node)
                .ok_or_else(|| BnError::UnknownNode(cpt.node.clone()))?;
            if slots[i].is_some() {
                return Err(BnError::DuplicateCpt(cpt.node));
            }
            let expected: Vec<String> = parents[i]
                .iter()
                .map(|&p| dag.nodes[p].name.clone())
                .collect();
            if cpt.parents != expected {
                return Err(BnError::CptParents {
                    node: cpt.node,
                    expected,
                    found: cpt.parents,
                });
            }
            let n_rows: usize = parents[i].iter().map(|&p| cards[p]).product();
            check_rows(&cpt.node, &cpt.rows, n_rows, cards[i])?;
            slots[i] = Some(cpt);
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| BnError::MissingCpt(dag.nodes[i].name.clone())))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            dag,
            cpts,
            cards,
            parents,
            index,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, node: &str) -> Option<&Cpt> {
        self.index.get(node).map(|&i| &self.cpts[i])
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.node_index(name).map(|i| &self.dag.nodes[i])
    }

    pub fn len(&self) -> usize {
        self.dag.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.nodes.is_empty()
    }

    /// `P(node = category | parents = parent categories)`, all by index.
    pub(crate) fn cpt_entry(&self, node: usize, parent_values: impl Iterator<Item = usize>) -> &[f64] {
        let mut row = 0;
        for (&p, v) in self.parents[node].iter().zip(parent_values) {
            row = row * self.cards[p] + v;
        }
        &self.cpts[node].rows[row]
    }

    pub(crate) fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub(crate) fn parent_indices(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    /// Maps evidence onto category indices, one slot per node.
    pub(crate) fn resolve(&self, evidence: &Evidence) -> Result<Vec<Option<usize>>, BnError> {
        let mut resolved = vec![None; self.len()];
        for (name, label) in evidence.iter() {
            let i = self
                .node_index(name)
                .ok_or_else(|| BnError::UnknownNode(name.to_string()))?;
            let c = self.dag.nodes[i]
                .category_index(label)
                .ok_or_else(|| BnError::UnknownCategory {
                    node: name.to_string(),
                    category: label.to_string(),
                })?;
            resolved[i] = Some(c);
        }
        Ok(resolved)
    }
}

fn check_rows(node: &str, rows: &[Vec<f64>], n_rows: usize, card: usize) -> Result<(), BnError> {
    let shape = |reason: String| BnError::CptShape {
        node: node.to_string(),
        reason,
    };
    if rows.len() != n_rows {
        return Err(shape(format!("{} rows, expected {n_rows}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != card {
            return Err(shape(format!("row {r} has {} entries, expected {card}", row.len())));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(shape(format!("row {r} has entry {v} outside [0, 1]")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(shape(format!("row {r} sums to {sum}")));
        }
    }
    Ok(())
}
