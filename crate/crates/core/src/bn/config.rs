//! Declarative TOML form of a network.
//!
//! ```toml
//! edges = [["Exam", "Quiz_1"]]
//!
//! [[nodes]]
//! name = "Exam"
//! categories = ["0", "1"]
//!
//! [[cpts]]
//! node = "Exam"
//! parents = []
//! rows = [[0.4, 0.6]]
//! ```
//!
//! The `cpts` array is optional; without it the config describes structure
//! only and can be fitted with [`super::fit_cpts`].

use serde::{Deserialize, Serialize};

use super::{BnError, Cpt, Dag, DiscreteBayesNet, NodeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub name: String,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptConfig {
    pub node: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
    pub nodes: Vec<NodeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cpts: Vec<CptConfig>,
}

impl NetworkConfig {
    pub fn from_dag(dag: &Dag) -> Self {
        Self {
            edges: dag
                .edges
                .iter()
                .map(|(p, c)| [p.clone(), c.clone()])
                .collect(),
            nodes: dag
                .nodes
                .iter()
                .map(|n| NodeConfig {
                    name: n.name.clone(),
                    categories: n.categories.clone(),
                })
                .collect(),
            cpts: Vec::new(),
        }
    }

    pub fn from_net(net: &DiscreteBayesNet) -> Self {
        Self {
            cpts: net
                .cpts()
                .iter()
                .map(|c| CptConfig {
                    node: c.node.clone(),
                    parents: c.parents.clone(),
                    rows: c.rows.clone(),
                })
                .collect(),
            ..Self::from_dag(net.dag())
        }
    }

    pub fn parse(text: &str) -> Result<Self, BnError> {
        toml::from_str(text).map_err(|e| BnError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, BnError> {
        toml::to_string(self).map_err(|e| BnError::Config(e.to_string()))
    }

    pub fn to_dag(&self) -> Result<Dag, BnError> {
        let dag = Dag::new(
            self.nodes
                .iter()
                .map(|n| NodeSpec::new(n.name.clone(), n.categories.clone()))
                .collect(),
            self.edges
                .iter()
                .map(|[p, c]| (p.clone(), c.clone()))
                .collect(),
        );
        dag.validate()?;
        Ok(dag)
    }

    /// Builds the network from the explicit CPT rows.
    pub fn to_net(&self) -> Result<DiscreteBayesNet, BnError> {
        let cpts = self
            .cpts
            .iter()
            .map(|c| Cpt {
                node: c.node.clone(),
                parents: c.parents.clone(),
                rows: c.rows.clone(),
            })
            .collect();
        DiscreteBayesNet::new(self.to_dag()?, cpts)
    }
}
