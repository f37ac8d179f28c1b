//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tree::{DecisionTree, Node};
use super::TrainedForest;

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct NodeRecord<T: Scalar> {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    feature: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    threshold: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    left: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    right: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    leaf: Option<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct ForestFile<T: Scalar> {
    version: u32,
    n_features: usize,
    oob_error: f64,
    oob_evaluated: usize,
    importances: Vec<f64>,
    trees: Vec<Vec<NodeRecord<T>>>,
}

impl<T: Scalar> TrainedForest<T> {
    pub fn to_json(&self) -> Result<String> {
        let trees = self
            .trees
            .iter()
            .map(|t| {
                t.nodes()
                    .iter()
                    .map(|n| match *n {
                        Node::Split { feature, threshold, left, right } => NodeRecord {
                            feature: Some(feature),
                            threshold: Some(threshold),
                            left: Some(left),
                            right: Some(right),
                            leaf: None,
                        },
                        Node::Leaf { counts } => {
                            NodeRecord { feature: None, threshold: None, left: None, right: None, leaf: Some(counts) }
                        }
                    })
                    .collect()
            })
            .collect();
        let file = ForestFile {
            version: FOREST_FORMAT_VERSION,
            n_features: self.n_features,
            oob_error: self.oob_error,
            oob_evaluated: self.oob_evaluated,
            importances: self.importances.clone(),
            trees,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let version = probe.get("version").and_then(|v| v.as_u64());
        if version != Some(FOREST_FORMAT_VERSION as u64) {
            return Err(Error::Model(format!(
                "forest file version {version:?} is not the supported version {FOREST_FORMAT_VERSION}"
            )));
        }
        let file: ForestFile<T> = serde_json::from_value(probe)?;
        if file.importances.len() != file.n_features {
            return Err(Error::Model("importance vector length differs from n_features".into()));
        }
        let mut trees = Vec::with_capacity(file.trees.len());
        for recs in file.trees {
            let nodes = recs
                .into_iter()
                .map(|r| match (r.feature, r.threshold, r.left, r.right, r.leaf) {
                    (Some(feature), Some(threshold), Some(left), Some(right), None) => {
                        Ok(Node::Split { feature, threshold, left, right })
                    }
                    (None, None, None, None, Some(counts)) => Ok(Node::Leaf { counts }),
                    _ => Err(Error::Model("node is neither a split nor a leaf".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            trees.push(DecisionTree::from_nodes(nodes).map_err(|e| Error::Model(e.to_string()))?);
        }
        let mut forest = TrainedForest::from_trees(trees, file.n_features).map_err(|e| Error::Model(e.to_string()))?;
        forest.oob_error = file.oob_error;
        forest.oob_evaluated = file.oob_evaluated;
        forest.importances = file.importances;
        Ok(forest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::maps::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}
