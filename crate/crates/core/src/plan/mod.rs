//! The plan registry: an append-only DAG whose leaves are source tables and
//! whose internal nodes are operator applications.
//!
//! Every node keeps its materialized result. Nodes are never removed or
//! changed, so backtracking means building a new node on top of an older
//! one. A failed operator application leaves the registry untouched.
//!
//! ```
//! use planql::plan::PlanRegistry;
//! use planql::table::{Table, Value};
//! use serde_json::json;
//!
//! let t = Table::from_rows("t", &["x"], vec![vec![Value::Number(1.0)]]).unwrap();
//! let mut reg = PlanRegistry::new();
//! let leaf = reg.add_leaf(t);
//! let (id, out) = reg
//!     .apply_op("aggregate", json!({"aggregates": [{"fn": "count"}]}), &[leaf])
//!     .unwrap();
//! assert_eq!(id, 1);
//! assert_eq!(out.rows()[0][0], Value::Number(1.0));
//! assert!(reg.apply_op("no_such_op", json!({}), &[leaf]).is_err());
//! assert_eq!(reg.len(), 2);
//! ```

mod file;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::operators::{OpError, Operator};
use crate::table::{Provenance, Table, TableId};

pub use self::file::{replay, replay_registry, LeafRecord, PlanFile, StepRecord, PLAN_VERSION};

pub type NodeId = usize;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("plan leaf {0:?} is not among the loaded tables")]
    UnresolvedLeaf(String),
    #[error("leaf {leaf:?} schema mismatch: plan expects [{}], table has [{}]", expected.join(", "), found.join(", "))]
    SchemaMismatch {
        leaf: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("malformed plan: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Leaf {
        table_id: TableId,
    },
    OpApply {
        op: Operator,
        args: serde_json::Value,
        children: Vec<NodeId>,
    },
}

#[derive(Debug, Clone)]
pub struct PlanNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub created_at_step: usize,
    result: Table,
}

impl PlanNode {
    pub fn result(&self) -> &Table {
        &self.result
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.kind {
            NodeKind::Leaf { .. } => &[],
            NodeKind::OpApply { children, .. } => children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    /// `#3 join(0, 1): 12 rows x 6 cols`
    pub fn summary_line(&self) -> String {
        let t = &self.result;
        let head = match &self.kind {
            NodeKind::Leaf { table_id } => format!("#{} leaf {}", self.id, table_id),
            NodeKind::OpApply { op, children, .. } => {
                let cs: Vec<String> = children.iter().map(ToString::to_string).collect();
                format!("#{} {}({})", self.id, op.name(), cs.join(", "))
            }
        };
        format!("{head}: {} rows x {} cols", t.num_rows(), t.num_columns())
    }
}

impl fmt::Display for PlanNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary_line())
    }
}

#[derive(Debug, Clone, Default)]
pub struct PlanRegistry {
    nodes: Vec<PlanNode>,
    root: Option<NodeId>,
}

impl PlanRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&PlanNode, PlanError> {
        self.nodes.get(id).ok_or(PlanError::UnknownNode(id))
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn leaves(&self) -> impl Iterator<Item = &PlanNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn add_leaf(&mut self, t: Table) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(PlanNode {
            id,
            kind: NodeKind::Leaf {
                table_id: t.id().clone(),
            },
            created_at_step: id,
            result: t,
        });
        id
    }

    /// Executes `op_name` on the children's results and records the node.
    /// On any error nothing is appended.
    pub fn apply_op(
        &mut self,
        op_name: &str,
        args: serde_json::Value,
        children: &[NodeId],
    ) -> Result<(NodeId, Table), PlanError> {
        let op = Operator::from_name(op_name)?;
        let inputs: Vec<&Table> = children
            .iter()
            .map(|&c| self.node(c).map(PlanNode::result))
            .collect::<Result<_, _>>()?;
        let out = op.execute(&args, &inputs)?;
        let id = self.nodes.len();
        let result = out.relabel(format!("node_{id}"), Provenance::PlanNode(id));
        self.nodes.push(PlanNode {
            id,
            kind: NodeKind::OpApply {
                op,
                args,
                children: children.to_vec(),
            },
            created_at_step: id,
            result: result.clone(),
        });
        Ok((id, result))
    }

    pub fn set_root(&mut self, id: NodeId) -> Result<(), PlanError> {
        self.node(id)?;
        self.root = Some(id);
        Ok(())
    }

    /// Ids of every node reachable from `target` (itself included).
    pub fn ancestors_of(&self, target: NodeId) -> Result<BTreeSet<NodeId>, PlanError> {
        self.node(target)?;
        let mut seen = BTreeSet::new();
        let mut stack = vec![target];
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                stack.extend_from_slice(self.nodes[id].children());
            }
        }
        Ok(seen)
    }

    /// The sub-DAG under `target` in creation order, so every node comes
    /// after all of its children.
    pub fn linearize(&self, target: NodeId) -> Result<Vec<&PlanNode>, PlanError> {
        Ok(self
            .ancestors_of(target)?
            .into_iter()
            .map(|id| &self.nodes[id])
            .collect())
    }

    /// One summary line per node, in creation order.
    pub fn summary(&self) -> Vec<String> {
        self.nodes.iter().map(PlanNode::summary_line).collect()
    }
}
