use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{NodeId, NodeKind, PlanError, PlanRegistry};
use crate::table::Table;

pub const PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafRecord {
    pub name: String,
    /// Expected column names, in order.
    pub schema: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub id: NodeId,
    pub op: String,
    #[serde(default)]
    pub args: serde_json::Value,
    pub children: Vec<NodeId>,
}

/// Serialized plan. Leaves have implicit ids `0..leaves.len()`; steps carry
/// explicit ids and may only reference leaves or earlier steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub version: u32,
    pub leaves: Vec<LeafRecord>,
    pub steps: Vec<StepRecord>,
    pub root: NodeId,
}

impl PlanFile {
    /// The sub-plan under `target`, renumbered densely: leaves first, then
    /// operator nodes in creation order.
    pub fn export(reg: &PlanRegistry, target: NodeId) -> Result<PlanFile, PlanError> {
        let nodes = reg.linearize(target)?;
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        let mut leaves = Vec::new();
        for n in nodes.iter().filter(|n| n.is_leaf()) {
            remap.insert(n.id, leaves.len());
            leaves.push(LeafRecord {
                name: n.result().id().0.clone(),
                schema: n.result().column_names().into_iter().map(String::from).collect(),
            });
        }
        let mut steps = Vec::new();
        for n in nodes.iter().filter(|n| !n.is_leaf()) {
            let NodeKind::OpApply { op, args, children } = &n.kind else {
                unreachable!()
            };
            let id = leaves.len() + steps.len();
            remap.insert(n.id, id);
            steps.push(StepRecord {
                id,
                op: op.name().to_string(),
                args: args.clone(),
                children: children.iter().map(|c| remap[c]).collect(),
            });
        }
        Ok(PlanFile {
            version: PLAN_VERSION,
            leaves,
            steps,
            root: remap[&target],
        })
    }

    pub fn from_json(text: &str) -> Result<PlanFile, PlanError> {
        let plan: PlanFile = serde_json::from_str(text).map_err(|e| PlanError::Malformed(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    /// Structural checks that need no tables: version, unique ids, no
    /// forward references, root defined.
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.version != PLAN_VERSION {
            return Err(PlanError::Malformed(format!(
                "unsupported version {} (expected {PLAN_VERSION})",
                self.version
            )));
        }
        let mut defined: Vec<NodeId> = (0..self.leaves.len()).collect();
        for s in &self.steps {
            if defined.contains(&s.id) {
                return Err(PlanError::Malformed(format!("duplicate node id {}", s.id)));
            }
            if let Some(c) = s.children.iter().find(|c| !defined.contains(c)) {
                return Err(PlanError::Malformed(format!(
                    "step {} references node {c}, which is not defined before it",
                    s.id
                )));
            }
            defined.push(s.id);
        }
        if !defined.contains(&self.root) {
            return Err(PlanError::Malformed(format!("root {} is not defined", self.root)));
        }
        Ok(())
    }
}

/// Rebuilds the registry a plan describes over `tables` (keyed by leaf
/// name). Returns the registry and the registry id of the plan's root.
pub fn replay_registry(
    plan: &PlanFile,
    tables: &BTreeMap<String, Table>,
) -> Result<(PlanRegistry, NodeId), PlanError> {
    plan.validate()?;
    let mut reg = PlanRegistry::new();
    let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
    for (i, leaf) in plan.leaves.iter().enumerate() {
        let t = tables
            .get(&leaf.name)
            .ok_or_else(|| PlanError::UnresolvedLeaf(leaf.name.clone()))?;
        let found: Vec<String> = t.column_names().into_iter().map(String::from).collect();
        if found != leaf.schema {
            return Err(PlanError::SchemaMismatch {
                leaf: leaf.name.clone(),
                expected: leaf.schema.clone(),
                found,
            });
        }
        remap.insert(i, reg.add_leaf(t.clone()));
    }
    for s in &plan.steps {
        let children: Vec<NodeId> = s.children.iter().map(|c| remap[c]).collect();
        let (id, _) = reg.apply_op(&s.op, s.args.clone(), &children)?;
        remap.insert(s.id, id);
    }
    let root = remap[&plan.root];
    reg.set_root(root)?;
    Ok((reg, root))
}

/// Executes a plan and returns its root table.
pub fn replay(plan: &PlanFile, tables: &BTreeMap<String, Table>) -> Result<Table, PlanError> {
    let (reg, root) = replay_registry(plan, tables)?;
    Ok(reg.node(root)?.result().clone())
}
