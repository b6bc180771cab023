use std::collections::{BTreeMap, BTreeSet};

use super::AgentConfig;
use crate::plan::{NodeId, PlanRegistry};
use crate::table::{describe_table_columns, BoundedText, Table};

/// Columns to show per source table after schema retrieval.
pub type Focus = BTreeMap<String, BTreeSet<String>>;

fn focused_columns(t: &Table, focus: Option<&Focus>, wide: usize) -> Option<Vec<String>> {
    let keep: BTreeSet<&String> = focus?.values().flatten().collect();
    if t.num_columns() <= wide {
        return None;
    }
    Some(
        t.column_names()
            .into_iter()
            .filter(|c| keep.contains(&c.to_string()))
            .map(String::from)
            .collect(),
    )
}

/// The node's table summary followed by one line per registry node,
/// newest first, in at most `config.observation_cap` bytes. The table
/// summary gets at most half of the cap. Wide tables are shown restricted
/// to the retrieved columns.
pub fn render_observation(
    node: NodeId,
    reg: &PlanRegistry,
    config: &AgentConfig,
    focus: Option<&Focus>,
) -> String {
    let cap = config.observation_cap;
    let mut out = BoundedText::new(cap);
    let Ok(n) = reg.node(node) else {
        out.push_line(&format!("unknown node {node}"));
        return out.finish();
    };
    out.push_line(&n.summary_line());
    let only = focused_columns(n.result(), focus, config.wide_table_threshold);
    let summary = describe_table_columns(n.result(), only.as_deref(), &config.summary_options(cap / 2));
    for line in summary.lines() {
        out.push_line(line);
    }
    out.push_line(&format!("plan nodes ({} total, newest first):", reg.len()));
    for n in reg.nodes().iter().rev() {
        out.push_line(&format!("  {}", n.summary_line()));
    }
    out.finish()
}
