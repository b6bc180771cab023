//! Versioned prompt templates. Placeholders are written `{name}`.

pub const DESCRIBE_COLUMN: &str = include_str!("../prompts/describe_column.v1.txt");
pub const DESCRIBE_CLUSTER: &str = include_str!("../prompts/describe_cluster.v1.txt");
pub const DESCRIBE_TABLE: &str = include_str!("../prompts/describe_table.v1.txt");
pub const VALIDATE_TABLE: &str = include_str!("../prompts/validate_table.v1.txt");
pub const VALIDATE_CLUSTER: &str = include_str!("../prompts/validate_cluster.v1.txt");
pub const VALIDATE_COLUMN: &str = include_str!("../prompts/validate_column.v1.txt");
pub const AGENT_SYSTEM: &str = include_str!("../prompts/agent_system.v1.txt");
pub const AGENT_TASK: &str = include_str!("../prompts/agent_task.v1.txt");

/// Replaces each `{key}` with its value in one left-to-right pass, so
/// substituted text is never rescanned. Unknown placeholders are kept.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let hit = after.find('}').and_then(|end| {
            let key = &after[..end];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (end, *v))
        });
        match hit {
            Some((end, value)) => {
                out.push_str(value);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
