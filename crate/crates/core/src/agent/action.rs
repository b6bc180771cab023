use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::plan::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalAnswer {
    Node(NodeId),
    Text(String),
}

/// One parsed model action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionRequest {
    ToolCall {
        tool: String,
        args: Json,
        children: Vec<NodeId>,
    },
    FinalAnswer(FinalAnswer),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no action found; reply with one JSON object such as {{\"tool\": ..., \"args\": {{...}}, \"children\": [...]}} or {{\"final_answer\": {{\"node\": N}}}}. Reply began: {excerpt:?}")]
    NoActionFound { excerpt: String },
    #[error("malformed action ({reason}) in {excerpt:?}")]
    MalformedArgs { excerpt: String, reason: String },
}

fn excerpt(s: &str) -> String {
    const MAX: usize = 160;
    let mut e: String = s.chars().take(MAX).collect();
    if s.chars().count() > MAX {
        e.push('…');
    }
    e
}

fn malformed(src: &str, reason: impl Into<String>) -> ParseError {
    ParseError::MalformedArgs {
        excerpt: excerpt(src),
        reason: reason.into(),
    }
}

fn to_action(obj: &serde_json::Map<String, Json>, src: &str) -> Result<ActionRequest, ParseError> {
    if let Some(fa) = obj.get("final_answer") {
        let answer = match fa {
            Json::Object(m) => match (m.get("node"), m.get("text")) {
                (Some(n), None) => FinalAnswer::Node(
                    n.as_u64()
                        .ok_or_else(|| malformed(src, "final_answer.node must be a node id"))? as NodeId,
                ),
                (None, Some(Json::String(t))) => FinalAnswer::Text(t.clone()),
                _ => return Err(malformed(src, "final_answer needs exactly one of node or text")),
            },
            Json::Number(n) => FinalAnswer::Node(
                n.as_u64()
                    .ok_or_else(|| malformed(src, "final_answer must be a node id"))? as NodeId,
            ),
            Json::String(t) => FinalAnswer::Text(t.clone()),
            _ => return Err(malformed(src, "final_answer must be {\"node\": N} or {\"text\": ...}")),
        };
        return Ok(ActionRequest::FinalAnswer(answer));
    }
    let tool = obj
        .get("tool")
        .and_then(Json::as_str)
        .ok_or_else(|| malformed(src, "tool must be a string"))?
        .to_string();
    let args = match obj.get("args") {
        None | Some(Json::Null) => Json::Object(Default::default()),
        Some(a @ Json::Object(_)) => a.clone(),
        Some(_) => return Err(malformed(src, "args must be an object")),
    };
    let children = match obj.get("children") {
        None => Vec::new(),
        Some(Json::Array(xs)) => xs
            .iter()
            .map(|x| x.as_u64().map(|n| n as NodeId))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| malformed(src, "children must be a list of node ids"))?,
        Some(_) => return Err(malformed(src, "children must be a list of node ids")),
    };
    Ok(ActionRequest::ToolCall { tool, args, children })
}

/// Finds the first JSON object in `turn` with a `tool` or `final_answer`
/// key. Returns it with its byte offset. Text around it is ignored, and
/// so is any later action.
pub(crate) fn locate_action(turn: &str) -> Result<(usize, ActionRequest), ParseError> {
    let mut broken: Option<ParseError> = None;
    for (i, _) in turn.match_indices('{') {
        let src = &turn[i..];
        let mut stream = serde_json::Deserializer::from_str(src).into_iter::<Json>();
        match stream.next() {
            Some(Ok(Json::Object(obj))) if obj.contains_key("tool") || obj.contains_key("final_answer") => {
                let end = stream.byte_offset();
                return to_action(&obj, &src[..end]).map(|a| (i, a));
            }
            Some(Err(e)) if broken.is_none() => {
                let head: String = src.chars().take(64).collect();
                if head.contains("\"tool\"") || head.contains("\"final_answer\"") {
                    broken = Some(malformed(src, format!("invalid JSON: {e}")));
                }
            }
            _ => {}
        }
    }
    Err(broken.unwrap_or_else(|| ParseError::NoActionFound { excerpt: excerpt(turn) }))
}

/// Extracts the first action block from a model turn.
pub fn parse_action(turn: &str) -> Result<ActionRequest, ParseError> {
    locate_action(turn).map(|(_, a)| a)
}

/// The free text before the action, with a leading `Thought:` removed.
pub(crate) fn thought_of(turn: &str) -> String {
    let before = match locate_action(turn) {
        Ok((i, _)) => &turn[..i],
        Err(_) => turn,
    };
    let t = before.trim();
    let t = t.strip_prefix("Thought:").unwrap_or(t);
    t.trim().trim_end_matches("```json").trim_end_matches("```").trim().to_string()
}
