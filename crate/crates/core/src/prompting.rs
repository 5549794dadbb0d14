//! Mark identifiers, textual scene-graph verbalization and prompt assembly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PromptMode;
use crate::types::{IdStyle, MarkId, ObjectInstance, SceneGraph};

const VISUAL_SYSTEM: &str = include_str!("../data/templates/visual_system.txt");
const VISUAL_USER: &str = include_str!("../data/templates/visual_user.txt");
const VISUAL_TEXTUAL_SYSTEM: &str = include_str!("../data/templates/visual_textual_system.txt");
const VISUAL_TEXTUAL_USER: &str = include_str!("../data/templates/visual_textual_user.txt");

const ARROW_OPEN: &str = " --(";
const ARROW_CLOSE: &str = ")--> ";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("visual_textual mode needs a textual scene graph")]
    MissingSceneGraph,
    #[error("line {line}: expected `<head> --(<label>)--> <tail>`")]
    Malformed { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPayload {
    pub system: String,
    pub user: String,
    /// Path of the rendered image handed to the model.
    pub image: String,
    pub mode: PromptMode,
}

/// Number objects `1..=n` in their current order.
pub fn assign_ids(objects: &mut [ObjectInstance]) {
    for (i, o) in objects.iter_mut().enumerate() {
        o.mark_id = Some(MarkId::new(i as u32 + 1, &o.class_label));
    }
}

/// One `<head> --(<label>)--> <tail>` line per relation, in graph order.
pub fn verbalize_scene_graph(sg: &SceneGraph, style: IdStyle) -> String {
    sg.relations
        .iter()
        .map(|r| {
            format!(
                "{}{ARROW_OPEN}{}{ARROW_CLOSE}{}",
                sg.mark_text(r.head, style),
                r.label_text(),
                sg.mark_text(r.tail, style)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inverse of [`verbalize_scene_graph`]: `(head_id, label, tail_id)` per line.
pub fn parse_triplets(text: &str) -> Result<Vec<(String, String, String)>, PromptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || PromptError::Malformed { line: i + 1 };
            let (head, rest) = line.split_once(ARROW_OPEN).ok_or_else(bad)?;
            let (label, tail) = rest.split_once(ARROW_CLOSE).ok_or_else(bad)?;
            if head.is_empty() || label.is_empty() || tail.is_empty() {
                return Err(bad());
            }
            Ok((head.to_string(), label.to_string(), tail.to_string()))
        })
        .collect()
}

/// Single left-to-right substitution, so substituted text is never rescanned.
fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        match vars.iter().find(|(name, _)| {
            tail[1..].starts_with(name) && tail[1 + name.len()..].starts_with('}')
        }) {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn build_prompt(
    mode: PromptMode,
    query: &str,
    sg_text: Option<&str>,
    image_path: &str,
) -> Result<PromptPayload, PromptError> {
    if query.trim().is_empty() {
        return Err(PromptError::EmptyQuery);
    }
    let (system, user) = match mode {
        PromptMode::Visual => (VISUAL_SYSTEM, fill(VISUAL_USER, &[("question", query)])),
        PromptMode::VisualTextual => {
            let sg = sg_text.ok_or(PromptError::MissingSceneGraph)?;
            (
                VISUAL_TEXTUAL_SYSTEM,
                fill(
                    VISUAL_TEXTUAL_USER,
                    &[("scene_graph", sg), ("question", query)],
                ),
            )
        }
    };
    Ok(PromptPayload {
        system: system.to_string(),
        user,
        image: image_path.to_string(),
        mode,
    })
}
