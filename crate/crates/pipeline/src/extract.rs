//! Pulling pseudocode, plans and programs out of model replies.

/// Contents of every complete fenced block, in order.
pub fn fenced_blocks(text: &str) -> Vec<(String, String)> {
    let mut blocks = Vec::new();
    let mut open: Option<(String, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match &mut open {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    open = Some((info.trim().to_ascii_lowercase(), Vec::new()));
                }
            }
            Some((info, body)) => {
                if trimmed.trim_end() == "```" {
                    blocks.push((std::mem::take(info), body.join("\n")));
                    open = None;
                } else {
                    body.push(line);
                }
            }
        }
    }
    blocks
}

fn last_nonempty_block(text: &str) -> Option<String> {
    fenced_blocks(text)
        .into_iter()
        .rev()
        .map(|(_, b)| b)
        .find(|b| !b.trim().is_empty())
}

fn starts_with_numbered_step(text: &str) -> bool {
    let t = text.trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    digits > 0 && matches!(t[digits..].chars().next(), Some('.') | Some(')'))
}

/// Last fenced block; otherwise the text after the last heading line that
/// mentions pseudocode; otherwise the whole reply if it opens with a numbered
/// step.
pub fn extract_pseudocode(reply: &str) -> Option<String> {
    if let Some(b) = last_nonempty_block(reply) {
        return Some(b.trim_end().to_string());
    }
    let lines: Vec<&str> = reply.lines().collect();
    let heading = lines.iter().rposition(|l| {
        let t = l.trim().to_ascii_lowercase();
        t.contains("pseudocode") && (t.starts_with('#') || t.ends_with(':') || t.starts_with("**"))
    });
    if let Some(h) = heading {
        let rest = lines[h + 1..].join("\n");
        if !rest.trim().is_empty() {
            return Some(rest.trim().to_string());
        }
    }
    starts_with_numbered_step(reply).then(|| reply.trim().to_string())
}

/// Action lines of the plan: from the last fenced block if there is one,
/// else from the whole reply. List numbering before `(` is dropped.
pub fn extract_plan(reply: &str) -> Option<Vec<String>> {
    let source = last_nonempty_block(reply).unwrap_or_else(|| reply.to_string());
    let steps: Vec<String> = source
        .lines()
        .filter_map(|l| {
            let t = l.trim();
            let t = t.trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == ')' || c == '-' || c == '*');
            let t = t.trim();
            (t.starts_with('(') && t.ends_with(')') && t.len() > 2).then(|| t.to_string())
        })
        .collect();
    (!steps.is_empty()).then_some(steps)
}

/// Source of the last complete fenced block, preferring blocks tagged python.
pub fn extract_code(reply: &str) -> Option<String> {
    let blocks = fenced_blocks(reply);
    let pick = blocks
        .iter()
        .rev()
        .find(|(info, b)| info.starts_with("python") && !b.trim().is_empty())
        .or_else(|| blocks.iter().rev().find(|(_, b)| !b.trim().is_empty()))?;
    Some(format!("{}\n", pick.1.trim_end()))
}
