use thiserror::Error;

use crate::rdf::{parse_turtle, PrefixMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no parseable Turtle found in response")]
pub struct NoTurtleFound;

struct Fence<'a> {
    label: &'a str,
    body: String,
}

fn fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut current: Option<(&str, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match current.take() {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    current = Some((info.trim(), Vec::new()));
                }
            }
            Some((label, mut lines)) => {
                if trimmed.starts_with("```") {
                    out.push(Fence {
                        label,
                        body: lines.join("\n"),
                    });
                } else {
                    lines.push(line);
                    current = Some((label, lines));
                }
            }
        }
    }
    // An unterminated fence runs to the end of the text.
    if let Some((label, lines)) = current {
        out.push(Fence {
            label,
            body: lines.join("\n"),
        });
    }
    out
}

/// Pulls the Turtle document out of a model response: the first `turtle`/`ttl`
/// fence, else the first fence that parses, else the whole text. Every
/// candidate must parse against `prefixes`.
pub fn extract_turtle_block(response_text: &str, prefixes: &PrefixMap) -> Result<String, NoTurtleFound> {
    let parses = |s: &str| !s.trim().is_empty() && parse_turtle(s, prefixes).is_ok();
    let fences = fences(response_text);
    let labeled = fences
        .iter()
        .filter(|f| f.label.eq_ignore_ascii_case("turtle") || f.label.eq_ignore_ascii_case("ttl"));
    let unlabeled = fences
        .iter()
        .filter(|f| !(f.label.eq_ignore_ascii_case("turtle") || f.label.eq_ignore_ascii_case("ttl")));
    labeled
        .chain(unlabeled)
        .map(|f| f.body.trim().to_string())
        .chain(std::iter::once(response_text.trim().to_string()))
        .find(|c| parses(c))
        .ok_or(NoTurtleFound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extract(s: &str) -> Result<String, NoTurtleFound> {
        extract_turtle_block(s, &PrefixMap::defaults())
    }

    #[test]
    fn labeled_fence() {
        assert_eq!(extract("Here:\n```turtle\nex:a ex:b ex:c .\n```").unwrap(), "ex:a ex:b ex:c .");
    }

    #[test]
    fn whole_text_fallback() {
        assert_eq!(extract("ex:a ex:b ex:c .").unwrap(), "ex:a ex:b ex:c .");
    }

    #[test]
    fn nothing_parses() {
        assert_eq!(extract("no graph here"), Err(NoTurtleFound));
        assert_eq!(extract("```turtle\nnot turtle\n```"), Err(NoTurtleFound));
        assert_eq!(extract(""), Err(NoTurtleFound));
    }

    #[test]
    fn labeled_beats_earlier_unlabeled() {
        let text = "```\nex:x ex:y ex:z .\n```\n```ttl\nex:a ex:b ex:c .\n```";
        assert_eq!(extract(text).unwrap(), "ex:a ex:b ex:c .");
    }

    #[test]
    fn broken_labeled_falls_through_to_parseable_fence() {
        let text = "```turtle\nex:a ex:b\n```\nretry:\n```\nex:a ex:b ex:c .\n```";
        assert_eq!(extract(text).unwrap(), "ex:a ex:b ex:c .");
    }

    #[test]
    fn unterminated_fence() {
        assert_eq!(extract("```turtle\nex:a ex:b ex:c .").unwrap(), "ex:a ex:b ex:c .");
    }
}
