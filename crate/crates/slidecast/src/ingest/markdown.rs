//! Markdown slide-deck parsing: slides delimited by level-1/2 headings or
//! horizontal rules, narration scripts held in HTML comments.

use std::path::Path;

use super::{IngestError, ScriptedSlide};
use crate::model::normalize_script;

struct SlideBuilder {
    heading: String,
    locator: String,
    parts: Vec<String>,
}

impl SlideBuilder {
    fn finish(self) -> ScriptedSlide {
        ScriptedSlide {
            heading: self.heading,
            script: normalize_script(&self.parts.join(" ")),
            source_locator: self.locator,
        }
    }
}

fn is_heading(line: &str) -> Option<&str> {
    for prefix in ["## ", "# "] {
        if let Some(rest) = line.strip_prefix(prefix) {
            return Some(rest);
        }
    }
    if line == "#" || line == "##" {
        return Some("");
    }
    None
}

fn is_rule(line: &str) -> bool {
    let trimmed = line.trim_end();
    trimmed.len() >= 3 && trimmed.chars().all(|c| c == '-')
}

fn is_fence(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("```") || t.starts_with("~~~")
}

/// Parse a Markdown slide source. Slides are delimited by `#`/`##` headings
/// or `---` rules outside code fences; each slide's script is the
/// concatenation of the HTML comment blocks between its delimiter and the
/// next. YAML front matter and fenced code blocks are never scanned.
pub fn parse_markdown_deck(path: &Path) -> Result<Vec<ScriptedSlide>, IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text =
        String::from_utf8(bytes).map_err(|_| IngestError::NotText(path.to_path_buf()))?;
    let file_label = path.display().to_string();

    let mut slides: Vec<ScriptedSlide> = Vec::new();
    let mut current = SlideBuilder {
        heading: String::new(),
        locator: format!("{file_label}:1"),
        parts: Vec::new(),
    };
    let mut in_front_matter = false;
    let mut front_matter_done = false;
    let mut in_fence = false;
    let mut in_comment = false;
    let mut comment_open_line = 0usize;
    let mut comment_text = String::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw_line.trim_end_matches('\r');

        if lineno == 1 && line.trim_end() == "---" {
            in_front_matter = true;
            continue;
        }
        if in_front_matter {
            if line.trim_end() == "---" || line.trim_end() == "..." {
                in_front_matter = false;
                front_matter_done = true;
            }
            continue;
        }
        let _ = front_matter_done;

        if !in_comment && is_fence(line) {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }

        let mut rest = line;
        if !in_comment {
            if let Some(heading) = is_heading(line) {
                slides.push(std::mem::replace(
                    &mut current,
                    SlideBuilder {
                        heading: heading
                            .split("<!--")
                            .next()
                            .unwrap_or("")
                            .trim()
                            .to_string(),
                        locator: format!("{file_label}:{lineno}"),
                        parts: Vec::new(),
                    },
                )
                .finish());
                // an inline comment may follow the heading text
                rest = match line.find("<!--") {
                    Some(pos) => &line[pos..],
                    None => "",
                };
            } else if is_rule(line) {
                slides.push(std::mem::replace(
                    &mut current,
                    SlideBuilder {
                        heading: String::new(),
                        locator: format!("{file_label}:{lineno}"),
                        parts: Vec::new(),
                    },
                )
                .finish());
                continue;
            }
        }

        loop {
            if in_comment {
                match rest.find("-->") {
                    Some(pos) => {
                        comment_text.push_str(&rest[..pos]);
                        current.parts.push(std::mem::take(&mut comment_text));
                        in_comment = false;
                        rest = &rest[pos + 3..];
                    }
                    None => {
                        comment_text.push_str(rest);
                        comment_text.push('\n');
                        break;
                    }
                }
            } else {
                match rest.find("<!--") {
                    Some(pos) => {
                        rest = &rest[pos + 4..];
                        in_comment = true;
                        comment_open_line = lineno;
                    }
                    None => break,
                }
            }
        }
    }

    if in_comment {
        return Err(IngestError::UnterminatedComment(comment_open_line));
    }
    slides.push(current.finish());

    // Drop the implicit preamble slide when it carries no script.
    if slides.len() > 1 && slides[0].heading.is_empty() && slides[0].script.is_empty() {
        slides.remove(0);
    }
    Ok(slides)
}
