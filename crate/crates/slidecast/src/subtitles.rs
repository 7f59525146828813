//! SRT subtitle generation and parsing. Cue spans within a slide are
//! allocated proportionally to caption length, so longer captions stay on
//! screen longer.

use thiserror::Error;

use crate::model::normalize_script;

#[derive(Debug, Error)]
pub enum SubtitleError {
    #[error("cannot allocate cues for zero captions")]
    EmptyCaptions,
    #[error("invalid cue: {0}")]
    InvalidCue(String),
    #[error("malformed SRT block {0}: {1}")]
    MalformedBlock(usize, String),
}

/// One timed caption: 1-based index, millisecond bounds, one or two lines of
/// display text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtitleCue {
    pub index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

/// Default caption line limit, a common broadcast guideline.
pub const DEFAULT_LINE_CHARS: usize = 42;

/// Split normalized text into captions of at most `max_line_chars`
/// characters at word boundaries. A single word longer than the limit
/// becomes its own over-length caption. Joining the result with spaces
/// reproduces the normalized input.
pub fn split_captions(text: &str, max_line_chars: usize) -> Vec<String> {
    assert!(max_line_chars >= 8, "caption line limit must be at least 8");
    let normalized = normalize_script(text);
    let mut captions = Vec::new();
    let mut current = String::new();
    let mut current_chars = 0usize;
    for word in normalized.split(' ').filter(|w| !w.is_empty()) {
        let word_chars = word.chars().count();
        if current.is_empty() {
            current.push_str(word);
            current_chars = word_chars;
        } else if current_chars + 1 + word_chars <= max_line_chars {
            current.push(' ');
            current.push_str(word);
            current_chars += 1 + word_chars;
        } else {
            captions.push(std::mem::take(&mut current));
            current.push_str(word);
            current_chars = word_chars;
        }
        if current_chars > max_line_chars {
            // single over-length word: emit as its own caption
            captions.push(std::mem::take(&mut current));
            current_chars = 0;
        }
    }
    if !current.is_empty() {
        captions.push(current);
    }
    captions
}

/// Divide `slide_duration` among the slide's captions proportionally to
/// their character counts. Boundaries accumulate from `slide_start` and are
/// rounded to milliseconds; the final cue ends exactly at
/// `slide_start + slide_duration`. Returned indices count from 1.
pub fn allocate_cues(
    captions: &[String],
    slide_start: f64,
    slide_duration: f64,
) -> Result<Vec<SubtitleCue>, SubtitleError> {
    if captions.is_empty() {
        return Err(SubtitleError::EmptyCaptions);
    }
    if slide_duration <= 0.0 {
        return Err(SubtitleError::InvalidCue(format!(
            "slide duration must be positive, got {slide_duration}"
        )));
    }
    let counts: Vec<usize> = captions.iter().map(|c| c.chars().count()).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(SubtitleError::EmptyCaptions);
    }

    let final_end_ms = ((slide_start + slide_duration) * 1000.0).round() as u64;
    let mut cues = Vec::with_capacity(captions.len());
    let mut cursor = slide_start;
    let mut prev_end_ms = (slide_start * 1000.0).round() as u64;
    for (i, caption) in captions.iter().enumerate() {
        let start_ms = prev_end_ms;
        let end_ms = if i + 1 == captions.len() {
            final_end_ms
        } else {
            cursor += slide_duration * counts[i] as f64 / total as f64;
            ((cursor * 1000.0).round() as u64).max(start_ms + 1)
        };
        if end_ms <= start_ms {
            return Err(SubtitleError::InvalidCue(format!(
                "caption {} would be allotted zero time",
                i + 1
            )));
        }
        cues.push(SubtitleCue {
            index: i + 1,
            start_ms,
            end_ms,
            text: caption.clone(),
        });
        prev_end_ms = end_ms;
    }
    Ok(cues)
}

/// Rewrite indices to run 1..n in order, for assembling per-slide
/// allocations into one track.
pub fn renumber_cues(cues: &mut [SubtitleCue]) {
    for (i, cue) in cues.iter_mut().enumerate() {
        cue.index = i + 1;
    }
}

fn format_timestamp(ms: u64) -> String {
    let hours = ms / 3_600_000;
    let minutes = (ms % 3_600_000) / 60_000;
    let seconds = (ms % 60_000) / 1000;
    let millis = ms % 1000;
    format!("{hours:02}:{minutes:02}:{seconds:02},{millis:03}")
}

fn check_track(cues: &[SubtitleCue]) -> Result<(), SubtitleError> {
    for (i, cue) in cues.iter().enumerate() {
        if cue.index != i + 1 {
            return Err(SubtitleError::InvalidCue(format!(
                "cue {} has index {}, expected {}",
                i + 1,
                cue.index,
                i + 1
            )));
        }
        if cue.start_ms >= cue.end_ms {
            return Err(SubtitleError::InvalidCue(format!(
                "cue {} starts at or after its end",
                cue.index
            )));
        }
        if i > 0 && cue.start_ms < cues[i - 1].end_ms {
            return Err(SubtitleError::InvalidCue(format!(
                "cue {} overlaps cue {}",
                cue.index,
                cues[i - 1].index
            )));
        }
        if cue.text.is_empty() || cue.text.lines().any(|l| l.trim().is_empty()) {
            return Err(SubtitleError::InvalidCue(format!(
                "cue {} has empty text",
                cue.index
            )));
        }
    }
    Ok(())
}

/// Render cues as SRT: index line, `HH:MM:SS,mmm --> HH:MM:SS,mmm`, text,
/// blank line. LF newlines, trailing newline included.
pub fn format_srt(cues: &[SubtitleCue]) -> Result<String, SubtitleError> {
    check_track(cues)?;
    let mut out = String::new();
    for cue in cues {
        out.push_str(&cue.index.to_string());
        out.push('\n');
        out.push_str(&format_timestamp(cue.start_ms));
        out.push_str(" --> ");
        out.push_str(&format_timestamp(cue.end_ms));
        out.push('\n');
        out.push_str(&cue.text);
        out.push('\n');
        out.push('\n');
    }
    Ok(out)
}

fn parse_timestamp(s: &str) -> Option<u64> {
    let (hm, ms_part) = s.rsplit_once(',')?;
    let millis: u64 = ms_part.trim().parse().ok()?;
    if ms_part.trim().len() != 3 || millis > 999 {
        return None;
    }
    let mut fields = hm.split(':');
    let hours: u64 = fields.next()?.trim().parse().ok()?;
    let minutes: u64 = fields.next()?.trim().parse().ok()?;
    let seconds: u64 = fields.next()?.trim().parse().ok()?;
    if fields.next().is_some() || minutes > 59 || seconds > 59 {
        return None;
    }
    Some(((hours * 60 + minutes) * 60 + seconds) * 1000 + millis)
}

/// Parse SRT text into cues. Tolerates CRLF line endings and a leading BOM.
pub fn parse_srt(text: &str) -> Result<Vec<SubtitleCue>, SubtitleError> {
    let cleaned = text.trim_start_matches('\u{feff}').replace("\r\n", "\n");
    let mut cues = Vec::new();
    let mut block_no = 0usize;
    for block in cleaned.split("\n\n") {
        let block = block.trim_matches('\n');
        if block.is_empty() {
            continue;
        }
        block_no += 1;
        let mut lines = block.lines();
        let index_line = lines.next().unwrap_or_default().trim();
        let index: usize = index_line.parse().map_err(|_| {
            SubtitleError::MalformedBlock(block_no, format!("bad index line {index_line:?}"))
        })?;
        let time_line = lines
            .next()
            .ok_or_else(|| SubtitleError::MalformedBlock(block_no, "missing time line".into()))?;
        let (start_raw, end_raw) = time_line.split_once("-->").ok_or_else(|| {
            SubtitleError::MalformedBlock(block_no, format!("bad time line {time_line:?}"))
        })?;
        let start_ms = parse_timestamp(start_raw.trim()).ok_or_else(|| {
            SubtitleError::MalformedBlock(block_no, format!("bad timestamp {start_raw:?}"))
        })?;
        let end_ms = parse_timestamp(end_raw.trim()).ok_or_else(|| {
            SubtitleError::MalformedBlock(block_no, format!("bad timestamp {end_raw:?}"))
        })?;
        let text_lines: Vec<&str> = lines.collect();
        if text_lines.is_empty() {
            return Err(SubtitleError::MalformedBlock(
                block_no,
                "missing cue text".into(),
            ));
        }
        cues.push(SubtitleCue {
            index,
            start_ms,
            end_ms,
            text: text_lines.join("\n"),
        });
    }
    Ok(cues)
}
