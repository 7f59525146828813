//! Pluggable text-to-speech: a provider-agnostic synthesizer contract, text
//! chunking for request size limits, pronunciation lexicon application, and
//! the adapters (deterministic offline tone generator, Polly-compatible
//! cloud client).

mod offline;
mod polly;

pub use offline::{synthesize_offline, OfflineSynthesizer};
pub use polly::{PollyCredentials, PollySynthesizer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, AudioError, WaveAudio, STANDARD_CHANNELS, STANDARD_SAMPLE_RATE};
use crate::model::Lexicon;

#[derive(Debug, Error)]
pub enum TtsError {
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("provider returned {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("no synthesizer registered under {0:?}")]
    UnknownEngine(String),
    #[error("cannot synthesize empty text")]
    EmptyText,
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Identifies a synthesizer engine and one of its voices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoiceSpec {
    pub engine: String,
    pub voice_id: String,
    #[serde(default)]
    pub language_tag: String,
    #[serde(default)]
    pub gender_label: String,
}

impl VoiceSpec {
    pub fn new(engine: &str, voice_id: &str) -> Self {
        VoiceSpec {
            engine: engine.to_string(),
            voice_id: voice_id.to_string(),
            language_tag: String::new(),
            gender_label: String::new(),
        }
    }

    pub fn with_attrs(mut self, language_tag: &str, gender_label: &str) -> Self {
        self.language_tag = language_tag.to_string();
        self.gender_label = gender_label.to_string();
        self
    }
}

/// A single synthesis request: normalized spoken-form text plus the voice
/// and output rate to ask the engine for.
#[derive(Debug, Clone)]
pub struct SynthRequest {
    pub text: String,
    pub voice: VoiceSpec,
    pub output_rate: u32,
}

impl SynthRequest {
    pub fn new(text: &str, voice: VoiceSpec) -> Self {
        SynthRequest {
            text: text.to_string(),
            voice,
            output_rate: STANDARD_SAMPLE_RATE,
        }
    }
}

/// Result of an authentication probe: whether a minimal authenticated call
/// succeeded, and a human-readable diagnostic either way.
#[derive(Debug, Clone)]
pub struct AuthCheck {
    pub ok: bool,
    pub diagnostic: String,
}

/// The synthesizer contract every adapter implements.
///
/// `synth_chunk` must return audio already in the internal standard format
/// (22050 Hz mono 16-bit); adapters receiving other formats from their
/// provider normalize before returning.
pub trait Synthesizer: Send + Sync {
    fn name(&self) -> &'static str;
    fn max_chars(&self) -> usize;
    fn check_auth(&self) -> AuthCheck;
    fn list_voices(&self) -> Result<Vec<VoiceSpec>, TtsError>;
    fn synth_chunk(&self, text: &str, voice: &VoiceSpec, output_rate: u32)
        -> Result<WaveAudio, TtsError>;
}

/// Replace whole-token occurrences of each lexicon display form with its
/// spoken form, longest display form first. Matching is case-sensitive; a
/// trailing punctuation run (`.,;:!?`) on the final token of a match is
/// preserved after the substitution. Expects normalized input.
pub fn apply_lexicon(text: &str, lexicon: &Lexicon) -> String {
    if lexicon.is_empty() || text.is_empty() {
        return text.to_string();
    }
    let mut entries: Vec<(&str, Vec<&str>)> = lexicon
        .entries()
        .iter()
        .map(|e| (e.spoken.as_str(), e.display.split(' ').collect()))
        .collect();
    entries.sort_by(|a, b| {
        b.1.len()
            .cmp(&a.1.len())
            .then(b.1.iter().map(|t| t.len()).sum::<usize>().cmp(
                &a.1.iter().map(|t| t.len()).sum::<usize>(),
            ))
    });

    let tokens: Vec<&str> = text.split(' ').collect();
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    'scan: while i < tokens.len() {
        for (spoken, display_tokens) in &entries {
            let k = display_tokens.len();
            if i + k > tokens.len() {
                continue;
            }
            let interior_match = tokens[i..i + k - 1]
                .iter()
                .zip(display_tokens[..k - 1].iter())
                .all(|(a, b)| a == b);
            if !interior_match {
                continue;
            }
            let last = tokens[i + k - 1];
            let suffix = if last == display_tokens[k - 1] {
                Some("")
            } else {
                let core = last.trim_end_matches(['.', ',', ';', ':', '!', '?']);
                (core == display_tokens[k - 1]).then(|| &last[core.len()..])
            };
            if let Some(suffix) = suffix {
                out.push(format!("{spoken}{suffix}"));
                i += k;
                continue 'scan;
            }
        }
        out.push(tokens[i].to_string());
        i += 1;
    }
    out.join(" ")
}

/// Chunks plus warnings about tokens that could not be kept under the limit.
#[derive(Debug, Clone, Default)]
pub struct Chunked {
    pub chunks: Vec<String>,
    pub warnings: Vec<String>,
}

fn split_sentences(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i + 1 < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') && bytes[i + 1] == b' ' {
            sentences.push(&text[start..=i]);
            start = i + 2;
            i += 2;
        } else {
            i += 1;
        }
    }
    if start < text.len() {
        sentences.push(&text[start..]);
    }
    sentences
}

/// Split normalized text into chunks of at most `max_chars` characters,
/// preferring sentence boundaries, then word boundaries. A single word over
/// the limit is emitted whole as its own chunk with a warning attached.
/// Joining chunks with single spaces reproduces the normalized input.
pub fn chunk_text(text: &str, max_chars: usize) -> Chunked {
    assert!(max_chars >= 1, "max_chars must be at least 1");
    let normalized = crate::model::normalize_script(text);
    let mut result = Chunked::default();
    if normalized.is_empty() {
        return result;
    }

    let mut current = String::new();
    let flush = |current: &mut String, chunks: &mut Vec<String>| {
        if !current.is_empty() {
            chunks.push(std::mem::take(current));
        }
    };

    for sentence in split_sentences(&normalized) {
        let sentence_chars = sentence.chars().count();
        if sentence_chars <= max_chars {
            let current_chars = current.chars().count();
            if current.is_empty() {
                current.push_str(sentence);
            } else if current_chars + 1 + sentence_chars <= max_chars {
                current.push(' ');
                current.push_str(sentence);
            } else {
                flush(&mut current, &mut result.chunks);
                current.push_str(sentence);
            }
            continue;
        }
        // sentence too long: fall back to word boundaries within it
        flush(&mut current, &mut result.chunks);
        for word in sentence.split(' ') {
            let word_chars = word.chars().count();
            if word_chars > max_chars {
                flush(&mut current, &mut result.chunks);
                result.warnings.push(format!(
                    "token of {word_chars} chars exceeds the {max_chars}-char limit and was sent unsplit"
                ));
                result.chunks.push(word.to_string());
                continue;
            }
            let current_chars = current.chars().count();
            if current.is_empty() {
                current.push_str(word);
            } else if current_chars + 1 + word_chars <= max_chars {
                current.push(' ');
                current.push_str(word);
            } else {
                flush(&mut current, &mut result.chunks);
                current.push_str(word);
            }
        }
        flush(&mut current, &mut result.chunks);
    }
    if !current.is_empty() {
        result.chunks.push(current);
    }
    result
}

/// Synthesize a full request: chunk the text, synthesize each chunk through
/// the engine, and concatenate the standard-format results with no padding.
/// Deterministic for the offline engine.
pub fn synthesize(request: &SynthRequest, engine: &dyn Synthesizer) -> Result<WaveAudio, TtsError> {
    let chunked = chunk_text(&request.text, engine.max_chars());
    if chunked.chunks.is_empty() {
        return Err(TtsError::EmptyText);
    }
    for warning in &chunked.warnings {
        log::warn!("{}: {warning}", engine.name());
    }
    let mut segments = Vec::with_capacity(chunked.chunks.len());
    for chunk in &chunked.chunks {
        let audio = engine.synth_chunk(chunk, &request.voice, request.output_rate)?;
        if !audio.is_standard() {
            return Err(TtsError::Audio(AudioError::MixedFormats {
                expected_rate: STANDARD_SAMPLE_RATE,
                expected_channels: STANDARD_CHANNELS,
                found_rate: audio.sample_rate,
                found_channels: audio.channels,
            }));
        }
        segments.push(audio);
    }
    Ok(audio::concat_audio(&segments, 0.0)?)
}

/// Probe whether the engine can make authenticated calls.
pub fn check_auth(engine: &dyn Synthesizer) -> AuthCheck {
    engine.check_auth()
}

/// The engine's voice inventory.
pub fn list_voices(engine: &dyn Synthesizer) -> Result<Vec<VoiceSpec>, TtsError> {
    engine.list_voices()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LexiconEntry;

    fn paper_lexicon() -> Lexicon {
        Lexicon::new(vec![
            LexiconEntry {
                display: "RStudio".into(),
                spoken: "R Studio".into(),
            },
            LexiconEntry {
                display: "ggplot2".into(),
                spoken: "g g plot 2".into(),
            },
        ])
        .unwrap()
    }

    #[test]
    fn lexicon_rewrites_rstudio() {
        assert_eq!(
            apply_lexicon("Open RStudio now", &paper_lexicon()),
            "Open R Studio now"
        );
    }

    #[test]
    fn lexicon_rewrites_ggplot2() {
        assert_eq!(
            apply_lexicon("use ggplot2", &paper_lexicon()),
            "use g g plot 2"
        );
    }

    #[test]
    fn empty_lexicon_is_identity() {
        assert_eq!(
            apply_lexicon("anything at  all", &Lexicon::empty()),
            "anything at  all"
        );
    }

    #[test]
    fn lexicon_never_touches_larger_words() {
        assert_eq!(
            apply_lexicon("ggplot22 is not ggplot2", &paper_lexicon()),
            "ggplot22 is not g g plot 2"
        );
    }

    #[test]
    fn lexicon_is_case_sensitive() {
        assert_eq!(
            apply_lexicon("rstudio stays", &paper_lexicon()),
            "rstudio stays"
        );
    }

    #[test]
    fn lexicon_keeps_trailing_punctuation() {
        assert_eq!(
            apply_lexicon("install ggplot2.", &paper_lexicon()),
            "install g g plot 2."
        );
    }

    #[test]
    fn lexicon_longest_match_wins() {
        let lex = Lexicon::new(vec![
            LexiconEntry {
                display: "R".into(),
                spoken: "are".into(),
            },
            LexiconEntry {
                display: "R Markdown".into(),
                spoken: "R mark down".into(),
            },
        ])
        .unwrap();
        assert_eq!(
            apply_lexicon("R Markdown uses R", &lex),
            "R mark down uses are"
        );
    }

    #[test]
    fn lexicon_idempotent_without_feedback() {
        let lex = paper_lexicon();
        let once = apply_lexicon("Open RStudio and use ggplot2", &lex);
        assert_eq!(apply_lexicon(&once, &lex), once);
    }

    #[test]
    fn short_text_is_one_chunk() {
        let out = chunk_text("short text", 1500);
        assert_eq!(out.chunks, vec!["short text".to_string()]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn chunks_split_at_sentence_ends() {
        let out = chunk_text("A b. C d.", 5);
        assert_eq!(out.chunks, vec!["A b.".to_string(), "C d.".to_string()]);
        for c in &out.chunks {
            assert!(c.chars().count() <= 5);
        }
        assert_eq!(out.chunks.join(" "), "A b. C d.");
    }

    #[test]
    fn long_sentence_splits_at_spaces() {
        let sentence = vec!["word"; 400].join(" "); // 1999 chars, one sentence
        let out = chunk_text(&sentence, 1500);
        assert_eq!(out.chunks.len(), 2);
        assert!(out.warnings.is_empty());
        for c in &out.chunks {
            assert!(c.chars().count() <= 1500);
            assert!(!c.starts_with(' ') && !c.ends_with(' '));
        }
        assert_eq!(out.chunks.join(" "), sentence);
    }

    #[test]
    fn oversized_word_is_kept_whole_with_warning() {
        let word = "x".repeat(40);
        let text = format!("small {word} small");
        let out = chunk_text(&text, 10);
        assert!(out.chunks.contains(&word));
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.chunks.join(" "), text);
    }

    #[test]
    fn synthesize_counts_words_across_chunks() {
        let engine = OfflineSynthesizer::new();
        let req = SynthRequest::new("hello world", VoiceSpec::new("offline", "OfflineA"));
        let audio = synthesize(&req, &engine).unwrap();
        assert!((audio.duration() - 0.8).abs() < 1.0 / 22050.0);
    }

    #[test]
    fn synthesize_rejects_empty() {
        let engine = OfflineSynthesizer::new();
        let req = SynthRequest::new("   ", VoiceSpec::new("offline", "OfflineA"));
        assert!(matches!(synthesize(&req, &engine), Err(TtsError::EmptyText)));
    }

    proptest::proptest! {
        #[test]
        fn chunk_rejoin_identity(
            words in proptest::collection::vec("[a-zA-Z.!?]{1,12}", 1..60),
            max in 8usize..60,
        ) {
            let text = words.join(" ");
            let normalized = crate::model::normalize_script(&text);
            let out = chunk_text(&text, max);
            proptest::prop_assert_eq!(
                crate::model::normalize_script(&out.chunks.join(" ")),
                normalized
            );
        }

        #[test]
        fn lexicon_preserves_unmatched_tokens(
            words in proptest::collection::vec("[a-z]{1,10}", 1..30),
        ) {
            let text = words.join(" ");
            let lex = Lexicon::new(vec![LexiconEntry {
                display: "QQQZZZ".into(),
                spoken: "q q q z z z".into(),
            }])
            .unwrap();
            proptest::prop_assert_eq!(apply_lexicon(&text, &lex), text);
        }
    }
}
