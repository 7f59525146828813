//! Core value types shared by every stage of the pipeline: decks, slides,
//! pronunciation lexicons, and the per-slide timing manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tts::VoiceSpec;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("deck has no slides")]
    EmptyDeck,
    #[error("slide {index}: image not found or unreadable: {path}")]
    MissingImage { index: usize, path: PathBuf },
    #[error("slide {0}: script is empty after normalization")]
    EmptyScript(usize),
    #[error("slide at position {position} has index {index}; expected {position}")]
    BadSlideIndex { position: usize, index: usize },
    #[error("lexicon display form {0:?} appears more than once")]
    DuplicateLexiconEntry(String),
    #[error("lexicon entry has an empty display form")]
    EmptyLexiconDisplay,
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed deck manifest: {0}")]
    BadManifest(String),
    #[error("malformed lexicon file: {0}")]
    BadLexicon(String),
    #[error("timing manifest invalid: {0}")]
    BadTimings(String),
}

/// Collapse every run of whitespace to a single space and trim the ends.
///
/// This is applied to every script before synthesis and before subtitle
/// generation so the spoken and displayed views agree token for token.
pub fn normalize_script(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One slide: a raster image plus the narration attached to it.
///
/// `script_display` is what subtitles show; `script_spoken` is what goes to
/// the synthesizer (it starts equal to the display text and is replaced by
/// the lexicon-applied form during a run).
#[derive(Debug, Clone, PartialEq)]
pub struct Slide {
    pub index: usize,
    pub image_path: PathBuf,
    pub script_display: String,
    pub script_spoken: String,
}

impl Slide {
    pub fn new(index: usize, image_path: impl Into<PathBuf>, script: &str) -> Self {
        let display = normalize_script(script);
        Slide {
            index,
            image_path: image_path.into(),
            script_spoken: display.clone(),
            script_display: display,
        }
    }
}

/// An ordered deck of slides with a title and a default voice.
#[derive(Debug, Clone, PartialEq)]
pub struct Deck {
    pub slides: Vec<Slide>,
    pub title: String,
    pub default_voice: VoiceSpec,
}

/// A deck that has passed [`validate_deck`]. Pipeline operations accept only
/// this form.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDeck(Deck);

impl ValidatedDeck {
    pub fn deck(&self) -> &Deck {
        &self.0
    }

    pub fn into_deck(self) -> Deck {
        self.0
    }
}

impl std::ops::Deref for ValidatedDeck {
    type Target = Deck;

    fn deref(&self) -> &Deck {
        &self.0
    }
}

/// Check every slide and deck invariant and return the deck unchanged.
///
/// Errors name the offending slide: a missing image file, a script that is
/// empty after normalization, or an empty deck.
pub fn validate_deck(deck: Deck) -> Result<ValidatedDeck, ModelError> {
    if deck.slides.is_empty() {
        return Err(ModelError::EmptyDeck);
    }
    for (position, slide) in deck.slides.iter().enumerate() {
        if slide.index != position {
            return Err(ModelError::BadSlideIndex {
                position,
                index: slide.index,
            });
        }
        if !slide.image_path.is_file() {
            return Err(ModelError::MissingImage {
                index: slide.index,
                path: slide.image_path.clone(),
            });
        }
        if normalize_script(&slide.script_display).is_empty() {
            return Err(ModelError::EmptyScript(slide.index));
        }
        if normalize_script(&slide.script_spoken).is_empty() {
            return Err(ModelError::EmptyScript(slide.index));
        }
    }
    Ok(ValidatedDeck(deck))
}

/// One pronunciation substitution: the spelling shown on screen and the
/// spelling sent to the synthesizer (e.g. "ggplot2" spoken as "g g plot 2").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub display: String,
    pub spoken: String,
}

/// Ordered list of display-form to spoken-form substitutions.
///
/// Display forms are unique and non-empty; matching is longest-first,
/// whole-token, case-sensitive (see [`crate::tts::apply_lexicon`]).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self, ModelError> {
        let mut seen = std::collections::HashSet::new();
        for entry in &entries {
            if entry.display.is_empty() {
                return Err(ModelError::EmptyLexiconDisplay);
            }
            if !seen.insert(entry.display.clone()) {
                return Err(ModelError::DuplicateLexiconEntry(entry.display.clone()));
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn empty() -> Self {
        Lexicon::default()
    }

    /// Load from a JSON array of `{"display": str, "spoken": str}` objects.
    pub fn from_json_file(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let entries: Vec<LexiconEntry> =
            serde_json::from_str(&text).map_err(|e| ModelError::BadLexicon(e.to_string()))?;
        Lexicon::new(entries)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Timing for one slide inside the final video: where its audio starts, how
/// long it runs (including the trailing pad), and the cache key of the audio
/// that was used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub index: usize,
    pub start: f64,
    pub duration: f64,
    pub cache_key: String,
}

/// Per-slide audio timings for a completed (or planned) render.
///
/// `duration` includes the inter-slide pad, so starts chain exactly:
/// `start[k+1] = start[k] + duration[k]`. Subtitle cues cover only
/// `duration - pad_seconds` of each slide; pauses are never captioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingManifest {
    pub pad_seconds: f64,
    pub slides: Vec<TimingRecord>,
}

impl TimingManifest {
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut expected_start = 0.0f64;
        for (k, rec) in self.slides.iter().enumerate() {
            if rec.duration <= 0.0 {
                return Err(ModelError::BadTimings(format!(
                    "slide {} has non-positive duration {}",
                    rec.index, rec.duration
                )));
            }
            if (rec.start - expected_start).abs() > 1e-9 {
                return Err(ModelError::BadTimings(format!(
                    "slide {} starts at {} but the previous slide ends at {}",
                    rec.index, rec.start, expected_start
                )));
            }
            if k > 0 && rec.start <= self.slides[k - 1].start {
                return Err(ModelError::BadTimings(format!(
                    "starts are not strictly increasing at slide {}",
                    rec.index
                )));
            }
            expected_start = rec.start + rec.duration;
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.slides.iter().map(|r| r.duration).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("timing manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::BadTimings(e.to_string()))
    }
}

#[derive(Debug, Deserialize)]
struct ManifestVoice {
    engine: String,
    voice_id: String,
}

#[derive(Debug, Deserialize)]
struct ManifestSlide {
    image: PathBuf,
    script: String,
}

#[derive(Debug, Deserialize)]
struct ManifestFile {
    #[serde(default)]
    title: String,
    voice: ManifestVoice,
    slides: Vec<ManifestSlide>,
}

/// Load a deck manifest: `{"title", "voice": {"engine", "voice_id"},
/// "slides": [{"image", "script"}]}`. Image paths are resolved relative to
/// the manifest's directory. The result is not yet validated.
pub fn load_deck_manifest(path: &Path) -> Result<Deck, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed: ManifestFile =
        serde_json::from_str(&text).map_err(|e| ModelError::BadManifest(e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let slides = parsed
        .slides
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let image = if s.image.is_absolute() {
                s.image.clone()
            } else {
                base.join(&s.image)
            };
            Slide::new(i, image, &s.script)
        })
        .collect();
    Ok(Deck {
        slides,
        title: parsed.title,
        default_voice: VoiceSpec::new(&parsed.voice.engine, &parsed.voice.voice_id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn touch(dir: &Path, name: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, b"png").unwrap();
        p
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_script("  a\n b\tc "), "a b c");
    }

    #[test]
    fn normalize_empty_is_empty() {
        assert_eq!(normalize_script(""), "");
    }

    #[test]
    fn normalize_leaves_clean_text_alone() {
        let line = "Thank you for watching this video and good luck using Ari!";
        assert_eq!(normalize_script(line), line);
    }

    #[test]
    fn validate_accepts_good_deck_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let deck = Deck {
            slides: vec![
                Slide::new(0, touch(dir.path(), "a.png"), "first"),
                Slide::new(1, touch(dir.path(), "b.png"), "second"),
            ],
            title: "t".into(),
            default_voice: VoiceSpec::new("offline", "OfflineA"),
        };
        let validated = validate_deck(deck.clone()).unwrap();
        assert_eq!(validated.deck(), &deck);
    }

    #[test]
    fn validate_rejects_empty_deck() {
        let deck = Deck {
            slides: vec![],
            title: String::new(),
            default_voice: VoiceSpec::new("offline", "OfflineA"),
        };
        assert!(matches!(validate_deck(deck), Err(ModelError::EmptyDeck)));
    }

    #[test]
    fn validate_rejects_whitespace_script() {
        let dir = tempfile::tempdir().unwrap();
        let deck = Deck {
            slides: vec![
                Slide::new(0, touch(dir.path(), "a.png"), "ok"),
                Slide::new(1, touch(dir.path(), "b.png"), "   "),
            ],
            title: String::new(),
            default_voice: VoiceSpec::new("offline", "OfflineA"),
        };
        assert!(matches!(
            validate_deck(deck),
            Err(ModelError::EmptyScript(1))
        ));
    }

    #[test]
    fn validate_rejects_missing_image() {
        let dir = tempfile::tempdir().unwrap();
        let deck = Deck {
            slides: vec![Slide::new(0, dir.path().join("nope.png"), "hi")],
            title: String::new(),
            default_voice: VoiceSpec::new("offline", "OfflineA"),
        };
        assert!(matches!(
            validate_deck(deck),
            Err(ModelError::MissingImage { index: 0, .. })
        ));
    }

    #[test]
    fn lexicon_rejects_duplicates_and_empties() {
        let dup = vec![
            LexiconEntry {
                display: "RStudio".into(),
                spoken: "R Studio".into(),
            },
            LexiconEntry {
                display: "RStudio".into(),
                spoken: "r studio".into(),
            },
        ];
        assert!(matches!(
            Lexicon::new(dup),
            Err(ModelError::DuplicateLexiconEntry(_))
        ));
        let empty = vec![LexiconEntry {
            display: String::new(),
            spoken: "x".into(),
        }];
        assert!(matches!(
            Lexicon::new(empty),
            Err(ModelError::EmptyLexiconDisplay)
        ));
    }

    #[test]
    fn timing_manifest_round_trips_and_validates() {
        let manifest = TimingManifest {
            pad_seconds: 0.5,
            slides: vec![
                TimingRecord {
                    index: 0,
                    start: 0.0,
                    duration: 1.5,
                    cache_key: "k0".into(),
                },
                TimingRecord {
                    index: 1,
                    start: 1.5,
                    duration: 2.0,
                    cache_key: "k1".into(),
                },
            ],
        };
        manifest.validate().unwrap();
        let parsed = TimingManifest::from_json(&manifest.to_json()).unwrap();
        assert_eq!(parsed, manifest);
    }

    #[test]
    fn timing_manifest_rejects_gap() {
        let manifest = TimingManifest {
            pad_seconds: 0.0,
            slides: vec![
                TimingRecord {
                    index: 0,
                    start: 0.0,
                    duration: 1.0,
                    cache_key: String::new(),
                },
                TimingRecord {
                    index: 1,
                    start: 1.5,
                    duration: 1.0,
                    cache_key: String::new(),
                },
            ],
        };
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn timing_manifest_rejects_zero_duration() {
        let manifest = TimingManifest {
            pad_seconds: 0.0,
            slides: vec![TimingRecord {
                index: 0,
                start: 0.0,
                duration: 0.0,
                cache_key: String::new(),
            }],
        };
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn manifest_paths_resolve_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "s1.png");
        let manifest = dir.path().join("deck.json");
        fs::write(
            &manifest,
            r#"{"title":"demo","voice":{"engine":"offline","voice_id":"OfflineA"},
               "slides":[{"image":"s1.png","script":"hello there"}]}"#,
        )
        .unwrap();
        let deck = load_deck_manifest(&manifest).unwrap();
        assert_eq!(deck.title, "demo");
        assert_eq!(deck.slides.len(), 1);
        assert_eq!(deck.slides[0].image_path, dir.path().join("s1.png"));
        assert_eq!(deck.slides[0].script_display, "hello there");
        validate_deck(deck).unwrap();
    }

    #[test]
    fn manifest_rejects_bad_json() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("deck.json");
        fs::write(&manifest, "{not json").unwrap();
        assert!(matches!(
            load_deck_manifest(&manifest),
            Err(ModelError::BadManifest(_))
        ));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,80}") {
            let once = normalize_script(&s);
            prop_assert_eq!(normalize_script(&once), once);
        }

        #[test]
        fn normalized_has_no_double_spaces(s in "\\PC{0,80}") {
            let out = normalize_script(&s);
            prop_assert!(!out.contains("  "));
            prop_assert_eq!(out.trim(), &out);
        }
    }
}
