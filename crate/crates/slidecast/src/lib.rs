//! Turn ordered slide images plus per-slide narration scripts into a lecture
//! video with synthesized speech and synchronized SRT subtitles.
//!
//! The crate is organized around a small set of value types ([`model`]), a
//! PCM audio toolkit ([`audio`]), pluggable text-to-speech adapters ([`tts`]),
//! document ingestion for Markdown/PPTX/PDF/Google Slides sources ([`ingest`]),
//! FFmpeg-backed video assembly ([`render`]), SRT generation ([`subtitles`]),
//! and the end-to-end orchestration in [`pipeline`].

pub mod audio;
pub mod config;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod render;
pub mod subtitles;
pub mod tts;

pub use model::{Deck, Lexicon, Slide, TimingManifest};
pub use pipeline::RunOptions;
pub use render::{RenderPreset, RenderResult};
pub use tts::VoiceSpec;
