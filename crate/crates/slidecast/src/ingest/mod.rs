//! Turn external document formats (Markdown slide sources, PPTX, PDF, Google
//! Slides) into validated decks of images plus narration scripts.

mod gslides;
mod markdown;
mod pdf;
mod pptx;

pub use gslides::{gs_to_deck, gslides_export, GsFormat, GOOGLE_DOCS_BASE};
pub use markdown::parse_markdown_deck;
pub use pdf::{pdf_to_pngs, pptx_to_deck, pptx_to_pdf, IngestTools, DEFAULT_DPI};
pub use pptx::pptx_notes;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unterminated HTML comment opened on line {0}")]
    UnterminatedComment(usize),
    #[error("not a UTF-8 text file: {0}")]
    NotText(PathBuf),
    #[error("not a ZIP archive: {0}")]
    NotZip(PathBuf),
    #[error("missing or malformed OOXML part {0}")]
    MalformedOoxml(String),
    #[error("converter executable {0:?} not found")]
    ConverterMissing(String),
    #[error("converter exited with status {code}: {stderr}")]
    ConverterFailed { code: i32, stderr: String },
    #[error("rasterizer executable {0:?} not found")]
    RasterizerMissing(String),
    #[error("rasterizer failed: {0}")]
    RasterizerFailed(String),
    #[error("dpi {0} is below the minimum of 36")]
    InvalidDpi(u32),
    #[error("{images} slide images but {scripts} scripts (counts must match)")]
    CountMismatch { images: usize, scripts: usize },
    #[error("document sharing is disabled or the export requires sign-in")]
    SharingDisabled,
    #[error("document not found")]
    NotFound,
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A slide extracted from a document source: its heading, the narration
/// script pulled from comments or speaker notes, and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedSlide {
    pub heading: String,
    pub script: String,
    pub source_locator: String,
}
