//! Google Slides export download: public decks are fetched as PDF (for page
//! images) and PPTX (for speaker notes) through the share-link export URL.

use std::path::{Path, PathBuf};
use std::time::Duration;

use super::pdf::{build_deck, pdf_to_pngs};
use super::{pptx_notes, IngestError, IngestTools};
use crate::model::ValidatedDeck;
use crate::tts::VoiceSpec;

/// Production export endpoint; overridable so tests can serve fixtures.
pub const GOOGLE_DOCS_BASE: &str = "https://docs.google.com";

const MAX_REDIRECTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsFormat {
    Pdf,
    Pptx,
}

impl GsFormat {
    fn as_str(self) -> &'static str {
        match self {
            GsFormat::Pdf => "pdf",
            GsFormat::Pptx => "pptx",
        }
    }
}

fn looks_like_signin(url: &str) -> bool {
    url.contains("accounts.google") || url.contains("ServiceLogin") || url.contains("signin")
}

fn join_location(current: &str, location: &str) -> String {
    if location.starts_with("http://") || location.starts_with("https://") {
        return location.to_string();
    }
    // relative redirect: resolve against the current origin
    let origin_end = current
        .find("://")
        .map(|p| {
            current[p + 3..]
                .find('/')
                .map(|q| p + 3 + q)
                .unwrap_or(current.len())
        })
        .unwrap_or(current.len());
    format!("{}{}", &current[..origin_end], location)
}

/// Download a slide deck export. Follows redirects manually so that a
/// bounce to a sign-in page is surfaced as [`IngestError::SharingDisabled`]
/// rather than saved as HTML.
pub fn gslides_export(
    doc_id: &str,
    format: GsFormat,
    base_url: &str,
    dest_dir: &Path,
) -> Result<PathBuf, IngestError> {
    let config = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .max_redirects(0)
        .timeout_global(Some(Duration::from_secs(60)))
        .build();
    let agent = ureq::Agent::new_with_config(config);

    let mut url = format!(
        "{}/presentation/d/{doc_id}/export/{}",
        base_url.trim_end_matches('/'),
        format.as_str()
    );
    for _ in 0..=MAX_REDIRECTS {
        let mut response = agent
            .get(&url)
            .call()
            .map_err(|e| IngestError::NetworkFailure(e.to_string()))?;
        let status = response.status().as_u16();

        if (300..400).contains(&status) {
            let location = response
                .headers()
                .get("location")
                .and_then(|v| v.to_str().ok())
                .ok_or_else(|| {
                    IngestError::NetworkFailure(format!("redirect {status} without location"))
                })?;
            if looks_like_signin(location) {
                return Err(IngestError::SharingDisabled);
            }
            url = join_location(&url, location);
            continue;
        }
        if status == 401 || status == 403 {
            return Err(IngestError::SharingDisabled);
        }
        if status == 404 {
            return Err(IngestError::NotFound);
        }
        if !(200..300).contains(&status) {
            return Err(IngestError::NetworkFailure(format!(
                "export returned HTTP {status}"
            )));
        }

        let content_type = response
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_ascii_lowercase();
        if content_type.starts_with("text/html") {
            // a 200 sign-in or interstitial page instead of the export
            return Err(IngestError::SharingDisabled);
        }
        let bytes = response
            .body_mut()
            .read_to_vec()
            .map_err(|e| IngestError::NetworkFailure(e.to_string()))?;
        let dest = dest_dir.join(format!("{doc_id}.{}", format.as_str()));
        std::fs::write(&dest, &bytes).map_err(|source| IngestError::Io {
            path: dest.clone(),
            source,
        })?;
        return Ok(dest);
    }
    Err(IngestError::NetworkFailure(format!(
        "too many redirects fetching {url}"
    )))
}

/// Google Slides front door: the PDF export supplies page images (no
/// converter needed) and the PPTX export supplies speaker notes.
pub fn gs_to_deck(
    doc_id: &str,
    dpi: u32,
    voice: VoiceSpec,
    base_url: &str,
    tools: &IngestTools,
    workdir: &Path,
) -> Result<ValidatedDeck, IngestError> {
    let pdf = gslides_export(doc_id, GsFormat::Pdf, base_url, workdir)?;
    let pptx = gslides_export(doc_id, GsFormat::Pptx, base_url, workdir)?;
    let images = pdf_to_pngs(&pdf, dpi, &tools.rasterizer, workdir)?;
    let scripts = pptx_notes(&pptx)?;
    build_deck(images, scripts, doc_id.to_string(), voice)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signin_urls_are_recognized() {
        assert!(looks_like_signin(
            "https://accounts.google.com/ServiceLogin?continue=x"
        ));
        assert!(!looks_like_signin("https://docs.google.com/export/pdf"));
    }

    #[test]
    fn relative_locations_resolve_against_origin() {
        assert_eq!(
            join_location("http://127.0.0.1:4000/a/b", "/c/d"),
            "http://127.0.0.1:4000/c/d"
        );
        assert_eq!(
            join_location("http://h/a", "https://other/x"),
            "https://other/x"
        );
    }
}
