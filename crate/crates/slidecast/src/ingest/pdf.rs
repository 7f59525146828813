//! External-tool orchestration: PPTX to PDF via a LibreOffice-style
//! converter, PDF to ordered PNG pages via a pdftoppm-style rasterizer, and
//! the composed PPTX-to-deck front door.

use std::path::{Path, PathBuf};
use std::process::Command;

use super::{pptx_notes, IngestError};
use crate::model::{validate_deck, Deck, Slide, ValidatedDeck};
use crate::tts::VoiceSpec;

/// Raster resolution used when none is specified.
pub const DEFAULT_DPI: u32 = 300;

/// Commands for the two external document tools. Each names an executable
/// honoring the default contract (`soffice --headless --convert-to pdf
/// --outdir <dir> <pptx>` and `pdftoppm -png -r <dpi> <pdf> <root>`).
#[derive(Debug, Clone)]
pub struct IngestTools {
    pub converter: String,
    pub rasterizer: String,
}

impl Default for IngestTools {
    fn default() -> Self {
        IngestTools {
            converter: "soffice".to_string(),
            rasterizer: "pdftoppm".to_string(),
        }
    }
}

/// Convert a PPTX to PDF with the configured converter and return the PDF
/// path inside `outdir`.
pub fn pptx_to_pdf(
    pptx_path: &Path,
    converter_cmd: &str,
    outdir: &Path,
) -> Result<PathBuf, IngestError> {
    let output = Command::new(converter_cmd)
        .args(["--headless", "--convert-to", "pdf", "--outdir"])
        .arg(outdir)
        .arg(pptx_path)
        .output()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                IngestError::ConverterMissing(converter_cmd.to_string())
            } else {
                IngestError::Io {
                    path: PathBuf::from(converter_cmd),
                    source: e,
                }
            }
        })?;
    let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
    if !output.status.success() {
        return Err(IngestError::ConverterFailed {
            code: output.status.code().unwrap_or(-1),
            stderr,
        });
    }
    let stem = pptx_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let pdf = outdir.join(format!("{stem}.pdf"));
    if !pdf.is_file() {
        return Err(IngestError::ConverterFailed {
            code: 0,
            stderr: format!(
                "converter exited cleanly but produced no {} (stderr: {stderr})",
                pdf.display()
            ),
        });
    }
    Ok(pdf)
}

/// Rasterize each PDF page to PNG at the given DPI. Pages come back in
/// order, renamed to `page-NNNN.png` inside `workdir`.
pub fn pdf_to_pngs(
    pdf_path: &Path,
    dpi: u32,
    rasterizer_cmd: &str,
    workdir: &Path,
) -> Result<Vec<PathBuf>, IngestError> {
    if dpi < 36 {
        return Err(IngestError::InvalidDpi(dpi));
    }
    let root = workdir.join("page");
    let output = Command::new(rasterizer_cmd)
        .args(["-png", "-r", &dpi.to_string()])
        .arg(pdf_path)
        .arg(&root)
        .output()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                IngestError::RasterizerMissing(rasterizer_cmd.to_string())
            } else {
                IngestError::Io {
                    path: PathBuf::from(rasterizer_cmd),
                    source: e,
                }
            }
        })?;
    if !output.status.success() {
        return Err(IngestError::RasterizerFailed(format!(
            "exit {}: {}",
            output.status.code().unwrap_or(-1),
            String::from_utf8_lossy(&output.stderr)
        )));
    }

    // The rasterizer numbers pages with varying zero-padding; collect by
    // numeric suffix and rename into a stable scheme.
    let mut numbered: Vec<(u32, PathBuf)> = Vec::new();
    let entries = std::fs::read_dir(workdir).map_err(|source| IngestError::Io {
        path: workdir.to_path_buf(),
        source,
    })?;
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_prefix("page-").and_then(|n| n.strip_suffix(".png")) {
            if let Ok(number) = stem.parse::<u32>() {
                numbered.push((number, entry.path()));
            }
        }
    }
    if numbered.is_empty() {
        return Err(IngestError::RasterizerFailed(
            "rasterizer produced no pages".to_string(),
        ));
    }
    numbered.sort_by_key(|(n, _)| *n);

    let mut pages = Vec::with_capacity(numbered.len());
    for (position, (_, old_path)) in numbered.into_iter().enumerate() {
        let new_path = workdir.join(format!("page-{:04}.png", position + 1));
        if old_path != new_path {
            std::fs::rename(&old_path, &new_path).map_err(|source| IngestError::Io {
                path: old_path.clone(),
                source,
            })?;
        }
        pages.push(new_path);
    }
    Ok(pages)
}

/// Full PPTX front door: convert to PDF, rasterize pages, read speaker
/// notes, and pair them into a validated deck. Image and script counts must
/// match.
pub fn pptx_to_deck(
    pptx_path: &Path,
    dpi: u32,
    voice: VoiceSpec,
    tools: &IngestTools,
    workdir: &Path,
) -> Result<ValidatedDeck, IngestError> {
    let scripts = pptx_notes(pptx_path)?;
    let pdf = pptx_to_pdf(pptx_path, &tools.converter, workdir)?;
    let images = pdf_to_pngs(&pdf, dpi, &tools.rasterizer, workdir)?;
    build_deck(images, scripts, title_from(pptx_path), voice)
}

pub(super) fn title_from(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub(super) fn build_deck(
    images: Vec<PathBuf>,
    scripts: Vec<String>,
    title: String,
    voice: VoiceSpec,
) -> Result<ValidatedDeck, IngestError> {
    if images.len() != scripts.len() {
        return Err(IngestError::CountMismatch {
            images: images.len(),
            scripts: scripts.len(),
        });
    }
    let slides = images
        .into_iter()
        .zip(&scripts)
        .enumerate()
        .map(|(i, (image, script))| Slide::new(i, image, script))
        .collect();
    Ok(validate_deck(Deck {
        slides,
        title,
        default_voice: voice,
    })?)
}
