//! Speaker-notes extraction from PPTX (OOXML) archives: slide order comes
//! from the presentation part, notes are resolved through relationship
//! files, with a numeric-suffix fallback when relationships are absent.

use std::io::Read;
use std::path::Path;

use super::IngestError;
use crate::model::normalize_script;

const REL_NS: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const NOTES_REL_TYPE_SUFFIX: &str = "/notesSlide";

struct Archive {
    zip: zip::ZipArchive<std::fs::File>,
}

impl Archive {
    fn open(path: &Path) -> Result<Self, IngestError> {
        let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let zip = zip::ZipArchive::new(file)
            .map_err(|_| IngestError::NotZip(path.to_path_buf()))?;
        Ok(Archive { zip })
    }

    fn read_part(&mut self, name: &str) -> Result<String, IngestError> {
        let mut entry = self
            .zip
            .by_name(name)
            .map_err(|_| IngestError::MalformedOoxml(name.to_string()))?;
        let mut text = String::new();
        entry
            .read_to_string(&mut text)
            .map_err(|_| IngestError::MalformedOoxml(name.to_string()))?;
        Ok(text)
    }

    fn has_part(&mut self, name: &str) -> bool {
        self.zip.by_name(name).is_ok()
    }
}

fn parse_doc<'a>(xml: &'a str, part: &str) -> Result<roxmltree::Document<'a>, IngestError> {
    roxmltree::Document::parse(xml).map_err(|_| IngestError::MalformedOoxml(part.to_string()))
}

/// Resolve a relationship target against the directory of its source part
/// ("../notesSlides/x.xml" relative to "ppt/slides" becomes
/// "ppt/notesSlides/x.xml").
fn resolve_target(base_dir: &str, target: &str) -> String {
    let mut parts: Vec<&str> = base_dir.split('/').filter(|p| !p.is_empty()).collect();
    for seg in target.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            other => parts.push(other),
        }
    }
    parts.join("/")
}

fn relationships(xml: &str, part: &str) -> Result<Vec<(String, String, String)>, IngestError> {
    let doc = parse_doc(xml, part)?;
    Ok(doc
        .descendants()
        .filter(|n| n.tag_name().name() == "Relationship")
        .filter_map(|n| {
            Some((
                n.attribute("Id")?.to_string(),
                n.attribute("Type").unwrap_or("").to_string(),
                n.attribute("Target")?.to_string(),
            ))
        })
        .collect())
}

/// Slide part names in presentation order, resolved from the slide-id list
/// through the presentation relationships.
fn ordered_slide_parts(archive: &mut Archive) -> Result<Vec<String>, IngestError> {
    let presentation = archive.read_part("ppt/presentation.xml")?;
    let doc = parse_doc(&presentation, "ppt/presentation.xml")?;
    let rel_ids: Vec<String> = doc
        .descendants()
        .filter(|n| n.tag_name().name() == "sldId")
        .filter_map(|n| n.attribute((REL_NS, "id")).map(str::to_string))
        .collect();
    if rel_ids.is_empty() {
        return Err(IngestError::MalformedOoxml(
            "ppt/presentation.xml (no slide-id list)".to_string(),
        ));
    }

    let rels_xml = archive.read_part("ppt/_rels/presentation.xml.rels")?;
    let rels = relationships(&rels_xml, "ppt/_rels/presentation.xml.rels")?;
    rel_ids
        .iter()
        .map(|rid| {
            rels.iter()
                .find(|(id, _, _)| id == rid)
                .map(|(_, _, target)| resolve_target("ppt", target))
                .ok_or_else(|| {
                    IngestError::MalformedOoxml(format!(
                        "ppt/_rels/presentation.xml.rels (unresolved {rid})"
                    ))
                })
        })
        .collect()
}

/// The notes part for a slide part, via its relationships when present,
/// falling back to the numeric suffix convention.
fn notes_part_for(archive: &mut Archive, slide_part: &str) -> Result<Option<String>, IngestError> {
    let (dir, file) = slide_part
        .rsplit_once('/')
        .unwrap_or(("", slide_part));
    let rels_name = format!("{dir}/_rels/{file}.rels");
    if archive.has_part(&rels_name) {
        let xml = archive.read_part(&rels_name)?;
        let rels = relationships(&xml, &rels_name)?;
        return Ok(rels
            .iter()
            .find(|(_, rel_type, _)| rel_type.ends_with(NOTES_REL_TYPE_SUFFIX))
            .map(|(_, _, target)| resolve_target(dir, target)));
    }
    // No relationship part: fall back to matching numeric suffixes.
    let digits: String = file.chars().filter(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return Ok(None);
    }
    let candidate = format!("ppt/notesSlides/notesSlide{digits}.xml");
    if archive.has_part(&candidate) {
        log::warn!(
            "{slide_part} has no relationship part; using numeric-suffix fallback {candidate}"
        );
        Ok(Some(candidate))
    } else {
        Ok(None)
    }
}

/// All text runs inside body-placeholder shapes, paragraphs joined with
/// single spaces, normalized.
fn notes_text(xml: &str, part: &str) -> Result<String, IngestError> {
    let doc = parse_doc(xml, part)?;
    let mut paragraphs: Vec<String> = Vec::new();
    for shape in doc.descendants().filter(|n| n.tag_name().name() == "sp") {
        // Untyped placeholders default to body. Typed non-body shapes
        // (sldNum, hdr, ftr, dt, sldImg) would pollute narration.
        let placeholder_type = shape
            .descendants()
            .find(|n| n.tag_name().name() == "ph")
            .and_then(|ph| ph.attribute("type"))
            .unwrap_or("body");
        if placeholder_type != "body" {
            continue;
        }
        for paragraph in shape.descendants().filter(|n| n.tag_name().name() == "p") {
            let text: String = paragraph
                .descendants()
                .filter(|n| n.tag_name().name() == "t")
                .filter_map(|n| n.text())
                .collect();
            if !text.trim().is_empty() {
                paragraphs.push(text);
            }
        }
    }
    Ok(normalize_script(&paragraphs.join(" ")))
}

/// Extract one script per slide, in presentation order. Slides without a
/// notes part yield an empty string.
pub fn pptx_notes(path: &Path) -> Result<Vec<String>, IngestError> {
    let mut archive = Archive::open(path)?;
    let slide_parts = ordered_slide_parts(&mut archive)?;
    let mut scripts = Vec::with_capacity(slide_parts.len());
    for slide_part in &slide_parts {
        match notes_part_for(&mut archive, slide_part)? {
            Some(notes_part) => {
                let xml = archive.read_part(&notes_part)?;
                scripts.push(notes_text(&xml, &notes_part)?);
            }
            None => scripts.push(String::new()),
        }
    }
    Ok(scripts)
}
