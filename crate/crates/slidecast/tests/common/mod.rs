//! Shared test support: deterministic fixture builders (PNG images, PPTX
//! archives, minimal PDFs), stub converter/rasterizer executables honoring
//! the real tools' CLI contracts, and a scripted mock HTTP server.

#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

/// Write a solid-color PNG.
pub fn write_png(path: &Path, width: u32, height: u32, rgb: [u8; 3]) {
    let img = image::RgbImage::from_pixel(width, height, image::Rgb(rgb));
    img.save(path).expect("write png fixture");
}

/// The two speaker-note strings used throughout the fixtures.
pub const NOTE_1: &str = "Sometimes it's hard for an instructor to take the time to record their lectures. For example, I'm in a coffee shop and it may be loud.";
pub const NOTE_2: &str = "Here is an example of a plot with really small axes. We plot the x versus the y-variables and a smoother between them.";

fn notes_slide_xml(text: &str) -> String {
    // Two shapes: a slide-number placeholder (must be ignored) and the body.
    format!(
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<p:notes xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships" xmlns:p="http://schemas.openxmlformats.org/presentationml/2006/main">
  <p:cSld><p:spTree>
    <p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr>
    <p:sp>
      <p:nvSpPr><p:cNvPr id="2" name="Slide Number"/><p:cNvSpPr/><p:nvPr><p:ph type="sldNum" idx="10"/></p:nvPr></p:nvSpPr>
      <p:txBody><a:bodyPr/><a:p><a:r><a:t>99</a:t></a:r></a:p></p:txBody>
    </p:sp>
    <p:sp>
      <p:nvSpPr><p:cNvPr id="3" name="Notes Placeholder"/><p:cNvSpPr/><p:nvPr><p:ph type="body" idx="1"/></p:nvPr></p:nvSpPr>
      <p:txBody><a:bodyPr/><a:p><a:r><a:t>{}</a:t></a:r></a:p></p:txBody>
    </p:sp>
  </p:spTree></p:cSld>
</p:notes>"#,
        xml_escape(text)
    )
}

fn slide_xml() -> &'static str {
    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<p:sld xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships" xmlns:p="http://schemas.openxmlformats.org/presentationml/2006/main">
  <p:cSld><p:spTree>
    <p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr>
  </p:spTree></p:cSld>
</p:sld>"#
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Build a minimal but structurally faithful PPTX: ordered slide-id list,
/// relationship parts, and one notes slide per `Some(text)` entry.
/// `with_slide_rels: false` omits the per-slide relationship parts so the
/// numeric-suffix fallback is exercised.
pub fn build_pptx(path: &Path, notes: &[Option<&str>], with_slide_rels: bool) {
    let file = std::fs::File::create(path).expect("create pptx");
    let mut zip = zip::ZipWriter::new(file);
    let options = zip::write::SimpleFileOptions::default();

    let n = notes.len();

    let mut content_types = String::from(
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
  <Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
  <Default Extension="xml" ContentType="application/xml"/>
  <Override PartName="/ppt/presentation.xml" ContentType="application/vnd.openxmlformats-officedocument.presentationml.presentation.main+xml"/>
"#,
    );
    for i in 1..=n {
        content_types.push_str(&format!(
            r#"  <Override PartName="/ppt/slides/slide{i}.xml" ContentType="application/vnd.openxmlformats-officedocument.presentationml.slide+xml"/>
"#
        ));
        if notes[i - 1].is_some() {
            content_types.push_str(&format!(
                r#"  <Override PartName="/ppt/notesSlides/notesSlide{i}.xml" ContentType="application/vnd.openxmlformats-officedocument.presentationml.notesSlide+xml"/>
"#
            ));
        }
    }
    content_types.push_str("</Types>");
    zip.start_file("[Content_Types].xml", options).unwrap();
    zip.write_all(content_types.as_bytes()).unwrap();

    zip.start_file("_rels/.rels", options).unwrap();
    zip.write_all(br#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
  <Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="ppt/presentation.xml"/>
</Relationships>"#).unwrap();

    // slide ids deliberately appear in reverse rId order to prove ordering
    // comes from the sldIdLst, not from part names
    let sld_ids: String = (1..=n)
        .map(|i| format!(r#"    <p:sldId id="{}" r:id="rId{}"/>"#, 255 + i, i))
        .collect::<Vec<_>>()
        .join("\n");
    let presentation = format!(
        r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<p:presentation xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships" xmlns:p="http://schemas.openxmlformats.org/presentationml/2006/main">
  <p:sldIdLst>
{sld_ids}
  </p:sldIdLst>
  <p:sldSz cx="9144000" cy="6858000"/>
</p:presentation>"#
    );
    zip.start_file("ppt/presentation.xml", options).unwrap();
    zip.write_all(presentation.as_bytes()).unwrap();

    let pres_rels: String = (1..=n)
        .map(|i| {
            format!(
                r#"  <Relationship Id="rId{i}" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide" Target="slides/slide{i}.xml"/>"#
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    zip.start_file("ppt/_rels/presentation.xml.rels", options)
        .unwrap();
    zip.write_all(
        format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
{pres_rels}
</Relationships>"#
        )
        .as_bytes(),
    )
    .unwrap();

    for (i, note) in notes.iter().enumerate() {
        let i = i + 1;
        zip.start_file(format!("ppt/slides/slide{i}.xml"), options)
            .unwrap();
        zip.write_all(slide_xml().as_bytes()).unwrap();

        if with_slide_rels {
            let rels = match note {
                Some(_) => format!(
                    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
  <Relationship Id="rId2" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/notesSlide" Target="../notesSlides/notesSlide{i}.xml"/>
</Relationships>"#
                ),
                None => r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
</Relationships>"#
                    .to_string(),
            };
            zip.start_file(format!("ppt/slides/_rels/slide{i}.xml.rels"), options)
                .unwrap();
            zip.write_all(rels.as_bytes()).unwrap();
        }

        if let Some(text) = note {
            zip.start_file(format!("ppt/notesSlides/notesSlide{i}.xml"), options)
                .unwrap();
            zip.write_all(notes_slide_xml(text).as_bytes()).unwrap();
        }
    }

    zip.finish().unwrap();
}

/// A minimal PDF with the given page count. Offsets are computed so the
/// xref table is valid; the `/Count N` entry is what the stub rasterizer
/// reads.
pub fn minimal_pdf(pages: usize) -> Vec<u8> {
    let mut objects: Vec<String> = Vec::new();
    let kids: String = (0..pages)
        .map(|i| format!("{} 0 R", 3 + i))
        .collect::<Vec<_>>()
        .join(" ");
    objects.push("<< /Type /Catalog /Pages 2 0 R >>".to_string());
    objects.push(format!("<< /Type /Pages /Kids [{kids}] /Count {pages} >>"));
    for _ in 0..pages {
        objects.push("<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] >>".to_string());
    }

    let mut out = String::from("%PDF-1.4\n");
    let mut offsets = Vec::with_capacity(objects.len());
    for (i, body) in objects.iter().enumerate() {
        offsets.push(out.len());
        out.push_str(&format!("{} 0 obj\n{body}\nendobj\n", i + 1));
    }
    let xref_at = out.len();
    out.push_str(&format!("xref\n0 {}\n", objects.len() + 1));
    out.push_str("0000000000 65535 f \n");
    for off in &offsets {
        out.push_str(&format!("{off:010} 00000 n \n"));
    }
    out.push_str(&format!(
        "trailer\n<< /Size {} /Root 1 0 R >>\nstartxref\n{xref_at}\n%%EOF\n",
        objects.len() + 1
    ));
    out.into_bytes()
}

fn write_executable(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
}

/// A stub rasterizer honoring the `pdftoppm -png -r <dpi> <pdf> <root>`
/// contract: reads `/Count N` from the PDF and writes `root-1.png` ..
/// `root-N.png` (each a genuine PNG).
pub fn write_stub_rasterizer(dir: &Path) -> PathBuf {
    let path = dir.join("stub-pdftoppm");
    write_executable(
        &path,
        r#"#!/usr/bin/env python3
import re, struct, sys, zlib

def png(rgb):
    w, h = 64, 48
    raw = b"".join(b"\x00" + bytes(rgb) * w for _ in range(h))
    def chunk(t, d):
        return struct.pack(">I", len(d)) + t + d + struct.pack(">I", zlib.crc32(t + d))
    return (b"\x89PNG\r\n\x1a\n"
            + chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(raw))
            + chunk(b"IEND", b""))

args = [a for a in sys.argv[1:]]
positional = []
skip = False
for i, a in enumerate(args):
    if skip:
        skip = False
        continue
    if a == "-r":
        skip = True
        continue
    if a.startswith("-"):
        continue
    positional.append(a)
if len(positional) != 2:
    sys.stderr.write("usage: stub-pdftoppm -png -r DPI in.pdf outroot\n")
    sys.exit(2)
pdf, root = positional
try:
    data = open(pdf, "rb").read()
except OSError as e:
    sys.stderr.write(str(e) + "\n")
    sys.exit(1)
m = re.search(rb"/Count (\d+)", data)
if not data.startswith(b"%PDF") or not m:
    sys.stderr.write("not a PDF or no page tree\n")
    sys.exit(99)
count = int(m.group(1))
if count == 0:
    sys.stderr.write("zero pages\n")
    sys.exit(99)
for i in range(1, count + 1):
    shade = (40 * i) % 256
    with open(f"{root}-{i}.png", "wb") as f:
        f.write(png((shade, 90, 200 - shade % 150)))
"#,
    );
    path
}

/// A stub converter honoring the `soffice --headless --convert-to pdf
/// --outdir <dir> <pptx>` contract: verifies the input is a ZIP, counts its
/// slide parts, and writes a matching minimal PDF.
pub fn write_stub_converter(dir: &Path) -> PathBuf {
    let path = dir.join("stub-soffice");
    write_executable(
        &path,
        r#"#!/usr/bin/env python3
import os, re, sys, zipfile

args = sys.argv[1:]
outdir = None
inputs = []
i = 0
while i < len(args):
    if args[i] == "--outdir":
        outdir = args[i + 1]
        i += 2
        continue
    if args[i] == "--convert-to":
        i += 2
        continue
    if args[i].startswith("--"):
        i += 1
        continue
    inputs.append(args[i])
    i += 1
if outdir is None or len(inputs) != 1:
    sys.stderr.write("usage: stub-soffice --headless --convert-to pdf --outdir DIR FILE\n")
    sys.exit(2)
src = inputs[0]
try:
    z = zipfile.ZipFile(src)
except Exception as e:
    sys.stderr.write(f"source is not a presentation: {e}\n")
    sys.exit(1)
slides = [n for n in z.namelist() if re.fullmatch(r"ppt/slides/slide\d+\.xml", n)]
count = len(slides)
kids = " ".join(f"{3 + k} 0 R" for k in range(count))
objs = ["<< /Type /Catalog /Pages 2 0 R >>",
        f"<< /Type /Pages /Kids [{kids}] /Count {count} >>"]
objs += ["<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] >>"] * count
out = "%PDF-1.4\n"
offsets = []
for n, body in enumerate(objs):
    offsets.append(len(out))
    out += f"{n + 1} 0 obj\n{body}\nendobj\n"
xref_at = len(out)
out += f"xref\n0 {len(objs) + 1}\n0000000000 65535 f \n"
for off in offsets:
    out += f"{off:010} 00000 n \n"
out += f"trailer\n<< /Size {len(objs) + 1} /Root 1 0 R >>\nstartxref\n{xref_at}\n%%EOF\n"
stem = os.path.splitext(os.path.basename(src))[0]
with open(os.path.join(outdir, stem + ".pdf"), "w") as f:
    f.write(out)
"#,
    );
    path
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl RecordedRequest {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct MockResponse {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
    pub location: Option<String>,
}

impl MockResponse {
    pub fn ok(content_type: &str, body: Vec<u8>) -> Self {
        MockResponse {
            status: 200,
            content_type: content_type.to_string(),
            body,
            location: None,
        }
    }

    pub fn status(status: u16, body: &str) -> Self {
        MockResponse {
            status,
            content_type: "application/json".to_string(),
            body: body.as_bytes().to_vec(),
            location: None,
        }
    }

    pub fn redirect(location: &str) -> Self {
        MockResponse {
            status: 302,
            content_type: "text/html".to_string(),
            body: Vec::new(),
            location: Some(location.to_string()),
        }
    }
}

/// A scripted, synchronous HTTP/1.1 server for exercising the cloud adapter
/// and the export downloader. The handler runs per request, in order, and
/// may keep state (e.g. fail the first call, succeed the second).
pub struct MockServer {
    pub base_url: String,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
    shutdown: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start<H>(mut handler: H) -> Self
    where
        H: FnMut(&RecordedRequest) -> MockResponse + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = listener.local_addr().unwrap();
        let requests: Arc<Mutex<Vec<RecordedRequest>>> = Arc::new(Mutex::new(Vec::new()));
        let shutdown = Arc::new(AtomicBool::new(false));

        let thread_requests = Arc::clone(&requests);
        let thread_shutdown = Arc::clone(&shutdown);
        let join = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if thread_shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                if let Some(request) = read_request(&stream) {
                    thread_requests.lock().unwrap().push(request.clone());
                    let response = handler(&request);
                    let _ = write_response(&stream, &response);
                }
            }
        });

        MockServer {
            base_url: format!("http://{addr}"),
            requests,
            shutdown,
            join: Some(join),
        }
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.base_url.trim_start_matches("http://"));
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

fn read_request(mut stream: &TcpStream) -> Option<RecordedRequest> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        match stream.read(&mut chunk) {
            Ok(0) => return None,
            Ok(n) => {
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    break pos;
                }
                if buf.len() > 1 << 20 {
                    return None;
                }
            }
            Err(_) => return None,
        }
    };

    let head = String::from_utf8_lossy(&buf[..header_end]).into_owned();
    let mut lines = head.split("\r\n");
    let request_line = lines.next()?;
    let mut parts = request_line.split(' ');
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();

    let mut headers = Vec::new();
    let mut content_length = 0usize;
    for line in lines {
        if let Some((name, value)) = line.split_once(':') {
            let name = name.trim().to_string();
            let value = value.trim().to_string();
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.parse().unwrap_or(0);
            }
            headers.push((name, value));
        }
    }

    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => body.extend_from_slice(&chunk[..n]),
            Err(_) => break,
        }
    }
    body.truncate(content_length);

    Some(RecordedRequest {
        method,
        path,
        headers,
        body,
    })
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn write_response(mut stream: &TcpStream, response: &MockResponse) -> std::io::Result<()> {
    let reason = match response.status {
        200 => "OK",
        302 => "Found",
        401 => "Unauthorized",
        403 => "Forbidden",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Response",
    };
    let mut head = format!(
        "HTTP/1.1 {} {reason}\r\nContent-Length: {}\r\nContent-Type: {}\r\nConnection: close\r\n",
        response.status,
        response.body.len(),
        response.content_type
    );
    if let Some(location) = &response.location {
        head.push_str(&format!("Location: {location}\r\n"));
    }
    head.push_str("\r\n");
    stream.write_all(head.as_bytes())?;
    stream.write_all(&response.body)?;
    stream.flush()
}

/// Offline tone WAV bytes, handy as a synthesized-audio fixture.
pub fn tone_wav_bytes(seconds: f64, sample_rate: u32, channels: u16) -> Vec<u8> {
    let frames = (seconds * sample_rate as f64).round() as usize;
    let samples: Vec<i16> = (0..frames * channels as usize)
        .map(|i| (9000.0 * (i as f64 * 0.07).sin()) as i16)
        .collect();
    let audio = slidecast::audio::WaveAudio::new(sample_rate, channels, samples);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tone.wav");
    slidecast::audio::write_wav(&audio, &p).unwrap();
    std::fs::read(&p).unwrap()
}

/// Resolve a tool from PATH the way `Command` would, for test preconditions.
pub fn tool_on_path(name: &str) -> bool {
    std::process::Command::new(name)
        .arg("-version")
        .output()
        .is_ok()
}
