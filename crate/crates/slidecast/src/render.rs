//! FFmpeg capability discovery, invocation construction, and the stitch core
//! that turns ordered images plus per-slide audio into one video file.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;
use thiserror::Error;

use crate::audio::{self, AudioError, WaveAudio};
use crate::model::{TimingManifest, TimingRecord};

/// How much FFmpeg stderr is retained in results and errors.
const LOG_CAP_BYTES: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("ffmpeg executable not found at {0}")]
    FfmpegMissing(PathBuf),
    #[error("could not parse ffmpeg capability output near {0:?}")]
    ParseFailure(String),
    #[error("dimensions {width}x{height} are too small to scale (need at least 2x2)")]
    TooSmall { width: u32, height: u32 },
    #[error("image/audio count mismatch: {images} images vs {audios} audio segments")]
    CountMismatch { images: usize, audios: usize },
    #[error("slide {index} has non-positive duration {value}")]
    NonpositiveDuration { index: usize, value: f64 },
    #[error("ffmpeg exited with status {exit}")]
    FfmpegFailed { exit: i32, stderr_tail: String },
    #[error("media probe failed: {0}")]
    ProbeFailed(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Constant-quality or fixed-bitrate video encoding. Exactly one is active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quality {
    /// x264 constant rate factor (lower is higher quality).
    Crf(u32),
    /// Explicit bitrate string such as "2M".
    Bitrate(String),
}

/// Codec/container/rate settings compiled into FFmpeg arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderPreset {
    pub container: String,
    pub video_codec: String,
    pub audio_codec: String,
    pub pixel_format: String,
    pub fps: u32,
    pub quality: Quality,
    pub divisible_dims: bool,
    pub extra_args: Vec<String>,
}

impl Default for RenderPreset {
    fn default() -> Self {
        RenderPreset {
            container: "mp4".to_string(),
            video_codec: "libx264".to_string(),
            audio_codec: "aac".to_string(),
            pixel_format: "yuv420p".to_string(),
            fps: 24,
            quality: Quality::Crf(23),
            divisible_dims: true,
            extra_args: Vec::new(),
        }
    }
}

/// One muxer or codec reported by the FFmpeg build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capability {
    pub name: String,
    pub kind: CapabilityKind,
    pub decode: bool,
    pub encode: bool,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapabilityKind {
    Muxer,
    VideoCodec,
    AudioCodec,
}

/// Outcome of a stitch: whether it succeeded, where the file landed, the
/// captured FFmpeg log, and the per-slide timings used.
#[derive(Debug, Clone)]
pub struct RenderResult {
    pub success: bool,
    pub outfile: PathBuf,
    pub log: String,
    pub timings: TimingManifest,
    pub subtitle_path: Option<PathBuf>,
}

/// Locations of the FFmpeg executables.
#[derive(Debug, Clone)]
pub struct FfmpegTools {
    pub ffmpeg: PathBuf,
    pub probe: PathBuf,
}

impl FfmpegTools {
    pub fn new(ffmpeg: impl Into<PathBuf>, probe: impl Into<PathBuf>) -> Self {
        FfmpegTools {
            ffmpeg: ffmpeg.into(),
            probe: probe.into(),
        }
    }
}

fn run_tool(path: &Path, args: &[&str]) -> Result<std::process::Output, RenderError> {
    Command::new(path).args(args).output().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            RenderError::FfmpegMissing(path.to_path_buf())
        } else {
            RenderError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

/// Query the FFmpeg build for its muxers or codecs of the given kind.
pub fn ffmpeg_capabilities(
    kind: CapabilityKind,
    ffmpeg_path: &Path,
) -> Result<Vec<Capability>, RenderError> {
    let flag = match kind {
        CapabilityKind::Muxer => "-muxers",
        CapabilityKind::VideoCodec | CapabilityKind::AudioCodec => "-codecs",
    };
    let output = run_tool(ffmpeg_path, &["-hide_banner", flag])?;
    let text = String::from_utf8_lossy(&output.stdout);

    let mut caps = Vec::new();
    let mut past_separator = false;
    let mut first_unparsed: Option<String> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if !past_separator {
            if trimmed.starts_with("--") || trimmed.starts_with("-------") {
                past_separator = true;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let parsed = match kind {
            CapabilityKind::Muxer => parse_muxer_line(trimmed),
            CapabilityKind::VideoCodec => parse_codec_line(trimmed, 'V'),
            CapabilityKind::AudioCodec => parse_codec_line(trimmed, 'A'),
        };
        match parsed {
            LineParse::Entry(cap) => caps.push(Capability {
                kind,
                ..cap
            }),
            LineParse::OtherKind => {}
            LineParse::Unrecognized => {
                first_unparsed.get_or_insert_with(|| trimmed.to_string());
            }
        }
    }
    if caps.is_empty() {
        return Err(RenderError::ParseFailure(
            first_unparsed.unwrap_or_else(|| text.lines().next().unwrap_or("").to_string()),
        ));
    }
    Ok(caps)
}

enum LineParse {
    Entry(Capability),
    OtherKind,
    Unrecognized,
}

fn parse_muxer_line(line: &str) -> LineParse {
    // e.g. "E mp4             MP4 (MPEG-4 Part 14)" or "DE 3gp ..."
    let mut fields = line.splitn(3, char::is_whitespace).filter(|f| !f.is_empty());
    let (Some(flags), Some(name)) = (fields.next(), fields.next()) else {
        return LineParse::Unrecognized;
    };
    if !flags.chars().all(|c| matches!(c, 'D' | 'E' | '.')) || flags.len() > 2 {
        return LineParse::Unrecognized;
    }
    LineParse::Entry(Capability {
        name: name.to_string(),
        kind: CapabilityKind::Muxer,
        decode: flags.contains('D'),
        encode: flags.contains('E'),
        description: fields.next().unwrap_or("").trim().to_string(),
    })
}

fn parse_codec_line(line: &str, want: char) -> LineParse {
    // e.g. "DEV.LS h264   H.264 / AVC ..." -- flags are 6 columns:
    // decode, encode, kind (V/A/S), intra-only, lossy, lossless.
    let mut fields = line.splitn(3, char::is_whitespace).filter(|f| !f.is_empty());
    let (Some(flags), Some(name)) = (fields.next(), fields.next()) else {
        return LineParse::Unrecognized;
    };
    if flags.len() != 6 {
        return LineParse::Unrecognized;
    }
    let chars: Vec<char> = flags.chars().collect();
    if chars[2] != want {
        return LineParse::OtherKind;
    }
    LineParse::Entry(Capability {
        name: name.to_string(),
        kind: CapabilityKind::VideoCodec,
        decode: chars[0] == 'D',
        encode: chars[1] == 'E',
        description: fields.next().unwrap_or("").trim().to_string(),
    })
}

/// Round each dimension down to the nearest even integer, as required by the
/// default H.264 encoder. Even inputs pass through unchanged.
pub fn even_scale(width: u32, height: u32) -> Result<(u32, u32), RenderError> {
    if width < 2 || height < 2 {
        return Err(RenderError::TooSmall { width, height });
    }
    Ok((width & !1, height & !1))
}

fn escape_concat_path(path: &Path) -> String {
    // concat demuxer quoting: wrap in single quotes, escape embedded quotes
    path.to_string_lossy().replace('\'', "'\\''")
}

/// Build an FFmpeg concat-demuxer playlist: a `file`/`duration` pair per
/// slide, with the final image repeated once so its duration is honored.
pub fn build_concat_spec(images: &[PathBuf], durations: &[f64]) -> Result<String, RenderError> {
    if images.len() != durations.len() {
        return Err(RenderError::CountMismatch {
            images: images.len(),
            audios: durations.len(),
        });
    }
    for (index, &d) in durations.iter().enumerate() {
        if d <= 0.0 || !d.is_finite() {
            return Err(RenderError::NonpositiveDuration { index, value: d });
        }
    }
    let mut spec = String::new();
    for (image, duration) in images.iter().zip(durations) {
        spec.push_str(&format!("file '{}'\n", escape_concat_path(image)));
        spec.push_str(&format!("duration {duration:.3}\n"));
    }
    if let Some(last) = images.last() {
        spec.push_str(&format!("file '{}'\n", escape_concat_path(last)));
    }
    Ok(spec)
}

fn tail_of(s: &str, cap: usize) -> String {
    if s.len() <= cap {
        return s.to_string();
    }
    let mut start = s.len() - cap;
    while !s.is_char_boundary(start) {
        start += 1;
    }
    s[start..].to_string()
}

/// Stitch each image onto the timeline for the duration of its audio, encode
/// once with FFmpeg, and probe the output. Returns a successful
/// [`RenderResult`] only when FFmpeg exits cleanly and the probe confirms
/// one video and one audio stream.
pub fn stitch(
    images: &[PathBuf],
    audios: &[WaveAudio],
    preset: &RenderPreset,
    output: &Path,
    tools: &FfmpegTools,
) -> Result<RenderResult, RenderError> {
    if images.len() != audios.len() || images.is_empty() {
        return Err(RenderError::CountMismatch {
            images: images.len(),
            audios: audios.len(),
        });
    }
    let durations: Vec<f64> = audios.iter().map(audio::duration).collect();

    let absolute: Vec<PathBuf> = images
        .iter()
        .map(|p| {
            p.canonicalize().map_err(|source| RenderError::Io {
                path: p.clone(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let spec = build_concat_spec(&absolute, &durations)?;
    let full_audio = audio::concat_audio(audios, 0.0)?;

    let workdir = tempfile::tempdir().map_err(|source| RenderError::Io {
        path: PathBuf::from("<tempdir>"),
        source,
    })?;
    let spec_path = workdir.path().join("slides.concat");
    std::fs::write(&spec_path, &spec).map_err(|source| RenderError::Io {
        path: spec_path.clone(),
        source,
    })?;
    let audio_path = workdir.path().join("narration.wav");
    audio::write_wav(&full_audio, &audio_path)?;

    let filter = if preset.divisible_dims {
        format!("scale=trunc(iw/2)*2:trunc(ih/2)*2,fps={}", preset.fps)
    } else {
        format!("fps={}", preset.fps)
    };
    let mut cmd = Command::new(&tools.ffmpeg);
    cmd.arg("-y")
        .args(["-f", "concat", "-safe", "0", "-i"])
        .arg(&spec_path)
        .arg("-i")
        .arg(&audio_path)
        .args(["-c:v", &preset.video_codec]);
    match &preset.quality {
        Quality::Crf(crf) => {
            cmd.args(["-crf", &crf.to_string()]);
        }
        Quality::Bitrate(rate) => {
            cmd.args(["-b:v", rate]);
        }
    }
    cmd.args(["-pix_fmt", &preset.pixel_format])
        .args(["-vf", &filter])
        .args(["-c:a", &preset.audio_codec])
        .arg("-shortest")
        .args(["-f", &preset.container]);
    for arg in &preset.extra_args {
        cmd.arg(arg);
    }
    cmd.arg(output);

    let run = cmd.output().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            RenderError::FfmpegMissing(tools.ffmpeg.clone())
        } else {
            RenderError::Io {
                path: tools.ffmpeg.clone(),
                source: e,
            }
        }
    })?;
    let log = tail_of(&String::from_utf8_lossy(&run.stderr), LOG_CAP_BYTES);
    if !run.status.success() {
        return Err(RenderError::FfmpegFailed {
            exit: run.status.code().unwrap_or(-1),
            stderr_tail: log,
        });
    }

    let info = probe_media(output, &tools.probe)?;
    let has_video = info.streams.iter().any(|s| s.kind == "video");
    let has_audio = info.streams.iter().any(|s| s.kind == "audio");
    if !has_video || !has_audio {
        return Err(RenderError::ProbeFailed(format!(
            "output lacks a {} stream",
            if has_video { "audio" } else { "video" }
        )));
    }
    let expected: f64 = durations.iter().sum();
    if (info.duration - expected).abs() > 0.25 {
        return Err(RenderError::ProbeFailed(format!(
            "output duration {:.3} s deviates from expected {:.3} s by more than 0.25 s",
            info.duration, expected
        )));
    }

    let mut start = 0.0;
    let slides = durations
        .iter()
        .enumerate()
        .map(|(index, &duration)| {
            let record = TimingRecord {
                index,
                start,
                duration,
                cache_key: String::new(),
            };
            start += duration;
            record
        })
        .collect();

    Ok(RenderResult {
        success: true,
        outfile: output.to_path_buf(),
        log,
        timings: TimingManifest {
            pad_seconds: 0.0,
            slides,
        },
        subtitle_path: None,
    })
}

/// Duration and stream layout of a media file.
#[derive(Debug, Clone)]
pub struct MediaInfo {
    pub duration: f64,
    pub streams: Vec<StreamInfo>,
}

#[derive(Debug, Clone)]
pub struct StreamInfo {
    pub kind: String,
    pub codec: String,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub pix_fmt: Option<String>,
    pub duration: Option<f64>,
}

#[derive(Deserialize)]
struct ProbeOutput {
    #[serde(default)]
    format: Option<ProbeFormat>,
    #[serde(default)]
    streams: Vec<ProbeStream>,
}

#[derive(Deserialize)]
struct ProbeFormat {
    duration: Option<String>,
}

#[derive(Deserialize)]
struct ProbeStream {
    codec_type: Option<String>,
    codec_name: Option<String>,
    width: Option<u32>,
    height: Option<u32>,
    pix_fmt: Option<String>,
    duration: Option<String>,
}

/// Inspect a media file with the probe tool (JSON output) and report its
/// container duration and streams.
pub fn probe_media(path: &Path, probe_path: &Path) -> Result<MediaInfo, RenderError> {
    let output = Command::new(probe_path)
        .args(["-v", "error", "-print_format", "json", "-show_format", "-show_streams"])
        .arg(path)
        .output()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                RenderError::FfmpegMissing(probe_path.to_path_buf())
            } else {
                RenderError::Io {
                    path: probe_path.to_path_buf(),
                    source: e,
                }
            }
        })?;
    if !output.status.success() {
        return Err(RenderError::ProbeFailed(tail_of(
            &String::from_utf8_lossy(&output.stderr),
            2048,
        )));
    }
    let parsed: ProbeOutput = serde_json::from_slice(&output.stdout)
        .map_err(|e| RenderError::ProbeFailed(format!("unparseable probe JSON: {e}")))?;

    let streams: Vec<StreamInfo> = parsed
        .streams
        .into_iter()
        .map(|s| StreamInfo {
            kind: s.codec_type.unwrap_or_default(),
            codec: s.codec_name.unwrap_or_default(),
            width: s.width,
            height: s.height,
            pix_fmt: s.pix_fmt,
            duration: s.duration.and_then(|d| d.parse().ok()),
        })
        .collect();
    let duration = parsed
        .format
        .and_then(|f| f.duration)
        .and_then(|d| d.parse::<f64>().ok())
        .or_else(|| {
            streams
                .iter()
                .filter_map(|s| s.duration)
                .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
        })
        .ok_or_else(|| RenderError::ProbeFailed("no duration reported".to_string()))?;

    Ok(MediaInfo { duration, streams })
}
