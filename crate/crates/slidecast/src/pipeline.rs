//! End-to-end orchestration: cache-aware synthesis fan-out, stitching,
//! subtitle emission, the Markdown front door, and the environment doctor.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::{self, AudioError, WaveAudio, STANDARD_CHANNELS, STANDARD_SAMPLE_RATE};
use crate::config::Config;
use crate::ingest::{parse_markdown_deck, IngestError};
use crate::model::{
    validate_deck, Deck, Lexicon, ModelError, Slide, TimingManifest, TimingRecord, ValidatedDeck,
};
use crate::render::{self, FfmpegTools, RenderError, RenderPreset, RenderResult};
use crate::subtitles::{self, SubtitleError};
use crate::tts::{apply_lexicon, SynthRequest, Synthesizer, TtsError, VoiceSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tts(#[from] TtsError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Subtitle(#[from] SubtitleError),
    #[error("slide renderer failed on slide {slide}: {detail}")]
    RendererFailed { slide: usize, detail: String },
    #[error("{images} images supplied for {scripts} slides")]
    CountMismatch { images: usize, scripts: usize },
    #[error("invalid run options: {0}")]
    BadOptions(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Everything a run needs besides the deck itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub voice: VoiceSpec,
    pub preset: RenderPreset,
    pub subtitles: bool,
    pub pad_seconds: f64,
    pub lexicon: Option<Lexicon>,
    pub cache_dir: PathBuf,
    pub keep_temps: bool,
    pub tts_concurrency: usize,
    pub caption_line_chars: usize,
}

impl RunOptions {
    pub fn new(voice: VoiceSpec, cache_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            voice,
            preset: RenderPreset::default(),
            subtitles: true,
            pad_seconds: 0.5,
            lexicon: None,
            cache_dir: cache_dir.into(),
            keep_temps: false,
            tts_concurrency: 4,
            caption_line_chars: subtitles::DEFAULT_LINE_CHARS,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.pad_seconds < 0.0 || !self.pad_seconds.is_finite() {
            return Err(PipelineError::BadOptions(format!(
                "pad_seconds must be non-negative, got {}",
                self.pad_seconds
            )));
        }
        if self.tts_concurrency == 0 {
            return Err(PipelineError::BadOptions(
                "tts_concurrency must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Stable content hash identifying one synthesized audio segment. Equal
/// inputs produce equal keys across runs and platforms.
pub fn cache_key(engine: &str, voice_id: &str, spoken_text: &str, sample_rate: u32) -> String {
    let mut hasher = Sha256::new();
    for field in [engine, voice_id, spoken_text] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hasher.update(sample_rate.to_le_bytes());
    hex::encode(hasher.finalize())
}

/// A literal script of the form `[[pause X]]` maps to X seconds of silence
/// synthesized locally, with no engine call.
fn parse_pause_directive(script: &str) -> Option<f64> {
    let inner = script.strip_prefix("[[pause ")?.strip_suffix("]]")?;
    let seconds: f64 = inner.trim().parse().ok()?;
    (seconds.is_finite() && seconds >= 0.0).then_some(seconds)
}

enum SlidePlan {
    Pause { seconds: f64, key: String },
    Speech { spoken: String, key: String },
}

fn plan_slides(deck: &ValidatedDeck, options: &RunOptions, engine_name: &str) -> Vec<SlidePlan> {
    let empty = Lexicon::empty();
    let lexicon = options.lexicon.as_ref().unwrap_or(&empty);
    deck.slides
        .iter()
        .map(|slide| {
            if let Some(seconds) = parse_pause_directive(&slide.script_spoken) {
                let key = cache_key(
                    engine_name,
                    &options.voice.voice_id,
                    &slide.script_spoken,
                    STANDARD_SAMPLE_RATE,
                );
                SlidePlan::Pause { seconds, key }
            } else {
                let spoken = apply_lexicon(&slide.script_spoken, lexicon);
                let key = cache_key(
                    engine_name,
                    &options.voice.voice_id,
                    &spoken,
                    STANDARD_SAMPLE_RATE,
                );
                SlidePlan::Speech { spoken, key }
            }
        })
        .collect()
}

fn cache_path(cache_dir: &Path, key: &str) -> PathBuf {
    cache_dir.join(format!("{key}.wav"))
}

/// Synthesize every distinct missing segment with bounded parallelism,
/// writing each result into the cache. Returns the per-slide speech audio
/// (pause slides get locally generated silence).
fn synthesize_all(
    plans: &[SlidePlan],
    options: &RunOptions,
    engine: &dyn Synthesizer,
) -> Result<Vec<WaveAudio>, PipelineError> {
    std::fs::create_dir_all(&options.cache_dir).map_err(|source| PipelineError::Io {
        path: options.cache_dir.clone(),
        source,
    })?;

    // Distinct cache misses only, so identical slides synthesize once.
    let mut jobs: Vec<(String, String)> = Vec::new();
    let mut queued: std::collections::HashSet<&str> = std::collections::HashSet::new();
    for plan in plans {
        if let SlidePlan::Speech { spoken, key } = plan {
            if !cache_path(&options.cache_dir, key).is_file() && queued.insert(key.as_str()) {
                jobs.push((key.clone(), spoken.clone()));
            }
        }
    }

    if !jobs.is_empty() {
        let next_job = AtomicUsize::new(0);
        let failures: Mutex<Vec<(usize, TtsError)>> = Mutex::new(Vec::new());
        let workers = options.tts_concurrency.min(jobs.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next_job.fetch_add(1, Ordering::Relaxed);
                    let Some((key, spoken)) = jobs.get(i) else {
                        break;
                    };
                    if !failures.lock().unwrap().is_empty() {
                        break;
                    }
                    let request = SynthRequest::new(spoken, options.voice.clone());
                    match crate::tts::synthesize(&request, engine) {
                        Ok(audio) => {
                            let path = cache_path(&options.cache_dir, key);
                            if let Err(e) = audio::write_wav(&audio, &path) {
                                failures.lock().unwrap().push((i, TtsError::Audio(e)));
                            }
                        }
                        Err(e) => failures.lock().unwrap().push((i, e)),
                    }
                });
            }
        });
        let mut failures = failures.into_inner().unwrap();
        if !failures.is_empty() {
            failures.sort_by_key(|(i, _)| *i);
            return Err(failures.remove(0).1.into());
        }
    }

    plans
        .iter()
        .map(|plan| match plan {
            SlidePlan::Pause { seconds, .. } => Ok(audio::make_silence(
                *seconds,
                STANDARD_SAMPLE_RATE,
                STANDARD_CHANNELS,
            )?),
            SlidePlan::Speech { key, .. } => {
                Ok(audio::read_wav(&cache_path(&options.cache_dir, key))?)
            }
        })
        .collect()
}

/// The `spin` flow: synthesize narration for each slide (cache-aware),
/// append the inter-slide pad, stitch into a video, and emit the timing
/// manifest plus (optionally) an SRT file beside the output.
pub fn spin(
    deck: &ValidatedDeck,
    options: &RunOptions,
    engine: &dyn Synthesizer,
    output: &Path,
    tools: &FfmpegTools,
) -> Result<RenderResult, PipelineError> {
    options.validate()?;

    let plans = plan_slides(deck, options, engine.name());
    let speech = synthesize_all(&plans, options, engine)?;

    let mut slide_audios = Vec::with_capacity(speech.len());
    for audio in &speech {
        slide_audios.push(audio::concat_audio(
            std::slice::from_ref(audio),
            options.pad_seconds,
        )?);
    }

    let images: Vec<PathBuf> = deck.slides.iter().map(|s| s.image_path.clone()).collect();
    let mut result = render::stitch(&images, &slide_audios, &options.preset, output, tools)?;

    let mut start = 0.0;
    let mut records = Vec::with_capacity(slide_audios.len());
    for (slide, (plan, audio)) in deck.slides.iter().zip(plans.iter().zip(&slide_audios)) {
        let key = match plan {
            SlidePlan::Pause { key, .. } | SlidePlan::Speech { key, .. } => key.clone(),
        };
        records.push(TimingRecord {
            index: slide.index,
            start,
            duration: audio.duration(),
            cache_key: key,
        });
        start += audio.duration();
    }
    let manifest = TimingManifest {
        pad_seconds: options.pad_seconds,
        slides: records,
    };
    manifest.validate()?;

    let manifest_path = output.with_extension("timings.json");
    std::fs::write(&manifest_path, manifest.to_json()).map_err(|source| PipelineError::Io {
        path: manifest_path.clone(),
        source,
    })?;

    if options.subtitles {
        let mut cues = Vec::new();
        for ((slide, plan), record) in deck.slides.iter().zip(&plans).zip(&manifest.slides) {
            if matches!(plan, SlidePlan::Pause { .. }) {
                continue;
            }
            let speech_duration = record.duration - options.pad_seconds;
            if speech_duration <= 0.0 {
                continue;
            }
            let captions =
                subtitles::split_captions(&slide.script_display, options.caption_line_chars);
            if captions.is_empty() {
                continue;
            }
            cues.extend(subtitles::allocate_cues(
                &captions,
                record.start,
                speech_duration,
            )?);
        }
        subtitles::renumber_cues(&mut cues);
        let srt = subtitles::format_srt(&cues)?;
        let srt_path = output.with_extension("srt");
        std::fs::write(&srt_path, srt).map_err(|source| PipelineError::Io {
            path: srt_path.clone(),
            source,
        })?;
        result.subtitle_path = Some(srt_path);
    }

    result.timings = manifest;
    Ok(result)
}

/// Where a narrated deck's slide images come from.
pub enum ImageSource {
    /// Pre-rendered images, one per slide, in order.
    Provided(Vec<PathBuf>),
    /// A directory of pre-rendered images, ordered by file name.
    Directory(PathBuf),
    /// An external renderer command, invoked once per slide as
    /// `<cmd> --input <deck> --slide <k> --out <png>`.
    Renderer(String),
}

fn collect_directory_images(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut images: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    images.sort();
    Ok(images)
}

fn render_slide_images(
    command: &str,
    markdown: &Path,
    slide_count: usize,
    workdir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| PipelineError::BadOptions("empty renderer command".to_string()))?;
    let base_args: Vec<&str> = parts.collect();

    let mut images = Vec::with_capacity(slide_count);
    for k in 0..slide_count {
        let out = workdir.join(format!("slide-{k:04}.png"));
        let run = std::process::Command::new(program)
            .args(&base_args)
            .arg("--input")
            .arg(markdown)
            .args(["--slide", &k.to_string()])
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| PipelineError::RendererFailed {
                slide: k,
                detail: format!("cannot start {program:?}: {e}"),
            })?;
        if !run.status.success() {
            return Err(PipelineError::RendererFailed {
                slide: k,
                detail: String::from_utf8_lossy(&run.stderr).into_owned(),
            });
        }
        if !out.is_file() {
            return Err(PipelineError::RendererFailed {
                slide: k,
                detail: format!("renderer wrote no file at {}", out.display()),
            });
        }
        images.push(out);
    }
    Ok(images)
}

/// The `narrate` flow: scripts from a Markdown deck, images from a renderer
/// hook or a pre-rendered set, then [`spin`].
pub fn narrate(
    markdown: &Path,
    images: ImageSource,
    options: &RunOptions,
    engine: &dyn Synthesizer,
    output: &Path,
    tools: &FfmpegTools,
) -> Result<RenderResult, PipelineError> {
    let scripted = parse_markdown_deck(markdown)?;

    let workdir = tempfile::Builder::new()
        .prefix("slidecast-narrate-")
        .tempdir()
        .map_err(|source| PipelineError::Io {
            path: std::env::temp_dir(),
            source,
        })?;

    let image_paths = match images {
        ImageSource::Provided(paths) => paths,
        ImageSource::Directory(dir) => collect_directory_images(&dir)?,
        ImageSource::Renderer(cmd) => {
            render_slide_images(&cmd, markdown, scripted.len(), workdir.path())?
        }
    };
    if image_paths.len() != scripted.len() {
        keep_on_failure(workdir, options.keep_temps, true);
        return Err(PipelineError::CountMismatch {
            images: image_paths.len(),
            scripts: scripted.len(),
        });
    }

    let slides: Vec<Slide> = image_paths
        .iter()
        .zip(&scripted)
        .enumerate()
        .map(|(i, (image, s))| Slide::new(i, image, &s.script))
        .collect();
    let title = markdown
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let deck = validate_deck(Deck {
        slides,
        title,
        default_voice: options.voice.clone(),
    });

    let result = match deck {
        Ok(deck) => spin(&deck, options, engine, output, tools),
        Err(e) => Err(e.into()),
    };
    keep_on_failure(workdir, options.keep_temps, result.is_err());
    result
}

fn keep_on_failure(workdir: tempfile::TempDir, keep_temps: bool, failed: bool) {
    if keep_temps || failed {
        let path = workdir.keep();
        if failed {
            log::warn!("work directory retained for debugging: {}", path.display());
        } else {
            log::info!("work directory kept: {}", path.display());
        }
    }
}

/// One doctor finding: the prerequisite checked, whether it is satisfied,
/// what was observed, and how to fix it when it is not.
#[derive(Debug, Clone)]
pub struct DoctorCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
    pub remedy: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct DoctorReport {
    pub checks: Vec<DoctorCheck>,
}

impl DoctorReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

fn check_tool(name: &str, program: &str, version_arg: &str, remedy: &str) -> DoctorCheck {
    match std::process::Command::new(program).arg(version_arg).output() {
        Ok(out) => {
            let first_line = String::from_utf8_lossy(if out.stdout.is_empty() {
                &out.stderr
            } else {
                &out.stdout
            })
            .lines()
            .next()
            .unwrap_or("")
            .to_string();
            DoctorCheck {
                name: name.to_string(),
                ok: true,
                detail: if first_line.is_empty() {
                    format!("{program} is runnable")
                } else {
                    first_line
                },
                remedy: None,
            }
        }
        Err(e) => DoctorCheck {
            name: name.to_string(),
            ok: false,
            detail: format!("cannot run {program:?}: {e}"),
            remedy: Some(remedy.to_string()),
        },
    }
}

/// Check every external prerequisite and report pass/fail with a remedy
/// hint per failure. Reporting never fails the process.
pub fn doctor(config: &Config) -> DoctorReport {
    let mut report = DoctorReport::default();

    report.checks.push(check_tool(
        "ffmpeg",
        &config.ffmpeg_path,
        "-version",
        "install FFmpeg or set ffmpeg_path / SLIDECAST_FFMPEG_PATH",
    ));
    report.checks.push(check_tool(
        "ffprobe",
        &config.probe_path,
        "-version",
        "install FFmpeg (ffprobe ships with it) or set probe_path / SLIDECAST_PROBE_PATH",
    ));
    report.checks.push(check_tool(
        "pptx-converter",
        &config.soffice_path,
        "--version",
        "install LibreOffice or set soffice_path / SLIDECAST_SOFFICE_PATH",
    ));
    report.checks.push(check_tool(
        "pdf-rasterizer",
        &config.pdftoppm_path,
        "-v",
        "install poppler-utils or set pdftoppm_path / SLIDECAST_PDFTOPPM_PATH",
    ));

    match config.build_engine("offline") {
        Ok(engine) => {
            let auth = engine.check_auth();
            report.checks.push(DoctorCheck {
                name: "offline-engine".to_string(),
                ok: auth.ok,
                detail: auth.diagnostic,
                remedy: None,
            });
        }
        Err(e) => report.checks.push(DoctorCheck {
            name: "offline-engine".to_string(),
            ok: false,
            detail: e.to_string(),
            remedy: None,
        }),
    }

    match config.build_engine("polly") {
        Ok(engine) => {
            let auth = engine.check_auth();
            report.checks.push(DoctorCheck {
                name: "cloud-auth".to_string(),
                ok: auth.ok,
                detail: auth.diagnostic,
                remedy: (!auth.ok).then(|| {
                    "set AWS_ACCESS_KEY_ID / AWS_SECRET_ACCESS_KEY (and AWS_DEFAULT_REGION), \
                     or point aws_credentials_file at a credentials file"
                        .to_string()
                }),
            });
        }
        Err(e) => report.checks.push(DoctorCheck {
            name: "cloud-auth".to_string(),
            ok: false,
            detail: e.to_string(),
            remedy: Some("configure cloud credentials".to_string()),
        }),
    }

    let cache_check = std::fs::create_dir_all(&config.cache_dir)
        .and_then(|_| {
            let probe = config.cache_dir.join(".doctor-probe");
            std::fs::write(&probe, b"ok")?;
            std::fs::remove_file(&probe)
        })
        .map(|_| DoctorCheck {
            name: "cache-dir".to_string(),
            ok: true,
            detail: format!("{} is writable", config.cache_dir.display()),
            remedy: None,
        })
        .unwrap_or_else(|e| DoctorCheck {
            name: "cache-dir".to_string(),
            ok: false,
            detail: format!("{}: {e}", config.cache_dir.display()),
            remedy: Some("set cache_dir / SLIDECAST_CACHE_DIR to a writable location".to_string()),
        });
    report.checks.push(cache_check);

    report
}
