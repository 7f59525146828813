//! `slidecast` command-line interface.

use std::error::Error as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use slidecast::audio::AudioError;
use slidecast::config::Config;
use slidecast::ingest::{self, IngestError};
use slidecast::model::{load_deck_manifest, validate_deck, Lexicon};
use slidecast::pipeline::{self, ImageSource, PipelineError, RunOptions};
use slidecast::render::{self, CapabilityKind, RenderError, RenderResult};
use slidecast::tts::{TtsError, VoiceSpec};

#[derive(Parser)]
#[command(
    name = "slidecast",
    version,
    about = "Compile slide decks and narration scripts into lecture videos with synthesized speech and SRT subtitles"
)]
struct Cli {
    /// Config file (slidecast.toml or JSON equivalent)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Verbose logging
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Args)]
struct RunFlags {
    /// Voice id (e.g. Joanna, OfflineA)
    #[arg(long)]
    voice: Option<String>,

    /// Synthesizer engine: offline or polly
    #[arg(long)]
    engine: Option<String>,

    /// Skip SRT subtitle generation
    #[arg(long)]
    no_subtitles: bool,

    /// Trailing silence per slide, in seconds
    #[arg(long)]
    pad: Option<f64>,

    /// Pronunciation lexicon (JSON array of {"display","spoken"})
    #[arg(long)]
    lexicon: Option<PathBuf>,

    /// Directory for cached synthesized audio
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Keep per-run work directories
    #[arg(long)]
    keep_temps: bool,

    /// Maximum in-flight synthesis requests
    #[arg(long)]
    concurrency: Option<usize>,
}

#[derive(Subcommand)]
enum Commands {
    /// Stitch images and WAV narration directly into a video
    Stitch {
        /// Slide images, in order
        #[arg(long, num_args = 1.., required = true)]
        images: Vec<PathBuf>,
        /// WAV files, one per image, in order
        #[arg(long, num_args = 1.., required = true)]
        audio: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Create a narrated video from a deck manifest (JSON)
    Spin {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Create a narrated video from a Markdown slide source
    Narrate {
        markdown: PathBuf,
        /// Directory of pre-rendered slide images (ordered by name)
        #[arg(long, conflicts_with_all = ["renderer", "images"])]
        images_dir: Option<PathBuf>,
        /// Renderer command invoked per slide: `<cmd> --input <md> --slide <k> --out <png>`
        #[arg(long, conflicts_with = "images")]
        renderer: Option<String>,
        /// Explicit image list, one per slide
        #[arg(long, num_args = 1..)]
        images: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Convert a PowerPoint deck with speaker notes into a video
    Pptx {
        pptx: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Raster resolution for slide images
        #[arg(long)]
        dpi: Option<u32>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Convert a link-shared Google Slides document into a video
    Gslides {
        doc_id: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        dpi: Option<u32>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List the voices an engine offers
    Voices {
        #[arg(long)]
        engine: Option<String>,
    },
    /// Check external tools, credentials, and the cache directory
    Doctor,
    /// List FFmpeg capabilities
    Capabilities {
        #[arg(long, value_enum)]
        kind: CapKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CapKind {
    Muxers,
    Vcodecs,
    Acodecs,
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" }),
    )
    .init();

    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };

    match run(cli.command, &config) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            std::process::exit(exit_code(&e));
        }
    }
}

fn audio_exit_code(e: &AudioError) -> i32 {
    match e {
        AudioError::FfmpegMissing(_) => 3,
        AudioError::DecodeFailure { .. } | AudioError::IoFailure { .. } => 6,
        _ => 2,
    }
}

fn exit_code(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Model(_)
        | PipelineError::Subtitle(_)
        | PipelineError::CountMismatch { .. }
        | PipelineError::BadOptions(_) => 2,
        PipelineError::Tts(t) => match t {
            TtsError::AuthFailure(_) => 4,
            TtsError::NetworkFailure(_) | TtsError::ProviderError { .. } => 5,
            TtsError::UnknownEngine(_) | TtsError::EmptyText => 2,
            TtsError::Audio(a) => audio_exit_code(a),
        },
        PipelineError::Render(r) => match r {
            RenderError::FfmpegMissing(_) => 3,
            RenderError::TooSmall { .. }
            | RenderError::CountMismatch { .. }
            | RenderError::NonpositiveDuration { .. } => 2,
            RenderError::Audio(a) => audio_exit_code(a),
            _ => 6,
        },
        PipelineError::Audio(a) => audio_exit_code(a),
        PipelineError::Ingest(i) => match i {
            IngestError::ConverterMissing(_) | IngestError::RasterizerMissing(_) => 3,
            IngestError::SharingDisabled => 4,
            IngestError::NotFound | IngestError::NetworkFailure(_) => 5,
            IngestError::ConverterFailed { .. }
            | IngestError::RasterizerFailed(_)
            | IngestError::Io { .. } => 6,
            _ => 2,
        },
        PipelineError::RendererFailed { .. } | PipelineError::Io { .. } => 6,
    }
}

fn default_voice_for(engine: &str) -> &'static str {
    match engine {
        "polly" => "Joanna",
        _ => "OfflineA",
    }
}

fn build_options(
    config: &Config,
    flags: &RunFlags,
    manifest_voice: Option<&VoiceSpec>,
) -> Result<RunOptions, PipelineError> {
    let engine = flags
        .engine
        .clone()
        .or_else(|| manifest_voice.map(|v| v.engine.clone()))
        .unwrap_or_else(|| config.default_engine.clone());
    let voice_id = flags
        .voice
        .clone()
        .or_else(|| manifest_voice.map(|v| v.voice_id.clone()))
        .or_else(|| config.default_voice.clone())
        .unwrap_or_else(|| default_voice_for(&engine).to_string());

    let mut options = RunOptions::new(
        VoiceSpec::new(&engine, &voice_id),
        flags
            .cache_dir
            .clone()
            .unwrap_or_else(|| config.cache_dir.clone()),
    );
    options.preset = config.preset();
    options.subtitles = if flags.no_subtitles {
        false
    } else {
        config.default_subtitles
    };
    options.pad_seconds = flags.pad.unwrap_or(config.default_pad_seconds);
    options.keep_temps = flags.keep_temps || config.default_keep_temps;
    options.tts_concurrency = flags.concurrency.unwrap_or(config.default_tts_concurrency);
    options.caption_line_chars = config.default_caption_line_chars;
    if let Some(path) = &flags.lexicon {
        options.lexicon = Some(Lexicon::from_json_file(path).map_err(PipelineError::Model)?);
    }
    Ok(options)
}

fn report_result(result: &RenderResult) {
    println!("success: {}", result.success);
    println!("outfile: {}", result.outfile.display());
    if let Some(srt) = &result.subtitle_path {
        println!("subtitles: {}", srt.display());
    }
    println!(
        "duration: {:.3} s across {} slides",
        result.timings.total_duration(),
        result.timings.slides.len()
    );
}

fn run_spin_on_deck(
    deck: slidecast::model::ValidatedDeck,
    options: &RunOptions,
    config: &Config,
    output: &Path,
) -> Result<(), PipelineError> {
    let engine = config.build_engine(&options.voice.engine)?;
    let result = pipeline::spin(&deck, options, engine.as_ref(), output, &config.ffmpeg_tools())?;
    report_result(&result);
    Ok(())
}

fn run(command: Commands, config: &Config) -> Result<(), PipelineError> {
    match command {
        Commands::Stitch {
            images,
            audio,
            output,
        } => {
            let segments = audio
                .iter()
                .map(|p| slidecast::audio::read_wav(p))
                .collect::<Result<Vec<_>, _>>()?;
            let result = render::stitch(
                &images,
                &segments,
                &config.preset(),
                &output,
                &config.ffmpeg_tools(),
            )?;
            report_result(&result);
            Ok(())
        }
        Commands::Spin {
            manifest,
            output,
            flags,
        } => {
            let deck = load_deck_manifest(&manifest)?;
            let options = build_options(config, &flags, Some(&deck.default_voice))?;
            let deck = validate_deck(deck)?;
            run_spin_on_deck(deck, &options, config, &output)
        }
        Commands::Narrate {
            markdown,
            images_dir,
            renderer,
            images,
            output,
            flags,
        } => {
            let options = build_options(config, &flags, None)?;
            let source = if let Some(dir) = images_dir {
                ImageSource::Directory(dir)
            } else if let Some(cmd) = renderer {
                ImageSource::Renderer(cmd)
            } else if !images.is_empty() {
                ImageSource::Provided(images)
            } else {
                return Err(PipelineError::BadOptions(
                    "narrate needs --images-dir, --renderer, or --images".to_string(),
                ));
            };
            let engine = config.build_engine(&options.voice.engine)?;
            let result = pipeline::narrate(
                &markdown,
                source,
                &options,
                engine.as_ref(),
                &output,
                &config.ffmpeg_tools(),
            )?;
            report_result(&result);
            Ok(())
        }
        Commands::Pptx {
            pptx,
            output,
            dpi,
            flags,
        } => {
            let options = build_options(config, &flags, None)?;
            let workdir = tempfile::Builder::new()
                .prefix("slidecast-pptx-")
                .tempdir()
                .map_err(|source| PipelineError::Io {
                    path: std::env::temp_dir(),
                    source,
                })?;
            let deck = ingest::pptx_to_deck(
                &pptx,
                dpi.unwrap_or(ingest::DEFAULT_DPI),
                options.voice.clone(),
                &config.ingest_tools(),
                workdir.path(),
            )?;
            let result = run_spin_on_deck(deck, &options, config, &output);
            if options.keep_temps || result.is_err() {
                let kept = workdir.keep();
                log::warn!("work directory retained: {}", kept.display());
            }
            result
        }
        Commands::Gslides {
            doc_id,
            output,
            dpi,
            flags,
        } => {
            let options = build_options(config, &flags, None)?;
            let workdir = tempfile::Builder::new()
                .prefix("slidecast-gslides-")
                .tempdir()
                .map_err(|source| PipelineError::Io {
                    path: std::env::temp_dir(),
                    source,
                })?;
            let deck = ingest::gs_to_deck(
                &doc_id,
                dpi.unwrap_or(ingest::DEFAULT_DPI),
                options.voice.clone(),
                &config.gslides_endpoint,
                &config.ingest_tools(),
                workdir.path(),
            )?;
            let result = run_spin_on_deck(deck, &options, config, &output);
            if options.keep_temps || result.is_err() {
                let kept = workdir.keep();
                log::warn!("work directory retained: {}", kept.display());
            }
            result
        }
        Commands::Voices { engine } => {
            let engine_name = engine.unwrap_or_else(|| config.default_engine.clone());
            let engine = config.build_engine(&engine_name)?;
            let voices = engine.list_voices()?;
            println!("{:<12} {:<10} {:<10} engine", "voice", "language", "gender");
            for v in voices {
                println!(
                    "{:<12} {:<10} {:<10} {}",
                    v.voice_id, v.language_tag, v.gender_label, v.engine
                );
            }
            Ok(())
        }
        Commands::Doctor => {
            let report = pipeline::doctor(config);
            for check in &report.checks {
                if check.ok {
                    println!("PASS {:<14} {}", check.name, check.detail);
                } else {
                    println!("FAIL {:<14} {}", check.name, check.detail);
                    if let Some(remedy) = &check.remedy {
                        println!("     remedy: {remedy}");
                    }
                }
            }
            println!(
                "{} of {} checks passed",
                report.checks.iter().filter(|c| c.ok).count(),
                report.checks.len()
            );
            Ok(())
        }
        Commands::Capabilities { kind } => {
            let kind = match kind {
                CapKind::Muxers => CapabilityKind::Muxer,
                CapKind::Vcodecs => CapabilityKind::VideoCodec,
                CapKind::Acodecs => CapabilityKind::AudioCodec,
            };
            let ffmpeg: PathBuf = PathBuf::from(&config.ffmpeg_path);
            let caps = render::ffmpeg_capabilities(kind, &ffmpeg)?;
            for cap in caps {
                println!(
                    "{}{} {:<20} {}",
                    if cap.decode { 'D' } else { '.' },
                    if cap.encode { 'E' } else { '.' },
                    cap.name,
                    cap.description
                );
            }
            Ok(())
        }
    }
}
