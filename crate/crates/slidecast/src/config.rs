//! Configuration: a `slidecast.toml` (or JSON) file, environment-variable
//! overrides, and construction of tool paths and synthesizer engines from
//! the resolved settings. Precedence is flags over environment over file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::ingest::IngestTools;
use crate::render::{FfmpegTools, Quality, RenderPreset};
use crate::tts::{OfflineSynthesizer, PollyCredentials, PollySynthesizer, Synthesizer, TtsError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetSection {
    container: Option<String>,
    video_codec: Option<String>,
    audio_codec: Option<String>,
    pixel_format: Option<String>,
    fps: Option<u32>,
    crf: Option<u32>,
    bitrate: Option<String>,
    divisible_dims: Option<bool>,
    #[serde(default)]
    extra_args: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsSection {
    subtitles: Option<bool>,
    pad_seconds: Option<f64>,
    tts_concurrency: Option<usize>,
    keep_temps: Option<bool>,
    caption_line_chars: Option<usize>,
    engine: Option<String>,
    voice: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    ffmpeg_path: Option<String>,
    probe_path: Option<String>,
    soffice_path: Option<String>,
    pdftoppm_path: Option<String>,
    polly_endpoint: Option<String>,
    gslides_endpoint: Option<String>,
    cache_dir: Option<String>,
    aws_credentials_file: Option<String>,
    #[serde(default)]
    preset: PresetSection,
    #[serde(default)]
    options: OptionsSection,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub ffmpeg_path: String,
    pub probe_path: String,
    pub soffice_path: String,
    pub pdftoppm_path: String,
    pub polly_endpoint: Option<String>,
    pub gslides_endpoint: String,
    pub cache_dir: PathBuf,
    pub aws_credentials_file: Option<PathBuf>,
    pub default_subtitles: bool,
    pub default_pad_seconds: f64,
    pub default_tts_concurrency: usize,
    pub default_keep_temps: bool,
    pub default_caption_line_chars: usize,
    pub default_engine: String,
    pub default_voice: Option<String>,
    preset: PresetSection,
}

fn env_override(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn default_cache_dir() -> PathBuf {
    if let Some(xdg) = env_override("XDG_CACHE_HOME") {
        return PathBuf::from(xdg).join("slidecast");
    }
    if let Some(home) = env_override("HOME") {
        return PathBuf::from(home).join(".cache").join("slidecast");
    }
    std::env::temp_dir().join("slidecast-cache")
}

impl Config {
    /// Load configuration. An explicit path wins; otherwise
    /// `./slidecast.toml` is used when present; otherwise defaults. A
    /// `.json` extension selects the JSON equivalent of the same schema.
    /// `SLIDECAST_*` environment variables override file values.
    pub fn load(explicit: Option<&Path>) -> Result<Config, ConfigError> {
        let file = match explicit {
            Some(path) => Some(Self::read_file(path)?),
            None => {
                let default = Path::new("slidecast.toml");
                if default.is_file() {
                    Some(Self::read_file(default)?)
                } else {
                    None
                }
            }
        };
        Ok(Self::resolve(file.unwrap_or_default()))
    }

    fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })
        }
    }

    fn resolve(file: FileConfig) -> Config {
        Config {
            ffmpeg_path: env_override("SLIDECAST_FFMPEG_PATH")
                .or(file.ffmpeg_path)
                .unwrap_or_else(|| "ffmpeg".to_string()),
            probe_path: env_override("SLIDECAST_PROBE_PATH")
                .or(file.probe_path)
                .unwrap_or_else(|| "ffprobe".to_string()),
            soffice_path: env_override("SLIDECAST_SOFFICE_PATH")
                .or(file.soffice_path)
                .unwrap_or_else(|| "soffice".to_string()),
            pdftoppm_path: env_override("SLIDECAST_PDFTOPPM_PATH")
                .or(file.pdftoppm_path)
                .unwrap_or_else(|| "pdftoppm".to_string()),
            polly_endpoint: env_override("SLIDECAST_POLLY_ENDPOINT").or(file.polly_endpoint),
            gslides_endpoint: env_override("SLIDECAST_GSLIDES_ENDPOINT")
                .or(file.gslides_endpoint)
                .unwrap_or_else(|| crate::ingest::GOOGLE_DOCS_BASE.to_string()),
            cache_dir: env_override("SLIDECAST_CACHE_DIR")
                .or(file.cache_dir)
                .map(PathBuf::from)
                .unwrap_or_else(default_cache_dir),
            aws_credentials_file: file.aws_credentials_file.map(PathBuf::from),
            default_subtitles: file.options.subtitles.unwrap_or(true),
            default_pad_seconds: file.options.pad_seconds.unwrap_or(0.5),
            default_tts_concurrency: file.options.tts_concurrency.unwrap_or(4),
            default_keep_temps: file.options.keep_temps.unwrap_or(false),
            default_caption_line_chars: file
                .options
                .caption_line_chars
                .unwrap_or(crate::subtitles::DEFAULT_LINE_CHARS),
            default_engine: file.options.engine.unwrap_or_else(|| "offline".to_string()),
            default_voice: file.options.voice,
            preset: file.preset,
        }
    }

    pub fn ffmpeg_tools(&self) -> FfmpegTools {
        FfmpegTools::new(&self.ffmpeg_path, &self.probe_path)
    }

    pub fn ingest_tools(&self) -> IngestTools {
        IngestTools {
            converter: self.soffice_path.clone(),
            rasterizer: self.pdftoppm_path.clone(),
        }
    }

    /// The render preset with config-file overrides applied to the defaults.
    pub fn preset(&self) -> RenderPreset {
        let mut preset = RenderPreset::default();
        let section = &self.preset;
        if let Some(v) = &section.container {
            preset.container = v.clone();
        }
        if let Some(v) = &section.video_codec {
            preset.video_codec = v.clone();
        }
        if let Some(v) = &section.audio_codec {
            preset.audio_codec = v.clone();
        }
        if let Some(v) = &section.pixel_format {
            preset.pixel_format = v.clone();
        }
        if let Some(v) = section.fps {
            preset.fps = v;
        }
        if let Some(rate) = &section.bitrate {
            preset.quality = Quality::Bitrate(rate.clone());
        } else if let Some(crf) = section.crf {
            preset.quality = Quality::Crf(crf);
        }
        if let Some(v) = section.divisible_dims {
            preset.divisible_dims = v;
        }
        preset.extra_args = section.extra_args.clone();
        preset
    }

    /// Construct a synthesizer by registered engine name.
    pub fn build_engine(&self, engine: &str) -> Result<Box<dyn Synthesizer>, TtsError> {
        match engine {
            "offline" => Ok(Box::new(OfflineSynthesizer::new())),
            "polly" => {
                let credentials = match &self.aws_credentials_file {
                    Some(path) => PollyCredentials::from_credentials_file(path),
                    None => PollyCredentials::from_env(),
                };
                let endpoint = self
                    .polly_endpoint
                    .clone()
                    .or_else(|| credentials.as_ref().ok().map(|c| c.default_endpoint()))
                    .unwrap_or_else(|| "https://polly.us-east-1.amazonaws.com".to_string());
                Ok(Box::new(PollySynthesizer::new(
                    endpoint,
                    credentials,
                    &self.ffmpeg_path,
                )))
            }
            other => Err(TtsError::UnknownEngine(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply_without_a_file() {
        let config = Config::resolve(FileConfig::default());
        assert_eq!(config.ffmpeg_path, "ffmpeg");
        assert_eq!(config.default_pad_seconds, 0.5);
        assert!(config.default_subtitles);
        assert_eq!(config.default_tts_concurrency, 4);
        assert_eq!(config.preset(), RenderPreset::default());
    }

    #[test]
    fn toml_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slidecast.toml");
        std::fs::write(
            &path,
            r#"
ffmpeg_path = "/opt/ffmpeg"
polly_endpoint = "http://127.0.0.1:9999"

[preset]
fps = 30
bitrate = "2M"

[options]
pad_seconds = 1.0
subtitles = false
"#,
        )
        .unwrap();
        let config = Config::load(Some(&path)).unwrap();
        assert_eq!(config.ffmpeg_path, "/opt/ffmpeg");
        assert_eq!(config.polly_endpoint.as_deref(), Some("http://127.0.0.1:9999"));
        assert_eq!(config.preset().fps, 30);
        assert_eq!(config.preset().quality, Quality::Bitrate("2M".to_string()));
        assert_eq!(config.default_pad_seconds, 1.0);
        assert!(!config.default_subtitles);
    }

    #[test]
    fn json_config_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slidecast.json");
        std::fs::write(
            &path,
            r#"{"ffmpeg_path": "/usr/bin/ffmpeg", "options": {"tts_concurrency": 2}}"#,
        )
        .unwrap();
        let config = Config::load(Some(&path)).unwrap();
        assert_eq!(config.ffmpeg_path, "/usr/bin/ffmpeg");
        assert_eq!(config.default_tts_concurrency, 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slidecast.toml");
        std::fs::write(&path, "fmpeg_path = \"typo\"\n").unwrap();
        assert!(matches!(
            Config::load(Some(&path)),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn unknown_engine_is_an_error() {
        let config = Config::resolve(FileConfig::default());
        assert!(matches!(
            config.build_engine("espeak"),
            Err(TtsError::UnknownEngine(_))
        ));
    }
}
