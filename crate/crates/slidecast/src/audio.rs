//! PCM WAV reading, writing, generation, and concatenation, plus FFmpeg-backed
//! normalization of arbitrary synthesizer output into the internal standard
//! format (22050 Hz, mono, 16-bit).

use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

/// Sample rate every synthesis path converges to.
pub const STANDARD_SAMPLE_RATE: u32 = 22_050;
/// Channel count of the internal standard format.
pub const STANDARD_CHANNELS: u16 = 1;
/// The only bit depth used internally.
pub const BIT_DEPTH: u16 = 16;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("not a RIFF/WAVE file: {0}")]
    NotWav(PathBuf),
    #[error("corrupt WAV header in {path}: {detail}")]
    CorruptHeader { path: PathBuf, detail: String },
    #[error("unsupported WAV encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("audio I/O failed for {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("cannot concatenate mixed formats: {expected_rate} Hz/{expected_channels}ch vs {found_rate} Hz/{found_channels}ch")]
    MixedFormats {
        expected_rate: u32,
        expected_channels: u16,
        found_rate: u32,
        found_channels: u16,
    },
    #[error("ffmpeg executable not found at {0}")]
    FfmpegMissing(PathBuf),
    #[error("audio decode failed: {detail}")]
    DecodeFailure { detail: String },
}

/// Interleaved signed 16-bit PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveAudio {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<i16>,
}

impl WaveAudio {
    /// Wrap raw interleaved samples. The sample count must divide evenly by
    /// the channel count.
    pub fn new(sample_rate: u32, channels: u16, samples: Vec<i16>) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        assert!(channels == 1 || channels == 2, "channels must be 1 or 2");
        assert!(
            samples.len() % channels as usize == 0,
            "sample count must be divisible by channel count"
        );
        WaveAudio {
            sample_rate,
            channels,
            samples,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration(&self) -> f64 {
        self.frame_count() as f64 / self.sample_rate as f64
    }

    pub fn is_standard(&self) -> bool {
        self.sample_rate == STANDARD_SAMPLE_RATE && self.channels == STANDARD_CHANNELS
    }
}

/// Seconds of audio in a segment: frames divided by sample rate.
pub fn duration(audio: &WaveAudio) -> f64 {
    audio.duration()
}

/// Decode a WAV file into 16-bit PCM. 8-, 24-, and 32-bit integer input is
/// widened or narrowed; float input is clamped to full scale first.
pub fn read_wav(path: &Path) -> Result<WaveAudio, AudioError> {
    let header = std::fs::read(path).map_err(|source| AudioError::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    if header.len() < 12 || &header[0..4] != b"RIFF" || &header[8..12] != b"WAVE" {
        return Err(AudioError::NotWav(path.to_path_buf()));
    }

    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound_error(e, path))?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("{} channels (only mono and stereo supported)", spec.channels),
        });
    }

    let samples: Vec<i16> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(e, path))?,
        (hound::SampleFormat::Int, 8) => reader
            .samples::<i8>()
            .map(|s| s.map(|v| (v as i16) << 8))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(e, path))?,
        (hound::SampleFormat::Int, 24) => reader
            .samples::<i32>()
            .map(|s| s.map(|v| (v >> 8) as i16))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(e, path))?,
        (hound::SampleFormat::Int, 32) => reader
            .samples::<i32>()
            .map(|s| s.map(|v| (v >> 16) as i16))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(e, path))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| {
                s.map(|v| {
                    let clamped = v.clamp(-1.0, 1.0);
                    (clamped * i16::MAX as f32).round() as i16
                })
            })
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound_error(e, path))?,
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{:?} at {} bits", format, bits),
            })
        }
    };

    Ok(WaveAudio::new(spec.sample_rate, spec.channels, samples))
}

fn map_hound_error(e: hound::Error, path: &Path) -> AudioError {
    match e {
        // hound surfaces truncated headers/sample data as custom io errors
        hound::Error::IoError(source)
            if matches!(
                source.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other
            ) =>
        {
            AudioError::CorruptHeader {
                path: path.to_path_buf(),
                detail: source.to_string(),
            }
        }
        hound::Error::IoError(source) => AudioError::IoFailure {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::FormatError(detail) => AudioError::CorruptHeader {
            path: path.to_path_buf(),
            detail: detail.to_string(),
        },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "non-PCM or unsupported compression".to_string(),
        },
        other => AudioError::CorruptHeader {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Write canonical RIFF/WAVE 16-bit PCM (44-byte header) and return the path.
pub fn write_wav(audio: &WaveAudio, path: &Path) -> Result<PathBuf, AudioError> {
    let spec = hound::WavSpec {
        channels: audio.channels,
        sample_rate: audio.sample_rate,
        bits_per_sample: BIT_DEPTH,
        sample_format: hound::SampleFormat::Int,
    };
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => AudioError::IoFailure {
            path: path.to_path_buf(),
            source,
        },
        other => AudioError::IoFailure {
            path: path.to_path_buf(),
            source: std::io::Error::other(other.to_string()),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    {
        let mut sample_writer = writer.get_i16_writer(audio.samples.len() as u32);
        for &s in &audio.samples {
            sample_writer.write_sample(s);
        }
        sample_writer.flush().map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)?;
    Ok(path.to_path_buf())
}

/// `round(seconds * sample_rate)` frames of zeros.
pub fn make_silence(seconds: f64, sample_rate: u32, channels: u16) -> Result<WaveAudio, AudioError> {
    if seconds < 0.0 || !seconds.is_finite() {
        return Err(AudioError::NegativeDuration(seconds));
    }
    let frames = (seconds * sample_rate as f64).round() as usize;
    Ok(WaveAudio::new(
        sample_rate,
        channels,
        vec![0i16; frames * channels as usize],
    ))
}

/// Concatenate segments in order, appending `pad_seconds` of silence after
/// each one. All segments must share a sample rate and channel count.
pub fn concat_audio(segments: &[WaveAudio], pad_seconds: f64) -> Result<WaveAudio, AudioError> {
    if pad_seconds < 0.0 {
        return Err(AudioError::NegativeDuration(pad_seconds));
    }
    let Some(first) = segments.first() else {
        return Ok(WaveAudio::new(STANDARD_SAMPLE_RATE, STANDARD_CHANNELS, vec![]));
    };
    let (rate, channels) = (first.sample_rate, first.channels);
    for seg in segments {
        if seg.sample_rate != rate || seg.channels != channels {
            return Err(AudioError::MixedFormats {
                expected_rate: rate,
                expected_channels: channels,
                found_rate: seg.sample_rate,
                found_channels: seg.channels,
            });
        }
    }
    let pad_frames = (pad_seconds * rate as f64).round() as usize;
    let total: usize = segments.iter().map(|s| s.samples.len()).sum::<usize>()
        + segments.len() * pad_frames * channels as usize;
    let mut samples = Vec::with_capacity(total);
    for seg in segments {
        samples.extend_from_slice(&seg.samples);
        samples.extend(std::iter::repeat(0i16).take(pad_frames * channels as usize));
    }
    Ok(WaveAudio::new(rate, channels, samples))
}

/// Decode any FFmpeg-readable audio file and resample/remix it to the
/// internal standard format. Input already in the standard format is read
/// directly without spawning a process.
pub fn normalize_audio(input: &Path, ffmpeg_path: &Path) -> Result<WaveAudio, AudioError> {
    if let Ok(audio) = read_wav(input) {
        if audio.is_standard() {
            return Ok(audio);
        }
    }

    let workdir = tempfile::tempdir().map_err(|source| AudioError::IoFailure {
        path: input.to_path_buf(),
        source,
    })?;
    let out = workdir.path().join("normalized.wav");
    let result = Command::new(ffmpeg_path)
        .arg("-y")
        .arg("-i")
        .arg(input)
        .args(["-ar", "22050", "-ac", "1", "-sample_fmt", "s16"])
        .arg(&out)
        .output();
    let output = match result {
        Ok(o) => o,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(AudioError::FfmpegMissing(ffmpeg_path.to_path_buf()))
        }
        Err(source) => {
            return Err(AudioError::IoFailure {
                path: ffmpeg_path.to_path_buf(),
                source,
            })
        }
    };
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(AudioError::DecodeFailure {
            detail: format!(
                "ffmpeg exited with {}: {}",
                output.status,
                tail(&stderr, 2048)
            ),
        });
    }
    read_wav(&out)
}

/// Decode in-memory audio bytes via [`normalize_audio`]. `hint` is a file
/// extension ("mp3", "wav", ...) used so FFmpeg can identify the container.
pub fn normalize_audio_bytes(
    bytes: &[u8],
    hint: &str,
    ffmpeg_path: &Path,
) -> Result<WaveAudio, AudioError> {
    let workdir = tempfile::tempdir().map_err(|source| AudioError::IoFailure {
        path: PathBuf::from("<tempdir>"),
        source,
    })?;
    let input = workdir.path().join(format!("input.{hint}"));
    std::fs::write(&input, bytes).map_err(|source| AudioError::IoFailure {
        path: input.clone(),
        source,
    })?;
    normalize_audio(&input, ffmpeg_path)
}

fn tail(s: &str, max: usize) -> &str {
    if s.len() <= max {
        s
    } else {
        let mut start = s.len() - max;
        while !s.is_char_boundary(start) {
            start += 1;
        }
        &s[start..]
    }
}
