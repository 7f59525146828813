//! Deterministic offline synthesizer: a fixed-rate tone whose length is a
//! pure function of word count. Exists so the whole pipeline can run and be
//! tested without provider calls.

use super::{AuthCheck, Synthesizer, TtsError, VoiceSpec};
use crate::audio::{WaveAudio, STANDARD_CHANNELS, STANDARD_SAMPLE_RATE};

/// Speaking rate the tone length is derived from.
const WORDS_PER_SECOND: f64 = 2.5;
/// Shortest tone emitted, in seconds.
const MIN_SECONDS: f64 = 0.4;
/// Tone amplitude as a fraction of full scale.
const AMPLITUDE: f64 = 0.3;

/// Sine approximation built from plain f64 arithmetic so output bytes are
/// identical across platforms (libm's `sin` is not bit-stable everywhere).
fn det_sin(x: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    let mut r = x % TAU;
    if r > PI {
        r -= TAU;
    } else if r < -PI {
        r += TAU;
    }
    // fold into [-pi/2, pi/2] where the Taylor series converges fast
    if r > FRAC_PI_2 {
        r = PI - r;
    } else if r < -FRAC_PI_2 {
        r = -PI - r;
    }
    let x2 = r * r;
    // Taylor series through x^11; worst-case error ~1e-7 at |x| = pi/2.
    r * (1.0
        + x2 * (-1.0 / 6.0
            + x2 * (1.0 / 120.0
                + x2 * (-1.0 / 5040.0 + x2 * (1.0 / 362_880.0 + x2 * (-1.0 / 39_916_800.0))))))
}

/// Generate the deterministic tone for a piece of text: duration is
/// `max(0.4, words / 2.5)` seconds; the waveform is a 440 Hz sine for voice
/// "OfflineA" (330 Hz for "OfflineB") at 0.3 full scale, 22050 Hz mono.
pub fn synthesize_offline(text: &str, voice_id: &str) -> WaveAudio {
    let words = text.split_whitespace().count();
    let seconds = (words as f64 / WORDS_PER_SECOND).max(MIN_SECONDS);
    let frames = (seconds * STANDARD_SAMPLE_RATE as f64).round() as usize;
    let freq = if voice_id == "OfflineB" { 330.0 } else { 440.0 };
    let step = std::f64::consts::TAU * freq / STANDARD_SAMPLE_RATE as f64;
    let amp = AMPLITUDE * i16::MAX as f64;
    let samples = (0..frames)
        .map(|n| (amp * det_sin(step * n as f64)).round() as i16)
        .collect();
    WaveAudio::new(STANDARD_SAMPLE_RATE, STANDARD_CHANNELS, samples)
}

/// The always-available test-double engine with a fixed two-voice inventory.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineSynthesizer;

impl OfflineSynthesizer {
    pub fn new() -> Self {
        OfflineSynthesizer
    }
}

impl Synthesizer for OfflineSynthesizer {
    fn name(&self) -> &'static str {
        "offline"
    }

    fn max_chars(&self) -> usize {
        100_000
    }

    fn check_auth(&self) -> AuthCheck {
        AuthCheck {
            ok: true,
            diagnostic: "offline engine requires no credentials".to_string(),
        }
    }

    fn list_voices(&self) -> Result<Vec<VoiceSpec>, TtsError> {
        Ok(vec![
            VoiceSpec::new("offline", "OfflineA").with_attrs("en-US", "Female"),
            VoiceSpec::new("offline", "OfflineB").with_attrs("en-GB", "Male"),
        ])
    }

    fn synth_chunk(
        &self,
        text: &str,
        voice: &VoiceSpec,
        _output_rate: u32,
    ) -> Result<WaveAudio, TtsError> {
        Ok(synthesize_offline(text, &voice.voice_id))
    }
}
