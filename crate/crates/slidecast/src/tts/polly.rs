//! Polly-compatible cloud synthesizer: JSON REST requests signed with AWS
//! Signature Version 4. The endpoint is overridable so tests can point at a
//! local mock server.

use std::path::PathBuf;
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{AuthCheck, Synthesizer, TtsError, VoiceSpec};
use crate::audio::{self, WaveAudio};

const SERVICE: &str = "polly";
const DEFAULT_MAX_CHARS: usize = 1500;
const RETRY_BACKOFF_MS: [u64; 3] = [500, 1000, 2000];

/// AWS-style credentials. Resolved from the environment or a credentials
/// file, never from command-line flags.
#[derive(Debug, Clone)]
pub struct PollyCredentials {
    pub access_key_id: String,
    pub secret_access_key: String,
    pub region: String,
}

impl PollyCredentials {
    /// Read `AWS_ACCESS_KEY_ID`, `AWS_SECRET_ACCESS_KEY`, and
    /// `AWS_DEFAULT_REGION` (region defaults to us-east-1). On failure the
    /// error lists exactly which variables are missing.
    pub fn from_env() -> Result<Self, String> {
        let mut missing = Vec::new();
        let access_key_id = std::env::var("AWS_ACCESS_KEY_ID").unwrap_or_default();
        if access_key_id.is_empty() {
            missing.push("AWS_ACCESS_KEY_ID");
        }
        let secret_access_key = std::env::var("AWS_SECRET_ACCESS_KEY").unwrap_or_default();
        if secret_access_key.is_empty() {
            missing.push("AWS_SECRET_ACCESS_KEY");
        }
        if !missing.is_empty() {
            return Err(format!(
                "missing environment variables: {}",
                missing.join(", ")
            ));
        }
        let region =
            std::env::var("AWS_DEFAULT_REGION").unwrap_or_else(|_| "us-east-1".to_string());
        Ok(PollyCredentials {
            access_key_id,
            secret_access_key,
            region,
        })
    }

    /// Parse an AWS-style credentials file (`[default]` section with
    /// `aws_access_key_id` / `aws_secret_access_key` / optional `region`).
    pub fn from_credentials_file(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read credentials file {}: {e}", path.display()))?;
        let mut access = None;
        let mut secret = None;
        let mut region = None;
        let mut in_default = false;
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with('[') {
                in_default = line == "[default]";
                continue;
            }
            if !in_default {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let value = value.trim().to_string();
                match key.trim() {
                    "aws_access_key_id" => access = Some(value),
                    "aws_secret_access_key" => secret = Some(value),
                    "region" => region = Some(value),
                    _ => {}
                }
            }
        }
        match (access, secret) {
            (Some(access_key_id), Some(secret_access_key)) => Ok(PollyCredentials {
                access_key_id,
                secret_access_key,
                region: region.unwrap_or_else(|| "us-east-1".to_string()),
            }),
            _ => Err(format!(
                "credentials file {} lacks aws_access_key_id/aws_secret_access_key under [default]",
                path.display()
            )),
        }
    }

    /// The standard Polly endpoint for this region.
    pub fn default_endpoint(&self) -> String {
        format!("https://polly.{}.amazonaws.com", self.region)
    }
}

#[derive(Debug, Deserialize)]
struct VoicesResponse {
    #[serde(rename = "Voices", default)]
    voices: Vec<VoiceEntry>,
}

#[derive(Debug, Deserialize)]
struct VoiceEntry {
    #[serde(rename = "Id")]
    id: String,
    #[serde(rename = "LanguageCode", default)]
    language_code: String,
    #[serde(rename = "Gender", default)]
    gender: String,
}

/// Cloud adapter speaking the Polly REST contract.
pub struct PollySynthesizer {
    endpoint: String,
    credentials: Result<PollyCredentials, String>,
    ffmpeg_path: PathBuf,
    max_chars: usize,
    backoff_ms: Vec<u64>,
    agent: ureq::Agent,
}

impl PollySynthesizer {
    pub fn new(
        endpoint: impl Into<String>,
        credentials: Result<PollyCredentials, String>,
        ffmpeg_path: impl Into<PathBuf>,
    ) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        PollySynthesizer {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            credentials,
            ffmpeg_path: ffmpeg_path.into(),
            max_chars: DEFAULT_MAX_CHARS,
            backoff_ms: RETRY_BACKOFF_MS.to_vec(),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    /// Override the retry backoff schedule (milliseconds per retry).
    pub fn with_backoff(mut self, backoff_ms: Vec<u64>) -> Self {
        self.backoff_ms = backoff_ms;
        self
    }

    fn creds(&self) -> Result<&PollyCredentials, TtsError> {
        self.credentials
            .as_ref()
            .map_err(|diag| TtsError::AuthFailure(diag.clone()))
    }

    fn host(&self) -> String {
        self.endpoint
            .trim_start_matches("https://")
            .trim_start_matches("http://")
            .split('/')
            .next()
            .unwrap_or("localhost")
            .to_string()
    }

    /// Issue a signed request, retrying on 429/5xx per the backoff schedule.
    /// 4xx responses are never retried.
    fn send_signed(
        &self,
        method: &str,
        path: &str,
        body: &[u8],
    ) -> Result<(u16, String, Vec<u8>), TtsError> {
        let creds = self.creds()?;
        let url = format!("{}{}", self.endpoint, path);
        let mut attempt = 0usize;
        loop {
            let datetime = now_amz_datetime();
            let signed = sign_request(&SigningInput {
                method,
                path,
                host: &self.host(),
                content_type: (!body.is_empty()).then_some("application/json"),
                body,
                datetime: &datetime,
                credentials: creds,
                service: SERVICE,
            });

            let result = if method == "GET" {
                let mut req = self.agent.get(&url);
                for (name, value) in &signed {
                    req = req.header(*name, value);
                }
                req.call()
            } else {
                let mut req = self
                    .agent
                    .post(&url)
                    .header("content-type", "application/json");
                for (name, value) in &signed {
                    req = req.header(*name, value);
                }
                req.send(body)
            };

            let mut response = match result {
                Ok(r) => r,
                Err(e) => return Err(TtsError::NetworkFailure(e.to_string())),
            };
            let status = response.status().as_u16();
            if (status == 429 || status >= 500) && attempt < self.backoff_ms.len() {
                log::warn!(
                    "polly returned {status}; retrying in {} ms",
                    self.backoff_ms[attempt]
                );
                std::thread::sleep(Duration::from_millis(self.backoff_ms[attempt]));
                attempt += 1;
                continue;
            }
            let content_type = response
                .headers()
                .get("content-type")
                .and_then(|v| v.to_str().ok())
                .unwrap_or("")
                .to_string();
            let bytes = response
                .body_mut()
                .read_to_vec()
                .map_err(|e| TtsError::NetworkFailure(e.to_string()))?;
            return Ok((status, content_type, bytes));
        }
    }

    fn map_error_status(status: u16, body: &[u8]) -> TtsError {
        let excerpt: String = String::from_utf8_lossy(body).chars().take(512).collect();
        if status == 401 || status == 403 {
            TtsError::AuthFailure(format!("provider returned {status}: {excerpt}"))
        } else {
            TtsError::ProviderError {
                status,
                body: excerpt,
            }
        }
    }

    /// Turn a provider response into standard-format audio. PCM responses
    /// are interpreted as signed 16-bit mono at the requested rate; WAV and
    /// MP3 payloads are decoded and resampled as needed.
    fn decode_audio(
        &self,
        bytes: Vec<u8>,
        content_type: &str,
        output_rate: u32,
    ) -> Result<WaveAudio, TtsError> {
        if bytes.starts_with(b"RIFF") {
            return Ok(audio::normalize_audio_bytes(&bytes, "wav", &self.ffmpeg_path)?);
        }
        let looks_like_mp3 = bytes.starts_with(b"ID3")
            || (bytes.len() >= 2 && bytes[0] == 0xFF && (bytes[1] & 0xE0) == 0xE0);
        if content_type.contains("mpeg") || content_type.contains("mp3") || looks_like_mp3 {
            return Ok(audio::normalize_audio_bytes(&bytes, "mp3", &self.ffmpeg_path)?);
        }
        if bytes.len() % 2 != 0 {
            return Err(TtsError::ProviderError {
                status: 200,
                body: format!("odd PCM payload length {}", bytes.len()),
            });
        }
        let samples: Vec<i16> = bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        let pcm = WaveAudio::new(output_rate, 1, samples);
        if pcm.is_standard() {
            return Ok(pcm);
        }
        let workdir = tempfile::tempdir().map_err(|e| TtsError::NetworkFailure(e.to_string()))?;
        let wav = workdir.path().join("chunk.wav");
        audio::write_wav(&pcm, &wav)?;
        Ok(audio::normalize_audio(&wav, &self.ffmpeg_path)?)
    }
}

impl Synthesizer for PollySynthesizer {
    fn name(&self) -> &'static str {
        "polly"
    }

    fn max_chars(&self) -> usize {
        self.max_chars
    }

    fn check_auth(&self) -> AuthCheck {
        let diag = match &self.credentials {
            Err(diag) => {
                return AuthCheck {
                    ok: false,
                    diagnostic: diag.clone(),
                }
            }
            Ok(_) => match self.list_voices() {
                Ok(voices) => {
                    return AuthCheck {
                        ok: true,
                        diagnostic: format!(
                            "authenticated against {} ({} voices)",
                            self.endpoint,
                            voices.len()
                        ),
                    }
                }
                Err(e) => e.to_string(),
            },
        };
        AuthCheck {
            ok: false,
            diagnostic: diag,
        }
    }

    fn list_voices(&self) -> Result<Vec<VoiceSpec>, TtsError> {
        let (status, _ctype, bytes) = self.send_signed("GET", "/v1/voices", &[])?;
        if !(200..300).contains(&status) {
            return Err(Self::map_error_status(status, &bytes));
        }
        let parsed: VoicesResponse = serde_json::from_slice(&bytes).map_err(|e| {
            TtsError::ProviderError {
                status,
                body: format!("unparseable voice listing: {e}"),
            }
        })?;
        Ok(parsed
            .voices
            .into_iter()
            .map(|v| {
                VoiceSpec::new("polly", &v.id).with_attrs(&v.language_code, &v.gender)
            })
            .collect())
    }

    fn synth_chunk(
        &self,
        text: &str,
        voice: &VoiceSpec,
        output_rate: u32,
    ) -> Result<WaveAudio, TtsError> {
        let body = serde_json::json!({
            "Text": text,
            "VoiceId": voice.voice_id,
            "OutputFormat": "pcm",
            "SampleRate": output_rate.to_string(),
        });
        let body_bytes = serde_json::to_vec(&body).expect("request body serializes");
        let (status, content_type, bytes) = self.send_signed("POST", "/v1/speech", &body_bytes)?;
        if !(200..300).contains(&status) {
            return Err(Self::map_error_status(status, &bytes));
        }
        self.decode_audio(bytes, &content_type, output_rate)
    }
}

struct SigningInput<'a> {
    method: &'a str,
    path: &'a str,
    host: &'a str,
    content_type: Option<&'a str>,
    body: &'a [u8],
    datetime: &'a str,
    credentials: &'a PollyCredentials,
    service: &'a str,
}

fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

fn hmac_sha256(key: &[u8], data: &[u8]) -> [u8; 32] {
    const BLOCK: usize = 64;
    let mut key_block = [0u8; BLOCK];
    if key.len() > BLOCK {
        key_block[..32].copy_from_slice(&Sha256::digest(key));
    } else {
        key_block[..key.len()].copy_from_slice(key);
    }
    let mut inner = Sha256::new();
    let ipad: Vec<u8> = key_block.iter().map(|b| b ^ 0x36).collect();
    inner.update(&ipad);
    inner.update(data);
    let inner_hash = inner.finalize();

    let mut outer = Sha256::new();
    let opad: Vec<u8> = key_block.iter().map(|b| b ^ 0x5c).collect();
    outer.update(&opad);
    outer.update(inner_hash);
    outer.finalize().into()
}

/// Produce the headers for an AWS Signature Version 4 signed request:
/// `authorization` and `x-amz-date`. Signed headers are host, x-amz-date,
/// and content-type when a body is present.
fn sign_request(input: &SigningInput<'_>) -> Vec<(&'static str, String)> {
    let date = &input.datetime[..8];
    let payload_hash = sha256_hex(input.body);

    let mut headers: Vec<(String, String)> = vec![
        ("host".to_string(), input.host.to_string()),
        ("x-amz-date".to_string(), input.datetime.to_string()),
    ];
    if let Some(ct) = input.content_type {
        headers.push(("content-type".to_string(), ct.to_string()));
    }
    headers.sort_by(|a, b| a.0.cmp(&b.0));

    let canonical_headers: String = headers
        .iter()
        .map(|(k, v)| format!("{k}:{v}\n"))
        .collect();
    let signed_headers = headers
        .iter()
        .map(|(k, _)| k.as_str())
        .collect::<Vec<_>>()
        .join(";");

    let canonical_request = format!(
        "{}\n{}\n\n{}\n{}\n{}",
        input.method, input.path, canonical_headers, signed_headers, payload_hash
    );

    let scope = format!(
        "{date}/{}/{}/aws4_request",
        input.credentials.region, input.service
    );
    let string_to_sign = format!(
        "AWS4-HMAC-SHA256\n{}\n{scope}\n{}",
        input.datetime,
        sha256_hex(canonical_request.as_bytes())
    );

    let k_date = hmac_sha256(
        format!("AWS4{}", input.credentials.secret_access_key).as_bytes(),
        date.as_bytes(),
    );
    let k_region = hmac_sha256(&k_date, input.credentials.region.as_bytes());
    let k_service = hmac_sha256(&k_region, input.service.as_bytes());
    let k_signing = hmac_sha256(&k_service, b"aws4_request");
    let signature = hex::encode(hmac_sha256(&k_signing, string_to_sign.as_bytes()));

    let authorization = format!(
        "AWS4-HMAC-SHA256 Credential={}/{scope}, SignedHeaders={signed_headers}, Signature={signature}",
        input.credentials.access_key_id
    );
    vec![
        ("authorization", authorization),
        ("x-amz-date", input.datetime.to_string()),
    ]
}

/// Current UTC time in the ISO 8601 basic format AWS expects
/// (e.g. `20260301T120000Z`).
fn now_amz_datetime() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default()
        .as_secs();
    let days = secs / 86_400;
    let (year, month, day) = civil_from_days(days as i64);
    let tod = secs % 86_400;
    format!(
        "{year:04}{month:02}{day:02}T{:02}{:02}{:02}Z",
        tod / 3600,
        (tod % 3600) / 60,
        tod % 60
    )
}

/// Days since the Unix epoch to (year, month, day), via Howard Hinnant's
/// civil_from_days algorithm.
fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
