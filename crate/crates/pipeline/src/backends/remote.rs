//! HTTP clients for a grammar-capable generation server and a promptable
//! segmentation server.
//!
//! Generation: `POST <url>` with a JSON [`ModelRequest`], answered by
//! `{"text": "..."}`. Segmentation: `POST <url>` with a JSON
//! [`SegmentRequest`], answered by `{"mask": "<base64 PNG>"}`.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use pinpoint_core::io::{image_to_png_bytes, mask_from_png_bytes};
use pinpoint_core::protocol::{
    parse_labeling, parse_localization, render_labeling_prompt, render_localization_prompt, Label,
    PointLabel, LABELING_GRAMMAR, LOCALIZATION_GRAMMAR,
};
use pinpoint_core::{BBox, Image, Mask, Point};

use super::{BackendError, LabelRequest, Localizer, PointLabeler, Segmenter};

pub const ENV_VLM_URL: &str = "PINPOINT_VLM_URL";
pub const ENV_SAM_URL: &str = "PINPOINT_SAM_URL";
pub const ENV_TOKEN: &str = "PINPOINT_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRequest {
    /// Base64-encoded PNG.
    pub image: String,
    pub prompt: String,
    /// EBNF text for structured decoding; `None` requests unconstrained output.
    pub grammar: Option<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub image: String,
    #[serde(rename = "box")]
    pub bbox: [i32; 4],
    pub points: Vec<[i32; 2]>,
    /// 1 for positive, 0 for negative.
    pub labels: Vec<u8>,
    pub multimask_output: bool,
}

#[derive(Debug, Deserialize)]
struct TextResponse {
    text: String,
}

#[derive(Debug, Deserialize)]
struct MaskResponse {
    mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub url: String,
    pub token: Option<String>,
    pub timeout_secs: f64,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            url: String::new(),
            token: None,
            timeout_secs: 120.0,
            temperature: 0.1,
            top_p: 0.9,
            max_new_tokens: 512,
        }
    }
}

impl RemoteConfig {
    /// Reads the URL from `var` and the optional bearer token from the environment.
    pub fn from_env(var: &str) -> Result<Self, BackendError> {
        let url =
            std::env::var(var).map_err(|_| BackendError::Config(format!("{var} is not set")))?;
        Ok(Self {
            url,
            token: std::env::var(ENV_TOKEN).ok(),
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.url.is_empty() {
            return Err(BackendError::Config("endpoint URL is empty".into()));
        }
        if !(self.temperature > 0.0 && self.temperature <= 2.0) {
            return Err(BackendError::Config(
                "temperature must lie in (0, 2]".into(),
            ));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(BackendError::Config("top_p must lie in (0, 1]".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(BackendError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Client {
    agent: ureq::Agent,
    cfg: RemoteConfig,
}

impl Client {
    fn new(cfg: RemoteConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .build()
            .into();
        Ok(Self { agent, cfg })
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        body: &B,
    ) -> Result<R, BackendError> {
        let mut req = self.agent.post(&self.cfg.url);
        if let Some(t) = &self.cfg.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        resp.body_mut()
            .read_json::<R>()
            .map_err(|e| BackendError::Transport(format!("malformed response body: {e}")))
    }

    fn generate(
        &self,
        image_b64: &str,
        prompt: String,
        grammar: Option<&str>,
    ) -> Result<String, BackendError> {
        let body = ModelRequest {
            image: image_b64.to_string(),
            prompt,
            grammar: grammar.map(str::to_string),
            temperature: self.cfg.temperature,
            top_p: self.cfg.top_p,
            max_new_tokens: self.cfg.max_new_tokens,
        };
        Ok(self.post::<_, TextResponse>(&body)?.text)
    }
}

fn encode_image(img: &Image) -> Result<String, BackendError> {
    image_to_png_bytes(img)
        .map(|b| B64.encode(b))
        .map_err(|e| BackendError::Invalid(e.to_string()))
}

fn dims(img: &Image) -> (u32, u32) {
    (img.height() as u32, img.width() as u32)
}

/// Localization through the generation server, with one unconstrained retry
/// when the constrained output does not parse.
#[derive(Debug, Clone)]
pub struct RemoteLocalizer {
    client: Client,
}

impl RemoteLocalizer {
    pub fn new(cfg: RemoteConfig) -> Result<Self, BackendError> {
        Ok(Self {
            client: Client::new(cfg)?,
        })
    }
}

impl Localizer for RemoteLocalizer {
    fn localize(&self, img: &Image, query: &str) -> Result<Vec<BBox>, BackendError> {
        let (h, w) = dims(img);
        let prompt = render_localization_prompt(h, w, query)?;
        let image = encode_image(img)?;
        let text = self
            .client
            .generate(&image, prompt.text.clone(), Some(LOCALIZATION_GRAMMAR))?;
        match parse_localization(&text) {
            Ok(r) => Ok(r.boxes),
            Err(e) if e.is_syntax() => {
                let retry = self.client.generate(&image, prompt.text, None)?;
                // A second unparseable answer discards the sample.
                Ok(parse_localization(&retry)
                    .map(|r| r.boxes)
                    .unwrap_or_default())
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Point labeling through the generation server; the per-box requests of one
/// image are sent concurrently and the call returns when all have answered.
#[derive(Debug, Clone)]
pub struct RemoteLabeler {
    client: Client,
}

impl RemoteLabeler {
    pub fn new(cfg: RemoteConfig) -> Result<Self, BackendError> {
        Ok(Self {
            client: Client::new(cfg)?,
        })
    }

    fn label_one(
        &self,
        image: &str,
        h: u32,
        w: u32,
        query: &str,
        r: &LabelRequest<'_>,
    ) -> Result<Vec<PointLabel>, BackendError> {
        let prompt = render_labeling_prompt(h, w, query, &r.bbox, r.points)?;
        let text = self
            .client
            .generate(image, prompt.text, Some(LABELING_GRAMMAR))?;
        Ok(parse_labeling(&text, r.points.len())?.labels)
    }
}

impl PointLabeler for RemoteLabeler {
    fn label_batch(
        &self,
        img: &Image,
        query: &str,
        requests: &[LabelRequest<'_>],
    ) -> Vec<Result<Vec<PointLabel>, BackendError>> {
        let image = match encode_image(img) {
            Ok(i) => i,
            Err(e) => {
                return requests
                    .iter()
                    .map(|_| Err(BackendError::Invalid(e.to_string())))
                    .collect()
            }
        };
        let (h, w) = dims(img);
        std::thread::scope(|s| {
            let handles: Vec<_> = requests
                .iter()
                .map(|r| {
                    let image = &image;
                    s.spawn(move || self.label_one(image, h, w, query, r))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join().unwrap_or_else(|_| {
                        Err(BackendError::Transport("labeling worker panicked".into()))
                    })
                })
                .collect()
        })
    }
}

/// Single-mask segmentation through a remote promptable segmenter.
#[derive(Debug, Clone)]
pub struct RemoteSegmenter {
    client: Client,
}

impl RemoteSegmenter {
    pub fn new(cfg: RemoteConfig) -> Result<Self, BackendError> {
        Ok(Self {
            client: Client::new(cfg)?,
        })
    }
}

impl Segmenter for RemoteSegmenter {
    fn segment(
        &self,
        img: &Image,
        bbox: &BBox,
        points: &[Point],
        labels: &[Label],
    ) -> Result<Mask, BackendError> {
        if points.len() != labels.len() {
            return Err(BackendError::Invalid(
                "points and labels differ in length".into(),
            ));
        }
        let body = SegmentRequest {
            image: encode_image(img)?,
            bbox: [bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max],
            points: points.iter().map(|p| [p.x, p.y]).collect(),
            labels: labels
                .iter()
                .map(|&l| u8::from(l == Label::Positive))
                .collect(),
            multimask_output: false,
        };
        let resp: MaskResponse = self.client.post(&body)?;
        let bytes = B64
            .decode(resp.mask.as_bytes())
            .map_err(|e| BackendError::Transport(format!("mask is not base64: {e}")))?;
        let mask =
            mask_from_png_bytes(&bytes).map_err(|e| BackendError::Transport(e.to_string()))?;
        if mask.height() != img.height() || mask.width() != img.width() {
            return Err(BackendError::Transport(
                "mask size differs from the image".into(),
            ));
        }
        Ok(mask)
    }
}
