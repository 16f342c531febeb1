//! Remote clients against an in-process HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde_json::{json, Value};

use pinpoint_core::io::{image_from_png_bytes, mask_to_png_bytes};
use pinpoint_core::protocol::{Label, LABELING_GRAMMAR, LOCALIZATION_GRAMMAR};
use pinpoint_core::{BBox, Image, Mask, Point};
use pinpoint_pipeline::backends::{
    BackendError, LabelRequest, Localizer, PointLabeler, RemoteConfig, RemoteLabeler,
    RemoteLocalizer, RemoteSegmenter, Segmenter,
};

#[derive(Debug, Clone)]
struct Seen {
    authorization: Option<String>,
    body: Value,
}

type Handler = dyn Fn(usize, &Value) -> (u16, String) + Send + Sync;

/// Serves one request per connection; `handler` gets the request index and JSON body.
fn serve(handler: Box<Handler>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/generate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let handler: Arc<Handler> = handler.into();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let log = log.clone();
            let handler = handler.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let (mut len, mut auth) = (0usize, None);
                let mut line = String::new();
                loop {
                    line.clear();
                    if reader.read_line(&mut line).unwrap() == 0 {
                        return;
                    }
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = l.split_once(':') {
                        match k.to_ascii_lowercase().as_str() {
                            "content-length" => len = v.trim().parse().unwrap(),
                            "authorization" => auth = Some(v.trim().to_string()),
                            _ => {}
                        }
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let body: Value = serde_json::from_slice(&body).unwrap();
                let index = {
                    let mut g = log.lock().unwrap();
                    g.push(Seen {
                        authorization: auth,
                        body: body.clone(),
                    });
                    g.len() - 1
                };
                let (status, text) = handler(index, &body);
                let mut s = stream;
                write!(
                    s,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                )
                .unwrap();
            });
        }
    });
    (url, seen)
}

fn config(url: &str) -> RemoteConfig {
    RemoteConfig {
        url: url.to_string(),
        token: Some("secret".into()),
        timeout_secs: 10.0,
        ..RemoteConfig::default()
    }
}

fn text(s: &str) -> (u16, String) {
    (200, json!({ "text": s }).to_string())
}

fn image() -> Image {
    Image::from_fn(24, 32, |y, x| [(x * 7) as u8, (y * 9) as u8, 50]).unwrap()
}

#[test]
fn localizer_sends_a_constrained_request_and_parses_boxes() {
    let (url, seen) = serve(Box::new(|_, _| {
        text(r#"{"reasoning":"the cup","boxes":[{"x_min":2,"y_min":3,"x_max":20,"y_max":15}]}"#)
    }));
    let boxes = RemoteLocalizer::new(config(&url))
        .unwrap()
        .localize(&image(), "the cup")
        .unwrap();
    assert_eq!(boxes, vec![BBox::new(2, 3, 20, 15).unwrap()]);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    let b = &seen[0].body;
    assert_eq!(b["grammar"], LOCALIZATION_GRAMMAR);
    assert_eq!(b["temperature"], 0.1);
    assert_eq!(b["top_p"], 0.9);
    assert_eq!(b["max_new_tokens"], 512);
    assert!(b["prompt"].as_str().unwrap().contains("the cup"));
    let png = B64.decode(b["image"].as_str().unwrap()).unwrap();
    assert_eq!(image_from_png_bytes(&png).unwrap(), image());
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer secret"));
}

#[test]
fn localizer_retries_once_without_grammar() {
    let (url, seen) = serve(Box::new(|i, _| {
        if i == 0 {
            text("I think the box is somewhere")
        } else {
            text(r#"{"reasoning":"","boxes":[]}"#)
        }
    }));
    let boxes = RemoteLocalizer::new(config(&url))
        .unwrap()
        .localize(&image(), "q")
        .unwrap();
    assert!(boxes.is_empty());
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert!(seen[1].body["grammar"].is_null());
}

#[test]
fn two_unparseable_answers_discard_the_sample() {
    let (url, seen) = serve(Box::new(|_, _| text("nope")));
    let boxes = RemoteLocalizer::new(config(&url))
        .unwrap()
        .localize(&image(), "q")
        .unwrap();
    assert!(boxes.is_empty());
    assert_eq!(seen.lock().unwrap().len(), 2);
}

#[test]
fn labeler_answers_every_box_of_the_batch() {
    let (url, seen) = serve(Box::new(|_, _| {
        text(
            r#"{"labels":[{"label":"positive","confidence":0.9},{"label":"negative","confidence":0.4}]}"#,
        )
    }));
    let pts = [Point::new(5, 5), Point::new(9, 7)];
    let boxes = [
        BBox::new(1, 1, 12, 12).unwrap(),
        BBox::new(3, 2, 20, 20).unwrap(),
        BBox::new(0, 0, 31, 23).unwrap(),
    ];
    let reqs: Vec<LabelRequest<'_>> = boxes
        .iter()
        .map(|&bbox| LabelRequest { bbox, points: &pts })
        .collect();
    let out = RemoteLabeler::new(config(&url))
        .unwrap()
        .label_batch(&image(), "q", &reqs);
    assert_eq!(out.len(), 3);
    for r in out {
        let labels = r.unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].label, Label::Positive);
        assert_eq!(labels[1].label, Label::Negative);
    }
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    assert!(seen.iter().all(|s| s.body["grammar"] == LABELING_GRAMMAR));
}

#[test]
fn labeler_reports_non_conforming_answers_per_box() {
    let (url, _) = serve(Box::new(|_, _| text(r#"{"labels":[]}"#)));
    let pts = [Point::new(5, 5)];
    let req = [LabelRequest {
        bbox: BBox::new(1, 1, 12, 12).unwrap(),
        points: &pts,
    }];
    let out = RemoteLabeler::new(config(&url))
        .unwrap()
        .label_batch(&image(), "q", &req);
    assert!(matches!(out[0], Err(BackendError::Parse(_))));
}

#[test]
fn segmenter_round_trips_prompts_and_masks() {
    let mask = Mask::from_fn(24, 32, |y, x| x > 4 && y < 10).unwrap();
    let encoded = B64.encode(mask_to_png_bytes(&mask).unwrap());
    let (url, seen) = serve(Box::new(move |_, _| {
        (200, json!({ "mask": encoded }).to_string())
    }));
    let seg = RemoteSegmenter::new(config(&url)).unwrap();
    let b = BBox::new(2, 3, 20, 15).unwrap();
    let got = seg
        .segment(
            &image(),
            &b,
            &[Point::new(4, 5), Point::new(6, 7)],
            &[Label::Positive, Label::Negative],
        )
        .unwrap();
    assert_eq!(got, mask);
    let body = seen.lock().unwrap()[0].body.clone();
    assert_eq!(body["box"], json!([2, 3, 20, 15]));
    assert_eq!(body["points"], json!([[4, 5], [6, 7]]));
    assert_eq!(body["labels"], json!([1, 0]));
    assert_eq!(body["multimask_output"], false);
}

#[test]
fn segmenter_rejects_bad_responses() {
    let small = B64.encode(mask_to_png_bytes(&Mask::from_fn(4, 4, |_, _| true).unwrap()).unwrap());
    let (url, _) = serve(Box::new(move |i, _| match i {
        0 => (200, json!({ "mask": small }).to_string()),
        1 => (500, "{}".into()),
        _ => (200, json!({ "mask": "***" }).to_string()),
    }));
    let seg = RemoteSegmenter::new(config(&url)).unwrap();
    let b = BBox::new(2, 3, 20, 15).unwrap();
    for _ in 0..3 {
        assert!(matches!(
            seg.segment(&image(), &b, &[], &[]),
            Err(BackendError::Transport(_))
        ));
    }
}

#[test]
fn unreachable_server_is_a_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let err = RemoteLocalizer::new(config(&url))
        .unwrap()
        .localize(&image(), "q")
        .unwrap_err();
    assert!(matches!(err, BackendError::Transport(_)));
}

#[test]
fn invalid_configuration_is_rejected_up_front() {
    assert!(matches!(
        RemoteLocalizer::new(RemoteConfig::default()),
        Err(BackendError::Config(_))
    ));
    let mut c = config("http://127.0.0.1:1/");
    c.top_p = 0.0;
    assert!(matches!(
        RemoteSegmenter::new(c),
        Err(BackendError::Config(_))
    ));
}
