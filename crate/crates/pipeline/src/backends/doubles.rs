//! Wrappers used to count dispatches and to inject latency.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use pinpoint_core::protocol::PointLabel;
use pinpoint_core::{BBox, Image};

use super::{BackendError, LabelRequest, Localizer, PointLabeler};

/// Shared dispatch counters.
#[derive(Debug, Default, Clone)]
pub struct CallCounter {
    localize: Arc<AtomicUsize>,
    label: Arc<AtomicUsize>,
}

impl CallCounter {
    pub fn localize_calls(&self) -> usize {
        self.localize.load(Ordering::SeqCst)
    }

    pub fn label_calls(&self) -> usize {
        self.label.load(Ordering::SeqCst)
    }

    pub fn total(&self) -> usize {
        self.localize_calls() + self.label_calls()
    }

    pub fn reset(&self) {
        self.localize.store(0, Ordering::SeqCst);
        self.label.store(0, Ordering::SeqCst);
    }
}

pub struct CountingLocalizer<L> {
    pub inner: L,
    pub counter: CallCounter,
}

impl<L: Localizer> Localizer for CountingLocalizer<L> {
    fn localize(&self, img: &Image, query: &str) -> Result<Vec<BBox>, BackendError> {
        self.counter.localize.fetch_add(1, Ordering::SeqCst);
        self.inner.localize(img, query)
    }
}

pub struct CountingLabeler<P> {
    pub inner: P,
    pub counter: CallCounter,
}

impl<P: PointLabeler> PointLabeler for CountingLabeler<P> {
    fn label_batch(
        &self,
        img: &Image,
        query: &str,
        requests: &[LabelRequest<'_>],
    ) -> Vec<Result<Vec<PointLabel>, BackendError>> {
        self.counter.label.fetch_add(1, Ordering::SeqCst);
        self.inner.label_batch(img, query, requests)
    }
}

pub struct DelayedLocalizer<L> {
    pub inner: L,
    pub delay: Duration,
}

impl<L: Localizer> Localizer for DelayedLocalizer<L> {
    fn localize(&self, img: &Image, query: &str) -> Result<Vec<BBox>, BackendError> {
        std::thread::sleep(self.delay);
        self.inner.localize(img, query)
    }
}

pub struct DelayedLabeler<P> {
    pub inner: P,
    pub delay: Duration,
}

impl<P: PointLabeler> PointLabeler for DelayedLabeler<P> {
    fn label_batch(
        &self,
        img: &Image,
        query: &str,
        requests: &[LabelRequest<'_>],
    ) -> Vec<Result<Vec<PointLabel>, BackendError>> {
        std::thread::sleep(self.delay);
        self.inner.label_batch(img, query, requests)
    }
}

/// Always proposes the same boxes.
#[derive(Debug, Clone)]
pub struct FixedLocalizer {
    pub boxes: Vec<BBox>,
}

impl Localizer for FixedLocalizer {
    fn localize(&self, _img: &Image, _query: &str) -> Result<Vec<BBox>, BackendError> {
        Ok(self.boxes.clone())
    }
}
