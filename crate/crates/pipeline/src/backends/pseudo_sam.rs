//! Deterministic region-growing stand-in for a promptable segmenter.
//!
//! Not a model of SAM's accuracy. It only reproduces the behavior the
//! pipeline relies on: positive points pull their color-coherent region into
//! the mask, negative points claim theirs away from it, and a box-only prompt
//! returns the dominant coherent region inside the box.

use std::collections::VecDeque;

use pinpoint_core::color::{delta_e, rgb_to_lab};
use pinpoint_core::protocol::Label;
use pinpoint_core::{BBox, Image, Mask, Point};

use super::{BackendError, Segmenter};

/// CIELAB distance to the seed color below which a pixel joins a region.
pub const DEFAULT_DELTA_E: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoSam {
    pub max_delta_e: f64,
}

impl Default for PseudoSam {
    fn default() -> Self {
        Self {
            max_delta_e: DEFAULT_DELTA_E,
        }
    }
}

struct BoxLab {
    b: BBox,
    w: usize,
    h: usize,
    lab: Vec<[f64; 3]>,
}

impl BoxLab {
    fn new(img: &Image, b: BBox) -> Self {
        let (w, h) = (b.width_px(), b.height_px());
        let mut lab = Vec::with_capacity(w * h);
        for y in b.y_min..=b.y_max {
            for x in b.x_min..=b.x_max {
                lab.push(rgb_to_lab(img.get(y as usize, x as usize)));
            }
        }
        Self { b, w, h, lab }
    }

    fn index(&self, p: Point) -> usize {
        (p.y - self.b.y_min) as usize * self.w + (p.x - self.b.x_min) as usize
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        let (y, x, w, h) = (i / self.w, i % self.w, self.w, self.h);
        [
            (y > 0).then(|| i - w),
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y + 1 < h).then(|| i + w),
        ]
        .into_iter()
        .flatten()
    }
}

impl PseudoSam {
    pub fn new(max_delta_e: f64) -> Self {
        Self { max_delta_e }
    }

    /// Multi-source breadth-first growth; returns the owning seed per pixel.
    fn grow(&self, bl: &BoxLab, seeds: &[usize]) -> Vec<Option<usize>> {
        let mut owner = vec![None; bl.lab.len()];
        let mut queue = VecDeque::new();
        for (s, &i) in seeds.iter().enumerate() {
            if owner[i].is_none() {
                owner[i] = Some(s);
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let s = owner[i].unwrap();
            let seed_color = bl.lab[seeds[s]];
            for n in bl.neighbors(i) {
                if owner[n].is_none() && delta_e(&bl.lab[n], &seed_color) <= self.max_delta_e {
                    owner[n] = Some(s);
                    queue.push_back(n);
                }
            }
        }
        owner
    }

    /// Largest color-coherent region inside the box (first in row-major order on ties).
    fn dominant_region(&self, bl: &BoxLab) -> Vec<bool> {
        let mut comp = vec![usize::MAX; bl.lab.len()];
        let mut best = (0usize, 0usize);
        let mut queue = VecDeque::new();
        let mut id = 0;
        for start in 0..bl.lab.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let seed_color = bl.lab[start];
            comp[start] = id;
            queue.push_back(start);
            let mut size = 0;
            while let Some(i) = queue.pop_front() {
                size += 1;
                for n in bl.neighbors(i) {
                    if comp[n] == usize::MAX && delta_e(&bl.lab[n], &seed_color) <= self.max_delta_e
                    {
                        comp[n] = id;
                        queue.push_back(n);
                    }
                }
            }
            if size > best.0 {
                best = (size, id);
            }
            id += 1;
        }
        comp.iter().map(|&c| c == best.1).collect()
    }

    /// Region pixel closest to the region's centroid.
    fn central_pixel(bl: &BoxLab, region: &[bool]) -> usize {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for (i, _) in region.iter().enumerate().filter(|(_, &r)| r) {
            sx += (i % bl.w) as f64;
            sy += (i / bl.w) as f64;
            n += 1.0;
        }
        let (cx, cy) = (sx / n, sy / n);
        let d2 = |i: usize| ((i % bl.w) as f64 - cx).powi(2) + ((i / bl.w) as f64 - cy).powi(2);
        region
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| i)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if d2(b) <= d2(i) => Some(b),
                _ => Some(i),
            })
            .unwrap()
    }

    fn paint(img: &Image, bl: &BoxLab, inside: impl Fn(usize) -> bool) -> Mask {
        let mut m = Mask::zeros(img.height(), img.width()).expect("image is non-empty");
        for i in 0..bl.lab.len() {
            if inside(i) {
                m.set(
                    bl.b.y_min as usize + i / bl.w,
                    bl.b.x_min as usize + i % bl.w,
                    true,
                );
            }
        }
        m
    }
}

impl Segmenter for PseudoSam {
    fn segment(
        &self,
        img: &Image,
        bbox: &BBox,
        points: &[Point],
        labels: &[Label],
    ) -> Result<Mask, BackendError> {
        if points.len() != labels.len() {
            return Err(BackendError::Invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let empty = || {
            Mask::zeros(img.height(), img.width()).map_err(|e| BackendError::Invalid(e.to_string()))
        };
        let Some(b) = bbox.clip_to(&img.bounds()).filter(BBox::is_valid) else {
            return empty();
        };
        let bl = BoxLab::new(img, b);
        let prompts: Vec<(usize, Label)> = points
            .iter()
            .zip(labels)
            .filter(|(p, _)| b.contains(p))
            .map(|(p, &l)| (bl.index(*p), l))
            .collect();
        if prompts.is_empty() {
            let region = self.dominant_region(&bl);
            return Ok(Self::paint(img, &bl, |i| region[i]));
        }
        let mut seeds: Vec<usize> = prompts.iter().map(|&(i, _)| i).collect();
        let mut positive: Vec<bool> = prompts.iter().map(|&(_, l)| l == Label::Positive).collect();
        if !positive.iter().any(|&p| p) {
            let region = self.dominant_region(&bl);
            seeds.push(Self::central_pixel(&bl, &region));
            positive.push(true);
        }
        let owner = self.grow(&bl, &seeds);
        Ok(Self::paint(img, &bl, |i| {
            owner[i].is_some_and(|s| positive[s])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_scene() -> (Image, Mask) {
        let inside = |y: usize, x: usize| (x as i32 - 30).pow(2) + (y as i32 - 30).pow(2) <= 144;
        let img = Image::from_fn(60, 60, |y, x| {
            if inside(y, x) {
                [220, 40, 40]
            } else {
                [40, 90, 200]
            }
        })
        .unwrap();
        (img, Mask::from_fn(60, 60, inside).unwrap())
    }

    fn iou(a: &Mask, b: &Mask) -> f64 {
        let (i, u) = a.overlap_counts(b).unwrap();
        i as f64 / u as f64
    }

    #[test]
    fn positive_point_recovers_disk() {
        let (img, gt) = disk_scene();
        let b = BBox::new(10, 10, 50, 50).unwrap();
        let m = PseudoSam::default()
            .segment(&img, &b, &[Point::new(30, 30)], &[Label::Positive])
            .unwrap();
        assert!(iou(&m, &gt) >= 0.95);
    }

    #[test]
    fn box_only_takes_dominant_region() {
        let (img, gt) = disk_scene();
        let b = BBox::new(18, 18, 42, 42).unwrap();
        let m = PseudoSam::default().segment(&img, &b, &[], &[]).unwrap();
        assert!(m.is_subset_of(&gt));
        assert!(m.count() > 300);
    }

    #[test]
    fn negatives_carve_out() {
        let (img, _) = disk_scene();
        let b = BBox::new(10, 10, 50, 50).unwrap();
        let neg = PseudoSam::default()
            .segment(
                &img,
                &b,
                &[Point::new(30, 30), Point::new(12, 12)],
                &[Label::Positive, Label::Negative],
            )
            .unwrap();
        assert!(!neg.get(12, 12));
        assert!(neg.get(30, 30));
    }

    #[test]
    fn mismatched_labels_error() {
        let (img, _) = disk_scene();
        let b = BBox::new(10, 10, 50, 50).unwrap();
        assert!(PseudoSam::default()
            .segment(&img, &b, &[Point::new(30, 30)], &[])
            .is_err());
    }
}
