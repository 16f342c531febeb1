//! Seeded synthetic scenes with exact ground-truth masks.
//!
//! A scene is a textured background, a few clutter blobs, one target shape and
//! a number of distractor shapes whose colors are blended toward the target's
//! so that look-alikes can share its box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pinpoint_core::{Image, Mask};

use super::{BenchError, Sample};
use crate::backends::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Disk,
    Square,
    Diamond,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Disk, Shape::Square, Shape::Diamond];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Square => "square",
            Shape::Diamond => "diamond",
        }
    }

    fn contains(self, dx: f64, dy: f64, r: f64) -> bool {
        match self {
            Shape::Disk => dx * dx + dy * dy <= r * r,
            Shape::Square => dx.abs() <= 0.85 * r && dy.abs() <= 0.85 * r,
            Shape::Diamond => dx.abs() + dy.abs() <= 1.2 * r,
        }
    }

    /// Radius of a disk that contains the shape.
    fn extent(self, r: f64) -> f64 {
        match self {
            Shape::Disk => r,
            Shape::Square => 0.85 * r * std::f64::consts::SQRT_2,
            Shape::Diamond => 1.2 * r,
        }
    }
}

pub const PALETTE: [(&str, [u8; 3]); 8] = [
    ("red", [205, 40, 45]),
    ("green", [45, 165, 70]),
    ("blue", [40, 75, 205]),
    ("yellow", [225, 205, 50]),
    ("purple", [145, 60, 175]),
    ("orange", [235, 135, 30]),
    ("cyan", [40, 195, 205]),
    ("white", [238, 238, 238]),
];

/// Parameters of one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub target_radius: (f64, f64),
    pub distractors: usize,
    /// 0 gives unrelated distractor colors, 1 gives the target's own color.
    pub color_similarity: f64,
    /// 0 keeps distractors disjoint from the target; larger values pull them in.
    pub overlap: f64,
    /// Per-pixel noise amplitude of the background, in 8-bit units.
    pub texture: f64,
    pub clutter: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            target_radius: (14.0, 22.0),
            distractors: 2,
            color_similarity: 0.5,
            overlap: 0.3,
            texture: 10.0,
            clutter: 3,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let (lo, hi) = self.target_radius;
        let bad = |m: &str| Err(BenchError::Spec(m.to_string()));
        if !(lo > 1.0 && hi >= lo) {
            return bad("target_radius must satisfy 1 < lo <= hi");
        }
        if !(0.0..=1.0).contains(&self.color_similarity) {
            return bad("color_similarity must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return bad("overlap must lie in [0, 1)");
        }
        if !(self.texture >= 0.0) {
            return bad("texture must be non-negative");
        }
        let need = 2.0 * (Shape::Square.extent(hi) + 2.0);
        if (self.height as f64) < need || (self.width as f64) < need {
            return bad("canvas too small for the target");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub seed: u64,
    pub spec: SceneSpec,
    pub image: Image,
    pub target: Mask,
    pub distractors: Vec<Mask>,
    pub query: String,
}

impl Scene {
    pub fn to_sample(&self) -> Sample {
        Sample {
            id: self.id.clone(),
            image: self.image.clone(),
            query: self.query.clone(),
            gt: self.target.clone(),
            gt_box: self.target.bounding_box(),
            distractors: self.distractors.clone(),
        }
    }
}

struct Placed {
    shape: Shape,
    cx: f64,
    cy: f64,
    r: f64,
    rgb: [f64; 3],
}

impl Placed {
    fn covers(&self, y: usize, x: usize) -> bool {
        self.shape
            .contains(x as f64 - self.cx, y as f64 - self.cy, self.r)
    }
}

fn blend(a: [u8; 3], b: [u8; 3], t: f64) -> [f64; 3] {
    std::array::from_fn(|i| a[i] as f64 * t + b[i] as f64 * (1.0 - t))
}

fn relation(t: &Placed, d: &Placed) -> &'static str {
    let (dx, dy) = (d.cx - t.cx, d.cy - t.cy);
    if dx.abs() >= dy.abs() {
        if dx > 0.0 {
            "left of"
        } else {
            "right of"
        }
    } else if dy > 0.0 {
        "above"
    } else {
        "below"
    }
}

pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<Scene, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (spec.height, spec.width);

    let shape = Shape::ALL[rng.random_range(0..Shape::ALL.len())];
    let r = rng.random_range(spec.target_radius.0..=spec.target_radius.1);
    let e = shape.extent(r) + 1.0;
    let ci = rng.random_range(0..PALETTE.len());
    let target = Placed {
        shape,
        cx: rng.random_range(e..=w as f64 - 1.0 - e),
        cy: rng.random_range(e..=h as f64 - 1.0 - e),
        r,
        rgb: blend(PALETTE[ci].1, PALETTE[ci].1, 1.0),
    };

    let mut distractors = Vec::with_capacity(spec.distractors);
    let mut names = Vec::with_capacity(spec.distractors);
    for _ in 0..spec.distractors {
        let dshape = Shape::ALL[rng.random_range(0..Shape::ALL.len())];
        let dr = rng.random_range(spec.target_radius.0..=spec.target_radius.1)
            * rng.random_range(0.7..=1.0);
        let de = dshape.extent(dr) + 1.0;
        let mut other = rng.random_range(0..PALETTE.len() - 1);
        if other >= ci {
            other += 1;
        }
        let dist = (target.shape.extent(target.r) + dshape.extent(dr) + 2.0) * (1.0 - spec.overlap);
        let mut placed = None;
        for _ in 0..200 {
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let (cx, cy) = (target.cx + dist * a.cos(), target.cy + dist * a.sin());
            if cx >= de && cy >= de && cx <= w as f64 - 1.0 - de && cy <= h as f64 - 1.0 - de {
                placed = Some((cx, cy));
                break;
            }
        }
        let Some((cx, cy)) = placed else {
            return Err(BenchError::Spec(format!(
                "cannot place distractor in a {h}x{w} canvas"
            )));
        };
        let name = if spec.color_similarity >= 0.5 {
            PALETTE[ci].0
        } else {
            PALETTE[other].0
        };
        names.push((name, dshape.name()));
        distractors.push(Placed {
            shape: dshape,
            cx,
            cy,
            r: dr,
            rgb: blend(PALETTE[ci].1, PALETTE[other].1, spec.color_similarity),
        });
    }

    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(85.0..=145.0));
    let clutter: Vec<Placed> = (0..spec.clutter)
        .map(|_| {
            let cr = rng.random_range(3.0..=7.0);
            let tint: [f64; 3] = std::array::from_fn(|i| {
                (base[i] + rng.random_range(-60.0..=60.0)).clamp(0.0, 255.0)
            });
            Placed {
                shape: Shape::Disk,
                cx: rng.random_range(0.0..w as f64),
                cy: rng.random_range(0.0..h as f64),
                r: cr,
                rgb: tint,
            }
        })
        .collect();

    let amp = spec.texture;
    let mut pixels = Vec::with_capacity(h * w);
    let mut tmask = Vec::with_capacity(h * w);
    let mut dbits = vec![Vec::with_capacity(h * w); distractors.len()];
    for y in 0..h {
        for x in 0..w {
            let (color, noise) = if target.covers(y, x) {
                (target.rgb, 0.25 * amp)
            } else if let Some(d) = distractors.iter().find(|d| d.covers(y, x)) {
                (d.rgb, 0.25 * amp)
            } else if let Some(c) = clutter.iter().find(|c| c.covers(y, x)) {
                (c.rgb, amp)
            } else {
                (base, amp)
            };
            let px: [u8; 3] = std::array::from_fn(|i| {
                let n = if noise > 0.0 {
                    rng.random_range(-noise..=noise)
                } else {
                    0.0
                };
                (color[i] + n).round().clamp(0.0, 255.0) as u8
            });
            pixels.push(px);
            let on_target = target.covers(y, x);
            tmask.push(on_target);
            // Each distractor owns the pixels where it is the visible layer.
            let owner = if on_target {
                None
            } else {
                distractors.iter().position(|d| d.covers(y, x))
            };
            for (k, bits) in dbits.iter_mut().enumerate() {
                bits.push(owner == Some(k));
            }
        }
    }

    let query = match (distractors.first(), names.first()) {
        (Some(d), Some((dn, ds))) => format!(
            "the {} {} {} the {} {}",
            PALETTE[ci].0,
            shape.name(),
            relation(&target, d),
            dn,
            ds
        ),
        _ => format!("the {} {}", PALETTE[ci].0, shape.name()),
    };
    Ok(Scene {
        id: format!("scene-{seed:016x}"),
        seed,
        spec: spec.clone(),
        image: Image::new(h, w, pixels).map_err(|e| BenchError::Spec(e.to_string()))?,
        target: Mask::new(h, w, tmask).map_err(|e| BenchError::Spec(e.to_string()))?,
        distractors: dbits
            .into_iter()
            .map(|b| Mask::new(h, w, b).map_err(|e| BenchError::Spec(e.to_string())))
            .collect::<Result<_, _>>()?,
        query,
    })
}

/// A reproducible family of scenes with per-scene parameters drawn from ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    pub count: usize,
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub target_radius: (f64, f64),
    pub distractors: (usize, usize),
    pub color_similarity: (f64, f64),
    pub overlap: (f64, f64),
    pub texture: (f64, f64),
    pub clutter: (usize, usize),
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self::standard()
    }
}

impl SuiteSpec {
    /// The 200-scene suite used by the acceptance tests and the CLI defaults.
    pub fn standard() -> Self {
        Self {
            count: 200,
            seed: 20_240_601,
            height: 128,
            width: 128,
            target_radius: (14.0, 22.0),
            distractors: (1, 3),
            color_similarity: (0.2, 0.8),
            overlap: (0.15, 0.5),
            texture: (4.0, 14.0),
            clutter: (1, 5),
        }
    }

    pub fn scene_spec(&self, index: usize) -> (SceneSpec, u64) {
        let seed = derive_seed(self.seed, &[index as i64]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[-1]));
        let spec = SceneSpec {
            height: self.height,
            width: self.width,
            target_radius: self.target_radius,
            distractors: rng.random_range(self.distractors.0..=self.distractors.1),
            color_similarity: rng.random_range(self.color_similarity.0..=self.color_similarity.1),
            overlap: rng.random_range(self.overlap.0..=self.overlap.1),
            texture: rng.random_range(self.texture.0..=self.texture.1),
            clutter: rng.random_range(self.clutter.0..=self.clutter.1),
        };
        (spec, seed)
    }
}

pub fn generate_suite(suite: &SuiteSpec) -> Result<Vec<Scene>, BenchError> {
    (0..suite.count)
        .map(|i| {
            let (spec, seed) = suite.scene_spec(i);
            let mut s = generate_scene(&spec, seed)?;
            s.id = format!("s{i:04}");
            Ok(s)
        })
        .collect()
}
