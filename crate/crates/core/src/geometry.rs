//! Integer pixel geometry: boxes with inclusive corners and points.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Axis-aligned box with inclusive integer corners, `x_min < x_max` and `y_min < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: i32,
    pub y_min: i32,
    pub x_max: i32,
    pub y_max: i32,
}

/// An integer pixel location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Squared Euclidean distance, exact in integers.
    #[inline]
    pub fn dist2(&self, other: &Point) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }
}

impl BBox {
    pub fn new(x_min: i32, y_min: i32, x_max: i32, y_max: i32) -> Result<Self> {
        let b = Self::from_corners_unchecked(x_min, y_min, x_max, y_max);
        if x_min >= x_max {
            return Err(b.invalid("x_min must be < x_max"));
        }
        if y_min >= y_max {
            return Err(b.invalid("y_min must be < y_max"));
        }
        Ok(b)
    }

    pub const fn from_corners_unchecked(x_min: i32, y_min: i32, x_max: i32, y_max: i32) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub(crate) fn invalid(&self, reason: &'static str) -> CoreError {
        CoreError::InvalidBox {
            x_min: self.x_min as i64,
            y_min: self.y_min as i64,
            x_max: self.x_max as i64,
            y_max: self.y_max as i64,
            reason,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    /// Center `((x_min + x_max) / 2, (y_min + y_max) / 2)`.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min as f64 + self.x_max as f64) / 2.0,
            (self.y_min as f64 + self.y_max as f64) / 2.0,
        )
    }

    /// Corner-to-corner length `sqrt((x_max - x_min)^2 + (y_max - y_min)^2)`.
    pub fn diagonal(&self) -> f64 {
        let w = (self.x_max - self.x_min) as f64;
        let h = (self.y_max - self.y_min) as f64;
        w.hypot(h)
    }

    /// Number of pixel columns covered (corners inclusive).
    #[inline]
    pub fn width_px(&self) -> usize {
        (self.x_max - self.x_min + 1) as usize
    }

    /// Number of pixel rows covered (corners inclusive).
    #[inline]
    pub fn height_px(&self) -> usize {
        (self.y_max - self.y_min + 1) as usize
    }

    pub fn area_px(&self) -> usize {
        self.width_px() * self.height_px()
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Strictly inside: excludes the outermost row and column on every side.
    #[inline]
    pub fn interior_contains(&self, p: &Point) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x_min >= self.x_min
            && other.y_min >= self.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }

    /// Intersection with `bounds`, `None` when the result is not a valid box.
    pub fn clip_to(&self, bounds: &BBox) -> Option<BBox> {
        let b = BBox::from_corners_unchecked(
            self.x_min.max(bounds.x_min),
            self.y_min.max(bounds.y_min),
            self.x_max.min(bounds.x_max),
            self.y_max.min(bounds.y_max),
        );
        b.is_valid().then_some(b)
    }

    /// Interior pixels in row-major order.
    pub fn interior_points(&self) -> impl Iterator<Item = Point> + '_ {
        ((self.y_min + 1)..self.y_max)
            .flat_map(move |y| ((self.x_min + 1)..self.x_max).map(move |x| Point::new(x, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_and_diagonal() {
        let b = BBox::new(0, 0, 30, 40).unwrap();
        assert_eq!(b.center(), (15.0, 20.0));
        assert_eq!(b.diagonal(), 50.0);
        assert_eq!(b.width_px(), 31);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(BBox::new(5, 0, 5, 10).is_err());
        assert!(BBox::new(0, 9, 5, 3).is_err());
    }

    #[test]
    fn interior_excludes_border() {
        let b = BBox::new(0, 0, 3, 3).unwrap();
        let pts: Vec<_> = b.interior_points().collect();
        assert_eq!(
            pts,
            vec![
                Point::new(1, 1),
                Point::new(2, 1),
                Point::new(1, 2),
                Point::new(2, 2)
            ]
        );
        assert!(!b.interior_contains(&Point::new(0, 2)));
        assert!(b.contains(&Point::new(0, 2)));
    }

    #[test]
    fn clip() {
        let bounds = BBox::new(0, 0, 99, 99).unwrap();
        assert_eq!(
            BBox::new(-5, 10, 50, 120).unwrap().clip_to(&bounds),
            Some(BBox::new(0, 10, 50, 99).unwrap())
        );
        assert_eq!(BBox::new(100, 0, 120, 5).unwrap().clip_to(&bounds), None);
    }
}
