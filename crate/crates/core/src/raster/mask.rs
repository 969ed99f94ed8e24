use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{edt, RasterError};

/// A `width × height` boolean grid, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

/// Pixel adjacency used for component analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        BinaryMask { width, height, bits: vec![false; width * height] }
    }

    pub fn full(width: usize, height: usize) -> Self {
        let mut m = Self::new(width, height);
        m.bits.fill(true);
        m
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(RasterError::InvalidDimensions { width, height });
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-canvas coordinates read as unset.
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn check_dims(&self, other: &BinaryMask) -> Result<(), RasterError> {
        if self.dims() != other.dims() {
            return Err(RasterError::DimensionMismatch { left: self.dims(), right: other.dims() });
        }
        Ok(())
    }

    fn zip(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask, RasterError> {
        self.check_dims(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask, RasterError> {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask, RasterError> {
        self.zip(other, |a, b| a || b)
    }

    /// Set difference `self \ other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask, RasterError> {
        self.zip(other, |a, b| a && !b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask { width: self.width, height: self.height, bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count()
    }

    pub fn intersects(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Indices `(x, y)` of set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i % w, i / w))
    }

    /// Connected components in row-major order of their first pixel.
    pub fn components(&self, conn: Connectivity) -> Vec<BinaryMask> {
        let (labels, n) = self.component_labels(conn);
        let mut out = vec![BinaryMask::new(self.width, self.height); n];
        for (i, &l) in labels.iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].bits[i] = true;
            }
        }
        out
    }

    /// Per-pixel component id (0 = unset, components numbered from 1 in
    /// row-major order of first pixel) and the component count.
    pub fn component_labels(&self, conn: Connectivity) -> (Vec<u32>, usize) {
        let nbrs: &[(isize, isize)] = match conn {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        };
        let mut labels = vec![0u32; self.bits.len()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || labels[start] != 0 {
                continue;
            }
            next += 1;
            labels[start] = next;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
                for &(dx, dy) in nbrs {
                    let (nx, ny) = (x + dx, y + dy);
                    if self.get_signed(nx, ny) {
                        let j = ny as usize * self.width + nx as usize;
                        if labels[j] == 0 {
                            labels[j] = next;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        (labels, next as usize)
    }

    pub fn component_count(&self, conn: Connectivity) -> usize {
        self.component_labels(conn).1
    }

    /// Fill every background region (8-connected) that does not reach the
    /// canvas border.
    pub fn fill_holes(&self) -> BinaryMask {
        let bg = self.not();
        let (labels, n) = bg.component_labels(Connectivity::Eight);
        let mut touches = vec![false; n + 1];
        for x in 0..self.width {
            touches[labels[x] as usize] = true;
            touches[labels[(self.height - 1) * self.width + x] as usize] = true;
        }
        for y in 0..self.height {
            touches[labels[y * self.width] as usize] = true;
            touches[labels[y * self.width + self.width - 1] as usize] = true;
        }
        let bits = self.bits.iter().zip(&labels).map(|(&b, &l)| b || !touches[l as usize]).collect();
        BinaryMask { width: self.width, height: self.height, bits }
    }

    /// Pixels within Euclidean distance `radius` of a set pixel.
    pub fn dilate(&self, radius: f64) -> BinaryMask {
        if self.is_empty() {
            return self.clone();
        }
        let d2 = edt::squared_distance_to_set(self);
        let r2 = radius * radius;
        BinaryMask { width: self.width, height: self.height, bits: d2.iter().map(|&d| d <= r2).collect() }
    }

    /// Euclidean distance from each set pixel to the nearest unset pixel,
    /// treating everything outside the canvas as unset; 0 for unset pixels.
    pub fn inner_distance(&self) -> Vec<f64> {
        let (w, h) = (self.width + 2, self.height + 2);
        let padded = BinaryMask::from_fn(w, h, |x, y| {
            !(x > 0 && y > 0 && x <= self.width && y <= self.height && self.get(x - 1, y - 1))
        });
        let d2 = edt::squared_distance_to_set(&padded);
        let mut out = vec![0.0; self.bits.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                out[y * self.width + x] = d2[(y + 1) * w + x + 1].sqrt();
            }
        }
        out
    }

    /// Filled convex hull of the set pixels (pixel-square corners as hull
    /// input, pixel centers tested for inclusion).
    pub fn convex_hull(&self) -> BinaryMask {
        let mut pts: Vec<(i64, i64)> = Vec::new();
        for (x, y) in self.pixels() {
            let (x, y) = (x as i64, y as i64);
            pts.extend_from_slice(&[(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)]);
        }
        pts.sort_unstable();
        pts.dedup();
        if pts.len() < 3 {
            return self.clone();
        }
        let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
        let mut hull: Vec<(i64, i64)> = Vec::with_capacity(pts.len() * 2);
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &(i64, i64)>> =
                if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
            for &p in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        // Pixel center (x+.5, y+.5) inside the CCW hull (all cross ≥ 0), in
        // doubled coordinates to stay integral.
        let h2: Vec<(i64, i64)> = hull.iter().map(|&(x, y)| (2 * x, 2 * y)).collect();
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            let c = (2 * x as i64 + 1, 2 * y as i64 + 1);
            (0..h2.len()).all(|i| cross(h2[i], h2[(i + 1) % h2.len()], c) >= 0)
        })
    }

    /// Axis-aligned bounding box of set pixels: `(x0, y0, x1, y1)` inclusive.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut it = self.pixels();
        let (x, y) = it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (x, y, x, y);
        for (x, y) in it {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        Some((x0, y0, x1, y1))
    }
}

/// A grid of part labels; 0 means unlabeled.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "label map dimensions must be positive");
        LabelMap { width, height, labels: vec![0; width * height] }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<u16>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(RasterError::InvalidDimensions { width, height });
        }
        Ok(LabelMap { width, height, labels })
    }

    /// Label `k + 1` for the pixels of `masks[k]`; later masks win overlaps.
    pub fn from_masks(masks: &[BinaryMask]) -> Result<Self, RasterError> {
        let first = masks.first().ok_or(RasterError::InvalidDimensions { width: 0, height: 0 })?;
        let mut map = LabelMap::new(first.width(), first.height());
        for (k, m) in masks.iter().enumerate() {
            first.check_dims(m)?;
            for (i, &b) in m.bits().iter().enumerate() {
                if b {
                    map.labels[i] = (k + 1) as u16;
                }
            }
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.labels[y * self.width + x] = v;
    }

    pub fn max_label(&self) -> u16 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Distinct nonzero labels in ascending order.
    pub fn present_labels(&self) -> Vec<u16> {
        let mut seen = vec![false; self.max_label() as usize + 1];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..seen.len()).filter(|&l| seen[l]).map(|l| l as u16).collect()
    }

    /// Labels present form `{1..K}` with no gaps.
    pub fn is_contiguous(&self) -> bool {
        let present = self.present_labels();
        present.iter().enumerate().all(|(i, &l)| l as usize == i + 1)
    }

    pub fn mask_of(&self, label: u16) -> BinaryMask {
        BinaryMask::from_bits(self.width, self.height, self.labels.iter().map(|&l| l == label).collect())
            .expect("dimensions already valid")
    }

    /// Pixels carrying any nonzero label.
    pub fn labeled(&self) -> BinaryMask {
        BinaryMask::from_bits(self.width, self.height, self.labels.iter().map(|&l| l != 0).collect())
            .expect("dimensions already valid")
    }
}
