//! Static PNG rasters: field heatmaps and ratio histograms.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};
use kp_core::PhysicalField;

const SIZE: u32 = 384;

/// Blue-white-red map on `[-1, 1]`.
fn diverging(v: f64) -> Rgb<u8> {
    let v = v.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 * c).round() as u8;
    if v >= 0.0 {
        Rgb([255, fade(1.0 - v), fade(1.0 - v)])
    } else {
        Rgb([fade(1.0 + v), fade(1.0 + v), 255])
    }
}

/// Heatmap of `u` with `x` to the right and `y` upwards, symmetric colour scale.
pub fn field_png(u: &PhysicalField, path: &Path) -> Result<()> {
    let g = u.grid();
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    let img = RgbImage::from_fn(SIZE, SIZE, |px, py| {
        let i = (px as usize * g.nx()) / SIZE as usize;
        let j = g.ny() - 1 - (py as usize * g.ny()) / SIZE as usize;
        diverging(u.at(i, j) / scale)
    });
    img.save(path).with_context(|| format!("writing {}", path.display()))
}

/// Histogram of `values` in `bins` equal bins between the extremes.
pub fn histogram_png(values: &[f64], bins: usize, path: &Path) -> Result<()> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    if !finite.is_empty() {
        let width = (hi - lo).max(f64::MIN_POSITIVE);
        for v in &finite {
            let b = (((v - lo) / width) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1);
    let (w, h) = (SIZE, SIZE / 2);
    let bar = w as usize / counts.len();
    let img = RgbImage::from_fn(w, h, |px, py| {
        let b = (px as usize / bar.max(1)).min(counts.len() - 1);
        let height = (counts[b] * (h as usize - 4)) / top;
        if (h - py) as usize <= height && px as usize % bar.max(1) != 0 {
            Rgb([60, 90, 160])
        } else {
            Rgb([255, 255, 255])
        }
    });
    img.save(path).with_context(|| format!("writing {}", path.display()))
}
