//! Rendering of float maps as 8-bit PNGs.
//!
//! Values are min-max normalized; a constant map renders at the colormap
//! midpoint. The default colormap is turbo (polynomial approximation),
//! with plain grayscale as the alternative. Identical inputs always give
//! byte-identical files.

use std::path::Path;

use stereokit_core::grid::{FloatMap, Image};
use stereokit_core::io::save_image;
use stereokit_core::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Colormap {
    Turbo,
    Gray,
}

/// Turbo colormap via its published degree-5 polynomial fit, clamped to
/// valid RGB.
fn turbo(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    let r = 0.13572138
        + t * (4.61539260 + t * (-42.66032258 + t * (132.13108234 + t * (-152.94239396 + t * 59.28637943))));
    let g = 0.09140261
        + t * (2.19418839 + t * (4.84296658 + t * (-14.18503333 + t * (4.27729857 + t * 2.82956604))));
    let b = 0.10667330
        + t * (12.64194608 + t * (-60.58204836 + t * (110.36276771 + t * (-89.90310912 + t * 27.34824973))));
    [r.clamp(0.0, 1.0), g.clamp(0.0, 1.0), b.clamp(0.0, 1.0)]
}

fn colorize(map: &FloatMap, cmap: Colormap) -> Image {
    let (h, w) = (map.height(), map.width());
    let lo = map.data().iter().cloned().fold(f32::INFINITY, f32::min) as f64;
    let hi = map.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
    let span = hi - lo;
    let t_of = |v: f32| -> f64 {
        if span > 0.0 {
            (v as f64 - lo) / span
        } else {
            0.5
        }
    };
    match cmap {
        Colormap::Gray => Image::from_fn(h, w, 1, |y, x, _| t_of(map.get(y, x)) as f32),
        Colormap::Turbo => {
            let mut data = vec![0.0f32; h * w * 3];
            for y in 0..h {
                for x in 0..w {
                    let rgb = turbo(t_of(map.get(y, x)));
                    for (c, v) in rgb.iter().enumerate() {
                        data[(y * w + x) * 3 + c] = *v as f32;
                    }
                }
            }
            Image::new(h, w, 3, data)
        }
    }
    .expect("normalized values are valid image data")
}

/// Writes `map` as an 8-bit PNG using the given colormap.
pub fn emit_visualization_with(map: &FloatMap, path: &Path, cmap: Colormap) -> Result<()> {
    save_image(path, &colorize(map, cmap))
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn constant_map_is_single_color() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let m = FloatMap::constant(4, 4, 7.5).unwrap();
        emit_visualization_with(&m, &path, Colormap::Turbo).unwrap();
        let img = stereokit_core::io::load_image(&path).unwrap();
        let first = [img.get(0, 0, 0), img.get(0, 0, 1), img.get(0, 0, 2)];
        for y in 0..4 {
            for x in 0..4 {
                for c in 0..3 {
                    assert_eq!(img.get(y, x, c), first[c]);
                }
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let m = stereokit_core::fixtures::random_map(9, 7, 0.0, 5.0, 3);
        let (p1, p2) = (dir.path().join("a.png"), dir.path().join("b.png"));
        emit_visualization_with(&m, &p1, Colormap::Turbo).unwrap();
        emit_visualization_with(&m, &p2, Colormap::Turbo).unwrap();
        assert_eq!(fs::read(p1).unwrap(), fs::read(p2).unwrap());
    }

    #[test]
    fn extremes_hit_colormap_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let m = FloatMap::new(1, 3, vec![2.0, 5.0, 8.0]).unwrap();
        emit_visualization_with(&m, &path, Colormap::Gray).unwrap();
        let img = stereokit_core::io::load_image(&path).unwrap();
        assert_eq!(img.get(0, 0, 0), 0.0);
        assert_eq!(img.get(0, 2, 0), 1.0);
        // Turbo runs blue-to-red: blue fades toward the top of the range
        // while red grows.
        let path = dir.path().join("t.png");
        emit_visualization_with(&m, &path, Colormap::Turbo).unwrap();
        let img = stereokit_core::io::load_image(&path).unwrap();
        assert!(img.get(0, 0, 2) > img.get(0, 2, 2), "blue fades toward the top");
        assert!(img.get(0, 2, 0) > img.get(0, 0, 0), "red grows toward the top");
    }
}
