//! Writes the synthetic CLI test inputs into `tests/fixtures`.
//!
//! Goldens are refreshed separately with
//! `WEAKSEG_BLESS=1 cargo test -p weakseg-cli --test acceptance`.

use std::path::Path;

use weakseg_core::backend::{save_psg, PatchScoreGrid};
use weakseg_core::io::{save_mask_png, save_png};
use weakseg_core::scoremap::save_scoremap;
use weakseg_core::{BinaryMask, Raster, Result};

fn texture(x: usize, y: usize) -> f32 {
    let h = (x as u32).wrapping_mul(73_856_093) ^ (y as u32).wrapping_mul(19_349_663);
    (160 + (h % 37) as u8) as f32 / 255.0
}

struct Fixture {
    name: &'static str,
    w: usize,
    h: usize,
    crack: fn(usize, usize) -> bool,
}

fn crack_line(x: usize, y: usize) -> bool {
    let yc = 18.0 + x as f64 * 0.35 + (x as f64 / 9.0).sin() * 3.0;
    (y as f64 - yc).abs() < 1.2
}

fn no_crack(_: usize, _: usize) -> bool {
    false
}

fn write(dir: &Path, f: &Fixture) -> Result<()> {
    let (w, h) = (f.w, f.h);
    let on: Vec<bool> = (0..w * h).map(|i| (f.crack)(i % w, i / w)).collect();
    let image = Raster::new(
        w,
        h,
        (0..w * h)
            .map(|i| if on[i] { 40.0 / 255.0 } else { texture(i % w, i / w) })
            .collect(),
    )?;
    save_png(&image, dir.join("images").join(format!("{}.png", f.name)))?;
    let gt = BinaryMask::new(w, h, on.iter().map(|&b| u8::from(b)).collect())?;
    save_mask_png(&gt, dir.join("gt").join(format!("{}.png", f.name)))?;

    let scores = PatchScoreGrid::from_fn(w, h, 32, 16, |ox, oy| {
        let hits = (oy..(oy + 32).min(h))
            .flat_map(|y| (ox..(ox + 32).min(w)).map(move |x| (x, y)))
            .filter(|&(x, y)| on[y * w + x])
            .count();
        (hits as f32 / 24.0).min(0.97)
    })?;
    save_psg(&scores, dir.join("scores").join(format!("{}.psg", f.name)))?;

    let cam = Raster::new(
        w,
        h,
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                let mut best = f32::MAX;
                for yy in (y - 8).max(0)..(y + 9).min(h as isize) {
                    for xx in (x - 8).max(0)..(x + 9).min(w as isize) {
                        if on[yy as usize * w + xx as usize] {
                            let d = (((xx - x).pow(2) + (yy - y).pow(2)) as f32).sqrt();
                            best = best.min(d);
                        }
                    }
                }
                (1.0 - best / 8.0).max(0.0)
            })
            .collect(),
    )?;
    save_scoremap(&cam, dir.join("cam").join(format!("{}.smap", f.name)))
}

fn main() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for sub in ["images", "gt", "scores", "cam"] {
        std::fs::create_dir_all(dir.join(sub)).expect("create fixture dirs");
    }
    let fixtures = [
        Fixture { name: "crack", w: 96, h: 80, crack: crack_line },
        Fixture { name: "blank", w: 64, h: 48, crack: no_crack },
    ];
    for f in &fixtures {
        write(&dir, f)?;
        println!("wrote fixture {}", f.name);
    }
    Ok(())
}
