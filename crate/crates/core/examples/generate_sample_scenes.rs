//! Regenerates the bundled sample scenes under assets/clean/.
//!
//! The training and evaluation examples need clean photos; to keep the
//! repository self-contained we ship a small set of procedurally
//! generated scenes (smooth shaded backgrounds, a few solid shapes, mild
//! texture) instead of third-party photographs. Scenes 00-19 are the
//! training set, 20-24 are held out for evaluation.
//!
//! Usage: cargo run --release --example generate_sample_scenes [out_dir]

use derain_core::dataset::save_image;
use derain_core::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const SIDE: usize = 112;
const COUNT: usize = 25;

struct Shape {
    kind: u8, // 0 = disc, 1 = rectangle
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
    textured: bool,
}

fn scene(seed: u64) -> Tensor {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // background: oriented gradient plus a few smooth waves
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (gx, gy) = (theta.cos(), theta.sin());
    let grad_amp = rng.gen_range(0.25..0.45);
    let base: [f64; 3] = [
        rng.gen_range(0.25..0.65),
        rng.gen_range(0.25..0.65),
        rng.gen_range(0.25..0.65),
    ];
    let waves: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.5..2.5),  // fx cycles
                rng.gen_range(0.5..2.5),  // fy cycles
                rng.gen_range(0.0..6.28), // phase
                rng.gen_range(0.02..0.08),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();

    let n_shapes = rng.gen_range(5..9);
    let shapes: Vec<Shape> = (0..n_shapes)
        .map(|_| Shape {
            kind: rng.gen_range(0..2),
            cx: rng.gen_range(0.1..0.9),
            cy: rng.gen_range(0.1..0.9),
            rx: rng.gen_range(0.06..0.22),
            ry: rng.gen_range(0.06..0.22),
            color: [
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..0.95),
            ],
            textured: rng.gen_bool(0.5),
        })
        .collect();
    let tex_freq = rng.gen_range(18.0..30.0);

    Tensor::from_fn(SIDE, SIDE, 3, |y, x, c| {
        let u = x as f64 / SIDE as f64;
        let v = y as f64 / SIDE as f64;
        let mut value = base[c] + grad_amp * ((u - 0.5) * gx + (v - 0.5) * gy);
        for &(fx, fy, phase, amp, mix) in &waves {
            let w = (2.0 * std::f64::consts::PI * (fx * u + fy * v) + phase).sin();
            value += amp * w * (1.0 + 0.5 * mix * c as f64);
        }
        for s in &shapes {
            let du = (u - s.cx) / s.rx;
            let dv = (v - s.cy) / s.ry;
            let d = match s.kind {
                0 => (du * du + dv * dv).sqrt(),
                _ => du.abs().max(dv.abs()),
            };
            // soft edge roughly one pixel wide
            let edge = 1.5 / (SIDE as f64 * s.rx.min(s.ry));
            let coverage = ((1.0 - d) / edge).clamp(0.0, 1.0);
            if coverage > 0.0 {
                let mut shade = s.color[c] * (1.0 - 0.25 * dv.max(0.0));
                if s.textured {
                    let t = (tex_freq * std::f64::consts::PI * (u + 0.6 * v)).sin()
                        * (0.8 * tex_freq * std::f64::consts::PI * (v - 0.3 * u)).cos();
                    shade += 0.08 * t;
                }
                value = value * (1.0 - coverage) + shade * coverage;
            }
        }
        value.clamp(0.0, 1.0)
    })
}

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "assets/clean".to_string());
    std::fs::create_dir_all(&out_dir).expect("create output directory");
    for i in 0..COUNT {
        let img = scene(0xC1EA_0000 + i as u64);
        let path = format!("{out_dir}/scene_{i:02}.png");
        save_image(std::path::Path::new(&path), &img).expect("write scene");
        println!("wrote {path}");
    }
}
