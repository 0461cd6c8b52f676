use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, VideoConfig};
use super::runner::{run_algorithm, run_trials, Sequence, TrialRecord};
use crate::error::{Error, Result};
use crate::filters::{Dynamics, IdentityDynamics, MeasurementFrame};
use crate::operators::{Dwt, LinearOperator, NoiseletOperator, WaveletConfig};
use crate::scalar::standard_normal;

/// Reads the luma plane of the first `cfg.frames` frames of a planar YUV
/// 4:2:0 file, center-cropped to `cfg.crop × cfg.crop` and scaled to [0, 1].
/// Frames are returned row-major.
pub fn read_yuv_luma(cfg: &VideoConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let path = &cfg.yuv_path;
    let (w, h, c) = (cfg.width, cfg.height, cfg.crop);
    let frame_bytes = (w * h * 3 / 2) as u64;
    let mut file = File::open(path).map_err(|e| Error::Ingestion {
        path: path.clone(),
        offset: 0,
        detail: format!("cannot open: {e}"),
    })?;
    let len = file.metadata()?.len();
    let needed = frame_bytes * cfg.frames as u64;
    if len < needed {
        let frame = len / frame_bytes;
        return Err(Error::Ingestion {
            path: path.clone(),
            offset: len,
            detail: format!(
                "file truncated: {} frames of {w}x{h} need {needed} bytes, found {len} \
                 (frame {frame} is incomplete: {} of {frame_bytes} bytes, starting at byte {})",
                cfg.frames,
                len - frame * frame_bytes,
                frame * frame_bytes
            ),
        });
    }
    let (x0, y0) = ((w - c) / 2, (h - c) / 2);
    let mut luma = vec![0u8; w * h];
    let mut frames = Vec::with_capacity(cfg.frames);
    for f in 0..cfg.frames as u64 {
        let offset = f * frame_bytes;
        file.seek(SeekFrom::Start(offset))?;
        file.read_exact(&mut luma).map_err(|e| Error::Ingestion {
            path: path.clone(),
            offset,
            detail: format!("short read of frame {f}: {e}"),
        })?;
        let mut out = Vec::with_capacity(c * c);
        for r in 0..c {
            let row = &luma[(y0 + r) * w + x0..(y0 + r) * w + x0 + c];
            out.extend(row.iter().map(|&b| f64::from(b) / 255.0));
        }
        frames.push(out);
    }
    Ok(frames)
}

/// Writes a planar YUV 4:2:0 clip of a slowly panning textured scene with a
/// few moving shapes and occasional abrupt motion. Deterministic in `seed`.
pub fn write_synthetic_clip(
    path: &Path,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
) -> Result<()> {
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) || width == 0 || height == 0 {
        return Err(Error::Config(
            "clip dimensions must be even and positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Texture tile anchored to the scene so it moves with the pan.
    let tile = 64usize;
    let texture: Vec<f64> = (0..tile * tile)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let tex = |x: f64, y: f64| {
        let xi = x.floor().rem_euclid(tile as f64) as usize;
        let yi = y.floor().rem_euclid(tile as f64) as usize;
        texture[yi * tile + xi]
    };
    struct Blob {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        level: f64,
        vx: f64,
        vy: f64,
    }
    let mut blobs: Vec<Blob> = (0..4)
        .map(|_| Blob {
            cx: rng.random_range(0.3..0.7) * width as f64,
            cy: rng.random_range(0.3..0.7) * height as f64,
            rx: rng.random_range(10.0..40.0),
            ry: rng.random_range(10.0..40.0),
            level: rng.random_range(-0.3..0.3),
            vx: rng.random_range(-0.6..0.6),
            vy: rng.random_range(-0.4..0.4),
        })
        .collect();
    let mut pan = 0.0f64;
    let out = File::create(path)?;
    let mut out = BufWriter::new(out);
    let mut plane = vec![0u8; width * height];
    let chroma = vec![128u8; width * height / 2];
    for _ in 0..frames {
        for y in 0..height {
            for x in 0..width {
                let sx = x as f64 + pan;
                let sy = y as f64;
                let mut v = 0.45
                    + 0.15 * (sx / 37.0 + 0.3).sin() * (sy / 29.0).cos()
                    + 0.1 * sy / height as f64
                    + 0.03 * tex(sx, sy);
                for b in &blobs {
                    let dx = (x as f64 - b.cx) / b.rx;
                    let dy = (y as f64 - b.cy) / b.ry;
                    let d = dx * dx + dy * dy;
                    if d < 1.0 {
                        v += b.level * (1.0 - 0.4 * d) + 0.04 * tex(dx * 20.0, dy * 20.0);
                    }
                }
                plane[y * width + x] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
        out.write_all(&plane)?;
        out.write_all(&chroma)?;
        pan += 0.5;
        for b in &mut blobs {
            b.cx += b.vx;
            b.cy += b.vy;
            if rng.random_bool(0.08) {
                // Abrupt motion, as when a speaker turns the head.
                b.cx += rng.random_range(-6.0..6.0);
                b.cy += rng.random_range(-4.0..4.0);
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Fresh noiselet measurements of every frame for one trial.
fn measure_frames(
    pixels: &[Vec<f64>],
    video: &VideoConfig,
    seed: u64,
    trial: u64,
) -> Result<Vec<MeasurementFrame<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let n = video.pixels();
    let m = video.measurements();
    let sd = video.noise_var.sqrt();
    pixels
        .iter()
        .map(|x| {
            let op = NoiseletOperator::random(n, m, &mut rng)?;
            let mut y = op.apply(x);
            if video.noise_var > 0.0 {
                for v in &mut y {
                    *v += sd * standard_normal::<f64, _>(&mut rng);
                }
            }
            Ok(MeasurementFrame::new(Arc::new(op), y, video.noise_var)?.with_lipschitz(1.0))
        })
        .collect()
}

/// Runs the selected algorithms over the video with identity dynamics in the
/// wavelet domain. One record per (trial, algorithm).
pub fn run_video_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let pixels = read_yuv_luma(&cfg.video)?;
    run_video_on_frames(cfg, &pixels)
}

/// As [`run_video_experiment`] but on frames already in memory (row-major,
/// `crop × crop` each).
pub fn run_video_on_frames(
    cfg: &ExperimentConfig,
    pixels: &[Vec<f64>],
) -> Result<Vec<TrialRecord>> {
    let v = &cfg.video;
    if pixels.iter().any(|f| f.len() != v.pixels()) {
        return Err(Error::InvalidDimension(format!(
            "frames must hold {} pixels",
            v.pixels()
        )));
    }
    let dwt = Dwt::new(WaveletConfig::square(
        v.wavelet_taps,
        v.wavelet_levels,
        v.crop,
    ))?;
    let params = cfg.video_params()?;
    let identity = IdentityDynamics;
    let dynamics: Vec<&dyn Dynamics<f64>> = vec![&identity; pixels.len().saturating_sub(1)];
    run_trials(cfg, |trial| {
        let frames = measure_frames(pixels, v, cfg.seed, trial)?;
        let seq = Sequence {
            frames: &frames,
            truth: pixels,
            synthesis: &dwt,
            dynamics: &dynamics,
        };
        Ok(cfg
            .algorithms
            .par_iter()
            .map(|&alg| run_algorithm(trial, alg, &seq, &params, &cfg.solver))
            .collect())
    })
}
