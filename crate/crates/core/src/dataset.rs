//! Image I/O, dataset synthesis orchestration, and patch sampling.
//!
//! A dataset is a directory of rainy renderings plus a line-oriented
//! manifest tying each rendering to its clean source and rain parameters.
//! The sampler draws aligned (input, target) patch pairs from the
//! manifest, caching the base/detail decomposition once per image.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{decompose, GuidedFilterConfig};
use crate::network::{DomainMode, PatchPair, PatchSource};
use crate::rainsynth::{composite, render_rain_layer, RainParams};
use crate::tensor::Tensor;

/// Loads an 8-bit RGB or grayscale PNG/PPM into [0, 1] (v / 255).
pub fn load_image(path: &Path) -> Result<Tensor> {
    let img = image::open(path).map_err(|e| Error::image(path, e.to_string()))?;
    let (bytes, h, w, c) = match &img {
        image::DynamicImage::ImageLuma8(g) => {
            (g.as_raw().as_slice(), g.height(), g.width(), 1usize)
        }
        image::DynamicImage::ImageRgb8(rgb) => {
            (rgb.as_raw().as_slice(), rgb.height(), rgb.width(), 3usize)
        }
        other => {
            return Err(Error::image(
                path,
                format!(
                    "unsupported pixel format {:?}; expected 8-bit grayscale or RGB",
                    other.color()
                ),
            ))
        }
    };
    let data = bytes.iter().map(|&b| b as f64 / 255.0).collect();
    Tensor::new(h as usize, w as usize, c, data)
}

/// Saves a 1- or 3-channel tensor as an 8-bit image; the extension picks
/// the codec (.png or .ppm). Values are clamped to [0, 1] and quantized
/// with round-half-up, so 0.5 stores as byte 128.
pub fn save_image(path: &Path, t: &Tensor) -> Result<()> {
    let color = match t.channels() {
        1 => image::ColorType::L8,
        3 => image::ColorType::Rgb8,
        c => {
            return Err(Error::image(
                path,
                format!("cannot save {c}-channel tensor; expected 1 or 3 channels"),
            ))
        }
    };
    let bytes: Vec<u8> = t
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8)
        .collect();
    image::save_buffer(path, &bytes, t.width() as u32, t.height() as u32, color)
        .map_err(|e| Error::image(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub clean: PathBuf,
    pub rainy: PathBuf,
    pub variant: usize,
    pub params: RainParams,
}

/// Files the synthesizer could not process, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestFailure {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub created_with: String,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<ManifestFailure>,
}

const MANIFEST_VERSION: u32 = 1;

impl DatasetManifest {
    /// Serializes as tab-separated lines: a small header (version, tool,
    /// seed) followed by one `entry` or `failure` record per line. Rainy
    /// paths inside the manifest's own directory are stored relative to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut out = String::new();
        out.push_str(&format!("manifest_version\t{MANIFEST_VERSION}\n"));
        out.push_str(&format!("tool\t{}\n", self.created_with));
        out.push_str(&format!("seed\t{}\n", self.seed));
        out.push_str("# entry\tclean\trainy\tvariant\tangle_deg\tlength_px\tdensity\tintensity\train_seed\n");
        for e in &self.entries {
            let rainy = e.rainy.strip_prefix(dir).unwrap_or(&e.rainy);
            out.push_str(&format!(
                "entry\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.clean.display(),
                rainy.display(),
                e.variant,
                e.params.angle_deg,
                e.params.length_px,
                e.params.density,
                e.params.intensity,
                e.params.seed,
            ));
        }
        for f in &self.failures {
            out.push_str(&format!(
                "failure\t{}\t{}\n",
                f.path.display(),
                f.reason.replace(['\t', '\n'], " ")
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Parses a manifest, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &str| -> PathBuf {
            let pb = PathBuf::from(p);
            if pb.is_absolute() {
                pb
            } else {
                dir.join(pb)
            }
        };

        let mut seed = None;
        let mut created_with = String::new();
        let mut entries = Vec::new();
        let mut failures = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_id = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |reason: String| Error::ManifestFormat {
                line: line_id,
                reason,
            };
            match fields[0] {
                "manifest_version" => {
                    let v: u32 = fields
                        .get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("unreadable version".into()))?;
                    if v != MANIFEST_VERSION {
                        return Err(bad(format!("unsupported manifest version {v}")));
                    }
                }
                "tool" => created_with = fields.get(1).unwrap_or(&"").to_string(),
                "seed" => {
                    seed = Some(
                        fields
                            .get(1)
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| bad("unreadable seed".into()))?,
                    )
                }
                "entry" => {
                    if fields.len() != 9 {
                        return Err(bad(format!("expected 9 fields, got {}", fields.len())));
                    }
                    let parse_f = |i: usize| -> Result<f64> {
                        fields[i]
                            .parse()
                            .map_err(|_| bad(format!("unreadable number '{}'", fields[i])))
                    };
                    let parse_u = |i: usize| -> Result<u64> {
                        fields[i]
                            .parse()
                            .map_err(|_| bad(format!("unreadable integer '{}'", fields[i])))
                    };
                    entries.push(ManifestEntry {
                        clean: resolve(fields[1]),
                        rainy: resolve(fields[2]),
                        variant: parse_u(3)? as usize,
                        params: RainParams {
                            angle_deg: parse_f(4)?,
                            length_px: parse_u(5)? as usize,
                            density: parse_f(6)?,
                            intensity: parse_f(7)?,
                            seed: parse_u(8)?,
                        },
                    });
                }
                "failure" => failures.push(ManifestFailure {
                    path: resolve(fields.get(1).unwrap_or(&"")),
                    reason: fields.get(2).unwrap_or(&"").to_string(),
                }),
                other => {
                    return Err(bad(format!("unknown record type '{other}'")));
                }
            }
        }
        Ok(Self {
            seed: seed.ok_or(Error::ManifestFormat {
                line: 0,
                reason: "missing seed header".into(),
            })?,
            created_with,
            entries,
            failures,
        })
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn entry_seed(dataset_seed: u64, image_index: usize, variant_index: usize) -> u64 {
    splitmix64(dataset_seed ^ splitmix64(((image_index as u64) << 16) | variant_index as u64))
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "pgm"];

/// Clean image files in a directory, sorted by name for reproducibility.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Renders every rain variant over every clean image in `clean_dir`,
/// writes the rainy images and a `manifest.tsv` into `out_dir`, and
/// returns the manifest. Deterministic in `seed`: each entry's rain seed
/// mixes the dataset seed with the image and variant indices. Per-file
/// failures are recorded in the manifest instead of aborting the run.
pub fn synthesize_dataset(
    clean_dir: &Path,
    out_dir: &Path,
    variants: &[RainParams],
    seed: u64,
) -> Result<DatasetManifest> {
    let files = list_images(clean_dir)?;
    if files.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if variants.is_empty() {
        return Err(Error::InvalidArgument("no rain variants requested".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    type PerImage = (Vec<ManifestEntry>, Vec<ManifestFailure>);
    let results: Vec<PerImage> = exec::map_indexed(files.len(), |i| {
        let clean_path = &files[i];
        let mut entries = Vec::new();
        let mut failures = Vec::new();
        let clean = match load_image(clean_path) {
            Ok(t) => t,
            Err(e) => {
                failures.push(ManifestFailure {
                    path: clean_path.clone(),
                    reason: e.to_string(),
                });
                return (entries, failures);
            }
        };
        let stem = clean_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("img{i:04}"));
        for (v, variant) in variants.iter().enumerate() {
            let params = RainParams {
                seed: entry_seed(seed, i, v),
                ..*variant
            };
            let rainy_path = out_dir.join(format!("{stem}_r{v:02}.png"));
            let result = render_rain_layer(clean.height(), clean.width(), &params)
                .and_then(|rain| composite(&clean, &rain))
                .and_then(|rainy| save_image(&rainy_path, &rainy));
            match result {
                Ok(()) => entries.push(ManifestEntry {
                    clean: clean_path.clone(),
                    rainy: rainy_path.clone(),
                    variant: v,
                    params,
                }),
                Err(e) => failures.push(ManifestFailure {
                    path: rainy_path.clone(),
                    reason: e.to_string(),
                }),
            }
        }
        (entries, failures)
    });

    let mut manifest = DatasetManifest {
        seed,
        created_with: format!("derain {}", env!("CARGO_PKG_VERSION")),
        entries: Vec::new(),
        failures: Vec::new(),
    };
    for (entries, failures) in results {
        manifest.entries.extend(entries);
        manifest.failures.extend(failures);
    }
    manifest.save(&out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerSpec {
    /// Number of patch locations to draw (with replacement).
    pub count: usize,
    pub patch_size: usize,
    /// Target side; must leave an even crop margin inside the patch.
    pub output_size: usize,
    pub mode: DomainMode,
    pub filter: GuidedFilterConfig,
    pub seed: u64,
}

/// Deterministic with-replacement patch sampler over a synthesized
/// dataset.
///
/// Construction loads every rainy image, decomposes it (detail mode) and
/// caches the layers; clean images are decomposed once per unique path no
/// matter how many rainy variants share them. `pair(i)` then only copies
/// two small windows out of the cache.
pub struct PatchSampler {
    inputs: Vec<Arc<Tensor>>,
    targets: Vec<Arc<Tensor>>,
    locations: Vec<(u32, u32, u32)>,
    patch_size: usize,
    output_size: usize,
}

impl PatchSampler {
    pub fn new(manifest: &DatasetManifest, spec: &SamplerSpec) -> Result<Self> {
        spec.filter.validate()?;
        if manifest.entries.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if spec.output_size > spec.patch_size || spec.patch_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "output size {} does not fit in patch size {}",
                spec.output_size, spec.patch_size
            )));
        }
        if (spec.patch_size - spec.output_size) % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "patch {} minus output {} must leave an even margin",
                spec.patch_size, spec.output_size
            )));
        }

        // Clean images are shared across variants; prepare each unique one once.
        let mut clean_cache: HashMap<PathBuf, Arc<Tensor>> = HashMap::new();
        let mut inputs = Vec::with_capacity(manifest.entries.len());
        let mut targets = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            let rainy = load_image(&entry.rainy)?;
            let target = match clean_cache.get(&entry.clean) {
                Some(t) => Arc::clone(t),
                None => {
                    let clean = load_image(&entry.clean)?;
                    if clean.shape() != rainy.shape() {
                        return Err(Error::ShapeMismatch {
                            context: "dataset entry",
                            left: rainy.shape_string(),
                            right: clean.shape_string(),
                        });
                    }
                    let prepared = match spec.mode {
                        DomainMode::Detail => Arc::new(decompose(&clean, &spec.filter)?.detail),
                        DomainMode::Image => Arc::new(clean),
                    };
                    clean_cache.insert(entry.clean.clone(), Arc::clone(&prepared));
                    prepared
                }
            };
            if rainy.height() < spec.patch_size || rainy.width() < spec.patch_size {
                return Err(Error::InputTooSmall {
                    context: "patch sampling",
                    got_h: rainy.height(),
                    got_w: rainy.width(),
                    min_h: spec.patch_size,
                    min_w: spec.patch_size,
                });
            }
            let input = match spec.mode {
                DomainMode::Detail => Arc::new(decompose(&rainy, &spec.filter)?.detail),
                DomainMode::Image => Arc::new(rainy),
            };
            inputs.push(input);
            targets.push(target);
        }

        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let locations = (0..spec.count)
            .map(|_| {
                let e = rng.gen_range(0..inputs.len());
                let y = rng.gen_range(0..=inputs[e].height() - spec.patch_size);
                let x = rng.gen_range(0..=inputs[e].width() - spec.patch_size);
                (e as u32, y as u32, x as u32)
            })
            .collect();

        Ok(Self {
            inputs,
            targets,
            locations,
            patch_size: spec.patch_size,
            output_size: spec.output_size,
        })
    }

    /// The sampled pairs as a sequential stream, in draw order.
    pub fn iter(&self) -> impl Iterator<Item = PatchPair> + '_ {
        (0..self.locations.len()).map(|i| self.pair(i).expect("locations validated at construction"))
    }
}

impl PatchSource for PatchSampler {
    fn len(&self) -> usize {
        self.locations.len()
    }

    fn pair(&self, index: usize) -> Result<PatchPair> {
        let (e, y, x) = self.locations[index];
        let (e, y, x) = (e as usize, y as usize, x as usize);
        let margin = (self.patch_size - self.output_size) / 2;
        let input = self.inputs[e].crop(y, x, self.patch_size, self.patch_size);
        let target = self.targets[e].crop(y + margin, x + margin, self.output_size, self.output_size);
        Ok(PatchPair { input, target })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rainsynth::default_variants;
    use tempfile::TempDir;

    fn gf() -> GuidedFilterConfig {
        GuidedFilterConfig {
            radius: 4,
            epsilon: 0.01,
        }
    }

    fn test_scene(seed: u64, side: usize) -> Tensor {
        Tensor::from_fn(side, side, 3, |y, x, c| {
            let fy = y as f64 / side as f64;
            let fx = x as f64 / side as f64;
            let wave = ((fy * 9.0 + seed as f64) * 2.3).sin() * ((fx * 7.0) * 1.7).cos();
            let block = if (y / 9 + x / 11 + c) % 3 == 0 { 0.25 } else { 0.0 };
            (0.45 + 0.3 * wave * (0.3 + 0.2 * c as f64) + block).clamp(0.0, 1.0)
        })
    }

    fn write_clean_set(dir: &Path, n: usize, side: usize) {
        for i in 0..n {
            save_image(&dir.join(format!("scene{i:02}.png")), &test_scene(i as u64, side)).unwrap();
        }
    }

    #[test]
    fn png_roundtrip_on_grid_values_is_lossless() {
        let dir = TempDir::new().unwrap();
        let t = Tensor::from_fn(9, 7, 3, |y, x, c| ((y * 7 * 3 + x * 3 + c) % 256) as f64 / 255.0);
        let path = dir.path().join("grid.png");
        save_image(&path, &t).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn ppm_roundtrip_within_half_step() {
        let dir = TempDir::new().unwrap();
        let t = Tensor::from_fn(8, 8, 3, |y, x, c| {
            ((y * 31 + x * 17 + c * 7) % 100) as f64 / 99.0
        });
        let path = dir.path().join("img.ppm");
        save_image(&path, &t).unwrap();
        let back = load_image(&path).unwrap();
        for (a, b) in back.data().iter().zip(t.data()) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
        }
    }

    #[test]
    fn quantization_rounds_half_up() {
        let dir = TempDir::new().unwrap();
        let t = Tensor::new(1, 2, 1, vec![1.0, 0.5]).unwrap();
        let path = dir.path().join("q.png");
        save_image(&path, &t).unwrap();
        let img = image::open(&path).unwrap().into_luma8();
        assert_eq!(img.get_pixel(0, 0).0[0], 255);
        assert_eq!(img.get_pixel(1, 0).0[0], 128); // 127.5 rounds up
    }

    #[test]
    fn load_rejects_missing_file_with_path() {
        let err = load_image(Path::new("/nonexistent/foo.png")).unwrap_err();
        assert!(err.to_string().contains("foo.png"));
    }

    #[test]
    fn synthesis_counts_and_determinism() {
        let clean = TempDir::new().unwrap();
        write_clean_set(clean.path(), 2, 40);
        let variants = default_variants();

        let out_a = TempDir::new().unwrap();
        let a = synthesize_dataset(clean.path(), out_a.path(), &variants, 7).unwrap();
        assert_eq!(a.entries.len(), 28); // 2 clean x 14 variants
        assert!(a.failures.is_empty());

        let out_b = TempDir::new().unwrap();
        let b = synthesize_dataset(clean.path(), out_b.path(), &variants, 7).unwrap();
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert_eq!(ea.params, eb.params);
            let bytes_a = std::fs::read(&ea.rainy).unwrap();
            let bytes_b = std::fs::read(&eb.rainy).unwrap();
            assert_eq!(bytes_a, bytes_b, "rainy images differ across reruns");
        }
    }

    #[test]
    fn too_small_clean_images_are_reported_not_fatal() {
        let clean = TempDir::new().unwrap();
        write_clean_set(clean.path(), 1, 20); // smaller than heavy streak length 30
        let out = TempDir::new().unwrap();
        let m = synthesize_dataset(clean.path(), out.path(), &default_variants(), 1).unwrap();
        assert_eq!(m.entries.len(), 7); // light variants (length 15) still fit
        assert_eq!(m.failures.len(), 7); // heavy variants fail
    }

    #[test]
    fn manifest_roundtrip() {
        let clean = TempDir::new().unwrap();
        write_clean_set(clean.path(), 2, 40);
        let out = TempDir::new().unwrap();
        let m = synthesize_dataset(clean.path(), out.path(), &default_variants(), 3).unwrap();
        let loaded = DatasetManifest::load(&out.path().join("manifest.tsv")).unwrap();
        assert_eq!(m, loaded);
    }

    #[test]
    fn manifest_rejects_garbage() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("manifest.tsv");
        std::fs::write(&path, "manifest_version\t1\nseed\t4\nentry\tonly_two\n").unwrap();
        let err = DatasetManifest::load(&path).unwrap_err();
        assert!(matches!(err, Error::ManifestFormat { line: 3, .. }), "{err}");
    }

    fn small_manifest(mode_side: usize) -> (TempDir, TempDir, DatasetManifest) {
        let clean = TempDir::new().unwrap();
        write_clean_set(clean.path(), 3, mode_side);
        let out = TempDir::new().unwrap();
        let variants: Vec<_> = default_variants().into_iter().take(4).collect();
        let m = synthesize_dataset(clean.path(), out.path(), &variants, 11).unwrap();
        (clean, out, m)
    }

    fn spec(count: usize, seed: u64) -> SamplerSpec {
        SamplerSpec {
            count,
            patch_size: 16,
            output_size: 10,
            mode: DomainMode::Detail,
            filter: gf(),
            seed,
        }
    }

    #[test]
    fn sampler_count_zero_gives_empty_stream() {
        let (_clean, _out, m) = small_manifest(40);
        let sampler = PatchSampler::new(&m, &spec(0, 1)).unwrap();
        assert_eq!(sampler.len(), 0);
        assert_eq!(sampler.iter().count(), 0);
    }

    #[test]
    fn sampler_emits_contracted_shapes() {
        let (_clean, _out, m) = small_manifest(40);
        let sampler = PatchSampler::new(&m, &spec(25, 2)).unwrap();
        for pair in sampler.iter() {
            assert_eq!(pair.input.shape(), (16, 16, 3));
            assert_eq!(pair.target.shape(), (10, 10, 3));
        }
    }

    #[test]
    fn sampler_is_deterministic_in_seed() {
        let (_clean, _out, m) = small_manifest(40);
        let a: Vec<_> = PatchSampler::new(&m, &spec(10, 5)).unwrap().iter().collect();
        let b: Vec<_> = PatchSampler::new(&m, &spec(10, 5)).unwrap().iter().collect();
        assert_eq!(a, b);
        let c: Vec<_> = PatchSampler::new(&m, &spec(10, 6)).unwrap().iter().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_rejects_oversized_patches() {
        let (_clean, _out, m) = small_manifest(40);
        let mut s = spec(4, 1);
        s.patch_size = 64;
        s.output_size = 58;
        assert!(matches!(
            PatchSampler::new(&m, &s),
            Err(Error::InputTooSmall { .. })
        ));
    }

    /// With the rainy path pointing at the clean image itself the detail
    /// layers coincide, so the target must be the exact center crop of
    /// the input patch.
    #[test]
    fn zero_rain_control_aligns_input_and_target() {
        let clean = TempDir::new().unwrap();
        write_clean_set(clean.path(), 2, 40);
        let files = list_images(clean.path()).unwrap();
        let manifest = DatasetManifest {
            seed: 0,
            created_with: "test".into(),
            entries: files
                .iter()
                .map(|f| ManifestEntry {
                    clean: f.clone(),
                    rainy: f.clone(),
                    variant: 0,
                    params: default_variants()[0],
                })
                .collect(),
            failures: vec![],
        };
        let sampler = PatchSampler::new(&manifest, &spec(20, 9)).unwrap();
        for pair in sampler.iter() {
            let crop = pair.input.center_crop(10, 10).unwrap();
            assert_eq!(crop, pair.target);
        }
    }

    /// The cached decomposition must be bit-identical to a fresh one.
    #[test]
    fn cached_decomposition_matches_fresh() {
        let (_clean, _out, m) = small_manifest(40);
        let sampler = PatchSampler::new(&m, &spec(1, 3)).unwrap();
        let fresh = decompose(&load_image(&m.entries[0].rainy).unwrap(), &gf()).unwrap();
        assert_eq!(sampler.inputs[0].as_ref(), &fresh.detail);
    }

    #[test]
    fn image_mode_samples_raw_patches() {
        let (_clean, _out, m) = small_manifest(40);
        let mut s = spec(5, 4);
        s.mode = DomainMode::Image;
        let sampler = PatchSampler::new(&m, &s).unwrap();
        let rainy = load_image(&m.entries[0].rainy).unwrap();
        // raw patches must come from the rainy image, not its detail layer
        let (e, y, x) = sampler.locations[0];
        if e == 0 {
            let pair = sampler.pair(0).unwrap();
            let direct = rainy.crop(y as usize, x as usize, 16, 16);
            assert_eq!(pair.input, direct);
        }
        for pair in sampler.iter() {
            assert!(pair.input.min_value() >= 0.0); // images, not details
        }
    }
}
