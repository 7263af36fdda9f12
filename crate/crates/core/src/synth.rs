//! Synthetic Lambertian scenes `I = R * L` with known reflectance and
//! illumination, for checking invariance properties without a face dataset.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Plane};

/// Reflectance values are mapped onto this range.
pub const REFLECTANCE_RANGE: (f64, f64) = (16.0, 240.0);

/// Minimum relative L2 distance between reflectances of distinct identities.
pub const MIN_IDENTITY_SEPARATION: f64 = 0.05;

/// Seed of the reference 20 x 8 synthetic recognition set.
pub const PINNED_SEED: u64 = 0x5EED_F00D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Illumination {
    Constant,
    /// Rises linearly from `strength` at the left edge to `2 * strength` at the right.
    LinearRamp,
    /// Dark half-plane with a smoothstep transition of width `2 * falloff`.
    /// `angle` is the direction of the lit side's normal; `offset` moves the
    /// boundary away from the image center along that normal.
    HalfPlaneShadow {
        angle: f64,
        offset: f64,
        attenuation: f64,
        falloff: f64,
    },
    /// Gaussian highlight adding `gain * strength` at its center.
    RadialSpot {
        cx: f64,
        cy: f64,
        radius: f64,
        gain: f64,
    },
}

impl Illumination {
    pub fn name(&self) -> &'static str {
        match self {
            Illumination::Constant => "constant",
            Illumination::LinearRamp => "ramp",
            Illumination::HalfPlaneShadow { .. } => "shadow",
            Illumination::RadialSpot { .. } => "spot",
        }
    }
}

impl fmt::Display for Illumination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Illumination::Constant | Illumination::LinearRamp => f.write_str(self.name()),
            Illumination::HalfPlaneShadow { angle, offset, attenuation, falloff } => {
                write!(f, "shadow(angle={angle}, offset={offset}, attenuation={attenuation}, falloff={falloff})")
            }
            Illumination::RadialSpot { cx, cy, radius, gain } => {
                write!(f, "spot(cx={cx}, cy={cy}, radius={radius}, gain={gain})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub identity_seed: u64,
    pub illumination: Illumination,
    pub strength: f64,
    pub width: usize,
    pub height: usize,
}

/// Procedural reflectance: soft blobs, a few hard-edged ellipses and a
/// stripe pattern, rescaled onto [`REFLECTANCE_RANGE`].
pub fn make_reflectance(spec: &SceneSpec) -> GrayImage {
    draw_reflectance(spec.identity_seed, spec.width, spec.height)
}

fn draw_reflectance(seed: u64, width: usize, height: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let scale = w.max(h);

    let blobs: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.random_range(0.0..w),
                rng.random_range(0.0..h),
                rng.random_range(0.05..0.25) * scale,
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let ellipses: Vec<(f64, f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random_range(0.1..0.9) * w,
                rng.random_range(0.1..0.9) * h,
                rng.random_range(0.04..0.15) * scale,
                rng.random_range(0.04..0.15) * scale,
                rng.random_range(-0.8..0.8),
            )
        })
        .collect();
    let stripe_angle = rng.random_range(0.0..PI);
    let stripe_freq = rng.random_range(2.0..6.0) * 2.0 * PI / scale;
    let stripe_amp = rng.random_range(0.1..0.4);
    let stripe_phase = rng.random_range(0.0..2.0 * PI);

    let raw = Plane::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut v = 0.0;
        for &(bx, by, br, amp) in &blobs {
            let d2 = (px - bx).powi(2) + (py - by).powi(2);
            v += amp * (-d2 / (2.0 * br * br)).exp();
        }
        for &(ex, ey, ea, eb, amp) in &ellipses {
            if ((px - ex) / ea).powi(2) + ((py - ey) / eb).powi(2) <= 1.0 {
                v += amp;
            }
        }
        let t = px * stripe_angle.cos() + py * stripe_angle.sin();
        v + stripe_amp * (stripe_freq * t + stripe_phase).sin()
    });

    let (lo, hi) = raw.min_max().unwrap_or((0.0, 0.0));
    let (out_lo, out_hi) = REFLECTANCE_RANGE;
    let span = hi - lo;
    let plane =
        raw.map(|v| if span > 0.0 { out_lo + (v - lo) / span * (out_hi - out_lo) } else { 0.5 * (out_lo + out_hi) });
    GrayImage::from_plane(plane).expect("reflectance is finite and positive")
}

/// `||a - b|| / max(||a||, ||b||)`.
pub fn relative_difference(a: &GrayImage, b: &GrayImage) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    diff / norm(a.pixels()).max(norm(b.pixels()))
}

/// One reflectance per seed, redrawn as needed so that every pair is at
/// least [`MIN_IDENTITY_SEPARATION`] apart.
pub fn reflectance_family(seeds: &[u64], width: usize, height: usize) -> Vec<GrayImage> {
    let mut out: Vec<GrayImage> = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut attempt = 0u64;
        let r = loop {
            let draw_seed = if attempt == 0 { seed } else { split_seed(seed, attempt) };
            let candidate = draw_reflectance(draw_seed, width, height);
            if out.iter().all(|prev| relative_difference(prev, &candidate) >= MIN_IDENTITY_SEPARATION) {
                break candidate;
            }
            attempt += 1;
        };
        out.push(r);
    }
    out
}

fn split_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Illumination field for `spec`; every value is strictly positive.
pub fn make_illumination(spec: &SceneSpec) -> Result<Plane> {
    let s = spec.strength;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Parameter(format!("illumination strength must be > 0, got {s}")));
    }
    let (w, h) = (spec.width, spec.height);
    let plane = match spec.illumination {
        Illumination::Constant => Plane::filled(w, h, s),
        Illumination::LinearRamp => {
            let denom = w.saturating_sub(1).max(1) as f64;
            Plane::from_fn(w, h, |x, _| s * (1.0 + x as f64 / denom))
        }
        Illumination::HalfPlaneShadow { angle, offset, attenuation, falloff } => {
            if !(attenuation > 0.0 && attenuation <= 1.0) {
                return Err(Error::Parameter(format!("shadow attenuation must be in (0, 1], got {attenuation}")));
            }
            if falloff.is_nan() || falloff <= 0.0 {
                return Err(Error::Parameter(format!("shadow falloff must be > 0, got {falloff}")));
            }
            let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
            let (nx, ny) = (angle.cos(), angle.sin());
            Plane::from_fn(w, h, |x, y| {
                let dist = (x as f64 - cx) * nx + (y as f64 - cy) * ny - offset;
                let u = ((dist / falloff + 1.0) / 2.0).clamp(0.0, 1.0);
                let lit = u * u * (3.0 - 2.0 * u);
                s * (attenuation + (1.0 - attenuation) * lit)
            })
        }
        Illumination::RadialSpot { cx, cy, radius, gain } => {
            if radius.is_nan() || radius <= 0.0 || gain < 0.0 {
                return Err(Error::Parameter(format!("spot needs radius > 0 and gain >= 0, got {radius}, {gain}")));
            }
            let (px, py) = (cx * w as f64, cy * h as f64);
            Plane::from_fn(w, h, |x, y| {
                let d2 = (x as f64 - px).powi(2) + (y as f64 - py).powi(2);
                s * (1.0 + gain * (-d2 / (2.0 * radius * radius)).exp())
            })
        }
    };
    Ok(plane)
}

/// `max(R * L, 1)` per pixel, unquantized.
pub fn render(reflectance: &GrayImage, illumination: &Plane) -> Result<GrayImage> {
    if !reflectance.plane().same_shape(illumination) {
        return Err(Error::Dimension(format!(
            "reflectance {}x{} vs illumination {}x{}",
            reflectance.width(),
            reflectance.height(),
            illumination.width(),
            illumination.height()
        )));
    }
    let data = reflectance.pixels().iter().zip(illumination.values()).map(|(r, l)| (r * l).max(1.0)).collect();
    GrayImage::new(reflectance.width(), reflectance.height(), data)
}

/// Rounds to the nearest integer and clamps into `[0, 255]`.
pub fn quantize(img: &GrayImage) -> GrayImage {
    GrayImage::from_plane(img.plane().map(|v| v.round().clamp(0.0, 255.0))).expect("clamped values are valid")
}

/// Largest `|L(p) / L(q) - 1|` over pixel pairs within Chebyshev distance
/// `radius`.
pub fn epsilon_bound(illumination: &Plane, radius: usize) -> Result<f64> {
    if radius < 1 {
        return Err(Error::Parameter("epsilon radius must be >= 1".into()));
    }
    if let Some(bad) = illumination.values().iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::Parameter(format!("illumination must be strictly positive, found {bad}")));
    }
    let (w, h) = (illumination.width(), illumination.height());
    let mut worst = 0.0_f64;
    for y in 0..h {
        for x in 0..w {
            let center = illumination.get(x, y);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    let v = illumination.get(xx, yy);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            worst = worst.max((center / lo - 1.0).abs()).max((center / hi - 1.0).abs());
        }
    }
    Ok(worst)
}

/// A rendered scene with its ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub reflectance: GrayImage,
    pub illumination: Plane,
    pub image: GrayImage,
}

impl Scene {
    pub fn render(spec: SceneSpec) -> Result<Self> {
        let reflectance = make_reflectance(&spec);
        Self::with_reflectance(spec, reflectance)
    }

    pub fn with_reflectance(spec: SceneSpec, reflectance: GrayImage) -> Result<Self> {
        let illumination = make_illumination(&spec)?;
        let image = render(&reflectance, &illumination)?;
        Ok(Self { spec, reflectance, illumination, image })
    }
}

/// Layout of a labeled synthetic recognition set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSet {
    pub identities: usize,
    pub variants: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl SyntheticSet {
    /// The reference configuration: 20 identities x 8 lighting variants, 64x64.
    pub fn pinned() -> Self {
        Self { identities: 20, variants: 8, width: 64, height: 64, seed: PINNED_SEED }
    }

    pub fn person_id(index: usize) -> String {
        format!("id{index:03}")
    }

    /// Scenes grouped by identity, in generation order. Variant 0 of every
    /// identity is evenly lit; the others draw a random lighting kind.
    /// Illumination never exceeds 1, so pixels stay within the 8-bit range.
    pub fn generate(&self) -> Result<Vec<(String, Vec<Scene>)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let seeds: Vec<u64> = (0..self.identities).map(|_| rng.random()).collect();
        let reflectances = reflectance_family(&seeds, self.width, self.height);
        let mut out = Vec::with_capacity(self.identities);
        for (i, (seed, reflectance)) in seeds.iter().zip(reflectances).enumerate() {
            let mut scenes = Vec::with_capacity(self.variants);
            for v in 0..self.variants {
                let (illumination, strength) =
                    if v == 0 { (Illumination::Constant, 0.9) } else { random_lighting(&mut rng) };
                let spec =
                    SceneSpec { identity_seed: *seed, illumination, strength, width: self.width, height: self.height };
                scenes.push(Scene::with_reflectance(spec, reflectance.clone())?);
            }
            out.push((Self::person_id(i), scenes));
        }
        Ok(out)
    }

    /// `(person_id, image)` pairs in manifest order.
    pub fn labeled_images(&self) -> Result<Vec<(String, GrayImage)>> {
        Ok(self
            .generate()?
            .into_iter()
            .flat_map(|(id, scenes)| scenes.into_iter().map(move |s| (id.clone(), s.image)))
            .collect())
    }
}

fn random_lighting(rng: &mut ChaCha8Rng) -> (Illumination, f64) {
    match rng.random_range(0..4) {
        0 => (Illumination::Constant, rng.random_range(0.2..1.0)),
        1 => (Illumination::LinearRamp, rng.random_range(0.15..0.5)),
        2 => (
            Illumination::HalfPlaneShadow {
                angle: rng.random_range(0.0..2.0 * PI),
                offset: rng.random_range(-12.0..12.0),
                attenuation: rng.random_range(0.08..0.4),
                falloff: rng.random_range(1.0..6.0),
            },
            rng.random_range(0.6..1.0),
        ),
        _ => {
            let gain = rng.random_range(0.5..3.0);
            (
                Illumination::RadialSpot {
                    cx: rng.random_range(0.2..0.8),
                    cy: rng.random_range(0.2..0.8),
                    radius: rng.random_range(6.0..20.0),
                    gain,
                },
                rng.random_range(0.3..1.0) / (1.0 + gain),
            )
        }
    }
}
