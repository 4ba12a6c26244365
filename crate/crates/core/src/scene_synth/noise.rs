//! Seeded 3D value noise and the colour texture built on it.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const TABLE: usize = 256;

/// Lattice value noise with trilinear, smoothstep-faded interpolation.
#[derive(Debug, Clone)]
pub struct ValueNoise {
    perm: Vec<usize>,
    values: Vec<f64>,
}

impl ValueNoise {
    pub fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut perm: Vec<usize> = (0..TABLE).collect();
        perm.shuffle(rng);
        let values = (0..TABLE).map(|_| rng.gen::<f64>()).collect();
        ValueNoise { perm, values }
    }

    #[inline]
    fn lattice(&self, x: i64, y: i64, z: i64) -> f64 {
        let m = TABLE as i64 - 1;
        let a = self.perm[(x & m) as usize];
        let b = self.perm[((a as i64 + y) & m) as usize];
        let c = self.perm[((b as i64 + z) & m) as usize];
        self.values[c]
    }

    /// Noise value in `[0, 1]`.
    pub fn at(&self, p: &Vector3<f64>) -> f64 {
        let f = p.map(f64::floor);
        let t = p - f;
        let s = t.map(|x| x * x * (3.0 - 2.0 * x));
        let (x, y, z) = (f.x as i64, f.y as i64, f.z as i64);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let plane = |dz: i64| {
            let a = lerp(self.lattice(x, y, z + dz), self.lattice(x + 1, y, z + dz), s.x);
            let b = lerp(self.lattice(x, y + 1, z + dz), self.lattice(x + 1, y + 1, z + dz), s.x);
            lerp(a, b, s.y)
        };
        lerp(plane(0), plane(1), s.z)
    }

    /// Sum of `octaves` octaves (frequency doubling, amplitude halving),
    /// rescaled to `[0, 1]`.
    pub fn fbm(&self, p: &Vector3<f64>, octaves: u32) -> f64 {
        let (mut sum, mut amp, mut norm, mut freq) = (0.0, 1.0, 0.0, 1.0);
        for _ in 0..octaves {
            sum += amp * self.at(&(p * freq));
            norm += amp;
            amp *= 0.5;
            freq *= 2.0;
        }
        sum / norm
    }
}

/// Procedural RGB texture: one fBm per channel around a base colour.
#[derive(Debug, Clone)]
pub struct Texture {
    noise: ValueNoise,
    pub base: [f64; 3],
    pub frequency: f64,
    pub contrast: f64,
    pub offset: Vector3<f64>,
}

/// Octave count of every procedural texture.
pub const OCTAVES: u32 = 4;

impl Texture {
    pub fn new(rng: &mut ChaCha8Rng, base: [f64; 3], frequency: f64, contrast: f64) -> Self {
        let noise = ValueNoise::new(rng);
        let offset = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 100.0;
        Texture {
            noise,
            base,
            frequency,
            contrast,
            offset,
        }
    }

    pub fn color(&self, p: &Vector3<f64>) -> [f64; 3] {
        let q = p * self.frequency + self.offset;
        // Shared luminance pattern plus a weaker per-channel tint.
        let lum = self.noise.fbm(&q, OCTAVES) - 0.5;
        let mut rgb = [0.0; 3];
        for (c, out) in rgb.iter_mut().enumerate() {
            let shift = Vector3::new(17.3, -41.9, 7.7) * (c as f64 + 1.0);
            let tint = self.noise.fbm(&(q * 0.5 + shift), 2) - 0.5;
            *out = (self.base[c] + self.contrast * lum + 0.3 * self.contrast * tint).clamp(0.0, 1.0);
        }
        rgb
    }
}
