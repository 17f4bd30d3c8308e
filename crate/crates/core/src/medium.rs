//! Wave-speed models `c(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

/// Wave speed sampled on a regular grid, bilinearly interpolated.
///
/// `values[ix * ny + iy]` is the speed at `(x0 + ix*dx, y0 + iy*dy)`, i.e. the
/// storage is row-major over x with y varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn new(nx: usize, ny: usize, origin: Point, dx: f64, dy: f64, values: Vec<f64>) -> Result<Self> {
        let r = Self {
            nx,
            ny,
            x0: origin.x,
            y0: origin.y,
            dx,
            dy,
            values,
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::param("raster", "nx and ny must be positive"));
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return Err(Error::param("raster", "dx and dy must be positive"));
        }
        if self.values.len() != self.nx * self.ny {
            return Err(Error::param(
                "raster",
                format!("expected {} values, found {}", self.nx * self.ny, self.values.len()),
            ));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::param("raster", format!("non-positive speed {v}")));
        }
        Ok(())
    }

    fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }

    /// Bilinear interpolation; queries outside the grid use the nearest edge value.
    pub fn sample(&self, p: Point) -> f64 {
        let locate = |v: f64, origin: f64, step: f64, n: usize| -> (usize, f64) {
            if n == 1 {
                return (0, 0.0);
            }
            let t = ((v - origin) / step).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            (i, t - i as f64)
        };
        let (ix, fx) = locate(p.x, self.x0, self.dx, self.nx);
        let (iy, fy) = locate(p.y, self.y0, self.dy, self.ny);
        let ix1 = (ix + 1).min(self.nx - 1);
        let iy1 = (iy + 1).min(self.ny - 1);
        let c00 = self.at(ix, iy);
        let c10 = self.at(ix1, iy);
        let c01 = self.at(ix, iy1);
        let c11 = self.at(ix1, iy1);
        (1.0 - fx) * ((1.0 - fy) * c00 + fy * c01) + fx * ((1.0 - fy) * c10 + fy * c11)
    }

    /// Reads the text raster format: a header `nx ny x0 y0 dx dy` followed by
    /// `nx*ny` whitespace-separated speeds with y varying fastest. Lines
    /// starting with `#` are comments.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut header: Option<(usize, [f64; 6])> = None;
        let mut values = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<&str> = line.split_whitespace().collect();
            if header.is_none() {
                if nums.len() != 6 {
                    return Err(perr(ln + 1, "header must be `nx ny x0 y0 dx dy`".into()));
                }
                let mut h = [0.0; 6];
                for (slot, tok) in h.iter_mut().zip(&nums) {
                    *slot = tok
                        .parse()
                        .map_err(|_| perr(ln + 1, format!("bad header field `{tok}`")))?;
                }
                header = Some((ln + 1, h));
                continue;
            }
            for tok in nums {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| perr(ln + 1, format!("bad value `{tok}`")))?,
                );
            }
        }
        let (ln, h) = header.ok_or_else(|| perr(0, "missing header".into()))?;
        if h[0] < 1.0 || h[1] < 1.0 || h[0].fract() != 0.0 || h[1].fract() != 0.0 {
            return Err(perr(ln, "nx and ny must be positive integers".into()));
        }
        Self::new(h[0] as usize, h[1] as usize, Point::new(h[2], h[3]), h[4], h[5], values)
            .map_err(|e| perr(ln, e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = String::new();
        let _ = writeln!(s, "# nx ny x0 y0 dx dy; values follow with y varying fastest (m/s)");
        let _ = writeln!(
            s,
            "{} {} {:.17e} {:.17e} {:.17e} {:.17e}",
            self.nx, self.ny, self.x0, self.y0, self.dx, self.dy
        );
        for ix in 0..self.nx {
            let row: Vec<String> = (0..self.ny).map(|iy| format!("{:.17e}", self.at(ix, iy))).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    /// A layered synthetic medium: speed increasing with depth (`-y`) through
    /// `layers` randomly perturbed interfaces, then box-smoothed `smooth` times.
    /// Used as a stand-in for field velocity models.
    pub fn synthetic_layers(domain: Rect, nx: usize, ny: usize, layers: usize, seed: u64, smooth: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || layers == 0 {
            return Err(Error::param("raster", "need nx, ny >= 2 and at least one layer"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dx = domain.width() / (nx - 1) as f64;
        let dy = domain.height() / (ny - 1) as f64;
        let depths: Vec<(f64, f64, f64, f64)> = (0..layers)
            .map(|l| {
                let base = (l as f64 + 0.5) / layers as f64;
                (
                    base + 0.1 * (rng.gen::<f64>() - 0.5) / layers as f64,
                    0.3 * rng.gen::<f64>() / layers as f64,
                    1.0 + 3.0 * rng.gen::<f64>(),
                    TAU * rng.gen::<f64>(),
                )
            })
            .collect();
        let speeds: Vec<f64> = (0..=layers).map(|l| 1.5 + 3.0 * l as f64 / layers as f64 + 0.3 * rng.gen::<f64>()).collect();
        let mut values = vec![0.0; nx * ny];
        for ix in 0..nx {
            let xr = ix as f64 / (nx - 1) as f64;
            for iy in 0..ny {
                // depth fraction measured from the top edge
                let depth = 1.0 - iy as f64 / (ny - 1) as f64;
                let layer = depths
                    .iter()
                    .filter(|(d, amp, freq, ph)| depth > d + amp * (TAU * freq * xr + ph).sin())
                    .count();
                values[ix * ny + iy] = speeds[layer];
            }
        }
        for _ in 0..smooth {
            let prev = values.clone();
            for ix in 0..nx {
                for iy in 0..ny {
                    let mut acc = 0.0;
                    let mut cnt = 0.0;
                    for jx in ix.saturating_sub(1)..=(ix + 1).min(nx - 1) {
                        for jy in iy.saturating_sub(1)..=(iy + 1).min(ny - 1) {
                            acc += prev[jx * ny + jy];
                            cnt += 1.0;
                        }
                    }
                    values[ix * ny + iy] = acc / cnt;
                }
            }
        }
        Self::new(nx, ny, Point::new(domain.x_min, domain.y_min), dx, dy, values)
    }
}

/// Spatially varying wave speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedModel {
    Constant {
        c: f64,
    },
    /// `c0 - depth * exp(-|x - center|^2 / width^2)`.
    GaussianLens {
        c0: f64,
        depth: f64,
        center: Point,
        width: f64,
    },
    /// `c0 + amplitude * sin(2 pi frequency x)`.
    Sinusoidal {
        c0: f64,
        amplitude: f64,
        frequency: f64,
    },
    Raster(Raster),
}

impl SpeedModel {
    pub fn constant(c: f64) -> Self {
        SpeedModel::Constant { c }
    }

    /// The smooth low-velocity lens used in the heterogeneous-medium runs.
    pub fn lens() -> Self {
        SpeedModel::GaussianLens {
            c0: 3.0,
            depth: 2.5,
            center: Point::new(-0.125, 0.1),
            width: 0.8,
        }
    }

    pub fn sinusoid() -> Self {
        SpeedModel::Sinusoidal {
            c0: 1.0,
            amplitude: 0.5,
            frequency: 1.0,
        }
    }

    pub fn speed(&self, p: Point) -> f64 {
        match self {
            SpeedModel::Constant { c } => *c,
            SpeedModel::GaussianLens {
                c0,
                depth,
                center,
                width,
            } => c0 - depth * (-p.dist2(*center) / (width * width)).exp(),
            SpeedModel::Sinusoidal {
                c0,
                amplitude,
                frequency,
            } => c0 + amplitude * (TAU * frequency * p.x).sin(),
            SpeedModel::Raster(r) => r.sample(p),
        }
    }

    /// Smallest and largest speed over a dense sampling of the rectangle.
    pub fn range(&self, domain: &Rect) -> (f64, f64) {
        if let SpeedModel::Constant { c } = self {
            return (*c, *c);
        }
        let m = 256;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=m {
            for i in 0..=m {
                let p = Point::new(
                    domain.x_min + domain.width() * i as f64 / m as f64,
                    domain.y_min + domain.height() * j as f64 / m as f64,
                );
                let c = self.speed(p);
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        if let SpeedModel::Raster(r) = self {
            for &v in &r.values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Fails unless the speed is finite and strictly positive over the domain.
    pub fn validate(&self, domain: &Rect) -> Result<()> {
        let (lo, hi) = self.range(domain);
        if lo.is_finite() && hi.is_finite() && lo > 0.0 {
            Ok(())
        } else {
            Err(Error::param("speed", format!("speed must be positive, found range [{lo}, {hi}]")))
        }
    }
}
