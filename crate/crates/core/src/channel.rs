//! Channel generators (spherical/planar LOS with ULAs, IID Rayleigh), the η
//! descriptor, and spectral decompositions of `H`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the channel gain is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `tr(HH*) = Nt·Nr` for every realization.
    Instantaneous,
    /// `E[tr(HH*)] = Nt·Nr` over the ensemble.
    Ensemble,
}

/// An `Nr × Nt` complex channel matrix. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
    normalization: Normalization,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<Complex64>, normalization: Normalization) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidArgument("channel matrix must be non-empty".into()));
        }
        Ok(Self {
            entries,
            normalization,
        })
    }

    /// Builds a matrix from row-major entries, tagged with ensemble normalisation.
    pub fn from_rows(nr: usize, nt: usize, rows: &[Complex64]) -> Result<Self> {
        if rows.len() != nr * nt {
            return Err(Error::Dimension {
                expected: nr * nt,
                got: rows.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(nr, nt, rows), Normalization::Ensemble)
    }

    pub fn nt(&self) -> usize {
        self.entries.ncols()
    }

    pub fn nr(&self) -> usize {
        self.entries.nrows()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    /// `tr(HH*)`, the squared Frobenius norm.
    pub fn gram_trace(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }

    /// `H x` for a complex transmit vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.nt(), "transmit vector length");
        (0..self.nr())
            .map(|n| (0..self.nt()).map(|m| self.entries[(n, m)] * x[m]).sum())
            .collect()
    }
}

/// Geometry of a ULA-to-ULA line-of-sight link. Angles in radians, lengths in
/// meters. `θ = 0` is broadside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    pub range: f64,
    pub wavelength: f64,
    pub spacing_tx: f64,
    pub spacing_rx: f64,
    pub elevation_tx: f64,
    pub elevation_rx: f64,
    pub azimuth: f64,
    pub nt: usize,
    pub nr: usize,
}

impl LosGeometry {
    /// Half-wavelength arrays at the given angles and range (in wavelengths).
    pub fn half_wavelength(
        nt: usize,
        nr: usize,
        range_wavelengths: f64,
        elevation_tx: f64,
        elevation_rx: f64,
        azimuth: f64,
    ) -> Self {
        Self {
            range: range_wavelengths,
            wavelength: 1.0,
            spacing_tx: 0.5,
            spacing_rx: 0.5,
            elevation_tx,
            elevation_rx,
            azimuth,
            nt,
            nr,
        }
    }

    /// Broadside arrays with equal spacing chosen so that the link has the
    /// requested `η` at range `range` (all lengths in wavelengths).
    pub fn broadside_with_eta(nt: usize, nr: usize, range: f64, eta: f64) -> Self {
        let nmax = nt.max(nr) as f64;
        let spacing = (eta * range / nmax).sqrt();
        Self {
            range,
            wavelength: 1.0,
            spacing_tx: spacing,
            spacing_rx: spacing,
            elevation_tx: 0.0,
            elevation_rx: 0.0,
            azimuth: 0.0,
            nt,
            nr,
        }
    }

    pub fn validate(&self, needs_range: bool) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Geometry(format!("{what} must be positive, got {v}")));
        if self.nt == 0 || self.nr == 0 {
            return Err(Error::Geometry("antenna counts must be at least 1".into()));
        }
        if needs_range && !(self.range > 0.0 && self.range.is_finite()) {
            return bad("range", self.range);
        }
        if !(self.wavelength > 0.0) {
            return bad("wavelength", self.wavelength);
        }
        if !(self.spacing_tx > 0.0) {
            return bad("transmit spacing", self.spacing_tx);
        }
        if !(self.spacing_rx > 0.0) {
            return bad("receive spacing", self.spacing_rx);
        }
        for (what, v) in [
            ("transmit elevation", self.elevation_tx),
            ("receive elevation", self.elevation_rx),
            ("azimuth", self.azimuth),
        ] {
            if !v.is_finite() {
                return Err(Error::Geometry(format!("{what} must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// `η = (dr cosθr)(dt cosθt) Nmax / (λ D)`.
pub fn eta_parameter(geom: &LosGeometry) -> f64 {
    let nmax = geom.nt.max(geom.nr) as f64;
    (geom.spacing_rx * geom.elevation_rx.cos()) * (geom.spacing_tx * geom.elevation_tx.cos()) * nmax
        / (geom.wavelength * geom.range)
}

/// Spherical-wavefront LOS channel `H = D_rx H̃ D_tx` for ULAs.
pub fn los_spherical(geom: &LosGeometry) -> Result<ChannelMatrix> {
    geom.validate(true)?;
    let (nt, nr) = (geom.nt, geom.nr);
    let eta = eta_parameter(geom);
    let core = vandermonde_core(nt, nr, eta);
    let lambda = geom.wavelength;
    let (st, sr) = (geom.elevation_tx.sin(), geom.elevation_rx.sin());
    let cphi = geom.azimuth.cos();
    let d_rx: Vec<Complex64> = (0..nr)
        .map(|n| {
            let n = n as f64;
            let phase = 2.0 * n / lambda * geom.spacing_rx * sr * cphi
                + n * n / (lambda * geom.range)
                    * geom.spacing_rx.powi(2)
                    * (1.0 - sr * sr * cphi * cphi);
            Complex64::from_polar(1.0, -PI * phase)
        })
        .collect();
    let d_tx: Vec<Complex64> = (0..nt)
        .map(|m| {
            let m = m as f64;
            let phase = 2.0 * m / lambda * geom.spacing_tx * st
                + m * m / (lambda * geom.range) * geom.spacing_tx.powi(2);
            Complex64::from_polar(1.0, -PI * phase)
        })
        .collect();
    let entries = DMatrix::from_fn(nr, nt, |n, m| d_rx[n] * core[(n, m)] * d_tx[m]);
    ChannelMatrix::new(entries, Normalization::Instantaneous)
}

/// The Vandermonde core `H̃` with entries `exp(j 2π η n m / Nmax)`.
pub fn vandermonde_core(nt: usize, nr: usize, eta: f64) -> DMatrix<Complex64> {
    let nmax = nt.max(nr) as f64;
    DMatrix::from_fn(nr, nt, |n, m| {
        Complex64::from_polar(1.0, 2.0 * PI * eta * (n * m) as f64 / nmax)
    })
}

/// Planar-wavefront (rank-1) LOS channel. The range is ignored.
pub fn los_planar(geom: &LosGeometry) -> Result<ChannelMatrix> {
    geom.validate(false)?;
    let k = 2.0 * PI / geom.wavelength;
    let rx = geom.spacing_rx * geom.elevation_rx.sin() * geom.azimuth.cos();
    let tx = geom.spacing_tx * geom.elevation_tx.sin();
    let entries = DMatrix::from_fn(geom.nr, geom.nt, |n, m| {
        Complex64::from_polar(1.0, -k * (n as f64 * rx + m as f64 * tx))
    });
    ChannelMatrix::new(entries, Normalization::Instantaneous)
}

/// Seedable standard complex Gaussian source: ChaCha8 stream + Box-Muller.
///
/// `stream` selects an independent ChaCha stream, so draw `i` of a Monte
/// Carlo run is reproducible on its own.
pub struct ComplexGaussian {
    rng: ChaCha8Rng,
}

impl ComplexGaussian {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    fn uniform_open(&mut self) -> f64 {
        // 53 random bits mapped to (0, 1].
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// One `CN(0, 1)` sample.
    pub fn sample(&mut self) -> Complex64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = (-u1.ln()).sqrt(); // sqrt(-2 ln u1) * sqrt(1/2)
        let theta = 2.0 * PI * u2;
        Complex64::new(r * theta.cos(), r * theta.sin())
    }
}

/// IID Rayleigh channel with `CN(0, 1)` entries, deterministic in `seed`.
pub fn iid_rayleigh(nt: usize, nr: usize, seed: u64) -> Result<ChannelMatrix> {
    iid_rayleigh_draw(nt, nr, seed, 0)
}

/// Draw number `index` of the IID Rayleigh ensemble seeded by `seed`.
pub fn iid_rayleigh_draw(nt: usize, nr: usize, seed: u64, index: u64) -> Result<ChannelMatrix> {
    if nt == 0 || nr == 0 {
        return Err(Error::InvalidArgument("antenna counts must be at least 1".into()));
    }
    let mut g = ComplexGaussian::new(seed, index);
    // Row-major fill keeps the sample order independent of storage layout.
    let rows: Vec<Complex64> = (0..nt * nr).map(|_| g.sample()).collect();
    let entries = DMatrix::from_row_slice(nr, nt, &rows);
    ChannelMatrix::new(entries, Normalization::Ensemble)
}

/// Singular spectrum and dominant right singular vector of `H`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Nonincreasing singular values, `min(Nt, Nr)` of them.
    pub singular_values: Vec<f64>,
    /// Unit-norm dominant eigenvector of `H*H`; its largest-magnitude entry is
    /// real and positive.
    pub v0: DVector<Complex64>,
    /// `σ0²`.
    pub lambda0: f64,
}

impl SpectralData {
    /// `‖v0‖₁²`.
    pub fn v0_l1_sq(&self) -> f64 {
        let l1: f64 = self.v0.iter().map(|v| v.norm()).sum();
        l1 * l1
    }
}

/// Singular value decomposition of `H`.
///
/// When the top singular value is degenerate, `v0` is whichever vector the
/// decomposition returns first; it is not unique.
pub fn spectral(h: &ChannelMatrix) -> Result<SpectralData> {
    let (nr, nt) = (h.nr(), h.nt());
    let m = faer::Mat::<Complex64>::from_fn(nr, nt, |i, j| h.entry(i, j));
    let svd = m
        .thin_svd()
        .map_err(|e| Error::InvalidArgument(format!("singular value decomposition failed: {e:?}")))?;
    let s = svd.S();
    let v = svd.V();
    let k = nr.min(nt);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    let singular_values: Vec<f64> = order.iter().map(|&i| s[i].re.max(0.0)).collect();
    let top = order[0];
    let mut v0: DVector<Complex64> = DVector::from_iterator(nt, (0..nt).map(|i| v[(i, top)]));
    let norm = v0.norm();
    v0 /= Complex64::new(norm, 0.0);
    // Phase convention: largest-magnitude entry real positive.
    let (imax, _) = v0
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
    let phase = v0[imax] / v0[imax].norm();
    v0 /= phase;
    v0[imax] = Complex64::new(v0[imax].norm(), 0.0);
    let lambda0 = singular_values[0] * singular_values[0];
    Ok(SpectralData {
        singular_values,
        v0,
        lambda0,
    })
}

/// Geometry fields of a JSON channel spec: SI units, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default)]
    pub range_m: Option<f64>,
    pub wavelength_m: f64,
    pub spacing_tx_m: f64,
    pub spacing_rx_m: f64,
    #[serde(default)]
    pub elevation_tx_deg: f64,
    #[serde(default)]
    pub elevation_rx_deg: f64,
    #[serde(default)]
    pub azimuth_deg: f64,
}

impl GeometrySpec {
    pub fn to_geometry(&self, nt: usize, nr: usize) -> LosGeometry {
        LosGeometry {
            range: self.range_m.unwrap_or(f64::INFINITY),
            wavelength: self.wavelength_m,
            spacing_tx: self.spacing_tx_m,
            spacing_rx: self.spacing_rx_m,
            elevation_tx: self.elevation_tx_deg.to_radians(),
            elevation_rx: self.elevation_rx_deg.to_radians(),
            azimuth: self.azimuth_deg.to_radians(),
            nt,
            nr,
        }
    }
}

/// JSON channel description, e.g.
/// `{"model": "iid_rayleigh", "nt": 2, "nr": 2, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ChannelSpec {
    LosSpherical {
        nt: usize,
        nr: usize,
        #[serde(flatten)]
        geometry: GeometrySpec,
    },
    LosPlanar {
        nt: usize,
        nr: usize,
        #[serde(flatten)]
        geometry: GeometrySpec,
    },
    IidRayleigh {
        nt: usize,
        nr: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl ChannelSpec {
    pub fn nt(&self) -> usize {
        match *self {
            Self::LosSpherical { nt, .. } | Self::LosPlanar { nt, .. } | Self::IidRayleigh { nt, .. } => nt,
        }
    }

    pub fn nr(&self) -> usize {
        match *self {
            Self::LosSpherical { nr, .. } | Self::LosPlanar { nr, .. } | Self::IidRayleigh { nr, .. } => nr,
        }
    }

    /// Whether realizations vary from draw to draw.
    pub fn is_random(&self) -> bool {
        matches!(self, Self::IidRayleigh { .. })
    }

    /// Same model with different antenna counts.
    pub fn with_antennas(&self, nt_new: usize, nr_new: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::LosSpherical { nt, nr, .. } | Self::LosPlanar { nt, nr, .. } | Self::IidRayleigh { nt, nr, .. } => {
                *nt = nt_new;
                *nr = nr_new;
            }
        }
        out
    }

    /// Realization number `draw`. `seed` overrides the spec's own seed when given;
    /// deterministic models ignore both.
    pub fn realize(&self, seed: Option<u64>, draw: u64) -> Result<ChannelMatrix> {
        match self {
            Self::LosSpherical { nt, nr, geometry } => los_spherical(&geometry.to_geometry(*nt, *nr)),
            Self::LosPlanar { nt, nr, geometry } => los_planar(&geometry.to_geometry(*nt, *nr)),
            Self::IidRayleigh { nt, nr, seed: own } => {
                iid_rayleigh_draw(*nt, *nr, seed.or(*own).unwrap_or(0), draw)
            }
        }
    }
}
