//! Deterministic field samplers used to build problem instances.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{RealField, RngState};
use crate::error::{Error, Result};
use crate::spectral::{spectral_gradient, BoundaryCondition, GridSpec, Transform2d, WavenumberGrid};

/// Gaussian random field with squared-exponential covariance `exp(-r²/(2ℓ²))`.
///
/// White noise is shaped in Fourier space by the amplitude filter `exp(-|ξ|²ℓ²/4)` with the
/// zero mode removed, then rescaled so the expected pointwise variance is `std²`. The
/// sample mean is therefore exactly `mean`. The FFT treats the grid as periodic
/// whatever its boundary condition.
pub fn sample_grf(grid: &GridSpec, correlation_length: f64, mean: f64, std: f64, rng: &mut RngState) -> Result<RealField> {
    if !(correlation_length > 0.0) {
        return Err(Error::InvalidParameter(format!("correlation length must be > 0, got {correlation_length}")));
    }
    if !(std >= 0.0) {
        return Err(Error::InvalidParameter(format!("std must be >= 0, got {std}")));
    }
    if std == 0.0 {
        return Ok(RealField::constant(grid, mean));
    }
    let periodic = GridSpec::periodic(grid.nx, grid.ny, grid.lx, grid.ly)?;
    let transform = Transform2d::for_grid(&periodic)?;
    let waves = WavenumberGrid::new(&periodic);

    let noise: Vec<Complex64> = (0..grid.len()).map(|_| Complex64::new(rng.normal(), 0.0)).collect();
    let mut modes = transform.forward(&noise)?;

    // Shift the exponent by the smallest nonzero |ξ|² so long correlation lengths do not
    // underflow; the common factor cancels in the normalization.
    let xi_min2 = (0..grid.nx)
        .flat_map(|i| (0..grid.ny).map(move |j| (i, j)))
        .map(|(i, j)| waves.abs2(i, j))
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let ell2 = correlation_length * correlation_length;
    let mut power = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let k = grid.index(i, j);
            let xi2 = waves.abs2(i, j);
            let amp = if xi2 == 0.0 { 0.0 } else { (-(xi2 - xi_min2) * ell2 / 4.0).exp() };
            power += amp * amp;
            modes[k] *= amp;
        }
    }
    if power == 0.0 {
        return Ok(RealField::constant(grid, mean));
    }
    let variance = power / grid.len() as f64;
    let scale = std / variance.sqrt();
    let field = transform.inverse(&modes)?;
    let data = field.iter().map(|v| mean + scale * v.re).collect();
    RealField::from_vec(*grid, data)
}

/// Divergence-free velocity `(∂ψ/∂y, -∂ψ/∂x)` from a periodic stream function.
pub fn stream_velocity(psi: &RealField) -> Result<(RealField, RealField)> {
    let grid = psi.grid();
    if grid.bc != BoundaryCondition::Periodic {
        return Err(Error::IncompatibleTransform { kind: "stream function derivative".into(), bc: grid.bc.name().into() });
    }
    let transform = Transform2d::for_grid(grid)?;
    let (dx, dy) = spectral_gradient(&transform, &psi.to_complex())?;
    let vx = dy.real_part();
    let vy = dx.real_part().map(|v| -v);
    Ok((vx, vy))
}

/// `amplitude · exp(-|x - c|²/(2 width²))`, with minimum-image distances on periodic grids.
pub fn gaussian_bump(grid: &GridSpec, center: (f64, f64), width: f64, amplitude: f64) -> Result<RealField> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("bump width must be > 0, got {width}")));
    }
    let periodic = grid.bc == BoundaryCondition::Periodic;
    let wrap = |d: f64, l: f64| {
        if periodic {
            let d = d.rem_euclid(l);
            d.min(l - d)
        } else {
            d
        }
    };
    Ok(RealField::from_fn(grid, |x, y| {
        let dx = wrap(x - center.0, grid.lx);
        let dy = wrap(y - center.1, grid.ly);
        amplitude * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
    }))
}

/// `alpha · Σ_{i,j=1..modes} c_ij sin(iπx/lx) sin(jπy/ly)`, `c_ij ~ N(0, coeff_std²)`.
///
/// Coefficients are drawn row by row (`i` outer). Defaults used for Newton starts are
/// `modes = 4`, `coeff_std = 0.1`, `alpha = 4.0`.
pub fn sine_noise(grid: &GridSpec, modes: usize, coeff_std: f64, alpha: f64, rng: &mut RngState) -> Result<RealField> {
    let coeffs: Vec<f64> = (0..modes * modes).map(|_| coeff_std * rng.normal()).collect();
    sine_series(grid, modes, &coeffs, alpha)
}

/// Deterministic sine series with explicit coefficients `coeffs[(i-1)·modes + (j-1)]`.
pub fn sine_series(grid: &GridSpec, modes: usize, coeffs: &[f64], alpha: f64) -> Result<RealField> {
    if grid.bc != BoundaryCondition::DirichletInterior {
        return Err(Error::IncompatibleTransform { kind: "sine series".into(), bc: grid.bc.name().into() });
    }
    if coeffs.len() != modes * modes {
        return Err(crate::error::mismatch(modes * modes, coeffs.len()));
    }
    Ok(RealField::from_fn(grid, |x, y| {
        let mut s = 0.0;
        for i in 1..=modes {
            let sx = (i as f64 * PI * x / grid.lx).sin();
            for j in 1..=modes {
                s += coeffs[(i - 1) * modes + (j - 1)] * sx * (j as f64 * PI * y / grid.ly).sin();
            }
        }
        alpha * s
    }))
}

/// Absorbing-layer damping profile.
///
/// Zero in the interior; within `layer_points` cells of any edge it rises as
/// `strength · (depth/layer)²`, reaching `strength` on the outermost cells. Corners take
/// the larger of the two axis ramps.
pub fn sponge_profile(grid: &GridSpec, layer_points: usize, strength: f64) -> Result<RealField> {
    if 2 * layer_points >= grid.nx.min(grid.ny) {
        return Err(Error::InvalidParameter(format!(
            "sponge layer of {layer_points} points too wide for a {}x{} grid",
            grid.nx, grid.ny
        )));
    }
    if !(strength >= 0.0) {
        return Err(Error::InvalidParameter(format!("sponge strength must be >= 0, got {strength}")));
    }
    let mut out = RealField::zeros(grid);
    if layer_points == 0 {
        return Ok(out);
    }
    let layer = layer_points as f64;
    let ramp = |idx: usize, n: usize| {
        let dist = idx.min(n - 1 - idx);
        if dist >= layer_points {
            0.0
        } else {
            let t = (layer - dist as f64) / layer;
            t * t
        }
    };
    for i in 0..grid.nx {
        let rx = ramp(i, grid.nx);
        for j in 0..grid.ny {
            let k = grid.index(i, j);
            out.data_mut()[k] = strength * rx.max(ramp(j, grid.ny));
        }
    }
    Ok(out)
}

/// Synthetic layered velocity model with curved, sigmoid-blended interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredMedium {
    pub layers: usize,
    /// `c_max / c_min`.
    pub contrast: f64,
    pub c_min: f64,
    /// Interface undulation amplitude as a fraction of `ly`.
    pub curvature: f64,
    /// Sigmoid blend half-width in grid cells.
    pub blend_cells: f64,
}

impl Default for LayeredMedium {
    fn default() -> Self {
        Self { layers: 2, contrast: 2.0, c_min: 1.0, curvature: 0.05, blend_cells: 1.0 }
    }
}

/// Velocity increases with `y` from `c_min` in the first layer to `contrast · c_min` in
/// the last; intermediate layer speeds and interface shapes are random.
pub fn layered_velocity(grid: &GridSpec, medium: &LayeredMedium, rng: &mut RngState) -> Result<RealField> {
    if medium.layers < 1 || !(medium.contrast >= 1.0) || !(medium.c_min > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid layered medium {medium:?}")));
    }
    let c_max = medium.contrast * medium.c_min;
    let mut speeds: Vec<f64> = (0..medium.layers).map(|_| rng.uniform(medium.c_min, c_max)).collect();
    speeds.sort_by(f64::total_cmp);
    speeds[0] = medium.c_min;
    if medium.layers > 1 {
        speeds[medium.layers - 1] = c_max;
    }
    let mut depths: Vec<f64> = (1..medium.layers).map(|_| rng.uniform(0.25, 0.75) * grid.ly).collect();
    depths.sort_by(f64::total_cmp);
    let shapes: Vec<(f64, f64)> = depths
        .iter()
        .map(|_| (rng.uniform(1.0, 2.0).round(), rng.uniform(0.0, 2.0 * PI)))
        .collect();
    let width = (medium.blend_cells * grid.hy()).max(1e-12);
    Ok(RealField::from_fn(grid, |x, y| {
        let mut c = speeds[0];
        for (l, (&d, &(freq, phase))) in depths.iter().zip(&shapes).enumerate() {
            let iface = d + medium.curvature * grid.ly * (2.0 * PI * freq * x / grid.lx + phase).sin();
            let s = 1.0 / (1.0 + (-(y - iface) / width).exp());
            c += (speeds[l + 1] - speeds[l]) * s;
        }
        c
    }))
}
