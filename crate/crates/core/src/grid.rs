//! Periodic box, spectral transforms and fields.
//!
//! Storage is row-major with y contiguous: index `i * ny + m` for the x index `i`
//! and the y index `m`. The box is centered, `x in [-lx/2, lx/2)`, and Fourier
//! values are series coefficients, so a plane wave `e^{i(xi x + eta y)}` has
//! coefficient exactly one and `||u||^2 = lx * ly * sum |c|^2`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Repr {
    Physical,
    Fourier,
}

struct Plans {
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

struct GridInner {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    xi: Vec<f64>,
    eta: Vec<f64>,
    plans: Plans,
}

/// Uniform periodic grid on `[-lx/2, lx/2) x [-ly/2, ly/2)`. Cheap to clone.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Grid({}x{}, lx={}, ly={})",
            self.nx(),
            self.ny(),
            self.lx(),
            self.ly()
        )
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.nx() == other.nx()
                && self.ny() == other.ny()
                && self.lx() == other.lx()
                && self.ly() == other.ly())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(LabError::GridSize(n))
    }
}

fn check_length(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(LabError::BoxLength(l))
    }
}

/// Signed frequency index for FFT slot `j` of an `n`-point transform, in `[-n/2, n/2)`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl Grid {
    /// Grid for the randomization experiments. Besides power-of-two sizes this
    /// requires the y-frequency spacing `2 pi / ly` to be at most 1/8, so that
    /// unit-scale projectors are resolved.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let g = Self::for_profiles(nx, ny, lx, ly)?;
        g.require_unit_scale()?;
        Ok(g)
    }

    /// Grid without the unit-scale frequency requirement, for concentrated
    /// ill-posedness profiles living on small boxes.
    pub fn for_profiles(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_size(nx)?;
        check_size(ny)?;
        check_length(lx)?;
        check_length(ly)?;
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let x = (0..nx).map(|i| -lx / 2.0 + i as f64 * dx).collect();
        let y = (0..ny).map(|m| -ly / 2.0 + m as f64 * dy).collect();
        let tau = 2.0 * std::f64::consts::PI;
        let xi = (0..nx).map(|i| tau * signed_index(i, nx) as f64 / lx).collect();
        let eta = (0..ny).map(|m| tau * signed_index(m, ny) as f64 / ly).collect();
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fx: planner.plan_fft_forward(nx),
            ix: planner.plan_fft_inverse(nx),
            fy: planner.plan_fft_forward(ny),
            iy: planner.plan_fft_inverse(ny),
        };
        Ok(Self {
            inner: Arc::new(GridInner {
                nx,
                ny,
                lx,
                ly,
                x,
                y,
                xi,
                eta,
                plans,
            }),
        })
    }

    pub fn nx(&self) -> usize {
        self.inner.nx
    }
    pub fn ny(&self) -> usize {
        self.inner.ny
    }
    pub fn lx(&self) -> f64 {
        self.inner.lx
    }
    pub fn ly(&self) -> f64 {
        self.inner.ly
    }
    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.lx() / self.nx() as f64
    }
    pub fn dy(&self) -> f64 {
        self.ly() / self.ny() as f64
    }
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }
    pub fn d_xi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lx()
    }
    pub fn d_eta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.ly()
    }
    /// Largest resolved |eta|, attained by the Nyquist mode.
    pub fn eta_max(&self) -> f64 {
        std::f64::consts::PI * self.ny() as f64 / self.ly()
    }
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * self.nx() as f64 / self.lx()
    }
    pub fn x(&self) -> &[f64] {
        &self.inner.x
    }
    pub fn y(&self) -> &[f64] {
        &self.inner.y
    }
    pub fn xi(&self) -> &[f64] {
        &self.inner.xi
    }
    pub fn eta(&self) -> &[f64] {
        &self.inner.eta
    }

    pub fn require_unit_scale(&self) -> Result<()> {
        let spacing = self.d_eta();
        if spacing > 0.125 * (1.0 + 1e-12) {
            return Err(LabError::CoarseFrequency { spacing });
        }
        Ok(())
    }

    /// Fails unless `|eta| <= needed` is inside the resolved band.
    pub fn require_eta(&self, needed: f64) -> Result<()> {
        if needed > self.eta_max() * (1.0 + 1e-12) {
            return Err(LabError::Nyquist {
                needed,
                nyquist: self.eta_max(),
            });
        }
        Ok(())
    }

    /// Dyadic band labels `1, 2, 4, ..` whose band `[M/2, 2M]` meets the grid.
    /// Their sum `Phi(eta) + sum psi(eta/M)` equals one on every grid mode.
    pub fn dyadic_bands(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        let mut m = 2.0;
        while m / 2.0 < self.eta_max() {
            out.push(m);
            m *= 2.0;
        }
        out
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }
}

/// Constructor with the full set of grid checks.
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
    Grid::new(nx, ny, lx, ly)
}

fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        let r1 = (r0 + B).min(rows);
        for c0 in (0..cols).step_by(B) {
            let c1 = (c0 + B).min(cols);
            for r in r0..r1 {
                let row = &src[r * cols..];
                for c in c0..c1 {
                    dst[c * rows + r] = row[c];
                }
            }
        }
    }
}

/// Reusable transform workspace tied to one grid.
pub struct Transformer {
    grid: Grid,
    scratch: Vec<C64>,
    tbuf: Vec<C64>,
}

impl Transformer {
    pub fn new(grid: &Grid) -> Self {
        let p = &grid.inner.plans;
        let s = p
            .fx
            .get_inplace_scratch_len()
            .max(p.ix.get_inplace_scratch_len())
            .max(p.fy.get_inplace_scratch_len())
            .max(p.iy.get_inplace_scratch_len());
        Self {
            grid: grid.clone(),
            scratch: vec![C64::new(0.0, 0.0); s],
            tbuf: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn columns(&mut self, buf: &mut [C64], forward: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        transpose(buf, &mut self.tbuf, nx, ny);
        let plan = if forward {
            &self.grid.inner.plans.fx
        } else {
            &self.grid.inner.plans.ix
        };
        plan.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        transpose(&self.tbuf, buf, ny, nx);
    }

    fn rows(&mut self, buf: &mut [C64], forward: bool) {
        let plan = if forward {
            &self.grid.inner.plans.fy
        } else {
            &self.grid.inner.plans.iy
        };
        plan.process_with_scratch(buf, &mut self.scratch);
    }

    /// Physical values to Fourier coefficients, in place.
    pub fn forward(&mut self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.grid.len());
        self.rows(buf, true);
        self.columns(buf, true);
        let ny = self.grid.ny();
        let norm = 1.0 / self.grid.len() as f64;
        for (i, row) in buf.chunks_mut(ny).enumerate() {
            let base = if i % 2 == 0 { norm } else { -norm };
            for (m, v) in row.iter_mut().enumerate() {
                *v *= if m % 2 == 0 { base } else { -base };
            }
        }
    }

    /// Fourier coefficients to physical values, in place.
    pub fn inverse(&mut self, buf: &mut [C64]) {
        self.inverse_x(buf);
        self.inverse_y(buf);
    }

    /// Fourier to the mixed representation: physical in x, coefficients in y.
    pub fn inverse_x(&mut self, buf: &mut [C64]) {
        assert_eq!(buf.len(), self.grid.len());
        let ny = self.grid.ny();
        for (i, row) in buf.chunks_mut(ny).enumerate() {
            if i % 2 == 1 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
        }
        self.columns(buf, false);
    }

    /// Mixed representation to physical values. Also works on any whole number of rows.
    pub fn inverse_y(&mut self, buf: &mut [C64]) {
        let ny = self.grid.ny();
        assert_eq!(buf.len() % ny, 0);
        for row in buf.chunks_mut(ny) {
            for v in row.iter_mut().skip(1).step_by(2) {
                *v = -*v;
            }
        }
        self.rows(buf, false);
    }

    /// Physical rows to y coefficients (the inverse of [`Transformer::inverse_y`]).
    pub fn forward_y(&mut self, buf: &mut [C64]) {
        let ny = self.grid.ny();
        assert_eq!(buf.len() % ny, 0);
        self.rows(buf, true);
        let norm = 1.0 / ny as f64;
        for row in buf.chunks_mut(ny) {
            for (m, v) in row.iter_mut().enumerate() {
                *v *= if m % 2 == 0 { norm } else { -norm };
            }
        }
    }
}

/// Complex field on a grid, stored either as physical values or Fourier coefficients.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    repr: Repr,
    values: Vec<C64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({:?}, {:?})", self.grid, self.repr)
    }
}

impl Field {
    pub fn zeros(grid: &Grid, repr: Repr) -> Self {
        Self {
            grid: grid.clone(),
            repr,
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<C64>, repr: Repr) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::Parameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            repr,
            values,
        })
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &x in grid.x() {
            for &y in grid.y() {
                values.push(f(x, y));
            }
        }
        Self {
            grid: grid.clone(),
            repr: Repr::Physical,
            values,
        }
    }

    /// Builds a field from its coefficients `c(xi, eta)`.
    pub fn from_spectrum(grid: &Grid, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &xi in grid.xi() {
            for &eta in grid.eta() {
                values.push(f(xi, eta));
            }
        }
        Self {
            grid: grid.clone(),
            repr: Repr::Fourier,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn repr(&self) -> Repr {
        self.repr
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Strict transform: errors if the field is already in Fourier form.
    pub fn to_fourier(&self) -> Result<Field> {
        if self.repr != Repr::Physical {
            return Err(LabError::Representation {
                expected: "physical",
            });
        }
        Ok(self.fourier())
    }

    /// Strict transform: errors if the field is already physical.
    pub fn to_physical(&self) -> Result<Field> {
        if self.repr != Repr::Fourier {
            return Err(LabError::Representation { expected: "fourier" });
        }
        Ok(self.physical())
    }

    /// Fourier form, converting if needed.
    pub fn fourier(&self) -> Field {
        match self.repr {
            Repr::Fourier => self.clone(),
            Repr::Physical => {
                let mut v = self.values.clone();
                Transformer::new(&self.grid).forward(&mut v);
                Field {
                    grid: self.grid.clone(),
                    repr: Repr::Fourier,
                    values: v,
                }
            }
        }
    }

    /// Physical form, converting if needed.
    pub fn physical(&self) -> Field {
        match self.repr {
            Repr::Physical => self.clone(),
            Repr::Fourier => {
                let mut v = self.values.clone();
                Transformer::new(&self.grid).inverse(&mut v);
                Field {
                    grid: self.grid.clone(),
                    repr: Repr::Physical,
                    values: v,
                }
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `||u||^2` by quadrature or Parseval, depending on the representation.
    pub fn norm_sqr(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        match self.repr {
            Repr::Physical => s * self.grid.cell_area(),
            Repr::Fourier => s * self.grid.area(),
        }
    }

    /// `int u conj(v)`.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let o = if other.repr == self.repr {
            other.clone()
        } else if self.repr == Repr::Fourier {
            other.fourier()
        } else {
            other.physical()
        };
        let s: C64 = self
            .values
            .iter()
            .zip(&o.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(match self.repr {
            Repr::Physical => s * self.grid.cell_area(),
            Repr::Fourier => s * self.grid.area(),
        })
    }

    fn aligned(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(match (self.repr, other.repr) {
            (a, b) if a == b => other.clone(),
            (Repr::Fourier, _) => other.fourier(),
            _ => other.physical(),
        })
    }

    /// `self + c * other`, in the representation of `self`.
    pub fn axpy(&self, c: C64, other: &Field) -> Result<Field> {
        let o = self.aligned(other)?;
        let values = self
            .values
            .iter()
            .zip(&o.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            repr: self.repr,
            values,
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, c: C64) -> Field {
        Field {
            grid: self.grid.clone(),
            repr: self.repr,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Largest pointwise difference between physical values.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        let a = self.physical();
        let b = a.aligned(other)?;
        Ok(a.values
            .iter()
            .zip(&b.values)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max))
    }
}

pub fn transform_forward(field: &Field) -> Result<Field> {
    field.to_fourier()
}

pub fn transform_inverse(field: &Field) -> Result<Field> {
    field.to_physical()
}

fn lp_of(values: impl Iterator<Item = f64>, p: f64, weight: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else if p == 2.0 {
        (values.map(|v| v * v).sum::<f64>() * weight).sqrt()
    } else {
        (values.map(|v| v.powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("Lebesgue exponent {p} < 1")))
    }
}

/// `||u||_{L^p}` by the rectangle rule, which is spectrally accurate for periodic data.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let u = field.physical();
    Ok(lp_of(
        u.values.iter().map(|v| v.norm()),
        p,
        u.grid.cell_area(),
    ))
}

/// `|| ||u(x, .)||_{L^r_y} ||_{L^q_x}`.
pub fn mixed_xy_norm(field: &Field, q: f64, r: f64) -> Result<f64> {
    check_exponent(q)?;
    check_exponent(r)?;
    let u = field.physical();
    Ok(mixed_of_rows(&u.values, u.grid(), q, r))
}

pub(crate) fn mixed_of_rows(values: &[C64], grid: &Grid, q: f64, r: f64) -> f64 {
    let ny = grid.ny();
    let rows = values
        .chunks(ny)
        .map(|row| lp_of(row.iter().map(|v| v.norm()), r, grid.dy()));
    lp_of(rows, q, grid.dx())
}

const MAGIC: &[u8; 4] = b"HWF1";

/// Writes physical values as `HWF1`: magic, u32 nx, u32 ny, f64 lx, f64 ly, then
/// interleaved little-endian re/im in row-major order.
pub fn write_hwf1(mut w: impl Write, field: &Field) -> Result<()> {
    let u = field.physical();
    let g = u.grid();
    let mut buf = Vec::with_capacity(28 + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    buf.extend_from_slice(&g.lx().to_le_bytes());
    buf.extend_from_slice(&g.ly().to_le_bytes());
    for v in &u.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_hwf1(mut r: impl Read) -> Result<Field> {
    let mut head = [0u8; 28];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let nx = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let lx = f64::from_le_bytes(head[12..20].try_into().unwrap());
    let ly = f64::from_le_bytes(head[20..28].try_into().unwrap());
    let grid = Grid::for_profiles(nx, ny, lx, ly)?;
    let mut body = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut body)
        .map_err(|_| LabError::Format("truncated body".into()))?;
    let values = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Field::from_values(&grid, values, Repr::Physical)
}

pub fn save_hwf1(path: &Path, field: &Field) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_hwf1(std::io::BufWriter::new(f), field)
}

pub fn load_hwf1(path: &Path) -> Result<Field> {
    let f = std::fs::File::open(path)?;
    read_hwf1(std::io::BufReader::new(f))
}
