//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerance and work budget for [`integrate_1d`] and [`integrate_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(absolute_tolerance: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            absolute_tolerance,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.absolute_tolerance.is_nan() || self.absolute_tolerance <= 0.0 {
            return Err(Error::domain(
                "absolute_tolerance",
                self.absolute_tolerance,
                "> 0",
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }

    fn with_tolerance(self, absolute_tolerance: f64) -> Self {
        QuadratureSpec {
            absolute_tolerance,
            ..self
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            absolute_tolerance: 1e-10,
            max_subdivisions: 256,
        }
    }
}

// Kronrod abscissae (descending, last is the centre) and weights; the Gauss
// 7-point rule uses the odd-indexed abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    estimate: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let estimate = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !estimate.is_finite() || !error.is_finite() {
        return Err(Error::domain("integrand", estimate, "finite on the interval"));
    }
    Ok(Panel {
        lo,
        hi,
        estimate,
        error,
    })
}

/// Integrates `f` over `[a, b]`, bisecting the panel with the largest error
/// estimate until the summed estimate falls below `spec.absolute_tolerance`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain("bounds", if a.is_finite() { b } else { a }, "finite"));
    }
    if a > b {
        return Err(Error::InvalidParameter(format!("lower bound {a} exceeds upper bound {b}")));
    }
    if a == b {
        return Ok(0.0);
    }

    let first = gauss_kronrod(&f, a, b)?;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);

    while error > spec.absolute_tolerance {
        if heap.len() >= spec.max_subdivisions {
            return Err(Error::Quadrature {
                lo: a,
                hi: b,
                error_estimate: error,
                tolerance: spec.absolute_tolerance,
                subdivisions: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = gauss_kronrod(&f, worst.lo, mid)?;
        let right = gauss_kronrod(&f, mid, worst.hi)?;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum so the running updates do not accumulate rounding.
    Ok(heap.iter().map(|p| p.estimate).sum())
}

/// Axis-aligned integration region `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rectangle { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Nested adaptive quadrature of `f(x, y)` over `region`.
///
/// Half the tolerance goes to the outer integral; the inner integrals each get
/// the other half divided by the outer width, so their accumulated error is
/// bounded by the same amount.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, region: Rectangle, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let width = region.x1 - region.x0;
    let outer = spec.with_tolerance(0.5 * spec.absolute_tolerance);
    let inner = spec.with_tolerance(0.5 * spec.absolute_tolerance / width.max(1.0));

    // The outer integrand cannot return a Result, so the first inner failure is
    // parked here and reported after the outer pass.
    let failure = std::cell::RefCell::new(None);
    let value = integrate_1d(
        |x| match integrate_1d(|y| f(x, y), region.y0, region.y1, &inner) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        region.x0,
        region.x1,
        &outer,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    value
}
