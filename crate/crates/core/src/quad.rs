//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands on finite intervals.
//!
//! All components share the abscissae, so moments of one weight function
//! cost a single set of evaluations. The panel with the largest error
//! relative to its component tolerance is bisected until every component
//! meets `max(abs_tol, rel_tol·|I_k|)`.

use alloc::vec::Vec;

use crate::{Error, Result};

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

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const K: usize> {
    pub value: [f64; K],
    /// Estimated absolute error per component.
    pub error: [f64; K],
    pub panels: usize,
}

#[derive(Clone, Copy)]
struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
}

fn gk15<const K: usize>(f: &mut impl FnMut(f64) -> [f64; K], a: f64, b: f64) -> Panel<K> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kr = [0.0; K];
    let mut ga = [0.0; K];
    let fc = f(c);
    for k in 0..K {
        kr[k] = WGK[7] * fc[k];
        ga[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        for k in 0..K {
            let s = f1[k] + f2[k];
            kr[k] += WGK[j] * s;
            if j % 2 == 1 {
                ga[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for k in 0..K {
        value[k] = kr[k] * h;
        error[k] = ((kr[k] - ga[k]) * h).abs();
    }
    Panel { a, b, value, error }
}

/// `∫_a^b f`. Non-finite integrand values are reported as
/// [`Error::InvalidParameter`].
pub fn integrate<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult<K>> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::param(
            "integration bounds must be finite with a <= b",
        ));
    }
    let mut panels: Vec<Panel<K>> = alloc::vec![gk15(&mut f, a, b)];
    loop {
        let mut total = [0.0; K];
        let mut err = [0.0; K];
        for p in &panels {
            for k in 0..K {
                total[k] += p.value[k];
                err[k] += p.error[k];
            }
        }
        if total.iter().chain(err.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("integrand is not finite on the interval"));
        }
        let tol: [f64; K] =
            core::array::from_fn(|k| opts.abs_tol.max(opts.rel_tol * total[k].abs()));
        let worst_ratio = (0..K)
            .map(|k| err[k] / tol[k].max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if worst_ratio <= 1.0 {
            return Ok(QuadResult {
                value: total,
                error: err,
                panels: panels.len(),
            });
        }
        if panels.len() >= opts.max_panels {
            let achieved = (0..K)
                .map(|k| err[k] / total[k].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(Error::QuadratureNonConvergence {
                achieved,
                requested: opts.rel_tol,
            });
        }
        // split the panel contributing most to the worst component
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    i,
                    (0..K)
                        .map(|k| p.error[k] / tol[k].max(f64::MIN_POSITIVE))
                        .fold(0.0, f64::max),
                )
            })
            .fold(
                (0, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            let achieved = (0..K)
                .map(|k| err[k] / total[k].abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            return Err(Error::QuadratureNonConvergence {
                achieved,
                requested: opts.rel_tol,
            });
        }
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
    }
}
