//! Adaptive Gauss-Kronrod quadrature and bracketed bisection.

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        // Gauss nodes are the odd-indexed Kronrod nodes
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    Panel { a, b, value, error }
}

/// Globally adaptive G7K15 quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`. The GK15 difference
/// is a pessimistic error bound for smooth integrands, so results are
/// usually several digits better than requested.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let mut panels = vec![gk15(&f, a, b)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::NonFinite("quadrature integrand"));
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || error < f64::MIN_POSITIVE {
            return Ok(QuadResult {
                value,
                error,
                intervals: panels.len(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if panels.len() + 2 > opts.max_intervals || mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            // roundoff floor: accept when the remaining error is at the
            // level of the floating-point resolution of the result
            if error <= 1e2 * f64::EPSILON * value.abs() {
                panels.push(p);
                continue;
            }
            return Err(Error::Quadrature {
                a,
                b,
                estimate: value,
                error,
            });
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BisectOptions {
    /// Stop once the bracket is narrower than `abs_tol + rel_tol * |x|`.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions {
            abs_tol: 0.0,
            rel_tol: 1e-13,
            max_iter: 400,
        }
    }
}

/// Solves `f(x) = target` on `[lo, hi]` for a monotone `f` (either
/// direction) by bisection. Fails when the target is not bracketed.
pub fn bisect_monotone<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    target: f64,
    lo: f64,
    hi: f64,
    opts: BisectOptions,
) -> Result<f64> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let fa = f(a)? - target;
    let fb = f(b)? - target;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::OutOfDomain {
            what: "monotone inversion",
            value: target,
            lo: (fa + target).min(fb + target),
            hi: (fa + target).max(fb + target),
        });
    }
    let increasing = fb > fa;
    for _ in 0..opts.max_iter {
        let m = 0.5 * (a + b);
        if b - a <= opts.abs_tol + opts.rel_tol * m.abs() || m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m)? - target;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == increasing {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}
