//! Float helpers for the `no_std` build.
//!
//! `core` has no transcendental methods on `f64`, so everything routes through
//! `libm`. The soft-float implementations are also deterministic across
//! platforms, unlike the system libm that `std` binds to.

/// Extension trait mapping the usual `f64` method names onto `libm`.
pub trait FloatExt {
    fn exp(self) -> f64;
    fn ln(self) -> f64;
    fn ln_1p(self) -> f64;
    fn exp_m1(self) -> f64;
    fn sqrt(self) -> f64;
    fn powf(self, e: f64) -> f64;
    fn powi(self, e: i32) -> f64;
    fn cos(self) -> f64;
    fn sin(self) -> f64;
    fn atan2(self, other: f64) -> f64;
    fn abs(self) -> f64;
    fn floor(self) -> f64;
    fn round(self) -> f64;
}

impl FloatExt for f64 {
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn ln_1p(self) -> f64 {
        libm::log1p(self)
    }
    #[inline]
    fn exp_m1(self) -> f64 {
        libm::expm1(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn powf(self, e: f64) -> f64 {
        libm::pow(self, e)
    }
    #[inline]
    fn powi(self, e: i32) -> f64 {
        libm::pow(self, e as f64)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn sin(self) -> f64 {
        libm::sin(self)
    }
    #[inline]
    fn atan2(self, other: f64) -> f64 {
        libm::atan2(self, other)
    }
    #[inline]
    fn abs(self) -> f64 {
        libm::fabs(self)
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    #[inline]
    fn round(self) -> f64 {
        libm::round(self)
    }
}

pub const PI: f64 = core::f64::consts::PI;
pub const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_7;
pub const SQRT_TWO: f64 = core::f64::consts::SQRT_2;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_TWO_PI).exp()
}

/// Standard normal log-density.
#[inline]
pub fn normal_logpdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_TWO_PI
}

/// Standard normal CDF via `erfc`, accurate in both tails.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_TWO)
}

/// Log of the standard normal CDF, stable for deep negative arguments.
pub fn normal_log_cdf(x: f64) -> f64 {
    if x > -1.0 {
        normal_cdf(x).ln()
    } else {
        // ln(erfc(y)/2) with y = -x/sqrt(2); erfc underflows near y ~ 26.6,
        // so switch to the asymptotic expansion well before that.
        let y = -x / SQRT_TWO;
        if y < 20.0 {
            (0.5 * libm::erfc(y)).ln()
        } else {
            let y2 = y * y;
            // erfc(y) ~ exp(-y^2) / (y sqrt(pi)) * (1 - 1/(2y^2) + 3/(4y^4))
            let series = (1.0 - 0.5 / y2 + 0.75 / (y2 * y2)).ln();
            -y2 - y.ln() - 0.5 * PI.ln() - core::f64::consts::LN_2 + series
        }
    }
}

/// Standard normal quantile.
///
/// Solved by safeguarded Newton iterations on [`normal_cdf`]; converges to
/// full double precision everywhere in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0,1)");
    if p == 0.5 {
        return 0.0;
    }
    // Crude starting point from the tail asymptotics of the CDF.
    let pm = if p < 0.5 { p } else { 1.0 - p };
    let t = (-2.0 * pm.ln()).sqrt();
    let mut x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
    if p < 0.5 {
        x = -x;
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..60 {
        let f = normal_cdf(x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = normal_pdf(x);
        let step = if d > 0.0 { f / d } else { 0.0 };
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Log-gamma via the Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    // Canonical table digits, beyond f64 resolution.
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        PI.ln() - (PI * x).sin().abs().ln() - ln_gamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut acc = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + 7.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Regularized incomplete beta function I_x(a, b) by Lentz's continued
/// fraction.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    // Use the symmetry that makes the continued fraction converge fast.
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - inc_beta(b, a, 1.0 - x)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Student-t CDF with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    assert!(dof > 0.0);
    if t == 0.0 {
        return 0.5;
    }
    let x = dof / (dof + t * t);
    let tail = 0.5 * inc_beta(0.5 * dof, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student-t quantile, safeguarded Newton on [`student_t_cdf`].
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "student_t_quantile requires p in (0,1)");
    assert!(dof > 0.0);
    if p == 0.5 {
        return 0.0;
    }
    let mut x = normal_quantile(p);
    // Density of the t distribution for the Newton step.
    let ln_norm = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln();
    let pdf = |t: f64| (ln_norm - 0.5 * (dof + 1.0) * (1.0 + t * t / dof).ln()).exp();
    let (mut lo, mut hi) = (-1e10_f64, 1e10_f64);
    for _ in 0..100 {
        let f = student_t_cdf(x, dof) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Numerically stable log(sum(exp(v))).
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}
