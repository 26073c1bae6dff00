use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kahan–Babuška (Neumaier) compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated sum of complex terms, component-wise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `e(num/den) = exp(2 pi i num/den)` for an exact residue `num mod den`.
pub fn unit_root(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    Complex64::new(c, s)
}

// 15-point Kronrod rule and its embedded 7-point Gauss rule on [-1, 1]
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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

const MAX_DEPTH: u32 = 40;

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<(f64, f64)> {
    let (v, e) = kronrod(f, a, b);
    if e <= tol || (e <= 1e-15 * v.abs()) {
        return Ok((v, e));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NoConvergence(format!("quadrature on [{a}, {b}] stalled at error {e:e}")));
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive(f, a, m, tol / 2.0, depth + 1)?;
    let (v2, e2) = adaptive(f, m, b, tol / 2.0, depth + 1)?;
    Ok((v1 + v2, e1 + e2))
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`, starting from
/// `panels` equal pieces; returns the value and the summed error estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> Result<(f64, f64)> {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut value = CompensatedSum::new();
    let mut err = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * w;
        let hi = if i + 1 == panels { b } else { lo + w };
        let (v, e) = adaptive(&f, lo, hi, tol / panels as f64, 0)?;
        value.add(v);
        err += e;
    }
    Ok((value.value(), err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-10).abs() < 1e-20);
    }

    #[test]
    fn kronrod_is_exact_on_polynomials() {
        let (v, e) = integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1, 1e-12).unwrap();
        assert!((v - (102.4 - 8.0)).abs() < 1e-12 && e < 1e-10);
        let (v, _) = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 3, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn unit_roots() {
        assert!((unit_root(1, 4) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((unit_root(-1, 4) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((unit_root(7, 7) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
