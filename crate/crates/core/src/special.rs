//! Normal distribution functions and randomized probability integral
//! transforms for the discrete laws used by the dyadic coupling.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_ur, ln_gamma};
use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile, Wichura's AS 241 (PPND16). Relative error
/// about 1e-16 over (0, 1); rational in the centre, rational in
/// `sqrt(-ln p)` in the tails.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "p = {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Below this count the Binomial(k, 1/2) CDF is summed directly.
const DIRECT_SUM_MAX: u64 = 64;

fn binomial_half_ln_pmf(k: u64, x: u64) -> f64 {
    ln_gamma(k as f64 + 1.0) - ln_gamma(x as f64 + 1.0) - ln_gamma((k - x) as f64 + 1.0)
        - k as f64 * LN_2
}

/// `P(X <= x - 1) + v * P(X = x)` for `X ~ Binomial(k, 1/2)` and `x <= k/2`.
fn binomial_half_lower(k: u64, x: u64, v: f64) -> f64 {
    if k <= DIRECT_SUM_MAX {
        let mut pmf = 0.5f64.powi(k as i32);
        let mut below = 0.0;
        for i in 0..x {
            below += pmf;
            pmf *= (k - i) as f64 / (i + 1) as f64;
        }
        below + v * pmf
    } else {
        let below = if x == 0 {
            0.0
        } else {
            beta_reg((k - x + 1) as f64, x as f64, 0.5)
        };
        below + v * binomial_half_ln_pmf(k, x).exp()
    }
}

/// Randomized probability integral transform of `x` under
/// Binomial(k, 1/2): `F(x - 1) + v * p(x)`. Uniform on (0, 1) when `x` is
/// Binomial(k, 1/2) and `v` an independent uniform.
pub fn binomial_half_pit(k: u64, x: u64, v: f64) -> f64 {
    debug_assert!(x <= k);
    if 2 * x <= k {
        binomial_half_lower(k, x, v)
    } else {
        // symmetry: U(x, v) = 1 - U(k - x, 1 - v)
        1.0 - binomial_half_lower(k, k - x, 1.0 - v)
    }
}

/// Randomized probability integral transform of `x` under Poisson(mean).
pub fn poisson_pit(mean: f64, x: u64, v: f64) -> f64 {
    let ln_pmf = x as f64 * mean.ln() - mean - ln_gamma(x as f64 + 1.0);
    let below = if x == 0 { 0.0 } else { gamma_ur(x as f64, mean) };
    below + v * ln_pmf.exp()
}

/// Keep a transformed uniform strictly inside (0, 1) before inverting.
pub(crate) fn clamp_open(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}
