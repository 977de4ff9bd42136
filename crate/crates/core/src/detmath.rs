//! Deterministic elementary functions.
//!
//! The simulated model builds probability rows from seeded variates, and the
//! reproducibility contract promises bit-identical rows across platforms.
//! `f64::ln` / `f64::exp` go through the platform libm, which is allowed to
//! differ in the last ulp between systems, so the row pipeline uses these
//! fixed software implementations instead. They are composed only of IEEE-754
//! basic operations (+, -, *, /) and integer bit manipulation in a fixed
//! evaluation order, which the standard requires to be exactly rounded — the
//! same inputs give the same bits everywhere.
//!
//! Accuracy is within a few ulps of libm over the ranges the engine uses,
//! which the tests pin at 1e-13 relative error. Values below `2^-1022` flush
//! to zero in [`exp`]; the engine only exponentiates log-weight differences,
//! where anything that small is indistinguishable from zero mass.

// ln(2) split Cody-Waite style: HI carries the leading bits exactly, LO the
// remainder, so `k * LN2_HI` is exact for the `k` range used here.
const LN2_HI: f64 = f64::from_bits(0x3FE6_2E42_FEE0_0000);
const LN2_LO: f64 = f64::from_bits(0x3DEA_39EF_3579_3C76);
const INV_LN2: f64 = std::f64::consts::LOG2_E;

/// Natural logarithm. `ln(0) = -inf`, negative input yields NaN.
pub fn ln(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }

    let mut bits = x.to_bits();
    let mut exp_adj: i64 = 0;
    if bits >> 52 == 0 {
        // subnormal: renormalize by 2^54
        bits = (x * 18_014_398_509_481_984.0).to_bits();
        exp_adj = -54;
    }
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023 + exp_adj;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        e += 1;
    }

    // ln(m) = 2 atanh(s) with s = (m-1)/(m+1), |s| <= 0.172
    let s = (m - 1.0) / (m + 1.0);
    let z = s * s;
    let mut p = 1.0 / 27.0;
    p = p * z + 1.0 / 25.0;
    p = p * z + 1.0 / 23.0;
    p = p * z + 1.0 / 21.0;
    p = p * z + 1.0 / 19.0;
    p = p * z + 1.0 / 17.0;
    p = p * z + 1.0 / 15.0;
    p = p * z + 1.0 / 13.0;
    p = p * z + 1.0 / 11.0;
    p = p * z + 1.0 / 9.0;
    p = p * z + 1.0 / 7.0;
    p = p * z + 1.0 / 5.0;
    p = p * z + 1.0 / 3.0;
    p = p * z + 1.0;
    let ln_m = 2.0 * s * p;

    let ef = e as f64;
    ef * LN2_HI + (ln_m + ef * LN2_LO)
}

/// Natural exponential. Results below `2^-1022` flush to zero.
pub fn exp(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 709.0 {
        return f64::INFINITY;
    }
    if x < -745.0 {
        return 0.0;
    }

    let kf = (x * INV_LN2 + 0.5).floor();
    let k = kf as i64;
    if k < -1022 {
        return 0.0;
    }
    if k > 1023 {
        return f64::INFINITY;
    }
    let r = (x - kf * LN2_HI) - kf * LN2_LO;

    // exp(r) over |r| <= 0.347 via the order-14 Taylor polynomial
    let mut p = 1.0 / 87_178_291_200.0; // 1/14!
    p = p * r + 1.0 / 6_227_020_800.0;
    p = p * r + 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;

    p * f64::from_bits(((k + 1023) as u64) << 52)
}
