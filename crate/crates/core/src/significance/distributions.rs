//! Distribution functions needed by the tests: F upper tail via the
//! regularized incomplete beta function, and the studentized range CDF and
//! quantile by numerical quadrature.

use std::sync::OnceLock;

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const BETA_MAX_ITER: usize = 500;
const BETA_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence(format!(
        "incomplete beta continued fraction (a={a}, b={b}, x={x})"
    )))
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!(
            "incomplete beta needs a, b > 0 and x in [0, 1] (a={a}, b={b}, x={x})"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fastest below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// `Pr(F > f)` for an F distribution with `(d1, d2)` degrees of freedom.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::invalid(format!("F degrees of freedom must be > 0 ({d1}, {d2})")));
    }
    if f.is_nan() {
        return Err(Error::NonFinite("F statistic".into()));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

const GL_POINTS: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_POINTS] {
    static RULE: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = [(0.0, 0.0); GL_POINTS];
        for i in 0..n.div_ceil(2) {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, 0.0);
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p2) / (j + 1) as f64;
                }
                dp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
                let dx = p0 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule[i] = (-x, w);
            rule[n - 1 - i] = (x, w);
        }
        rule
    })
}

/// Composite Gauss–Legendre quadrature of `f` over `[lo, hi]` in `pieces` panels.
fn integrate(lo: f64, hi: f64, pieces: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let width = (hi - lo) / pieces as f64;
    let half = width / 2.0;
    let mut total = 0.0;
    for p in 0..pieces {
        let mid = lo + (p as f64 + 0.5) * width;
        total += gauss_legendre()
            .iter()
            .map(|&(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half;
    }
    total
}

/// CDF of the range of `k` independent standard normals.
fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let inner = integrate(-8.5, 8.5, 34, |z| {
        let diff = normal_cdf(z) - normal_cdf(z - w);
        normal_pdf(z) * diff.max(0.0).powi(km1)
    });
    (k as f64 * inner).clamp(0.0, 1.0)
}

fn check_range_args(k: usize, df: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(format!("studentized range needs k >= 2, got {k}")));
    }
    if !(df >= 1.0) {
        return Err(Error::invalid(format!(
            "studentized range needs df >= 1, got {df}"
        )));
    }
    Ok(())
}

/// CDF of the studentized range distribution with `k` groups and `df`
/// residual degrees of freedom (`df = inf` gives the normal range).
///
/// Integrates the normal-range CDF at `q·s` against the density of
/// `s = sqrt(chi2_df / df)`.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<f64> {
    check_range_args(k, df)?;
    if q.is_nan() {
        return Err(Error::NonFinite("studentized range statistic".into()));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(1.0);
    }
    if df.is_infinite() {
        return Ok(normal_range_cdf(q, k));
    }
    // log density of s: chi with df degrees of freedom, scaled by 1/sqrt(df).
    let ln_norm = 0.5 * df * df.ln() - ln_gamma(df / 2.0) - (0.5 * df - 1.0) * 2f64.ln();
    let spread = 12.0 / (2.0 * df).sqrt();
    let (lo, hi) = ((1.0 - spread).max(0.0), 1.0 + spread);
    let total = integrate(lo, hi, 64, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let ln_density = ln_norm + (df - 1.0) * s.ln() - 0.5 * df * s * s;
        ln_density.exp() * normal_range_cdf(q * s, k)
    });
    Ok(total.clamp(0.0, 1.0))
}

const QUANTILE_MAX_ITER: usize = 200;

/// Inverse of [`studentized_range_cdf`] in `q`, by bracketed false position.
pub fn studentized_range_quantile(p: f64, k: usize, df: f64) -> Result<f64> {
    check_range_args(k, df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability must be in (0, 1), got {p}")));
    }
    let g = |q: f64| studentized_range_cdf(q, k, df).map(|c| c - p);
    let (mut a, mut fa) = (0.0, -p);
    let mut b = 1.0;
    let mut fb = g(b)?;
    let mut expansions = 0;
    while fb < 0.0 {
        a = b;
        fa = fb;
        b *= 2.0;
        fb = g(b)?;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NoConvergence(format!(
                "could not bracket studentized range quantile (p={p}, k={k}, df={df})"
            )));
        }
    }
    // Illinois variant of regula falsi.
    let mut side = 0i8;
    for _ in 0..QUANTILE_MAX_ITER {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = g(c)?;
        if fc.abs() < 1e-13 || (b - a).abs() < 1e-10 * b.max(1.0) {
            return Ok(c);
        }
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= 2.0;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= 2.0;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence(format!(
        "studentized range quantile did not converge (p={p}, k={k}, df={df})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre();
        assert!((rule.iter().map(|r| r.1).sum::<f64>() - 2.0).abs() < 1e-14);
        // Exact up to degree 31.
        let got = integrate(0.0, 1.0, 1, |x| x.powi(30));
        assert!((got - 1.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_special_cases() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1-x)^b.
        for x in [0.0, 0.1, 0.37, 0.5, 0.93, 1.0] {
            assert!((regularized_incomplete_beta(1.0, 1.0, x).unwrap() - x).abs() < 1e-14);
            assert!((regularized_incomplete_beta(3.5, 1.0, x).unwrap() - x.powf(3.5)).abs() < 1e-13);
            let want = 1.0 - (1.0 - x).powf(2.5);
            assert!((regularized_incomplete_beta(1.0, 2.5, x).unwrap() - want).abs() < 1e-13);
        }
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn f_tail_matches_reference_distribution() {
        for &(f, d1, d2) in &[(13.5, 1.0, 4.0), (0.3, 2.0, 7.0), (4.2, 7.0, 63.0), (1.0, 10.0, 10.0)] {
            let oracle = 1.0 - FisherSnedecor::new(d1, d2).unwrap().cdf(f);
            let got = f_upper_tail(f, d1, d2).unwrap();
            assert!((got - oracle).abs() < 1e-10, "F({d1},{d2})={f}: {got} vs {oracle}");
        }
        assert_eq!(f_upper_tail(0.0, 1.0, 4.0).unwrap(), 1.0);
        assert_eq!(f_upper_tail(f64::INFINITY, 1.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn hand_worked_f_tail() {
        let p = f_upper_tail(13.5, 1.0, 4.0).unwrap();
        assert!((p - 0.0213).abs() < 1e-3, "{p}");
    }

    #[test]
    fn two_group_range_is_scaled_t() {
        // With k = 2 the studentized range is sqrt(2)·|T_df|.
        for &df in &[1.0, 3.0, 10.0, 40.0] {
            let t = StudentsT::new(0.0, 1.0, df).unwrap();
            for &q in &[0.5, 1.7, 3.0, 6.0] {
                let oracle = 2.0 * t.cdf(q / std::f64::consts::SQRT_2) - 1.0;
                let got = studentized_range_cdf(q, 2, df).unwrap();
                assert!((got - oracle).abs() < 1e-8, "df={df} q={q}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn quantiles_match_published_tables() {
        // Upper 5% and 1% points of the studentized range.
        let table = [
            (0.95, 3, 10.0, 3.877),
            (0.95, 2, 10.0, 3.151),
            (0.95, 4, 20.0, 3.958),
            (0.95, 5, 5.0, 5.673),
            (0.95, 10, 30.0, 4.824),
            (0.99, 3, 10.0, 5.270),
            (0.99, 6, 24.0, 5.372),
        ];
        for (p, k, df, want) in table {
            let q = studentized_range_quantile(p, k, df).unwrap();
            assert!((q - want).abs() < 2e-3, "q({p},{k},{df}) = {q}, table {want}");
        }
    }

    #[test]
    fn large_df_limit_for_two_groups() {
        let want = std::f64::consts::SQRT_2 * 1.959_963_984_540_054;
        let q = studentized_range_quantile(0.95, 2, f64::INFINITY).unwrap();
        assert!((q - want).abs() < 1e-6, "{q}");
        let q = studentized_range_quantile(0.95, 2, 1e5).unwrap();
        assert!((q - want).abs() < 1e-3, "{q}");
    }

    #[test]
    fn quantile_round_trip_and_monotone_in_k() {
        let mut prev = 0.0;
        for k in 2..8 {
            let q = studentized_range_quantile(0.9, k, 12.0).unwrap();
            assert!(q > prev);
            prev = q;
            let c = studentized_range_cdf(q, k, 12.0).unwrap();
            assert!((c - 0.9).abs() < 1e-6);
        }
    }

    #[test]
    fn range_arguments_validated() {
        assert!(studentized_range_quantile(0.95, 1, 10.0).is_err());
        assert!(studentized_range_quantile(1.0, 3, 10.0).is_err());
        assert!(studentized_range_quantile(0.95, 3, 0.5).is_err());
    }
}
