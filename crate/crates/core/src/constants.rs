//! Explicit constants of the extraction argument, evaluated exactly.
//!
//! Real parameters are read through their shortest decimal representation, so `0.2`
//! means `1/5` rather than the nearest binary double. All results are exact rationals or
//! big integers with a decimal rendering.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arguments of the two-color graph bound are capped here; `C(a+b−2, a−1)` has about
/// 0.6·(a+b) decimal digits.
pub const MAX_BINOMIAL_ARGUMENT: u64 = 200_000;

/// Largest `N` that [`n_of_theta_alpha`] will report.
pub const MAX_WEIRD_SIZE: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange { name: &'static str, value: String, range: &'static str },
    #[error("alpha = {alpha} does not exceed the limit (1+θ)/(2(1−θ)) = {limit} for θ = {theta}")]
    BelowLimit { theta: f64, alpha: f64, limit: f64 },
    #[error("{0} is not a finite decimal number")]
    NotDecimal(String),
    #[error("bound too large to evaluate: {0}")]
    TooLarge(String),
}

fn out_of_range(name: &'static str, value: impl ToString, range: &'static str) -> ConstantsError {
    ConstantsError::OutOfRange { name, value: value.to_string(), range }
}

/// Parses a finite decimal such as `0.2`, `-3`, `1.5e-3` exactly.
pub fn parse_decimal(s: &str) -> Result<BigRational, ConstantsError> {
    let bad = || ConstantsError::NotDecimal(s.to_string());
    let t = s.trim();
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(p) => (&t[..p], t[p + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigUint = format!("{int}{frac}").parse().unwrap_or_else(|_| BigUint::zero());
    let scale = exp - frac.len() as i32;
    let ten = BigUint::from(10u32);
    let mut r = BigRational::from_integer(num.into());
    if scale >= 0 {
        r *= BigRational::from_integer(ten.pow(scale as u32).into());
    } else {
        r /= BigRational::from_integer(ten.pow((-scale) as u32).into());
    }
    Ok(if neg { -r } else { r })
}

/// Exact rational for the shortest decimal that round-trips to `x`.
pub fn rational_of(x: f64) -> Result<BigRational, ConstantsError> {
    if !x.is_finite() {
        return Err(ConstantsError::NotDecimal(x.to_string()));
    }
    parse_decimal(&format!("{x:e}"))
}

/// Decimal expansion with at most `max_frac` fractional digits; the flag says whether
/// the expansion terminated exactly.
pub fn render_decimal(r: &BigRational, max_frac: usize) -> (String, bool) {
    let neg = r < &BigRational::zero();
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    let (int, mut rem) = num.div_rem(&den);
    let mut s = format!("{}{}", if neg { "-" } else { "" }, int);
    let mut frac = String::new();
    let ten = BigUint::from(10u32);
    while !rem.is_zero() && frac.len() < max_frac {
        rem *= &ten;
        let (d, r2) = rem.div_rem(&den);
        frac.push_str(&d.to_string());
        rem = r2;
    }
    if !frac.is_empty() {
        s.push('.');
        s.push_str(&frac);
    }
    (s, rem.is_zero())
}

/// An exact rational value with renderings for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    /// `numerator/denominator` in lowest terms, or just the integer.
    pub rational: String,
    /// Up to 30 fractional digits.
    pub decimal: String,
    pub decimal_exact: bool,
    /// Nearest double, `None` when it overflows.
    pub approx: Option<f64>,
}

impl ExactValue {
    pub fn new(r: &BigRational) -> Self {
        let rational = if r.is_integer() { r.numer().to_string() } else { format!("{}/{}", r.numer(), r.denom()) };
        let (decimal, decimal_exact) = render_decimal(r, 30);
        let approx = r.to_f64().filter(|v| v.is_finite());
        Self { rational, decimal, decimal_exact, approx }
    }

    pub fn from_integer(n: &BigUint) -> Self {
        Self::new(&BigRational::from_integer(n.clone().into()))
    }
}

fn unit_interval(name: &'static str, x: &BigRational) -> Result<(), ConstantsError> {
    if x > &BigRational::zero() && x < &BigRational::one() {
        Ok(())
    } else {
        Err(out_of_range(name, render_decimal(x, 12).0, "(0, 1)"))
    }
}

/// `C(m, θ) = (m(m−1))^{m−1} / θ^{m−2} + 2m` for `m ≥ 3`, `θ ∈ (0, 1)`.
pub fn c_of_m_theta(m: u64, theta: f64) -> Result<BigRational, ConstantsError> {
    c_of_m_theta_exact(m, &rational_of(theta)?)
}

pub fn c_of_m_theta_exact(m: u64, theta: &BigRational) -> Result<BigRational, ConstantsError> {
    if m < 3 {
        return Err(out_of_range("m", m, "m ≥ 3"));
    }
    unit_interval("theta", theta)?;
    Ok(c_formula(m, theta))
}

/// The formula without range checks; also defined at `θ = 1`.
pub(crate) fn c_formula(m: u64, theta: &BigRational) -> BigRational {
    let base = BigRational::from_integer((m * (m - 1)).into());
    let top = Pow::pow(&base, (m - 1) as u32);
    top / Pow::pow(theta, (m - 2) as u32) + BigRational::from_integer((2 * m).into())
}

/// `(1+θ) / (2(1−θ))`, the infimum of the thresholds.
pub fn weird_limit(theta: &BigRational) -> BigRational {
    let one = BigRational::one();
    (&one + theta) / (BigRational::from_integer(2.into()) * (&one - theta))
}

/// `1 / (2q(1 + q + … + q^{N−2}))` with `q = (1−θ)/2`, for `N ≥ 2`.
pub fn weird_threshold(theta: &BigRational, n: u64) -> BigRational {
    let q = (BigRational::one() - theta) / BigRational::from_integer(2.into());
    let one = BigRational::one();
    // 1 + … + q^{N−2} = (1 − q^{N−1}) / (1 − q)
    let sum = (&one - Pow::pow(&q, (n - 1) as u32)) / (&one - &q);
    one / (BigRational::from_integer(2.into()) * q * sum)
}

/// Least `N ≥ 2` with `α > 1/(2q(1 + q + … + q^{N−2}))`, `q = (1−θ)/2`.
pub fn n_of_theta_alpha(theta: f64, alpha: f64) -> Result<u64, ConstantsError> {
    let (t, a) = (rational_of(theta)?, rational_of(alpha)?);
    unit_interval("theta", &t)?;
    if a <= weird_limit(&t) {
        let limit = weird_limit(&t).to_f64().unwrap_or(f64::NAN);
        return Err(ConstantsError::BelowLimit { theta, alpha, limit });
    }
    n_of_theta_alpha_exact(&t, &a)
}

pub fn n_of_theta_alpha_exact(theta: &BigRational, alpha: &BigRational) -> Result<u64, ConstantsError> {
    unit_interval("theta", theta)?;
    if alpha <= &weird_limit(theta) {
        return Err(ConstantsError::BelowLimit {
            theta: theta.to_f64().unwrap_or(f64::NAN),
            alpha: alpha.to_f64().unwrap_or(f64::NAN),
            limit: weird_limit(theta).to_f64().unwrap_or(f64::NAN),
        });
    }
    let holds = |n: u64| alpha > &weird_threshold(theta, n);
    // q^{N−1} < 1 − (1−q)/(2qα) =: c gives a floating estimate of the crossing.
    let q = (1.0 - theta.to_f64().unwrap_or(0.5)) / 2.0;
    let c = 1.0 - (1.0 - q) / (2.0 * q * alpha.to_f64().unwrap_or(1.0));
    let guess = if c > 0.0 && c < 1.0 { (c.ln() / q.ln()).floor() + 2.0 } else { 2.0 };
    let mut n = guess.clamp(2.0, MAX_WEIRD_SIZE as f64) as u64;
    while n > 2 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
        if n > MAX_WEIRD_SIZE {
            return Err(ConstantsError::TooLarge(format!("N exceeds {MAX_WEIRD_SIZE}")));
        }
    }
    Ok(n)
}

/// `C(a+b−2, a−1)`, the Pascal-recurrence bound on the two-color graph Ramsey number
/// `R(a, b)`.
pub fn ramsey_two_color_bound(a: u64, b: u64) -> Result<BigUint, ConstantsError> {
    if a < 1 || b < 1 {
        return Err(out_of_range("clique", a.min(b), "≥ 1"));
    }
    if a.min(b) > MAX_BINOMIAL_ARGUMENT {
        return Err(ConstantsError::TooLarge(format!("R({a}, {b})")));
    }
    Ok(binomial(a + b - 2, a.min(b) - 1))
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Upper bound on the graph Ramsey number for `colors` colors and monochromatic cliques
/// of size `clique`, from the multicolor recurrence
/// `R(s_1, …, s_c) ≤ Σ_i R(…, s_i − 1, …) − (c − 2)`.
///
/// For triangles this is `R(3; c) ≤ c·(R(3; c−1) − 1) + 2` with `R(3; 1) = 3`.
pub fn ramsey_pair_bound(colors: u64, clique: u64) -> Result<BigUint, ConstantsError> {
    if colors < 1 {
        return Err(out_of_range("colors", colors, "≥ 1"));
    }
    if clique < 2 {
        return Err(out_of_range("clique", clique, "≥ 2"));
    }
    if colors == 1 || clique == 2 {
        return Ok(BigUint::from(clique));
    }
    if clique == 3 {
        let mut r = BigUint::from(3u32);
        for c in 2..=colors {
            r = BigUint::from(c) * (r - 1u32) + 2u32;
        }
        return Ok(r);
    }
    if colors == 2 {
        return ramsey_two_color_bound(clique, clique);
    }
    // Multicolor recurrence over multisets of clique sizes: counts[s] = colors needing
    // a clique of size s (for s in 3..=clique).
    let states = binomial(colors + clique - 3, clique - 3);
    if states > BigUint::from(1_000_000u32) {
        return Err(ConstantsError::TooLarge(format!("{colors} colors, clique {clique}")));
    }
    let mut memo = HashMap::new();
    let mut counts = vec![0u64; clique as usize + 1];
    counts[clique as usize] = colors;
    Ok(multicolor(&counts, &mut memo))
}

fn multicolor(counts: &[u64], memo: &mut HashMap<Vec<u64>, BigUint>) -> BigUint {
    // Colors whose target dropped to 2 are satisfied by any edge and disappear.
    let c: u64 = counts.iter().skip(3).sum();
    if c == 0 {
        return BigUint::from(2u32);
    }
    if c == 1 {
        let s = counts.iter().enumerate().skip(3).find(|(_, &k)| k > 0).map(|(s, _)| s).unwrap_or(2);
        return BigUint::from(s as u64);
    }
    if let Some(v) = memo.get(counts) {
        return v.clone();
    }
    let mut total = BigUint::zero();
    for s in 3..counts.len() {
        if counts[s] == 0 {
            continue;
        }
        let mut next = counts.to_vec();
        next[s] -= 1;
        if s > 3 {
            next[s - 1] += 1;
        }
        total += BigUint::from(counts[s]) * multicolor(&next, memo);
    }
    let v = total - BigUint::from(c - 2);
    memo.insert(counts.to_vec(), v.clone());
    v
}

/// Upper bound on the two-color 3-uniform Ramsey number `R₃(s, t)` (red `s`-set or blue
/// `t`-set with all triples monochromatic), from
/// `R₃(s, t) ≤ R(R₃(s−1, t), R₃(s, t−1)) + 1`, `R₃(s, 3) = s`, `R₃(3, t) = t`.
pub fn ramsey_triple_bound(red: u64, blue: u64) -> Result<BigUint, ConstantsError> {
    if red < 3 || blue < 3 {
        return Err(out_of_range("size", red.min(blue), "≥ 3"));
    }
    let mut memo = HashMap::new();
    triple(red, blue, &mut memo)
}

fn triple(s: u64, t: u64, memo: &mut HashMap<(u64, u64), BigUint>) -> Result<BigUint, ConstantsError> {
    if t == 3 {
        return Ok(BigUint::from(s));
    }
    if s == 3 {
        return Ok(BigUint::from(t));
    }
    if let Some(v) = memo.get(&(s, t)) {
        return Ok(v.clone());
    }
    let a = triple(s - 1, t, memo)?;
    let b = triple(s, t - 1, memo)?;
    let too_large = || ConstantsError::TooLarge(format!("R₃({s}, {t})"));
    let a = a.to_u64().filter(|&v| v <= MAX_BINOMIAL_ARGUMENT).ok_or_else(too_large)?;
    let b = b.to_u64().filter(|&v| v <= MAX_BINOMIAL_ARGUMENT).ok_or_else(too_large)?;
    let v = ramsey_two_color_bound(a, b)? + 1u32;
    memo.insert((s, t), v.clone());
    Ok(v)
}

/// `k·λ^e` with `e = ⌈log₂(R/r)⌉`, the least `e ≥ 0` with `r·2^e ≥ R`.
pub fn globq_bound(k: u64, lambda: u64, big_r: f64, r: f64) -> Result<BigUint, ConstantsError> {
    if k < 1 {
        return Err(out_of_range("k", k, "≥ 1"));
    }
    if lambda < 1 {
        return Err(out_of_range("lambda", lambda, "≥ 1"));
    }
    if !(r > 0.0 && r.is_finite() && big_r.is_finite()) || r >= big_r {
        return Err(out_of_range("r", r, "0 < r < R"));
    }
    Ok(BigUint::from(k) * Pow::pow(BigUint::from(lambda), globq_exponent(big_r, r)))
}

/// `⌈log₂(R/r)⌉`, computed without rounding (scaling by two is exact).
pub fn globq_exponent(big_r: f64, r: f64) -> u32 {
    let mut e = 0u32;
    let mut reach = r;
    while reach < big_r {
        reach *= 2.0;
        e += 1;
    }
    e
}

/// The largest admissible θ for a given α, `(2α − 1)/(2α + 1)`.
pub fn theta_max(alpha: f64) -> f64 {
    (2.0 * alpha - 1.0) / (2.0 * alpha + 1.0)
}

/// Default θ: the midpoint of `(0, θ_max)`.
pub fn default_theta(alpha: f64) -> f64 {
    theta_max(alpha) / 2.0
}

/// Largest `m` for which the bundle evaluates `C(m, θ)` from the Ramsey bound.
pub const MAX_BUNDLE_M: u64 = 256;

/// Every constant of the extraction argument for one parameter choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub alpha: Option<f64>,
    pub theta: f64,
    pub theta_max: Option<f64>,
    pub k: Option<u64>,
    pub m: Option<u64>,
    pub c_m_theta: Option<ExactValue>,
    /// Least `N` from the geometric threshold.
    pub n_theta_alpha: Option<u64>,
    /// `N + 1`: the size at which the two conditions are provably contradictory.
    pub n_sound: Option<u64>,
    pub weird_limit: ExactValue,
    /// Bound on `R₃(k, N)`, the Ramsey size needed for the coloring step.
    pub ramsey_bound: Option<String>,
    /// The recurrence bounds are never claimed to be tight.
    pub ramsey_bound_tight: bool,
    pub notes: Vec<String>,
}

impl ConstantsBundle {
    /// θ defaults to [`default_theta`] when `alpha` is given; `m` defaults to the Ramsey
    /// bound when that is at most [`MAX_BUNDLE_M`]. Parts whose inputs are missing or
    /// out of range are skipped with a note.
    pub fn build(alpha: Option<f64>, theta: Option<f64>, k: Option<u64>, m: Option<u64>) -> Result<Self, ConstantsError> {
        let theta = match (theta, alpha) {
            (Some(t), _) => t,
            (None, Some(a)) if a > 0.5 && a < 1.0 => default_theta(a),
            (None, Some(a)) => return Err(out_of_range("alpha", a, "(1/2, 1)")),
            (None, None) => return Err(out_of_range("theta", "missing", "(0, 1)")),
        };
        let t = rational_of(theta)?;
        unit_interval("theta", &t)?;
        let mut notes = Vec::new();
        let mut n_theta_alpha = None;
        if let Some(a) = alpha {
            match n_of_theta_alpha(theta, a) {
                Ok(n) => n_theta_alpha = Some(n),
                Err(e) => notes.push(format!("n(θ, α) skipped: {e}")),
            }
        }
        let mut ramsey_bound = None;
        let mut ramsey_small = None;
        if let (Some(k), Some(n)) = (k, n_theta_alpha) {
            match ramsey_triple_bound(k.max(3), n.max(3)) {
                Ok(r) => {
                    ramsey_small = r.to_u64().filter(|&v| v <= MAX_BUNDLE_M);
                    ramsey_bound = Some(r.to_string());
                }
                Err(e) => notes.push(format!("Ramsey bound skipped: {e}")),
            }
        }
        let m = m.or(ramsey_small);
        let c_m_theta = match m {
            Some(m) => Some(ExactValue::new(&c_of_m_theta_exact(m, &t)?)),
            None => {
                notes.push("C(m, θ) skipped: no m given and the Ramsey bound is unavailable or too large".into());
                None
            }
        };
        Ok(Self {
            alpha,
            theta,
            theta_max: alpha.map(theta_max),
            k,
            m,
            c_m_theta,
            n_theta_alpha,
            n_sound: n_theta_alpha.map(|n| n + 1),
            weird_limit: ExactValue::new(&weird_limit(&t)),
            ramsey_bound,
            ramsey_bound_tight: false,
            notes,
        })
    }
}
