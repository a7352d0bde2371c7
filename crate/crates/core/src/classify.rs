//! Exact classification of `(N, α, β, p, q)` against the existence and
//! Liouville-type conditions for the system.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// [`parse_rational`] rounded to the nearest `f64`.
pub fn parse_rational_f64(text: &str) -> Result<f64> {
    parse_rational(text)?
        .to_f64()
        .ok_or_else(|| Error::Parse(format!("out of range: {text:?}")))
}

/// Exponents and dimensions of one tuple, with `p, q` exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTuple {
    pub n: u32,
    pub alpha: u32,
    pub beta: u32,
    pub p: BigRational,
    pub q: BigRational,
}

/// Parse `"5"`, `"5/2"`, `"2.75"`, `"-1.5e-3"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut num: BigInt = all.parse().map_err(|_| bad())?;
    if neg {
        num = -num;
    }
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-shift) as usize))
    };
    Ok(value)
}

impl RationalTuple {
    pub fn new(n: u32, alpha: u32, beta: u32, p: BigRational, q: BigRational) -> Self {
        Self { n, alpha, beta, p, q }
    }

    pub fn parse(n: &str, alpha: &str, beta: &str, p: &str, q: &str) -> Result<Self> {
        let int = |s: &str, name: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("{name} must be a nonnegative integer (got {s:?})")))
        };
        Ok(Self {
            n: int(n, "N")?,
            alpha: int(alpha, "alpha")?,
            beta: int(beta, "beta")?,
            p: parse_rational(p)?,
            q: parse_rational(q)?,
        })
    }

    /// One CSV row `N,alpha,beta,p,q`.
    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!(
                "expected N,alpha,beta,p,q (got {} fields)",
                f.len()
            )));
        }
        Self::parse(f[0], f[1], f[2], f[3], f[4])
    }

    /// Exact binary values of the floating exponents.
    pub fn from_params(params: &ProblemParams) -> Result<Self> {
        let conv = |x: f64| {
            BigRational::from_float(x).ok_or_else(|| Error::InvalidParams(format!("non-finite exponent {x}")))
        };
        Ok(Self {
            n: params.n,
            alpha: params.alpha as u32,
            beta: params.beta as u32,
            p: conv(params.p)?,
            q: conv(params.q)?,
        })
    }

    fn int(&self, x: u32) -> BigRational {
        BigRational::from_integer(BigInt::from(x))
    }

    fn standing(&self) -> bool {
        self.alpha >= 1 && self.beta >= 1 && self.n > 2 * self.alpha && self.n > 2 * self.beta
    }
}

fn ri(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// `2βq + N + 2αpq − Npq ≥ 0` and `2αp + N + 2βpq − Npq ≥ 0`.
pub fn condition_i(t: &RationalTuple) -> (bool, bool) {
    let (n, a, b) = (t.int(t.n), t.int(t.alpha), t.int(t.beta));
    let pq = &t.p * &t.q;
    let two = ri(2);
    let first = &two * &b * &t.q + &n + &two * &a * &pq - &n * &pq;
    let second = &two * &a * &t.p + &n + &two * &b * &pq - &n * &pq;
    (!first.is_negative(), !second.is_negative())
}

/// `p, q < min{(N+2α)/(N−2β), (N+2β)/(N−2α)}`; false outside `N > 2α, 2β`.
pub fn condition_ii(t: &RationalTuple) -> bool {
    match condition_ii_bound(t) {
        Some(bound) => t.p < bound && t.q < bound,
        None => false,
    }
}

/// The right-hand side of condition (ii).
pub fn condition_ii_bound(t: &RationalTuple) -> Option<BigRational> {
    if !t.standing() {
        return None;
    }
    let (n, a, b) = (t.int(t.n), t.int(t.alpha), t.int(t.beta));
    let two = ri(2);
    let x = (&n + &two * &a) / (&n - &two * &b);
    let y = (&n + &two * &b) / (&n - &two * &a);
    Some(if x < y { x } else { y })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperbolaPosition {
    Below,
    On,
    Above,
}

/// Compare `1/(p+1) + 1/(q+1)` with `(N−2α)/N`; "below" means the left side
/// is larger (subcritical).
pub fn hyperbola_position(t: &RationalTuple) -> Result<HyperbolaPosition> {
    if t.alpha != t.beta {
        return Err(Error::InvalidArgument(format!(
            "critical hyperbola needs alpha == beta (got {} and {})",
            t.alpha, t.beta
        )));
    }
    if t.n == 0 || t.p <= ri(-1) || t.q <= ri(-1) {
        return Err(Error::InvalidArgument("requires N > 0 and p, q > -1".into()));
    }
    let one = BigRational::one();
    let lhs = (&one / (&t.p + &one)) + (&one / (&t.q + &one));
    let n = t.int(t.n);
    let rhs = (&n - ri(2) * t.int(t.alpha)) / &n;
    Ok(match lhs.cmp(&rhs) {
        Ordering::Greater => HyperbolaPosition::Below,
        Ordering::Equal => HyperbolaPosition::On,
        Ordering::Less => HyperbolaPosition::Above,
    })
}

/// `α = β = 1` form of condition (i):
/// `1/(p+1) + 1/(q+1) ≥ 1 − (2/(N−2)) max(1/(p+1), 1/(q+1))`.
pub fn serrin_condition(p: &BigRational, q: &BigRational, n: u32) -> bool {
    let one = BigRational::one();
    let x = &one / (p + &one);
    let y = &one / (q + &one);
    let m = if x > y { x.clone() } else { y.clone() };
    let lhs = x + y;
    let rhs = &one - ri(2) / ri(i64::from(n) - 2) * m;
    lhs >= rhs
}

/// Why existence in the ball holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceReason {
    /// Condition (i): no weak supersolutions in `R^N`.
    SupersolutionLiouville,
    /// Condition (ii): no classical solutions in `R^N`.
    ClassicalLiouville,
    /// `α = β`, below the critical hyperbola: no radial classical solutions
    /// in `R^N`.
    BelowCriticalHyperbola,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    ExistenceInBall { reasons: Vec<ExistenceReason> },
    /// A whole-space radial Liouville theorem applies but the ball result
    /// does not (outside `N > 2α, 2β`).
    RadialNonexistenceWholeSpace,
    NoInformation,
}

/// Exact rational, serialized as `"num/den"` (or `"num"`).
#[derive(Debug, Clone, PartialEq)]
pub struct Exact(pub BigRational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Exact {
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

/// Scaling and conjugate exponents; entries are absent where undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exponents {
    /// `(2βq + 2α)/(pq − 1)`
    pub tau: Option<Exact>,
    /// `(2αp + 2β)/(pq − 1)`
    pub sigma: Option<Exact>,
    /// `(2q + 4)/(pq − 1)`
    pub s21: Option<Exact>,
    /// `(4p + 2)/(pq − 1)`
    pub t21: Option<Exact>,
    /// `p/(p − 1)`
    pub p_conj: Option<Exact>,
    pub q_conj: Option<Exact>,
}

pub fn exponents(t: &RationalTuple) -> Exponents {
    let one = BigRational::one();
    let two = ri(2);
    let d = &t.p * &t.q - &one;
    let over_d = |num: BigRational| (!d.is_zero() && d.is_positive()).then(|| Exact(num / &d));
    let (a, b) = (t.int(t.alpha), t.int(t.beta));
    let conj = |x: &BigRational| (x > &one).then(|| Exact(x / (x - &one)));
    Exponents {
        tau: over_d(&two * &b * &t.q + &two * &a),
        sigma: over_d(&two * &a * &t.p + &two * &b),
        s21: over_d(&two * &t.q + ri(4)),
        t21: over_d(ri(4) * &t.p + &two),
        p_conj: conj(&t.p),
        q_conj: conj(&t.q),
    }
}

/// Everything the classifier knows about one tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVerdict {
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha: u32,
    pub beta: u32,
    pub p: Exact,
    pub q: Exact,
    pub condition_i_first: bool,
    pub condition_i_second: bool,
    pub condition_ii: bool,
    pub hyperbola_position: Option<HyperbolaPosition>,
    pub verdict: Verdict,
    pub exponents: Exponents,
}

impl RegionVerdict {
    pub fn existence(&self) -> bool {
        matches!(self.verdict, Verdict::ExistenceInBall { .. })
    }
}

pub fn verdict(t: &RationalTuple) -> RegionVerdict {
    let one = BigRational::one();
    let (ci1, ci2) = condition_i(t);
    let cii = condition_ii(t);
    let hyper = if t.alpha == t.beta {
        hyperbola_position(t).ok()
    } else {
        None
    };
    let p_gt1 = t.p > one && t.q > one;
    let p_ge1 = t.p >= one && t.q >= one && !(t.p == one && t.q == one);
    let below = hyper == Some(HyperbolaPosition::Below) && p_ge1;

    let verdict = if t.standing() {
        let mut reasons = Vec::new();
        if p_gt1 && (ci1 || ci2) {
            reasons.push(ExistenceReason::SupersolutionLiouville);
        }
        if p_gt1 && cii {
            reasons.push(ExistenceReason::ClassicalLiouville);
        }
        if below {
            reasons.push(ExistenceReason::BelowCriticalHyperbola);
        }
        if reasons.is_empty() {
            Verdict::NoInformation
        } else {
            Verdict::ExistenceInBall { reasons }
        }
    } else if below {
        Verdict::RadialNonexistenceWholeSpace
    } else {
        Verdict::NoInformation
    };
    RegionVerdict {
        n: t.n,
        alpha: t.alpha,
        beta: t.beta,
        p: Exact(t.p.clone()),
        q: Exact(t.q.clone()),
        condition_i_first: ci1,
        condition_i_second: ci2,
        condition_ii: cii,
        hyperbola_position: hyper,
        verdict,
        exponents: exponents(t),
    }
}
