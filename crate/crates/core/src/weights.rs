//! Weight sequences `w = (w_n)`, their primitives `s_m = Σ_{n≤m} w_n`, the
//! sums `H_m[w] = Σ_{n≤m} w_n / s_n`, windowed regularity predicates, and the
//! interval selection used by the harmonic-block constructions.

use std::fmt;

use crate::error::{input, resource, Error, Result};

/// How the terms `w_n` are produced.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightRule {
    /// `w_n = 1`.
    Constant,
    /// `w_n = n^{1/p - 1}`, the weight whose primitive behaves like `m^{1/p}`.
    Power { p: f64 },
    /// Explicit finite table `w_1, w_2, ...`.
    Table(Vec<f64>),
    /// `w'_n = s_n / n` built from the inner weight.
    DerivedPrime(Box<WeightRule>),
    /// The weight whose primitive is `m / s_m` for the inner weight.
    DualPrimitive(Box<WeightRule>),
}

impl WeightRule {
    pub fn power(p: f64) -> Self {
        WeightRule::Power { p }
    }

    pub fn derived_prime(self) -> Self {
        WeightRule::DerivedPrime(Box::new(self))
    }

    pub fn dual_primitive(self) -> Self {
        WeightRule::DualPrimitive(Box::new(self))
    }

    /// Parses a config kind (`constant|power|table|derived-prime|dual-primitive`).
    ///
    /// `derived-prime` and `dual-primitive` wrap a power weight when `p` is
    /// given and the constant weight otherwise.
    pub fn from_config(kind: &str, p: Option<f64>, table: Option<&str>) -> Result<Self> {
        let base = || match p {
            Some(p) => WeightRule::Power { p },
            None => WeightRule::Constant,
        };
        let rule = match kind {
            "constant" => WeightRule::Constant,
            "power" => WeightRule::Power {
                p: p.ok_or_else(|| Error::Input("power weight needs p".into()))?,
            },
            "table" => {
                let cell = table.ok_or_else(|| Error::Input("table weight needs values".into()))?;
                let values = cell
                    .split([',', ';'])
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad weight {s:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                WeightRule::Table(values)
            }
            "derived-prime" => base().derived_prime(),
            "dual-primitive" => base().dual_primitive(),
            other => return input(format!("unknown weight kind {other:?}")),
        };
        rule.validate()?;
        Ok(rule)
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightRule::Constant => Ok(()),
            WeightRule::Power { p } => {
                if p.is_finite() && *p > 0.0 {
                    Ok(())
                } else {
                    input(format!("power weight needs p > 0, got {p}"))
                }
            }
            WeightRule::Table(v) => {
                if v.is_empty() {
                    return input("empty weight table");
                }
                if !(v[0] > 0.0) {
                    return input("w_1 must be positive");
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return input("weights must be finite and nonnegative");
                }
                Ok(())
            }
            WeightRule::DerivedPrime(inner) | WeightRule::DualPrimitive(inner) => inner.validate(),
        }
    }

    /// Pairs `(w_n, s_n)` for n = 1, 2, ... without caching.
    ///
    /// Used when a computation must run far past any horizon that could be
    /// cached in memory.
    pub fn stream(&self) -> WeightStream {
        WeightStream {
            inner: self.raw_stream(),
        }
    }

    fn raw_stream(&self) -> Box<dyn Iterator<Item = (f64, f64)> + Send> {
        match self {
            WeightRule::Constant => Box::new((1..).map(|n: u64| (1.0, n as f64))),
            WeightRule::Power { p } => {
                let e = 1.0 / p - 1.0;
                let mut s = 0.0;
                Box::new((1..).map(move |n: u64| {
                    let w = (n as f64).powf(e);
                    s += w;
                    (w, s)
                }))
            }
            WeightRule::Table(v) => {
                let v = v.clone();
                let mut s = 0.0;
                Box::new(v.into_iter().map(move |w| {
                    s += w;
                    (w, s)
                }))
            }
            WeightRule::DerivedPrime(inner) => {
                let mut s = 0.0;
                Box::new(
                    inner
                        .raw_stream()
                        .zip(1..)
                        .map(move |((_, si), n): (_, u64)| {
                            let w = si / n as f64;
                            s += w;
                            (w, s)
                        }),
                )
            }
            WeightRule::DualPrimitive(inner) => {
                let mut prev = 0.0;
                Box::new(
                    inner
                        .raw_stream()
                        .zip(1..)
                        .map(move |((_, si), n): (_, u64)| {
                            let s = n as f64 / si;
                            // m/s_m is non-decreasing whenever s_m/m is non-increasing;
                            // rounding can leave a difference of a few ulps below zero.
                            let w = (s - prev).max(0.0);
                            prev = s;
                            (w, s)
                        }),
                )
            }
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightRule::Constant => write!(f, "constant"),
            WeightRule::Power { p } => write!(f, "power(p={p})"),
            WeightRule::Table(v) => write!(f, "table(len={})", v.len()),
            WeightRule::DerivedPrime(inner) => write!(f, "derived-prime({inner})"),
            WeightRule::DualPrimitive(inner) => write!(f, "dual-primitive({inner})"),
        }
    }
}

/// One term of a weight stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightTerm {
    pub n: usize,
    pub w: f64,
    pub s: f64,
}

pub struct WeightStream {
    inner: Box<dyn Iterator<Item = (f64, f64)> + Send>,
}

impl Iterator for WeightStream {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        self.inner.next()
    }
}

impl WeightStream {
    /// Same stream with the index attached.
    pub fn terms(self) -> impl Iterator<Item = WeightTerm> {
        self.zip(1..).map(|((w, s), n)| WeightTerm { n, w, s })
    }
}

/// A weight with cached `w_n`, `s_n` and `H_n[w]` up to a horizon.
///
/// Queries past the horizon are resource errors; call [`Weight::extend`]
/// before sharing the weight across threads.
#[derive(Clone, Debug)]
pub struct Weight {
    rule: WeightRule,
    values: Vec<f64>,
    prefix: Vec<f64>,
    hw: Vec<f64>,
}

impl Weight {
    pub fn new(rule: WeightRule, horizon: usize) -> Result<Self> {
        rule.validate()?;
        let mut w = Weight {
            rule,
            values: Vec::new(),
            prefix: Vec::new(),
            hw: Vec::new(),
        };
        w.extend(horizon)?;
        Ok(w)
    }

    pub fn constant(horizon: usize) -> Result<Self> {
        Self::new(WeightRule::Constant, horizon)
    }

    pub fn power(p: f64, horizon: usize) -> Result<Self> {
        Self::new(WeightRule::Power { p }, horizon)
    }

    /// Fills the caches up to `horizon` (no-op if already there).
    pub fn extend(&mut self, horizon: usize) -> Result<()> {
        if horizon <= self.values.len() {
            return Ok(());
        }
        if let WeightRule::Table(v) = &self.rule {
            if horizon > v.len() {
                return resource("weight table shorter than requested horizon", v.len());
            }
        }
        let have = self.values.len();
        self.values.reserve(horizon - have);
        self.prefix.reserve(horizon - have);
        self.hw.reserve(horizon - have);
        let mut h = self.hw.last().copied().unwrap_or(0.0);
        for (w, s) in self.rule.stream().skip(have).take(horizon - have) {
            if !w.is_finite() || !s.is_finite() || s <= 0.0 {
                return Err(Error::Invariant(format!(
                    "weight {} produced w={w}, s={s} at n={}",
                    self.rule,
                    self.values.len() + 1
                )));
            }
            h += w / s;
            self.values.push(w);
            self.prefix.push(s);
            self.hw.push(h);
        }
        Ok(())
    }

    pub fn rule(&self) -> &WeightRule {
        &self.rule
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    fn check(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return input("weight indices are 1-based; got 0");
        }
        if n > self.horizon() {
            return resource(
                format!("weight {} queried past its horizon", self.rule),
                self.horizon(),
            );
        }
        Ok(n - 1)
    }

    /// `w_n`.
    pub fn w(&self, n: usize) -> Result<f64> {
        Ok(self.values[self.check(n)?])
    }

    /// `s_m`.
    pub fn primitive(&self, m: usize) -> Result<f64> {
        Ok(self.prefix[self.check(m)?])
    }

    /// `H_m[w]`; zero for `m = 0`.
    pub fn hw_sum(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Ok(0.0);
        }
        Ok(self.hw[self.check(m)?])
    }

    /// `w_1..w_horizon`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `s_1..s_horizon`.
    pub fn primitives(&self) -> &[f64] {
        &self.prefix
    }

    /// The dual-primitive weight `w*` (primitive `m/s_m`) to the same horizon.
    pub fn dual(&self) -> Result<Weight> {
        Weight::new(self.rule.clone().dual_primitive(), self.horizon())
    }

    /// The derived weight `w'_n = s_n/n` to the same horizon.
    pub fn derived_prime(&self) -> Result<Weight> {
        Weight::new(self.rule.clone().derived_prime(), self.horizon())
    }

    pub fn regularity(&self, window: usize) -> Result<RegularityReport> {
        regularity(self, window)
    }
}

/// Windowed regularity predicates of a primitive weight.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub window: usize,
    /// `max_{m ≤ M/2} s_{2m}/s_m`.
    pub doubling_ratio: f64,
    /// Smallest `b ≥ 3` with `2 s_{bm} ≤ b s_m` for every `m` with `bm ≤ M`.
    pub urp_b: Option<usize>,
    /// Smallest `b ≥ 2` with `2 s_m ≤ s_{bm}` for every `m` with `bm ≤ M`.
    pub lrp_b: Option<usize>,
    /// `max_{n ≤ M} s_n / (n w_n)`; `None` if some `w_n` vanishes.
    pub dini_ratio: Option<f64>,
}

pub fn regularity(w: &Weight, window: usize) -> Result<RegularityReport> {
    if window < 4 {
        return input(format!(
            "regularity window must be at least 4, got {window}"
        ));
    }
    if window > w.horizon() {
        return resource("regularity window past weight horizon", w.horizon());
    }
    let s = |n: usize| w.prefix[n - 1];
    let doubling_ratio = (1..=window / 2)
        .map(|m| s(2 * m) / s(m))
        .fold(0.0, f64::max);
    let urp_b = (3..=window).find(|&b| (1..=window / b).all(|m| 2.0 * s(b * m) <= b as f64 * s(m)));
    let lrp_b = (2..=window).find(|&b| (1..=window / b).all(|m| 2.0 * s(m) <= s(b * m)));
    let dini_ratio = if w.values[..window].iter().any(|&x| x == 0.0) {
        None
    } else {
        Some(
            (1..=window)
                .map(|n| s(n) / (n as f64 * w.values[n - 1]))
                .fold(0.0, f64::max),
        )
    };
    Ok(RegularityReport {
        window,
        doubling_ratio,
        urp_b,
        lrp_b,
        dini_ratio,
    })
}

/// `H_n = Σ_{k≤n} 1/k`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Finds the lexicographically smallest `(r, s)` with `m ≤ r < s` and
/// `a ≤ Σ_{n=r+1}^{s} c_n < b`.
///
/// For each `r`, `s` grows from `r+1` until the partial sum reaches `a`; if
/// that sum already reaches `b`, `r` advances. `limit` caps the indices
/// examined.
pub fn select_interval(
    c: impl Fn(usize) -> f64,
    m: usize,
    a: f64,
    b: f64,
    limit: usize,
) -> Result<(usize, usize)> {
    select_interval_min_terms(c, m, a, b, 1, limit)
}

/// [`select_interval`] with at least `min_terms` summands (`s ≥ r + min_terms`).
pub fn select_interval_min_terms(
    c: impl Fn(usize) -> f64,
    m: usize,
    a: f64,
    b: f64,
    min_terms: usize,
    limit: usize,
) -> Result<(usize, usize)> {
    if !(a >= 0.0 && a < b) {
        return input(format!("select_interval needs 0 <= a < b, got [{a}, {b})"));
    }
    let min_terms = min_terms.max(1);
    let mut r = m;
    loop {
        let mut sum = 0.0;
        let mut s = r;
        while s < r + min_terms || sum < a {
            s += 1;
            if s > limit {
                return resource("select_interval ran past its index limit", limit);
            }
            sum += c(s);
        }
        if sum < b {
            return Ok((r, s));
        }
        r += 1;
    }
}

/// `S(a, r, t) = Σ_{k=r+1}^{t} k^{-a} (k-r)^{a-1}`.
pub fn jar_sum(a: f64, r: usize, t: usize) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return input(format!("jar_sum needs 0 < a < 1, got {a}"));
    }
    if t <= r {
        return input(format!("jar_sum needs t > r, got r={r}, t={t}"));
    }
    Ok(((r + 1)..=t)
        .map(|k| (k as f64).powf(-a) * ((k - r) as f64).powf(a - 1.0))
        .sum())
}

/// Location and value of the largest `S(a,r,t)/(H_t - H_r)` on a scan window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JarScan {
    pub a: f64,
    pub r_max: usize,
    pub t_factor: usize,
    pub max_ratio: f64,
    pub argmax: (usize, usize),
}

/// Scans `1 ≤ r ≤ r_max`, `2r ≤ t ≤ t_factor·r`.
///
/// The sums are accumulated in `t`, so the cost is `O(r_max² t_factor)`.
pub fn jar_scan(a: f64, r_max: usize, t_factor: usize) -> Result<JarScan> {
    if !(a > 0.0 && a < 1.0) {
        return input(format!("jar_scan needs 0 < a < 1, got {a}"));
    }
    if r_max == 0 || t_factor < 2 {
        return input("jar_scan needs r_max >= 1 and t_factor >= 2");
    }
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for r in 1..=r_max {
        let (mut s, mut h) = (0.0, 0.0);
        for k in (r + 1)..=(t_factor * r) {
            let kf = k as f64;
            s += kf.powf(-a) * ((k - r) as f64).powf(a - 1.0);
            h += 1.0 / kf;
            if k >= 2 * r && s / h > best.0 {
                best = (s / h, (r, k));
            }
        }
    }
    Ok(JarScan {
        a,
        r_max,
        t_factor,
        max_ratio: best.0,
        argmax: best.1,
    })
}
