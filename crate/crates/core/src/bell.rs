//! CHSH values for quantum states and for no-signaling boxes.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{tensor, DensityMatrix, DichotomicObservable};
use crate::unsharp::{smear, UnsharpParam, SCALING_TOL};

/// Slack on the local and Tsirelson-type bounds in reports.
pub const BOUND_SLACK: f64 = 1e-9;
/// Tolerance on box normalization and no-signaling.
pub const BOX_TOL: f64 = 1e-12;

/// `Tr[state (A (x) B)]` with `A = E_yes - E_no`.
pub fn correlation(state: &DensityMatrix, a: &DichotomicObservable, b: &DichotomicObservable) -> Result<f64> {
    let expected = a.dim() * b.dim();
    if state.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: state.dim(),
        });
    }
    state.expectation(&tensor(&a.signed_operator(), &b.signed_operator()))
}

/// Alice's and Bob's two settings each.
#[derive(Debug, Clone)]
pub struct Settings {
    pub a1: DichotomicObservable,
    pub a2: DichotomicObservable,
    pub b1: DichotomicObservable,
    pub b2: DichotomicObservable,
}

/// `t_xy = <A_x B_y>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlators {
    pub t11: f64,
    pub t12: f64,
    pub t21: f64,
    pub t22: f64,
}

impl Correlators {
    fn new(t: [f64; 4]) -> Self {
        Self {
            t11: t[0],
            t12: t[1],
            t21: t[2],
            t22: t[3],
        }
    }

    /// `t11 + t12 + t21 - t22`.
    pub fn combination(&self) -> f64 {
        self.t11 + self.t12 + self.t21 - self.t22
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshReport {
    /// `|t11 + t12 + t21 - t22|`.
    pub value: f64,
    pub signed: f64,
    pub terms: Correlators,
    /// `2 / lambda_opt` with `lambda_opt = 1/sqrt(2)`.
    pub bound_lambda: f64,
    pub within_bound: bool,
    pub local_bound_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Exact signed value, when the input table was rational.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

impl ChshReport {
    fn from_terms(terms: [f64; 4]) -> Self {
        let terms = Correlators::new(terms);
        let signed = terms.combination();
        let value = signed.abs();
        let bound_lambda = 2.0 / FRAC_1_SQRT_2;
        Self {
            value,
            signed,
            terms,
            bound_lambda,
            within_bound: value <= bound_lambda + BOUND_SLACK,
            local_bound_holds: value <= 2.0 + BOUND_SLACK,
            lambda: None,
            exact: None,
        }
    }
}

pub fn chsh(state: &DensityMatrix, s: &Settings) -> Result<ChshReport> {
    let terms = [
        correlation(state, &s.a1, &s.b1)?,
        correlation(state, &s.a1, &s.b2)?,
        correlation(state, &s.a2, &s.b1)?,
        correlation(state, &s.a2, &s.b2)?,
    ];
    Ok(ChshReport::from_terms(terms))
}

/// CHSH with Alice's two observables smeared by `lam`; Bob stays sharp.
pub fn smeared_chsh(state: &DensityMatrix, s: &Settings, lam: UnsharpParam) -> Result<ChshReport> {
    let sharp = chsh(state, s)?;
    let smeared = Settings {
        a1: smear(&s.a1, lam),
        a2: smear(&s.a2, lam),
        b1: s.b1.clone(),
        b2: s.b2.clone(),
    };
    let mut report = chsh(state, &smeared)?;
    let residual = (report.signed - lam.value() * sharp.signed).abs();
    if residual > SCALING_TOL {
        return Err(Error::SelfCheck {
            check: "smeared CHSH equals lambda times sharp CHSH",
            residual,
        });
    }
    report.lambda = Some(lam.value());
    Ok(report)
}

/// Settings reaching `2 sqrt(2)` on the singlet: Alice `sigma_z, sigma_x`,
/// Bob `(sigma_z +- sigma_x)/sqrt(2)`, with Bob's sign flipped so the
/// combination is positive.
pub fn optimal_settings() -> Settings {
    use crate::joint::BlochVector;
    let obs = |v: [f64; 3]| BlochVector::normalized(v).expect("non-zero").observable();
    Settings {
        a1: obs([0.0, 0.0, 1.0]),
        a2: obs([1.0, 0.0, 0.0]),
        b1: obs([-1.0, 0.0, -1.0]),
        b2: obs([1.0, 0.0, -1.0]),
    }
}

pub fn rational_abs(r: Rational64) -> Rational64 {
    if r < Rational64::from_integer(0) {
        -r
    } else {
        r
    }
}

fn index(x: usize, y: usize, a: usize, b: usize) -> usize {
    ((x * 2 + y) * 2 + a) * 2 + b
}

/// Conditional table `p(a, b | x, y)`, settings and outcomes indexed from 0
/// with outcome 0 meaning `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoSignalingBox {
    p: [f64; 16],
    exact: Option<[Rational64; 16]>,
}

impl NoSignalingBox {
    pub fn new(p: [f64; 16]) -> Result<Self> {
        let b = Self { p, exact: None };
        b.validate()?;
        Ok(b)
    }

    pub fn from_exact(p: [Rational64; 16]) -> Result<Self> {
        let b = Self {
            p: p.map(|r| *r.numer() as f64 / *r.denom() as f64),
            exact: Some(p),
        };
        b.validate()?;
        Ok(b)
    }

    fn from_fn_exact(f: impl Fn(usize, usize, usize, usize) -> Rational64) -> Self {
        let mut p = [Rational64::from_integer(0); 16];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        p[index(x, y, a, b)] = f(x, y, a, b);
                    }
                }
            }
        }
        Self::from_exact(p).expect("valid by construction")
    }

    /// `p = 1/2` iff `a xor b = x and y`.
    pub fn pr_box() -> Self {
        Self::from_fn_exact(|x, y, a, b| {
            if (a ^ b) == (x & y) {
                Rational64::new(1, 2)
            } else {
                Rational64::from_integer(0)
            }
        })
    }

    /// Local deterministic box with outcomes `a = alice[x]`, `b = bob[y]`.
    pub fn deterministic(alice: [usize; 2], bob: [usize; 2]) -> Result<Self> {
        if alice.iter().chain(bob.iter()).any(|&o| o > 1) {
            return Err(Error::InvalidBox("outcome labels must be 0 or 1".into()));
        }
        Ok(Self::from_fn_exact(|x, y, a, b| {
            Rational64::from_integer(i64::from(a == alice[x] && b == bob[y]))
        }))
    }

    /// The sixteen local deterministic boxes.
    pub fn all_deterministic() -> Vec<Self> {
        (0..16)
            .map(|k| Self::deterministic([k & 1, (k >> 1) & 1], [(k >> 2) & 1, (k >> 3) & 1]).expect("bits"))
            .collect()
    }

    pub fn white_noise() -> Self {
        Self::from_fn_exact(|_, _, _, _| Rational64::new(1, 4))
    }

    /// Box of outcome statistics of a bipartite quantum experiment.
    pub fn quantum(state: &DensityMatrix, s: &Settings) -> Result<Self> {
        let alice = [&s.a1, &s.a2];
        let bob = [&s.b1, &s.b2];
        let mut p = [0.0; 16];
        for x in 0..2 {
            for y in 0..2 {
                let ea = [alice[x].yes().matrix(), alice[x].no().matrix()];
                let eb = [bob[y].yes().matrix(), bob[y].no().matrix()];
                for a in 0..2 {
                    for b in 0..2 {
                        let op = tensor(ea[a], eb[b]);
                        if state.dim() != op.dim() {
                            return Err(Error::DimensionMismatch {
                                expected: op.dim(),
                                found: state.dim(),
                            });
                        }
                        p[index(x, y, a, b)] = state.expectation(&op)?.max(0.0);
                    }
                }
            }
        }
        Self::new(p)
    }

    pub fn probability(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[index(x, y, a, b)]
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Largest change of a one-sided marginal under the other side's setting.
    pub fn signaling_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..2 {
            for a in 0..2 {
                let m = |y| self.probability(x, y, a, 0) + self.probability(x, y, a, 1);
                worst = worst.max((m(0) - m(1)).abs());
            }
        }
        for y in 0..2 {
            for b in 0..2 {
                let m = |x| self.probability(x, y, 0, b) + self.probability(x, y, 1, b);
                worst = worst.max((m(0) - m(1)).abs());
            }
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        if let Some((i, v)) = self.p.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidBox(format!("entry {i} is {v}, not a probability")));
        }
        for x in 0..2 {
            for y in 0..2 {
                let s: f64 = (0..4).map(|ab| self.p[index(x, y, ab >> 1, ab & 1)]).sum();
                if (s - 1.0).abs() > BOX_TOL {
                    return Err(Error::InvalidBox(format!(
                        "normalization fails for settings ({}, {}): sum {s}",
                        x + 1,
                        y + 1
                    )));
                }
            }
        }
        let r = self.signaling_residual();
        if r > BOX_TOL {
            return Err(Error::InvalidBox(format!("no-signaling fails: residual {r}")));
        }
        if let Some(e) = &self.exact {
            let zero = Rational64::from_integer(0);
            let one = Rational64::from_integer(1);
            let q = |x, y, a, b| e[index(x, y, a, b)];
            for x in 0..2 {
                for y in 0..2 {
                    if q(x, y, 0, 0) + q(x, y, 0, 1) + q(x, y, 1, 0) + q(x, y, 1, 1) != one {
                        return Err(Error::InvalidBox("exact normalization fails".into()));
                    }
                }
            }
            for s in 0..2 {
                for o in 0..2 {
                    let alice = |y| q(s, y, o, 0) + q(s, y, o, 1);
                    let bob = |x| q(x, s, 0, o) + q(x, s, 1, o);
                    if alice(0) != alice(1) || bob(0) != bob(1) {
                        return Err(Error::InvalidBox("exact no-signaling fails".into()));
                    }
                }
            }
            if e.iter().any(|v| *v < zero) {
                return Err(Error::InvalidBox("negative entry".into()));
            }
        }
        Ok(())
    }

    fn exact_terms(&self) -> Option<[Rational64; 4]> {
        let e = self.exact.as_ref()?;
        let t = |x, y| {
            let q = |a, b| e[index(x, y, a, b)];
            q(0, 0) - q(0, 1) - q(1, 0) + q(1, 1)
        };
        Some([t(0, 0), t(0, 1), t(1, 0), t(1, 1)])
    }

    /// Exact signed CHSH combination for rational tables.
    pub fn exact_chsh(&self) -> Option<Rational64> {
        self.exact_terms().map(|t| t[0] + t[1] + t[2] - t[3])
    }
}

/// Box file layout: `{"p": {"11": [[p++, p+-], [p-+, p--]], ...}}` with keys
/// `"xy"` for settings 1 and 2. Entries are numbers or `"a/b"` strings.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BoxJson {
    pub p: BTreeMap<String, [[Entry; 2]; 2]>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

/// Exact value of a binary fraction, if it is one with a small denominator.
fn dyadic(v: f64) -> Option<Rational64> {
    for k in 0..=52u32 {
        let s = v * f64::from(2u32).powi(k as i32);
        if s.fract() == 0.0 && s.abs() < 2f64.powi(62) {
            return Some(Rational64::new(s as i64, 1i64 << k));
        }
    }
    None
}

impl Entry {
    fn value(&self) -> Result<(f64, Option<Rational64>)> {
        match self {
            Entry::Number(v) => Ok((*v, dyadic(*v))),
            Entry::Text(s) => {
                let r: Rational64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidBox(format!("entry {s:?} is not a number or fraction")))?;
                Ok((*r.numer() as f64 / *r.denom() as f64, Some(r)))
            }
        }
    }
}

impl TryFrom<&BoxJson> for NoSignalingBox {
    type Error = Error;

    fn try_from(json: &BoxJson) -> Result<Self> {
        let mut p = [0.0; 16];
        let mut exact = Some([Rational64::from_integer(0); 16]);
        for (key, idx) in [("11", (0, 0)), ("12", (0, 1)), ("21", (1, 0)), ("22", (1, 1))] {
            let table = json
                .p
                .get(key)
                .ok_or_else(|| Error::InvalidBox(format!("missing settings key {key:?}")))?;
            for a in 0..2 {
                for b in 0..2 {
                    let (v, r) = table[a][b].value()?;
                    let i = index(idx.0, idx.1, a, b);
                    p[i] = v;
                    match (exact.as_mut(), r) {
                        (Some(e), Some(r)) => e[i] = r,
                        _ => exact = None,
                    }
                }
            }
        }
        if let Some(k) = json.p.keys().find(|k| !["11", "12", "21", "22"].contains(&k.as_str())) {
            return Err(Error::InvalidBox(format!("unknown settings key {k:?}")));
        }
        match exact {
            Some(e) => NoSignalingBox::from_exact(e),
            None => NoSignalingBox::new(p),
        }
    }
}

/// CHSH of a box, with correlators `t_xy = sum_ab a b p(a, b | x, y)`.
pub fn box_chsh(b: &NoSignalingBox) -> ChshReport {
    let t = |x, y| {
        b.probability(x, y, 0, 0) - b.probability(x, y, 0, 1) - b.probability(x, y, 1, 0) + b.probability(x, y, 1, 1)
    };
    let mut report = ChshReport::from_terms([t(0, 0), t(0, 1), t(1, 0), t(1, 1)]);
    if let Some(s) = b.exact_chsh() {
        report.exact = Some(s.to_string());
        report.signed = *s.numer() as f64 / *s.denom() as f64;
        report.value = report.signed.abs();
        report.local_bound_holds = rational_abs(s) <= Rational64::from_integer(2);
    }
    report
}

/// Joint distribution over `(first, second)` outcomes with given marginals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    pub exists: bool,
    /// `witness[i][j]`, outcome 0 meaning yes.
    pub witness: [[f64; 2]; 2],
    pub residual: f64,
}

fn check_marginal(m: (f64, f64), name: &str) -> Result<()> {
    if !(m.0.is_finite() && m.1.is_finite()) || m.0 < 0.0 || m.1 < 0.0 {
        return Err(Error::InvalidDistribution(format!("{name} marginal has a negative or non-finite entry")));
    }
    if (m.0 + m.1 - 1.0).abs() > BOX_TOL {
        return Err(Error::InvalidDistribution(format!("{name} marginal sums to {}", m.0 + m.1)));
    }
    Ok(())
}

/// Existence of a four-outcome distribution with two dichotomic marginals.
/// For a single pair of distributions the product always works.
pub fn joint_distribution_exists(m1: (f64, f64), m2: (f64, f64)) -> Result<JointDistribution> {
    check_marginal(m1, "first")?;
    check_marginal(m2, "second")?;
    let a = [m1.0, m1.1];
    let b = [m2.0, m2.1];
    let w = [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]];
    let residual = (0..2)
        .flat_map(|i| [(w[i][0] + w[i][1] - a[i]).abs(), (w[0][i] + w[1][i] - b[i]).abs()])
        .fold(0.0, f64::max);
    Ok(JointDistribution {
        exists: true,
        witness: w,
        residual,
    })
}

/// `2 sqrt(2)`.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;
