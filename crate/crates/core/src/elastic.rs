//! Elastic moduli `φ` and automated checks of the structural hypotheses the
//! analysis relies on: `φ(0) = φ'(0) = 0`, strict convexity and monotonicity,
//! boundedness of `ψ(t) = t φ'(t) - p φ(t)`, the `α t^p + O(1)` asymptotics,
//! and the integrated pairwise bound `|φ(t)/t^p - φ(s)/s^p| <= M / (p s^p)`.

use crate::error::{Error, Result};
use serde::Serialize;

/// A candidate modulus. Only `exponent`, `phi` and `dphi` are required.
pub trait ModulusFunction {
    fn exponent(&self) -> f64;
    fn phi(&self, t: f64) -> f64;
    fn dphi(&self, t: f64) -> f64;

    fn d2phi(&self, t: f64) -> f64 {
        let s = 1e-5 * t.max(1e-3);
        (self.dphi(t + s) - self.dphi((t - s).max(0.0))) / (t + s - (t - s).max(0.0))
    }

    fn psi(&self, t: f64) -> f64 {
        t * self.dphi(t) - self.exponent() * self.phi(t)
    }

    /// Largest argument at which the modulus is defined.
    fn max_argument(&self) -> f64 {
        f64::INFINITY
    }

    /// `φ(t) / t^p` for `t > 0` as a leading term plus a small correction,
    /// so differences between arguments keep their precision.
    fn scaled_phi(&self, t: f64) -> (f64, f64) {
        (self.phi(t) / t.powf(self.exponent()), 0.0)
    }
}

/// `φ(t) = (t² + b)^{p/2} - b^{p/2}` without derived data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRegularized {
    pub p: f64,
    pub b: f64,
}

impl PowerRegularized {
    /// `φ'(t) / t`, finite at `t = 0` only when `b > 0`.
    #[inline]
    pub fn weight(&self, t: f64) -> f64 {
        self.p * (t * t + self.b).powf(0.5 * self.p - 1.0)
    }

    #[inline]
    fn ratio_ok(&self, t: f64) -> bool {
        self.b > 0.0 && t * t <= 1e12 * self.b
    }
}

impl ModulusFunction for PowerRegularized {
    fn exponent(&self) -> f64 {
        self.p
    }

    #[inline]
    fn phi(&self, t: f64) -> f64 {
        let (p, b) = (self.p, self.b);
        if b == 0.0 {
            t.powf(p)
        } else if self.ratio_ok(t) {
            // expm1/ln_1p keep full relative precision for t² << b.
            b.powf(0.5 * p) * (0.5 * p * (t * t / b).ln_1p()).exp_m1()
        } else {
            (t * t + b).powf(0.5 * p) - b.powf(0.5 * p)
        }
    }

    #[inline]
    fn dphi(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t * self.weight(t)
        }
    }

    fn d2phi(&self, t: f64) -> f64 {
        let (p, b) = (self.p, self.b);
        p * (t * t + b).powf(0.5 * p - 2.0) * ((p - 1.0) * t * t + b)
    }

    fn psi(&self, t: f64) -> f64 {
        let (p, b) = (self.p, self.b);
        if b == 0.0 {
            0.0
        } else if self.ratio_ok(t) {
            -p * b.powf(0.5 * p) * ((0.5 * p - 1.0) * (t * t / b).ln_1p()).exp_m1()
        } else {
            p * b.powf(0.5 * p) - p * b * (t * t + b).powf(0.5 * p - 1.0)
        }
    }

    /// `1 + [(1 + b/t²)^{p/2} - 1 - (√b/t)^p]`.
    fn scaled_phi(&self, t: f64) -> (f64, f64) {
        let (p, b) = (self.p, self.b);
        if b == 0.0 {
            (1.0, 0.0)
        } else {
            (1.0, (0.5 * p * (b / (t * t)).ln_1p()).exp_m1() - (b.sqrt() / t).powf(p))
        }
    }
}

/// The built-in power-regularized modulus with its derived constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElasticModulus {
    kind: &'static str,
    p: f64,
    b: f64,
    alpha: f64,
    psi_bound: f64,
    admissible: bool,
    #[serde(skip)]
    failures: Vec<String>,
}

impl ElasticModulus {
    /// Validates `1 < p < 2`, `b >= 0` and runs the hypothesis checks on the
    /// default scan.
    pub fn power_regularized(p: f64, b: f64) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(Error::Invalid(format!("modulus.p = {p} must lie in the open interval (1, 2)")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::Invalid(format!("modulus.b = {b} must be finite and nonnegative")));
        }
        let raw = PowerRegularized { p, b };
        let report = check_hypotheses(&raw, &ScanSpec::default())?;
        Ok(ElasticModulus {
            kind: "power-regularized",
            p,
            b,
            alpha: report.alpha,
            psi_bound: report.psi_bound,
            admissible: report.admissible,
            failures: report.failures,
        })
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `M = sup |ψ|` over the default scan.
    pub fn psi_bound(&self) -> f64 {
        self.psi_bound
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn ensure_admissible(&self) -> Result<()> {
        if self.admissible {
            Ok(())
        } else {
            Err(Error::InadmissibleModulus(self.failures.clone()))
        }
    }

    pub fn raw(&self) -> PowerRegularized {
        PowerRegularized { p: self.p, b: self.b }
    }

    /// `(φ(t), φ'(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) {
            return Err(Error::Domain(t));
        }
        let r = self.raw();
        Ok((r.phi(t), r.dphi(t)))
    }

    pub fn psi_eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(t));
        }
        Ok(self.raw().psi(t))
    }

    #[inline]
    pub fn weight(&self, t: f64) -> f64 {
        self.raw().weight(t)
    }
}

impl ModulusFunction for ElasticModulus {
    fn exponent(&self) -> f64 {
        self.p
    }
    fn phi(&self, t: f64) -> f64 {
        self.raw().phi(t)
    }
    fn dphi(&self, t: f64) -> f64 {
        self.raw().dphi(t)
    }
    fn d2phi(&self, t: f64) -> f64 {
        self.raw().d2phi(t)
    }
    fn psi(&self, t: f64) -> f64 {
        self.raw().psi(t)
    }
    fn scaled_phi(&self, t: f64) -> (f64, f64) {
        self.raw().scaled_phi(t)
    }
}

/// A modulus given by samples of `φ` and `φ'`, interpolated by cubic Hermite
/// splines.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedModulus {
    p: f64,
    t: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

impl TabulatedModulus {
    pub fn new(p: f64, t: Vec<f64>, phi: Vec<f64>, dphi: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != phi.len() || t.len() != dphi.len() {
            return Err(Error::Invalid("tabulated modulus needs matching columns of length >= 2".into()));
        }
        if t[0] != 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("table abscissae must start at 0 and increase strictly".into()));
        }
        Ok(TabulatedModulus { p, t, phi, dphi })
    }

    /// Samples another modulus at the given abscissae.
    pub fn sample<M: ModulusFunction>(m: &M, t: Vec<f64>) -> Result<Self> {
        let phi = t.iter().map(|&x| m.phi(x)).collect();
        let dphi = t.iter().map(|&x| m.dphi(x)).collect();
        Self::new(m.exponent(), t, phi, dphi)
    }

    fn segment(&self, t: f64) -> (usize, f64, f64) {
        let i = match self.t.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        };
        let w = self.t[i + 1] - self.t[i];
        (i, (t - self.t[i]) / w, w)
    }
}

impl ModulusFunction for TabulatedModulus {
    fn exponent(&self) -> f64 {
        self.p
    }

    fn phi(&self, t: f64) -> f64 {
        let (i, s, w) = self.segment(t);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.phi[i] + h10 * w * self.dphi[i] + h01 * self.phi[i + 1] + h11 * w * self.dphi[i + 1]
    }

    fn dphi(&self, t: f64) -> f64 {
        let (i, s, w) = self.segment(t);
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.phi[i] + d01 * self.phi[i + 1]) / w + d10 * self.dphi[i] + d11 * self.dphi[i + 1]
    }

    fn d2phi(&self, t: f64) -> f64 {
        let (i, s, w) = self.segment(t);
        let e00 = 12.0 * s - 6.0;
        let e10 = 6.0 * s - 4.0;
        let e01 = -12.0 * s + 6.0;
        let e11 = 6.0 * s - 2.0;
        (e00 * self.phi[i] + e01 * self.phi[i + 1]) / (w * w) + (e10 * self.dphi[i] + e11 * self.dphi[i + 1]) / w
    }

    fn max_argument(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

/// Log-spaced scan of `[0, t_max]`: the point 0 plus `points` samples from
/// `t_min` to `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        // ψ approaches its supremum only at rate t^(p-2), so the scan has to
        // reach far out for M to be accurate to 1e-6 at p close to 2.
        ScanSpec { t_min: 1e-6, t_max: 1e32, points: 3801 }
    }
}

impl ScanSpec {
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        let n = self.points;
        let mut t = Vec::with_capacity(n + 1);
        t.push(0.0);
        for i in 0..n {
            let x = if i + 1 == n { self.t_max } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() };
            t.push(x);
        }
        t
    }
}

/// Outcome of [`check_hypotheses`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub p: f64,
    pub scan: ScanSpec,
    pub phi_at_zero: f64,
    pub dphi_at_zero: f64,
    /// Smallest `φ''` over positive scan points.
    pub min_second_derivative: f64,
    pub strictly_convex: bool,
    pub strictly_increasing: bool,
    /// `M = max |ψ|` over the scan.
    pub psi_bound: f64,
    /// `ψ` does not grow across the last decade of the scan.
    pub psi_bounded: bool,
    /// Largest gap between `ψ` and `t φ' - p φ`, relative to the size of the terms.
    pub psi_identity_error: f64,
    pub alpha: f64,
    /// Guaranteed accuracy `M / (p T^p)` of the endpoint estimate of `α`.
    pub alpha_error_bound: f64,
    /// `sup |φ(t) - α t^p|` over `t >= 1`.
    pub tail_residual: f64,
    pub tail_residual_bound: f64,
    pub tail_bounded: bool,
    /// Pairs `t >= s >= 1` covered by the pairwise bound.
    pub pair_count: u64,
    /// Largest `|φ(t)/t^p - φ(s)/s^p| / (M / (p s^p))` over those pairs (0 when both sides vanish).
    pub pair_worst_ratio: f64,
    pub pair_bound_holds: bool,
    pub admissible: bool,
    pub failures: Vec<String>,
}

/// Runs every structural check on `m` over `scan`.
pub fn check_hypotheses<M: ModulusFunction + ?Sized>(m: &M, scan: &ScanSpec) -> Result<HypothesisReport> {
    let mut scan = *scan;
    scan.t_max = scan.t_max.min(m.max_argument());
    if !(scan.t_max >= 1e3) || !(scan.t_min > 0.0) || scan.t_min >= scan.t_max || scan.points < 16 {
        return Err(Error::Invalid(format!(
            "scan must be log-spaced over [0, T] with T >= 1e3 (got t_min {}, T {}, {} points)",
            scan.t_min, scan.t_max, scan.points
        )));
    }
    let p = m.exponent();
    let ts = scan.grid();
    let phi: Vec<f64> = ts.iter().map(|&t| m.phi(t)).collect();
    let dphi: Vec<f64> = ts.iter().map(|&t| m.dphi(t)).collect();
    let psi: Vec<f64> = ts.iter().map(|&t| m.psi(t)).collect();
    let mut failures = Vec::new();

    let (phi0, dphi0) = (phi[0], dphi[0]);
    if phi0.abs() > 1e-15 || dphi0.abs() > 1e-15 {
        failures.push(format!("φ(0) = {phi0:e}, φ'(0) = {dphi0:e} (both must vanish)"));
    }

    let min_second = ts[1..].iter().map(|&t| m.d2phi(t)).fold(f64::INFINITY, f64::min);
    let strictly_convex = min_second > 0.0;
    if !strictly_convex {
        failures.push(format!("φ'' is not positive on the scan (min {min_second:e})"));
    }
    let strictly_increasing = phi.windows(2).all(|w| w[1] > w[0]);
    if !strictly_increasing {
        failures.push("φ is not strictly increasing on the scan".into());
    }

    let psi_bound = psi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let split = scan.t_max / 10.0;
    let head = ts.iter().zip(&psi).filter(|(t, _)| **t <= split).fold(0.0f64, |a, (_, x)| a.max(x.abs()));
    let tail = ts.iter().zip(&psi).filter(|(t, _)| **t > split).fold(0.0f64, |a, (_, x)| a.max(x.abs()));
    let psi_bounded = psi.iter().all(|x| x.is_finite()) && tail <= 2.0 * head + 1e-12;
    if !psi_bounded {
        failures.push(format!("ψ keeps growing: {tail:e} over the last decade vs {head:e} before"));
    }

    let psi_identity_error = ts
        .iter()
        .zip(phi.iter().zip(&dphi))
        .zip(&psi)
        .map(|((&t, (&f, &df)), &s)| {
            let direct = t * df - p * f;
            let scale = (t * df).abs().max((p * f).abs()).max(f64::MIN_POSITIVE);
            (direct - s).abs() / scale
        })
        .fold(0.0f64, f64::max);
    if psi_identity_error > 1e-12 {
        failures.push(format!("ψ disagrees with tφ' - pφ (relative {psi_identity_error:e})"));
    }

    let big_t = scan.t_max;
    let end = m.scaled_phi(big_t);
    let alpha = end.0 + end.1;
    // φ(t)/t^p - α, with the leading terms cancelled exactly.
    let deviation = |t: f64| {
        let (lead, corr) = m.scaled_phi(t);
        (lead - end.0) + (corr - end.1)
    };
    let alpha_error_bound = psi_bound / (p * big_t.powf(p));
    let mut tail_residual = 0.0f64;
    let mut tail_excess = f64::NEG_INFINITY;
    let tail_residual_bound = 2.0 * psi_bound / p;
    for (&t, &f) in ts.iter().zip(&phi) {
        if t < 1.0 {
            continue;
        }
        let r = deviation(t).abs() * t.powf(p);
        tail_residual = tail_residual.max(r);
        tail_excess = tail_excess.max(r - tail_residual_bound - 1e-12 * (1.0 + f.abs()));
    }
    let tail_bounded = tail_excess <= 0.0;
    if !tail_bounded {
        failures.push(format!("|φ(t) - α t^p| reaches {tail_residual:e}, above 2M/p = {tail_residual_bound:e}"));
    }

    // Pairwise bound over all t >= s >= 1: compare each s with the extreme
    // ratios over the suffix, which covers every pair.
    let idx: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] >= 1.0).collect();
    let ratio: Vec<f64> = idx.iter().map(|&i| deviation(ts[i])).collect();
    let k = ratio.len();
    let mut suffix_max = vec![f64::NEG_INFINITY; k + 1];
    let mut suffix_min = vec![f64::INFINITY; k + 1];
    for j in (0..k).rev() {
        suffix_max[j] = suffix_max[j + 1].max(ratio[j]);
        suffix_min[j] = suffix_min[j + 1].min(ratio[j]);
    }
    let mut pair_worst_ratio = 0.0f64;
    let mut pair_bound_holds = true;
    for j in 0..k {
        let s = ts[idx[j]];
        let gap = (suffix_max[j] - ratio[j]).max(ratio[j] - suffix_min[j]);
        let bound = psi_bound / (p * s.powf(p));
        let tol = 1e-12 * (1.0 + alpha.abs());
        if gap > bound + tol {
            pair_bound_holds = false;
        }
        if bound > 0.0 {
            pair_worst_ratio = pair_worst_ratio.max(gap / bound);
        } else if gap > tol {
            pair_worst_ratio = f64::INFINITY;
        }
    }
    if !pair_bound_holds {
        failures.push(format!("pairwise bound |φ(t)/t^p - φ(s)/s^p| <= M/(p s^p) fails (worst ratio {pair_worst_ratio:e})"));
    }

    Ok(HypothesisReport {
        p,
        scan,
        phi_at_zero: phi0,
        dphi_at_zero: dphi0,
        min_second_derivative: min_second,
        strictly_convex,
        strictly_increasing,
        psi_bound,
        psi_bounded,
        psi_identity_error,
        alpha,
        alpha_error_bound,
        tail_residual,
        tail_residual_bound,
        tail_bounded,
        pair_count: (k as u64) * (k as u64 + 1) / 2,
        pair_worst_ratio,
        pair_bound_holds,
        admissible: failures.is_empty(),
        failures,
    })
}
