//! Density-profile fitting and the incompatibility argument between
//! log-damped densities and morphic growth.
//!
//! Along the natural checkpoints `N_k = |φ^k(b)|` of a morphic sequence, every
//! letter count behaves like `G'(Tk)^m β^{Tk}` with `m` a nonnegative integer.
//! A count `C·N/(ln N)^γ` with `0 < γ < 1` would force a non-integer exponent
//! on `k`, so no morphic sequence has such a density. [`certify_nonmorphic`]
//! fits both profiles to exact counts and reports which one the data supports.

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numtheory::{self, SieveConfig};
use crate::spectral::{self, GrowthClass, IncidenceMatrix, LetterGrowthClass};
use crate::words::MorphicSystem;

pub const MIN_POINTS: usize = 8;
pub const DEFAULT_MARGIN: f64 = 0.7;
pub const DEFAULT_MIN_N: u64 = 4096;
pub const DEFAULT_N0: u64 = 1024;
pub const DEFAULT_RATIO: f64 = 2.0;
pub const DEFAULT_MAX_N: u64 = 10_000_000;
pub const DEFAULT_KMAX: u32 = 4096;
/// RMS residuals below this are indistinguishable from round-off.
pub const RESIDUAL_FLOOR: f64 = 1e-9;
/// Slack added to the `γ` interval in the tie-break; integer rounding of the
/// counts can pull a constant-density fit slightly off `γ = 0`.
pub const INTEGER_GAMMA_TOL: f64 = 0.02;
pub const CONFIDENCE: f64 = 0.95;
/// Tolerance for comparing `β` with `α` and `α` with 1.
pub const RATE_TOL: f64 = 1e-9;

/// `count ≈ C·N/(ln N)^γ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityProfile {
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: f64,
    #[serde(rename = "residual")]
    pub fit_residual: f64,
    pub n_points: usize,
    /// Standard error of the slope `γ`.
    #[serde(skip)]
    pub gamma_se: f64,
}

/// `count ≈ G'·k^m·β^k` with free real `m`, plus the refit with `m` pinned to
/// the nearest nonnegative integer (the only exponents a morphic count can have).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyExpProfile {
    #[serde(rename = "logGp")]
    pub log_gp: f64,
    #[serde(rename = "m")]
    pub m_fit: f64,
    #[serde(rename = "log_beta")]
    pub log_beta_fit: f64,
    #[serde(rename = "residual")]
    pub fit_residual: f64,
    pub m_admissible: u32,
    pub residual_admissible: f64,
}

fn check_points(points: &[(f64, f64)], min_x: f64, what: &str) -> Result<()> {
    if points.len() < MIN_POINTS {
        return Err(Error::Domain(format!(
            "{what} fit needs at least {MIN_POINTS} points, got {}",
            points.len()
        )));
    }
    for &(x, count) in points {
        if !(x >= min_x) {
            return Err(Error::Domain(format!(
                "{what} fit: abscissa {x} below {min_x}"
            )));
        }
        if !(count > 0.0) || !count.is_finite() {
            return Err(Error::Domain(format!(
                "{what} fit: count {count} is not positive"
            )));
        }
    }
    Ok(())
}

/// Least squares through `design · coef ≈ y`; returns coefficients and RMS residual.
fn least_squares(design: DMatrix<f64>, y: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let n = y.len() as f64;
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    let resid = &design * &coef - &y;
    Ok((coef, (resid.norm_squared() / n).sqrt()))
}

/// Regresses `ln(N/count)` on `ln ln N`: slope `γ`, intercept `-ln C`.
pub fn fit_logdamped(points: &[(f64, f64)]) -> Result<DensityProfile> {
    check_points(points, 3.0, "log-damped")?;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n.ln().ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(n, c)| (n / c).ln()).collect();
    let k = xs.len();
    let mean_x = xs.iter().sum::<f64>() / k as f64;
    let mean_y = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain(
            "log-damped fit needs distinct N values".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let gamma = sxy / sxx;
    let intercept = mean_y - gamma * mean_x;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - gamma * x).powi(2))
        .sum();
    Ok(DensityProfile {
        c: (-intercept).exp(),
        gamma,
        fit_residual: (ssr / k as f64).sqrt(),
        n_points: k,
        gamma_se: (ssr / (k - 2) as f64 / sxx).sqrt(),
    })
}

/// Regresses `ln count` on `{1, ln k, k}`.
pub fn fit_polyexp(points: &[(f64, f64)]) -> Result<PolyExpProfile> {
    check_points(points, f64::MIN_POSITIVE, "poly-exponential")?;
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Domain(
            "poly-exponential fit needs strictly increasing k".into(),
        ));
    }
    let n = points.len();
    let y = DVector::from_iterator(n, points.iter().map(|&(_, c)| c.ln()));
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => points[i].0.ln(),
        _ => points[i].0,
    });
    let (coef, fit_residual) = least_squares(design, y.clone())?;

    let m_admissible = coef[1].round().max(0.0) as u32;
    let pinned = DVector::from_iterator(
        n,
        points
            .iter()
            .zip(y.iter())
            .map(|(&(k, _), ly)| ly - f64::from(m_admissible) * k.ln()),
    );
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { points[i].0 });
    let (_, residual_admissible) = least_squares(design, pinned)?;

    Ok(PolyExpProfile {
        log_gp: coef[0],
        m_fit: coef[1],
        log_beta_fit: coef[2],
        fit_residual,
        m_admissible,
        residual_admissible,
    })
}

/// Two-sided 95% interval for `γ` from the slope standard error.
pub fn gamma_confidence(points: &[(f64, f64)], profile: &DensityProfile) -> (f64, f64) {
    let dof = points.len().saturating_sub(2).max(1) as f64;
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + CONFIDENCE / 2.0);
    let half = t * profile.gamma_se;
    (profile.gamma - half, profile.gamma + half)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseId {
    BetaLtAlpha,
    UnitAlpha,
    SuperUnitAlpha,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseVerdict {
    #[serde(rename = "case")]
    pub case_id: CaseId,
    pub incompatible: bool,
    pub explanation: String,
}

/// Which branch of the growth comparison applies to a morphic letter count,
/// and whether that branch rules out a `C·N/(ln N)^γ` profile.
pub fn growth_verdict(
    growth: &GrowthClass,
    letter_growth: &LetterGrowthClass,
    gamma: f64,
) -> Result<CaseVerdict> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let (alpha, beta) = (growth.alpha, letter_growth.beta);
    let (l, m) = (f64::from(growth.l), f64::from(letter_growth.m));
    let scale = alpha.abs().max(1.0);
    if beta > alpha + RATE_TOL * scale {
        return Err(Error::Domain(format!(
            "letter rate {beta} exceeds word rate {alpha}"
        )));
    }

    if beta < alpha - RATE_TOL * scale {
        // count = O(N_k^c) with c = log β / log α; bounded when β <= 1.
        let c = if beta <= 1.0 {
            0.0
        } else {
            beta.ln() / alpha.ln()
        };
        return Ok(CaseVerdict {
            case_id: CaseId::BetaLtAlpha,
            incompatible: c < 1.0,
            explanation: format!(
                "beta = {beta} < alpha = {alpha}: the letter count along N_k is O(N_k^c) with \
                 c = {c:.6} < 1, while C*N_k/(ln N_k)^{gamma} outgrows N_k^c for every c < 1"
            ),
        });
    }

    if (alpha - 1.0).abs() <= RATE_TOL {
        // N_k ~ G(Tk)^l and count ~ G'(Tk)^m; their ratio to the required
        // k^l/(ln k)^γ behaves like k^(m-l)·(ln k)^γ, never a nonzero constant.
        return Ok(CaseVerdict {
            case_id: CaseId::UnitAlpha,
            incompatible: gamma > 0.0,
            explanation: format!(
                "beta = alpha = 1: N_k ~ (Tk)^{l} and the count ~ (Tk)^{m}; the required \
                 C*N_k/(ln N_k)^{gamma} ~ k^{l}/(ln k)^{gamma} differs from k^{m} by the \
                 factor (ln k)^{gamma} for every integer m"
            ),
        });
    }

    let exponent = l - gamma;
    Ok(CaseVerdict {
        case_id: CaseId::SuperUnitAlpha,
        incompatible: (exponent - m).abs() > RATE_TOL,
        explanation: format!(
            "beta = alpha = {alpha} > 1: the required count C*N_k/(ln N_k)^{gamma} ~ \
             k^{exponent:.6}*alpha^(kT) needs the non-integer exponent l - gamma = {exponent:.6}, \
             but the letter count is ~ (Tk)^{m}*alpha^(kT) with integer m"
        ),
    })
}

/// Sequence under test.
#[derive(Clone, Debug)]
pub enum Source {
    /// Sums of two squares (zero allowed).
    S2,
    /// Sums of two non-zero squares.
    S2Nonzero,
    Morphic {
        name: String,
        system: MorphicSystem,
    },
}

impl Source {
    pub fn name(&self) -> String {
        match self {
            Source::S2 => "s2".into(),
            Source::S2Nonzero => "s2nz".into(),
            Source::Morphic { name, .. } => format!("morphic:{name}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertifyConfig {
    pub max_n: u64,
    pub n0: u64,
    pub ratio: f64,
    pub min_n: u64,
    pub margin: f64,
    /// Counted symbol; defaults to `"1"` when the source emits it.
    pub symbol: Option<String>,
    /// Iteration cap for morphic checkpoints.
    pub kmax: u32,
    pub sieve: SieveConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            max_n: DEFAULT_MAX_N,
            n0: DEFAULT_N0,
            ratio: DEFAULT_RATIO,
            min_n: DEFAULT_MIN_N,
            margin: DEFAULT_MARGIN,
            symbol: None,
            kmax: DEFAULT_KMAX,
            sieve: SieveConfig::default(),
        }
    }
}

/// `floor(n0·ratio^j)` for `j = 0, 1, …` up to `max`, deduplicated.
pub fn geometric_checkpoints(n0: u64, ratio: f64, max: u64) -> Result<Vec<u64>> {
    if n0 == 0 || !(ratio > 1.0) {
        return Err(Error::Domain(format!(
            "geometric schedule needs N0 >= 1 and ratio > 1, got {n0} and {ratio}"
        )));
    }
    let mut out: Vec<u64> = Vec::new();
    let mut j = 0i32;
    loop {
        let v = (n0 as f64 * ratio.powi(j)).floor();
        if v > max as f64 {
            break;
        }
        let v = v as u64;
        if out.last() != Some(&v) {
            out.push(v);
        }
        j += 1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Logdamped,
    Polyexp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    NonMorphicConditional,
    MorphicCompatible,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: f64,
    pub count: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogdampedReport {
    #[serde(flatten)]
    pub profile: DensityProfile,
    pub gamma_ci: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthInputs {
    pub growth: GrowthClass,
    pub letter_growth: LetterGrowthClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportConfig {
    pub log_base: &'static str,
    #[serde(rename = "min_N")]
    pub min_n: u64,
    pub margin: f64,
    #[serde(rename = "max_N")]
    pub max_n: u64,
    #[serde(rename = "N0")]
    pub n0: u64,
    pub ratio: f64,
    pub residual_floor: f64,
    pub integer_gamma_tol: f64,
    pub confidence: f64,
    pub rate_tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub sequence: String,
    pub symbol: String,
    pub checkpoints: Vec<Checkpoint>,
    pub logdamped: Option<LogdampedReport>,
    pub polyexp: Option<PolyExpProfile>,
    pub preferred_model: Option<Model>,
    pub growth_inputs: Option<GrowthInputs>,
    pub verdict: Option<CaseVerdict>,
    pub conclusion: Conclusion,
    pub note: String,
    pub config: ReportConfig,
}

fn contains_integer(lo: f64, hi: f64) -> bool {
    (lo - INTEGER_GAMMA_TOL).ceil() <= hi + INTEGER_GAMMA_TOL
}

/// Picks the model the residuals support.
///
/// The poly-exponential side uses the refit with integer `m`. Residuals are
/// floored at [`RESIDUAL_FLOOR`]. When neither model wins by `margin`, a
/// log-damped profile whose `γ` interval (widened by [`INTEGER_GAMMA_TOL`])
/// contains an integer is itself of poly-exponential shape along geometric
/// checkpoints, so the tie goes to the poly-exponential model.
pub fn select_model(
    logdamped: &DensityProfile,
    gamma_ci: (f64, f64),
    polyexp: &PolyExpProfile,
    margin: f64,
) -> Option<Model> {
    let ld = logdamped.fit_residual.max(RESIDUAL_FLOOR);
    let pe = polyexp.residual_admissible.max(RESIDUAL_FLOOR);
    if pe <= margin * ld {
        Some(Model::Polyexp)
    } else if ld <= margin * pe {
        Some(Model::Logdamped)
    } else if contains_integer(gamma_ci.0, gamma_ci.1) {
        Some(Model::Polyexp)
    } else {
        None
    }
}

struct Counts {
    symbol: String,
    checkpoints: Vec<Checkpoint>,
    growth: Option<GrowthInputs>,
}

fn sieve_counts(source: &Source, config: &CertifyConfig) -> Result<Counts> {
    let symbol = config.symbol.clone().unwrap_or_else(|| "1".into());
    if symbol != "1" && symbol != "0" {
        return Err(Error::UnknownSymbol(symbol));
    }
    let table = match source {
        Source::S2 => numtheory::sieve_s2_additive_with(config.max_n, &config.sieve)?,
        _ => numtheory::sieve_s2_nonzero_with(config.max_n, &config.sieve)?,
    };
    let schedule = geometric_checkpoints(config.n0, config.ratio, config.max_n)?;
    let series = numtheory::count_series(&table, &schedule)?;
    let ln_ratio = config.ratio.ln();
    let checkpoints = series
        .points
        .iter()
        .filter(|&&(n, _)| n >= config.min_n)
        .map(|&(n, b)| Checkpoint {
            n,
            k: (n as f64).ln() / ln_ratio,
            count: if symbol == "1" { b } else { n + 1 - b },
        })
        .collect();
    Ok(Counts {
        symbol,
        checkpoints,
        growth: None,
    })
}

fn morphic_counts(system: &MorphicSystem, config: &CertifyConfig) -> Result<Counts> {
    let symbol = match &config.symbol {
        Some(s) => s.clone(),
        None if system.symbols().iter().any(|s| s == "1") => "1".into(),
        None => system
            .symbols()
            .iter()
            .min()
            .expect("nonempty coding")
            .clone(),
    };
    let letters = system.letters_coded_as(&symbol)?;
    let m = system.morphism();
    let matrix = IncidenceMatrix::from_morphism(m);
    let mut checkpoints = Vec::new();
    let mut v = matrix.unit_vector(system.start());
    for k in 0..=config.kmax {
        if k > 0 {
            v = matrix.step(&v);
        }
        let total: num_bigint::BigUint = v.iter().sum();
        let Some(n) = total.to_u64().filter(|&n| n <= config.max_n) else {
            break;
        };
        if n >= config.min_n {
            let count: num_bigint::BigUint = letters.iter().map(|b| &v[b.index()]).sum();
            checkpoints.push(Checkpoint {
                n,
                k: f64::from(k),
                count: count.to_u64().expect("count <= N"),
            });
        }
    }
    let growth = GrowthInputs {
        growth: spectral::growth_class(m, system.start())?,
        letter_growth: spectral::targets_growth_class(m, system.start(), &letters)?,
    };
    Ok(Counts {
        symbol,
        checkpoints,
        growth: Some(growth),
    })
}

/// Counts the source at its checkpoints, fits both density profiles, and
/// turns the comparison into a conclusion.
pub fn certify_nonmorphic(source: &Source, config: &CertifyConfig) -> Result<CertificateReport> {
    let counts = match source {
        Source::Morphic { system, .. } => morphic_counts(system, config)?,
        _ => sieve_counts(source, config)?,
    };

    let usable: Vec<&Checkpoint> = counts.checkpoints.iter().filter(|c| c.count > 0).collect();
    let ld_points: Vec<(f64, f64)> = usable
        .iter()
        .map(|c| (c.n as f64, c.count as f64))
        .collect();
    let pe_points: Vec<(f64, f64)> = usable
        .iter()
        .filter(|c| c.k > 0.0)
        .map(|c| (c.k, c.count as f64))
        .collect();

    let logdamped = fit_logdamped(&ld_points).ok().map(|profile| {
        let (lo, hi) = gamma_confidence(&ld_points, &profile);
        LogdampedReport {
            profile,
            gamma_ci: [lo, hi],
        }
    });
    let polyexp = fit_polyexp(&pe_points).ok();

    let preferred_model = match (&logdamped, &polyexp) {
        (Some(ld), Some(pe)) => select_model(
            &ld.profile,
            (ld.gamma_ci[0], ld.gamma_ci[1]),
            pe,
            config.margin,
        ),
        _ => None,
    };

    let gamma_in_unit = logdamped
        .as_ref()
        .is_some_and(|ld| ld.gamma_ci[0] > 0.0 && ld.gamma_ci[1] < 1.0);
    let conclusion = match preferred_model {
        Some(Model::Logdamped) if gamma_in_unit => Conclusion::NonMorphicConditional,
        Some(Model::Polyexp) => Conclusion::MorphicCompatible,
        _ => Conclusion::Inconclusive,
    };

    let verdict = match (&counts.growth, &logdamped) {
        (Some(g), Some(ld)) if gamma_in_unit => Some(growth_verdict(
            &g.growth,
            &g.letter_growth,
            ld.profile.gamma,
        )?),
        _ => None,
    };

    let note = match conclusion {
        Conclusion::NonMorphicConditional => {
            let ci = logdamped.as_ref().expect("gate passed").gamma_ci;
            format!(
                "counts follow C*N/(ln N)^gamma with gamma in [{:.6}, {:.6}], inside (0, 1); no \
                 morphic sequence has a letter with such a counting function, so the sequence is \
                 not morphic provided this profile holds asymptotically (a finite computation \
                 supports but does not prove that hypothesis)",
                ci[0], ci[1]
            )
        }
        Conclusion::MorphicCompatible => {
            "counts are fitted by G'*k^m*beta^k with integer m, the shape every morphic letter \
             count has along its checkpoints"
                .into()
        }
        Conclusion::Inconclusive => {
            if logdamped.is_none() || polyexp.is_none() {
                format!(
                    "too few usable checkpoints (need {MIN_POINTS} with N >= {})",
                    config.min_n
                )
            } else {
                "neither profile is preferred by the residual margin, or gamma is not inside (0, 1)"
                    .into()
            }
        }
    };

    Ok(CertificateReport {
        sequence: source.name(),
        symbol: counts.symbol,
        checkpoints: counts.checkpoints,
        logdamped,
        polyexp,
        preferred_model,
        growth_inputs: counts.growth,
        verdict,
        conclusion,
        note,
        config: ReportConfig {
            log_base: "e",
            min_n: config.min_n,
            margin: config.margin,
            max_n: config.max_n,
            n0: config.n0,
            ratio: config.ratio,
            residual_floor: RESIDUAL_FLOOR,
            integer_gamma_tol: INTEGER_GAMMA_TOL,
            confidence: CONFIDENCE,
            rate_tolerance: RATE_TOL,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logdamped_points(c: f64, gamma: f64, round: bool) -> Vec<(f64, f64)> {
        (10..=24)
            .map(|e| {
                let n = f64::from(1u32 << e);
                let count = c * n / n.ln().powf(gamma);
                (n, if round { count.round() } else { count })
            })
            .collect()
    }

    fn growth(alpha: f64, l: u32) -> GrowthClass {
        GrowthClass {
            alpha,
            l,
            period: 1,
            g_estimate: None,
        }
    }

    fn letter(beta: f64, m: u32) -> LetterGrowthClass {
        LetterGrowthClass {
            beta,
            m,
            period: 1,
            gp_estimate: None,
            eventually_zero: beta == 0.0,
        }
    }

    #[test]
    fn logdamped_recovers_rounded_synthetic() {
        let p = fit_logdamped(&logdamped_points(0.76, 0.5, true)).unwrap();
        assert!((p.gamma - 0.5).abs() < 0.01, "{p:?}");
        assert!((p.c - 0.76).abs() < 0.01, "{p:?}");
        assert_eq!(p.n_points, 15);
    }

    #[test]
    fn logdamped_exact_data_is_exact() {
        let p = fit_logdamped(&logdamped_points(0.76, 0.5, false)).unwrap();
        assert!((p.gamma - 0.5).abs() < 1e-6 * 0.5);
        assert!((p.c - 0.76).abs() < 1e-6 * 0.76);
        assert!(p.fit_residual < 1e-12);
    }

    #[test]
    fn logdamped_without_damping() {
        let pts: Vec<(f64, f64)> = (10..=24)
            .map(|e| {
                let n = f64::from(1u32 << e);
                (n, (0.5 * n).round())
            })
            .collect();
        let p = fit_logdamped(&pts).unwrap();
        assert!(p.gamma.abs() < 0.01);
        let (lo, hi) = gamma_confidence(&pts, &p);
        assert!(lo <= 0.0 && 0.0 <= hi);
    }

    #[test]
    fn fit_domain_errors() {
        let pts = logdamped_points(0.76, 0.5, false);
        assert!(matches!(fit_logdamped(&pts[..7]), Err(Error::Domain(_))));
        let mut zero = pts.clone();
        zero[3].1 = 0.0;
        assert!(matches!(fit_logdamped(&zero), Err(Error::Domain(_))));
        let mut small = pts.clone();
        small[0].0 = 2.0;
        assert!(matches!(fit_logdamped(&small), Err(Error::Domain(_))));
        let mut unordered: Vec<(f64, f64)> = (1..=10).map(|k| (f64::from(k), 5.0)).collect();
        unordered.swap(2, 3);
        assert!(matches!(fit_polyexp(&unordered), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_interval_on_rounded_synthetic() {
        let pts = logdamped_points(0.76, 0.5, true);
        let p = fit_logdamped(&pts).unwrap();
        let (lo, hi) = gamma_confidence(&pts, &p);
        assert!(lo <= 0.5 && 0.5 <= hi, "[{lo}, {hi}]");
        assert!(hi - lo < 0.02);
    }

    #[test]
    fn polyexp_thue_morse_counts() {
        // |φ^k(0)|_1 = 2^(k-1)
        let pts: Vec<(f64, f64)> = (1..=20).map(|k| (f64::from(k), 2f64.powi(k - 1))).collect();
        let p = fit_polyexp(&pts).unwrap();
        assert!((p.log_beta_fit - 2f64.ln()).abs() < 1e-6);
        assert!(p.m_fit.abs() < 1e-3);
        assert_eq!(p.m_admissible, 0);
    }

    #[test]
    fn polyexp_polynomial_and_constant() {
        let pts: Vec<(f64, f64)> = (10..=40)
            .map(|k| (f64::from(k), f64::from(k + 1)))
            .collect();
        let p = fit_polyexp(&pts).unwrap();
        assert!(p.log_beta_fit.abs() < 0.01, "{p:?}");
        assert!((p.m_fit - 1.0).abs() < 0.1, "{p:?}");
        assert_eq!(p.m_admissible, 1);

        let pts: Vec<(f64, f64)> = (1..=12).map(|k| (f64::from(k), 7.0)).collect();
        let p = fit_polyexp(&pts).unwrap();
        assert!(p.m_fit.abs() < 1e-9 && p.log_beta_fit.abs() < 1e-9);
        assert!((p.log_gp - 7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn verdict_examples() {
        let v = growth_verdict(&growth(2.0, 0), &letter(2.0, 0), 0.5).unwrap();
        assert_eq!(v.case_id, CaseId::SuperUnitAlpha);
        assert!(v.incompatible);
        let v = growth_verdict(&growth(1.0, 1), &letter(1.0, 1), 0.5).unwrap();
        assert_eq!(v.case_id, CaseId::UnitAlpha);
        assert!(v.incompatible);
        let v = growth_verdict(&growth(2.0, 0), &letter(1.0, 0), 0.5).unwrap();
        assert_eq!(v.case_id, CaseId::BetaLtAlpha);
        assert!(v.incompatible);
    }

    #[test]
    fn verdict_rejects_gamma_outside_unit_interval() {
        for gamma in [0.0, 1.0, -0.3, 1.7, f64::NAN] {
            assert!(matches!(
                growth_verdict(&growth(2.0, 0), &letter(2.0, 0), gamma),
                Err(Error::Domain(_))
            ));
        }
        assert!(matches!(
            growth_verdict(&growth(2.0, 0), &letter(3.0, 0), 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn schedule() {
        assert_eq!(
            geometric_checkpoints(1024, 2.0, 10_000).unwrap(),
            [1024, 2048, 4096, 8192]
        );
        assert_eq!(geometric_checkpoints(1, 1.5, 5).unwrap(), [1, 2, 3, 5]);
        assert!(geometric_checkpoints(0, 2.0, 10).is_err());
        assert!(geometric_checkpoints(4, 1.0, 10).is_err());
    }

    #[test]
    fn integer_in_interval() {
        assert!(contains_integer(-0.1, 0.1));
        assert!(contains_integer(0.9, 1.2));
        assert!(contains_integer(1e-12, 2e-12));
        assert!(!contains_integer(0.2, 0.8));
    }

    #[test]
    fn small_n_is_inconclusive() {
        let config = CertifyConfig {
            max_n: 100,
            ..CertifyConfig::default()
        };
        let r = certify_nonmorphic(&Source::S2, &config).unwrap();
        assert_eq!(r.conclusion, Conclusion::Inconclusive);
        assert!(r.logdamped.is_none());
        assert_eq!(r.preferred_model, None);
    }
}
