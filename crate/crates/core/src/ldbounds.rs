//! Low-degree lower bounds: ζ quantities, MMSE lower bounds, correlation sums,
//! an empirical degree-D MMSE estimate and indicative threshold curves.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::cumulant::{nullity_predicate, CumulantEngine, MultiIndex};
use crate::error::{resource, LdError, Result};
use crate::model::{draw_from, rational_to_f64, ModelKind, ModelSpec};
use crate::rng::{derive_seed, rng_from_seed};

/// ζ (and ζ′ for biclustering) with the side condition of the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaValue {
    pub zeta: f64,
    pub zeta_prime: Option<f64>,
    /// D⁵ ≤ p for clustering; always true otherwise.
    pub side_condition_ok: bool,
}

/// Evaluates the ζ formula of the spec's model kind at degree `d`.
///
/// Clustering: Δ̄⁴/p · max(D¹⁸, n/K²).
/// Sparse: Δ̄⁴/(ρp)² · max(D¹⁴, D⁷n, D⁷ρ²p, ρ²p·n/K²).
/// Biclustering: (λ⁴/σ⁴)·D⁸·max(p, n, pn/K², pn/L²), and
/// ζ′ = (λ⁴/σ⁴)·D¹⁰·(5p²/L)·max(1, n/K²).
pub fn zeta_value(spec: &ModelSpec, d: u32) -> Result<ZetaValue> {
    spec.validate()?;
    if d == 0 {
        return Err(LdError::Param("ζ needs D >= 1".into()));
    }
    let (n, p, k) = (spec.n as f64, spec.p as f64, spec.k as f64);
    let df = f64::from(d);
    let db4 = spec.delta_bar2().powi(2);
    Ok(match spec.kind {
        ModelKind::Clustering => ZetaValue {
            zeta: db4 / p * df.powi(18).max(n / (k * k)),
            zeta_prime: None,
            side_condition_ok: df.powi(5) <= p,
        },
        ModelKind::SparseClustering => {
            let rho = spec.rho_f64();
            let m = df
                .powi(14)
                .max(df.powi(7) * n)
                .max(df.powi(7) * rho * rho * p)
                .max(rho * rho * p * n / (k * k));
            ZetaValue {
                zeta: db4 / (rho * p).powi(2) * m,
                zeta_prime: None,
                side_condition_ok: true,
            }
        }
        ModelKind::Biclustering => {
            let l = spec.l as f64;
            let snr = (spec.lambda2 / spec.sigma2).powi(2);
            let m = p.max(n).max(p * n / (k * k)).max(p * n / (l * l));
            ZetaValue {
                zeta: snr * df.powi(8) * m,
                zeta_prime: Some(snr * df.powi(10) * 5.0 * p * p / l * (n / (k * k)).max(1.0)),
                side_condition_ok: true,
            }
        }
    })
}

/// var(x) = 1/K − 1/K².
pub fn variance_x(k: usize) -> f64 {
    let k = k as f64;
    1.0 / k - 1.0 / (k * k)
}

/// Raw value of 1/K − (1/K²)[1 + ζ/(1−√ζ)³]; `None` when ζ ≥ 1.
pub fn mmse_formula(k: usize, zeta: f64) -> Option<f64> {
    if !(0.0..1.0).contains(&zeta) {
        return None;
    }
    let kf = k as f64;
    let s = zeta.sqrt();
    Some(1.0 / kf - (1.0 + zeta / (1.0 - s).powi(3)) / (kf * kf))
}

/// Raw second biclustering bound; `None` when ζ′ ≥ 1.
pub fn mmse_formula_prime(spec: &ModelSpec, zeta_prime: f64) -> Option<f64> {
    if !(0.0..1.0).contains(&zeta_prime) {
        return None;
    }
    let (k, l, p) = (spec.k as f64, spec.l as f64, spec.p as f64);
    let s = zeta_prime.sqrt();
    let pre = 1.0 - l * (-(5.0 * p / (2.0 * l)) * 5f64.ln()).exp();
    Some(pre * (1.0 / k - s / (1.0 - s).powi(2) / (k * k)))
}

/// Flags attached to a bound evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegimeFlags {
    /// The side condition (D⁵ ≤ p for clustering) holds.
    pub side_condition_ok: bool,
    /// ζ ≥ 1 (and ζ′ ≥ 1 where present): only the trivial bound 0 is reported.
    pub zeta_vacuous: bool,
    /// The formula was negative and was clamped to 0.
    pub clamped: bool,
    /// Threshold regime label from [`threshold_curves`].
    pub regime: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LdBoundReport {
    pub d: u32,
    pub zeta: f64,
    pub zeta_prime: Option<f64>,
    pub mmse_lower: f64,
    pub variance_x: f64,
    pub sw_sum: Option<f64>,
    pub flags: RegimeFlags,
}

/// The kind-specific MMSE_{≤D} lower bound with clamping and flags.
pub fn mmse_lower_bound(spec: &ModelSpec, d: u32) -> Result<LdBoundReport> {
    let z = zeta_value(spec, d)?;
    let first = mmse_formula(spec.k, z.zeta);
    let second = z.zeta_prime.and_then(|zp| mmse_formula_prime(spec, zp));
    let raw = match (first, second) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    let mut flags = RegimeFlags {
        side_condition_ok: z.side_condition_ok,
        regime: threshold_point(spec).regime,
        ..RegimeFlags::default()
    };
    let mmse_lower = match raw {
        None => {
            flags.zeta_vacuous = true;
            0.0
        }
        Some(v) if v < 0.0 => {
            flags.clamped = true;
            0.0
        }
        Some(v) => v,
    };
    Ok(LdBoundReport {
        d,
        zeta: z.zeta,
        zeta_prime: z.zeta_prime,
        mmse_lower,
        variance_x: variance_x(spec.k),
        sw_sum: None,
        flags,
    })
}

/// Exact correlation bound Σ_{|α|≤D} κ²_{x,α}/α!, grouped by power of λ.
#[derive(Clone, Debug, PartialEq)]
pub struct SwSum {
    /// coefficient of λ^{2j} for each j, exact
    pub coeffs: BTreeMap<u32, BigRational>,
    /// value at λ² = spec.lambda2
    pub value: f64,
    /// number of α surviving the nullity prefilter
    pub surviving: usize,
}

/// Σ_{|α|≤D} κ²_{x,α}/α! over α ∈ ℕ^{n×p}, nullity-pruned, cumulants by the Möbius route.
pub fn sw_correlation_sum(spec: &ModelSpec, d: u32) -> Result<SwSum> {
    spec.validate()?;
    if spec.n > 4 || spec.p > 3 || d > 4 {
        return resource(format!(
            "correlation sum guard: n={} p={} D={d} (max 4, 3, 4)",
            spec.n, spec.p
        ));
    }
    let mut engine = CumulantEngine::new(spec);
    let mut coeffs: BTreeMap<u32, BigRational> = BTreeMap::new();
    let base = engine.bruteforce(true, &MultiIndex::zeros(spec.n, spec.p))?;
    coeffs.insert(0, &base.coeff * &base.coeff);
    let mut surviving = 0;
    for alpha in MultiIndex::all_up_to(spec.n, spec.p, d) {
        if nullity_predicate(spec.kind, &alpha) {
            continue;
        }
        surviving += 1;
        let kappa = engine.bruteforce(true, &alpha)?;
        if kappa.is_zero() {
            continue;
        }
        let fact = BigRational::from_integer(BigInt::from(alpha.factorial()));
        let term = &kappa.coeff * &kappa.coeff / fact;
        let slot = coeffs.entry(kappa.lambda_power).or_insert_with(BigRational::zero);
        *slot += term;
    }
    let value = coeffs
        .iter()
        .map(|(&j, c)| rational_to_f64(c) * spec.lambda2.powi(j as i32))
        .sum();
    Ok(SwSum {
        coeffs,
        value,
        surviving,
    })
}

/// All monomials of degree ≤ D in `vars` variables, as sorted index lists.
pub fn monomials(vars: usize, d: u32) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::<usize>::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for m in &frontier {
            let start = m.last().copied().unwrap_or(0);
            for v in start..vars {
                let mut e = m.clone();
                e.push(v);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1u64, |acc, i| acc.saturating_mul(n + 1 - i) / i)
}

/// Held-out mean squared error of the least-squares degree-D predictor of x.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMmse {
    pub mse: f64,
    pub std_error: f64,
    pub features: usize,
    pub ridge: f64,
}

const SHARD: usize = 2048;

fn shard_sizes(total: usize) -> Vec<usize> {
    let mut v = vec![SHARD; total / SHARD];
    if total % SHARD > 0 {
        v.push(total % SHARD);
    }
    v
}

/// Features (rows) and targets for `count` fresh prior draws.
fn shard_data(spec: &ModelSpec, monos: &[Vec<usize>], count: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = rng_from_seed(seed);
    let mut phi = DMatrix::zeros(count, monos.len());
    let mut target = DVector::zeros(count);
    for s in 0..count {
        let (state, obs) = draw_from(spec, &mut rng);
        target[s] = f64::from(u8::from(state.k_star[0] == state.k_star[1]));
        // row-major flattening of Y
        let y: Vec<f64> = (0..spec.n)
            .flat_map(|i| (0..spec.p).map(move |j| (i, j)))
            .map(|(i, j)| obs.y[(i, j)])
            .collect();
        for (f, m) in monos.iter().enumerate() {
            phi[(s, f)] = m.iter().map(|&v| y[v]).product();
        }
    }
    (phi, target)
}

/// Least-squares projection of x onto degree-≤D monomials of Y, fitted on
/// `train` draws and scored on `test` fresh draws.
pub fn empirical_lowdeg_mmse(spec: &ModelSpec, d: u32, train: usize, test: usize, seed: u64) -> Result<EmpiricalMmse> {
    spec.validate()?;
    let vars = spec.n * spec.p;
    let count = binomial((vars + d as usize) as u64, u64::from(d));
    if count > 5000 {
        return resource(format!("{count} monomial features exceed 5000"));
    }
    let f = count as usize;
    if train < 20 * f {
        return Err(LdError::Param(format!("train={train} is below 20 x {f} features")));
    }
    if test < 2 {
        return Err(LdError::Param("need at least 2 test samples".into()));
    }
    let monos = monomials(vars, d);
    debug_assert_eq!(monos.len(), f);

    let train_seed = derive_seed(seed, 1);
    let test_seed = derive_seed(seed, 2);
    let parts: Vec<(DMatrix<f64>, DVector<f64>)> = shard_sizes(train)
        .into_par_iter()
        .enumerate()
        .map(|(i, c)| {
            let (phi, t) = shard_data(spec, &monos, c, derive_seed(train_seed, i as u64));
            (phi.tr_mul(&phi), phi.tr_mul(&t))
        })
        .collect();
    let mut gram = DMatrix::zeros(f, f);
    let mut rhs = DVector::zeros(f);
    for (g, r) in &parts {
        gram += g;
        rhs += r;
    }

    let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
    let mut ridge = f64::EPSILON * scale * f as f64;
    let weights = loop {
        let mut a = gram.clone();
        for i in 0..f {
            a[(i, i)] += ridge;
        }
        if let Some(ch) = a.cholesky() {
            let w = ch.solve(&rhs);
            if w.iter().all(|v| v.is_finite()) {
                break w;
            }
        }
        ridge *= 1e3;
        if ridge > 1e-3 * scale {
            return Err(LdError::Numeric(format!(
                "normal equations ill-conditioned beyond ridge rescue (ridge {ridge:e}, scale {scale:e})"
            )));
        }
    };

    let residuals: Vec<Vec<f64>> = shard_sizes(test)
        .into_par_iter()
        .enumerate()
        .map(|(i, c)| {
            let (phi, t) = shard_data(spec, &monos, c, derive_seed(test_seed, i as u64));
            let pred = &phi * &weights;
            (0..c).map(|s| (t[s] - pred[s]).powi(2)).collect()
        })
        .collect();
    let all: Vec<f64> = residuals.into_iter().flatten().collect();
    let nt = all.len() as f64;
    let mean = all.iter().sum::<f64>() / nt;
    let var = all.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nt - 1.0);
    Ok(EmpiricalMmse {
        mse: mean,
        std_error: (var / nt).sqrt(),
        features: f,
        ridge,
    })
}

/// Indicative computational and statistical thresholds for one spec.
/// Poly-log factors and absolute constants are set to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdPoint {
    pub kind: ModelKind,
    pub computational: f64,
    pub statistical: f64,
    pub regime: String,
    pub indicative: bool,
}

/// Thresholds for the given spec; sparse uses s̄ = ρp, biclustering uses the
/// spec's expected column separation Δ_c² = λ²n/σ².
pub fn threshold_point(spec: &ModelSpec) -> ThresholdPoint {
    let (n, p, k) = (spec.n as f64, spec.p as f64, spec.k as f64);
    let (computational, statistical, regime) = match spec.kind {
        ModelKind::Clustering => {
            let comp = (p * k * k / n).sqrt().min(p.sqrt());
            let stat = k.ln() + (p * k * k.ln() / n).sqrt();
            let regime = if k * k >= n {
                "clustering:K2>=n"
            } else {
                "clustering:bbp"
            };
            (comp, stat, regime.to_string())
        }
        ModelKind::SparseClustering => {
            let s = spec.s_bar();
            let a = s.sqrt().min((s * k * k / n).sqrt()) + (s * s / n).sqrt();
            let b = p.sqrt().min((p * k * k / n).sqrt());
            let stat = 1.0 + ((s * k / n).sqrt() + s * k.sqrt() / n).min((p * k / n).sqrt());
            let regime = if a <= b {
                "sparse:support-binds"
            } else {
                "sparse:dense-binds"
            };
            (a.min(b), stat, regime.to_string())
        }
        ModelKind::Biclustering => {
            let l = spec.l as f64;
            let dc2 = spec.lambda2 * n / spec.sigma2;
            let barrier = n.sqrt().min((n * l * l / p).sqrt());
            let (comp, r1) = if dc2 > barrier {
                (l.sqrt().min((l * k * k / n).sqrt()), "biclustering:columns-recoverable")
            } else {
                (p.sqrt().min((p * k * k / n).sqrt()), "biclustering:columns-hard")
            };
            let stat = if dc2 >= (k * l / p).sqrt() {
                (k * l / n).sqrt()
            } else {
                (k * p / n).sqrt()
            };
            (comp, stat, r1.to_string())
        }
    };
    ThresholdPoint {
        kind: spec.kind,
        computational,
        statistical,
        regime,
        indicative: true,
    }
}

/// [`threshold_point`] over a grid.
pub fn threshold_curves(specs: &[ModelSpec]) -> Vec<ThresholdPoint> {
    specs.iter().map(threshold_point).collect()
}
