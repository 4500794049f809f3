//! Sampling and special-function primitives used by the sampler.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Open01};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::Real;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// `ln Γ(a) + ln Γ(b) − ln Γ(a + b)` without cancellation for large arguments.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::NonPositiveArgument(a, b));
    }
    let p = a.min(b);
    let q = a.max(b);
    let v = if p >= 10.0 {
        let corr = lgamma_correction(p) + lgamma_correction(q) - lgamma_correction(p + q);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / (p + q)).ln()
            + q * (-p / (p + q)).ln_1p()
    } else if q >= 10.0 {
        let corr = lgamma_correction(q) - lgamma_correction(p + q);
        ln_gamma(p) + corr + p - p * (p + q).ln() + (q - 0.5) * (-p / (p + q)).ln_1p()
    } else {
        ln_gamma(p) + (ln_gamma(q) - ln_gamma(p + q))
    };
    Ok(v)
}

/// Stirling remainder `ln Γ(x) − [(x − ½) ln x − x + ln √(2π)]` for `x ≥ 10`.
fn lgamma_correction(x: f64) -> f64 {
    const COEFFS: [f64; 5] = [
        0.166_638_948_045_186_324_720_572_965_082_2,
        -0.138_494_817_606_756_384_073_298_605_913_5e-4,
        0.981_082_564_692_472_942_615_717_154_748_7e-8,
        -0.180_912_947_557_249_419_426_330_626_671_9e-10,
        0.622_109_804_189_260_522_712_601_554_341_6e-13,
    ];
    const XBIG: f64 = 94_906_265.624_251_56;
    debug_assert!(x >= 10.0);
    if x >= XBIG {
        return 1.0 / (x * 12.0);
    }
    let t = 10.0 / x;
    chebyshev(t * t * 2.0 - 1.0, &COEFFS) / x
}

fn chebyshev(x: f64, coeffs: &[f64]) -> f64 {
    let twox = x * 2.0;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        b2 = b1;
        b1 = b0;
        b0 = twox * b1 - b2 + c;
    }
    (b0 - b2) * 0.5
}

/// Log of a Gamma(shape, 1) variate; stays finite for tiny shapes via
/// `G(a) = G(a + 1) · U^{1/a}`.
pub fn sample_log_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = Open01.sample(rng);
        g.ln() + u.ln() / shape
    }
}

/// Dirichlet draw restricted to `mask`; entries outside the mask (or with zero
/// concentration) are exactly zero, entries inside are strictly positive.
pub fn sample_masked_dirichlet<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    concentration: &[f64],
    mask: &[bool],
) -> Result<Vec<T>> {
    if concentration.len() != mask.len() {
        return Err(Error::DimensionMismatch(format!(
            "concentration has {} entries, mask {}",
            concentration.len(),
            mask.len()
        )));
    }
    let mut logs = vec![f64::NEG_INFINITY; mask.len()];
    let mut max = f64::NEG_INFINITY;
    for ((l, &a), &m) in logs.iter_mut().zip(concentration).zip(mask) {
        if m && a > 0.0 {
            *l = sample_log_gamma(rng, a);
            max = max.max(*l);
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    Ok(normalize_logs(&logs, max))
}

/// Dirichlet draw over the listed `support` indices of a length-`len` vector.
pub fn sample_dirichlet_on<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    support: &[usize],
    concentration: impl Fn(usize) -> f64,
) -> Result<Vec<T>> {
    let mut logs = vec![f64::NEG_INFINITY; len];
    let mut max = f64::NEG_INFINITY;
    for &i in support {
        let a = concentration(i);
        if a > 0.0 {
            logs[i] = sample_log_gamma(rng, a);
            max = max.max(logs[i]);
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    Ok(normalize_logs(&logs, max))
}

fn normalize_logs<T: Real>(logs: &[f64], max: f64) -> Vec<T> {
    let total: f64 = logs.iter().map(|&l| (l - max).exp()).sum();
    let log_total = total.ln();
    logs.iter()
        .map(|&l| {
            if l == f64::NEG_INFINITY {
                T::zero()
            } else {
                T::of((l - max - log_total).exp()).max(T::tiny())
            }
        })
        .collect()
}

/// Log density of `x` under `Dirichlet(concentration)` on the given support.
/// Coordinates outside the support are ignored. A singleton support is a
/// point mass and contributes zero.
pub fn dirichlet_log_pdf<T: Real>(x: &[T], support: &[usize], concentration: impl Fn(usize) -> f64) -> f64 {
    if support.len() <= 1 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut acc = 0.0;
    for &i in support {
        let a = concentration(i);
        total += a;
        acc += (a - 1.0) * x[i].as_f64().ln() - ln_gamma(a);
    }
    acc + ln_gamma(total)
}

/// Multinomial draw of `n` trials over unnormalized nonnegative weights.
pub fn sample_multinomial<T: Real, R: Rng + ?Sized>(rng: &mut R, weights: &[T], n: u64) -> Vec<u64> {
    let mut out = vec![0u64; weights.len()];
    if n == 0 {
        return out;
    }
    let w: Vec<f64> = weights.iter().map(|x| x.as_f64().max(0.0)).collect();
    let total: f64 = w.iter().sum();
    assert!(total > 0.0, "multinomial with no positive weight");
    let last = w.iter().rposition(|&x| x > 0.0).expect("positive weight exists");

    if n as usize <= weights.len() {
        for _ in 0..n {
            let mut u = rng.random::<f64>() * total;
            let mut pick = last;
            for (i, &x) in w.iter().enumerate().take(last) {
                if u < x {
                    pick = i;
                    break;
                }
                u -= x;
            }
            out[pick] += 1;
        }
        return out;
    }

    let mut left = n;
    let mut mass = total;
    for (i, &x) in w.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i == last {
            out[i] = left;
            break;
        }
        if x <= 0.0 {
            continue;
        }
        let p = (x / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out[i] = k;
        left -= k;
        mass -= x;
    }
    out
}

/// Euclidean projection of `v` onto the probability simplex over the masked
/// coordinates; zeros elsewhere.
pub fn project_simplex_masked<T: Real>(v: &[T], mask: &[bool]) -> Result<Vec<T>> {
    if v.len() != mask.len() {
        return Err(Error::DimensionMismatch("vector and mask lengths differ".into()));
    }
    let support: Vec<usize> = (0..v.len()).filter(|&i| mask[i]).collect();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut out = vec![T::zero(); v.len()];
    for &i in &support {
        out[i] = v[i];
    }
    let mut scratch = Vec::with_capacity(support.len());
    project_simplex_on(&mut out, &support, &mut scratch);
    Ok(out)
}

/// In-place projection of `row[support]` onto the simplex. Coordinates outside
/// `support` are left untouched.
pub fn project_simplex_on<T: Real>(row: &mut [T], support: &[usize], scratch: &mut Vec<T>) {
    scratch.clear();
    scratch.extend(support.iter().map(|&i| row[i]));
    scratch.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite values"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - T::one()) / T::of((j + 1) as f64);
        if u - t > T::zero() {
            theta = t;
        }
    }
    for &i in support {
        row[i] = (row[i] - theta).max(T::zero());
    }
}

/// Log marginal probability of one Beta-Bernoulli column with `ones` successes
/// out of `total`, with the success probability integrated out.
pub fn log_beta_bernoulli(ones: usize, total: usize, a: f64, b: f64) -> f64 {
    let zeros = (total - ones) as f64;
    log_beta(a + ones as f64, b + zeros).expect("positive") - log_beta(a, b).expect("positive")
}

/// Bernoulli draw with success log-odds `log_odds`.
pub fn bernoulli_log_odds<R: Rng + ?Sized>(rng: &mut R, log_odds: f64) -> bool {
    let p = if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    };
    rng.random::<f64>() < p
}
