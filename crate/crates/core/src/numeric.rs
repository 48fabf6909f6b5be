//! Scalar numeric primitives underlying the profit formulas: standard-normal
//! cdf/pdf wrappers and numerically stable binomial partial sums.

use std::f64::consts::{PI, SQRT_2};

/// Terms with natural log below this are treated as zero contributions while
/// the summation recurrences run in log space; `exp` of anything smaller
/// underflows f64 anyway.
const LN_TINY: f64 = -700.0;

/// P(Z <= z) for standard normal Z.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// P(Z >= z) for standard normal Z.
pub(crate) fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Standard normal density at z.
pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// ln of the Bin(u, p) mass at k, for 0 <= k <= u and 0 < p < 1.
fn ln_binom_pmf_inner(k: u64, u: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    ln_factorial(u) - ln_factorial(k) - ln_factorial(u - k) + k as f64 * p.ln()
        + (u - k) as f64 * q.ln()
}

/// Bin(u, p) mass at k; zero outside 0..=u, with the degenerate p = 0 and
/// p = 1 distributions handled exactly.
pub(crate) fn binom_pmf(k: i64, u: u64, p: f64) -> f64 {
    if k < 0 || k as u64 > u {
        return 0.0;
    }
    let k = k as u64;
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == u { 1.0 } else { 0.0 };
    }
    ln_binom_pmf_inner(k, u, p).exp()
}

/// Compensated (Kahan) accumulator.
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn new() -> Self {
        KahanSum { sum: 0.0, carry: 0.0 }
    }

    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Sums of the Bin(u, p) mass and of j times the mass over j = 0..=k_max.
///
/// Requires 0 < p < 1 and k_max <= u. The first term starts in log space and
/// successor terms follow the ratio recurrence
/// t_{j+1} = t_j * ((u - j) / (j + 1)) * (p / q); arithmetic switches to
/// linear once a term becomes representable, so the sums stay stable at u in
/// the millions without per-term log-gamma cost. Ranges reaching far past
/// the mode stop once the remainder is below f64 resolution of the result.
pub(crate) fn binom_lower_sums(k_max: u64, u: u64, p: f64) -> (f64, f64) {
    debug_assert!(p > 0.0 && p < 1.0);
    debug_assert!(k_max <= u);
    let q = 1.0 - p;
    let ratio = p / q;
    let ln_ratio = ratio.ln();

    let mut j = 0u64;
    let mut ln_t = u as f64 * q.ln();
    while ln_t < LN_TINY && j < k_max {
        ln_t += ((u - j) as f64 / (j + 1) as f64).ln() + ln_ratio;
        j += 1;
    }
    if ln_t < LN_TINY {
        return (0.0, 0.0);
    }

    let mut t = ln_t.exp();
    let mut mass = KahanSum::new();
    let mut weighted = KahanSum::new();
    loop {
        mass.add(t);
        weighted.add(j as f64 * t);
        if j == k_max {
            break;
        }
        // Past the mode the terms only decay, so the whole unsummed range
        // is bounded by `remaining` copies of the current term (times k_max
        // for the weighted sum); once that bound is below 1e-18 of the mass
        // accumulated so far, the rest cannot move either result.
        let remaining = (k_max - j) as f64;
        if j as f64 > (u as f64 + 1.0) * p
            && t * remaining * (k_max as f64).max(1.0) < mass.value() * 1e-18
        {
            break;
        }
        t *= (u - j) as f64 / (j + 1) as f64 * ratio;
        j += 1;
    }
    (mass.value(), weighted.value())
}

/// Sums of the Bin(u, p) mass and of j times the mass over j = r..=u.
///
/// Requires 0 < p < 1 and 1 <= r <= u. Same hybrid log/linear recurrence as
/// [`binom_lower_sums`], seeded at the term for j = r.
pub(crate) fn binom_upper_sums(r: u64, u: u64, p: f64) -> (f64, f64) {
    debug_assert!(p > 0.0 && p < 1.0);
    debug_assert!(r >= 1 && r <= u);
    let q = 1.0 - p;
    let ratio = p / q;
    let ln_ratio = ratio.ln();

    let mut j = r;
    let mut ln_t = ln_binom_pmf_inner(r, u, p);
    while ln_t < LN_TINY && j < u {
        ln_t += ((u - j) as f64 / (j + 1) as f64).ln() + ln_ratio;
        j += 1;
    }
    if ln_t < LN_TINY {
        return (0.0, 0.0);
    }

    let mut t = ln_t.exp();
    let mut mass = KahanSum::new();
    let mut weighted = KahanSum::new();
    loop {
        mass.add(t);
        weighted.add(j as f64 * t);
        if j == u {
            break;
        }
        // Same cutoff as in binom_lower_sums: past the mode, `remaining`
        // copies of the current term bound everything left.
        let remaining = (u - j) as f64;
        if j as f64 > (u as f64 + 1.0) * p
            && t * remaining * (u as f64) < mass.value() * 1e-18
        {
            break;
        }
        t *= (u - j) as f64 / (j + 1) as f64 * ratio;
        j += 1;
    }
    (mass.value(), weighted.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_points() {
        // scipy.stats.norm.cdf
        let cases = [
            (-5.0, 2.8665157187919328e-07),
            (-1.96, 0.024997895148220435),
            (-1.0, 0.15865525393145707),
            (-0.5, 0.30853753872598688),
            (0.0, 0.5),
            (0.5, 0.69146246127401312),
            (1.0, 0.84134474606854293),
            (1.96, 0.97500210485177952),
            (5.0, 0.99999971334842808),
        ];
        for (z, want) in cases {
            assert!((normal_cdf(z) - want).abs() < 1e-15, "cdf({z})");
            assert!((normal_upper_tail(-z) - want).abs() < 1e-15, "sf({z})");
        }
    }

    #[test]
    fn pmf_edges() {
        assert_eq!(binom_pmf(-1, 10, 0.3), 0.0);
        assert_eq!(binom_pmf(11, 10, 0.3), 0.0);
        assert_eq!(binom_pmf(0, 10, 0.0), 1.0);
        assert_eq!(binom_pmf(3, 10, 0.0), 0.0);
        assert_eq!(binom_pmf(10, 10, 1.0), 1.0);
        assert!((binom_pmf(2, 4, 0.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn lower_and_upper_sums_partition_the_distribution() {
        for &(u, p) in &[(40u64, 0.37), (1_000, 0.002), (5_000, 0.93)] {
            for r in [1u64, 2, 7, u / 2, u] {
                let (lo_mass, lo_weighted) = binom_lower_sums(r - 1, u, p);
                let (hi_mass, hi_weighted) = binom_upper_sums(r, u, p);
                // The log-gamma seed term carries ~1e-11 relative error at
                // u = 5000, which bounds the achievable split accuracy.
                assert!(
                    (lo_mass + hi_mass - 1.0).abs() < 1e-10,
                    "mass split u={u} p={p} r={r}: {lo_mass} + {hi_mass}"
                );
                let mean = u as f64 * p;
                assert!(
                    (lo_weighted + hi_weighted - mean).abs() < 1e-9 * mean.max(1.0),
                    "mean split u={u} p={p} r={r}"
                );
            }
        }
    }

    #[test]
    fn log_phase_survives_extreme_underflow() {
        // q^u underflows e^-700 by a wide margin; the lower mass up to the
        // mean must still come out as ~0.5.
        let u = 2_000_000u64;
        let p = 0.01;
        let mean = (u as f64 * p) as u64;
        let (mass, _) = binom_lower_sums(mean, u, p);
        assert!((mass - 0.5).abs() < 0.01, "got {mass}");
    }

    #[test]
    fn far_tail_cutoff_keeps_the_whole_distribution() {
        // Summing the full support must still return total mass 1 and mean
        // u*p even though the loop stops well short of u. The budget per
        // case is the log-gamma seed error, which grows with ln(u!).
        for &(u, p, tol) in &[(10_000u64, 0.01, 1e-10), (2_000_000, 1e-5, 1e-8), (5_000, 0.6, 1e-10)]
        {
            let (mass, weighted) = binom_lower_sums(u, u, p);
            let mean = u as f64 * p;
            assert!((mass - 1.0).abs() < tol, "lower mass u={u} p={p}: {mass}");
            assert!((weighted - mean).abs() < tol * mean.max(1.0), "lower mean u={u} p={p}");

            let (mass, weighted) = binom_upper_sums(1, u, p);
            let miss = binom_pmf(0, u, p);
            assert!((mass - (1.0 - miss)).abs() < tol, "upper mass u={u} p={p}: {mass}");
            assert!((weighted - mean).abs() < tol * mean.max(1.0), "upper mean u={u} p={p}");
        }
    }
}
