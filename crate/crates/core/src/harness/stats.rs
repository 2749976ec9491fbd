//! Small summary statistics used by the sweep aggregates and trend checks.

/// Mean, standard error of the mean (sample standard deviation / sqrt n) and count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    /// NaN when fewer than two values are available.
    pub sem: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sem: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sem = if n < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self { mean, sem, n }
    }
}

/// Exact two-sided sign test on paired observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Pairs with `a < b`.
    pub below: usize,
    /// Pairs with `a > b`.
    pub above: usize,
    pub ties: usize,
    pub p_value: f64,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_half_cdf(n: usize, k: usize) -> f64 {
    let ln_half_n = n as f64 * 0.5_f64.ln();
    (0..=k.min(n))
        .map(|i| (ln_choose(n, i) + ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}

pub fn paired_sign_test(a: &[f64], b: &[f64]) -> SignTest {
    assert_eq!(a.len(), b.len(), "sign test needs paired samples");
    let (mut below, mut above, mut ties) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Less) => below += 1,
            Some(std::cmp::Ordering::Greater) => above += 1,
            _ => ties += 1,
        }
    }
    let n = below + above;
    let p_value = if n == 0 {
        1.0
    } else {
        (2.0 * binomial_half_cdf(n, below.min(above))).min(1.0)
    };
    SignTest {
        below,
        above,
        ties,
        p_value,
    }
}
