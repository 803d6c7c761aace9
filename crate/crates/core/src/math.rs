//! Small numeric helpers shared by the oracle and the analysis code.

/// `C(a, b)` as a float; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> f64 {
    if b > a {
        return 0.0;
    }
    let b = b.min(a - b);
    let mut acc = 1.0f64;
    for i in 0..b {
        acc = acc * (a - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn ln_binomial(a: u64, b: u64) -> f64 {
    if b > a {
        return f64::NEG_INFINITY;
    }
    let b = b.min(a - b);
    (0..b)
        .map(|i| ((a - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// `C(a1, b1) * C(a2, b2) / C(a3, b3)` without overflow. Signed arguments
/// let callers pass `N - m - 1` style expressions; any negative lower index
/// makes the term zero.
pub fn hypergeometric(num1: (i64, i64), num2: (i64, i64), den: (i64, i64)) -> f64 {
    let valid = |(a, b): (i64, i64)| a >= 0 && b >= 0 && b <= a;
    if !valid(num1) || !valid(num2) {
        return 0.0;
    }
    assert!(valid(den), "denominator C{den:?} is zero");
    let c = |(a, b): (i64, i64)| binomial(a as u64, b as u64);
    let direct = c(num1) * c(num2) / c(den);
    if direct.is_finite() && c(den).is_finite() {
        return direct;
    }
    let l = |(a, b): (i64, i64)| ln_binomial(a as u64, b as u64);
    (l(num1) + l(num2) - l(den)).exp()
}

/// `C(w + k - 1, k)`: the rising-binomial transform of a weight.
pub fn rising_binomial(w: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if w == 0 {
        return 0.0;
    }
    binomial(w + k - 1, k)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Gamma function. Lanczos approximation via `statrs`, relative error
/// around 1e-15 on the arguments used here.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial(7, 0), 1.0);
        assert_eq!(binomial(60, 30), 118264581564861424.0);
        assert!((ln_binomial(60, 30) - 118264581564861424.0f64.ln()).abs() < 1e-12);
        assert_eq!(rising_binomial(0, 2), 0.0);
        assert_eq!(rising_binomial(3, 1), 3.0);
        assert_eq!(rising_binomial(3, 2), 6.0);
        assert_eq!(rising_binomial(5, 0), 1.0);
    }

    #[test]
    fn hypergeometric_matches_direct_and_survives_large_arguments() {
        let h = hypergeometric((4, 1), (5, 2), (10, 3));
        assert!((h - 4.0 * 10.0 / 120.0).abs() < 1e-15);
        assert_eq!(hypergeometric((4, -1), (5, 2), (10, 3)), 0.0);
        assert_eq!(hypergeometric((2, 3), (5, 2), (10, 3)), 0.0);
        let big = hypergeometric((3_000_000, 40), (10, 0), (3_000_001, 40));
        let expected = (1.0 - 40.0 / 3_000_001.0f64).ln().exp();
        assert!((big - expected).abs() < 1e-9, "{big} vs {expected}");
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        // Gamma(1.5) = sqrt(pi) / 2
        assert!((gamma(1.5) / (std::f64::consts::PI.sqrt() / 2.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
