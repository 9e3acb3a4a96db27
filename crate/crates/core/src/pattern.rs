//! The bipartite pattern K_{r,s} and the exact arithmetic around it:
//! the density exponent λ(r,s) = (rs-2)/(r+s-2), balancedness classification,
//! and the closed-form threshold bound curves.
//!
//! All comparisons that decide a verdict are done in exact rationals;
//! floating point appears only at the formula boundary (exponents 1/λ).

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

pub type Rational = Ratio<i64>;

/// The pattern K_{r,s} with r >= s >= 2. The constructor canonicalizes
/// argument order; s = 1 is rejected (star patterns are degenerate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    r: usize,
    s: usize,
}

impl Pattern {
    pub fn new(a: usize, b: usize) -> Result<Pattern> {
        let (r, s) = (a.max(b), a.min(b));
        if s < 2 {
            return Err(Error::Input(format!(
                "pattern K_{{{r},{s}}} rejected: the smaller part must have at least 2 vertices"
            )));
        }
        Ok(Pattern { r, s })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Number of edges rs of K_{r,s}.
    pub fn edge_count(&self) -> usize {
        self.r * self.s
    }

    /// Number of vertices r+s.
    pub fn vertex_count(&self) -> usize {
        self.r + self.s
    }

    /// λ(r,s) = (rs-2)/(r+s-2), exact and reduced.
    pub fn lambda(&self) -> Rational {
        Ratio::new(
            (self.r * self.s) as i64 - 2,
            (self.r + self.s) as i64 - 2,
        )
    }

    /// Closed-form balancedness: true iff r >= 4, s >= 3, and r <= (s-2)^2 + s.
    ///
    /// For s = 2 the classification is undefined (the closed form's range
    /// starts at s = 3); this returns false there, and
    /// [`Pattern::is_balanced_brute_force`] still evaluates the definition.
    pub fn is_balanced_closed_form(&self) -> bool {
        self.r >= 4 && self.s >= 3 && self.r <= (self.s - 2) * (self.s - 2) + self.s
    }

    /// Evaluates the balancedness definition directly: the density condition
    /// e(H) >= 2ν(H)-2 together with (e(F)-1)/(ν(F)-2) <= λ for every proper
    /// subgraph F with at least 3 vertices.
    ///
    /// Among subgraphs of K_{r,s} on a (p,q) vertex split the edge-maximal one
    /// is K_{p,q}, and the ratio is monotone in the edge count, so sweeping
    /// (p,q) dominates all subgraphs. The one spanning subgraph not dominated
    /// this way, K_{r,s} minus a single edge, has ratio exactly λ and passes
    /// identically.
    pub fn is_balanced_brute_force(&self) -> Result<BalancednessReport> {
        if self.r > 64 {
            return Err(Error::Range(format!(
                "brute-force balancedness capped at r, s <= 64, got ({},{})",
                self.r, self.s
            )));
        }
        let density_condition_holds =
            self.r * self.s >= 2 * (self.r + self.s) - 2;
        let lambda = self.lambda();
        let mut worst: Option<((usize, usize), Rational)> = None;
        for p in 0..=self.r {
            for q in 0..=self.s {
                if (p, q) == (self.r, self.s) || p + q < 3 {
                    continue;
                }
                let ratio = Ratio::new((p * q) as i64 - 1, (p + q) as i64 - 2);
                if worst.map(|(_, w)| ratio > w).unwrap_or(true) {
                    worst = Some(((p, q), ratio));
                }
            }
        }
        let ((wp, wq), worst_ratio) = worst.expect("sweep is nonempty for s >= 2");
        let note = if self.s == 2 {
            Some("outside lemma range: the closed form is undefined for s = 2")
        } else {
            None
        };
        Ok(BalancednessReport {
            balanced: density_condition_holds && worst_ratio <= lambda,
            density_condition_holds,
            worst_subgraph: (wp, wq),
            worst_ratio_num: *worst_ratio.numer(),
            worst_ratio_den: *worst_ratio.denom(),
            note,
        })
    }

    /// The supremal p for which the subcritical hypothesis
    /// e·p·n^{1/λ}·(log n)·rs <= λ² holds: λ² / (e · rs · log n · n^{1/λ}).
    pub fn lower_bound_p(&self, n: usize) -> Result<f64> {
        if self.s < 3 {
            return Err(Error::Domain(format!(
                "lower bound proven only for r, s >= 3, got ({},{})",
                self.r, self.s
            )));
        }
        if n < 3 {
            return Err(Error::Input(format!("lower bound requires n >= 3, got {n}")));
        }
        let lam = ratio_f64(self.lambda());
        let nf = n as f64;
        Ok(lam * lam
            / (std::f64::consts::E
                * (self.r * self.s) as f64
                * nf.ln()
                * nf.powf(1.0 / lam)))
    }

    /// Upper bound curve C · (log n / log log n)^{2/λ} · n^{-1/λ}, valid for
    /// balanced patterns.
    pub fn upper_bound_p(&self, n: usize, c: f64) -> Result<f64> {
        if !self.is_balanced_closed_form() {
            return Err(Error::Domain(format!(
                "upper bound requires a balanced pattern, K_{{{},{}}} is not",
                self.r, self.s
            )));
        }
        self.upper_curve(n, c)
    }

    /// The upper-curve shape evaluated for any pattern. It is a proven
    /// bound only in the balanced range ([`Self::upper_bound_p`] enforces
    /// that), but serves as a reference corridor everywhere else.
    pub fn upper_curve(&self, n: usize, c: f64) -> Result<f64> {
        if n < 16 {
            return Err(Error::Input(format!("upper bound requires n >= 16, got {n}")));
        }
        if c <= 0.0 {
            return Err(Error::Input(format!("constant C must be positive, got {c}")));
        }
        let lam = ratio_f64(self.lambda());
        let nf = n as f64;
        Ok(c * (nf.ln() / nf.ln().ln()).powf(2.0 / lam) * nf.powf(-1.0 / lam))
    }

    /// General lower bound via reduction to the largest balanced-range
    /// sub-pattern: maximizes λ(r',s') over r' <= r, s' <= s with
    /// r' <= (s'-2)^2 + s'. Since λ is nondecreasing in both arguments and
    /// x² n^{-1/x} is increasing in x, the maximizer is
    /// r' = min(r, (s-2)^2 + s), s' = s.
    ///
    /// Returns the bound value (e log n)^{-1} λ(r',s')² n^{-1/λ(r',s')}
    /// together with the chosen (r', s').
    pub fn general_lower_bound_p(&self, n: usize) -> Result<(f64, (usize, usize))> {
        if self.s < 3 {
            return Err(Error::Domain(format!(
                "general lower bound proven only for r, s >= 3, got ({},{})",
                self.r, self.s
            )));
        }
        if n < 3 {
            return Err(Error::Input(format!("requires n >= 3, got {n}")));
        }
        let rp = self.r.min((self.s - 2) * (self.s - 2) + self.s);
        let sp = self.s;
        let lam = ratio_f64(Pattern::new(rp, sp)?.lambda());
        let nf = n as f64;
        let value = lam * lam / (std::f64::consts::E * nf.ln()) * nf.powf(-1.0 / lam);
        Ok((value, (rp, sp)))
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "K_{{{},{}}}", self.r, self.s)
    }
}

/// Convert an exact rational to f64 at the formula boundary.
pub fn ratio_f64(r: Rational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

/// Outcome of the brute-force balancedness evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalancednessReport {
    pub balanced: bool,
    /// e(H) >= 2ν(H) - 2.
    pub density_condition_holds: bool,
    /// (p,q) maximizing the subgraph ratio (pq-1)/(p+q-2).
    pub worst_subgraph: (usize, usize),
    pub worst_ratio_num: i64,
    pub worst_ratio_den: i64,
    pub note: Option<&'static str>,
}

impl BalancednessReport {
    pub fn worst_ratio(&self) -> Rational {
        Ratio::new(self.worst_ratio_num, self.worst_ratio_den)
    }
}
