//! Seeded sampling of chart points with domain guards.
//!
//! Points are drawn uniformly from per-coordinate boxes; a guard predicate
//! rejects points near singular loci (vanishing Jacobians, conformal-factor
//! zeros, branch points of fractional powers). Sampling is deterministic for
//! a given seed, so reports are reproducible byte-for-byte.

use crate::symexpr::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default seed used by the CLI and the acceptance suite.
pub const DEFAULT_SEED: u64 = 0x5eed_2f0;

/// Per-coordinate sampling intervals plus an admissibility predicate.
#[derive(Clone)]
pub struct SampleBox {
    ranges: Vec<(String, f64, f64)>,
    guard: Option<std::sync::Arc<dyn Fn(&Point) -> bool + Send + Sync>>,
}

impl SampleBox {
    /// Box from (coordinate, low, high) triples.
    pub fn new(ranges: &[(&str, f64, f64)]) -> Self {
        SampleBox {
            ranges: ranges
                .iter()
                .map(|(n, a, b)| {
                    assert!(a < b, "empty range for `{n}`");
                    (n.to_string(), *a, *b)
                })
                .collect(),
            guard: None,
        }
    }

    /// Default box [-1, 1] for every listed coordinate.
    pub fn unit(coords: &[&str]) -> Self {
        SampleBox::new(
            &coords
                .iter()
                .map(|c| (*c, -1.0, 1.0))
                .collect::<Vec<_>>(),
        )
    }

    pub fn with_guard(
        mut self,
        guard: impl Fn(&Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.guard = Some(std::sync::Arc::new(guard));
        self
    }

    pub fn coords(&self) -> impl Iterator<Item = &str> {
        self.ranges.iter().map(|(n, _, _)| n.as_str())
    }

    pub fn admits(&self, p: &Point) -> bool {
        self.guard.as_ref().map_or(true, |g| g(p))
    }

    /// Draw `n` admissible points deterministically from `seed`, rejecting
    /// guard violations. Panics if the guard rejects too often (bad box).
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        let max_attempts = 1000 * n.max(1);
        while out.len() < n {
            attempts += 1;
            assert!(
                attempts <= max_attempts,
                "guard rejected too many samples; shrink the box or fix the guard"
            );
            let mut p = Point::new();
            for (name, lo, hi) in &self.ranges {
                p.set(name, rng.gen_range(*lo..*hi));
            }
            if self.admits(&p) {
                out.push(p);
            }
        }
        out
    }
}

impl std::fmt::Debug for SampleBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampleBox")
            .field("ranges", &self.ranges)
            .field("guarded", &self.guard.is_some())
            .finish()
    }
}

/// The fixed rational λ panel used for λ-polynomial identity certification.
/// An identity of λ-degree D holds identically iff it holds at D+1 distinct
/// values; the panel provides up to eight.
pub fn lambda_panel(count: usize) -> Vec<num::BigRational> {
    use num::BigRational;
    let raw: [(i64, i64); 8] = [
        (0, 1),
        (1, 1),
        (-1, 1),
        (2, 1),
        (1, 2),
        (3, 1),
        (-2, 1),
        (5, 2),
    ];
    assert!(count <= raw.len(), "panel supports at most 8 values");
    raw[..count]
        .iter()
        .map(|(n, d)| BigRational::new((*n).into(), (*d).into()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let b = SampleBox::unit(&["x", "y"]);
        let a = b.sample(10, 42);
        let c = b.sample(10, 42);
        assert_eq!(a, c);
        let d = b.sample(10, 43);
        assert_ne!(a, d);
    }

    #[test]
    fn samples_stay_in_box() {
        let b = SampleBox::new(&[("x", 0.5, 1.5), ("y", -2.0, -1.0)]);
        for p in b.sample(50, 1) {
            let x = p.get("x").unwrap();
            let y = p.get("y").unwrap();
            assert!((0.5..1.5).contains(&x));
            assert!((-2.0..-1.0).contains(&y));
        }
    }

    #[test]
    fn guard_rejects_inadmissible_points() {
        // keep 4y - w^2 >= 0.1
        let b = SampleBox::new(&[("y", 0.3, 1.0), ("w", -1.0, 1.0)])
            .with_guard(|p| 4.0 * p.get("y").unwrap() - p.get("w").unwrap().powi(2) >= 0.1);
        for p in b.sample(100, 7) {
            assert!(4.0 * p.get("y").unwrap() - p.get("w").unwrap().powi(2) >= 0.1);
        }
    }

    #[test]
    fn lambda_panel_values_are_distinct() {
        let panel = lambda_panel(8);
        for i in 0..panel.len() {
            for j in (i + 1)..panel.len() {
                assert_ne!(panel[i], panel[j]);
            }
        }
    }
}
