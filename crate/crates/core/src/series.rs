//! Series fundamentals: normalization, centering, ranking and the empirical
//! CDF attached to a ranked sequence.
//!
//! Ranking a sample loses no information: the ranked sequence holds exactly
//! the same multiset of values, so every statistical sum over the sample and
//! over its ranked form coincides. The two CDF conventions are explicit in
//! the type: descending ranking carries the (N+1-n)/N empirical CDF, the
//! ascending ranking carries the n/N fitting grid.

use crate::error::{Error, Result};

/// Ranking direction. No implicit flipping anywhere: operations that need a
/// particular convention check it and fail otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascending,
    Descending,
}

/// An ordered sequence of finite real samples, at least two of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    offset: format!("index {i}"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The same multiset of values as some source series, sorted per `direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSeries {
    values: Vec<f64>,
    direction: Direction,
    source_length: usize,
}

impl RankedSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    /// Ranked value at 1-based rank index n.
    pub fn value_at(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.values.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.values.len(),
            });
        }
        Ok(self.values[n - 1])
    }

    pub(crate) fn from_sorted(values: Vec<f64>, direction: Direction) -> Self {
        let source_length = values.len();
        Self {
            values,
            direction,
            source_length,
        }
    }
}

/// One point of the ranked-amplitude fitting set: ranked value `x` against
/// empirical quantile `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub x: f64,
    pub z: f64,
}

/// Affine map onto [0, 1]: min -> 0, max -> 1, order preserved.
pub fn normalize(s: &Series) -> Result<Series> {
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in s.values() {
        min = min.min(v);
        max = max.max(v);
    }
    if max == min {
        return Err(Error::DegenerateSeries { value: min });
    }
    let range = max - min;
    let values = s
        .values()
        .iter()
        .map(|&v| {
            if v == max {
                1.0
            } else {
                (v - min) / range
            }
        })
        .collect();
    Ok(Series { values })
}

/// Subtract the sample mean, order preserved.
pub fn center(s: &Series) -> Result<Series> {
    let mean = compensated_sum(s.values().iter().copied()) / s.len() as f64;
    let values = s.values().iter().map(|&v| v - mean).collect();
    Ok(Series { values })
}

/// Sorted copy of the series. The sort is stable, so tied values keep their
/// original relative order.
pub fn rank(s: &Series, direction: Direction) -> RankedSeries {
    let mut values = s.values().to_vec();
    match direction {
        Direction::Ascending => values.sort_by(|a, b| a.total_cmp(b)),
        Direction::Descending => values.sort_by(|a, b| b.total_cmp(a)),
    }
    RankedSeries::from_sorted(values, direction)
}

/// Empirical CDF of the n-th ranked amplitude on the descending convention:
/// F = (N + 1 - n) / N, so the maximum (n = 1) carries full weight.
pub fn empirical_cdf(r: &RankedSeries, n: usize) -> Result<f64> {
    if r.direction() != Direction::Descending {
        return Err(Error::WrongDirection {
            expected: "descending",
        });
    }
    let len = r.values().len();
    if n == 0 || n > len {
        return Err(Error::IndexOutOfRange { index: n, len });
    }
    Ok((len + 1 - n) as f64 / len as f64)
}

/// Fitting set {x_n, z_n = n/N} over an ascending ranking.
pub fn cdf_points(r: &RankedSeries) -> Result<Vec<CdfPoint>> {
    if r.direction() != Direction::Ascending {
        return Err(Error::WrongDirection {
            expected: "ascending",
        });
    }
    let n = r.values().len() as f64;
    Ok(r.values()
        .iter()
        .enumerate()
        .map(|(i, &x)| CdfPoint {
            x,
            z: (i + 1) as f64 / n,
        })
        .collect())
}

/// Statistical sum of a pure mapping over the series, sequential
/// left-to-right with error-tracking accumulation so that any reordering of
/// the same multiset agrees within floating tolerance.
pub fn sum_function<F: Fn(f64) -> f64>(values: &[f64], g: F) -> f64 {
    compensated_sum(values.iter().map(|&v| g(v)))
}

/// Neumaier compensated summation.
pub(crate) fn compensated_sum<I: Iterator<Item = f64>>(iter: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in iter {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn series(v: &[f64]) -> Series {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn normalize_maps_endpoints() {
        let out = normalize(&series(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 0.5, 1.0]);
        let out = normalize(&series(&[0.0, 1.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 1.0]);
    }

    #[test]
    fn normalize_rejects_constant_input() {
        assert!(matches!(
            normalize(&series(&[5.0, 5.0, 5.0])),
            Err(Error::DegenerateSeries { .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = CounterRng::new(3);
        let s = Series::new((0..257).map(|_| rng.next_normal()).collect()).unwrap();
        let once = normalize(&s).unwrap();
        let twice = normalize(&once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn center_examples() {
        let out = center(&series(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(out.values(), &[-1.0, 0.0, 1.0]);
        let out = center(&series(&[0.0, 0.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0]);
    }

    #[test]
    fn center_zeroes_the_mean_of_random_input() {
        let mut rng = CounterRng::new(11);
        let s = Series::new((0..100).map(|_| 10.0 + rng.next_normal()).collect()).unwrap();
        let out = center(&s).unwrap();
        let mean = compensated_sum(out.values().iter().copied()) / out.len() as f64;
        assert!(mean.abs() <= 1e-12 * 11.0, "residual mean {mean:e}");
    }

    #[test]
    fn rank_examples() {
        let out = rank(&series(&[3.0, 1.0, 2.0]), Direction::Descending);
        assert_eq!(out.values(), &[3.0, 2.0, 1.0]);
        let out = rank(&series(&[1.0, 2.0, 3.0]), Direction::Ascending);
        assert_eq!(out.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn rank_matches_comparison_sort_oracle() {
        let mut rng = CounterRng::new(5);
        let vals: Vec<f64> = (0..10).map(|_| rng.next_uniform()).collect();
        let ranked = rank(&Series::new(vals.clone()).unwrap(), Direction::Ascending);
        // Selection sort as an independent oracle.
        let mut oracle = vals.clone();
        for i in 0..oracle.len() {
            let mut m = i;
            for j in i + 1..oracle.len() {
                if oracle[j] < oracle[m] {
                    m = j;
                }
            }
            oracle.swap(i, m);
        }
        assert_eq!(ranked.values(), oracle.as_slice());
    }

    #[test]
    fn empirical_cdf_values() {
        let r = rank(&series(&[0.1, 0.4, 0.2, 0.9]), Direction::Descending);
        assert_eq!(empirical_cdf(&r, 1).unwrap(), 1.0);
        assert_eq!(empirical_cdf(&r, 4).unwrap(), 0.25);
        assert!(matches!(
            empirical_cdf(&r, 5),
            Err(Error::IndexOutOfRange { .. })
        ));
        let n = 1_000_000usize;
        let many = RankedSeries::from_sorted(
            (0..n).map(|i| 1.0 - i as f64 / n as f64).collect(),
            Direction::Descending,
        );
        assert!((empirical_cdf(&many, n).unwrap() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn empirical_cdf_requires_descending() {
        let r = rank(&series(&[1.0, 2.0]), Direction::Ascending);
        assert!(matches!(
            empirical_cdf(&r, 1),
            Err(Error::WrongDirection { .. })
        ));
    }

    #[test]
    fn cdf_points_grid() {
        let r = rank(&series(&[0.0, 1.0]), Direction::Ascending);
        let pts = cdf_points(&r).unwrap();
        assert_eq!(pts, vec![CdfPoint { x: 0.0, z: 0.5 }, CdfPoint { x: 1.0, z: 1.0 }]);

        let r = rank(&series(&[0.3, 0.1, 0.7, 0.5]), Direction::Ascending);
        let z: Vec<f64> = cdf_points(&r).unwrap().iter().map(|p| p.z).collect();
        assert_eq!(z, vec![0.25, 0.5, 0.75, 1.0]);

        let r = rank(&series(&[1.0, 2.0]), Direction::Descending);
        assert!(matches!(cdf_points(&r), Err(Error::WrongDirection { .. })));
    }

    #[test]
    fn both_cdf_conventions_agree() {
        let mut rng = CounterRng::new(17);
        let s = Series::new((0..101).map(|_| rng.next_normal()).collect()).unwrap();
        let asc = rank(&s, Direction::Ascending);
        let desc = rank(&s, Direction::Descending);
        let pts = cdf_points(&asc).unwrap();
        let n = s.len();
        for (i, p) in pts.iter().enumerate() {
            let m = i + 1;
            // Same value seen from both ends of the ranking.
            assert_eq!(desc.value_at(n + 1 - m).unwrap(), p.x);
            // F_desc at the mirrored rank equals the ascending grid exactly.
            assert!((empirical_cdf(&desc, n + 1 - m).unwrap() - p.z).abs() < 1e-15);
            // Survivor form differs from the grid by exactly the 1/N offset.
            let survivor = 1.0 - empirical_cdf(&desc, m).unwrap();
            assert!((survivor - (p.z - 1.0 / n as f64)).abs() <= 1.0 / n as f64);
        }
    }

    #[test]
    fn sum_function_identity() {
        assert_eq!(sum_function(&[1.0, 2.0, 3.0], |x| x), 6.0);
    }

    #[test]
    fn sum_function_is_rank_invariant() {
        let mut rng = CounterRng::new(23);
        let s = Series::new((0..500).map(|_| rng.next_uniform()).collect()).unwrap();
        let sra = rank(&s, Direction::Ascending);
        type SumMap = (fn(f64) -> f64, &'static str);
        let gs: [SumMap; 2] = [
            (|x| x * x, "square"),
            (|x| -x * (x + 1e-12).ln(), "entropy"),
        ];
        for (g, name) in gs {
            let a = sum_function(s.values(), g);
            let b = sum_function(sra.values(), g);
            assert!(
                (a - b).abs() <= 1e-9 * a.abs(),
                "{name}: {a} vs {b}"
            );
        }
    }

    proptest! {
        #[test]
        fn ranking_preserves_the_multiset(vals in proptest::collection::vec(-1e6f64..1e6, 2..200)) {
            let s = Series::new(vals.clone()).unwrap();
            let ranked = rank(&s, Direction::Ascending);
            let mut expect = vals;
            expect.sort_by(|a, b| a.total_cmp(b));
            prop_assert_eq!(ranked.values(), expect.as_slice());
        }

        #[test]
        fn rank_is_idempotent(vals in proptest::collection::vec(-1e3f64..1e3, 2..100)) {
            let s = Series::new(vals).unwrap();
            let once = rank(&s, Direction::Ascending);
            let again = rank(
                &Series::new(once.values().to_vec()).unwrap(),
                Direction::Ascending,
            );
            prop_assert_eq!(once.values(), again.values());
        }

        #[test]
        fn cdf_grid_is_strictly_monotone(vals in proptest::collection::vec(-1e3f64..1e3, 2..64)) {
            let s = Series::new(vals).unwrap();
            let desc = rank(&s, Direction::Descending);
            let n = desc.values().len();
            for m in 1..n {
                prop_assert!(
                    empirical_cdf(&desc, m).unwrap() > empirical_cdf(&desc, m + 1).unwrap()
                );
            }
            let asc = rank(&s, Direction::Ascending);
            let pts = cdf_points(&asc).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[0].z < w[1].z);
            }
        }
    }
}
