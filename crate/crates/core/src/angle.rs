//! Angle/radius decomposition of a centered pair and the three-component
//! split of its increments.
//!
//! Each pair (x_k, y_k) maps to phi_k = arcsin(2 x_k y_k / r_k^2) / 2 in
//! [-pi/4, pi/4] and r_k = sqrt(x_k^2 + y_k^2). The discrete derivatives of
//! {phi_k} and {r_k} split the randomness into {sign(phi'), |phi'|, r'};
//! the sign channel becomes the extracted bit stream (-1 -> 0), exact zero
//! increments are dropped and counted since for continuous data they occur
//! with probability zero and therefore diagnose discretization.

use crate::error::{Error, Result};
use crate::fit::{fit_erf, ErfFitResult};
use crate::series::{normalize, rank, Direction, Series};

/// Per-pair angles and radii; pairs with near-zero radius are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleDecomposition {
    pub phi: Vec<f64>,
    pub r: Vec<f64>,
    pub dropped: usize,
}

/// Split form of the increment series.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTriple {
    pub signs: Vec<i8>,
    pub abs_dphi: Vec<f64>,
    pub dr: Vec<f64>,
    pub zero_fraction: f64,
}

/// Bits extracted from the sign channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BitStream {
    pub bits: Vec<u8>,
    pub source_zeros_dropped: usize,
}

const RADIUS_EPS_SQ: f64 = 1e-24;
const CENTER_TOL: f64 = 1e-9;

/// Decompose a centered pair into angles and radii.
pub fn decompose(x: &Series, y: &Series) -> Result<AngleDecomposition> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    check_centered(x)?;
    check_centered(y)?;
    let mut phi = Vec::with_capacity(x.len());
    let mut r = Vec::with_capacity(x.len());
    let mut dropped = 0usize;
    for (&a, &b) in x.values().iter().zip(y.values()) {
        let r_sq = a * a + b * b;
        if r_sq < RADIUS_EPS_SQ {
            dropped += 1;
            continue;
        }
        let ratio = 2.0 * a * b / r_sq;
        debug_assert!(ratio.abs() <= 1.0 + 1e-9, "ratio {ratio} out of range");
        phi.push(libm::asin(ratio.clamp(-1.0, 1.0)) / 2.0);
        r.push(r_sq.sqrt());
    }
    Ok(AngleDecomposition { phi, r, dropped })
}

fn check_centered(s: &Series) -> Result<()> {
    let n = s.len() as f64;
    let mean = s.values().iter().sum::<f64>() / n;
    let var = s
        .values()
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    if mean.abs() > CENTER_TOL * std.max(f64::MIN_POSITIVE) {
        return Err(Error::NotCentered { mean, std });
    }
    Ok(())
}

/// Forward difference, length N-1.
pub fn diff(s: &[f64]) -> Result<Vec<f64>> {
    if s.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: s.len(),
        });
    }
    Ok(s.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Split the decomposition into {sign(phi'), |phi'|, r'}.
pub fn split(d: &AngleDecomposition) -> Result<SplitTriple> {
    let dphi = diff(&d.phi)?;
    let dr = diff(&d.r)?;
    let mut signs = Vec::with_capacity(dphi.len());
    let mut abs_dphi = Vec::with_capacity(dphi.len());
    let mut zeros = 0usize;
    for &v in &dphi {
        let s: i8 = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            zeros += 1;
            0
        };
        signs.push(s);
        abs_dphi.push(v.abs());
    }
    let zero_fraction = zeros as f64 / signs.len() as f64;
    Ok(SplitTriple {
        signs,
        abs_dphi,
        dr,
        zero_fraction,
    })
}

/// Map the sign channel to bits: -1 -> 0, +1 -> 1, exact zeros dropped and
/// counted.
///
/// Consecutive increments share a sample, so these bits are serially
/// dependent by construction: for an i.i.d. angle sequence the sign flips
/// with probability 2/3 (three i.i.d. values are monotone in 2 of their 6
/// orderings). Use [`extract_independent_bits`] where downstream statistics
/// assume independence.
pub fn extract_bits(t: &SplitTriple) -> BitStream {
    sign_bits(t.signs.iter().copied())
}

/// Bits from every second increment only. Each retained sign compares a
/// disjoint pair of angles, so the bits are independent and unbiased for an
/// i.i.d. angle stream; roughly N/2 bits come out of N angles.
pub fn extract_independent_bits(t: &SplitTriple) -> BitStream {
    sign_bits(t.signs.iter().step_by(2).copied())
}

fn sign_bits(signs: impl Iterator<Item = i8>) -> BitStream {
    let mut bits = Vec::new();
    let mut dropped = 0usize;
    for s in signs {
        match s {
            1 => bits.push(1),
            -1 => bits.push(0),
            _ => dropped += 1,
        }
    }
    BitStream {
        bits,
        source_zeros_dropped: dropped,
    }
}

/// Sup-norm distance between the normalized ascending ranking of `phi` and
/// the uniform quantile grid -- a Kolmogorov-style distance in ranked space.
/// Equally spaced angles give exactly 0; a constant sequence is maximally
/// non-uniform and returns 1.
pub fn angle_uniformity(phi: &[f64]) -> Result<f64> {
    if phi.len() < 64 {
        return Err(Error::TooShort {
            needed: 64,
            got: phi.len(),
        });
    }
    let s = Series::new(phi.to_vec())?;
    let normalized = match normalize(&s) {
        Ok(n) => n,
        Err(Error::DegenerateSeries { .. }) => return Ok(1.0),
        Err(e) => return Err(e),
    };
    let ranked = rank(&normalized, Direction::Ascending);
    let n = ranked.values().len();
    let mut sup: f64 = 0.0;
    for (i, &v) in ranked.values().iter().enumerate() {
        let grid = i as f64 / (n - 1) as f64;
        sup = sup.max((v - grid).abs());
    }
    Ok(sup)
}

/// Erf fits of the ranked signed increments: (phi' fit, r' fit). Both are
/// normalized to [0, 1] and ranked ascending before fitting.
pub fn inhomogeneity_fits(t: &SplitTriple) -> Result<(ErfFitResult, ErfFitResult)> {
    if t.signs.len() < 64 {
        return Err(Error::TooShort {
            needed: 64,
            got: t.signs.len(),
        });
    }
    let signed_dphi: Vec<f64> = t
        .signs
        .iter()
        .zip(&t.abs_dphi)
        .map(|(&s, &a)| f64::from(s) * a)
        .collect();
    let fit_of = |vals: &[f64]| -> Result<ErfFitResult> {
        let ranked = rank(
            &normalize(&Series::new(vals.to_vec())?)?,
            Direction::Ascending,
        );
        fit_erf(&crate::series::cdf_points(&ranked)?)
    };
    Ok((fit_of(&signed_dphi)?, fit_of(&t.dr)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::series::center;
    use crate::synth::gaussian;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn series(v: &[f64]) -> Series {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn decompose_unit_pairs() {
        // Pairs (1,1), (-1,-1): phi = pi/4, r = sqrt(2).
        let x = series(&[1.0, -1.0]);
        let d = decompose(&x, &x).unwrap();
        assert!((d.phi[0] - FRAC_PI_4).abs() < 1e-15);
        assert!((d.phi[1] - FRAC_PI_4).abs() < 1e-15);
        assert!((d.r[0] - SQRT_2).abs() < 1e-15);

        // Zero product: phi = 0, r = 1.
        let y = series(&[0.0, 0.0]);
        let d = decompose(&x, &y).unwrap();
        assert_eq!(d.phi, vec![0.0, 0.0]);
        assert_eq!(d.r, vec![1.0, 1.0]);

        // Anti-diagonal: phi = -pi/4.
        let y = series(&[-1.0, 1.0]);
        let d = decompose(&x, &y).unwrap();
        assert!((d.phi[0] + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn decompose_requires_centered_input() {
        let x = series(&[1.0, 1.1, 0.9, 1.0]);
        let y = series(&[1.0, -1.0, 1.0, -1.0]);
        assert!(matches!(
            decompose(&x, &y),
            Err(Error::NotCentered { .. })
        ));
        let c = center(&x).unwrap();
        assert!(decompose(&c, &y).is_ok());
    }

    #[test]
    fn decompose_drops_zero_radius_pairs() {
        let x = series(&[0.0, 1.0, -1.0, 0.0]);
        let y = series(&[0.0, -1.0, 1.0, 0.0]);
        let d = decompose(&x, &y).unwrap();
        assert_eq!(d.dropped, 2);
        assert_eq!(d.phi.len(), 2);
    }

    #[test]
    fn diff_examples() {
        assert_eq!(diff(&[1.0, 3.0, 2.0]).unwrap(), vec![2.0, -1.0]);
        assert_eq!(diff(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(diff(&[1.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn diff_then_cumsum_reconstructs() {
        let mut rng = CounterRng::new(19);
        let s: Vec<f64> = (0..100).map(|_| rng.next_normal()).collect();
        let d = diff(&s).unwrap();
        let mut acc = s[0];
        for (k, &dv) in d.iter().enumerate() {
            acc += dv;
            assert!((acc - s[k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn split_signs_and_zero_fraction() {
        let d = AngleDecomposition {
            phi: vec![0.0, 0.1, 0.05],
            r: vec![1.0, 1.0, 1.0],
            dropped: 0,
        };
        let t = split(&d).unwrap();
        assert_eq!(t.signs, vec![1, -1]);
        assert_eq!(t.abs_dphi, vec![0.1, 0.05]);
        assert_eq!(t.zero_fraction, 0.0);

        let d = AngleDecomposition {
            phi: vec![0.2, 0.2, 0.3],
            r: vec![1.0, 1.0, 1.0],
            dropped: 0,
        };
        let t = split(&d).unwrap();
        assert_eq!(t.signs, vec![0, 1]);
        assert_eq!(t.zero_fraction, 0.5);
    }

    #[test]
    fn extract_bits_maps_and_drops() {
        let t = SplitTriple {
            signs: vec![-1, 1, -1],
            abs_dphi: vec![0.0; 3],
            dr: vec![0.0; 3],
            zero_fraction: 0.0,
        };
        assert_eq!(extract_bits(&t).bits, vec![0, 1, 0]);

        let t = SplitTriple {
            signs: vec![1, 0, -1],
            abs_dphi: vec![0.0; 3],
            dr: vec![0.0; 3],
            zero_fraction: 1.0 / 3.0,
        };
        let b = extract_bits(&t);
        assert_eq!(b.bits, vec![1, 0]);
        assert_eq!(b.source_zeros_dropped, 1);
    }

    #[test]
    fn uniformity_of_exact_grid_is_zero() {
        let phi: Vec<f64> = (0..128).map(|i| i as f64 / 127.0).collect();
        assert_eq!(angle_uniformity(&phi).unwrap(), 0.0);
    }

    #[test]
    fn uniformity_of_constant_is_degenerate() {
        let phi = vec![0.25; 128];
        assert!(angle_uniformity(&phi).unwrap() >= 0.5);
        assert!(matches!(
            angle_uniformity(&[0.1; 10]),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn gaussian_pair_angles_are_uniform() {
        let n = 100_000;
        let x = center(&gaussian(n, 101).unwrap()).unwrap();
        let y = center(&gaussian(n, 202).unwrap()).unwrap();
        let d = decompose(&x, &y).unwrap();
        assert_eq!(d.dropped, 0);
        let dev = angle_uniformity(&d.phi).unwrap();
        // Kolmogorov scale is ~1.63/sqrt(N) at the 1% level.
        assert!(dev < 2.0 * 1.63 / (n as f64).sqrt(), "deviation {dev}");
    }

    #[test]
    fn gaussian_pair_bits_are_balanced() {
        let n = 100_000;
        let x = center(&gaussian(n, 303).unwrap()).unwrap();
        let y = center(&gaussian(n, 404).unwrap()).unwrap();
        let t = split(&decompose(&x, &y).unwrap()).unwrap();
        assert_eq!(t.zero_fraction, 0.0);
        let bits = extract_bits(&t);
        assert_eq!(bits.bits.len(), t.signs.len());
        let ones = bits.bits.iter().map(|&b| b as f64).sum::<f64>() / bits.bits.len() as f64;
        // 0.5 +- 0.002 is the budget at N = 1e6; scale the band to 1e5 draws.
        assert!((ones - 0.5).abs() < 0.0064, "ones fraction {ones}");
    }

    #[test]
    fn overlapping_signs_alternate_with_probability_two_thirds() {
        let n = 100_000;
        let x = center(&gaussian(n, 505).unwrap()).unwrap();
        let y = center(&gaussian(n, 606).unwrap()).unwrap();
        let t = split(&decompose(&x, &y).unwrap()).unwrap();

        let full = extract_bits(&t);
        let flips = full
            .bits
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count() as f64
            / (full.bits.len() - 1) as f64;
        assert!(
            (flips - 2.0 / 3.0).abs() < 0.01,
            "overlapping increment signs flip with p = {flips}"
        );
        assert!(!crate::nist::runs(&full.bits).unwrap().passed);

        // Disjoint increments carry independent bits that do pass.
        let indep = extract_independent_bits(&t);
        assert_eq!(indep.bits.len(), t.signs.len().div_ceil(2));
        let indep_flips = indep
            .bits
            .windows(2)
            .filter(|w| w[0] != w[1])
            .count() as f64
            / (indep.bits.len() - 1) as f64;
        assert!((indep_flips - 0.5).abs() < 0.01, "flip rate {indep_flips}");
        assert!(crate::nist::runs(&indep.bits).unwrap().passed);
    }

    #[test]
    fn inhomogeneity_fits_are_erf_shaped_for_gaussian_pairs() {
        let n = 100_000;
        let x = center(&gaussian(n, descriptor_seed(1)).unwrap()).unwrap();
        let y = center(&gaussian(n, descriptor_seed(2)).unwrap()).unwrap();
        let d = decompose(&x, &y).unwrap();
        let t = split(&d).unwrap();
        let (phi_fit, r_fit) = inhomogeneity_fits(&t).unwrap();
        assert!(phi_fit.converged && r_fit.converged);
        assert!(phi_fit.r2 >= 0.999, "phi' r2 {}", phi_fit.r2);
        assert!(r_fit.r2 >= 0.999, "r' r2 {}", r_fit.r2);

        // Radius ranking is erf-shaped under the free-amplitude normality
        // model (the radius distribution is skewed, so the constrained
        // (1+erf)/2 form cannot reach the same accuracy).
        let ranked = rank(
            &normalize(&Series::new(d.r.clone()).unwrap()).unwrap(),
            Direction::Ascending,
        );
        let pts = crate::series::cdf_points(&ranked).unwrap();
        let fit = crate::fit::fit_erf_extended(&pts, &[1.0]).unwrap();
        assert!(fit.r2 >= 0.999, "radius r2 {}", fit.r2);
    }

    fn descriptor_seed(k: u64) -> u64 {
        CounterRng::child_seed(777, k)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn phi_in_range_and_rotation_invariant(
            pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 4..64),
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let x = center(&series(&xs)).unwrap();
            let y = center(&series(&ys)).unwrap();
            let d = decompose(&x, &y).unwrap();
            for (&phi, &r) in d.phi.iter().zip(&d.r) {
                prop_assert!((-FRAC_PI_4..=FRAC_PI_4).contains(&phi));
                prop_assert!(r >= 0.0);
            }
            prop_assume!(d.dropped == 0);
            // Negating both coordinates leaves the decomposition unchanged.
            let neg_x = series(&x.values().iter().map(|v| -v).collect::<Vec<_>>());
            let neg_y = series(&y.values().iter().map(|v| -v).collect::<Vec<_>>());
            let dn = decompose(&neg_x, &neg_y).unwrap();
            for (a, b) in d.phi.iter().zip(&dn.phi) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in d.r.iter().zip(&dn.r) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            // Identity with the double-angle form through atan2.
            for ((&a, &b), &phi) in x.values().iter().zip(y.values()).zip(&d.phi) {
                if a * a + b * b >= 1e-24 {
                    let expect = libm::asin((2.0 * libm::atan2(b, a)).sin()) / 2.0;
                    prop_assert!((phi - expect).abs() < 1e-12);
                }
            }
        }
    }
}
