#![allow(dead_code)] // each test target uses a different subset

//! Shared test oracles, kept independent of the library's permanent-based
//! evolution path.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Brute-force multi-photon evolution by operator expansion: rewrite each
/// input creation operator as a sum over output operators and expand the
/// product photon by photon, tracking `a†|n⟩ = √(n+1)|n+1⟩` factors. Returns
/// the map from output occupations to amplitude.
pub fn expand_evolution(
    input_occupations: &[u32],
    unitary: ArrayView2<'_, Complex64>,
) -> BTreeMap<Vec<u32>, Complex64> {
    let modes = input_occupations.len();
    assert_eq!(unitary.nrows(), modes);
    let vacuum = vec![0u32; modes];
    let mut terms: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    terms.insert(vacuum, Complex64::new(1.0, 0.0));

    for (input_mode, &photons) in input_occupations.iter().enumerate() {
        for _ in 0..photons {
            let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            for (occ, amp) in &terms {
                for output_mode in 0..modes {
                    let coupling = unitary[[output_mode, input_mode]];
                    if coupling == Complex64::ZERO {
                        continue;
                    }
                    let mut raised = occ.clone();
                    raised[output_mode] += 1;
                    let ladder = (raised[output_mode] as f64).sqrt();
                    *next.entry(raised).or_insert(Complex64::ZERO) += amp * coupling * ladder;
                }
            }
            terms = next;
        }
    }

    // Normalize the input: |S⟩ = ∏ (a†)^{S_i} / √(S_i!) |vac⟩.
    let norm: f64 = input_occupations
        .iter()
        .map(|&n| factorial(n))
        .product::<f64>()
        .sqrt();
    terms
        .into_iter()
        .map(|(occ, amp)| (occ, amp / norm))
        .collect()
}

pub fn factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Haar-ish random unitary via modified Gram-Schmidt on a complex Gaussian
/// matrix (Box-Muller from uniform draws), orthogonalized twice.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> Array2<Complex64> {
    let mut gaussian = || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut matrix = Array2::from_shape_fn((dim, dim), |_| Complex64::new(gaussian(), gaussian()));
    for _ in 0..2 {
        for col in 0..dim {
            for prev in 0..col {
                let mut proj = Complex64::ZERO;
                for row in 0..dim {
                    proj += matrix[[row, prev]].conj() * matrix[[row, col]];
                }
                for row in 0..dim {
                    let correction = proj * matrix[[row, prev]];
                    matrix[[row, col]] -= correction;
                }
            }
            let norm: f64 = (0..dim)
                .map(|row| matrix[[row, col]].norm_sqr())
                .sum::<f64>()
                .sqrt();
            for row in 0..dim {
                matrix[[row, col]] /= norm;
            }
        }
    }
    matrix
}

/// All occupation lists of `modes` modes with `photons` photons total, in
/// plain lexicographic-descending order (independent re-implementation).
pub fn occupation_lists(modes: usize, photons: u32) -> Vec<Vec<u32>> {
    fn rec(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, modes: usize, left: u32) {
        if prefix.len() == modes - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for n in (0..=left).rev() {
            prefix.push(n);
            rec(out, prefix, modes, left - n);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut out, &mut Vec::new(), modes, photons);
    out
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
