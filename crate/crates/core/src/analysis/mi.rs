//! Brute-force demonstration of the information-capacity inequality on
//! finite alphabets: a deterministic encoder's mutual information with the
//! source is the entropy of its output, and enlarging the codomain can only
//! raise the achievable supremum.

use crate::error::{Error, Result};

/// Suprema over the unconstrained and range-constrained encoder families,
/// with witnesses (maps stored as `f[x] = output index`).
#[derive(Debug, Clone, PartialEq)]
pub struct MiDemoResult {
    pub sup_unconstrained: f64,
    pub sup_constrained: f64,
    pub argmax_unconstrained: Vec<usize>,
    pub argmax_constrained: Vec<usize>,
}

/// Alphabet cap keeping the exhaustive enumeration trivial.
pub const MAX_ALPHABET: usize = 6;

fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

fn best_map(px: &[f64], range: usize) -> (f64, Vec<usize>) {
    let n = px.len();
    let total = (range as u64).pow(n as u32);
    let mut best = -1.0;
    let mut best_map = vec![0usize; n];
    let mut buckets = vec![0.0f64; range];
    for code in 0..total {
        buckets.iter_mut().for_each(|b| *b = 0.0);
        let mut c = code;
        let mut map = vec![0usize; n];
        for (x, m) in map.iter_mut().enumerate() {
            let v = (c % range as u64) as usize;
            c /= range as u64;
            *m = v;
            buckets[v] += px[x];
        }
        let h = entropy_bits(&buckets);
        if h > best {
            best = h;
            best_map = map;
        }
    }
    (best, best_map)
}

/// Exhaustively enumerate all deterministic maps from the finite alphabet
/// into `{0..full_range}` and `{0..constrained_range}` and return both
/// suprema of `I(x; f(x)) = H(f(x))` in bits.
pub fn mi_bruteforce(
    px: &[f64],
    full_range: usize,
    constrained_range: usize,
) -> Result<MiDemoResult> {
    if px.is_empty() || px.len() > MAX_ALPHABET {
        return Err(Error::Domain(format!(
            "alphabet size {} outside 1..={MAX_ALPHABET}",
            px.len()
        )));
    }
    if px.iter().any(|&p| !(0.0..=1.0).contains(&p) || !p.is_finite()) {
        return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
    }
    let sum: f64 = px.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
    }
    if constrained_range == 0 || constrained_range > full_range || full_range > px.len() {
        return Err(Error::Domain(format!(
            "need 0 < constrained_range <= full_range <= |X|, got ({constrained_range}, {full_range}, {})",
            px.len()
        )));
    }
    let (sup_unconstrained, argmax_unconstrained) = best_map(px, full_range);
    let (sup_constrained, argmax_constrained) = best_map(px, constrained_range);
    Ok(MiDemoResult {
        sup_unconstrained,
        sup_constrained,
        argmax_unconstrained,
        argmax_constrained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_three_symbol_demo() {
        let px = [1.0 / 3.0; 3];
        let r = mi_bruteforce(&px, 3, 2).unwrap();
        let log2_3 = 3.0f64.log2();
        let h_binary = -(1.0 / 3.0) * (1.0f64 / 3.0).log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
        assert!((r.sup_unconstrained - log2_3).abs() < 1e-6);
        assert!((r.sup_constrained - h_binary).abs() < 1e-6);
        assert!(r.sup_unconstrained >= r.sup_constrained);
    }

    #[test]
    fn equal_ranges_give_equal_suprema() {
        let px = [0.25, 0.25, 0.5];
        let r = mi_bruteforce(&px, 3, 3).unwrap();
        assert_eq!(r.sup_unconstrained, r.sup_constrained);
    }

    #[test]
    fn point_mass_has_no_information() {
        let px = [1.0, 0.0, 0.0];
        let r = mi_bruteforce(&px, 3, 2).unwrap();
        assert_eq!(r.sup_unconstrained, 0.0);
        assert_eq!(r.sup_constrained, 0.0);
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(mi_bruteforce(&[0.5, 0.6], 2, 1).is_err());
        assert!(mi_bruteforce(&[0.5, 0.5, 0.5], 3, 2).is_err());
        assert!(mi_bruteforce(&[], 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn inequality_holds_everywhere(
            raw in proptest::collection::vec(0.01f64..1.0, 2..=5),
            constrained in 1usize..4,
        ) {
            let sum: f64 = raw.iter().sum();
            let px: Vec<f64> = raw.iter().map(|p| p / sum).collect();
            let full = px.len();
            let constrained = constrained.min(full - 1).max(1);
            let r = mi_bruteforce(&px, full, constrained).unwrap();
            // Exact inequality, no tolerance.
            prop_assert!(r.sup_unconstrained >= r.sup_constrained);
            // Entropy of the source upper-bounds both.
            let h_src = super::entropy_bits(&px);
            prop_assert!(r.sup_unconstrained <= h_src + 1e-9);
        }
    }
}
