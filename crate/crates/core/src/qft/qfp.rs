//! Reading `x` back out of copies of its Fourier state.
//!
//! Register qubit `i` of a Fourier state carries the phase `x/2^{n-i}`, whose
//! leading binary digit is bit `j = n-1-i` of `x`. Measuring it near the
//! `{1/4, 3/4}` phases reveals that bit; measuring it in the Hadamard basis
//! reveals whether bit `j` equals bit `j-1`.

use rand::Rng;
use std::f64::consts::PI;

/// Outcome of the vote for one bit position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    /// Same as the next lower bit.
    P,
    /// Differs from the next lower bit.
    N,
    /// Both votes split evenly.
    Unknown,
}

impl Symbol {
    pub const DECIDED: [Symbol; 4] = [Symbol::Zero, Symbol::One, Symbol::P, Symbol::N];

    fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            _ => None,
        }
    }

    fn relation(self) -> Option<bool> {
        match self {
            Symbol::P => Some(false),
            Symbol::N => Some(true),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::P => 'P',
            Symbol::N => 'N',
            Symbol::Unknown => '?',
        }
    }
}

/// Decodes symbols (index `j` for bit `j`) into `x`, taking bit `-1` as 0.
///
/// Every bit is computed independently: for each candidate anchor `l` below it
/// the bit is the anchor plus the parity of `N`s in between, provided every
/// symbol in between is `P` or `N`; the candidates are combined with an Or.
/// The flag is set when any symbol is undecided.
pub fn decode(z: &[Symbol]) -> (u64, bool) {
    let n = z.len();
    let mut x = 0u64;
    for k in 0..n {
        let mut bit = false;
        for l in (-1..=k as isize).rev() {
            let run = &z[(l + 1) as usize..=k];
            let anchored = l < 0 || z[l as usize].bit().is_some();
            if !anchored || run.iter().any(|s| s.relation().is_none()) {
                continue;
            }
            let anchor = if l < 0 { false } else { z[l as usize].bit().unwrap() };
            let flips = run.iter().filter(|&&s| s == Symbol::N).count() % 2 == 1;
            bit |= anchor ^ flips;
        }
        if bit {
            x |= 1 << k;
        }
    }
    (x, z.contains(&Symbol::Unknown))
}

/// Majority vote for one position. `a_ones` of `a_total` phase-basis outcomes read
/// bit 1; `h_ones` of `h_total` Hadamard outcomes read `N`. An even split abstains;
/// the basis with the clearer majority wins, and the relation symbol wins a tie.
pub fn vote(a_ones: usize, a_total: usize, h_ones: usize, h_total: usize) -> Symbol {
    let ma = (2 * a_ones).abs_diff(a_total);
    let mh = (2 * h_ones).abs_diff(h_total);
    if ma == 0 && mh == 0 {
        Symbol::Unknown
    } else if ma > mh {
        if 2 * a_ones > a_total {
            Symbol::One
        } else {
            Symbol::Zero
        }
    } else if 2 * h_ones > h_total {
        Symbol::N
    } else {
        Symbol::P
    }
}

/// Symbols from per-copy outcome records. Record `c` holds one outcome bit per
/// register qubit; the first half of the copies were measured in the phase
/// basis, the second half in the Hadamard basis.
pub fn symbols_from_records(records: &[u64], n: usize) -> Vec<Symbol> {
    let m = records.len();
    let half = m / 2;
    (0..n)
        .map(|j| {
            let i = n - 1 - j;
            let a = records[..half].iter().filter(|&&r| (r >> i) & 1 == 1).count();
            let h = records[half..].iter().filter(|&&r| (r >> i) & 1 == 1).count();
            vote(a, half, h, m - half)
        })
        .collect()
}

pub fn decode_records(records: &[u64], n: usize) -> (u64, bool) {
    decode(&symbols_from_records(records, n))
}

/// Phase (in turns) carried by register qubit `i` of the `n`-qubit Fourier state of `x`.
pub fn qubit_phase(x: u64, n: usize, i: usize) -> f64 {
    let k = n - i;
    (x % (1u64 << k)) as f64 / (1u64 << k) as f64
}

/// Probability that register qubit `i` reads bit 1 in the phase basis and `N` in the Hadamard basis.
pub fn outcome_probabilities(x: u64, n: usize, i: usize) -> (f64, f64) {
    let th = qubit_phase(x, n, i);
    let p_one = (1.0 + (2.0 * PI * (th - 0.75)).cos()) / 2.0;
    let p_n = (1.0 - (2.0 * PI * th).cos()) / 2.0;
    (p_one, p_n)
}

/// Whether a phase lies where the phase-basis measurement is the informative one.
pub fn in_phase_region(theta: f64) -> bool {
    (theta - 0.25).abs() <= 0.125 || (theta - 0.75).abs() <= 0.125
}

/// Samples outcome records for `m` copies of the Fourier state of `x` from the
/// exact single-qubit outcome probabilities.
pub fn sample_records<R: Rng>(x: u64, n: usize, m: usize, rng: &mut R) -> Vec<u64> {
    let probs: Vec<(f64, f64)> = (0..n).map(|i| outcome_probabilities(x, n, i)).collect();
    (0..m)
        .map(|c| {
            let mut r = 0u64;
            for (i, &(pa, ph)) in probs.iter().enumerate() {
                let p = if c < m / 2 { pa } else { ph };
                if rng.gen::<f64>() < p {
                    r |= 1 << i;
                }
            }
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(z: &[Symbol]) -> Option<u64> {
        let mut prev = false;
        let mut x = 0;
        for (j, s) in z.iter().enumerate() {
            let b = match s {
                Symbol::Zero => false,
                Symbol::One => true,
                Symbol::P => prev,
                Symbol::N => !prev,
                Symbol::Unknown => return None,
            };
            if b {
                x |= 1 << j;
            }
            prev = b;
        }
        Some(x)
    }

    #[test]
    fn plain_bits_decode_verbatim() {
        let z = [Symbol::One, Symbol::Zero, Symbol::One];
        assert_eq!(decode(&z), (0b101, false));
    }

    #[test]
    fn p_copies_lower_bit() {
        let z = [Symbol::One, Symbol::P];
        assert_eq!(decode(&z), (0b11, false));
    }

    #[test]
    fn matches_sequential_decoding_on_all_strings() {
        for n in 1..=5 {
            for code in 0..4usize.pow(n as u32) {
                let z: Vec<Symbol> = (0..n).map(|j| Symbol::DECIDED[(code >> (2 * j)) & 3]).collect();
                assert_eq!(Some(decode(&z).0), reference(&z));
            }
        }
    }

    #[test]
    fn even_splits_abstain() {
        assert_eq!(vote(2, 4, 2, 4), Symbol::Unknown);
        assert_eq!(vote(2, 4, 3, 4), Symbol::N);
        assert_eq!(vote(4, 4, 0, 4), Symbol::P);
        assert_eq!(vote(4, 4, 1, 4), Symbol::One);
    }

    #[test]
    fn qubit_phases_match_binary_fractions() {
        // x = 5 = 101b, n = 3: top qubit carries 0.1b, bottom 0.101b.
        assert!((qubit_phase(5, 3, 2) - 0.5).abs() < 1e-15);
        assert!((qubit_phase(5, 3, 0) - 0.625).abs() < 1e-15);
    }
}
