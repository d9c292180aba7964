//! The Cantor shift (symbolic dynamics on `{0,2}^N`) and the fat Cantor set
//! of the non-autonomous tent map.

use std::sync::Arc;

use rand::Rng;

use super::DiscreteSystem;
use crate::error::{Error, Result};

/// Number of ternary digits a symbolic state embeds.
pub const DEFAULT_SYMBOL_DEPTH: usize = 64;

/// A window of `depth` ternary digits (each 0 or 2) on a longer symbol tape,
/// together with its embedded coordinate `Σ dᵢ 3^{-i}`.
#[derive(Clone, Debug)]
pub struct SymbolicState {
    tape: Arc<[u8]>,
    offset: usize,
    depth: usize,
    value: f64,
}

fn embed_digits(digits: &[u8]) -> f64 {
    digits
        .iter()
        .rev()
        .fold(0.0, |acc, &d| (acc + d as f64) / 3.0)
}

impl SymbolicState {
    /// State reading `tape[0..depth]`; later digits are consumed by shifts.
    pub fn new(tape: Vec<u8>, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidInput("symbol depth must be positive".into()));
        }
        if let Some(bad) = tape.iter().find(|&&d| d != 0 && d != 2) {
            return Err(Error::InvalidInput(format!(
                "symbol {bad} is not in {{0,2}}"
            )));
        }
        if tape.len() < depth {
            return Err(Error::SymbolBudget {
                needed: depth,
                available: tape.len(),
            });
        }
        let value = embed_digits(&tape[..depth]);
        Ok(SymbolicState {
            tape: tape.into(),
            offset: 0,
            depth,
            value,
        })
    }

    /// Tape of `depth + shifts` fair Bernoulli digits, enough for `shifts` steps.
    pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, depth: usize, shifts: usize) -> Result<Self> {
        let tape = (0..depth + shifts)
            .map(|_| if rng.random::<bool>() { 2 } else { 0 })
            .collect();
        SymbolicState::new(tape, depth)
    }

    /// Digits currently in view (`depth` of them).
    pub fn digits(&self) -> &[u8] {
        &self.tape[self.offset..self.offset + self.depth]
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Shifts left before the tape runs out.
    pub fn remaining(&self) -> usize {
        self.tape.len() - self.offset - self.depth
    }
}

/// Deletes the leading digit.
pub fn cantor_shift_step(s: &SymbolicState) -> Result<SymbolicState> {
    if s.remaining() == 0 {
        return Err(Error::SymbolBudget {
            needed: s.offset + s.depth + 1,
            available: s.tape.len(),
        });
    }
    let offset = s.offset + 1;
    let value = embed_digits(&s.tape[offset..offset + s.depth]);
    Ok(SymbolicState {
        tape: Arc::clone(&s.tape),
        offset,
        depth: s.depth,
        value,
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CantorShift;

impl DiscreteSystem for CantorShift {
    type State = SymbolicState;
    type Point = [f64; 1];

    fn step(&self, s: &SymbolicState) -> Result<SymbolicState> {
        cantor_shift_step(s)
    }

    fn embed(&self, s: &SymbolicState) -> [f64; 1] {
        [s.value]
    }
}

#[inline]
fn stretch(n: u32) -> f64 {
    2.0 * (1.0 + 0.5f64.powi(n as i32 + 1))
}

/// `f_C^{(n)}`: the tent map with slope `2(1 + 2^{-n-1})`.
pub fn fat_cantor_step(x: f64, n: u32) -> f64 {
    let c = stretch(n);
    if x <= 0.5 {
        c * x
    } else {
        c * (1.0 - x)
    }
}

/// Points mapped above 1 by `f_C^{(n)}`: the open interval `(1/c, 1 - 1/c)`.
pub fn escape_interval(n: u32) -> (f64, f64) {
    let inv = 1.0 / stretch(n);
    (inv, 1.0 - inv)
}

/// Inverse branch of `f_C^{(n)}`: left (`false`) or right (`true`) preimage.
pub fn fat_cantor_inverse(y: f64, n: u32, right: bool) -> f64 {
    let x = y / stretch(n);
    if right {
        1.0 - x
    } else {
        x
    }
}

/// How fat-Cantor points are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FatCantorMode {
    /// Uniform seed at level `depth`, pulled back through uniformly chosen
    /// inverse branches.
    Backward,
    /// Uniform seeds iterated forward `depth` times; survivors' images are
    /// pulled back with random branches.
    Faithful,
}

/// Samples `count` seeds approximating the invariant set `A_C`.
///
/// In [`FatCantorMode::Faithful`] the result holds one point per forward
/// survivor, so it is usually shorter than `count`.
pub fn fat_cantor_sample<R: Rng + ?Sized>(
    count: usize,
    depth: u32,
    mode: FatCantorMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if count == 0 || depth == 0 {
        return Err(Error::InvalidInput(
            "count and depth must be positive".into(),
        ));
    }
    let pull_back = |mut y: f64, rng: &mut R| {
        for n in (1..=depth).rev() {
            y = fat_cantor_inverse(y, n, rng.random::<bool>());
        }
        y
    };
    match mode {
        FatCantorMode::Backward => Ok((0..count)
            .map(|_| {
                let y = rng.random::<f64>();
                pull_back(y, rng)
            })
            .collect()),
        FatCantorMode::Faithful => {
            let images: Vec<f64> = (0..count)
                .filter_map(|_| {
                    let mut x = rng.random::<f64>();
                    for n in 1..=depth {
                        x = fat_cantor_step(x, n);
                        if x > 1.0 {
                            return None;
                        }
                    }
                    Some(x)
                })
                .collect();
            if images.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "no survivors among {count} seeds after {depth} forward steps; use a larger count"
                )));
            }
            Ok(images.into_iter().map(|y| pull_back(y, rng)).collect())
        }
    }
}

/// State of the non-autonomous map: position and the index of the next map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FatCantorState {
    pub x: f64,
    pub n: u32,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FatCantor;

impl DiscreteSystem for FatCantor {
    type State = FatCantorState;
    type Point = [f64; 1];

    fn step(&self, s: &FatCantorState) -> Result<FatCantorState> {
        let x = fat_cantor_step(s.x, s.n);
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Escaped { step: s.n as usize });
        }
        Ok(FatCantorState { x, n: s.n + 1 })
    }

    fn embed(&self, s: &FatCantorState) -> [f64; 1] {
        [s.x]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn state(prefix: &[u8], depth: usize) -> SymbolicState {
        let tape: Vec<u8> = prefix.iter().cycle().take(depth + 4).copied().collect();
        SymbolicState::new(tape, depth).unwrap()
    }

    #[test]
    fn shift_drops_leading_digit() {
        let s = state(&[2, 0], 8);
        let t = cantor_shift_step(&s).unwrap();
        assert_eq!(s.digits()[0], 2);
        assert_eq!(t.digits(), &s.tape[1..9]);
        assert_eq!(t.digits()[0], 0);
    }

    #[test]
    fn zero_sequence_is_fixed() {
        let s = state(&[0], 16);
        let t = cantor_shift_step(&s).unwrap();
        assert_eq!(t.value(), 0.0);
        assert_eq!(s.value(), 0.0);
    }

    #[test]
    fn shift_is_tripling_mod_one() {
        let mut r = rng::stream(11, 0);
        for _ in 0..200 {
            let s = SymbolicState::bernoulli(&mut r, 40, 1).unwrap();
            let t = cantor_shift_step(&s).unwrap();
            let expect = (3.0 * s.value()).fract();
            // the digit entering at position 40 contributes at most 2·3^-40
            assert!(
                (t.value() - expect).abs() < 1e-14,
                "{} vs {}",
                t.value(),
                expect
            );
        }
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let s = SymbolicState::new(vec![0, 2, 0], 3).unwrap();
        assert!(matches!(
            cantor_shift_step(&s),
            Err(Error::SymbolBudget { .. })
        ));
    }

    #[test]
    fn rejects_non_cantor_digits() {
        assert!(SymbolicState::new(vec![0, 1, 2], 3).is_err());
    }

    #[test]
    fn fat_cantor_map_values() {
        assert_eq!(fat_cantor_step(0.5, 1), 1.25);
        assert_eq!(fat_cantor_step(0.0, 7), 0.0);
        let (lo, hi) = escape_interval(1);
        assert!((lo - 0.4).abs() < 1e-15 && (hi - 0.6).abs() < 1e-15);
    }

    #[test]
    fn backward_samples_survive_forward() {
        let mut r = rng::stream(5, 0);
        let pts = fat_cantor_sample(2000, 20, FatCantorMode::Backward, &mut r).unwrap();
        for &x in &pts {
            let mut s = FatCantorState { x, n: 1 };
            for _ in 0..20 {
                s = FatCantor.step(&s).unwrap();
            }
        }
    }

    #[test]
    fn depth_one_fills_complement_of_first_gap() {
        let mut r = rng::stream(6, 0);
        let pts = fat_cantor_sample(20_000, 1, FatCantorMode::Backward, &mut r).unwrap();
        assert!(pts.iter().all(|&x| x <= 0.4 + 1e-15 || x >= 0.6 - 1e-15));
        // both halves populated up to their ends
        let left_max = pts.iter().copied().filter(|&x| x < 0.5).fold(0.0, f64::max);
        let right_min = pts.iter().copied().filter(|&x| x > 0.5).fold(1.0, f64::min);
        assert!(left_max > 0.399 && right_min < 0.601);
    }

    #[test]
    fn faithful_mode_survivors_and_empty_error() {
        let mut r = rng::stream(7, 0);
        let pts = fat_cantor_sample(1000, 20, FatCantorMode::Faithful, &mut r).unwrap();
        assert!(pts.len() > 500 && pts.len() < 1000);
        // a handful of seeds may all die; force it with depth large and count 1
        let mut died = false;
        for seed in 0..50 {
            let mut r = rng::stream(seed, 1);
            if fat_cantor_sample(1, 20, FatCantorMode::Faithful, &mut r).is_err() {
                died = true;
                break;
            }
        }
        assert!(died);
    }
}
