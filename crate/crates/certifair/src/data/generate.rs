//! Synthetic dataset generators: paired swiss rolls, atom families with
//! binary-digit sensitive bits, and the staircase representation.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng};

/// Two interleaved 3-D swiss rolls, one per sensitive group; the group-1
/// roll is translated by `shift` before everything is rescaled into the
/// unit box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwissRollConfig {
    pub n: usize,
    pub shift: [f64; 3],
    pub noise_sd: f64,
    pub seed: u64,
}

impl SwissRollConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        SwissRollConfig { n, shift: [-10.0, -10.0, 0.0], noise_sd: 0.0, seed }
    }
}

pub fn generate_swiss_roll(cfg: &SwissRollConfig) -> Result<Dataset> {
    if cfg.n == 0 {
        return Err(Error::argument("swiss roll needs n >= 1"));
    }
    if cfg.noise_sd < 0.0 || !cfg.noise_sd.is_finite() {
        return Err(Error::argument("noise_sd must be finite and non-negative"));
    }
    let mut rng = Rng::new(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.n);
    let mut sensitive = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let s = (i % 2) as u8;
        let u = rng.uniform_in(1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
        let h = rng.uniform_in(0.0, 21.0);
        let mut p = [u * u.cos(), h, u * u.sin()];
        if cfg.noise_sd > 0.0 {
            for v in &mut p {
                *v += cfg.noise_sd * rng.normal();
            }
        }
        if s == 1 {
            for (v, &sh) in p.iter_mut().zip(&cfg.shift) {
                *v += sh;
            }
        }
        rows.push(p.to_vec());
        sensitive.push(s);
    }
    // rescale each coordinate into [0, 1] over the combined sample
    for j in 0..3 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in &rows {
            lo = lo.min(r[j]);
            hi = hi.max(r[j]);
        }
        let range = hi - lo;
        for r in &mut rows {
            r[j] = if range > 0.0 { (r[j] - lo) / range } else { 0.5 };
        }
    }
    Dataset::new(
        Matrix::from_rows(&rows)?,
        sensitive,
        None,
        vec!["x0".into(), "x1".into(), "x2".into()],
    )
}

/// First `k` binary digits of an `f64` in (0, 1) by repeated doubling.
/// Doubling and subtracting 1 are exact on floats, so this yields the exact
/// expansion of the (dyadic) value stored in `b`; digits beyond the
/// mantissa are genuine zeros of that value.
pub fn binary_digits_f64(b: f64, k: usize) -> Result<Vec<u8>> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::argument(format!("b must lie in (0,1), got {b}")));
    }
    let mut x = b;
    let mut digits = Vec::with_capacity(k);
    for _ in 0..k {
        x *= 2.0;
        if x >= 1.0 {
            digits.push(1);
            x -= 1.0;
        } else {
            digits.push(0);
        }
    }
    Ok(digits)
}

/// First `k` binary digits of the exact rational `num/den` in (0, 1);
/// extended-precision path for non-dyadic biases whose expansions must stay
/// faithful beyond 52 digits (e.g. 1/3 = 0.010101...).
pub fn binary_digits_rational(num: u64, den: u64, k: usize) -> Result<Vec<u8>> {
    if den == 0 || num == 0 || num >= den {
        return Err(Error::argument("need 0 < num/den < 1"));
    }
    if den > u64::MAX / 2 {
        return Err(Error::argument("denominator too large"));
    }
    let mut p = num;
    let mut digits = Vec::with_capacity(k);
    for _ in 0..k {
        p *= 2;
        if p >= den {
            digits.push(1);
            p -= den;
        } else {
            digits.push(0);
        }
    }
    Ok(digits)
}

fn atom_family_from_digits(
    k_atoms: usize,
    digits: Vec<u8>,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::argument("atom family needs n >= 1"));
    }
    let mut rng = Rng::new(seed);
    let mut rows = Vec::with_capacity(n);
    let mut sensitive = Vec::with_capacity(n);
    for _ in 0..n {
        let k = 1 + rng.below(k_atoms);
        rows.push(vec![1.0 / k as f64]);
        sensitive.push(digits[k - 1]);
    }
    Dataset::new(Matrix::from_rows(&rows)?, sensitive, None, vec!["x".into()])
}

/// Uniform draws over the atoms `x_k = 1/k`, `k = 1..k_atoms`; the sensitive
/// bit of atom `k` is the k-th binary digit of `b`. The representation is
/// the identity, so sensitive is a deterministic function of the feature.
pub fn generate_atom_family(k_atoms: usize, b: f64, n: usize, seed: u64) -> Result<Dataset> {
    if k_atoms == 0 {
        return Err(Error::argument("need at least one atom"));
    }
    atom_family_from_digits(k_atoms, binary_digits_f64(b, k_atoms)?, n, seed)
}

/// Atom family with the bias given as an exact rational, for dense
/// non-terminating digit patterns at large `k_atoms`.
pub fn generate_atom_family_rational(
    k_atoms: usize,
    b_num: u64,
    b_den: u64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if k_atoms == 0 {
        return Err(Error::argument("need at least one atom"));
    }
    atom_family_from_digits(k_atoms, binary_digits_rational(b_num, b_den, k_atoms)?, n, seed)
}

/// Which staircase atom `x` falls into: atom `i` is the interval
/// `[1/(i+1), 1/i)`, and everything below `1/k_trunc` (the infinite tail)
/// is lumped into atom `k_trunc`.
pub fn staircase_index(x: f64, k_trunc: usize) -> usize {
    if x <= 0.0 {
        return k_trunc;
    }
    if x < 1.0 / k_trunc as f64 {
        return k_trunc;
    }
    let i = (1.0 / x).ceil() as usize - 1;
    i.clamp(1, k_trunc)
}

/// Uniform `x` on [0, 1) with the truncated staircase representation
/// `z = staircase_index(x)` as a second feature column. Each atom's
/// sensitive bit is drawn once (fair coin, seeded), so S is a deterministic
/// function of the representation.
pub fn generate_staircase(n: usize, k_trunc: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::argument("staircase needs n >= 1"));
    }
    if k_trunc == 0 {
        return Err(Error::argument("k_trunc must be at least 1"));
    }
    let mut rng = Rng::new(seed);
    let atom_bits: Vec<u8> = (0..k_trunc).map(|_| rng.coin()).collect();
    let mut rows = Vec::with_capacity(n);
    let mut sensitive = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.uniform();
        let z = staircase_index(x, k_trunc);
        rows.push(vec![x, z as f64]);
        sensitive.push(atom_bits[z - 1]);
    }
    Dataset::new(
        Matrix::from_rows(&rows)?,
        sensitive,
        None,
        vec!["x".into(), "z".into()],
    )
}
