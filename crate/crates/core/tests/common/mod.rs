//! Brute-force reference implementations shared by the integration suites.
//! Nothing here calls the library's Hamiltonian builder, propagator, partial
//! trace or beam splitter.

#![allow(dead_code)]

use std::collections::HashMap;

use num_complex::Complex64;
use quench_core::SectorBasis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<Complex64>>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Every occupation pattern of `n` bosons on `l` modes, by recursion.
pub fn enumerate(l: usize, n: usize) -> Vec<Vec<u8>> {
    if l == 1 {
        return vec![vec![n as u8]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in enumerate(l - 1, n - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

/// Dense Bose-Hubbard matrix in the order given by `states`.
pub fn dense_hamiltonian(states: &[Vec<u8>], j: f64, u: f64) -> Vec<Vec<f64>> {
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let d = states.len();
    let mut h = vec![vec![0.0; d]; d];
    for (col, s) in states.iter().enumerate() {
        h[col][col] += 0.5 * u * s.iter().map(|&n| (n as f64) * (n as f64 - 1.0)).sum::<f64>();
        for i in 0..s.len().saturating_sub(1) {
            for (from, to) in [(i + 1, i), (i, i + 1)] {
                if s[from] == 0 {
                    continue;
                }
                let mut t = s.clone();
                let amp = (t[from] as f64).sqrt() * (t[to] as f64 + 1.0).sqrt();
                t[from] -= 1;
                t[to] += 1;
                h[index[t.as_slice()]][col] -= j * amp;
            }
        }
    }
    h
}

/// The library basis order as a list of occupation vectors.
pub fn library_states(basis: &SectorBasis) -> Vec<Vec<u8>> {
    basis.iter().map(<[u8]>::to_vec).collect()
}

pub fn to_complex(m: &[Vec<f64>]) -> Dense {
    m.iter().map(|r| r.iter().map(|&x| c(x)).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![Complex64::default(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == Complex64::default() {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Dense, x: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// `exp(-i H t)` by Taylor series with scaling and squaring.
pub fn expm_minus_i(h: &[Vec<f64>], t: f64) -> Dense {
    let n = h.len();
    let norm = h
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.5 {
        squarings += 1;
    }
    let scale = t / 2f64.powi(squarings);
    let a: Dense = h
        .iter()
        .map(|r| r.iter().map(|&x| Complex64::new(0.0, -x * scale)).collect())
        .collect();
    let mut result: Dense = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { c(1.0) } else { Complex64::default() })
                .collect()
        })
        .collect();
    let mut term = result.clone();
    for k in 1..=30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Number of eigenvalues below `sigma` from the inertia of `H - σI`
/// (LDLᵀ without pivoting, counting negative pivots).
pub fn count_below(h: &[Vec<f64>], sigma: f64) -> usize {
    let n = h.len();
    let mut a: Vec<Vec<f64>> = h.to_vec();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= sigma;
    }
    let mut negative = 0;
    for k in 0..n {
        let p = a[k][k];
        if p < 0.0 {
            negative += 1;
        }
        for i in k + 1..n {
            let f = a[i][k] / p;
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = a.split_at_mut(i);
            for (x, y) in bottom[0][k + 1..n].iter_mut().zip(&top[k][k + 1..n]) {
                *x -= f * y;
            }
        }
    }
    negative
}

/// Reduced density matrix by embedding `ψ` in the full `(N+1)^L` tensor
/// space and contracting the complement. Keys are `(config_A, config_A')`.
pub fn dense_rdm(states: &[Vec<u8>], psi: &[Complex64], sites: &[usize]) -> HashMap<(Vec<u8>, Vec<u8>), Complex64> {
    let l = states[0].len();
    let d = states[0].iter().map(|&x| x as usize).sum::<usize>() + 1;
    let comp: Vec<usize> = (0..l).filter(|s| !sites.contains(s)).collect();
    let idx = |occ: &[u8], set: &[usize]| set.iter().fold(0usize, |acc, &s| acc * d + occ[s] as usize);
    let da = d.pow(sites.len() as u32);
    let db = d.pow(comp.len() as u32);
    let mut tensor = vec![Complex64::default(); da * db];
    for (s, &a) in states.iter().zip(psi) {
        tensor[idx(s, sites) * db + idx(s, &comp)] = a;
    }
    let decode = |mut k: usize, len: usize| {
        let mut v = vec![0u8; len];
        for slot in v.iter_mut().rev() {
            *slot = (k % d) as u8;
            k /= d;
        }
        v
    };
    let mut out = HashMap::new();
    for i in 0..da {
        for j in 0..da {
            let s: Complex64 = (0..db).map(|b| tensor[i * db + b] * tensor[j * db + b].conj()).sum();
            if s.norm() > 0.0 {
                out.insert((decode(i, sites.len()), decode(j, sites.len())), s);
            }
        }
    }
    out
}

/// Sparse Fock-space vector over an arbitrary number of modes.
pub type FockVec = HashMap<Vec<u8>, Complex64>;

fn create(v: &FockVec, mode: usize, coeff: Complex64) -> FockVec {
    let mut out = FockVec::new();
    for (k, &a) in v {
        let mut k2 = k.clone();
        let amp = (k2[mode] as f64 + 1.0).sqrt();
        k2[mode] += 1;
        *out.entry(k2).or_default() += a * coeff * amp;
    }
    out
}

fn add(a: &mut FockVec, b: FockVec) {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

/// The 50:50 beam splitter on columns `(x, x + L)` applied to one Fock
/// configuration: each creation operator is replaced by its transformed
/// linear combination and applied to the vacuum one at a time.
pub fn beamsplit_configuration(occ: &[u8]) -> FockVec {
    let l = occ.len() / 2;
    let h = 0.5f64.sqrt();
    let mut v = FockVec::new();
    v.insert(vec![0; occ.len()], c(1.0));
    let mut norm = 1.0;
    for x in 0..l {
        for (mode, count) in [(x, occ[x]), (x + l, occ[x + l])] {
            norm *= factorial(count);
            let sign = if mode == x { 1.0 } else { -1.0 };
            for _ in 0..count {
                let mut next = create(&v, x, c(h));
                add(&mut next, create(&v, x + l, c(sign * h)));
                v = next;
            }
        }
    }
    let scale = 1.0 / norm.sqrt();
    v.values_mut().for_each(|a| *a *= scale);
    v
}

/// `|ψ⟩⊗|ψ⟩` followed by the beam splitter, as a sparse map.
pub fn two_copy_oracle(states: &[Vec<u8>], psi: &[Complex64]) -> FockVec {
    let mut out = FockVec::new();
    for (s1, &a1) in states.iter().zip(psi) {
        for (s2, &a2) in states.iter().zip(psi) {
            let amp = a1 * a2;
            if amp == Complex64::default() {
                continue;
            }
            let occ: Vec<u8> = s1.iter().chain(s2).copied().collect();
            for (k, v) in beamsplit_configuration(&occ) {
                *out.entry(k).or_default() += amp * v;
            }
        }
    }
    out
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
