use std::f64::consts::FRAC_1_SQRT_2;

use super::circuit::{GateKind, Pauli};
use super::C64;
use crate::error::{Error, Result};
use crate::par;

pub const MAX_QUBITS: usize = 16;

// Below this many amplitudes the per-gate work is too small to split.
const PAR_MIN_AMPS: usize = 1 << 14;
const SUM_CHUNK: usize = 1 << 12;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        let mut s = Self::new(n_qubits)?;
        if amps.len() != s.amps.len() {
            return Err(Error::Dimension {
                context: "statevector amplitudes",
                expected: s.amps.len(),
                got: amps.len(),
            });
        }
        s.amps = amps;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        index_sum(self.amps.len(), |i| C64::new(self.amps[i].norm_sqr(), 0.0)).re
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Statevector) -> C64 {
        index_sum(self.amps.len(), |i| self.amps[i].conj() * other.amps[i])
    }

    /// Apply one gate. `qubits` holds the target for single-qubit kinds and
    /// `[control, target]` for CNOT/CZ; `angle` must be given exactly for
    /// rotations.
    pub fn apply(&mut self, kind: GateKind, qubits: &[usize], angle: Option<f64>) -> Result<()> {
        if qubits.len() != kind.arity() {
            return Err(Error::invalid(format!(
                "{kind:?} acts on {} qubit(s), got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::invalid(format!(
                "qubit {q} out of range for a {}-qubit register",
                self.n_qubits
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::invalid("control and target must differ"));
        }
        match (kind.is_rotation(), angle) {
            (true, None) => return Err(Error::invalid(format!("{kind:?} needs an angle"))),
            (false, Some(_)) => return Err(Error::invalid(format!("{kind:?} takes no angle"))),
            _ => {}
        }
        self.apply_unchecked(kind, qubits, angle.unwrap_or(0.0));
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, kind: GateKind, qubits: &[usize], angle: f64) {
        let t = *qubits.last().unwrap();
        match kind {
            GateKind::H => for_each_pair(&mut self.amps, t, |a, b| {
                let (x, y) = (*a, *b);
                *a = (x + y) * FRAC_1_SQRT_2;
                *b = (x - y) * FRAC_1_SQRT_2;
            }),
            GateKind::X => for_each_pair(&mut self.amps, t, std::mem::swap),
            GateKind::Y => for_each_pair(&mut self.amps, t, |a, b| {
                let (x, y) = (*a, *b);
                *a = -I * y;
                *b = I * x;
            }),
            GateKind::Z => for_each_pair(&mut self.amps, t, |_, b| *b = -*b),
            GateKind::Rx => {
                let (s, c) = (angle / 2.0).sin_cos();
                for_each_pair(&mut self.amps, t, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = x * c + C64::new(y.im * s, -y.re * s);
                    *b = y * c + C64::new(x.im * s, -x.re * s);
                })
            }
            GateKind::Ry => {
                let (s, c) = (angle / 2.0).sin_cos();
                for_each_pair(&mut self.amps, t, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = x * c - y * s;
                    *b = x * s + y * c;
                })
            }
            GateKind::Rz => {
                let (s, c) = (angle / 2.0).sin_cos();
                let lo = C64::new(c, -s);
                let hi = C64::new(c, s);
                for_each_pair(&mut self.amps, t, |a, b| {
                    *a *= lo;
                    *b *= hi;
                })
            }
            GateKind::Cnot => for_each_controlled_pair(&mut self.amps, qubits[0], t, std::mem::swap),
            GateKind::Cz => for_each_controlled_pair(&mut self.amps, qubits[0], t, |_, b| *b = -*b),
        }
    }

    /// Apply the inverse of a gate.
    pub(crate) fn apply_inverse_unchecked(&mut self, kind: GateKind, qubits: &[usize], angle: f64) {
        // every fixed kind here is Hermitian, rotations invert by negation
        self.apply_unchecked(kind, qubits, -angle);
    }

    /// `<Z_q>` for every qubit.
    pub fn expectations_z(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let partials = par::map_range(self.amps.len().div_ceil(SUM_CHUNK), |c| {
            let start = c * SUM_CHUNK;
            let end = (start + SUM_CHUNK).min(self.amps.len());
            let mut total = 0.0;
            let mut ones = vec![0.0; n];
            for i in start..end {
                let p = self.amps[i].norm_sqr();
                total += p;
                let mut bits = i;
                let mut q = 0;
                while bits != 0 {
                    if bits & 1 == 1 {
                        ones[q] += p;
                    }
                    bits >>= 1;
                    q += 1;
                }
            }
            (total, ones)
        });
        let mut total = 0.0;
        let mut ones = vec![0.0; n];
        for (t, o) in partials {
            total += t;
            for (acc, v) in ones.iter_mut().zip(o) {
                *acc += v;
            }
        }
        ones.into_iter().map(|o| total - 2.0 * o).collect()
    }

    /// Multiply each amplitude by `sum_q w_q * (+1 | -1)` (the diagonal
    /// observable `sum_q w_q Z_q`).
    pub(crate) fn apply_weighted_z(&mut self, weights: &[f64]) {
        let total: f64 = weights.iter().sum();
        for (i, a) in self.amps.iter_mut().enumerate() {
            let mut diag = total;
            for (q, w) in weights.iter().enumerate() {
                if i >> q & 1 == 1 {
                    diag -= 2.0 * w;
                }
            }
            *a *= diag;
        }
    }

    /// `<self| P_t |other>` for a single-qubit Pauli on `t`.
    pub(crate) fn pauli_matrix_element(&self, pauli: Pauli, t: usize, other: &Statevector) -> C64 {
        let (l, r) = (&self.amps[..], &other.amps[..]);
        match pauli {
            Pauli::X => pair_sum(l, r, t, |l0, l1, r0, r1| l0.conj() * r1 + l1.conj() * r0),
            Pauli::Y => {
                let v = pair_sum(l, r, t, |l0, l1, r0, r1| l1.conj() * r0 - l0.conj() * r1);
                C64::new(-v.im, v.re)
            }
            Pauli::Z => pair_sum(l, r, t, |l0, l1, r0, r1| l0.conj() * r0 - l1.conj() * r1),
        }
    }
}

/// Deterministic sum of `term(l[i], l[j], r[i], r[j])` over the pairs
/// `(i, j = i | 2^t)` with bit `t` of `i` clear.
fn pair_sum<F>(l: &[C64], r: &[C64], t: usize, term: F) -> C64
where
    F: Fn(C64, C64, C64, C64) -> C64 + Sync + Send,
{
    let m = 1usize << t;
    if l.len() / 2 <= SUM_CHUNK {
        // same order as the indexed sum below: runs of lo indices ascending
        let mut acc = C64::new(0.0, 0.0);
        for ((l_lo, l_hi), (r_lo, r_hi)) in l.chunks_exact(2 * m).map(|b| b.split_at(m)).zip(r.chunks_exact(2 * m).map(|b| b.split_at(m))) {
            for k in 0..m {
                acc += term(l_lo[k], l_hi[k], r_lo[k], r_hi[k]);
            }
        }
        return acc;
    }
    index_sum(l.len() / 2, |p| {
        let i = insert_zero_bit(p, t);
        term(l[i], l[i | m], r[i], r[i | m])
    })
}

/// Spread `p` around a zero at bit `t`.
#[inline(always)]
fn insert_zero_bit(p: usize, t: usize) -> usize {
    let low = (1usize << t) - 1;
    ((p & !low) << 1) | (p & low)
}

/// Deterministic chunked sum over `0..len`.
fn index_sum<F>(len: usize, f: F) -> C64
where
    F: Fn(usize) -> C64 + Sync + Send,
{
    let chunk = |c: usize| {
        let start = c * SUM_CHUNK;
        (start..(start + SUM_CHUNK).min(len)).fold(C64::new(0.0, 0.0), |acc, i| acc + f(i))
    };
    let n_chunks = len.div_ceil(SUM_CHUNK);
    if len >= PAR_MIN_AMPS {
        par::map_range(n_chunks, chunk).into_iter().sum()
    } else {
        (0..n_chunks).map(chunk).sum()
    }
}

/// Call `g(base, lo, hi)` on runs of amplitude pairs: `lo[k]` and `hi[k]`
/// differ only in bit `target`, which is clear in `lo`, and `base` is the
/// basis index of `lo[0]`. Runs are visited in index order.
fn for_each_pair_run<G>(amps: &mut [C64], target: usize, g: G)
where
    G: Fn(usize, &mut [C64], &mut [C64]) + Sync + Send,
{
    let stride = 1usize << target;
    let block = stride << 1;
    if par::is_parallel() && amps.len() >= PAR_MIN_AMPS {
        if block <= SUM_CHUNK {
            par::for_each_chunk_mut(amps, SUM_CHUNK, |base, chunk| {
                for (c, b) in chunk.chunks_exact_mut(block).enumerate() {
                    let (lo, hi) = b.split_at_mut(stride);
                    g(base + c * block, lo, hi);
                }
            });
        } else {
            for (c, b) in amps.chunks_exact_mut(block).enumerate() {
                let (lo, hi) = b.split_at_mut(stride);
                par::for_each_zip_chunk_mut(lo, hi, SUM_CHUNK, |k, l, h| g(c * block + k, l, h));
            }
        }
        return;
    }
    for (c, b) in amps.chunks_exact_mut(block).enumerate() {
        let (lo, hi) = b.split_at_mut(stride);
        g(c * block, lo, hi);
    }
}

/// Apply `f` to every amplitude pair that differs only in bit `target`.
fn for_each_pair<F>(amps: &mut [C64], target: usize, f: F)
where
    F: Fn(&mut C64, &mut C64) + Sync + Send,
{
    if target == 0 && amps.len() < PAR_MIN_AMPS {
        for pair in amps.chunks_exact_mut(2) {
            if let [a, b] = pair {
                f(a, b);
            }
        }
        return;
    }
    for_each_pair_run(amps, target, |_, lo, hi| {
        for (a, b) in lo.iter_mut().zip(hi) {
            f(a, b);
        }
    });
}

/// Like [`for_each_pair`], restricted to pairs with bit `control` set.
fn for_each_controlled_pair<F>(amps: &mut [C64], control: usize, target: usize, f: F)
where
    F: Fn(&mut C64, &mut C64) + Sync + Send,
{
    let cm = 1usize << control;
    for_each_pair_run(amps, target, |base, lo, hi| {
        // the control bit is constant on stretches that end at multiples of cm
        let mut k = 0;
        while k < lo.len() {
            let i = base + k;
            let end = (k + cm - (i & (cm - 1))).min(lo.len());
            if i & cm != 0 {
                for (a, b) in lo[k..end].iter_mut().zip(&mut hi[k..end]) {
                    f(a, b);
                }
            }
            k = end;
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_amps(s: &Statevector, expect: &[C64]) {
        for (a, b) in s.amplitudes().iter().zip(expect) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn x_flips() {
        let mut s = Statevector::new(1).unwrap();
        s.apply(GateKind::X, &[0], None).unwrap();
        assert_amps(&s, &[c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn hadamard_superposes() {
        let mut s = Statevector::new(1).unwrap();
        s.apply(GateKind::H, &[0], None).unwrap();
        assert_amps(&s, &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
    }

    #[test]
    fn ry_pi_maps_zero_to_one() {
        let mut s = Statevector::new(1).unwrap();
        s.apply(GateKind::Ry, &[0], Some(PI)).unwrap();
        assert_amps(&s, &[c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn cnot_on_10() {
        // |10> means qubit 0 set: basis index 1
        let mut s = Statevector::new(2).unwrap();
        s.apply(GateKind::X, &[0], None).unwrap();
        s.apply(GateKind::Cnot, &[0, 1], None).unwrap();
        assert_amps(&s, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn rotation_matrices_match_definitions() {
        let theta = 0.7;
        let (s, co) = (theta / 2.0f64).sin_cos();
        let start = [c(0.6, 0.1), c(-0.3, 0.734)];
        let run = |kind| {
            let mut st = Statevector::from_amplitudes(1, start.to_vec()).unwrap();
            st.apply(kind, &[0], Some(theta)).unwrap();
            st
        };
        let (a, b) = (start[0], start[1]);
        let minus_i_s = c(0.0, -s);
        assert_amps(&run(GateKind::Rx), &[a * co + minus_i_s * b, minus_i_s * a + b * co]);
        assert_amps(&run(GateKind::Ry), &[a * co - b * s, a * s + b * co]);
        assert_amps(&run(GateKind::Rz), &[a * c(co, -s), b * c(co, s)]);
    }

    #[test]
    fn y_and_z_matrices() {
        let start = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let mut y = Statevector::from_amplitudes(1, start.clone()).unwrap();
        y.apply(GateKind::Y, &[0], None).unwrap();
        assert_amps(&y, &[-I * start[1], I * start[0]]);
        let mut z = Statevector::from_amplitudes(1, start.clone()).unwrap();
        z.apply(GateKind::Z, &[0], None).unwrap();
        assert_amps(&z, &[start[0], -start[1]]);
    }

    #[test]
    fn cz_phases_11_only() {
        let amps: Vec<C64> = (0..4).map(|i| c(0.5, 0.0) * (i as f64 + 1.0) / 5f64.sqrt()).collect();
        let mut s = Statevector::from_amplitudes(2, amps.clone()).unwrap();
        s.apply(GateKind::Cz, &[1, 0], None).unwrap();
        assert_amps(&s, &[amps[0], amps[1], amps[2], -amps[3]]);
    }

    #[test]
    fn argument_validation() {
        let mut s = Statevector::new(2).unwrap();
        assert!(s.apply(GateKind::X, &[2], None).is_err());
        assert!(s.apply(GateKind::Rx, &[0], None).is_err());
        assert!(s.apply(GateKind::H, &[0], Some(1.0)).is_err());
        assert!(s.apply(GateKind::Cnot, &[1, 1], None).is_err());
        assert!(s.apply(GateKind::Cnot, &[1], None).is_err());
        assert!(Statevector::new(0).is_err());
        assert!(Statevector::new(17).is_err());
    }

    #[test]
    fn expectation_readout_bell() {
        let mut s = Statevector::new(2).unwrap();
        s.apply(GateKind::H, &[0], None).unwrap();
        s.apply(GateKind::Cnot, &[0, 1], None).unwrap();
        let e = s.expectations_z();
        assert!(e[0].abs() < 1e-12 && e[1].abs() < 1e-12);
    }

    #[test]
    fn large_register_pairs_match_small_kernel_semantics() {
        // 15 qubits crosses the parallel threshold; compare to the expected
        // effect of X on the top qubit
        let mut s = Statevector::new(15).unwrap();
        s.apply(GateKind::H, &[0], None).unwrap();
        s.apply(GateKind::X, &[14], None).unwrap();
        s.apply(GateKind::Cnot, &[14, 3], None).unwrap();
        let e = s.expectations_z();
        assert!((e[14] + 1.0).abs() < 1e-12);
        assert!((e[3] + 1.0).abs() < 1e-12);
        assert!(e[0].abs() < 1e-12);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    // dense reference: new[i] from the 2x2 matrix on bit t, gated by control
    fn reference(amps: &[C64], m: [[C64; 2]; 2], t: usize, control: Option<usize>) -> Vec<C64> {
        let tm = 1 << t;
        (0..amps.len())
            .map(|i| {
                if control.is_some_and(|c| i >> c & 1 == 0) {
                    return amps[i];
                }
                let (i0, i1) = (i & !tm, i | tm);
                let row = (i >> t) & 1;
                m[row][0] * amps[i0] + m[row][1] * amps[i1]
            })
            .collect()
    }

    #[test]
    fn kernels_match_dense_reference_on_both_size_paths() {
        use crate::rng::seeded;
        use rand::Rng;
        let (z, o) = (c(0.0, 0.0), c(1.0, 0.0));
        let a = 0.7;
        let (sn, cs) = (a / 2.0_f64).sin_cos();
        for n in [5, 15] {
            let mut rng = seeded(n as u64);
            let amps: Vec<C64> = (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let cases: Vec<(GateKind, [[C64; 2]; 2])> = vec![
                (GateKind::Ry, [[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]]),
                (GateKind::Rx, [[c(cs, 0.0), c(0.0, -sn)], [c(0.0, -sn), c(cs, 0.0)]]),
                (GateKind::Rz, [[c(cs, -sn), z], [z, c(cs, sn)]]),
                (GateKind::Cnot, [[z, o], [o, z]]),
                (GateKind::Cz, [[o, z], [z, -o]]),
            ];
            for (kind, m) in cases {
                for (t, ctl) in [(0, 1), (1, 0), (n - 1, 0), (0, n - 1), (2, 3), (3, 2)] {
                    let mut s = Statevector::from_amplitudes(n, amps.clone()).unwrap();
                    let (qubits, control) = if kind.arity() == 2 { (vec![ctl, t], Some(ctl)) } else { (vec![t], None) };
                    s.apply(kind, &qubits, kind.is_rotation().then_some(a)).unwrap();
                    let want = reference(&amps, m, t, control);
                    for (i, (g, w)) in s.amplitudes().iter().zip(&want).enumerate() {
                        assert!((g - w).norm() < 1e-12, "{kind:?} n={n} t={t} c={ctl} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn pauli_matrix_element_matches_dense_on_both_size_paths() {
        use crate::rng::seeded;
        use rand::Rng;
        for n in [4, 14] {
            let mut rng = seeded(40 + n as u64);
            let mut draw = || -> Vec<C64> { (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
            let l = Statevector::from_amplitudes(n, draw()).unwrap();
            let r = Statevector::from_amplitudes(n, draw()).unwrap();
            for (pauli, kind) in [(Pauli::X, GateKind::X), (Pauli::Y, GateKind::Y), (Pauli::Z, GateKind::Z)] {
                for t in [0, 1, n - 1] {
                    let mut pr = r.clone();
                    pr.apply(kind, &[t], None).unwrap();
                    let want = l.inner(&pr);
                    let got = l.pauli_matrix_element(pauli, t, &r);
                    assert!((got - want).norm() < 1e-9, "{pauli:?} n={n} t={t}: {got} vs {want}");
                }
            }
        }
    }
}
