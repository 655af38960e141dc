//! Eigen-solvers for the small dense matrices used throughout the crate.
//!
//! Hermitian problems go through cyclic complex Jacobi. Jacobi never touches
//! an off-diagonal entry that is exactly zero, so block structure in the input
//! (common for the X-shaped states of this crate) survives exactly and small
//! eigenvalues of positive matrices keep high relative accuracy.
//! General spectra use Householder reduction to Hessenberg form followed by
//! single-shift complex QR.

use super::{ComplexMatrix, C64, TAU_HERM, ZERO};
use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 100;
const MAX_QR_ITERS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues (descending) and matching orthonormal eigenvectors, stored as
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim())
            .map(|i| self.vectors[(i, k)])
            .collect()
    }
}

/// Eigen-decomposition of a Hermitian matrix.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let deviation = m.hermiticity_deviation();
    if deviation > TAU_HERM {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.dim();
    // symmetrize so the rotations see an exactly Hermitian matrix
    let mut a = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            C64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    });
    let mut v = ComplexMatrix::identity(n);
    let abs_floor = 1e-22 * a.frobenius_norm();

    let mut converged = n == 1;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                if g <= abs_floor || g <= f64::EPSILON * 1e-2 * (app.abs() * aqq.abs()).sqrt() {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                rotated = true;
                rotate(&mut a, &mut v, p, q, apq, g);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// Applies the unitary `J` that zeroes `a[p,q]`: `a ← J† a J`, `v ← v J`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, apq: C64, g: f64) {
    let n = a.dim();
    let phase = apq / g;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = diag-phase · real rotation
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Real eigenvalues of a Hermitian matrix, descending.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.values)
}

/// Singular values, descending, read off the Hermitian embedding
/// `[[0, m], [m†, 0]]` whose spectrum is `±σ_i`.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let embed = ComplexMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, false) => m[(i, j - n)],
        (false, true) => m[(j, i - n)].conj(),
        _ => ZERO,
    });
    let values = eigenvalues_hermitian(&embed)?;
    Ok(values[..n].iter().map(|&s| s.max(0.0)).collect())
}

/// Eigenvalues of an arbitrary square complex matrix, in no particular order.
pub fn eigenvalues_general(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = m.dim();
    let mut h = m.clone();
    hessenberg(&mut h);

    let mut eigs = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    loop {
        if hi == 0 {
            eigs[0] = h[(0, 0)];
            break;
        }
        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= f64::EPSILON * scale || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_QR_ITERS_PER_EIGENVALUE {
            return Err(Error::NoConvergence);
        }
        let shift = if iter.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eigs)
}

fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (l1, l2) = (mean + disc, mean - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One shifted QR sweep `H - μ = QR`, `H ← RQ + μ` on rows/cols `lo..=hi`.
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let (x, y) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        for i in lo..=(k + 2).min(hi) {
            let (x, y) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// `(c, s)` with real `c` such that `[[c, s], [-s̄, c]] · [f, g]ᵀ = [r, 0]ᵀ`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    let (fa, ga) = (f.norm(), g.norm());
    if ga == 0.0 {
        return (1.0, ZERO);
    }
    if fa == 0.0 {
        return (0.0, g.conj() / ga);
    }
    let r = fa.hypot(ga);
    (fa / r, (f / fa) * g.conj() / r)
}

/// In-place Householder reduction to upper Hessenberg form (similarity).
fn hessenberg(h: &mut ComplexMatrix) {
    let n = h.dim();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x;
        v[0] += phase * norm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // H ← (I - 2vv†) H
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, j)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * dot * 2.0;
            }
        }
        // H ← H (I - 2vv†)
        for i in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(j, vj)| h[(i, k + 1 + j)] * vj)
                .sum();
            for (j, vj) in v.iter().enumerate() {
                h[(i, k + 1 + j)] -= dot * vj.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(dim: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed ^ 0x9E37_79B9_7F4A_7C15;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexMatrix::from_fn(dim, |_, _| C64::new(next(), next()))
    }

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        let m = lcg_matrix(dim, seed);
        &m + &m.dagger()
    }

    fn sorted_by_re_im(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn maximally_mixed_spectrum() {
        let m = ComplexMatrix::identity(4).scale_real(0.25);
        assert_eq!(eigenvalues_hermitian(&m).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn hermitian_decomposition_reconstructs() {
        for (dim, seed) in [(2, 1), (4, 2), (8, 3), (16, 4), (64, 5)] {
            let m = random_hermitian(dim, seed);
            let eig = hermitian_eigen(&m).unwrap();
            let d = ComplexMatrix::from_real_diagonal(&eig.values);
            let back = &(&eig.vectors * &d) * &eig.vectors.dagger();
            assert!(back.max_abs_diff(&m) < 1e-12, "dim {dim}");
            let vv = &eig.vectors.dagger() * &eig.vectors;
            assert!(vv.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            let tr: f64 = eig.values.iter().sum();
            assert!((tr - m.trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = lcg_matrix(4, 9);
        assert!(matches!(
            eigenvalues_hermitian(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn exact_zero_blocks_survive() {
        // block diagonal with an exactly zero row/column
        let m = ComplexMatrix::from_real_rows(&[
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.3, 0.2, 0.0],
            [0.0, 0.2, 0.2, 0.0],
            [0.0, 0.0, 0.0, 0.5],
        ]);
        let ev = eigenvalues_hermitian(&m).unwrap();
        assert_eq!(ev[3], 0.0);
    }

    #[test]
    fn general_diagonal_returns_diagonal() {
        let diag = [
            C64::new(1.0, 2.0),
            C64::new(-0.5, 0.0),
            C64::new(3.0, -1.0),
            C64::new(0.0, 0.0),
        ];
        let m = ComplexMatrix::from_diagonal(&diag);
        let ev = sorted_by_re_im(eigenvalues_general(&m).unwrap());
        let expected = sorted_by_re_im(diag.to_vec());
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn general_matches_hermitian_on_hermitian_input() {
        for (dim, seed) in [(4, 11), (8, 12), (16, 13)] {
            let m = random_hermitian(dim, seed);
            let mut general: Vec<f64> = eigenvalues_general(&m)
                .unwrap()
                .iter()
                .map(|z| z.re)
                .collect();
            general.sort_by(|a, b| b.total_cmp(a));
            let herm = eigenvalues_hermitian(&m).unwrap();
            for (a, b) in general.iter().zip(&herm) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn general_companion_matrix_roots() {
        // roots 1, -2, i, -i: p(x) = (x - 1)(x + 2)(x^2 + 1) = x^4 + x^3 - x^2 + x - 2
        let coeffs = [1.0, -1.0, 1.0, -2.0];
        let m = ComplexMatrix::from_fn(4, |i, j| {
            if i == 0 {
                C64::new(-coeffs[j], 0.0)
            } else if i == j + 1 {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        let ev = eigenvalues_general(&m).unwrap();
        let expected = [
            C64::new(-2.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(1.0, 0.0),
        ];
        for b in &expected {
            let closest = ev
                .iter()
                .map(|a| (a - b).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-10, "{b} missing from {ev:?}");
        }
    }

    #[test]
    fn general_spectrum_trace_and_determinant() {
        let m = lcg_matrix(6, 77);
        let ev = eigenvalues_general(&m).unwrap();
        let sum: C64 = ev.iter().sum();
        assert!((sum - m.trace()).norm() < 1e-12);
        // trace of m^2 equals sum of squared eigenvalues
        let m2 = &m * &m;
        let sum2: C64 = ev.iter().map(|z| z * z).sum();
        assert!((sum2 - m2.trace()).norm() < 1e-12);
    }

    #[test]
    fn general_upper_triangular() {
        let mut m = lcg_matrix(5, 5);
        for i in 0..5 {
            for j in 0..i {
                m[(i, j)] = ZERO;
            }
        }
        let ev = sorted_by_re_im(eigenvalues_general(&m).unwrap());
        let expected = sorted_by_re_im(m.diagonal());
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_values_of_diagonal_unitary_product() {
        let d = ComplexMatrix::from_diagonal(&[
            C64::new(0.0, 3.0),
            C64::new(-2.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let sv = singular_values(&d).unwrap();
        assert!((sv[0] - 3.0).abs() < 1e-14);
        assert!((sv[1] - 2.0).abs() < 1e-14);
        assert!(sv[2].abs() < 1e-14);
    }

    #[test]
    fn singular_values_square_to_gram_spectrum() {
        let m = lcg_matrix(4, 31);
        let sv = singular_values(&m).unwrap();
        let gram = &m.dagger() * &m;
        let ev = eigenvalues_hermitian(&gram).unwrap();
        for (s, e) in sv.iter().zip(&ev) {
            assert!((s * s - e).abs() < 1e-12);
        }
    }
}
