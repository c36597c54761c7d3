//! Small dense complex-matrix routines: matrix exponential and Hermitian
//! eigenvalues. Operator dimensions in this crate never exceed a few dozen,
//! so simple, well-tested algorithms are preferred over external solvers.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Max-norm (largest absolute entry).
pub fn max_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled by 2^-s so the series converges quickly, summed
/// until the term norm drops below 1e-16, then squared back s times.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols(), "expm requires a square matrix");
    let norm = max_norm(a) * dim as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(s as i32));

    let mut result = Array2::<C64>::eye(dim);
    let mut term = Array2::<C64>::eye(dim);
    let mut k = 1u32;
    loop {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result = result + &term;
        if max_norm(&term) < 1e-16 {
            break;
        }
        k += 1;
        assert!(k < 200, "Taylor series failed to converge");
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Eigenvalues of a complex Hermitian matrix via the cyclic Jacobi method.
///
/// Input is assumed Hermitian; only the Hermitian part is consulted.
/// Returned eigenvalues are sorted ascending.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = m.clone();
    let scale = max_norm(&a).max(1.0);

    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |q| *q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]].norm_sqr())
            .sum();
        if off.sqrt() < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                // Unitary 2x2 rotation that annihilates the (p,q) entry.
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = akp * c - akq * s.conj();
                    a[[k, q]] = akp * s + akq * c;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = apk * c - aqk * s;
                    a[[q, k]] = apk * s.conj() + aqk * c;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<C64>::zeros((3, 3));
        let e = expm(&z);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e[[i, j]] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn expm_rotation_generator() {
        // exp(theta * [[0,1],[-1,0]]) is a plane rotation.
        let theta = 1.234f64;
        let g = array![[c(0.0, 0.0), c(theta, 0.0)], [c(-theta, 0.0), c(0.0, 0.0)]];
        let e = expm(&g);
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-14);
        assert!((e[[0, 1]].re - theta.sin()).abs() < 1e-14);
        assert!((e[[1, 0]].re + theta.sin()).abs() < 1e-14);
        assert!((e[[1, 1]].re - theta.cos()).abs() < 1e-14);
    }

    #[test]
    fn jacobi_real_symmetric() {
        let m = array![[c(2.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(2.0, 0.0)]];
        let e = hermitian_eigenvalues(&m);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_complex_hermitian() {
        // eigenvalues of [[1, i],[-i, 1]] are 0 and 2
        let m = array![[c(1.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(1.0, 0.0)]];
        let e = hermitian_eigenvalues(&m);
        assert!((e[0] - 0.0).abs() < 1e-12);
        assert!((e[1] - 2.0).abs() < 1e-12);
    }
}
