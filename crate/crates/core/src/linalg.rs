//! Small dense linear algebra on 4x4 blocks, plus deterministic reductions.

use nalgebra::{Matrix4, Vector3, Vector4};

pub type Mat4 = Matrix4<f64>;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues (ascending) and the orthogonal matrix whose columns
/// are the matching eigenvectors. Only the symmetric part of `m` is used.
pub fn sym_eigen(m: &Mat4) -> (Vector4<f64>, Mat4) {
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Mat4::identity();
    let scale = a.abs().max().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..4 {
            for q in (p + 1)..4 {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..4 {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let mut values = Vector4::zeros();
    let mut vectors = Mat4::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[(src, src)];
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Principal square root of a symmetric positive definite matrix.
///
/// Returns the root together with the smallest eigenvalue of `m`; the caller
/// decides what counts as degenerate.
pub fn spd_sqrt(m: &Mat4) -> (Mat4, f64) {
    let (values, vectors) = sym_eigen(m);
    let mut d = Mat4::zeros();
    for i in 0..4 {
        d[(i, i)] = values[i].max(0.0).sqrt();
    }
    (vectors * d * vectors.transpose(), values[0])
}

/// Upper-triangular `P` with `g = P^t P`, so that `X -> P X P^{-1}` maps
/// g-adjoints to plain transposes.
pub fn orthonormal_frame(g: &Mat4) -> Option<Mat4> {
    g.cholesky().map(|c| c.l().transpose())
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &Mat4) -> f64 {
    (0..4)
        .map(|i| (0..4).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Fixed-order pairwise summation. The result depends only on the input
/// order, never on how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Left multiplication by the imaginary quaternion `q = a i + b j + c k`
/// on `R^4 = H` with basis `(1, i, j, k)`.
pub fn quaternion_left(q: &Vector3<f64>) -> Mat4 {
    let (a, b, c) = (q[0], q[1], q[2]);
    #[rustfmt::skip]
    let m = Mat4::new(
        0.0, -a,  -b,  -c,
        a,   0.0, -c,   b,
        b,   c,   0.0, -a,
        c,  -b,   a,   0.0,
    );
    m
}

/// Right multiplication by the imaginary quaternion `q`.
pub fn quaternion_right(q: &Vector3<f64>) -> Mat4 {
    let (a, b, c) = (q[0], q[1], q[2]);
    #[rustfmt::skip]
    let m = Mat4::new(
        0.0, -a,  -b,  -c,
        a,   0.0,  c,  -b,
        b,  -c,   0.0,  a,
        c,   b,  -a,   0.0,
    );
    m
}
