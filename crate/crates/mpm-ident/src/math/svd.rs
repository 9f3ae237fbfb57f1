//! 3×3 singular value decomposition and polar rotation with tangent support.
//!
//! The value part runs in plain `f64`: cyclic Jacobi sweeps on `MᵀM` give the
//! right singular vectors and squared singular values; the left factor comes
//! from `M·V` with Gram-Schmidt cleanup, and the singular values are refreshed
//! as `uᵢᵀ M vᵢ` so they do not suffer the squared condition number of `MᵀM`.
//!
//! The convention is the rotation-SVD: `det(U) = det(V) = +1` and
//! `σ₁ ≥ σ₂ ≥ σ₃`, with `σ₃ < 0` exactly when `det(M) < 0`.
//!
//! Tangents are attached afterwards by implicit differentiation of
//! `M = U Σ Vᵀ`. With `P = Uᵀ Ṁ V`:
//!
//! * `σ̇ᵢ = Pᵢᵢ`
//! * the off-diagonal entries of the skew generators `Ω_U`, `Ω_V` solve a 2×2
//!   system per `(i,j)` pair whose determinant is `σⱼ² − σᵢ²`; when two
//!   singular values (or their sum) nearly coincide both factors are clamped
//!   to `1e-9` in magnitude so the tangents stay finite at symmetric
//!   configurations.

use super::linalg::{Mat3, Vec3};
use super::scalar::{Scalar, MAX_TANGENTS};
use crate::error::Error;

/// Smallest singular-value gap (and pair sum) used in tangent propagation.
const GAP_CLAMP: f64 = 1e-9;

/// Rotation-SVD of a 3×3 matrix.
#[derive(Clone, Copy, Debug)]
pub struct Svd3 {
    pub u: Mat3,
    pub sigma: Vec3,
    pub v: Mat3,
}

impl Svd3 {
    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> Mat3 {
        self.u * Mat3::from_diag(self.sigma) * self.v.transpose()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric 3×3 matrix.
/// Returns (eigenvalues, eigenvectors as columns), unsorted.
fn sym_eig3(a_in: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = a_in;
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);

    for _sweep in 0..40 {
        let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
        if off <= 1e-16 * scale {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq.abs() <= 1e-300 {
                continue;
            }
            // Classic Jacobi rotation annihilating a[p][q].
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

fn col(m: &[[f64; 3]; 3], j: usize) -> [f64; 3] {
    [m[0][j], m[1][j], m[2][j]]
}

fn set_col(m: &mut [[f64; 3]; 3], j: usize, v: [f64; 3]) {
    m[0][j] = v[0];
    m[1][j] = v[1];
    m[2][j] = v[2];
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Value-part SVD in plain f64. Returns (u, sigma, v).
fn svd3_values(m: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], [f64; 3], [[f64; 3]; 3]) {
    let mt_m = matmul(&transpose(m), m);
    let (lam, mut v) = sym_eig3(mt_m);

    // Sort eigenpairs by descending eigenvalue.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| lam[b].partial_cmp(&lam[a]).unwrap());
    let mut vs = [[0.0; 3]; 3];
    let mut sig = [0.0; 3];
    for (dst, &src) in order.iter().enumerate() {
        set_col(&mut vs, dst, col(&v, src));
        sig[dst] = lam[src].max(0.0).sqrt();
    }
    v = vs;

    if det3(&v) < 0.0 {
        let c = col(&v, 2);
        set_col(&mut v, 2, [-c[0], -c[1], -c[2]]);
    }

    // Left factor: columns of M·V normalized, completed by cross products
    // whenever a singular value is too small to trust the direction.
    let b = matmul(m, &v);
    let sig_max = sig[0].max(1e-300);
    let mut u = [[0.0; 3]; 3];
    let mut good = [false; 3];
    for j in 0..3 {
        let bj = col(&b, j);
        let n = dot3(bj, bj).sqrt();
        if n > 1e-12 * sig_max {
            set_col(&mut u, j, [bj[0] / n, bj[1] / n, bj[2] / n]);
            good[j] = true;
        }
    }
    // Fill degenerate columns.
    for j in 0..3 {
        if good[j] {
            continue;
        }
        let others: Vec<usize> = (0..3).filter(|&k| k != j && good[k]).collect();
        let newcol = match others.len() {
            2 => cross3(col(&u, others[0]), col(&u, others[1])),
            1 => {
                let a = col(&u, others[0]);
                // Any unit vector orthogonal to `a`.
                let trial = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let c = cross3(a, trial);
                let n = dot3(c, c).sqrt();
                [c[0] / n, c[1] / n, c[2] / n]
            }
            _ => {
                let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                e[j]
            }
        };
        set_col(&mut u, j, newcol);
        good[j] = true;
    }

    // Modified Gram-Schmidt, strongest column first, to restore orthogonality
    // lost to the squared conditioning of MᵀM.
    for j in 0..3 {
        let mut cj = col(&u, j);
        for k in 0..j {
            let ck = col(&u, k);
            let proj = dot3(cj, ck);
            for i in 0..3 {
                cj[i] -= proj * ck[i];
            }
        }
        let n = dot3(cj, cj).sqrt().max(1e-300);
        set_col(&mut u, j, [cj[0] / n, cj[1] / n, cj[2] / n]);
    }

    if det3(&u) < 0.0 {
        let c = col(&u, 2);
        set_col(&mut u, 2, [-c[0], -c[1], -c[2]]);
    }

    // Refresh singular values as uᵀ M v; signs land on the smallest one.
    for (j, s) in sig.iter_mut().enumerate() {
        let mv = {
            let vj = col(&v, j);
            [
                m[0][0] * vj[0] + m[0][1] * vj[1] + m[0][2] * vj[2],
                m[1][0] * vj[0] + m[1][1] * vj[1] + m[1][2] * vj[2],
                m[2][0] * vj[0] + m[2][1] * vj[1] + m[2][2] * vj[2],
            ]
        };
        *s = dot3(col(&u, j), mv);
    }

    // The refresh can reorder repeated singular values at the last ulp.
    // Re-sort with one consistent column permutation of U and V; an odd
    // permutation flips both determinants, undone by negating the last
    // column pair (which leaves U Σ Vᵀ unchanged).
    let mut perm = [0usize, 1, 2];
    perm.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).unwrap());
    if perm != [0, 1, 2] {
        let (u0, v0, s0) = (u, v, sig);
        for (dst, &src) in perm.iter().enumerate() {
            set_col(&mut u, dst, col(&u0, src));
            set_col(&mut v, dst, col(&v0, src));
            sig[dst] = s0[src];
        }
        let odd = matches!(perm, [1, 0, 2] | [0, 2, 1] | [2, 1, 0]);
        if odd {
            for m in [&mut u, &mut v] {
                let c = col(m, 2);
                set_col(m, 2, [-c[0], -c[1], -c[2]]);
            }
        }
    }

    (u, sig, v)
}

fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

/// Sign-preserving magnitude clamp.
fn clamped(x: f64, floor: f64) -> f64 {
    if x.abs() >= floor {
        x
    } else if x < 0.0 {
        -floor
    } else {
        floor
    }
}

/// `P = Uᵀ Ṁ V` for one tangent lane.
fn lane_p(u: &[[f64; 3]; 3], v: &[[f64; 3]; 3], m: &Mat3, lane: usize) -> [[f64; 3]; 3] {
    let mut mdot = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            mdot[i][j] = m.m[i][j].dot[lane];
        }
    }
    matmul(&matmul(&transpose(u), &mdot), v)
}

/// SVD with tangent propagation.
pub fn svd3(m: &Mat3) -> Result<Svd3, Error> {
    if !m.is_finite() {
        return Err(Error::NonFinite("svd3 input"));
    }
    let vals = m.values();
    let (u, sig, v) = svd3_values(&vals);

    let mut u_out = Mat3::from_rows(u[0], u[1], u[2]);
    let mut v_out = Mat3::from_rows(v[0], v[1], v[2]);
    let mut sig_out = Vec3::from_array(sig);

    for lane in 0..MAX_TANGENTS {
        let p = lane_p(&u, &v, m, lane);
        if p.iter().flatten().all(|&x| x == 0.0) {
            continue;
        }
        for i in 0..3 {
            sig_out.comp_mut(i).dot[lane] = p[i][i];
        }
        // Skew generators Ω_U, Ω_V from the 2×2 systems.
        let mut om_u = [[0.0; 3]; 3];
        let mut om_v = [[0.0; 3]; 3];
        for &(i, j) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let denom = clamped(sig[j] - sig[i], GAP_CLAMP) * clamped(sig[j] + sig[i], GAP_CLAMP);
            let wu = (sig[j] * p[i][j] + sig[i] * p[j][i]) / denom;
            let wv = (sig[i] * p[i][j] + sig[j] * p[j][i]) / denom;
            om_u[i][j] = wu;
            om_u[j][i] = -wu;
            om_v[i][j] = wv;
            om_v[j][i] = -wv;
        }
        let du = matmul(&u, &om_u);
        let dv = matmul(&v, &om_v);
        for i in 0..3 {
            for j in 0..3 {
                u_out.m[i][j].dot[lane] = du[i][j];
                v_out.m[i][j].dot[lane] = dv[i][j];
            }
        }
    }

    Ok(Svd3 { u: u_out, sigma: sig_out, v: v_out })
}

/// Rotation factor `R = U Vᵀ` of the polar decomposition.
///
/// Tangents use the combined generator `Ω_R = Ω_U − Ω_V`, whose `(i,j)` entry
/// is `(Pᵢⱼ − Pⱼᵢ)/(σᵢ + σⱼ)` — finite even at repeated singular values, so
/// the rotation sensitivity stays exact where the separate factors degenerate.
pub fn polar_rotation(m: &Mat3) -> Result<Mat3, Error> {
    let det = m.determinant().val;
    if !(det > 0.0) {
        return Err(Error::InvertedElement { det });
    }
    let vals = m.values();
    let (u, sig, v) = svd3_values(&vals);
    let r_vals = matmul(&u, &transpose(&v));
    let mut r = Mat3::from_rows(r_vals[0], r_vals[1], r_vals[2]);

    for lane in 0..MAX_TANGENTS {
        let p = lane_p(&u, &v, m, lane);
        if p.iter().flatten().all(|&x| x == 0.0) {
            continue;
        }
        let mut om_r = [[0.0; 3]; 3];
        for &(i, j) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let w = (p[i][j] - p[j][i]) / clamped(sig[i] + sig[j], GAP_CLAMP);
            om_r[i][j] = w;
            om_r[j][i] = -w;
        }
        // dR = U Ω_R Vᵀ
        let dr = matmul(&matmul(&u, &om_r), &transpose(&v));
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j].dot[lane] = dr[i][j];
            }
        }
    }
    Ok(r)
}

impl Vec3 {
    fn comp_mut(&mut self, i: usize) -> &mut Scalar {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }
}
