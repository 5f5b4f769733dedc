//! Small fixed-size linear algebra: 3×3 real matrices, characteristic
//! polynomials, and eigenvalues via closed-form cubic roots.
//!
//! The Jacobians and next-generation matrices of the model are all 3×3 and
//! well scaled, so a direct cubic solve with a Newton polish is both faster
//! and more predictable than a general eigensolver, and it keeps the crate
//! dependency-free.

use crate::math::{acos, cbrt, cos, sqrt};

/// Dense 3×3 real matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix3(pub [[f64; 3]; 3]);

/// Eigenvalue of a real matrix, stored as a (re, im) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    /// Modulus |λ|.
    pub fn abs(&self) -> f64 {
        sqrt(self.re * self.re + self.im * self.im)
    }
}

impl Matrix3 {
    pub const ZERO: Matrix3 = Matrix3([[0.0; 3]; 3]);

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Inverse via the adjugate. Returns `None` when the determinant is zero.
    pub fn inverse(&self) -> Option<Matrix3> {
        let det = self.determinant();
        if det == 0.0 {
            return None;
        }
        let m = &self.0;
        let inv_det = 1.0 / det;
        let cof = |r1: usize, r2: usize, c1: usize, c2: usize| {
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        Some(Matrix3([
            [
                cof(1, 2, 1, 2) * inv_det,
                -cof(0, 2, 1, 2) * inv_det,
                cof(0, 1, 1, 2) * inv_det,
            ],
            [
                -cof(1, 2, 0, 2) * inv_det,
                cof(0, 2, 0, 2) * inv_det,
                -cof(0, 1, 0, 2) * inv_det,
            ],
            [
                cof(1, 2, 0, 1) * inv_det,
                -cof(0, 2, 0, 1) * inv_det,
                cof(0, 1, 0, 1) * inv_det,
            ],
        ]))
    }

    pub fn mul(&self, rhs: &Matrix3) -> Matrix3 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Matrix3(out)
    }

    /// Coefficients `(c1, c2, c3)` of the characteristic polynomial
    /// `λ³ + c1·λ² + c2·λ + c3`: negated trace, sum of principal 2×2
    /// minors, negated determinant. For a Jacobian these are exactly the
    /// Routh–Hurwitz data of the linearization.
    pub fn char_poly(&self) -> (f64, f64, f64) {
        let m = &self.0;
        let c1 = -self.trace();
        let c2 = (m[0][0] * m[1][1] - m[0][1] * m[1][0])
            + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
            + (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
        let c3 = -self.determinant();
        (c1, c2, c3)
    }

    /// All three eigenvalues, as roots of the characteristic cubic.
    ///
    /// Real roots are Newton-polished on the cubic; a complex pair comes from
    /// the quadratic factor after deflating the dominant real root.
    pub fn eigenvalues(&self) -> [Eigenvalue; 3] {
        let (c1, c2, c3) = self.char_poly();
        solve_cubic(c1, c2, c3)
    }

    /// Spectral radius max|λ|.
    pub fn spectral_radius(&self) -> f64 {
        let ev = self.eigenvalues();
        let mut r = 0.0f64;
        for e in &ev {
            let a = e.abs();
            if a > r {
                r = a;
            }
        }
        r
    }
}

/// Roots of the monic cubic `x³ + c1·x² + c2·x + c3`.
///
/// Either three real roots (trigonometric branch) or one real root plus a
/// complex-conjugate pair (Cardano branch with deflation).
pub fn solve_cubic(c1: f64, c2: f64, c3: f64) -> [Eigenvalue; 3] {
    // Depressed form t³ + p·t + q with x = t − c1/3.
    let shift = c1 / 3.0;
    let p = c2 - c1 * c1 / 3.0;
    let q = 2.0 * c1 * c1 * c1 / 27.0 - c1 * c2 / 3.0 + c3;

    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let re = |x: f64| Eigenvalue { re: x, im: 0.0 };

    if p == 0.0 && q == 0.0 {
        let r = -shift;
        return [re(r), re(r), re(r)];
    }

    if disc <= 0.0 {
        // Three real roots. acos argument is clamped against roundoff.
        let rho = sqrt(-third_p);
        let mut arg = -half_q / (rho * rho * rho);
        arg = arg.clamp(-1.0, 1.0);
        let theta = acos(arg) / 3.0;
        const TWO_PI_3: f64 = 2.0 * core::f64::consts::PI / 3.0;
        let mut roots = [
            2.0 * rho * cos(theta),
            2.0 * rho * cos(theta - TWO_PI_3),
            2.0 * rho * cos(theta + TWO_PI_3),
        ];
        for r in &mut roots {
            *r = polish_real_root(c1, c2, c3, *r - shift);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
        [re(roots[0]), re(roots[1]), re(roots[2])]
    } else {
        // One real root, one conjugate pair.
        let s = sqrt(disc);
        let u = cbrt(-half_q + s);
        let v = cbrt(-half_q - s);
        let r0 = polish_real_root(c1, c2, c3, u + v - shift);
        // Deflate: x³ + c1x² + c2x + c3 = (x − r0)(x² + bx + c).
        let b = c1 + r0;
        let c = c2 + r0 * b;
        let quad_disc = b * b - 4.0 * c;
        if quad_disc >= 0.0 {
            let sq = sqrt(quad_disc);
            let r1 = (-b - sq) / 2.0;
            let r2 = (-b + sq) / 2.0;
            [re(r0), re(r1), re(r2)]
        } else {
            let im = sqrt(-quad_disc) / 2.0;
            let real = -b / 2.0;
            [re(r0), Eigenvalue { re: real, im }, Eigenvalue { re: real, im: -im }]
        }
    }
}

fn polish_real_root(c1: f64, c2: f64, c3: f64, mut x: f64) -> f64 {
    for _ in 0..3 {
        let f = ((x + c1) * x + c2) * x + c3;
        let df = (3.0 * x + 2.0 * c1) * x + c2;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}
