//! Two-by-two complex matrices for single-qubit gates.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::FRAC_1_SQRT_2;

/// A one-qubit gate as a row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(pub [[C64; 2]; 2]);

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

impl Unitary2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Unitary2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn z() -> Self {
        Self::rz(std::f64::consts::PI)
    }

    pub fn h() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(s, s, s, -s)
    }

    /// `|0⟩⟨0| + e^{iα}|1⟩⟨1|`.
    pub fn rz(alpha: f64) -> Self {
        Self::new(ONE, ZERO, ZERO, C64::from_polar(1.0, alpha))
    }

    /// Real rotation `[[cos t, -sin t], [sin t, cos t]]`.
    pub fn ry(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
    }

    pub fn phase(alpha: f64) -> Self {
        let p = C64::from_polar(1.0, alpha);
        Self::new(p, ZERO, ZERO, p)
    }

    /// Basis change whose columns are `(|0⟩ + e^{2πi r}|1⟩)/√2` for `r = r0` and `r0 + 1/2`.
    /// Applying its adjoint and measuring in the computational basis measures in that basis.
    pub fn equator_basis(r0: f64) -> Self {
        let s = FRAC_1_SQRT_2;
        let p = C64::from_polar(s, 2.0 * std::f64::consts::PI * r0);
        Self::new(C64::new(s, 0.0), C64::new(s, 0.0), p, -p)
    }

    /// Haar-ish random unitary from seeded Euler angles and a phase.
    pub fn random<R: rand::Rng>(rng: &mut R) -> Self {
        let t = std::f64::consts::TAU;
        let (a, b, c, d): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
        Self::phase(a * t).mul(&Self::rz(b * t)).mul(&Self::ry(c.sqrt().asin())).mul(&Self::rz(d * t))
    }

    pub fn mul(&self, o: &Unitary2) -> Unitary2 {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[ZERO; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2(r)
    }

    pub fn adjoint(&self) -> Unitary2 {
        let a = &self.0;
        Self::new(a[0][0].conj(), a[1][0].conj(), a[0][1].conj(), a[1][1].conj())
    }

    pub fn scale(&self, s: C64) -> Unitary2 {
        let a = &self.0;
        Self::new(a[0][0] * s, a[0][1] * s, a[1][0] * s, a[1][1] * s)
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest entry-wise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let i = Self::identity();
        p.max_diff(&i)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.0.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite()) && self.unitarity_error() <= tol
    }

    pub fn max_diff(&self, o: &Unitary2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - o.0[i][j]).norm());
            }
        }
        m
    }

    /// Distance to `o` after removing the best global phase.
    pub fn phase_distance(&self, o: &Unitary2) -> f64 {
        let mut tr = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                tr += self.0[i][j].conj() * o.0[i][j];
            }
        }
        let ph = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
        let mut d = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d += (self.0[i][j] * ph - o.0[i][j]).norm_sqr();
            }
        }
        d.sqrt()
    }

    pub fn is_diagonal(&self) -> bool {
        self.0[0][1] == ZERO && self.0[1][0] == ZERO
    }

    pub fn is_antidiagonal(&self) -> bool {
        self.0[0][0] == ZERO && self.0[1][1] == ZERO
    }

    pub fn apply(&self, a0: C64, a1: C64) -> (C64, C64) {
        let m = &self.0;
        (m[0][0] * a0 + m[0][1] * a1, m[1][0] * a0 + m[1][1] * a1)
    }

    pub fn to_reals(&self) -> [f64; 8] {
        let m = &self.0;
        [
            m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re,
            m[1][1].im,
        ]
    }

    pub fn from_reals(r: [f64; 8]) -> Self {
        Self::new(
            C64::new(r[0], r[1]),
            C64::new(r[2], r[3]),
            C64::new(r[4], r[5]),
            C64::new(r[6], r[7]),
        )
    }
}

impl Serialize for Unitary2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_reals().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Unitary2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = <[f64; 8]>::deserialize(d)?;
        Ok(Unitary2::from_reals(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        for u in [Unitary2::h(), Unitary2::x(), Unitary2::rz(0.3), Unitary2::ry(1.1), Unitary2::equator_basis(0.25)] {
            assert!(u.is_unitary(1e-12));
        }
    }

    #[test]
    fn hzh_is_x() {
        let u = Unitary2::h().mul(&Unitary2::z()).mul(&Unitary2::h());
        assert!(u.max_diff(&Unitary2::x()) < 1e-12);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let u = Unitary2::ry(0.7).mul(&Unitary2::rz(0.2));
        assert!(u.phase_distance(&u.scale(C64::from_polar(1.0, 2.1))) < 1e-12);
        assert!(u.phase_distance(&Unitary2::x()) > 0.1);
    }
}
