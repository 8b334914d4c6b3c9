//! Supersingular-curve pairing backend.
//!
//! Curve: `y^2 = x^3 + x` over `F_P` with `P = k*n - 1` prime, `P = 3 mod 4`,
//! which makes the curve supersingular with `#E(F_P) = P + 1 = k*n`. The
//! order-n subgroup carries a symmetric pairing via the distortion map
//! `phi(x, y) = (-x, i*y)` into `E(F_{P^2})` with `i^2 = -1`: the modified
//! Tate pairing `e(A, B) = f_{n,A}(phi(B))^((P^2-1)/n)`.
//!
//! Miller's algorithm runs in affine coordinates over `F_P` (the first
//! argument and all its multiples stay in `E(F_P)`), with numerator and
//! denominator accumulated separately so only one `F_{P^2}` inversion is
//! needed at the end. Because `(-x_B, .)` can never lie on `E(F_P)` when
//! `B` does, line denominators never vanish for points of odd order.

use super::GroupError;
use crate::crypto;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::rngs::ChaCha20Rng;

/// Affine point on `E(F_P)` or the point at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurvePoint {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

/// Element of `F_{P^2} = F_P[i] / (i^2 + 1)`: `re + im * i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fp2 {
    pub re: BigUint,
    pub im: BigUint,
}

pub(crate) struct CurveParams {
    /// Field prime `P = cofactor * n - 1`.
    field: BigUint,
    /// Subgroup order n.
    order: BigUint,
    /// Final-exponentiation exponent `(P^2 - 1) / n = (P - 1) * cofactor`.
    final_exp: BigUint,
    pub(crate) generator: CurvePoint,
    field_len: usize,
}

impl CurveParams {
    /// Find a matching field prime and an order-n generator for composite
    /// order `n = p * q`.
    pub(crate) fn generate(
        n: &BigUint,
        p: &BigUint,
        q: &BigUint,
        rng: &mut ChaCha20Rng,
    ) -> Result<Self, GroupError> {
        let four = BigUint::from(4u32);
        let mut cofactor = four.clone();
        let field = loop {
            let candidate = &cofactor * n - BigUint::one();
            // cofactor = 0 mod 4 and n odd give P = 3 mod 4 automatically.
            debug_assert_eq!((&candidate % &four), BigUint::from(3u32));
            if crypto::is_probable_prime(&candidate, rng) {
                break candidate;
            }
            cofactor += &four;
            if cofactor.bits() > 24 {
                return Err(GroupError::ParameterGeneration(
                    "no field prime found for subgroup order".into(),
                ));
            }
        };
        let final_exp = (&field - BigUint::one()) * &cofactor;
        let field_len = field.bits().div_ceil(8) as usize;
        let mut params = CurveParams {
            field,
            order: n.clone(),
            final_exp,
            generator: CurvePoint::Infinity,
            field_len,
        };
        params.generator = params.find_generator(n, p, q, &cofactor, rng)?;
        Ok(params)
    }

    fn find_generator(
        &self,
        n: &BigUint,
        p: &BigUint,
        q: &BigUint,
        cofactor: &BigUint,
        rng: &mut ChaCha20Rng,
    ) -> Result<CurvePoint, GroupError> {
        let n_over_p = n / p;
        let n_over_q = n / q;
        for _ in 0..512 {
            let x = crypto::random_below(rng, &self.field);
            let rhs = (&x * &x % &self.field * &x + &x) % &self.field;
            let Some(y) = self.sqrt(&rhs) else {
                continue;
            };
            let candidate = self.mul_scalar(&CurvePoint::Affine { x, y }, cofactor);
            if candidate == CurvePoint::Infinity {
                continue;
            }
            // Order must be exactly n = p * q: annihilated by n but by
            // neither maximal divisor.
            if self.mul_scalar(&candidate, n) != CurvePoint::Infinity
                || self.mul_scalar(&candidate, &n_over_p) == CurvePoint::Infinity
                || self.mul_scalar(&candidate, &n_over_q) == CurvePoint::Infinity
            {
                continue;
            }
            // The self-pairing must be non-degenerate on both prime
            // components of the target subgroup.
            let gt = self.tate_pairing(&candidate, &candidate);
            if self.fp2_pow(&gt, n) == self.fp2_one()
                && self.fp2_pow(&gt, &n_over_p) != self.fp2_one()
                && self.fp2_pow(&gt, &n_over_q) != self.fp2_one()
            {
                return Ok(candidate);
            }
        }
        Err(GroupError::ParameterGeneration(
            "no full-order generator found".into(),
        ))
    }

    /// Square root mod P for P = 3 mod 4; `None` when not a residue.
    fn sqrt(&self, a: &BigUint) -> Option<BigUint> {
        if a.is_zero() {
            return Some(BigUint::zero());
        }
        let exp = (&self.field + BigUint::one()) >> 2;
        let r = a.modpow(&exp, &self.field);
        if (&r * &r % &self.field) == *a {
            Some(r)
        } else {
            None
        }
    }

    fn mod_p(&self, v: BigUint) -> BigUint {
        v % &self.field
    }

    fn sub_p(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.field - (b - a) % &self.field
        }
    }

    fn inv_p(&self, a: &BigUint) -> BigUint {
        a.modinv(&self.field).expect("field element invertible")
    }

    pub(crate) fn neg(&self, p: &CurvePoint) -> CurvePoint {
        match p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => CurvePoint::Affine {
                x: x.clone(),
                y: if y.is_zero() {
                    BigUint::zero()
                } else {
                    &self.field - y
                },
            },
        }
    }

    pub(crate) fn add(&self, a: &CurvePoint, b: &CurvePoint) -> CurvePoint {
        match (a, b) {
            (CurvePoint::Infinity, _) => b.clone(),
            (_, CurvePoint::Infinity) => a.clone(),
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => {
                if x1 == x2 {
                    if (y1 + y2) % &self.field == BigUint::zero() {
                        return CurvePoint::Infinity;
                    }
                    // Doubling; y1 != 0 because a 2-torsion point would
                    // have been the inverse case above.
                    let three = BigUint::from(3u32);
                    let num = self.mod_p(&three * x1 * x1 + BigUint::one());
                    let den = self.inv_p(&self.mod_p(BigUint::from(2u32) * y1));
                    let lambda = self.mod_p(num * den);
                    self.chord_result(&lambda, x1, y1, x2)
                } else {
                    let num = self.sub_p(y2, y1);
                    let den = self.inv_p(&self.sub_p(x2, x1));
                    let lambda = self.mod_p(num * den);
                    self.chord_result(&lambda, x1, y1, x2)
                }
            }
        }
    }

    fn chord_result(
        &self,
        lambda: &BigUint,
        x1: &BigUint,
        y1: &BigUint,
        x2: &BigUint,
    ) -> CurvePoint {
        let x3 = self.sub_p(&self.mod_p(lambda * lambda), &self.mod_p(x1 + x2));
        let y3 = self.sub_p(&self.mod_p(lambda * self.sub_p(x1, &x3)), y1);
        CurvePoint::Affine { x: x3, y: y3 }
    }

    pub(crate) fn mul_scalar(&self, p: &CurvePoint, k: &BigUint) -> CurvePoint {
        let mut acc = CurvePoint::Infinity;
        if k.is_zero() {
            return acc;
        }
        let bits = k.bits();
        for i in (0..bits).rev() {
            acc = self.add(&acc, &acc);
            if k.bit(i) {
                acc = self.add(&acc, p);
            }
        }
        acc
    }

    /// Modified Tate pairing `f_{n,A}(phi(B))^((P^2-1)/n)`.
    pub(crate) fn tate_pairing(&self, a: &CurvePoint, b: &CurvePoint) -> Fp2 {
        let (CurvePoint::Affine { .. }, CurvePoint::Affine { x: bx, y: by }) = (a, b) else {
            return self.fp2_one();
        };
        // phi(B) = (-B.x, i * B.y)
        let qx = Fp2 {
            re: if bx.is_zero() {
                BigUint::zero()
            } else {
                &self.field - bx
            },
            im: BigUint::zero(),
        };
        let qy = Fp2 {
            re: BigUint::zero(),
            im: by.clone(),
        };
        let f = self.miller(a, &qx, &qy);
        self.fp2_pow(&f, &self.final_exp)
    }

    /// Miller loop in affine coordinates with split numerator/denominator,
    /// inverted once at the end.
    fn miller(&self, a: &CurvePoint, qx: &Fp2, qy: &Fp2) -> Fp2 {
        let mut num = self.fp2_one();
        let mut den = self.fp2_one();
        let mut t = a.clone();
        let n = self.order.clone();
        let bits = n.bits();
        for i in (0..bits - 1).rev() {
            let (line, doubled) = self.line_eval(&t, &t, qx, qy);
            num = self.fp2_mul(&self.fp2_mul(&num, &num), &line);
            den = self.fp2_vertical(&self.fp2_mul(&den, &den), &doubled, qx);
            t = doubled;
            if n.bit(i) {
                let (line, sum) = self.line_eval(&t, a, qx, qy);
                num = self.fp2_mul(&num, &line);
                den = self.fp2_vertical(&den, &sum, qx);
                t = sum;
            }
        }
        self.fp2_mul(&num, &self.fp2_inv(&den))
    }

    /// Line through `t` and `s` (tangent when equal) evaluated at Q, plus
    /// the sum `t + s`. When `s = -t` the line is the vertical at `t` and
    /// the sum is infinity.
    fn line_eval(&self, t: &CurvePoint, s: &CurvePoint, qx: &Fp2, qy: &Fp2) -> (Fp2, CurvePoint) {
        let (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) = (t, s)
        else {
            let sum = if matches!(t, CurvePoint::Infinity) {
                s.clone()
            } else {
                t.clone()
            };
            return (self.fp2_one(), sum);
        };
        if x1 == x2 && (y1 + y2) % &self.field == BigUint::zero() {
            // Vertical line x - x1 evaluated at Q.
            let line = Fp2 {
                re: self.sub_p(&qx.re, x1),
                im: qx.im.clone(),
            };
            return (line, CurvePoint::Infinity);
        }
        let lambda = if x1 == x2 {
            let three = BigUint::from(3u32);
            let num = self.mod_p(&three * x1 * x1 + BigUint::one());
            let den = self.inv_p(&self.mod_p(BigUint::from(2u32) * y1));
            self.mod_p(num * den)
        } else {
            let num = self.sub_p(y2, y1);
            let den = self.inv_p(&self.sub_p(x2, x1));
            self.mod_p(num * den)
        };
        let sum = self.chord_result(&lambda, x1, y1, x2);
        // l(Q) = (y_Q - y1) - lambda * (x_Q - x1)
        let dx_re = self.sub_p(&qx.re, x1);
        let line = Fp2 {
            re: self.sub_p(&self.sub_p(&qy.re, y1), &self.mod_p(&lambda * &dx_re)),
            im: self.sub_p(&qy.im, &self.mod_p(&lambda * &qx.im)),
        };
        (line, sum)
    }

    fn fp2_vertical(&self, acc: &Fp2, t: &CurvePoint, qx: &Fp2) -> Fp2 {
        match t {
            CurvePoint::Infinity => acc.clone(),
            CurvePoint::Affine { x, .. } => {
                let v = Fp2 {
                    re: self.sub_p(&qx.re, x),
                    im: qx.im.clone(),
                };
                self.fp2_mul(acc, &v)
            }
        }
    }

    pub(crate) fn fp2_one(&self) -> Fp2 {
        Fp2 {
            re: BigUint::one(),
            im: BigUint::zero(),
        }
    }

    pub(crate) fn fp2_mul(&self, a: &Fp2, b: &Fp2) -> Fp2 {
        let p = &self.field;
        let ac = &a.re * &b.re % p;
        let bd = &a.im * &b.im % p;
        let ad = &a.re * &b.im % p;
        let bc = &a.im * &b.re % p;
        Fp2 {
            re: self.sub_p(&ac, &bd),
            im: (ad + bc) % p,
        }
    }

    pub(crate) fn fp2_inv(&self, a: &Fp2) -> Fp2 {
        let p = &self.field;
        let norm = (&a.re * &a.re + &a.im * &a.im) % p;
        let ninv = self.inv_p(&norm);
        Fp2 {
            re: &a.re * &ninv % p,
            im: self.sub_p(&BigUint::zero(), &(&a.im * &ninv % p)),
        }
    }

    pub(crate) fn fp2_pow(&self, a: &Fp2, e: &BigUint) -> Fp2 {
        let mut acc = self.fp2_one();
        for i in (0..e.bits()).rev() {
            acc = self.fp2_mul(&acc, &acc);
            if e.bit(i) {
                acc = self.fp2_mul(&acc, a);
            }
        }
        acc
    }

    pub(crate) fn point_len(&self) -> usize {
        1 + 2 * self.field_len
    }

    pub(crate) fn fp2_len(&self) -> usize {
        2 * self.field_len
    }

    pub(crate) fn point_to_bytes(&self, p: &CurvePoint) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.point_len());
        match p {
            CurvePoint::Infinity => out.extend(std::iter::repeat_n(0u8, self.point_len())),
            CurvePoint::Affine { x, y } => {
                out.push(1u8);
                out.extend_from_slice(&crypto::to_fixed_be(x, self.field_len));
                out.extend_from_slice(&crypto::to_fixed_be(y, self.field_len));
            }
        }
        out
    }

    pub(crate) fn point_from_bytes(&self, data: &[u8]) -> Result<CurvePoint, GroupError> {
        if data.len() != self.point_len() {
            return Err(GroupError::MalformedElement);
        }
        if data[0] == 0 {
            return Ok(CurvePoint::Infinity);
        }
        let x = BigUint::from_bytes_be(&data[1..1 + self.field_len]);
        let y = BigUint::from_bytes_be(&data[1 + self.field_len..]);
        if x >= self.field || y >= self.field {
            return Err(GroupError::MalformedElement);
        }
        Ok(CurvePoint::Affine { x, y })
    }

    pub(crate) fn fp2_to_bytes(&self, a: &Fp2) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.fp2_len());
        out.extend_from_slice(&crypto::to_fixed_be(&a.re, self.field_len));
        out.extend_from_slice(&crypto::to_fixed_be(&a.im, self.field_len));
        out
    }

    pub(crate) fn fp2_from_bytes(&self, data: &[u8]) -> Result<Fp2, GroupError> {
        if data.len() != self.fp2_len() {
            return Err(GroupError::MalformedElement);
        }
        let re = BigUint::from_bytes_be(&data[..self.field_len]);
        let im = BigUint::from_bytes_be(&data[self.field_len..]);
        if re >= self.field || im >= self.field {
            return Err(GroupError::MalformedElement);
        }
        Ok(Fp2 { re, im })
    }
}
