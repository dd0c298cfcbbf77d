//! Rationals that stay in machine words while they fit and fall back to
//! big integers on overflow. Used inside the simplex tableau, where most
//! entries have small numerators and denominators.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Clone, Debug)]
pub(crate) enum Q {
    /// numerator, denominator > 0, coprime
    Small(i64, i64),
    /// never representable as `Small`
    Big(Rational),
}

impl Q {
    pub(crate) fn zero() -> Q {
        Q::Small(0, 1)
    }

    pub(crate) fn one() -> Q {
        Q::Small(1, 1)
    }

    fn from_i128(mut n: i128, mut d: i128) -> Q {
        debug_assert!(d != 0);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = n.gcd(&d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Q::Small(n, d),
            _ => Q::Big(Rational::new(BigInt::from(n), BigInt::from(d))),
        }
    }

    fn from_big(r: Rational) -> Q {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Q::Small(n, d),
            _ => Q::Big(r),
        }
    }

    pub(crate) fn from_rational(r: &Rational) -> Q {
        Q::from_big(r.clone())
    }

    pub(crate) fn to_rational(&self) -> Rational {
        match self {
            Q::Small(n, d) => Rational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Q::Big(r) => r.clone(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, Q::Small(0, _))
    }

    pub(crate) fn is_one(&self) -> bool {
        matches!(self, Q::Small(1, 1))
    }

    pub(crate) fn is_positive(&self) -> bool {
        match self {
            Q::Small(n, _) => *n > 0,
            Q::Big(r) => r.is_positive(),
        }
    }

    pub(crate) fn is_negative(&self) -> bool {
        match self {
            Q::Small(n, _) => *n < 0,
            Q::Big(r) => r.is_negative(),
        }
    }

    pub(crate) fn recip(&self) -> Q {
        match self {
            Q::Small(n, d) => Q::from_i128(*d as i128, *n as i128),
            Q::Big(r) => Q::from_big(r.recip()),
        }
    }
}

impl From<&Rational> for Q {
    fn from(r: &Rational) -> Q {
        Q::from_rational(r)
    }
}

impl PartialEq for Q {
    fn eq(&self, other: &Q) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Q {}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Q) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Q) -> Ordering {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }
}

impl<'a> Add<&'a Q> for &'a Q {
    type Output = Q;
    fn add(self, other: &Q) -> Q {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    Q::from_i128(a + c, b)
                } else {
                    Q::from_i128(a * d + c * b, b * d)
                }
            }
            _ => Q::from_big(self.to_rational() + other.to_rational()),
        }
    }
}

impl<'a> Sub<&'a Q> for &'a Q {
    type Output = Q;
    fn sub(self, other: &Q) -> Q {
        self + &(-other)
    }
}

impl<'a> Mul<&'a Q> for &'a Q {
    type Output = Q;
    fn mul(self, other: &Q) -> Q {
        match (self, other) {
            (Q::Small(0, _), _) | (_, Q::Small(0, _)) => Q::zero(),
            (Q::Small(a, b), Q::Small(c, d)) => {
                Q::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Q::from_big(self.to_rational() * other.to_rational()),
        }
    }
}

impl<'a> Div<&'a Q> for &'a Q {
    type Output = Q;
    fn div(self, other: &Q) -> Q {
        self * &other.recip()
    }
}

impl Neg for &Q {
    type Output = Q;
    fn neg(self) -> Q {
        match self {
            Q::Small(n, d) => match n.checked_neg() {
                Some(m) => Q::Small(m, *d),
                None => Q::from_i128(-(*n as i128), *d as i128),
            },
            Q::Big(r) => Q::from_big(-r.clone()),
        }
    }
}

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        -&self
    }
}

impl AddAssign<&Q> for Q {
    fn add_assign(&mut self, other: &Q) {
        *self = &*self + other;
    }
}

impl SubAssign<&Q> for Q {
    fn sub_assign(&mut self, other: &Q) {
        *self = &*self - other;
    }
}

impl SubAssign<Q> for Q {
    fn sub_assign(&mut self, other: Q) {
        *self = &*self - &other;
    }
}

impl AddAssign<Q> for Q {
    fn add_assign(&mut self, other: Q) {
        *self = &*self + &other;
    }
}

impl MulAssign<&Q> for Q {
    fn mul_assign(&mut self, other: &Q) {
        *self = &*self * other;
    }
}

impl Zero for Q {
    fn zero() -> Q {
        Q::zero()
    }
    fn is_zero(&self) -> bool {
        Q::is_zero(self)
    }
}

impl Add for Q {
    type Output = Q;
    fn add(self, other: Q) -> Q {
        &self + &other
    }
}

impl Mul for Q {
    type Output = Q;
    fn mul(self, other: Q) -> Q {
        &self * &other
    }
}

impl One for Q {
    fn one() -> Q {
        Q::one()
    }
}
