//! Outward-rounded rational intervals, used to decide real inequalities
//! between exponentials of exact rationals.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Closed interval `[lo, hi]` with rational endpoints on a dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

fn grid(bits: u32) -> Rational {
    Rational::from_integer(BigInt::one() << bits as usize)
}

fn round_down(x: &Rational, bits: u32) -> Rational {
    let g = grid(bits);
    (x * &g).floor() / g
}

fn round_up(x: &Rational, bits: u32) -> Rational {
    let g = grid(bits);
    (x * &g).ceil() / g
}

impl Interval {
    pub fn point(q: Rational) -> Self {
        Interval { lo: q.clone(), hi: q }
    }

    /// Encloses `exp(q)` with endpoints on the `2^-bits` grid.
    pub fn exp(q: &Rational, bits: u32) -> Self {
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        // Argument reduction: |q| / 2^s <= 1/2.
        let mut s = 0u32;
        let mut r = q.clone();
        while r.abs() > half {
            r /= Rational::from_integer(BigInt::from(2));
            s += 1;
        }
        let work = bits + s + 8;
        let tol = Rational::new(BigInt::one(), BigInt::one() << work as usize);
        let mut term = Rational::one();
        let mut sum = Rational::one();
        let mut i = 1i64;
        let remainder = loop {
            term = term * &r / Rational::from_integer(BigInt::from(i));
            sum += &term;
            // Tail after term i is bounded by 2|term| |r| / (i + 1) when |r| <= 1/2.
            let tail = term.abs() * r.abs() * Rational::from_integer(BigInt::from(2))
                / Rational::from_integer(BigInt::from(i + 1));
            if tail < tol {
                break tail;
            }
            i += 1;
        };
        let mut lo = round_down(&(&sum - &remainder), work);
        let mut hi = round_up(&(&sum + &remainder), work);
        for _ in 0..s {
            lo = round_down(&(&lo * &lo), work);
            hi = round_up(&(&hi * &hi), work);
        }
        Interval {
            lo: round_down(&lo, bits),
            hi: round_up(&hi, bits),
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &other.hi,
            hi: &self.hi - &other.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().cloned().unwrap_or_else(Rational::zero);
        let hi = c.iter().max().cloned().unwrap_or_else(Rational::zero);
        Interval { lo, hi }
    }

    pub fn scale(&self, k: &Rational) -> Interval {
        self.mul(&Interval::point(k.clone()))
    }

    /// Enclosure of `|x|` for `x` in the interval.
    pub fn abs(&self) -> Interval {
        if self.lo >= Rational::zero() {
            self.clone()
        } else if self.hi <= Rational::zero() {
            Interval {
                lo: -self.hi.clone(),
                hi: -self.lo.clone(),
            }
        } else {
            Interval {
                lo: Rational::zero(),
                hi: std::cmp::max(-self.lo.clone(), self.hi.clone()),
            }
        }
    }

    /// `Some(true)` if every point is `<=` every point of `other`,
    /// `Some(false)` if every point is `>`, `None` if the intervals overlap.
    pub fn certainly_le(&self, other: &Interval) -> Option<bool> {
        if self.hi <= other.lo {
            Some(true)
        } else if self.lo > other.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        crate::rational::to_f64(&((&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2))))
    }
}
