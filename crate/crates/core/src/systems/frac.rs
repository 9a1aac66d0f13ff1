//! Small exact rationals over `i128`, used by the metrics that are closed-form
//! rational functions of integer data.

use std::cmp::Ordering;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Q {
    num: i128,
    den: i128,
}

pub(crate) fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Q {
    pub fn new(num: i128, den: i128) -> Q {
        debug_assert!(den != 0);
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd(num, den).max(1);
        Q { num: num / g, den: den / g }
    }

    pub fn int(n: i128) -> Q {
        Q { num: n, den: 1 }
    }

    pub fn add(self, o: Q) -> Q {
        Q::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn sub(self, o: Q) -> Q {
        Q::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    pub fn abs(self) -> Q {
        Q { num: self.num.abs(), den: self.den }
    }

    pub fn min(self, o: Q) -> Q {
        if self.cmp_q(&o) == Ordering::Greater {
            o
        } else {
            self
        }
    }

    pub fn cmp_q(&self, o: &Q) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }

    /// Correctly rounded when numerator and denominator fit in 53 bits,
    /// which holds for every value the catalog metrics produce.
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}
