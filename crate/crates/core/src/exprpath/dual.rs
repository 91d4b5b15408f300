use std::ops::{Add, Div, Mul, Neg, Sub};

/// First-order dual number: a value together with its derivative d/dt.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }

    pub fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }

    /// The independent variable itself (derivative 1).
    pub fn variable(value: f64) -> Self {
        Dual { value, deriv: 1.0 }
    }

    fn chain(self, value: f64, slope: f64) -> Self {
        Dual {
            value,
            deriv: slope * self.deriv,
        }
    }

    pub fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn tan(self) -> Self {
        let v = self.value.tan();
        self.chain(v, 1.0 + v * v)
    }

    pub fn sinh(self) -> Self {
        self.chain(self.value.sinh(), self.value.cosh())
    }

    pub fn cosh(self) -> Self {
        self.chain(self.value.cosh(), self.value.sinh())
    }

    pub fn tanh(self) -> Self {
        let v = self.value.tanh();
        self.chain(v, 1.0 - v * v)
    }

    pub fn exp(self) -> Self {
        let v = self.value.exp();
        self.chain(v, v)
    }

    pub fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }

    pub fn sqrt(self) -> Self {
        let v = self.value.sqrt();
        if self.deriv == 0.0 {
            Dual::constant(v)
        } else {
            self.chain(v, 0.5 / v)
        }
    }

    pub fn atan(self) -> Self {
        self.chain(self.value.atan(), 1.0 / (1.0 + self.value * self.value))
    }

    /// `self^exponent`. The logarithmic term is only formed when the exponent
    /// actually varies, so negative bases with constant exponents are fine.
    pub fn pow(self, exponent: Dual) -> Self {
        let value = self.value.powf(exponent.value);
        let mut deriv = 0.0;
        if self.deriv != 0.0 {
            deriv += exponent.value * self.value.powf(exponent.value - 1.0) * self.deriv;
        }
        if exponent.deriv != 0.0 {
            deriv += value * self.value.ln() * exponent.deriv;
        }
        Dual { value, deriv }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value * rhs.value,
            self.value * rhs.deriv + rhs.value * self.deriv,
        )
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value / rhs.value,
            (self.deriv * rhs.value - self.value * rhs.deriv) / (rhs.value * rhs.value),
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let a = Dual::new(2.0, 3.0);
        let b = Dual::new(5.0, 7.0);
        assert_eq!(a * b, Dual::new(10.0, 2.0 * 7.0 + 5.0 * 3.0));
    }

    #[test]
    fn quotient_rule() {
        let q = Dual::new(1.0, 0.0) / Dual::variable(2.0);
        assert_eq!(q, Dual::new(0.5, -0.25));
    }

    #[test]
    fn power_with_negative_base_and_integer_exponent() {
        let p = Dual::variable(-2.0).pow(Dual::constant(3.0));
        assert_eq!(p, Dual::new(-8.0, 12.0));
    }
}
