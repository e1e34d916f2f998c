use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

use crate::error::{LdError, Result};
use crate::model::rational_to_f64;

/// coeff · λ^lambda_power with an exact rational coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    pub coeff: BigRational,
    pub lambda_power: u32,
}

impl ExactScalar {
    pub fn new(coeff: BigRational, lambda_power: u32) -> Self {
        ExactScalar { coeff, lambda_power }
    }

    pub fn zero(lambda_power: u32) -> Self {
        Self::new(BigRational::zero(), lambda_power)
    }

    pub fn from_ratio(num: i64, den: i64, lambda_power: u32) -> Self {
        Self::new(BigRational::new(BigInt::from(num), BigInt::from(den)), lambda_power)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// Sum; powers must agree unless one side is zero.
    pub fn checked_add(&self, other: &ExactScalar) -> Result<ExactScalar> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.lambda_power != other.lambda_power {
            return Err(LdError::Param(format!(
                "adding λ^{} to λ^{}",
                self.lambda_power, other.lambda_power
            )));
        }
        Ok(Self::new(&self.coeff + &other.coeff, self.lambda_power))
    }

    pub fn mul(&self, other: &ExactScalar) -> ExactScalar {
        Self::new(&self.coeff * &other.coeff, self.lambda_power + other.lambda_power)
    }

    pub fn abs(&self) -> ExactScalar {
        Self::new(self.coeff.abs(), self.lambda_power)
    }

    /// Numeric value at λ = √lambda2.
    pub fn eval(&self, lambda2: f64) -> f64 {
        let c = rational_to_f64(&self.coeff);
        if c == 0.0 {
            return 0.0;
        }
        c * lambda2.sqrt().powi(self.lambda_power as i32)
    }

    pub fn is_one(&self) -> bool {
        self.coeff.is_one() && self.lambda_power == 0
    }
}

impl fmt::Display for ExactScalar {
    /// Rendered as `num/den · λ^k`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} · λ^{}",
            self.coeff.numer(),
            self.coeff.denom(),
            self.lambda_power
        )
    }
}
