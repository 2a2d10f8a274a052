//! Square approximations `Γ_k` of the quadratic Koch (type 2) boundary.
//!
//! The side parameters follow `a_{-1} = 1`, `a_{2k} = a_{2k-1} / 4`,
//! `a_{2k+1} = 1 + a_{2k}`. Even terms tend to 1/3 and odd terms to 4/3.

use std::ops::Neg;

use num_traits::Num;

/// Axis-aligned square `lo ≤ x, y ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Square<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Num + Clone + PartialOrd> Square<T> {
    pub fn side(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        x >= self.lo && x <= self.hi && y >= self.lo && y <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KochBoundary<T> {
    pub k: u32,
    pub a_even: T,
    pub a_odd: T,
    pub square: Square<T>,
}

/// Iterates the recurrence to `(a_{2k}, a_{2k+1})`. Works for floats and
/// exact rationals alike.
pub fn quadratic_koch_boundary<T: Num + Clone + Neg<Output = T>>(k: u32) -> KochBoundary<T> {
    let four = T::one() + T::one() + T::one() + T::one();
    let mut odd = T::one();
    let mut even = T::zero();
    for _ in 0..=k {
        even = odd / four.clone();
        odd = T::one() + even.clone();
    }
    KochBoundary {
        k,
        square: Square {
            lo: -even.clone(),
            hi: odd.clone(),
        },
        a_even: even,
        a_odd: odd,
    }
}
