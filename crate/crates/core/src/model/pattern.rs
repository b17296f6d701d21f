use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::priors::Priors;
use super::spec::{ModelSpec, Sign};
use crate::error::Error;

/// Tag of one entry of the impact matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    Free,
    Zero,
    Positive,
    Negative,
}

impl Restriction {
    /// Whether `x` lies in the admissible region of the entry.
    pub fn admits(self, x: f64) -> bool {
        match self {
            Restriction::Free => x.is_finite(),
            Restriction::Zero => x == 0.0,
            Restriction::Positive => x > 0.0,
            Restriction::Negative => x < 0.0,
        }
    }

    /// Admissible interval of a non-zero tagged entry.
    pub fn interval(self) -> (f64, f64) {
        match self {
            Restriction::Positive => (0.0, f64::INFINITY),
            Restriction::Negative => (f64::NEG_INFINITY, 0.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Restriction::Negative => -1.0,
            _ => 1.0,
        }
    }

    fn from_sign(sign: Sign) -> Self {
        match sign {
            Sign::Positive => Restriction::Positive,
            Sign::Negative => Restriction::Negative,
        }
    }
}

/// Zero, sign and prior structure of the impact matrix `B` in
/// `u_t = B eps_t`. Entry `(i, j)` is the impact of shock `j` on variable `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactPattern {
    pub size: usize,
    tags: Vec<Restriction>,
    prior_mean: Vec<f64>,
    prior_variance: Vec<f64>,
}

impl ImpactPattern {
    /// All entries zero-tagged.
    pub fn new(size: usize) -> Self {
        ImpactPattern {
            size,
            tags: vec![Restriction::Zero; size * size],
            prior_mean: vec![0.0; size * size],
            prior_variance: vec![0.0; size * size],
        }
    }

    /// Structure implied by the model: a free block for the endogenous
    /// variables (with the sign restrictions in the policy-shock column),
    /// zero impact of instrument noise on endogenous variables, instrument
    /// `j` loading only on shock `j`, and a diagonal instrument-noise block.
    pub fn from_spec(spec: &ModelSpec, priors: &Priors) -> core::result::Result<Self, Vec<Error>> {
        let d = spec.dims();
        let (r, n) = (d.endogenous, d.system);
        let mut p = ImpactPattern::new(n);
        for i in 0..r {
            for j in 0..r {
                p.set(i, j, Restriction::Free, 0.0, priors.impact_variance);
            }
        }
        for j in 0..d.instruments {
            p.set(r + j, j, Restriction::Free, 0.0, priors.relevance_variance);
            p.set(r + j, r + j, Restriction::Free, 0.0, priors.noise_variance);
        }
        let mut errors = Vec::new();
        for (k, s) in spec.sign_restrictions.iter().enumerate() {
            if s.variable >= r {
                errors.push(Error::InvalidRestriction(alloc::format!(
                    "sign restriction {k} refers to variable {} but there are {r} endogenous variables",
                    s.variable
                )));
                continue;
            }
            if spec.sign_restrictions[..k].iter().any(|o| o.variable == s.variable) {
                errors.push(Error::InvalidRestriction(alloc::format!(
                    "variable {} is sign-restricted twice",
                    s.variable
                )));
                continue;
            }
            p.tags[s.variable * n] = Restriction::from_sign(s.sign);
        }
        if errors.is_empty() {
            Ok(p)
        } else {
            Err(errors)
        }
    }

    pub fn tag(&self, i: usize, j: usize) -> Restriction {
        self.tags[i * self.size + j]
    }

    pub fn prior(&self, i: usize, j: usize) -> (f64, f64) {
        (self.prior_mean[i * self.size + j], self.prior_variance[i * self.size + j])
    }

    pub fn set(&mut self, i: usize, j: usize, tag: Restriction, mean: f64, variance: f64) {
        let k = i * self.size + j;
        self.tags[k] = tag;
        self.prior_mean[k] = mean;
        self.prior_variance[k] = variance;
    }

    /// Structural problems: zero-tagged diagonal entries, non-positive prior
    /// variances of non-zero entries, or a sign-restricted entry whose prior
    /// would be meaningless.
    pub fn check(&self) -> Vec<Error> {
        let mut errors = Vec::new();
        for i in 0..self.size {
            if self.tag(i, i) == Restriction::Zero {
                errors.push(Error::InvalidRestriction(alloc::format!("diagonal impact entry {i} is zero-restricted")));
            }
            for j in 0..self.size {
                let (_, v) = self.prior(i, j);
                if self.tag(i, j) != Restriction::Zero && !(v > 0.0 && v.is_finite()) {
                    errors.push(Error::InvalidPrior(alloc::format!("impact entry ({i}, {j}) has prior variance {v}")));
                }
            }
        }
        errors
    }

    /// Whether every entry of `b` lies in its admissible region.
    pub fn admits(&self, b: &DMatrix<f64>) -> bool {
        (0..self.size).all(|i| (0..self.size).all(|j| self.tag(i, j).admits(b[(i, j)])))
    }

    /// Starting impact matrix: identity on the diagonal (negative where the
    /// diagonal is sign-restricted negative) and `0.1` in the direction of the
    /// sign of every restricted off-diagonal entry.
    pub fn starting_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| match (i == j, self.tag(i, j)) {
            (true, t) => t.sign(),
            (false, Restriction::Positive) => 0.1,
            (false, Restriction::Negative) => -0.1,
            _ => 0.0,
        })
    }
}
