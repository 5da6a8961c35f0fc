use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::RealSeries;

/// Residual series `w_i = y_i - sum_r phi_r y_{i-r}`.
///
/// `w[0]` corresponds to the value `y` stores at position
/// `presample_len + offset`; a change-point `t` counted in `w` is
/// `t + offset` in post-sample coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecorrelatedSeries<T> {
    pub w: Vec<T>,
    /// Post-sample observations consumed as lags because the pre-sample was
    /// shorter than the order.
    pub offset: usize,
    pub phi: Vec<T>,
}

impl<T: Scalar> DecorrelatedSeries<T> {
    /// Wraps an already white series.
    pub fn raw(w: Vec<T>) -> Self {
        Self {
            w,
            offset: 0,
            phi: Vec::new(),
        }
    }

    pub fn n_eff(&self) -> usize {
        self.w.len()
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn to_original(&self, t: usize) -> usize {
        t + self.offset
    }
}

/// Decorrelates `y` with coefficients `phi`. The residuals start at the
/// first post-sample value that has `p` predecessors stored, so a
/// pre-sample of at least `p` values yields one residual per post-sample
/// observation.
pub fn decorrelate<T: Scalar>(y: &RealSeries<T>, phi: &[T]) -> Result<DecorrelatedSeries<T>> {
    let v = y.values();
    let p = phi.len();
    let start = y.presample_len().max(p);
    if v.len() < start + 2 {
        return Err(Error::TooShort {
            needed: start + 2,
            got: v.len(),
        });
    }
    let w = (start..v.len())
        .map(|i| {
            phi.iter()
                .enumerate()
                .fold(v[i], |acc, (r, c)| acc - *c * v[i - r - 1])
        })
        .collect();
    Ok(DecorrelatedSeries {
        w,
        offset: start - y.presample_len(),
        phi: phi.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let y = RealSeries::from_values(vec![1.0, 2.0, 3.0]).unwrap();
        let d = decorrelate(&y, &[0.5]).unwrap();
        assert_eq!(d.w, vec![1.5, 2.0]);
        assert_eq!(d.offset, 1);
        assert_eq!(d.to_original(1), 2);

        let d = decorrelate(&y, &[]).unwrap();
        assert_eq!(d.w, y.values());
        assert_eq!(d.offset, 0);

        let c = RealSeries::from_values(vec![4.2; 10]).unwrap();
        assert!(decorrelate(&c, &[1.0]).unwrap().w.iter().all(|v| *v == 0.0));

        assert!(matches!(
            decorrelate(&y, &[0.1, 0.1]),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn presample_supplies_lags() {
        let y = RealSeries::new(vec![1.0, 2.0, 3.0, 5.0], 2).unwrap();
        let d = decorrelate(&y, &[1.0]).unwrap();
        assert_eq!(d.w, vec![1.0, 2.0]);
        assert_eq!(d.offset, 0);
        let d = decorrelate(&y, &[1.0, 1.0]).unwrap();
        assert_eq!(d.w, vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn linear_in_the_series(
            v in prop::collection::vec(-100i32..100, 6..40),
            phi in prop::collection::vec(-3i32..3, 0..4),
            a in -5i32..5,
        ) {
            // Small integers keep the arithmetic exact.
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let phi: Vec<f64> = phi.into_iter().map(f64::from).collect();
            let a = f64::from(a);
            let y = RealSeries::from_values(v.clone()).unwrap();
            let ay = RealSeries::from_values(v.iter().map(|x| a * x).collect()).unwrap();
            let base = decorrelate(&y, &phi).unwrap();
            let scaled = decorrelate(&ay, &phi).unwrap();
            for (s, b) in scaled.w.iter().zip(&base.w) {
                prop_assert_eq!(*s, a * b);
            }
        }
    }
}
