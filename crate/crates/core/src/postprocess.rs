//! Removal of the spurious change-points that decorrelation creates just
//! after each true jump.
//!
//! Both rules are applied in a single pass against the input vector (a
//! removal never changes the neighbours another point sees), so they are not
//! idempotent on runs of three or more consecutive indices.

use crate::error::{Error, Result};

fn check(t: &[usize], n: usize) -> Result<()> {
    if t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidVector("change-points must be strictly increasing".into()));
    }
    if t.first() == Some(&0) || t.last().is_some_and(|&last| last >= n) {
        return Err(Error::InvalidVector(format!("change-points must lie in 1..{n}")));
    }
    Ok(())
}

/// Drops each `t_i` with `t_{i-1} = t_i - 1` and `t_{i+1} != t_i + 1`,
/// where `t_0 = 0` and `t_{m+1} = n`.
pub fn pp_ar1(t: &[usize], n: usize) -> Result<Vec<usize>> {
    check(t, n)?;
    let at = |k: usize| -> usize {
        if k == 0 {
            0
        } else if k > t.len() {
            n
        } else {
            t[k - 1]
        }
    };
    Ok((1..=t.len())
        .filter(|&i| !(at(i - 1) + 1 == at(i) && at(i + 1) != at(i) + 1))
        .map(at)
        .collect())
}

/// Drops each `t_i` preceded within `p` indices by some `t_j` that is
/// either the first change-point or itself more than `p` past `t_{j-1}`.
pub fn pp_arp(t: &[usize], p: usize, n: usize) -> Result<Vec<usize>> {
    check(t, n)?;
    let anchor = |j: usize| j == 0 || t[j - 1] + p < t[j];
    Ok(t.iter()
        .enumerate()
        .filter(|&(i, &ti)| {
            !(0..i)
                .rev()
                .take_while(|&j| t[j] + p >= ti)
                .any(anchor)
        })
        .map(|(_, &ti)| ti)
        .collect())
}

/// Applies the rule matching the order used for decorrelation (none for
/// order 0).
pub fn postprocess(t: &[usize], p: usize, n: usize) -> Result<Vec<usize>> {
    match p {
        0 => {
            check(t, n)?;
            Ok(t.to_vec())
        }
        1 => pp_ar1(t, n),
        _ => pp_arp(t, p, n),
    }
}
