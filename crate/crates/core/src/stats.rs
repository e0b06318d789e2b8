//! Small descriptive statistics over sample slices.

use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Pearson correlation of two equal-length slices.
///
/// Returns `None` when either slice has zero variance.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    assert_eq!(a.len(), b.len(), "pearson: length mismatch");
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = T::zero();
    let mut saa = T::zero();
    let mut sbb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return None;
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Some(r.max(-T::one()).min(T::one()))
}
