//! Smooth compactly supported building blocks: the dyadic annulus bump, the
//! resulting partition-of-unity profile, and the smooth step used by cutoffs.

/// `exp(-1 / (1 - u^2))` in the variable `u = log2 t`; supported on
/// `t in (1/2, 2)` and positive there.
pub fn annulus_bump(t: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let u = t.log2();
    bump_log(u)
}

#[inline]
fn bump_log(u: f64) -> f64 {
    let d = 1.0 - u * u;
    if d <= 0.0 {
        0.0
    } else {
        (-1.0 / d).exp()
    }
}

/// `S(t) = sum_j bump(2^{-j} t)^2`; at most three terms are nonzero.
pub fn dyadic_energy(t: f64) -> f64 {
    let u = t.log2();
    let base = u.floor() as i64;
    (base - 1..=base + 1)
        .map(|j| bump_log(u - j as f64).powi(2))
        .sum()
}

/// The generator profile `bump(t) / sqrt(S(t))`; its squared dyadic dilates
/// sum to one on `t > 0`.
pub fn partition_profile(t: f64) -> f64 {
    let b = annulus_bump(t);
    if b == 0.0 {
        0.0
    } else {
        b / dyadic_energy(t).sqrt()
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, `C^inf` in between.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Radial cutoff: 1 on `r <= 1`, 0 on `r >= 2`.
pub fn unit_cutoff(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_support() {
        assert_eq!(annulus_bump(0.5), 0.0);
        assert_eq!(annulus_bump(2.0), 0.0);
        assert_eq!(annulus_bump(0.0), 0.0);
        assert_eq!(annulus_bump(3.0), 0.0);
        assert!(annulus_bump(0.51) > 0.0);
        assert!(annulus_bump(1.99) > 0.0);
        assert!((annulus_bump(1.0) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn dyadic_partition_of_unity() {
        for i in 0..2000 {
            let t = 2f64.powf(-6.0 + 12.0 * i as f64 / 1999.0);
            let s: f64 = (-10..=10)
                .map(|j| partition_profile(t * 2f64.powi(-j)).powi(2))
                .sum();
            assert!((s - 1.0).abs() < 1e-14, "t = {t}: {s}");
        }
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(unit_cutoff(0.3), 1.0);
        assert_eq!(unit_cutoff(1.0), 1.0);
        assert_eq!(unit_cutoff(2.0), 0.0);
        assert!((unit_cutoff(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..100 {
            let v = unit_cutoff(1.0 + i as f64 / 99.0);
            assert!(v <= prev);
            prev = v;
        }
    }
}
