//! Complete elliptic integrals and the circular-loop kernel.

use core::f64::consts::{LN_2, PI};
#[allow(unused_imports)]
use num_traits::Float;

/// K and E for parameter m = k², with m1 = 1 − m supplied separately so that
/// callers near m = 1 keep full relative accuracy in k'.
pub fn elliptic_ke(m: f64, m1: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = m1.max(0.0).sqrt();
    let mut sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..40 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
        if c.abs() <= 1e-17 * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// (1 − m/2)K(m) − E(m), computed without cancellation for small m.
pub fn loop_kernel(m: f64, m1: f64) -> f64 {
    if m < 0.5 {
        // termwise series; the m⁰ and m¹ coefficients cancel exactly
        let mut a_prev2 = 0.25; // a_1²
        let mut a_n = 0.5;
        let mut mp = m;
        let mut sum = 0.0;
        for n in 2..200 {
            let nf = n as f64;
            a_n *= (2.0 * nf - 1.0) / (2.0 * nf);
            let a2 = a_n * a_n;
            mp *= m;
            let d = a2 * (2.0 * nf / (2.0 * nf - 1.0)) - 0.5 * a_prev2;
            let t = d * mp;
            sum += t;
            a_prev2 = a2;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        0.5 * PI * sum
    } else if m1 < 1e-16 {
        loop_kernel_log_kp(0.5 * m1.ln())
    } else {
        let (k, e) = elliptic_ke(m, m1);
        (1.0 - 0.5 * m) * k - e
    }
}

/// Leading asymptotics of [`loop_kernel`] for k' → 0 given ln k'.
pub fn loop_kernel_log_kp(ln_kp: f64) -> f64 {
    let big_k = 2.0 * LN_2 - ln_kp;
    let kp2 = (2.0 * ln_kp).exp();
    let k = big_k + 0.25 * kp2 * (big_k - 1.0);
    let e = 1.0 + 0.5 * kp2 * (big_k - 0.5);
    (1.0 - 0.5 * (1.0 - kp2)) * k - e
}
