//! Bessel `J_0` by Miller's backward recurrence, normalised with
//! `J_0 + 2 sum_k J_2k = 1`.

/// `J_0(x)` to about `1e-14` absolute for `|x| <= 1e4`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-8 {
        return 1.0 - 0.25 * x * x;
    }
    let start = (x + 30.0 * x.sqrt() + 30.0) as usize;
    let start = start + start % 2;
    let (mut next, mut cur) = (0.0_f64, 1e-300_f64);
    let mut j0 = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if k == 1 {
            j0 = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            j0 *= 1e-250;
        }
    }
    j0 / (norm + j0)
}
