/// `J_m(z)` from its power series.
pub fn bessel_j(m: i64, z: f64) -> f64 {
    let order = m.unsigned_abs();
    let half = 0.5 * z;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let mut sum = term;
    for k in 1..400u64 {
        term *= -half * half / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 2 * order {
            break;
        }
    }
    if m < 0 && order % 2 == 1 {
        -sum
    } else {
        sum
    }
}
