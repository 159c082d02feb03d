//! Interpolation coefficients for reconstructing mixed partial
//! derivatives from a family of same-degree jets along combined
//! directions. The alternating sum is cancellation-prone, so everything
//! stays in exact rational arithmetic until a plan is built.

use num_rational::Ratio;

use super::OperatorError;

pub type Rat = Ratio<i128>;

fn int_binomial(n: usize, k: usize) -> i128 {
    if k > n {
        return 0;
    }
    let mut acc: i128 = 1;
    for l in 0..k {
        acc = acc * (n - l) as i128 / (l + 1) as i128;
    }
    acc
}

/// Generalized binomial with a rational upper argument:
/// prod_{l=0}^{b-1} (a - l) / (b - l), defined as 1 for b = 0.
fn gen_binomial(a: Rat, b: usize) -> Rat {
    let mut acc = Rat::from_integer(1);
    for l in 0..b {
        let num = a - Rat::from_integer(l as i128);
        let den = Rat::from_integer((b - l) as i128);
        acc *= num / den;
    }
    acc
}

fn norm1(v: &[usize]) -> usize {
    v.iter().sum()
}

/// Exact interpolation coefficient for multi-indices `i` and `j` with
/// equal 1-norms: a signed sum over all component-wise sub-indices
/// 0 < m <= i of binomial(i, m) * genbinom(K * m / ||m||, j) * (||m||/K)^K.
pub fn gamma(i: &[usize], j: &[usize]) -> Result<Rat, OperatorError> {
    if i.is_empty() || i.len() != j.len() {
        return Err(OperatorError::BadSpec(format!(
            "multi-index lengths differ: {} vs {}",
            i.len(),
            j.len()
        )));
    }
    let k = norm1(i);
    if k == 0 || k != norm1(j) {
        return Err(OperatorError::BadSpec(format!(
            "multi-index sums differ: {} vs {}",
            k,
            norm1(j)
        )));
    }
    let slots = i.len();
    let mut m = vec![0usize; slots];
    let mut total = Rat::from_integer(0);
    loop {
        // advance m through the box 0 <= m <= i (odometer order)
        let mut slot = 0;
        loop {
            if slot == slots {
                return Ok(total);
            }
            if m[slot] < i[slot] {
                m[slot] += 1;
                break;
            }
            m[slot] = 0;
            slot += 1;
        }
        let norm_m = norm1(&m);
        debug_assert!(norm_m > 0);
        let sign = if (k - norm_m).is_multiple_of(2) { 1 } else { -1 };
        let mut term = Rat::from_integer(sign);
        for l in 0..slots {
            term *= Rat::from_integer(int_binomial(i[l], m[l]));
        }
        for l in 0..slots {
            let upper = Rat::new((k * m[l]) as i128, norm_m as i128);
            term *= gen_binomial(upper, j[l]);
        }
        let ratio = Rat::new(norm_m as i128, k as i128);
        let mut power = Rat::from_integer(1);
        for _ in 0..k {
            power *= ratio;
        }
        total += term * power;
    }
}

/// All multi-indices of the given length with 1-norm `sum`, in
/// lexicographic order.
pub fn multi_indices(len: usize, sum: usize) -> Vec<Vec<usize>> {
    fn rec(len: usize, sum: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if len == 1 {
            prefix.push(sum);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=sum {
            prefix.push(first);
            rec(len - 1, sum - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len > 0 {
        rec(len, sum, &mut Vec::new(), &mut out);
    }
    out
}
