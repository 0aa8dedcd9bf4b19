//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// `|a − b| ≤ tol · max(1, |b|)`.
#[track_caller]
pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    let scale = b.abs().max(1.0);
    assert!((a - b).abs() <= tol * scale, "{what}: {a} vs {b} (tol {tol})");
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for b in 0..=next {
            prefix.push(b);
            rec(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

pub fn is_noncrossing(p: &[usize]) -> bool {
    let n = p.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    if p[a] == p[c] && p[b] == p[d] && p[a] != p[b] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn nc_partitions(n: usize) -> Vec<Vec<usize>> {
    set_partitions(n).into_iter().filter(|p| is_noncrossing(p)).collect()
}

pub fn block_sizes(p: &[usize]) -> Vec<usize> {
    let blocks = p.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; blocks];
    for &b in p {
        sizes[b] += 1;
    }
    sizes
}

/// Kreweras complement by brute force: the coarsest partition of the barred
/// points such that the interleaving `1 1̄ 2 2̄ …` stays non-crossing.
pub fn kreweras(p: &[usize]) -> Vec<usize> {
    let n = p.len();
    let offset = p.iter().copied().max().unwrap() + 1;
    set_partitions(n)
        .into_iter()
        .filter(|s| {
            let mut joint = Vec::with_capacity(2 * n);
            for i in 0..n {
                joint.push(p[i]);
                joint.push(offset + s[i]);
            }
            is_noncrossing(&joint)
        })
        .min_by_key(|s| s.iter().copied().max().unwrap())
        .unwrap()
}

/// Free cumulants `κ₁ … κ_n` from moments `m₁ … m_n` (index 0 is order 1).
pub fn free_cumulants(m: &[f64]) -> Vec<f64> {
    let mut k: Vec<f64> = Vec::new();
    for n in 1..=m.len() {
        let mut others = 0.0;
        for p in nc_partitions(n) {
            let sizes = block_sizes(&p);
            if sizes.len() == 1 {
                continue;
            }
            others += sizes.iter().map(|&s| k[s - 1]).product::<f64>();
        }
        k.push(m[n - 1] - others);
    }
    k
}

/// Moments of `ab` for free `a`, `b`: `m_n = Σ_{π∈NC(n)} κ_π[a] m_{K(π)}[b]`.
pub fn free_product_moments(ma: &[f64], mb: &[f64]) -> Vec<f64> {
    let n = ma.len().min(mb.len());
    let ka = free_cumulants(&ma[..n]);
    (1..=n)
        .map(|order| {
            nc_partitions(order)
                .iter()
                .map(|p| {
                    let kp: f64 = block_sizes(p).iter().map(|&s| ka[s - 1]).product();
                    let mk: f64 = block_sizes(&kreweras(p)).iter().map(|&s| mb[s - 1]).product();
                    kp * mk
                })
                .sum()
        })
        .collect()
}

/// Moments `m₁ … m_k` of a finite atomic law.
pub fn atom_moments(atoms: &[(f64, f64)], k: usize) -> Vec<f64> {
    (1..=k)
        .map(|j| atoms.iter().map(|(x, w)| w * x.powi(j as i32)).sum())
        .collect()
}

/// Truncated product of power series given as coefficients of `z⁰ … z^{k−1}`.
pub fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let k = a.len().min(b.len());
    (0..k).map(|n| (0..=n).map(|i| a[i] * b[n - i]).sum()).collect()
}

/// `1 / a(z)` for `a₀ ≠ 0`.
pub fn series_inv(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    out[0] = 1.0 / a[0];
    for n in 1..a.len() {
        let s: f64 = (1..=n).map(|i| a[i] * out[n - i]).sum();
        out[n] = -s / a[0];
    }
    out
}

/// Compositional inverse of `f(z) = c₁z + c₂z² + …` by Lagrange inversion:
/// `[wⁿ] f⁻¹ = (1/n) [z^{n−1}] (z/f(z))ⁿ`. Returns coefficients of `w¹ … w^K`.
pub fn lagrange_inverse(c: &[f64]) -> Vec<f64> {
    let k = c.len();
    let g = series_inv(c);
    let mut power = vec![0.0; k];
    power[0] = 1.0;
    (1..=k)
        .map(|n| {
            power = series_mul(&power, &g);
            power[n - 1] / n as f64
        })
        .collect()
}

/// Standard normal quantile by bisection on `erfc`.
pub fn normal_quantile(p: f64) -> f64 {
    let cdf = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `E f(h)` for `h ∼ N(0, q)` by the trapezoid rule on `[−12√q, 12√q]`.
pub fn trapezoid_gaussian(f: impl Fn(f64) -> f64, q: f64) -> f64 {
    let s = q.sqrt();
    let steps = 200_000;
    let a = -12.0 * s;
    let h = 24.0 * s / steps as f64;
    let dens = |x: f64| (-x * x / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q).sqrt();
    let mut total = 0.0;
    for i in 0..=steps {
        let x = a + i as f64 * h;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        total += w * f(x) * dens(x);
    }
    total * h
}

pub fn naive_matmul(a: &freejac::Matrix, b: &freejac::Matrix) -> freejac::Matrix {
    freejac::Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
}
