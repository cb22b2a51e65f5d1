#![allow(dead_code)]

//! Independent reference implementations used only by the tests.

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimizes Σ r_i·exp(−A·p_i) over the simplex by projected gradient with
/// Armijo backtracking and step doubling.
pub fn caching_by_projected_gradient(request: &[f64], a: f64) -> Vec<f64> {
    let n = request.len();
    // Shifted by 1/n so the objective stays O(1) for large A; the minimizer is unchanged.
    let c = 1.0 / n as f64;
    let obj = |p: &[f64]| -> f64 { request.iter().zip(p).map(|(r, x)| r * (-a * (x - c)).exp()).sum() };
    let mut p = vec![1.0 / n as f64; n];
    let mut f = obj(&p);
    let mut step = 1.0;
    for _ in 0..200_000 {
        let grad: Vec<f64> = request.iter().zip(&p).map(|(r, x)| -a * r * (-a * (x - c)).exp()).collect();
        let mut moved = false;
        let mut next = p.clone();
        let mut f_next = f;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let q = project_simplex(&trial);
            let decrease: f64 = grad.iter().zip(q.iter().zip(&p)).map(|(g, (y, x))| g * (y - x)).sum();
            let dist2: f64 = q.iter().zip(&p).map(|(y, x)| (y - x) * (y - x)).sum();
            let fq = obj(&q);
            if fq <= f + decrease + dist2 / (2.0 * step) {
                next = q;
                f_next = fq;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        let change = next.iter().zip(&p).map(|(y, x)| (y - x).abs()).fold(0.0, f64::max);
        p = next;
        f = f_next;
        step *= 2.0;
        if change < 1e-13 {
            break;
        }
    }
    p
}

/// Zipf pmf computed from scratch.
pub fn zipf_pmf(n: usize, beta: f64) -> Vec<f64> {
    let w: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-beta)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Ei(x) for x < 0 by its power series γ + ln|x| + Σ x^k/(k·k!).
pub fn ei_series(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    EULER + x.abs().ln() + sum
}

/// Signs of the nonzero successive differences.
pub fn difference_signs(values: &[f64]) -> Vec<i8> {
    values
        .windows(2)
        .filter(|w| w[1] != w[0])
        .map(|w| if w[1] > w[0] { 1 } else { -1 })
        .collect()
}

/// True when the sequence rises and then falls, switching direction once.
pub fn rises_then_falls(values: &[f64]) -> bool {
    let s = difference_signs(values);
    let changes = s.windows(2).filter(|w| w[0] != w[1]).count();
    changes == 1 && s.first() == Some(&1)
}
