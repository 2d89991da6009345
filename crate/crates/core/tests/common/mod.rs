//! Independent reference implementations used as test oracles. None of them
//! call into the library's numerics.

#![allow(dead_code)]

use num_complex::Complex64;
use transmon_readout::discriminate::FnnModel;

/// Cascade rate equations `dp/dt = A p` integrated with classic RK4 at a
/// fixed step no larger than `h_max`.
pub fn cascade_rk4(lifetimes: [f64; 3], p0: [f64; 4], t: f64, h_max: f64) -> [f64; 4] {
    let g = lifetimes.map(|tau| 1.0 / tau);
    let deriv = |p: &[f64; 4]| {
        [
            g[0] * p[1],
            -g[0] * p[1] + g[1] * p[2],
            -g[1] * p[2] + g[2] * p[3],
            -g[2] * p[3],
        ]
    };
    let steps = (t / h_max).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut p = p0;
    let axpy = |p: &[f64; 4], k: &[f64; 4], s: f64| {
        [
            p[0] + s * k[0],
            p[1] + s * k[1],
            p[2] + s * k[2],
            p[3] + s * k[3],
        ]
    };
    for _ in 0..steps {
        let k1 = deriv(&p);
        let k2 = deriv(&axpy(&p, &k1, h / 2.0));
        let k3 = deriv(&axpy(&p, &k2, h / 2.0));
        let k4 = deriv(&axpy(&p, &k3, h));
        for i in 0..4 {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    p
}

/// Notch response written out from the Lorentzian definition.
pub fn notch_s21(omega_r: f64, kappa: f64, ratio: f64, pull_mhz: f64, omega_d: f64) -> Complex64 {
    let x = 2.0 * ((omega_d - omega_r) * 1000.0 - pull_mhz) / kappa;
    // 1 - r / (1 + i x) = 1 - r (1 - i x) / (1 + x^2)
    let d = 1.0 + x * x;
    Complex64::new(1.0 - ratio / d, ratio * x / d)
}

/// Mean cross-entropy through an explicit forward pass over the model's
/// layers (SELU hidden layers, softmax output).
pub fn cross_entropy(model: &FnnModel, batch: &[([f64; 4], usize)]) -> f64 {
    const L: f64 = 1.0507009873554805;
    const A: f64 = 1.6732632423543773;
    let mut total = 0.0;
    for (x, c) in batch {
        let mut a: Vec<f64> = x.to_vec();
        for (k, layer) in model.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.outputs];
            for o in 0..layer.outputs {
                z[o] = layer.biases[o];
                for i in 0..layer.inputs {
                    z[o] += layer.weights[o * layer.inputs + i] * a[i];
                }
            }
            if k + 1 < model.layers.len() {
                for v in &mut z {
                    *v = if *v > 0.0 {
                        L * *v
                    } else {
                        L * A * (v.exp() - 1.0)
                    };
                }
            }
            a = z;
        }
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = a.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        total += log_sum - a[*c];
    }
    total / batch.len() as f64
}

/// Euclidean projection onto the simplex by exhaustive search over supports:
/// for every non-empty subset S, the candidate `x_i = v_i - t` on S (t fixed
/// by the sum constraint) is feasible iff all entries are >= 0; the nearest
/// feasible candidate wins.
pub fn simplex_projection_bruteforce(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let t = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; n];
        let mut ok = true;
        for &i in &support {
            x[i] = v[i] - t;
            if x[i] < -1e-15 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("some support is feasible").1
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `P(N(0, 1) > z)` by Simpson integration of the density over `[z, z + 12]`.
pub fn normal_tail(z: f64) -> f64 {
    let n = 200_000;
    let h = 12.0 / n as f64;
    let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(z) + f(z + 12.0);
    for k in 1..n {
        let x = z + k as f64 * h;
        s += if k % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}
