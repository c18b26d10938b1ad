#![allow(dead_code)]

use std::f64::consts::PI;

use bioconv::numkernel::gauss_legendre_on;

/// Discrete-ordinates source iteration for the slab in optical depth, with a
/// linear source across each cell.
pub fn discrete_ordinates(omega: f64, kappa: f64, b: f64, cells: usize, n_mu: usize) -> (Vec<f64>, Vec<f64>) {
    let (mu, w) = gauss_legendre_on(n_mu, 0.0, 1.0).unwrap();
    let h = kappa / cells as f64;
    let tau: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
    let mut ups = vec![0.0; cells + 1];
    for _ in 0..2000 {
        let s: Vec<f64> = ups.iter().map(|u| omega * u / (4.0 * PI)).collect();
        let mut next = vec![0.0; cells + 1];
        for (m, wm) in mu.iter().zip(&w) {
            let a = h / m;
            let e = (-a).exp();
            let ue = 1.0 - (1.0 + a) * e;
            let near = ue / a;
            let far = (1.0 - e) - ue / a;
            let mut down = vec![0.0; cells + 1];
            down[0] = b / PI;
            for i in 0..cells {
                down[i + 1] = down[i] * e + s[i] * near + s[i + 1] * far;
            }
            let mut up = vec![0.0; cells + 1];
            for i in (0..cells).rev() {
                up[i] = up[i + 1] * e + s[i + 1] * near + s[i] * far;
            }
            for i in 0..=cells {
                next[i] += 2.0 * PI * wm * (down[i] + up[i]);
            }
        }
        let change = next.iter().zip(&ups).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ups = next;
        if change < 1e-14 {
            break;
        }
    }
    (tau, ups)
}

