//! Published critical points used by the `table` subcommand.

#[derive(Debug, Clone, Copy)]
pub struct Reference {
    pub vc: f64,
    pub kappa_h: f64,
    pub omega: f64,
    pub b: f64,
    pub lambda_c: f64,
    pub r_c: f64,
    pub im_sigma: f64,
    /// Absent where the table omits the mode column.
    pub mode: Option<usize>,
}

const fn r(vc: f64, kappa_h: f64, b: f64, lambda_c: f64, r_c: f64, im_sigma: f64, mode: usize) -> Reference {
    Reference { vc, kappa_h, omega: 0.7, b, lambda_c, r_c, im_sigma, mode: Some(mode) }
}

const fn s(b: f64, kappa_h: f64, vc: f64, lambda_c: f64, r_c: f64) -> Reference {
    Reference { vc, kappa_h, omega: 0.7, b, lambda_c, r_c, im_sigma: 0.0, mode: None }
}

pub const II: [Reference; 10] = [
    r(20.0, 0.5, 0.43, 2.71, 264.94, 0.0, 1),
    r(20.0, 0.5, 0.55, 2.85, 233.50, 0.0, 1),
    r(20.0, 0.5, 0.62, 2.55, 212.78, 0.0, 1),
    r(20.0, 0.5, 0.63, 2.35, 365.23, 0.0, 2),
    r(20.0, 0.5, 0.631, 2.05, 493.65, 0.0, 2),
    r(20.0, 1.0, 0.43, 3.01, 260.20, 0.0, 1),
    r(20.0, 1.0, 0.7, 4.06, 516.15, 0.0, 1),
    r(20.0, 1.0, 0.74, 2.76, 411.67, 11.20, 1),
    r(20.0, 1.0, 0.76, 3.60, 329.16, 12.67, 1),
    r(20.0, 1.0, 0.77, 1.87, 516.51, 0.0, 2),
];

pub const III: [Reference; 20] = [
    r(10.0, 0.5, 0.42, 4.44, 135.52, 0.0, 1),
    r(10.0, 0.5, 0.54, 4.05, 152.36, 0.0, 1),
    r(10.0, 0.5, 0.59, 3.77, 201.41, 0.0, 1),
    r(10.0, 0.5, 0.62, 2.69, 557.75, 0.0, 2),
    r(10.0, 0.5, 0.63, 2.06, 1038.40, 0.0, 2),
    r(10.0, 1.0, 0.42, 3.57, 168.72, 0.0, 1),
    r(10.0, 1.0, 0.67, 2.63, 231.21, 0.0, 1),
    r(10.0, 1.0, 0.72, 2.51, 255.32, 0.0, 1),
    r(10.0, 1.0, 0.76, 2.35, 470.04, 0.0, 2),
    r(10.0, 1.0, 0.77, 2.01, 761.40, 0.0, 2),
    r(15.0, 0.5, 0.43, 3.37, 183.14, 0.0, 1),
    r(15.0, 0.5, 0.57, 3.06, 179.62, 0.0, 1),
    r(15.0, 0.5, 0.61, 2.90, 205.98, 0.0, 1),
    r(15.0, 0.5, 0.63, 2.57, 365.70, 0.0, 2),
    r(15.0, 0.5, 0.632, 1.85, 803.13, 0.0, 2),
    r(15.0, 1.0, 0.43, 2.93, 232.67, 0.0, 1),
    r(15.0, 1.0, 0.7, 1.94, 331.85, 0.0, 1),
    r(15.0, 1.0, 0.75, 2.06, 295.08, 0.0, 1),
    r(15.0, 1.0, 0.76, 2.15, 301.97, 0.0, 1),
    r(15.0, 1.0, 0.77, 1.88, 570.49, 0.0, 2),
];

pub const IV: [Reference; 18] = [
    s(0.5, 0.5, 10.0, 4.53, 142.38),
    s(0.5, 0.5, 15.0, 3.65, 176.99),
    s(0.5, 0.5, 20.0, 2.98, 244.3),
    s(0.6, 0.5, 10.0, 3.65, 239.72),
    s(0.6, 0.5, 15.0, 2.9, 185.66),
    s(0.6, 0.5, 20.0, 2.41, 218.09),
    s(0.625, 0.5, 10.0, 2.31, 761.29),
    s(0.625, 0.5, 15.0, 2.67, 333.89),
    s(0.625, 0.5, 20.0, 2.57, 230.25),
    s(0.6, 1.0, 10.0, 3.33, 205.24),
    s(0.6, 1.0, 15.0, 2.63, 294.26),
    s(0.6, 1.0, 20.0, 2.22, 448.35),
    s(0.7, 1.0, 10.0, 2.51, 242.06),
    s(0.7, 1.0, 15.0, 1.94, 331.85),
    s(0.7, 1.0, 20.0, 1.55, 516.151),
    s(0.765, 1.0, 10.0, 2.22, 586.55),
    s(0.765, 1.0, 15.0, 2.21, 337.0),
    s(0.765, 1.0, 20.0, 1.92, 338.87),
];
