//! Independent reference evaluations shared by the integration tests.

#![allow(dead_code)]

/// Literal-form evaluation of the evolution equations with direct division
/// by powers of sinψ and plain exponentials.
pub mod literal {
    use std::f64::consts::PI;

    pub struct Fields {
        pub dx: Vec<f64>,
        pub ds: Vec<f64>,
        pub r_hat: f64,
    }

    pub fn rhs(x: &[f64], s: &[f64], n: usize) -> Fields {
        let h = PI / (n - 2) as f64;
        let mut r_num = 0.0;
        let mut r_den = 0.0;
        let mut pointwise = Vec::with_capacity(n);
        for k in 1..n - 1 {
            let psi = (k as f64 - 0.5) * h;
            let (sn, cs) = (psi.sin(), psi.cos());
            let cot = cs / sn;
            let x1 = (x[k + 1] - x[k - 1]) / (2.0 * h);
            let x2 = (x[k + 1] - 2.0 * x[k] + x[k - 1]) / (h * h);
            let s1 = (s[k + 1] - s[k - 1]) / (2.0 * h);
            let s2 = (s[k + 1] - 2.0 * s[k] + s[k - 1]) / (h * h);
            let w = s[k] * sn * sn;
            let w1 = sn * sn * s1 + 2.0 * sn * cs * s[k];
            let e4 = (-4.0 * w).exp();

            r_num += (x[k] + 3.0 * w).exp()
                * (e4 - 1.0 - 4.0 * sn * cs * w1 + sn * sn * (3.0 + (x1 + w1).powi(2)));
            r_den += (3.0 * x[k] + w).exp() * sn * sn;

            let diff = (2.0 * (w - x[k])).exp();
            let ax = x2 + 2.0 * cot * x1 - 2.0
                + 0.5 * (x1 * x1 + w1 * w1)
                + 3.0 * x1 * w1
                + (1.0 - e4) * (1.0 / (2.0 * sn * sn) + 1.0 + 2.0 * cot * w1);
            let p = x1 / sn;
            let q = sn * s1 + 2.0 * cs * s[k];
            let as_ =
                s2 + 6.0 * cot * s1 - 8.0 * s[k] - 3.0 / (2.0 * sn.powi(4)) * (1.0 - 4.0 * w - e4)
                    + (1.0 - e4) / (sn * sn)
                        * (1.0 - 2.0 * (cot * x1 + 2.0 * sn * cs * s1 + 4.0 * cs * cs * s[k]))
                    - 0.5 * (p * p + q * q + 6.0 * p * q);
            pointwise.push((diff * ax, diff * as_));
        }
        let r_hat = 2.0 * r_num / r_den;
        let mut dx = vec![0.0; n];
        let mut ds = vec![0.0; n];
        for (i, (ax, as_)) in pointwise.into_iter().enumerate() {
            dx[i + 1] = ax + r_hat / 3.0;
            ds[i + 1] = as_;
        }
        Fields { dx, ds, r_hat }
    }
}
