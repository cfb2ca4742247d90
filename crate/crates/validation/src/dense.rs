use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `S_x` in the `S_z` basis ordered `m = -S..=S`.
pub fn sx(s: u32) -> CMat {
    let sf = s as f64;
    let n = 2 * s as usize + 1;
    let mut m = CMat::zeros(n, n);
    for i in 0..n - 1 {
        let mm = i as f64 - sf;
        let v = 0.5 * (sf * (sf + 1.0) - mm * (mm + 1.0)).sqrt();
        m[(i, i + 1)] = c(v, 0.0);
        m[(i + 1, i)] = c(v, 0.0);
    }
    m
}

/// Scaling-and-squaring Taylor exponential.
pub fn expm(a: &CMat) -> CMat {
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * c(scale, 0.0);
    let n = a.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=24 {
        term = &term * &x * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `U_delta^{-t} U_0^t` for the quadratic top with one step `U_0 exp(-i delta S_x)`.
pub fn echo_operator(s: u32, alpha: f64, beta: f64, delta: f64, t: u32) -> CMat {
    let sf = s as f64;
    let n = 2 * s as usize + 1;
    let u0 = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        let j = (i as f64 - sf) / sf;
        Complex64::from_polar(1.0, -0.5 * sf * alpha * (j - beta).powi(2))
    }));
    let ud = &u0 * expm(&(sx(s) * c(0.0, -delta)));
    let mut p0 = CMat::identity(n, n);
    let mut pd = CMat::identity(n, n);
    for _ in 0..t {
        p0 = &u0 * p0;
        pd = &ud * pd;
    }
    pd.adjoint() * p0
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
