//! Classical fixed-step fourth-order Runge–Kutta for small real systems.

/// One RK4 step of `dy/dx = f(x, y)` from `x` with step `h`.
pub fn rk4_step<const N: usize, E>(
    f: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    x: f64,
    y: &[f64; N],
    h: f64,
) -> Result<[f64; N], E> {
    let shift = |base: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        std::array::from_fn(|i| base[i] + s * k[i])
    };
    let k1 = f(x, y)?;
    let k2 = f(x + 0.5 * h, &shift(y, &k1, 0.5 * h))?;
    let k3 = f(x + 0.5 * h, &shift(y, &k2, 0.5 * h))?;
    let k4 = f(x + h, &shift(y, &k3, h))?;
    Ok(std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}
