//! The Airy function of the first kind on the real line, together with its
//! derivative and the running integrals
//!
//! ```text
//! Ai1(x) = ∫_{-∞}^x Ai(s) ds          Ai2(x) = ∫_{-∞}^x Ai1(s) ds = x·Ai1(x) − Ai'(x)
//! ```
//!
//! On `[-40, 12]` values come from Taylor series about nodes spaced 0.25
//! apart. The node table is seeded with the Maclaurin values at the origin,
//! with the large-argument expansion at −40 (the two oscillatory sweeps meet
//! at −20), and with the large-argument expansion at +12 (stepping back
//! towards the origin, the direction in which Ai is dominant). Outside the table the classical asymptotic
//! expansions are summed to their smallest term, which is far below
//! double-precision rounding there.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Ai(0) = 3^{-2/3} / Γ(2/3).
pub const AI_AT_ZERO: f64 = 0.355_028_053_887_817_239_26;
/// Ai'(0) = −3^{-1/3} / Γ(1/3).
pub const AI_PRIME_AT_ZERO: f64 = -0.258_819_403_792_806_798_41;
/// ∫_{-∞}^0 Ai.
const INTEGRAL_AT_ZERO: f64 = 2.0 / 3.0;

const NODE_SPACING: f64 = 0.25;
const TABLE_LEFT: f64 = -40.0;
const TABLE_RIGHT: f64 = 12.0;
const NODES_LEFT: usize = 160;
const NODES_RIGHT: usize = 48;
const ASYMPTOTIC_TERMS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValues {
    pub ai: f64,
    pub ai_prime: f64,
    /// ∫_{-∞}^x Ai(s) ds
    pub integral: f64,
}

pub fn airy_ai(x: f64) -> f64 {
    airy(x).ai
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy(x).ai_prime
}

/// ∫_{-∞}^x Ai(s) ds; tends to 0 at −∞ and 1 at +∞.
pub fn airy_ai_integral(x: f64) -> f64 {
    airy(x).integral
}

/// ∫_{-∞}^x ∫_{-∞}^s Ai(r) dr ds, using the identity `x·Ai1(x) − Ai'(x)`.
pub fn airy_ai_double_integral(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    let v = airy(x);
    x * v.integral - v.ai_prime
}

pub fn airy(x: f64) -> AiryValues {
    if x.is_nan() {
        return AiryValues { ai: f64::NAN, ai_prime: f64::NAN, integral: f64::NAN };
    }
    if x == f64::INFINITY {
        return AiryValues { ai: 0.0, ai_prime: 0.0, integral: 1.0 };
    }
    if x == f64::NEG_INFINITY {
        return AiryValues { ai: 0.0, ai_prime: 0.0, integral: 0.0 };
    }
    if x > TABLE_RIGHT {
        asymptotic_positive(x)
    } else if x < TABLE_LEFT {
        asymptotic_negative(x)
    } else {
        let table = node_table();
        let idx = ((x - TABLE_LEFT) / NODE_SPACING).round() as usize;
        let idx = idx.min(table.len() - 1);
        let x0 = node_position(idx);
        taylor_step(x0, table[idx], x - x0)
    }
}

fn node_position(idx: usize) -> f64 {
    TABLE_LEFT + idx as f64 * NODE_SPACING
}

/// Advances (Ai, Ai', Ai1) from `x0` by `h` with the Taylor series of the
/// Airy equation `y'' = x y`, whose coefficients obey
/// `a_{n+2} = (x0·a_n + a_{n-1}) / ((n+1)(n+2))`.
fn taylor_step(x0: f64, at: AiryValues, h: f64) -> AiryValues {
    if h == 0.0 {
        return at;
    }
    let (mut a_prev, mut a_n, mut a_next) = (0.0, at.ai, at.ai_prime);
    let mut hn = 1.0; // h^n
    let mut value = 0.0;
    let mut slope = 0.0;
    let mut integral = 0.0;
    let mut quiet = 0;
    for n in 0..120usize {
        let term = a_n * hn;
        value += term;
        integral += term * h / (n as f64 + 1.0);
        if n > 0 {
            slope += n as f64 * a_n * hn / h;
        }
        if term.abs() <= 1e-18 * value.abs().max(1e-300) && (a_next * hn * h).abs() <= 1e-18 * value.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        let a_new = (x0 * a_n + a_prev) / ((n as f64 + 1.0) * (n as f64 + 2.0));
        a_prev = a_n;
        a_n = a_next;
        a_next = a_new;
        hn *= h;
    }
    AiryValues { ai: value, ai_prime: slope, integral: at.integral + integral }
}

fn node_table() -> &'static [AiryValues] {
    static TABLE: OnceLock<Vec<AiryValues>> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

fn build_table() -> Vec<AiryValues> {
    let n = NODES_LEFT + NODES_RIGHT + 1;
    let mut table = vec![AiryValues { ai: 0.0, ai_prime: 0.0, integral: 0.0 }; n];
    table[NODES_LEFT] = AiryValues { ai: AI_AT_ZERO, ai_prime: AI_PRIME_AT_ZERO, integral: INTEGRAL_AT_ZERO };
    // The left half is filled from both ends and meets at −20.
    let meet = NODES_LEFT / 2;
    for i in (meet..NODES_LEFT).rev() {
        table[i] = taylor_step(node_position(i + 1), table[i + 1], -NODE_SPACING);
    }
    table[0] = asymptotic_negative(TABLE_LEFT);
    for i in 1..meet {
        table[i] = taylor_step(node_position(i - 1), table[i - 1], NODE_SPACING);
    }
    table[n - 1] = asymptotic_positive(TABLE_RIGHT);
    for i in (NODES_LEFT + 1..n - 1).rev() {
        table[i] = taylor_step(node_position(i + 1), table[i + 1], -NODE_SPACING);
    }
    table
}

/// Coefficients u_k of the large-argument expansions, with v_k for Ai'.
fn asymptotic_coefficients() -> &'static ([f64; ASYMPTOTIC_TERMS], [f64; ASYMPTOTIC_TERMS]) {
    static COEFFS: OnceLock<([f64; ASYMPTOTIC_TERMS], [f64; ASYMPTOTIC_TERMS])> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut u = [0.0; ASYMPTOTIC_TERMS];
        let mut v = [0.0; ASYMPTOTIC_TERMS];
        u[0] = 1.0;
        v[0] = 1.0;
        for k in 1..ASYMPTOTIC_TERMS {
            let kf = k as f64;
            u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
            v[k] = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k];
        }
        (u, v)
    })
}

/// Terms `c_k / ζ^k` up to (excluding) the first one that stops shrinking.
fn optimal_terms(c: &[f64], zeta: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    let mut last = f64::INFINITY;
    let mut power = 1.0;
    c.iter().enumerate().map_while(move |(k, ck)| {
        let term = ck * power;
        power /= zeta;
        if term.abs() >= last || term.abs() < 1e-20 {
            None
        } else {
            last = term.abs();
            Some((k, term))
        }
    })
}

fn asymptotic_positive(x: f64) -> AiryValues {
    let (u, v) = asymptotic_coefficients();
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let signed = |(k, t): (usize, f64)| if k % 2 == 0 { t } else { -t };
    let su: f64 = optimal_terms(u, zeta).map(signed).sum();
    let sv: f64 = optimal_terms(v, zeta).map(signed).sum();
    let pref = (-zeta).exp() / (2.0 * PI.sqrt());
    let ai = pref * x.powf(-0.25) * su;
    let ai_prime = -pref * x.powf(0.25) * sv;
    // ∫_x^∞ Ai by repeated integration by parts using Ai = Ai''/s.
    let tail = by_parts_series(x, ai, ai_prime, -1.0);
    AiryValues { ai, ai_prime, integral: 1.0 - tail }
}

fn asymptotic_negative(x: f64) -> AiryValues {
    let (u, v) = asymptotic_coefficients();
    let y = -x;
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let theta = zeta - PI / 4.0;
    // Even-index terms form P, odd-index terms form Q; signs alternate within each.
    let split = |c: &[f64]| {
        let (mut p, mut q) = (0.0, 0.0);
        for (k, t) in optimal_terms(c, zeta) {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * t;
            } else {
                q += sign * t;
            }
        }
        (p, q)
    };
    let (pu, qu) = split(u);
    let (pv, qv) = split(v);
    let (s, c) = theta.sin_cos();
    let ai = y.powf(-0.25) / PI.sqrt() * (c * pu + s * qu);
    let ai_prime = y.powf(0.25) / PI.sqrt() * (s * pv - c * qv);
    let integral = by_parts_series(x, ai, ai_prime, 1.0);
    AiryValues { ai, ai_prime, integral }
}

/// Sums `Σ_m c_m (Ai'·x^{-(3m+1)} + (3m+1)·Ai·x^{-(3m+2)})` with
/// `c_{m+1} = c_m (3m+1)(3m+2)`, times `sign`. With `sign = +1` this is
/// ∫_{-∞}^x Ai for large negative x; with `sign = −1`, ∫_x^∞ Ai for large
/// positive x.
fn by_parts_series(x: f64, ai: f64, ai_prime: f64, sign: f64) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    let mut last = f64::INFINITY;
    for m in 0..40 {
        let n = 3.0 * m as f64;
        let term = c * (ai_prime * x.powi(-(3 * m + 1)) + (n + 1.0) * ai * x.powi(-(3 * m + 2)));
        if term.abs() >= last {
            break;
        }
        total += term;
        last = term.abs();
        if term.abs() < 1e-20 * total.abs() {
            break;
        }
        c *= (n + 1.0) * (n + 2.0);
    }
    sign * total
}
