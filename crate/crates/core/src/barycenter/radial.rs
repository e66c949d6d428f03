//! The spherical average of the Busemann kernel against a visual measure.
//!
//! For `y` at distance `r` from `z`, `g(r) = ∫ B_z(y, θ) dν_z(θ)`. With the
//! polar angle `φ` between `θ` and the direction of `y` seen from `z`,
//! `s = sin^2(φ/2)`, `c = cos^2(φ/2)` and `E = exp(-2r)`:
//!
//! ```text
//! g(r)   = r + < log(s + E c) >
//! g'(r)  =     < (s - E c) / (s + E c) >
//! g''(r) =     < 4 E s c / (s + E c)^2 >
//! ```
//!
//! where `<.>` is the average over `[0, π]` with weight `sin^{n-2} φ`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Value and first two derivatives of the profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

const GRID_STEP: f64 = 0.05;
/// Beyond this radius `g(r) = r + C_n` to double precision.
const GRID_MAX: f64 = 40.0;
const QUAD_TOL: f64 = 1e-16;

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, QUAD_TOL).integral
}

/// Break points that resolve the boundary layer of width `e^{-r}` at `φ = 0`.
fn breakpoints(r: f64) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let mut pts = vec![0.0];
    let mut b = (-r).exp();
    while b < 0.5 * pi {
        pts.push(b);
        b *= 4.0;
    }
    pts.push(pi);
    pts
}

fn weighted_average(n: usize, r: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let e = (-2.0 * r).exp();
    let pow = n as i32 - 2;
    let pts = breakpoints(r);
    let mut num = 0.0;
    let mut den = 0.0;
    for w in pts.windows(2) {
        num += integrate(
            |phi| {
                let (sh, ch) = (0.5 * phi).sin_cos();
                f(sh * sh, ch * ch, e) * phi.sin().powi(pow)
            },
            w[0],
            w[1],
        );
        den += integrate(|phi| phi.sin().powi(pow), w[0], w[1]);
    }
    num / den
}

/// The profile by direct quadrature (no cache).
pub fn radial_profile_quadrature(n: usize, r: f64) -> Profile {
    assert!(n >= 2, "dimension must be at least 2");
    let r = r.abs();
    if r == 0.0 {
        return Profile {
            g: 0.0,
            dg: 0.0,
            d2g: weighted_average(n, 0.0, |s, c, _| 4.0 * s * c),
        };
    }
    let g = r + weighted_average(n, r, |s, c, e| (s + e * c).ln());
    let dg = weighted_average(n, r, |s, c, e| (s - e * c) / (s + e * c));
    let d2g = weighted_average(n, r, |s, c, e| {
        let q = s + e * c;
        4.0 * e * s * c / (q * q)
    });
    Profile { g, dg, d2g }
}

pub(crate) struct Table {
    nodes: Vec<Profile>,
    /// `lim g(r) - r`.
    offset: f64,
}

impl Table {
    fn build(n: usize) -> Table {
        let count = (GRID_MAX / GRID_STEP).round() as usize;
        let nodes: Vec<Profile> = (0..=count)
            .map(|i| radial_profile_quadrature(n, i as f64 * GRID_STEP))
            .collect();
        let last = nodes[count];
        Table {
            offset: last.g - GRID_MAX,
            nodes,
        }
    }

    pub(crate) fn eval(&self, r: f64) -> Profile {
        let r = r.abs();
        if r >= GRID_MAX {
            return Profile {
                g: r + self.offset,
                dg: 1.0,
                d2g: 0.0,
            };
        }
        let i = ((r / GRID_STEP) as usize).min(self.nodes.len() - 2);
        let h = GRID_STEP;
        let t = (r - i as f64 * h) / h;
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let basis = hermite5(t);
        let coef = [a.g, h * a.dg, h * h * a.d2g, h * h * b.d2g, h * b.dg, b.g];
        let mut out = [0.0; 3];
        for (c, hb) in coef.iter().zip(basis.iter()) {
            for k in 0..3 {
                out[k] += c * hb[k];
            }
        }
        Profile {
            g: out[0],
            dg: out[1] / h,
            // interpolation ripple can dip below zero where g'' ~ 0
            d2g: (out[2] / (h * h)).max(0.0),
        }
    }
}

/// Quintic Hermite basis on `[0, 1]` with value, first and second
/// derivative; order: value@0, slope@0, curvature@0, curvature@1, slope@1,
/// value@1.
fn hermite5(t: f64) -> [[f64; 3]; 6] {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    [
        [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
        ],
        [
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
        ],
        [
            0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
            0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
        ],
        [
            0.5 * (t3 - 2.0 * t4 + t5),
            0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
            0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
        ],
        [
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
        ],
        [
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
        ],
    ]
}

pub(crate) fn table(n: usize) -> &'static Table {
    static TABLES: OnceLock<Mutex<HashMap<usize, &'static Table>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = tables.lock().expect("radial table lock");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(Table::build(n))))
}

/// Cached profile with derivatives, interpolated from a quintic Hermite
/// table built on first use for each dimension.
pub fn radial_profile_full(n: usize, r: f64) -> Profile {
    assert!(n >= 2, "dimension must be at least 2");
    table(n).eval(r)
}

/// `(g(r), g'(r))` for visual measures on `dH^n`.
pub fn radial_profile(n: usize, r: f64) -> (f64, f64) {
    let p = radial_profile_full(n, r);
    (p.g, p.dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn center_is_critical() {
        for n in 2..=5 {
            let p = radial_profile_full(n, 0.0);
            assert_eq!(p.g, 0.0);
            assert_eq!(p.dg, 0.0);
            assert!(p.d2g > 0.0);
        }
    }

    #[test]
    fn plane_closed_form() {
        for i in 0..=200 {
            let r = 0.1 * i as f64;
            let q = radial_profile_quadrature(2, r);
            assert_abs_diff_eq!(q.g, 2.0 * (0.5 * r).cosh().ln(), epsilon = 1e-12);
            assert_abs_diff_eq!(q.dg, (0.5 * r).tanh(), epsilon = 1e-12);
        }
    }

    #[test]
    fn space_closed_form() {
        // n = 3: g = r coth r - 1
        for i in 1..=100 {
            let r = 0.15 * i as f64;
            let q = radial_profile_quadrature(3, r);
            assert_abs_diff_eq!(q.g, r / r.tanh() - 1.0, epsilon = 1e-12);
            let dg = 1.0 / r.tanh() - r / r.sinh().powi(2);
            assert_abs_diff_eq!(q.dg, dg, epsilon = 1e-12);
        }
    }

    #[test]
    fn cache_matches_quadrature() {
        for n in [2, 3, 4] {
            for i in 0..60 {
                let r = 0.3371 * i as f64 + 0.0123;
                let (c, q) = (radial_profile_full(n, r), radial_profile_quadrature(n, r));
                assert_abs_diff_eq!(c.g, q.g, epsilon = 1e-11);
                assert_abs_diff_eq!(c.dg, q.dg, epsilon = 1e-10);
                assert_abs_diff_eq!(c.d2g, q.d2g, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn convex_increasing_below_one() {
        let mut prev = radial_profile_full(4, 0.0);
        for i in 1..500 {
            let p = radial_profile_full(4, 0.1 * i as f64);
            assert!(p.g > prev.g);
            assert!(p.dg >= prev.dg - 1e-13 && p.dg < 1.0 + 1e-13);
            assert!(p.d2g >= 0.0);
            prev = p;
        }
        assert!(radial_profile(4, 60.0).1 == 1.0);
    }
}
