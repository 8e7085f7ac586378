//! Reference computations that do not go through the operator module.

use std::f64::consts::FRAC_PI_4;
use std::num::NonZeroUsize;

use fraclap_core::operator::normalization_constant;
use fraclap_core::profiles::smooth_transition;
use fraclap_core::{Grid, GridFunction};
use gauss_quad::legendre::GaussLegendre;

fn rule(points: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(points).expect("positive order"))
        .iter()
        .map(|(x, w)| (*x, *w))
        .collect()
}

/// `∫_a^b f` with an `m`-point Gauss rule on `panels` equal panels.
fn composite(nodes: &[(f64, f64)], a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        for &(x, w) in nodes {
            acc += w * f(mid + 0.5 * width * x);
        }
    }
    0.5 * width * acc
}

/// Value of `u` at lattice index `idx` (zero off the box).
fn lattice_value(u: &GridFunction, idx: [i64; 2]) -> f64 {
    let g = u.grid();
    let n = g.n() as i64;
    let inside = (0..g.dim()).all(|a| idx[a] >= 0 && idx[a] < n);
    if !inside {
        return 0.0;
    }
    u.values()[g.node([idx[0] as usize, idx[1] as usize])]
}

/// The discrete fractional Laplacian at every Ω node, evaluated node by node
/// from its defining quadrature: the ratio `φ = D/|z|²` is interpolated on
/// the lattice and integrated cell by cell against the weakly singular
/// weight, the central cell(s) use the Taylor term, the exterior of the
/// lattice the analytic tail.
pub fn brute_force_apply(u: &GridFunction, s: f64) -> Vec<f64> {
    let g = u.grid();
    let c = normalization_constant(g.dim(), s).expect("exponent in (0, 1)");
    g.omega_nodes()
        .iter()
        .map(|&id| match g.dim() {
            1 => c * node_1d(u, g, id, s),
            _ => c * node_2d(u, g, id, s),
        })
        .collect()
}

fn node_1d(u: &GridFunction, g: &Grid, id: usize, s: f64) -> f64 {
    let h = g.h();
    let m = (g.n() - 1) as i64;
    let i = g.index(id)[0] as i64;
    let ui = u.values()[id];
    let d = |k: i64| 2.0 * ui - lattice_value(u, [i + k, 0]) - lattice_value(u, [i - k, 0]);
    // φ at z = kh; φ(0) from the second difference
    let phi: Vec<f64> = (0..=m)
        .map(|k| if k == 0 { d(1) / (h * h) } else { d(k) / ((k * k) as f64 * h * h) })
        .collect();
    let a = 1.0 - 2.0 * s;
    let gl = rule(24);
    let mut acc = 0.0;
    for j in 0..m {
        let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
        let (left, right) = if j == 0 {
            // ∫_0^h (1 − z/h) z^a dz and ∫_0^h (z/h) z^a dz
            let p1 = h.powf(a + 1.0) / (a + 1.0);
            let p2 = h.powf(a + 1.0) / (a + 2.0);
            (p1 - p2, p2)
        } else {
            let l = composite(&gl, lo, hi, 1, |z| (hi - z) / h * z.powf(a));
            let r = composite(&gl, lo, hi, 1, |z| (z - lo) / h * z.powf(a));
            (l, r)
        };
        acc += phi[j as usize] * left + phi[j as usize + 1] * right;
    }
    // both half-lines of the interpolated part, then the exterior of [−mh, mh]
    let r = m as f64 * h;
    acc + ui * r.powf(-2.0 * s) / s
}

fn node_2d(u: &GridFunction, g: &Grid, id: usize, s: f64) -> f64 {
    let h = g.h();
    let m = (g.n() - 1) as i64;
    let [i0, i1] = g.index(id).map(|v| v as i64);
    let ui = u.values()[id];
    let d = |k0: i64, k1: i64| 2.0 * ui - lattice_value(u, [i0 + k0, i1 + k1]) - lattice_value(u, [i0 - k0, i1 - k1]);
    let phi = |k0: i64, k1: i64| d(k0, k1) / (((k0 * k0 + k1 * k1) as f64) * h * h);
    let gl = rule(12);
    // each cell split 2×2 before the tensor Gauss rule
    let cell = |a: i64, b: i64| -> f64 {
        let corners = [
            (a, b, phi(a, b)),
            (a + 1, b, phi(a + 1, b)),
            (a, b + 1, phi(a, b + 1)),
            (a + 1, b + 1, phi(a + 1, b + 1)),
        ];
        let (x0, y0) = (a as f64, b as f64);
        let integrand = |x: f64, y: f64| {
            let interp: f64 = corners
                .iter()
                .map(|&(cx, cy, v)| v * (1.0 - (x - cx as f64).abs()) * (1.0 - (y - cy as f64).abs()))
                .sum();
            interp * (x * x + y * y).powf(-s)
        };
        composite(&gl, y0, y0 + 1.0, 2, |y| composite(&gl, x0, x0 + 1.0, 2, |x| integrand(x, y)))
    };
    let mut far = 0.0;
    for b in -m..m {
        for a in -m..m {
            let central = (a == -1 || a == 0) && (b == -1 || b == 0);
            if !central {
                far += cell(a, b);
            }
        }
    }
    // unit-lattice integral scaled back: dz = h² dt, |z|^{-2s} = h^{-2s}|t|^{-2s}
    far *= h.powf(2.0 - 2.0 * s);
    // Taylor: D(z) ≈ −zᵀ∇²u z over [−h, h]², ∫ z_a² |z|^{-2-2s} = ½ ∫ |z|^{-2s}
    let neg_lap = (d(1, 0) + d(0, 1)) / (h * h);
    let gl40 = rule(40);
    let angular_in = composite(&gl40, 0.0, FRAC_PI_4, 1, |t| t.cos().powf(2.0 * s - 2.0));
    let square = 8.0 / (2.0 - 2.0 * s) * angular_in * h.powf(2.0 - 2.0 * s);
    let near = 0.5 * neg_lap * 0.5 * square;
    // exterior of the lattice square of half-width mh: D = 2u_i
    let angular_out = composite(&gl40, 0.0, FRAC_PI_4, 1, |t| t.cos().powf(2.0 * s));
    let exterior = 8.0 / (2.0 * s) * angular_out * (m as f64 * h).powf(-2.0 * s);
    0.5 * far + near + ui * exterior
}

/// `C_{1,s} ∫ (1 − w(y)) cos(ky) |y|^{-1-2s} dy`, the difference between
/// `(-Δ)^s` of `cos(kx) w(x)` at the origin and `|k|^{2s}`, for the wave
/// window `w` that equals one on `|y| ≤ flat` and vanishes beyond `support`.
pub fn window_correction(s: f64, k: f64, flat: f64, support: f64) -> f64 {
    let a = 1.0 + 2.0 * s;
    let end = 400.0 + support;
    let panels = ((end - flat) / 0.02).ceil() as usize;
    let body = composite(&rule(16), flat, end, panels, |y| {
        let w = smooth_transition((support - y) / (support - flat));
        (1.0 - w) * (k * y).cos() * y.powf(-a)
    });
    // ∫_end^∞ cos(ky) y^{-a} dy by two integrations by parts
    let tail = -(k * end).sin() * end.powf(-a) / k + a * (k * end).cos() * end.powf(-a - 1.0) / (k * k);
    2.0 * normalization_constant(1, s).expect("exponent in (0, 1)") * (body + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fraclap_core::{build_grid, FractionalLaplacian, FractionalParams, Region};

    #[test]
    fn brute_force_agrees_with_the_operator_in_one_dimension() {
        let g = build_grid(1, &[[-2.0, 2.0]], 33, Region::interval(-1.0, 1.0)).unwrap();
        let u = GridFunction::from_fn_on_omega(&g, |x| (1.0 - x[0] * x[0]).sqrt() + 0.3 * x[0]);
        for s in [0.2, 0.5, 0.85] {
            let op = FractionalLaplacian::new(&g, FractionalParams::new(1, s).unwrap()).unwrap();
            let reference = op.apply(&u).restrict_to_omega();
            let brute = brute_force_apply(&u, s);
            for (a, b) in reference.iter().zip(&brute) {
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn brute_force_agrees_with_the_operator_on_a_disc() {
        let g = build_grid(2, &[[-2.0, 2.0], [-2.0, 2.0]], 13, Region::ball(&[0.0, 0.0], 1.0)).unwrap();
        let u = GridFunction::from_fn_on_omega(&g, |x| 1.0 - x[0] * x[0] - 0.5 * x[1] * x[1] + 0.2 * x[0]);
        let s = 0.4;
        let op = FractionalLaplacian::new(&g, FractionalParams::new(2, s).unwrap()).unwrap();
        let reference = op.apply(&u).restrict_to_omega();
        let brute = brute_force_apply(&u, s);
        for (a, b) in reference.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn window_correction_vanishes_for_fast_waves() {
        let c1 = window_correction(0.5, 1.0, 3.0, 11.0).abs();
        let c8 = window_correction(0.5, 8.0, 3.0, 11.0).abs();
        assert!(c1 > 1e-4 && c1 < 1e-2, "{c1}");
        assert!(c8 < 1e-6, "{c8}");
    }
}
