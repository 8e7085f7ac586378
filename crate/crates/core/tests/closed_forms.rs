use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;

use fraclap_core::profiles::smooth_transition;
use fraclap_core::*;
use gauss_quad::legendre::GaussLegendre;

fn interval_grid(n: usize) -> std::sync::Arc<Grid> {
    build_grid(1, &[[-2.0, 2.0]], n, Region::interval(-1.0, 1.0)).unwrap()
}

fn torsion_error(u: &GridFunction, s: f64, inner: f64) -> f64 {
    let g = u.grid();
    g.omega_nodes()
        .iter()
        .filter(|&&id| g.point(id)[..g.dim()].iter().map(|x| x * x).sum::<f64>().sqrt() <= inner)
        .map(|&id| {
            let x = &g.point(id)[..g.dim()];
            let exact = torsion_solution(x, &vec![0.0; g.dim()], 1.0, s);
            (u.values()[id] - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

#[test]
fn getoor_profile_in_one_dimension() {
    for s in [0.3, 0.5, 0.7] {
        let params = FractionalParams::new(1, s).unwrap();
        let errs: Vec<f64> = [129, 257, 513]
            .iter()
            .map(|&n| {
                let g = interval_grid(n);
                let f = Profile::Constant { value: 1.0 }.sample_on_omega(&g);
                torsion_error(&solve_dirichlet(&f, &params, &g).unwrap(), s, 0.5)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "s={s}: {errs:?}");
        assert!(errs[2] < 0.02, "s={s}: {errs:?}");
    }
}

#[test]
fn getoor_profile_on_the_disc() {
    let s = 0.5;
    let params = FractionalParams::new(2, s).unwrap();
    let errs: Vec<f64> = [33, 49, 65]
        .iter()
        .map(|&n| {
            let g = build_grid(2, &[[-2.0, 2.0], [-2.0, 2.0]], n, Region::ball(&[0.0, 0.0], 1.0)).unwrap();
            let f = Profile::Constant { value: 1.0 }.sample_on_omega(&g);
            torsion_error(&solve_dirichlet(&f, &params, &g).unwrap(), s, 0.5)
        })
        .collect();
    // the staircase boundary makes the error oscillate rather than decrease
    assert!(errs.iter().all(|&e| e < 0.01), "{errs:?}");
}

#[test]
fn half_laplacian_of_semicircle_is_one_inside() {
    let params = FractionalParams::new(1, 0.5).unwrap();
    let errs: Vec<f64> = [129, 257, 513]
        .iter()
        .map(|&n| {
            let g = interval_grid(n);
            let u = GridFunction::from_fn_on_omega(&g, |x| (1.0 - x[0] * x[0]).max(0.0).sqrt());
            let lu = apply_fractional_laplacian(&u, &params).unwrap();
            g.nodes_in(&Region::interval(-0.5, 0.5))
                .iter()
                .map(|&id| (lu.values()[id] - 1.0).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 0.01, "{errs:?}");
}

#[test]
fn potential_norm_of_semicircle_approaches_the_closed_form() {
    let params = FractionalParams::new(1, 0.5).unwrap();
    let errs: Vec<f64> = [129, 257, 513]
        .iter()
        .map(|&n| {
            let g = interval_grid(n);
            let u = GridFunction::from_fn_on_omega(&g, |x| (1.0 - x[0] * x[0]).max(0.0).sqrt());
            let lu = apply_fractional_laplacian(&u, &params).unwrap();
            (lp_norm(&lu, 2.0, &Scope::Omega) - 2f64.sqrt()).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] / 2f64.sqrt() < 0.05, "{errs:?}");
    let g = interval_grid(513);
    let u = GridFunction::from_fn_on_omega(&g, |x| (1.0 - x[0] * x[0]).max(0.0).sqrt());
    let inside = lp_norm(&apply_fractional_laplacian(&u, &params).unwrap(), 2.0, &Scope::Omega);
    let total = potential_norm(&u, &params, 2.0).unwrap();
    assert!(total > lp_norm(&u, 2.0, &Scope::Box) + inside - 1e-12);
    let doubled = potential_norm(&u.scale(2.0), &params, 2.0).unwrap();
    assert!((doubled - 2.0 * total).abs() < 1e-12 * total);
}

/// `C ∫ (1 − w(y)) cos(ky) |y|^{-1-2s} dy` for the wave window `w`.
fn window_correction(s: f64, k: f64, flat: f64, support: f64) -> f64 {
    let a = 1.0 + 2.0 * s;
    let rule = GaussLegendre::new(NonZeroUsize::new(16).unwrap());
    let end = 400.0;
    let panels = ((end - flat) / 0.02) as usize;
    let width = (end - flat) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = flat + p as f64 * width;
        for (x, w) in rule.iter() {
            let y = lo + 0.5 * width * (x + 1.0);
            let win = smooth_transition((support - y) / (support - flat));
            acc += 0.5 * width * w * (1.0 - win) * (k * y).cos() * y.powf(-a);
        }
    }
    // ∫_end^∞ cos(ky) y^{-a} dy, two integrations by parts
    let tail = -(k * end).sin() * end.powf(-a) / k + a * (k * end).cos() * end.powf(-a - 1.0) / (k * k);
    2.0 * normalization_constant(1, s).unwrap() * (acc + tail)
}

#[test]
fn windowed_wave_reproduces_the_symbol() {
    let (flat, support) = (3.0, 11.0);
    let s = 0.5;
    let params = FractionalParams::new(1, s).unwrap();
    for k in [1.0f64, 2.0, 4.0] {
        let symbol = k.powf(2.0 * s);
        let exact = symbol + window_correction(s, k, flat, support);
        let mut errs = Vec::new();
        let mut last = 0.0;
        for n in [1025usize, 2049, 4097] {
            let g = build_grid(1, &[[-24.0, 24.0]], n, Region::interval(-12.0, 12.0)).unwrap();
            let u = Profile::Wave { k, phase: FRAC_PI_2, flat, support }.sample_on_omega(&g);
            last = apply_fractional_laplacian(&u, &params).unwrap().values()[n / 2];
            errs.push((last - exact).abs());
        }
        assert!((last - symbol).abs() / symbol < 0.01, "k={k}");
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 1.5, "k={k}: {errs:?}");
    }
}

#[test]
fn solution_vanishes_like_rho_to_the_s() {
    for s in [0.3, 0.5, 0.7] {
        let params = FractionalParams::new(1, s).unwrap();
        let g = interval_grid(513);
        let f = Profile::Constant { value: 1.0 }.sample_on_omega(&g);
        let u = solve_dirichlet(&f, &params, &g).unwrap();
        let k = torsion_constant(1, s);
        for &id in g.omega_nodes() {
            let rho = g.rho()[id];
            if rho < 0.1 {
                let ratio = u.values()[id] / (k * rho.powf(s));
                assert!((0.5..=2.0).contains(&ratio), "s={s} rho={rho}: {ratio}");
            }
        }
    }
}
