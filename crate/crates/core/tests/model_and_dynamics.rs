use std::f64::consts::PI;

use fchlab::analyticity::{decay_series, es_series, fourier_decay_fit, DECAY_FLOOR};
use fchlab::evolution::{integrate, SolverConfig};
use fchlab::model::{ch_reduction_check, rhs, rhs_direct, rhs_nonlocal, FchParams, Form};
use fchlab::picard::{bound_check, induction_bound, lifespan_from_norm, picard_run};
use fchlab::spectral::{random_field, GridSpec, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(2.0 * PI, n).unwrap()
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm()
}

/// `Σ_{m≠0} a e^{-σ|k_m|} e^{i k_m x}` over the retained modes.
fn exponential_field(g: GridSpec, a: f64, sigma: f64) -> SpectralField {
    let coeffs = (0..g.n())
        .map(|i| {
            if i != 0 && g.is_retained(i) && i != g.nyquist_index() {
                Complex64::new(a * (-sigma * g.wavenumber(i).abs()).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SpectralField::from_coeffs(g, coeffs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn direct_and_nonlocal_forms_agree(seed in 0u64..1000, nu in 1.0f64..2.5, amp in 0.01f64..1.0) {
        let g = grid(64);
        let u = random_field(g, 2.0, seed, 0).scale(amp);
        let a = rhs_direct(&u, &FchParams::new(nu, Form::Direct11, g).unwrap()).unwrap();
        let b = rhs_nonlocal(&u, &FchParams::new(nu, Form::Nonlocal31, g).unwrap()).unwrap();
        prop_assert!(rel(&a, &b) < 1e-11);
    }

    #[test]
    fn unit_order_reduces_to_local_equation(seed in 0u64..1000, amp in 0.01f64..1.0) {
        let u = random_field(grid(64), 2.0, seed, 1).scale(amp);
        prop_assert!(ch_reduction_check(&u).unwrap() < 1e-11);
    }

    #[test]
    fn every_form_conserves_the_mean(seed in 0u64..1000, nu in 1.0f64..2.0) {
        let g = grid(32);
        let u = random_field(g, 3.0, seed, 2).scale(0.2);
        for form in Form::ALL {
            let r = rhs(&u, &FchParams::new(nu, form, g).unwrap()).unwrap();
            prop_assert!(r.mean().abs() < 1e-13 * (1.0 + r.l2_norm()));
        }
    }

    #[test]
    fn decay_fit_is_scale_equivariant(sigma in 0.05f64..0.6, a in 1e-3f64..10.0, c in 1e-4f64..1e4) {
        let g = grid(128);
        let u = exponential_field(g, a, sigma);
        let base = fourier_decay_fit(&u, DECAY_FLOOR).unwrap();
        let scaled = fourier_decay_fit(&u.scale(c), DECAY_FLOOR).unwrap();
        prop_assert!((base.slope - sigma).abs() < 1e-8);
        prop_assert!((scaled.slope - base.slope).abs() < 1e-8);
        prop_assert!((scaled.a / (c * base.a) - 1.0).abs() < 1e-8);
        prop_assert_eq!(scaled.modes_used, base.modes_used);
    }

    #[test]
    fn lifespan_bound_is_consistent(norm in 1e-4f64..10.0, c in 0.1f64..10.0) {
        let t = lifespan_from_norm(norm, c).unwrap();
        prop_assert!(t <= 1.0 / c && t <= 1.0 / (8.0 * c * norm) * (1.0 + 1e-15));
        // at the lifespan the bound is at most 4‖u₀‖
        let b = induction_bound(norm, c, t).unwrap();
        prop_assert!(b >= 2.0 * norm && b <= 4.0 * norm * (1.0 + 1e-12));
        prop_assert!(induction_bound(norm, c, 1.0 / (4.0 * c * norm) * (1.0 + 1e-12)).is_none());
    }
}

#[test]
fn integration_is_deterministic_and_mean_preserving() {
    let g = grid(64);
    let u0 = random_field(g, 3.0, 11, 0).scale(0.1);
    let p = FchParams::new(1.4, Form::Nonlocal31, g).unwrap();
    let cfg = SolverConfig::new(1e-2, 0.2);
    let a = integrate(&u0, &cfg, &p).unwrap();
    let b = integrate(&u0, &cfg, &p).unwrap();
    assert_eq!(a.final_field().unwrap().values(), b.final_field().unwrap().values());
    assert!(a.mass_drift() < 1e-13);
    assert_eq!(a.final_time(), Some(0.2));
}

#[test]
fn picard_iterates_contract_and_respect_the_bound() {
    let g = grid(32);
    let u0 = SpectralField::from_fn(g, |x| 0.05 * x.cos()).dealias();
    let p = FchParams::new(1.4, Form::Simplified32, g).unwrap();
    let c_hat = 3.0;
    let norm = fchlab::picard::lifespan(&u0, c_hat, 1.4).unwrap();
    let trace = picard_run(&u0, 6, norm.t, &p, 20).unwrap();
    let sups = trace.sup_w_n1();
    assert!(sups.windows(2).skip(2).all(|w| w[1] < w[0]));
    assert!(bound_check(&trace, c_hat, norm.u0_norm).unwrap().passed());
    assert!(trace.w_nn.len() == 3);
}

#[test]
fn analyticity_series_on_a_decaying_field() {
    let g = grid(128);
    let fields = vec![exponential_field(g, 1.0, 0.4), exponential_field(g, 1.0, 0.3)];
    let times = [0.0, 0.1];
    let fits = decay_series(&times, &fields, DECAY_FLOOR).unwrap();
    let sigmas: Vec<f64> = fits.iter().map(|d| d.fit.unwrap().sigma.unwrap()).collect();
    assert!((sigmas[0] - 0.4).abs() < 1e-8 && (sigmas[1] - 0.3).abs() < 1e-8);
    let es = es_series(&times, &fields, &[0.2, 0.4], 20, 1.4).unwrap();
    assert_eq!(es.len(), 4);
    for pair in es.chunks(2) {
        assert_eq!(pair[0].t, pair[1].t);
        assert!(pair[0].value <= pair[1].value);
    }
}
