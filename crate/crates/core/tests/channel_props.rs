use iasim_core::linalg::{self, complex_gaussian};
use iasim_core::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn complex_alpha() -> impl Strategy<Value = Complex64> {
    (0.0..0.99f64, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn exp_correlation_is_a_valid_correlation(alpha in complex_alpha(), n in 1usize..=8) {
        let rt = exp_correlation_matrix(alpha, n).unwrap();
        prop_assert!(linalg::hermitian_defect(rt.matrix()) < 1e-12);
        prop_assert!(rt.min_eigenvalue() > -1e-12);
        prop_assert!((rt.trace() - n as f64).abs() < 1e-10);
        for i in 0..n {
            prop_assert!((rt.matrix()[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn correlation_off_diagonal_follows_alpha_powers(alpha in complex_alpha()) {
        let rt = exp_correlation_matrix(alpha, 4).unwrap();
        prop_assert!((rt.matrix()[(0, 3)] - alpha.powi(3)).norm() < 1e-12);
        prop_assert!((rt.matrix()[(3, 0)] - alpha.conj().powi(3)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back(alpha in complex_alpha(), n in 1usize..=8) {
        let rt = exp_correlation_matrix(alpha, n).unwrap();
        let s = rt.sqrt();
        prop_assert!(linalg::frob(&(s * s - rt.matrix())) / linalg::frob(rt.matrix()) < 1e-10);
    }
}

#[test]
fn psd_sqrt_on_random_inputs() {
    let mut rng = SeedStream::new(3).trial(0);
    for k in 0..100 {
        let n = 1 + k % 6;
        let a = complex_gaussian(&mut rng, n, n + k % 3);
        let r = &a * a.adjoint();
        let s = linalg::psd_sqrt(&r).unwrap();
        let err = linalg::frob(&(&s * &s - &r)) / linalg::frob(&r);
        assert!(err < 1e-10, "input {k}: relative error {err:e}");
    }
}

#[test]
fn alpha_of_magnitude_one_is_rejected() {
    assert!(exp_correlation_matrix(Complex64::new(1.0, 0.0), 3).is_err());
    assert!(exp_correlation_matrix(Complex64::new(0.0, -1.2), 3).is_err());
}

fn vec_of(m: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

#[test]
fn true_channel_has_kronecker_covariance() {
    let sc = Scenario::symmetric(2, 2, 1).with_alpha(Complex64::new(0.5, 0.0)).with_beta(0.3);
    let sampler = ChannelSampler::new(&sc).unwrap();
    let draws = 20_000;
    let mut cov = DMatrix::<Complex64>::zeros(4, 4);
    for t in 0..draws {
        let ch = sampler.sample(&mut SeedStream::new(17).trial(t));
        let v = vec_of(ch.true_h.get(1, 0));
        cov += &v * v.adjoint();
    }
    cov /= Complex64::new(draws as f64, 0.0);
    let expected = sampler.correlation().matrix().transpose().kronecker(&linalg::identity(2));
    let err = linalg::frob(&(&cov - &expected)) / linalg::frob(&expected);
    assert!(err < 0.05, "relative covariance error {err}");
}

#[test]
fn full_error_decorrelates_truth_from_observation() {
    let sc = Scenario::symmetric(2, 2, 1).with_beta(1.0);
    let sampler = ChannelSampler::new(&sc).unwrap();
    let draws = 20_000;
    let mut cross = DMatrix::<Complex64>::zeros(4, 4);
    for t in 0..draws {
        let ch = sampler.sample(&mut SeedStream::new(18).trial(t));
        cross += vec_of(ch.true_h.get(0, 0)) * vec_of(ch.obs_h.get(0, 0)).adjoint();
    }
    cross /= Complex64::new(draws as f64, 0.0);
    // entries have standard deviation 1/sqrt(draws)
    assert!(cross.iter().all(|z| z.norm() < 5.0 / (draws as f64).sqrt()), "{cross}");
}

#[test]
fn channel_energy_matches_receive_antennas_times_trace() {
    let sc = Scenario::symmetric(2, 3, 1).with_alpha(Complex64::new(0.3, 0.4)).with_beta(0.2);
    let sampler = ChannelSampler::new(&sc).unwrap();
    let draws = 20_000u64;
    let total: f64 = (0..draws).map(|t| linalg::frob2(sampler.sample(&mut SeedStream::new(19).trial(t)).true_h.get(0, 1))).sum();
    let m = total / draws as f64;
    // E||H||_F^2 = Nr tr(Rt) = 9, standard error about 0.04
    assert!((m - 9.0).abs() < 0.2, "mean energy {m}");
}

#[test]
fn same_seed_same_channels() {
    let sc = Scenario::symmetric(3, 2, 1).with_alpha(Complex64::new(0.4, -0.1)).with_beta(0.1);
    let sampler = ChannelSampler::new(&sc).unwrap();
    for t in 0..20 {
        let a = sampler.sample(&mut SeedStream::new(5).trial(t));
        let b = sampler.sample(&mut SeedStream::new(5).trial(t));
        assert_eq!(a.true_h, b.true_h);
        assert_eq!(a.obs_h, b.obs_h);
        assert_eq!(a.error_h, b.error_h);
    }
    let other = sampler.sample(&mut SeedStream::new(6).trial(0));
    assert_ne!(other.obs_h, sampler.sample(&mut SeedStream::new(5).trial(0)).obs_h);
}

#[test]
fn zero_error_observes_the_truth_exactly() {
    let sc = Scenario::symmetric(3, 2, 1);
    let ch = ChannelSampler::new(&sc).unwrap().sample(&mut SeedStream::new(8).trial(0));
    assert_eq!(ch.true_h, ch.obs_h);
    let again = ch.with_beta(0.3).with_beta(0.0);
    assert_eq!(again.true_h, ch.obs_h);
}
