use std::f64::consts::PI;

use proptest::prelude::*;
use superrad_core::collective::{enumerate_basis, BasisIndex, CouplingConfig};
use superrad_core::density::DensityOperator;
use superrad_core::dynamics::{classify, dark_fraction, intensity_at, ladder_populations, RadianceTag, DEFAULT_EPSILON};
use superrad_core::fock::FockSpace;
use superrad_core::oracle::{evolve_reduced, OracleOptions};
use superrad_core::states::{fock_representation, moments_of, mrl_expectations, Mixture, StateSpec};
use superrad_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn small_c64() -> impl Strategy<Value = C64> {
    (-0.25f64..0.25, -0.25f64..0.25).prop_map(|(a, b)| c(a, b))
}

fn config(max_n: usize) -> impl Strategy<Value = CouplingConfig> {
    prop::collection::vec(0.2f64..3.0, 2..=max_n).prop_map(|g| CouplingConfig::new(g, 10.0, 0.0).unwrap())
}

/// Normalized superposition over basis states with at most `max_m` quanta.
fn dicke_superposition(n: usize, max_m: usize, picks: &[(usize, f64, f64)]) -> StateSpec {
    let basis = enumerate_basis(n, max_m).unwrap();
    let mut terms: Vec<(C64, BasisIndex)> = picks.iter().map(|&(i, a, b)| (c(a, b), basis[i % basis.len()].clone())).collect();
    terms.sort_by(|x, y| x.1.cmp(&y.1));
    terms.dedup_by(|x, y| x.1 == y.1);
    let norm = terms.iter().map(|t| t.0.norm_sqr()).sum::<f64>().sqrt();
    for t in &mut terms {
        t.0 /= norm;
    }
    StateSpec::DickeSuperposition { terms }
}

fn picks() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0usize..1000, 0.1f64..1.0, -1.0f64..1.0), 1..5)
}

fn dense_moments(spec: &StateSpec, cfg: &CouplingConfig, cap: usize) -> superrad_core::states::ModeMoments {
    let rep = fock_representation(spec, cfg, cap, 1e-11).unwrap();
    rep.state.density().mode_moments(0, cfg.n_modes())
}

fn assert_moments_close(spec: &StateSpec, cfg: &CouplingConfig, cap: usize) -> Result<(), TestCaseError> {
    let a = moments_of(spec, cfg).unwrap();
    let b = dense_moments(spec, cfg, cap);
    let dm = (&a.means - &b.means).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ds = (&a.second - &b.second).iter().map(|z| z.norm()).fold(0.0, f64::max);
    prop_assert!(dm < 1e-9 && ds < 1e-9, "{} deviates: means {dm:e}, second {ds:e}", spec.family_name());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dicke_moments_match_fock(cfg in config(3), p in picks()) {
        let spec = dicke_superposition(cfg.n_modes(), 3, &p);
        assert_moments_close(&spec, &cfg, 3)?;
    }

    #[test]
    fn gaussian_moments_match_fock(g in prop::collection::vec(0.2f64..3.0, 2..=2), a in small_c64(), b in small_c64(), x in small_c64(), y in small_c64()) {
        let cfg = CouplingConfig::new(g, 10.0, 0.0).unwrap();
        let spec = StateSpec::ProductSqueezedCoherent { alpha: vec![a, b], xi: vec![x * 0.5, y * 0.5] };
        assert_moments_close(&spec, &cfg, 22)?;
        assert_moments_close(&StateSpec::CollectiveSqueezedVacuum { xi: x }, &cfg, 22)?;
    }

    #[test]
    fn displaced_moments_match_fock(cfg in config(3), p in picks(), beta in small_c64(), mode in 1usize..=3) {
        let n = cfg.n_modes();
        let base = dicke_superposition(n, 1, &p);
        let spec = StateSpec::CollectiveDisplaced { base: Box::new(base), mode: mode.min(n), amplitude: beta };
        assert_moments_close(&spec, &cfg, if n == 2 { 16 } else { 11 })?;
    }

    #[test]
    fn dark_displacements_leave_bright_quanta(cfg in config(4), p in picks(), beta in (-2.0f64..2.0, -2.0f64..2.0), k in 1usize..4) {
        let n = cfg.n_modes();
        let base = dicke_superposition(n, 3, &p);
        let before = mrl_expectations(&moments_of(&base, &cfg).unwrap(), &cfg);
        let spec = StateSpec::CollectiveDisplaced { base: Box::new(base), mode: 1 + (k - 1) % (n - 1), amplitude: c(beta.0, beta.1) };
        let after = mrl_expectations(&moments_of(&spec, &cfg).unwrap(), &cfg);
        prop_assert!((after.r - before.r).abs() < 1e-10);
        prop_assert!((after.m - after.l - after.r).abs() < 1e-10);
    }

    #[test]
    fn equal_energy_pairs_are_monotone(cfg in config(3), p1 in picks(), p2 in picks()) {
        let n = cfg.n_modes();
        let m = 3;
        let at_m = |p: &[(usize, f64, f64)]| {
            let basis: Vec<BasisIndex> = enumerate_basis(n, m).unwrap().into_iter().filter(|b| b.total_quanta() == m).collect();
            let terms: Vec<(C64, BasisIndex)> = p.iter().map(|&(i, a, b)| (c(a, b), basis[i % basis.len()].clone())).collect();
            let mut merged: Vec<(C64, BasisIndex)> = Vec::new();
            for (a, b) in terms {
                match merged.iter_mut().find(|t| t.1 == b) {
                    Some(t) => t.0 += a,
                    None => merged.push((a, b)),
                }
            }
            let norm = merged.iter().map(|t| t.0.norm_sqr()).sum::<f64>().sqrt();
            StateSpec::DickeSuperposition { terms: merged.into_iter().map(|(a, b)| (a / norm, b)).collect() }
        };
        let (a, b) = (at_m(&p1), at_m(&p2));
        let (ia, ib) = (intensity_at(&a, &cfg, 0.0).unwrap(), intensity_at(&b, &cfg, 0.0).unwrap());
        let (fa, fb) = (dark_fraction(&a, &cfg).unwrap().0.unwrap(), dark_fraction(&b, &cfg).unwrap().0.unwrap());
        if (ia - ib).abs() > 1e-9 {
            prop_assert_eq!(ia > ib, fa < fb);
        }
    }

    #[test]
    fn classification_ignores_coupling_scale(cfg in config(3), p in picks(), s in 0.01f64..100.0) {
        let spec = dicke_superposition(cfg.n_modes(), 3, &p);
        let scaled = cfg.scaled(s).unwrap();
        let a = classify(&spec, &cfg, DEFAULT_EPSILON).unwrap();
        let b = classify(&spec, &scaled, DEFAULT_EPSILON).unwrap();
        prop_assert_eq!(a.tag, b.tag);
        prop_assert!((a.normal_fraction - b.normal_fraction).abs() < 1e-12);
        prop_assert!((a.dark_fraction.unwrap_or(0.0) - b.dark_fraction.unwrap_or(0.0)).abs() < 1e-12);
    }

    #[test]
    fn dark_fraction_is_one_minus_bright_share(g in prop::collection::vec(0.2f64..3.0, 2..=4), a in small_c64(), r in 0.0f64..1.5) {
        let n = g.len();
        let cfg = CouplingConfig::new(g, 10.0, 0.0).unwrap();
        let alpha: Vec<C64> = (0..n).map(|k| a * (k as f64 + 1.0)).collect();
        let spec = StateSpec::ProductSqueezedCoherent { alpha, xi: vec![c(r, 0.0); n] };
        let e = mrl_expectations(&moments_of(&spec, &cfg).unwrap(), &cfg);
        prop_assume!(e.m > 1e-6);
        let (f, _) = dark_fraction(&spec, &cfg).unwrap();
        prop_assert!((f.unwrap() - (1.0 - e.r / e.m)).abs() < 1e-10);
    }
}

#[test]
fn product_state_boundaries_are_exact() {
    let cfg = CouplingConfig::uniform(10, 1.0, 10.0, 0.0).unwrap();
    for k in 0..=20 {
        let x = 0.1 * k as f64;
        let coherent = StateSpec::ProductSqueezedCoherent { alpha: vec![c(x, 0.0); 10], xi: vec![c(0.0, 0.0); 10] };
        let squeezed = StateSpec::ProductSqueezedCoherent { alpha: vec![c(0.0, 0.0); 10], xi: vec![c(x, 0.0); 10] };
        let (fc, f_n) = dark_fraction(&coherent, &cfg).unwrap();
        assert_eq!(fc.unwrap_or(f_n), if k == 0 { 0.9 } else { 0.0 });
        let (fs, f_n) = dark_fraction(&squeezed, &cfg).unwrap();
        assert_eq!(fs.unwrap_or(f_n), 0.9);
    }
}

#[test]
fn thermal_and_distribution_moments_match_fock() {
    let cfg = CouplingConfig::new(vec![1.0, 0.4], 10.0, 0.0).unwrap();
    let thermal = StateSpec::IncoherentMixture(Mixture::Thermal(vec![0.1, 0.05]));
    let a = moments_of(&thermal, &cfg).unwrap();
    let rep = fock_representation(&thermal, &cfg, 30, 1e-12).unwrap();
    let b = rep.state.density().mode_moments(0, 2);
    assert!((&a.second - &b.second).iter().all(|z| z.norm() < 1e-9));
    let dist = StateSpec::IncoherentMixture(Mixture::Distributions(vec![vec![0.5, 0.25, 0.25], vec![0.0, 1.0]]));
    let a = moments_of(&dist, &cfg).unwrap();
    let b = dense_moments(&dist, &cfg, 3);
    assert!((&a.second - &b.second).iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn single_dicke_term_has_exact_mrl() {
    let cfg = CouplingConfig::new(vec![0.5, 1.5, 2.0], 10.0, 0.0).unwrap();
    for idx in enumerate_basis(3, 4).unwrap() {
        let e = mrl_expectations(&moments_of(&StateSpec::dicke(idx.clone()), &cfg).unwrap(), &cfg);
        assert!((e.m - idx.total_quanta() as f64).abs() < 1e-12);
        assert!((e.r - idx.rung() as f64).abs() < 1e-12);
        assert!((e.l - idx.dark_quanta() as f64).abs() < 1e-12);
    }
}

#[test]
fn phase_cancelled_coherent_states_are_normal() {
    // a vanishing bright amplitude leaves nothing to radiate
    let cfg = CouplingConfig::uniform(3, 1.0, 10.0, 0.0).unwrap();
    let alpha: Vec<C64> = (0..3).map(|j| C64::from_polar(0.7, 2.0 * PI * j as f64 / 3.0)).collect();
    let spec = StateSpec::ProductSqueezedCoherent { alpha, xi: vec![c(0.0, 0.0); 3] };
    assert_eq!(classify(&spec, &cfg, DEFAULT_EPSILON).unwrap().tag, RadianceTag::Dark);

    let cfg = CouplingConfig::new(vec![0.8, 1.9], 10.0, 0.0).unwrap();
    let alpha = vec![c(0.6, 0.0), c(0.0, 1.1)];
    let g = cfg.couplings();
    let lhs = (alpha[0] * g[0] + alpha[1] * g[1]).norm_sqr();
    let rhs = g[0] * g[0] * alpha[0].norm_sqr() + g[1] * g[1] * alpha[1].norm_sqr();
    assert!((lhs - rhs).abs() < 1e-12);
    let spec = StateSpec::ProductSqueezedCoherent { alpha, xi: vec![c(0.0, 0.0); 2] };
    assert_eq!(classify(&spec, &cfg, DEFAULT_EPSILON).unwrap().tag, RadianceTag::Normal);
}

#[test]
fn intensity_is_minus_energy_rate_on_oracle() {
    let cfg = CouplingConfig::new(vec![0.9, 1.4, 0.6], 10.0, 0.0).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let spec = StateSpec::DickeSuperposition {
        terms: vec![(c(h, 0.0), BasisIndex::new(vec![1, 0], 2)), (c(0.0, h), BasisIndex::new(vec![0, 1], 3))],
    };
    let space = FockSpace::number_capped(3, 4).unwrap();
    let rep = superrad_core::states::fock_representation_in(&spec, &cfg, &space, 1e-12).unwrap();
    let rho0: DensityOperator = rep.state.density();
    let dt = 1e-3;
    let centers = [0.05, 0.2, 0.5];
    let mut taus = Vec::new();
    for t in centers {
        taus.extend([t - dt, t, t + dt]);
    }
    let rec = evolve_reduced(&rho0, &cfg, &taus, &OracleOptions::default()).unwrap();
    let m = rec.channel("M");
    for (k, t) in centers.iter().enumerate() {
        let fd = -(m[3 * k + 2] - m[3 * k]) / (2.0 * dt);
        let closed = intensity_at(&spec, &cfg, *t).unwrap();
        assert!((fd - closed).abs() <= 1e-4 * closed, "t={t}: {fd} vs {closed}");
    }
}

/// Fixed-step RK4 on `Ṗ_R = N(R+1) P_{R+1} - N R P_R`.
fn rung_populations_rk4(initial: &[f64], n: f64, tau: f64, steps: usize) -> Vec<f64> {
    let rhs = |p: &[f64]| -> Vec<f64> {
        (0..p.len()).map(|r| {
            let gain = if r + 1 < p.len() { n * (r + 1) as f64 * p[r + 1] } else { 0.0 };
            gain - n * r as f64 * p[r]
        }).collect()
    };
    let h = tau / steps as f64;
    let mut p = initial.to_vec();
    for _ in 0..steps {
        let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        let k1 = rhs(&p);
        let k2 = rhs(&add(&p, &k1, h / 2.0));
        let k3 = rhs(&add(&p, &k2, h / 2.0));
        let k4 = rhs(&add(&p, &k3, h));
        for i in 0..p.len() {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    p
}

#[test]
fn ladder_populations_match_rung_equations() {
    let cfg = CouplingConfig::new(vec![1.0, 0.3, 2.2], 10.0, 0.0).unwrap();
    let n = cfg.n_modes() as f64;
    for k in 1..=8usize {
        let weights: Vec<f64> = (0..=k).map(|r| (r + 1) as f64).collect();
        let total: f64 = weights.iter().sum();
        let terms: Vec<(C64, BasisIndex)> =
            weights.iter().enumerate().map(|(r, w)| (c((w / total).sqrt(), 0.0), BasisIndex::new(vec![1, 0], r))).collect();
        let taus = [0.0, 0.1, 0.4, 1.0];
        let pops = ladder_populations(&StateSpec::DickeSuperposition { terms }, &cfg, &taus).unwrap();
        let init: Vec<f64> = weights.iter().map(|w| w / total).collect();
        for (t, row) in taus.iter().zip(&pops.values) {
            let want = rung_populations_rk4(&init, n, *t, 4000);
            for (r, idx) in pops.indices.iter().enumerate() {
                assert!((row[r] - want[idx.rung()]).abs() < 1e-8, "K={k} t={t} R={}", idx.rung());
            }
        }
    }
}
