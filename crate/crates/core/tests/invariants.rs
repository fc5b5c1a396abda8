use bornprec::correction::{CorrectionMap, FourierDiag, ScalarMetric};
use bornprec::fields::{ComplexField, RngState};
use bornprec::iterate::{born_residual, residual, run, step, Format, IterationConfig};
use bornprec::problems::{CdrFamily, HelmholtzFamily, InstanceFamily, NewtonFamily, ProblemInstance, SplitProblem};
use bornprec::train::{eval_loss, eval_loss_riesz_form, loss_gradient, LossKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn families() -> Vec<InstanceFamily> {
    vec![
        InstanceFamily::Helmholtz(HelmholtzFamily { n: 16, ppw: 8.0, sponge_points: 3, ..Default::default() }),
        InstanceFamily::Cdr(CdrFamily { n: 16, ..Default::default() }),
        InstanceFamily::Cdr(CdrFamily { n: 12, dealias: true, ..Default::default() }),
        InstanceFamily::Newton(NewtonFamily { n: 7, ..Default::default() }),
    ]
}

fn instance(which: usize, seed: u64) -> ProblemInstance {
    families()[which % 4].sample(&mut RngState::new(seed)).unwrap()
}

fn rel(a: &ComplexField, b: &ComplexField) -> f64 {
    a.sub(b).unwrap().norm() / b.norm().max(a.norm())
}

fn random_diag(p: &dyn SplitProblem, rng: &mut RngState) -> FourierDiag {
    let m = (0..p.grid().len()).map(|_| Complex64::new(1.0 + 0.3 * rng.normal(), 0.3 * rng.normal())).collect();
    FourierDiag::from_modes(p.transform().clone(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn splitting_and_key_identity(which in 0usize..4, seed in any::<u64>()) {
        let inst = instance(which, seed);
        let p = inst.problem.as_split();
        let r = ComplexField::random_normal(p.grid(), &mut RngState::new(seed ^ 1));
        let split = p.apply_lref(&r).unwrap().sub(&p.apply_v(&r).unwrap()).unwrap();
        prop_assert!(rel(&split, &p.apply_a(&r).unwrap()) <= 1e-12);
        let born = p.apply_born(&r).unwrap();
        let ga = p.apply_g(&p.apply_a(&r).unwrap()).unwrap();
        prop_assert!(born.sub(&ga).unwrap().norm() <= 1e-12 * r.norm());
        let back = p.apply_lref(&p.apply_g(&r).unwrap()).unwrap();
        prop_assert!(rel(&back, &r) <= 1e-12);
        let again = p.apply_g(&p.apply_lref(&r).unwrap()).unwrap();
        prop_assert!(rel(&again, &r) <= 1e-12);
    }

    #[test]
    fn born_residual_two_forms(which in 0usize..4, seed in any::<u64>()) {
        let inst = instance(which, seed);
        let p = inst.problem.as_split();
        let mut rng = RngState::new(seed ^ 2);
        let u = ComplexField::random_normal(p.grid(), &mut rng);
        let integral = p.apply_g(&p.apply_v(&u).unwrap().add(&inst.source).unwrap()).unwrap().sub(&u).unwrap();
        let diff = born_residual(p, &u, &inst.source).unwrap();
        prop_assert!(integral.sub(&diff).unwrap().norm() <= 1e-12 * (u.norm() + inst.source.norm()));
        let direct = p.apply_g(&residual(p, &u, &inst.source).unwrap()).unwrap();
        prop_assert!(rel(&diff, &direct) <= 1e-12);
    }

    #[test]
    fn adjoints_are_consistent(which in 0usize..4, seed in any::<u64>()) {
        let inst = instance(which, seed);
        let p = inst.problem.as_split();
        let mut rng = RngState::new(seed ^ 3);
        let x = ComplexField::random_normal(p.grid(), &mut rng);
        let y = ComplexField::random_normal(p.grid(), &mut rng);
        let pairs: [(ComplexField, ComplexField); 4] = [
            (p.apply_a(&x).unwrap(), p.apply_a_adjoint(&y).unwrap()),
            (p.apply_v(&x).unwrap(), p.apply_v_adjoint(&y).unwrap()),
            (p.apply_g(&x).unwrap(), p.apply_g_adjoint(&y).unwrap()),
            (p.apply_born(&x).unwrap(), p.apply_born_adjoint(&y).unwrap()),
        ];
        for (ax, ay) in pairs {
            let lhs = y.dot(&ax);
            let rhs = ay.dot(&x);
            prop_assert!((lhs - rhs).norm() <= 1e-10 * ax.norm() * y.norm());
        }
    }

    #[test]
    fn riesz_form_matches_integral_form(which in 0usize..4, seed in any::<u64>()) {
        let inst = instance(which, seed);
        let p = inst.problem.as_split();
        let mut rng = RngState::new(seed ^ 4);
        let probes: Vec<_> = (0..4).map(|_| ComplexField::random_normal(p.grid(), &mut rng)).collect();
        let maps = [
            CorrectionMap::Scalar(Complex64::new(0.7, -0.2)),
            CorrectionMap::FourierDiag(random_diag(p, &mut rng)),
        ];
        for map in &maps {
            let a = eval_loss(LossKind::BsReta, p, map, &probes).unwrap();
            let b = eval_loss_riesz_form(p, map, &probes).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn losses_ignore_probe_scale_and_phase(which in 0usize..4, seed in any::<u64>(), s in 1e-3f64..1e3, phase in 0.0f64..6.3) {
        let inst = instance(which, seed);
        let p = inst.problem.as_split();
        let mut rng = RngState::new(seed ^ 5);
        let probes: Vec<_> = (0..3).map(|_| ComplexField::random_normal(p.grid(), &mut rng)).collect();
        let scaled: Vec<_> = probes.iter().map(|r| r.scale(Complex64::from_polar(s, phase))).collect();
        let map = CorrectionMap::FourierDiag(random_diag(p, &mut rng));
        for kind in LossKind::ALL {
            let a = eval_loss(kind, p, &map, &probes).unwrap();
            let b = eval_loss(kind, p, &map, &scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-3));
        }
    }

    #[test]
    fn cbs_equals_npbs_with_scalar(which in 0usize..4, seed in any::<u64>()) {
        let inst = instance(which, seed);
        let p = inst.problem.as_split();
        for map in [
            CorrectionMap::OptimalScalar(ScalarMetric::Euclidean),
            CorrectionMap::OptimalScalar(ScalarMetric::REta),
            CorrectionMap::Scalar(Complex64::new(0.5, 0.1)),
        ] {
            let mut u_cbs = ComplexField::zeros(p.grid());
            let mut u_npbs = u_cbs.clone();
            for _ in 0..20 {
                u_cbs = step(Format::Cbs, p, &map, &u_cbs, &inst.source).unwrap();
                u_npbs = step(Format::Npbs, p, &map, &u_npbs, &inst.source).unwrap();
                prop_assert!(u_cbs.sub(&u_npbs).unwrap().norm() <= 1e-12 * u_cbs.norm());
            }
            let cfg = IterationConfig::new(Format::Cbs, 1e-14, 20).unwrap();
            let a = run(p, &map, &inst.source, &cfg, None).unwrap().1;
            let b = run(p, &map, &inst.source, &IterationConfig { format: Format::Npbs, ..cfg }, None).unwrap().1;
            prop_assert_eq!(a.iters, b.iters);
            for (x, y) in a.residual_l2.iter().zip(&b.residual_l2) {
                prop_assert!((x - y).abs() <= 1e-10 * x + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(6) })]

    #[test]
    fn gradient_matches_central_differences(which in 0usize..4, seed in any::<u64>()) {
        let fams = [
            InstanceFamily::Helmholtz(HelmholtzFamily { n: 8, ppw: 6.0, sponge_points: 1, ..Default::default() }),
            InstanceFamily::Cdr(CdrFamily { n: 8, ..Default::default() }),
            InstanceFamily::Cdr(CdrFamily { n: 8, dealias: true, ..Default::default() }),
            InstanceFamily::Newton(NewtonFamily { n: 8, ..Default::default() }),
        ];
        let inst = fams[which].sample(&mut RngState::new(seed)).unwrap();
        let p = inst.problem.as_split();
        let mut rng = RngState::new(seed ^ 6);
        let probes: Vec<_> = (0..3).map(|_| ComplexField::random_normal(p.grid(), &mut rng)).collect();
        let diag = random_diag(p, &mut rng);
        for kind in LossKind::ALL {
            let (_, grad) = loss_gradient(kind, p, &CorrectionMap::FourierDiag(diag.clone()), &probes).unwrap();
            let theta = diag.theta();
            let mut fd = vec![0.0; theta.len()];
            for (k, slot) in fd.iter_mut().enumerate() {
                let h = 1e-6 * theta[k].abs().max(1.0);
                let eval = |delta: f64| {
                    let mut t = theta.clone();
                    t[k] += delta;
                    let mut d = diag.clone();
                    d.set_theta(&t).unwrap();
                    loss_gradient(kind, p, &CorrectionMap::FourierDiag(d), &probes).unwrap().0
                };
                *slot = (eval(h) - eval(-h)) / (2.0 * h);
            }
            let num: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(num <= 1e-5 * den, "{kind:?}: {num} vs {den}");
        }
    }
}
