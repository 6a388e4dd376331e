use evsurv::{forward, init_params, similarities, Checkpoint, Grfn, ModelParams};
use evsurv::data::Standardizer;
use proptest::prelude::*;

fn params_strategy(k: usize, p: usize) -> impl Strategy<Value = ModelParams> {
    let vecs = move || proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, p), k);
    let reals = move |lo: f64, hi: f64| proptest::collection::vec(lo..hi, k);
    (vecs(), reals(0.0, 2.0), reals(0.01, 3.0), reals(0.0, 2.0), vecs(), reals(-3.0, 3.0)).prop_map(
        |(prototypes, gamma, h, s2, beta, beta0)| {
            ModelParams::new(prototypes, gamma, h, s2, beta, beta0).unwrap()
        },
    )
}

fn model_and_input() -> impl Strategy<Value = (ModelParams, Vec<f64>)> {
    (1usize..8, 1usize..4).prop_flat_map(|(k, p)| {
        (params_strategy(k, p), proptest::collection::vec(-3.0..3.0f64, p))
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn forward_is_a_fold_of_combine((params, x) in model_and_input()) {
        let pred = forward(&x, &params).unwrap();
        let s = similarities(&x, &params).unwrap();
        let mut acc = Grfn::vacuous();
        for k in 0..params.k() {
            let mu_k: f64 = params.beta[k].iter().zip(&x).map(|(b, v)| b * v).sum::<f64>() + params.beta0[k];
            let g = Grfn::new(mu_k, params.variance(k), s[k] * params.precision(k)).unwrap();
            acc = acc.combine(&g);
        }
        prop_assert!(close(pred.out.mu(), acc.mu()), "{:?} vs {:?}", pred.out, acc);
        prop_assert!(close(pred.out.sigma2(), acc.sigma2()));
        prop_assert!(close(pred.out.h(), acc.h()));
        let h: f64 = (0..params.k()).map(|k| s[k] * params.precision(k)).sum();
        prop_assert_eq!(pred.out.h(), h);
        prop_assert!(pred.similarities.iter().all(|s| *s > 0.0 && *s <= 1.0));
    }

    #[test]
    fn mean_is_a_convex_combination((params, x) in model_and_input()) {
        let out = forward(&x, &params).unwrap().out;
        let mus: Vec<f64> = (0..params.k())
            .map(|k| params.beta[k].iter().zip(&x).map(|(b, v)| b * v).sum::<f64>() + params.beta0[k])
            .collect();
        let lo = mus.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.mu() >= lo - 1e-12 && out.mu() <= hi + 1e-12);
    }

    #[test]
    fn prototype_order_is_irrelevant((params, x) in model_and_input(), rot in 0usize..8) {
        let k = params.k();
        let perm: Vec<usize> = (0..k).map(|i| (i + rot) % k).rev().collect();
        let pick = |v: &Vec<f64>| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let permuted = ModelParams {
            prototypes: perm.iter().map(|&i| params.prototypes[i].clone()).collect(),
            gamma: pick(&params.gamma),
            eta: pick(&params.eta),
            sigma: pick(&params.sigma),
            beta: perm.iter().map(|&i| params.beta[i].clone()).collect(),
            beta0: pick(&params.beta0),
        };
        let a = forward(&x, &params).unwrap().out;
        let b = forward(&x, &permuted).unwrap().out;
        prop_assert!(close(a.h(), b.h()));
        prop_assert!(close(a.mu(), b.mu()));
        prop_assert!(close(a.sigma2(), b.sigma2()));
    }

    #[test]
    fn precision_falls_off_with_distance((params, x) in model_and_input(), k in 0usize..8, t in 1.0..4.0f64) {
        let k = k % params.k();
        let p = &params.prototypes[k];
        let far: Vec<f64> = p.iter().zip(&x).map(|(p, x)| p + t * (x - p)).collect();
        let mut single = params.clone();
        single.eta.iter_mut().enumerate().for_each(|(i, e)| if i != k { *e = 0.0 });
        let near_h = forward(&x, &single).unwrap().out.h();
        let far_h = forward(&far, &single).unwrap().out.h();
        prop_assert!(far_h <= near_h);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact((params, x) in model_and_input()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let scaler = Standardizer { mean: vec![0.25; params.dim()], sd: vec![1.5; params.dim()] };
        let ckpt = Checkpoint::new(params.clone(), scaler, "abc".into());
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        prop_assert_eq!(&back, &ckpt);
        let a = forward(&x, &params).unwrap().out;
        let b = forward(&x, &back.params).unwrap().out;
        prop_assert_eq!(a, b);
    }
}

#[test]
fn single_prototype_at_its_center() {
    let params = ModelParams::new(
        vec![vec![0.3, -1.0]],
        vec![5.0],
        vec![2.5],
        vec![0.7],
        vec![vec![1.0, 2.0]],
        vec![0.5],
    )
    .unwrap();
    let out = forward(&[0.3, -1.0], &params).unwrap().out;
    assert_eq!(out.mu(), 0.3 - 2.0 + 0.5);
    assert!((out.sigma2() - 0.7).abs() < 1e-15);
    assert!((out.h() - 2.5).abs() < 1e-15);
}

#[test]
fn checkpoint_rejects_foreign_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.json");
    std::fs::write(&path, "{\"format\": \"other\"}").unwrap();
    assert!(Checkpoint::load(&path).is_err());
    assert!(matches!(
        Checkpoint::load(&dir.path().join("missing.json")),
        Err(evsurv::Error::FileNotFound(_))
    ));
}

#[test]
fn init_is_seeded() {
    let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
    let y: Vec<f64> = (0..60).map(|i| i as f64 / 60.0).collect();
    let a = init_params(&x, &y, 6, 42).unwrap();
    assert_eq!(a, init_params(&x, &y, 6, 42).unwrap());
    assert!(a.gamma.iter().all(|g| *g > 0.0 && g.is_finite()));
    assert_eq!(a.k(), 6);
}
