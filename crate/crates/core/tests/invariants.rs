use proptest::prelude::*;

use diamean::averaging::{
    besicovitch_distance, estimate_orbit, mean_diameter, weyl_distance, EstimatorParams, FnOrbit, Mode, OrbitFunction,
};
use diamean::catalog;
use diamean::equicontinuity::{dme_global_test, sample_points, DmeParams};
use diamean::factors::hyper_lift;
use diamean::group::{standard_folner, FolnerSequence, FolnerStyle, GroupElement};
use diamean::systems::{GluedCompactification, MeshPolicy, NetSet, Point, ProductMetric, ProductSystem, SystemRef};
use diamean::verdict::Outcome;

const SYSTEMS: [&str; 8] =
    ["rotation", "sturmian", "regular_toeplitz", "nonregular_toeplitz", "odometer", "full_shift", "one_point", "extended_integers"];

fn forward() -> FolnerSequence {
    standard_folner(1, FolnerStyle::Forward).unwrap()
}

fn small() -> EstimatorParams {
    EstimatorParams::with_scale(200, 200)
}

fn periodic(values: Vec<f64>) -> FnOrbit {
    let p = values.len() as i64;
    FnOrbit::new("periodic", 1, move |g: &GroupElement| values[g.first().rem_euclid(p) as usize])
}

fn banach(f: &dyn OrbitFunction) -> f64 {
    estimate_orbit(f, &forward(), &small(), Mode::BanachSup).unwrap().value
}

/// Along and translate-sup traces on the same `n` grid.
fn traces(f: &dyn OrbitFunction) -> (Vec<f64>, Vec<f64>) {
    let a = estimate_orbit(f, &forward(), &small(), Mode::AlongFolner).unwrap();
    let b = estimate_orbit(f, &forward(), &small(), Mode::BanachSup).unwrap();
    (a.trace.iter().map(|t| t.value).collect(), b.trace.iter().map(|t| t.value).collect())
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..24)
}

#[test]
fn actions_compose_and_metrics_are_metrics() {
    for name in SYSTEMS {
        let sys = catalog::system(name).unwrap();
        let pts = sample_points(sys.as_ref(), 6, 1).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let (g, h) = (GroupElement::scalar(3 + i as i64), GroupElement::scalar(-7));
            assert_eq!(sys.act(&g, &sys.act(&h, p)), sys.act(&(&g + &h), p), "{name}");
            assert_eq!(sys.act(&GroupElement::zero(1), p), *p, "{name}");
            assert_eq!(sys.metric(p, p), 0.0, "{name}");
            for q in &pts {
                assert_eq!(sys.metric(p, q), sys.metric(q, p), "{name}");
                for r in &pts {
                    assert!(sys.metric(p, r) <= sys.metric(p, q) + sys.metric(q, r) + 1e-12, "{name}");
                }
            }
        }
    }
}

#[test]
fn factor_maps_are_equivariant() {
    for pair in catalog::pairs().unwrap() {
        let pi = &pair.factor;
        let xs = sample_points(pi.source().as_ref(), 8, 2).unwrap();
        let samples: Vec<(GroupElement, Point)> = xs.into_iter().enumerate().map(|(i, x)| (GroupElement::scalar(5 * i as i64 - 17), x)).collect();
        assert!(pi.is_equivariant_on(&samples), "{}", pair.name);
    }
}

#[test]
fn besicovitch_is_at_most_weyl() {
    for name in ["rotation", "sturmian", "regular_toeplitz", "extended_integers"] {
        let sys = catalog::system(name).unwrap();
        let pts = sample_points(sys.as_ref(), 4, 3).unwrap();
        for x in &pts {
            for y in &pts {
                let b = besicovitch_distance(sys.as_ref(), x, y, &forward(), &small()).unwrap();
                let w = weyl_distance(sys.as_ref(), x, y, &forward(), &small()).unwrap();
                for (tb, tw) in b.trace.iter().zip(&w.trace) {
                    assert!(tb.value <= tw.value + 1e-12, "{name} n={}: {} > {}", tb.n, tb.value, tw.value);
                }
            }
        }
    }
}

#[test]
fn mean_diameter_is_at_most_pairwise_weyl_sum() {
    for name in ["sturmian", "regular_toeplitz", "full_shift"] {
        let sys = catalog::system(name).unwrap();
        let pts = sample_points(sys.as_ref(), 3, 4).unwrap();
        let set = NetSet::new(sys.as_ref(), pts.clone(), 1.0 / 64.0).unwrap();
        let diam = mean_diameter(sys.as_ref(), &forward(), &set, &small()).unwrap().value;
        let mut sum = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                sum += weyl_distance(sys.as_ref(), &pts[i], &pts[j], &forward(), &small()).unwrap().value;
            }
        }
        assert!(diam <= sum + 1e-9, "{name}: {diam} > {sum}");
    }
}

#[test]
fn ball_mean_diameter_grows_with_radius() {
    for name in ["rotation", "sturmian", "extended_integers"] {
        let sys = catalog::system(name).unwrap();
        let mesh = if name == "sturmian" { f64::powi(2.0, -40) } else { 1.0 / 256.0 };
        let x = &sample_points(sys.as_ref(), 1, 5).unwrap()[0];
        let mut last = f64::INFINITY;
        for delta in [0.5, 0.25, 0.125, 0.0625] {
            let ball = sys.ball_net(x, delta, mesh).unwrap();
            let d = mean_diameter(sys.as_ref(), &forward(), &ball, &small()).unwrap().value;
            assert!(d <= last + 1e-12, "{name}: δ={delta} gives {d} > {last}");
            last = d;
        }
    }
}

#[test]
fn product_verdict_does_not_depend_on_the_metric() {
    let parts: Vec<SystemRef> = vec![catalog::system("rotation").unwrap(), catalog::system("odometer").unwrap()];
    let params = DmeParams { estimator: small(), mesh: 1.0 / 256.0, samples: 3, ..DmeParams::default() };
    let outcomes: Vec<Outcome> = [ProductMetric::Sup, ProductMetric::Weighted]
        .into_iter()
        .map(|m| {
            let sys = ProductSystem::with_metric(parts.clone(), m).unwrap();
            let pts = sample_points(&sys, params.samples, 6).unwrap();
            dme_global_test(&sys, &pts, &forward(), &params).unwrap().outcome()
        })
        .collect();
    assert_eq!(outcomes, vec![Outcome::Holds, Outcome::Holds]);
}

#[test]
fn hyper_lift_identifies_the_two_copies() {
    let pi = catalog::glued_factor().unwrap();
    let lift = hyper_lift(&pi, MeshPolicy::Singletons, MeshPolicy::Singletons).unwrap();
    let glued = GluedCompactification::new();
    let hat = Point::set(NetSet::new(&glued, GluedCompactification::hat_copy(5), 0.1).unwrap());
    let check = Point::set(NetSet::new(&glued, GluedCompactification::check_copy(5), 0.1).unwrap());
    assert_ne!(hat, check);
    assert_eq!(lift.apply(&hat), lift.apply(&check));
    assert_eq!(lift.source().metric(&hat, &check), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn banach_mean_is_monotone_and_subadditive(a in values(), b in values()) {
        let n = a.len().max(b.len());
        let a: Vec<f64> = (0..n).map(|i| a[i % a.len()]).collect();
        let b: Vec<f64> = (0..n).map(|i| b[i % b.len()]).collect();
        let max: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (fa, fb) = (banach(&periodic(a.clone())), banach(&periodic(b)));
        prop_assert!(fa <= banach(&periodic(max)) + 1e-12);
        prop_assert!(banach(&periodic(sum)) <= fa + fb + 1e-12);
        let (al, ba) = traces(&periodic(a));
        prop_assert!(al.iter().zip(&ba).all(|(x, y)| x <= &(y + 1e-12)));
    }

    #[test]
    fn banach_mean_is_homogeneous_and_shifts_with_constants(a in values(), c in 0.0f64..4.0, lambda in 0.0f64..2.0) {
        let fa = banach(&periodic(a.clone()));
        let scaled = banach(&periodic(a.iter().map(|v| c * v).collect()));
        let offset = banach(&periodic(a.iter().map(|v| v + lambda).collect()));
        prop_assert!((scaled - c * fa).abs() <= 1e-9);
        prop_assert!((offset - fa - lambda).abs() <= 1e-9);
    }

    #[test]
    fn banach_mean_is_shift_invariant(a in values(), t in -50i64..50) {
        let p = a.len() as i64;
        let shifted: Vec<f64> = (0..p).map(|i| a[(i + t).rem_euclid(p) as usize]).collect();
        prop_assert!((banach(&periodic(a)) - banach(&periodic(shifted))).abs() <= 1e-12);
    }

    #[test]
    fn rotation_arcs_keep_their_diameter_under_the_action(start in 0i64..256, steps in 1i64..128, g in -1000i64..1000) {
        let rot = catalog::rotation().unwrap();
        let arc = rot.arc(diamean::systems::Angle::new(start, 256), steps, 256).unwrap();
        let moved = diamean::systems::act_set(&rot, &GroupElement::scalar(g), &arc).unwrap();
        let a = mean_diameter(&rot, &forward(), &arc, &small()).unwrap().value;
        let b = mean_diameter(&rot, &forward(), &moved, &small()).unwrap().value;
        prop_assert_eq!(a, b);
    }
}
