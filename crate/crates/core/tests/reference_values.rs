//! Values frozen from an independent 200-bit mpmath evaluation
//! (`tools/reference_values.py`).

use num_complex::Complex64;
use parabifurc_core::experiments::{autonomous_baseline, convergence_experiment, counterexample_experiment, unperturbed_inverse};
use parabifurc_core::moebius::map_distance_to_identity;
use parabifurc_core::planar::{corollary_experiment, g_iterate, PlanarMap};
use parabifurc_core::recurrences::{proposition_bounds, run_recurrences};
use parabifurc_core::sequences::{a_coefficients, check_conditions, generate, DEFAULT_A_THRESHOLD};
use parabifurc_core::{Ext, Family, GridSpec, Real};

const PI: f64 = std::f64::consts::PI;

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

macro_rules! assert_close {
    ($got:expr, $want:expr, $rel:expr) => {{
        let (g, w) = ($got, $want);
        assert!(close(g, w, $rel), "got {g:e}, want {w:e} (rel {:e})", ((g - w) / w).abs());
    }};
}

#[test]
fn default_grid() {
    let grid = GridSpec::default();
    assert_eq!(grid.points_f64().len(), 60);
    let gap = map_distance_to_identity(&unperturbed_inverse::<f64>(), &grid.points_f64()).unwrap();
    assert_close!(gap, 0.34023797642541793, 1e-14);
}

#[test]
fn deviations() {
    let a = |fam: Family, n| a_coefficients(&generate::<f64>(&fam, n).unwrap());
    let c = a(Family::Constant { offset: 0.0 }, 100);
    assert!(c.a().iter().all(|&x| close(x, -8.1171572049863265e-8, 1e-14)));
    let x = a(Family::Counterexample, 100);
    assert!(x.a().iter().all(|&x| close(x, 1.944385251301584e-5, 1e-13)));
    let e3 = a(Family::Example3, 1000);
    let m = e3.a().iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert_close!(1e12 * m, 8.1108418460465596, 1e-9);
}

#[test]
fn condition_statistics() {
    let cases: [(Family, usize, f64, f64); 7] = [
        (Family::Constant { offset: 0.0 }, 101, 0.4113529005142954, 0.08036794521577232),
        (Family::Example1, 101, 0.17266221492528897, 19.71006794206453),
        (Family::Example2, 102, 0.54335499239708504, 39.913019419664638),
        (Family::Counterexample, 100, 98.536120377918799, 19.44385251301584),
        (Family::Counterexample, 200, 198.51814201701736, 19.591343878505574),
        (Family::Counterexample, 400, 398.50909162065575, 19.66523106757177),
        (Family::Theorem5Linear { a: -PI }, 101, 0.47671945550175396, 19.561122001506615),
    ];
    for (fam, n, ns, band) in cases {
        let r = check_conditions(&generate::<f64>(&fam, n).unwrap(), DEFAULT_A_THRESHOLD);
        assert_close!(r.s_scaled, ns, 1e-11);
        assert_close!(r.band, band, 1e-12);
        let rx = check_conditions(&generate::<Ext>(&fam, n).unwrap(), DEFAULT_A_THRESHOLD);
        assert_close!(rx.s_scaled, ns, 1e-15);
        assert_close!(rx.band, band, 1e-15);
    }
}

#[test]
fn proposition_bound_values() {
    let scaled = |fam: Family, n: usize| {
        let run = run_recurrences(&a_coefficients(&generate::<Ext>(&fam, n).unwrap()));
        proposition_bounds(&run).as_array().map(|v| v * n as f64)
    };
    let e1 = scaled(Family::Example1, 101);
    let want = [0.25933397619051764, 0.73559346492203125, 1.7409413088830031, 0.74549311936456459];
    for (g, w) in e1.iter().zip(want) {
        assert_close!(*g, w, 1e-14);
    }
    let c = scaled(Family::Constant { offset: 0.0 }, 101);
    let want = [0.41132803155913916, 0.41112823869186988, 0.41132803155913916, 0.41112985903570483];
    for (g, w) in c.iter().zip(want) {
        assert_close!(*g, w, 1e-14);
    }
    for (n, last) in [(100, 0.99903256458397613), (200, 0.99975571388130601), (400, 0.99993862255881486)] {
        let run = run_recurrences(&a_coefficients(&generate::<Ext>(&Family::Counterexample, n).unwrap()));
        let b = proposition_bounds(&run).as_array();
        for v in &b[..3] {
            assert_close!(*v, 1.0, 1e-14);
        }
        assert_close!(b[3], last, 1e-14);
    }
}

#[test]
fn convergence_constants() {
    let grid = GridSpec::default();
    let cases: [(Family, [f64; 4]); 3] = [
        (
            Family::Constant { offset: 0.0 },
            [0.094085822474639278, 0.093997809452818228, 0.093961004476556271, 0.09394241739281626],
        ),
        (
            Family::Example1,
            [0.99319848307891716, 0.99897292740954423, 1.0018003722335484, 1.0031985937168632],
        ),
        (
            Family::Example3,
            [0.057297910459505622, 0.056528117523717332, 0.056180759516395658, 0.056016276360685291],
        ),
    ];
    for (fam, want) in cases {
        let ns = fam.doubling_schedule(100, 4);
        let ext = convergence_experiment::<Ext>(&fam, &ns, &grid).unwrap();
        let std = convergence_experiment::<f64>(&fam, &ns, &grid).unwrap();
        for i in 0..4 {
            assert_close!(ext.scaled[i], want[i], 1e-14);
            // binary64 loses about N^3 u to the rounded traces.
            assert_close!(std.scaled[i], want[i], 1e-4);
        }
    }
}

#[test]
fn counterexample_errors() {
    let r = counterexample_experiment::<Ext>(&[100, 200, 400], &GridSpec::default(), DEFAULT_A_THRESHOLD).unwrap();
    let inv = [0.0025732950159181638, 0.00064901716795588849, 0.00016301862348388852];
    let id = [0.3417186761826811, 0.34061065135002397, 0.34033153456509729];
    for i in 0..3 {
        assert_close!(r.err_inverse[i], inv[i], 1e-13);
        assert_close!(r.err_identity[i], id[i], 1e-14);
    }
    assert_close!(r.limit_gap, 0.34023797642541793, 1e-15);
}

#[test]
fn baseline_errors() {
    let grid = GridSpec::default();
    let e0 = autonomous_baseline::<Ext>(400, 0.0, &grid).unwrap().errs[0];
    let e5 = autonomous_baseline::<Ext>(400, 0.5, &grid).unwrap().errs[0];
    assert_close!(e0, 0.00023490251119139068, 1e-14);
    assert_close!(e5, 0.13938745843230547, 1e-14);
}

#[test]
fn planar_values() {
    assert_close!(400.0 * g_iterate(Complex64::new(0.05, 0.0), 400).unwrap().re, 0.95249489522978161, 1e-13);
    let z = Complex64::new(0.1, 0.0);
    let w = Complex64::new(0.05, 0.0);
    let h = corollary_experiment(&PlanarMap::h(), z, w, &[5, 10, 20, 40], 1).unwrap();
    let want = [0.1610402976741528, 0.047616068522121715, 0.016698701536609932, 0.0072982950035841051];
    for (g, w) in h.deviations.iter().zip(want) {
        assert_close!(*g, w, 1e-12);
    }
    let l = corollary_experiment(&PlanarMap::l(), z, w, &[5, 10, 20, 40], 2).unwrap();
    let want = [0.070678105118698744, 0.029008466464794686, 0.013673511032269846, 0.0068988469916217717];
    for (g, w) in l.deviations.iter().zip(want) {
        assert_close!(*g, w, 1e-12);
    }
}

#[test]
fn binary64_generators_are_within_two_ulps() {
    for fam in [Family::Example1, Family::Example3, Family::Theorem5Linear { a: -PI }] {
        let n = fam.admissible_n(1001);
        let seq = generate::<f64>(&fam, n).unwrap();
        let seqx = generate::<Ext>(&fam, n).unwrap();
        for (a, b) in seq.eps().iter().zip(seqx.eps()) {
            assert!((a - b.to_f64()).abs() <= 2.0 * f64::EPSILON * a, "{fam}");
        }
    }
}
