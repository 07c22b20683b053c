mod support;

use magnetic_hardy::counting::{count_total, Method};
use magnetic_hardy::profiles::{Potential, RadialField};
use magnetic_hardy::quadform::{hardy_probe_at_zero, UALPHA_RAMP};
use magnetic_hardy::spectral::Grid;
use support::*;

#[test]
fn inertia_matches_dense_eigensolver() {
    assert_eq!(dense_mismatches(7, 50), Vec::<String>::new());
}

#[test]
fn mode_sum_matches_polar_count() {
    let field = RadialField::bump(0.5, 1.0);
    let v = Potential::GaussianWell { depth: 20.0, width: 1.0 };
    let grid = Grid::uniform_s(-3.0, 2.0, 60).unwrap();
    let report = count_total(&field, &v, 1.0, &grid, Method::Inertia).unwrap();
    assert!(report.m_max <= 7);
    let (dense, gap) = polar_negative_count(&field, &v, 1.0, &grid, 15);
    assert!(gap > 1e-8);
    assert!(report.total > 3);
    assert_eq!(report.total as usize, dense);
}

#[test]
fn single_mode_form_matches_cartesian_quadrature() {
    let err = parseval_max_error(11, 20);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn zero_probe_rows_match_closed_forms() {
    let field = RadialField::bump(0.5, 1.0);
    let (alpha, b) = (0.4, 1.5);
    let probe = hardy_probe_at_zero(&field, b, alpha, &[8.0, 16.0]).unwrap();
    for row in &probe.rows {
        let k = row.cut;
        let num = probe_numerator(alpha, b, k);
        assert!(((row.numerator - num) / num).abs() < 1e-5, "{} vs {num}", row.numerator);
        let v = |t: f64| -> f64 {
            let x = -t;
            if x >= k {
                k.powf(alpha) * (2.0 * k - x) / k
            } else if x >= UALPHA_RAMP {
                x.powf(alpha)
            } else {
                UALPHA_RAMP.powf(alpha) * x / UALPHA_RAMP
            }
        };
        let ang = TWO_PI
            * gauss_composite(
                |t| (bump_alpha(0.5, 1.0, t) * v(t)).powi(2),
                -2.0 * k,
                0.0,
                &[-k, -UALPHA_RAMP],
                400,
            );
        let den = probe_radial_part(alpha, k, UALPHA_RAMP) + ang;
        assert!(((row.denominator - den) / den).abs() < 1e-5, "{} vs {den}", row.denominator);
    }
}
