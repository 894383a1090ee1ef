mod common;

use common::oracles;

fn check(suite: oracles::Suite) {
    assert!(
        suite.pass(),
        "{}: {} of {} cases fail, worst ratio {:.3e}",
        suite.name,
        suite.failures,
        suite.cases,
        suite.worst
    );
}

#[test]
fn bracket_is_antisymmetric() {
    check(oracles::antisymmetry());
}

#[test]
fn bracket_satisfies_jacobi() {
    check(oracles::jacobi());
}

#[test]
fn norm_is_submultiplicative() {
    check(oracles::submultiplicativity());
}

#[test]
fn angle_derivative_obeys_cauchy() {
    check(oracles::cauchy());
}

#[test]
fn bracket_transports_decay() {
    check(oracles::decay_transport());
}

#[test]
fn weighted_convolution_is_bounded() {
    check(oracles::convolution());
}

#[test]
fn quartic_gradient_matches_central_differences() {
    check(oracles::quartic_gradient());
}
