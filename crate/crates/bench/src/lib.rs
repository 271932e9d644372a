//! Benchmark fixtures shared by the criterion targets.

use num_complex::Complex64;
use znwedge::weaklocality::rule_for;
use znwedge::{default_requests, Bump, LineRule, MatrixElementRequest, QuadratureSettings, SMatrixModel, TestFunction};

pub fn model(n: u32) -> SMatrixModel {
    SMatrixModel::zn(n, 1.0).expect("valid model")
}

/// A two-type left-wedge test function.
pub fn left_test_function() -> TestFunction {
    TestFunction::single(
        1,
        Bump::new([0.1, -1.0], 0.5, Complex64::new(1.0, 0.2)).expect("positive radius"),
    )
    .with(2, Bump::real([-0.3, -1.4], 0.6, 0.6).expect("positive radius"))
}

/// The first built-in request and a rule for it at `level`.
pub fn request(model: &SMatrixModel, level: u32) -> (MatrixElementRequest, LineRule) {
    let req = default_requests(model).expect("built-in pairs").swap_remove(0);
    let rule = rule_for(
        model,
        &QuadratureSettings::default().at_level(level),
        std::slice::from_ref(&req),
    );
    (req, rule)
}
