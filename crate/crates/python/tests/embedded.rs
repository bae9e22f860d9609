use pyo3::prelude::*;
use pyo3::types::PyDict;

use acsq_py::acsq_py;

fn run(code: &str) {
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let c = std::ffi::CString::new(code).unwrap();
        py.run(&c, Some(&globals), None).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn module_works_from_python() {
    pyo3::append_to_inittab!(acsq_py);
    Python::initialize();
    run(r#"
import math
import acsq_py as acsq
phi = acsq.Fiducial(2.0, 1.0)
basis = acsq.Basis(6, 80)
p1 = acsq.Parametrization.builtin("param1")
p2 = acsq.Parametrization.builtin("param2")
assert abs(phi.a - 2 / 3) < 1e-12 and abs(phi.b - 2 / 3) < 1e-10
op = acsq.quantize(acsq.Observable.constant(1.0), p2, phi, basis)
assert abs(op.trace().real - 6.0) < 1e-6
assert p1.compose((1.0, 2.0), (3.0, 4.0)) == (7.0, 8.0)
lin = acsq.Observable("linear-in-p", "pq", ["0", "q"])
d = acsq.quantize(lin, p1, phi, basis).max_difference(acsq.quantize(acsq.Observable.dilation(), p1, phi, basis))
assert d < 1e-6, d
defect, opposite = acsq.commutator_defect("param2", phi, acsq.Basis(12, 96))
assert defect < 1e-10 < opposite
try:
    acsq.Parametrization.builtin("param3")
except ValueError:
    pass
else:
    raise AssertionError
"#);
}
