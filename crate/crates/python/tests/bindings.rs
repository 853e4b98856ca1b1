use pyo3::prelude::*;
use pyo3::types::PyDict;

use hategraph::hategraph as hategraph_module;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    pyo3::append_to_inittab!(hategraph_module);
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals
            .set_item("hg", py.import("hategraph").unwrap())
            .unwrap();
        f(py, &globals);
    });
}

#[test]
fn module_exposes_core_operations() {
    with_module(|py, g| {
        let run = |code: &str| {
            let code = std::ffi::CString::new(code).unwrap();
            py.run(&code, Some(g), None).unwrap_or_else(|e| panic!("{e}"));
        };
        run("g = hg.NGramGraph('abcd')\nassert g.edge_count == 1 and g.weight('abc', 'bcd') == 2.0");
        run("assert hg.similarity(g, g) == (1.0, 1.0, 1.0)");
        run("s = hg.scores([[1, 0], [1, 2]])\nassert abs(s['micro_f'] - 0.75) < 1e-12");
        run("assert abs(hg.studentized_range_quantile(0.95, 3, 10.0) - 3.877) < 0.01");
        run(
            "c = hg.Classifier.train([[0.0], [0.1], [1.0], [1.1]], ['a', 'a', 'b', 'b'], algorithm='NB')\n\
             assert c.predict([1.05]) == 'b' and c.labels == ['a', 'b']",
        );
        run("try:\n    hg.NGramGraph('x', n=0)\n    raise SystemExit(1)\nexcept ValueError:\n    pass");
    });
}
