use pyo3::prelude::*;

#[pymodule]
fn gzsl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let _ = m;
    Ok(())
}
