pub mod cli;
pub mod engine;
pub mod fredholm;
pub mod instances;
pub mod monoid;
pub mod report;
pub mod space;

/// Scientific rendering with 17 significant digits.
pub(crate) fn sci(x: f64) -> String {
    format!("{:.16e}", x)
}
