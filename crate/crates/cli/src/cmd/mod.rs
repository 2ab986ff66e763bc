//! Subcommand handlers. Each one fills a report and returns an error only
//! when the input itself is unusable.

pub mod dep;
pub mod dps;
pub mod ring;
pub mod schema;
pub mod setdef;

/// `a, b, c` from anything printable.
pub fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
