pub mod dependence;
pub mod dps;
pub mod fixtures;
pub mod ring;
pub mod schema;
pub mod setdef;
pub mod text;
pub mod transform;
