pub mod capture;
pub mod glob;
pub mod intersection;
pub mod netsim;
pub mod pdp;
pub mod permissions;
pub mod time;
pub mod topology;
