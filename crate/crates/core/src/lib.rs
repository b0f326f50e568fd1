//! Management and segmentation metrics for networks of educational web
//! portals.
//!
//! Each module covers one area: [`catalog`] for content provision,
//! [`structure`] for site organization, [`usage`] for access logs,
//! [`position`] for the cross-site link graph and [`segmentation`] for the
//! portal typology. [`report`] assembles the shareable per-portal report and
//! compares portals within a segment, and [`pipeline`] wires it all together.

pub mod catalog;
pub mod error;
pub mod fixtures;
pub mod pipeline;
pub mod position;
pub mod report;
pub mod segmentation;
pub mod structure;
pub mod usage;

pub use error::{Error, ErrorKind, Result};
pub use report::{NetworkComparison, PortalReport};
