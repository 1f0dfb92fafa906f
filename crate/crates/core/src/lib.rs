//! Static analysis core: package container, MiniJS front end, backward
//! slicing and the vulnerability detectors.

pub mod detectors;
pub mod flow;
pub mod forge;
pub mod minijs;
pub mod pkg;
pub mod scan;
