//! Simulation of dielectric elastomer actuator/switch networks: ring
//! oscillators built from dielectric inverters and the crawling gait they
//! drive.

pub mod analysis;
pub mod dynamics;
pub mod electromech;
pub mod exec;
pub mod locomotion;
pub mod netlist;
