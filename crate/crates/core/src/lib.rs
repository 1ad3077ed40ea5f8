//! Calibrate, deduce and warn: taxi-conflict early warning for airport
//! surface movement.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`trackdata`] and [`calibration`] turn historical surface fixes into
//!    per-taxiway speed intervals, split by weekday/weekend and day/night.
//! 2. [`deduction`] takes a taxi clearance ([`airportmodel::TaxiCommand`])
//!    and produces the arrival-time interval at every node of the route
//!    before the aircraft moves.
//! 3. [`conflict`] compares the deduced timelines of two clearances at
//!    every shared node or segment, computes a conflict probability and
//!    maps it to a warning level and a recommended controller action.
//!
//! Model assumptions carried through the whole crate:
//! - a clearance fully determines the route before taxiing starts;
//! - holding and waiting are already part of the historical speed data, so
//!   no separate stop model exists;
//! - ground vehicles other than aircraft are not modelled.

pub mod airportmodel;
pub mod calibration;
pub mod conflict;
pub mod deduction;
pub mod geo;
pub mod geofence;
pub mod synth;
pub mod trackdata;
pub mod units;

pub use airportmodel::{AirportMap, TaxiCommand};
pub use calibration::{CalibrationSet, SpeedInterval, TimeBand};
pub use conflict::{ConflictReport, WarningLevel};
pub use deduction::{DeducedTimeline, TimeInterval};
