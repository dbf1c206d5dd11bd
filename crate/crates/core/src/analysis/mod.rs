//! Arrival detection, speed estimation, closed-form theory, sweeps and
//! event classification.

pub mod arrivals;
pub mod classify;
pub mod reflection;
pub mod sweep;
pub mod theory;

pub use arrivals::{default_threshold, detect_arrivals, ArrivalReport, BusArrival};
pub use classify::{classify_event, ClassifyOptions, EventClass};
pub use reflection::{detect_reflection, ReflectionReport};
pub use sweep::{run_sensitivity_sweep, SweepParameter, SweepPoint, SweepSpec};
pub use theory::{inertia_density, speed_mech_theory, theory_report, TheoryInputs, TheoryReport, LIGHT_SPEED};
