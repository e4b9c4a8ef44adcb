//! Value types for two-step trajectories and trajectory measurements.
//!
//! A time window spans two consecutive sampling instants, the window start and
//! the window end. A target intersecting the window is in exactly one of three
//! states: it died inside the window (state at the start only), it was born at
//! the window end (state at the end only), or it is alive at both ends. A
//! trajectory measurement mirrors that structure on the observation side with
//! a detection at the start, at the end, or at both ends.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Which part of the window a two-step trajectory occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoStepTrajectoryKind {
    /// Present at the window start only.
    DiedInWindow,
    /// Present at the window end only.
    BornAtEnd,
    /// Present at both window boundaries.
    Alive,
}

impl TwoStepTrajectoryKind {
    /// Index of the trajectory sub-space, 1..=3.
    pub fn tau(self) -> u8 {
        match self {
            TwoStepTrajectoryKind::DiedInWindow => 1,
            TwoStepTrajectoryKind::BornAtEnd => 2,
            TwoStepTrajectoryKind::Alive => 3,
        }
    }

    /// Number of states the trajectory carries.
    pub fn state_count(self) -> usize {
        match self {
            TwoStepTrajectoryKind::Alive => 2,
            _ => 1,
        }
    }
}

/// Which part of the window a trajectory measurement covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    /// Detection at the window start only.
    FirstOnly,
    /// Detection at the window end only.
    LastOnly,
    /// Detections at both boundaries (a full trajectory measurement).
    Full,
}

impl MeasurementKind {
    pub fn label(self) -> &'static str {
        match self {
            MeasurementKind::FirstOnly => "first",
            MeasurementKind::LastOnly => "last",
            MeasurementKind::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(MeasurementKind::FirstOnly),
            "last" => Ok(MeasurementKind::LastOnly),
            "full" => Ok(MeasurementKind::Full),
            _ => Err(Error::InvalidMeasurement("unknown measurement kind label")),
        }
    }
}

/// Sub-space index and number of detections for a measurement kind:
/// `mu` in 1..=3 and `iota` = 1 for partial measurements, 2 for full ones.
pub fn measurement_dim(kind: MeasurementKind) -> (u8, u8) {
    match kind {
        MeasurementKind::FirstOnly => (1, 1),
        MeasurementKind::LastOnly => (2, 1),
        MeasurementKind::Full => (3, 2),
    }
}

/// A single trajectory measurement over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeasurement {
    kind: MeasurementKind,
    z_first: Option<DVector<f64>>,
    z_last: Option<DVector<f64>>,
}

impl TrajectoryMeasurement {
    /// Validated constructor; endpoints must match the kind.
    pub fn new(
        kind: MeasurementKind,
        z_first: Option<DVector<f64>>,
        z_last: Option<DVector<f64>>,
    ) -> Result<Self> {
        match kind {
            MeasurementKind::FirstOnly => {
                if z_first.is_none() {
                    return Err(Error::InvalidMeasurement("first-only measurement missing z_first"));
                }
                if z_last.is_some() {
                    return Err(Error::InvalidMeasurement("first-only measurement carries z_last"));
                }
            }
            MeasurementKind::LastOnly => {
                if z_last.is_none() {
                    return Err(Error::InvalidMeasurement("last-only measurement missing z_last"));
                }
                if z_first.is_some() {
                    return Err(Error::InvalidMeasurement("last-only measurement carries z_first"));
                }
            }
            MeasurementKind::Full => {
                match (&z_first, &z_last) {
                    (Some(a), Some(b)) => {
                        if a.len() != b.len() {
                            return Err(Error::InvalidMeasurement(
                                "full measurement endpoints have different dimensions",
                            ));
                        }
                    }
                    _ => {
                        return Err(Error::InvalidMeasurement("full measurement missing an endpoint"))
                    }
                }
            }
        }
        Ok(Self { kind, z_first, z_last })
    }

    pub fn first_only(z: DVector<f64>) -> Self {
        Self {
            kind: MeasurementKind::FirstOnly,
            z_first: Some(z),
            z_last: None,
        }
    }

    pub fn last_only(z: DVector<f64>) -> Self {
        Self {
            kind: MeasurementKind::LastOnly,
            z_first: None,
            z_last: Some(z),
        }
    }

    pub fn full(z_first: DVector<f64>, z_last: DVector<f64>) -> Result<Self> {
        Self::new(MeasurementKind::Full, Some(z_first), Some(z_last))
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn z_first(&self) -> Option<&DVector<f64>> {
        self.z_first.as_ref()
    }

    pub fn z_last(&self) -> Option<&DVector<f64>> {
        self.z_last.as_ref()
    }

    /// All detections stacked into a single vector, window start first.
    pub fn stacked(&self) -> DVector<f64> {
        match self.kind {
            MeasurementKind::FirstOnly => self.z_first.clone().unwrap(),
            MeasurementKind::LastOnly => self.z_last.clone().unwrap(),
            MeasurementKind::Full => {
                let a = self.z_first.as_ref().unwrap();
                let b = self.z_last.as_ref().unwrap();
                let mut out = DVector::zeros(a.len() + b.len());
                out.rows_mut(0, a.len()).copy_from(a);
                out.rows_mut(a.len(), b.len()).copy_from(b);
                out
            }
        }
    }

    /// Dimension of a single detection.
    pub fn point_dim(&self) -> usize {
        self.z_first
            .as_ref()
            .or(self.z_last.as_ref())
            .map(|z| z.len())
            .unwrap_or(0)
    }
}

/// Window/time bookkeeping: windows advance in multiples of the fine sampling
/// interval, so the window interval is `fine_interval * fine_steps_per_window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowClock {
    pub window_index: u32,
    pub fine_steps_per_window: u32,
    pub fine_interval: f64,
}

impl WindowClock {
    pub fn new(window_index: u32, fine_steps_per_window: u32, fine_interval: f64) -> Self {
        Self {
            window_index,
            fine_steps_per_window,
            fine_interval,
        }
    }

    pub fn window_interval(&self) -> f64 {
        self.fine_interval * self.fine_steps_per_window as f64
    }

    /// Fine step (1-based) at the window start boundary.
    pub fn start_step(&self) -> u32 {
        1 + (self.window_index - 1) * self.fine_steps_per_window
    }

    /// Fine step (1-based) at the window end boundary.
    pub fn end_step(&self) -> u32 {
        1 + self.window_index * self.fine_steps_per_window
    }
}
