use alloc::vec::Vec;

use super::WaypointPath;
use crate::error::{Error, Result};
use crate::model::State;

/// Desired full states, one per waypoint, followed by `padding` copies of the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub states: Vec<State>,
    pub dt: f64,
    /// Number of trailing terminal copies.
    pub padding: usize,
    /// Pen flags of the unpadded waypoints.
    pub pen: Vec<bool>,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of waypoints before padding.
    pub fn unpadded_len(&self) -> usize {
        self.states.len() - self.padding
    }

    /// Constant reference at `state` for `steps` steps, padded for horizon `horizon`.
    pub fn constant(state: State, steps: usize, horizon: usize, dt: f64) -> Self {
        Self {
            states: alloc::vec![state; steps + horizon],
            dt,
            padding: horizon,
            pen: alloc::vec![true; steps],
        }
    }
}

/// Level-attitude, zero-rate desired states from a waypoint path, padded with `horizon`
/// copies of the terminal state.
pub fn lift_to_reference(path: &WaypointPath, horizon: usize) -> Result<ReferenceTrajectory> {
    path.validate()?;
    let vel = path.velocities.as_ref().ok_or(Error::MissingVelocities)?;
    let mut states: Vec<State> = path
        .points
        .iter()
        .zip(vel)
        .map(|(r, v)| State {
            v: *v,
            ..State::at_rest(*r)
        })
        .collect();
    let last = *states.last().unwrap();
    states.extend(core::iter::repeat_n(last, horizon));
    Ok(ReferenceTrajectory {
        states,
        dt: path.dt,
        padding: horizon,
        pen: path.pen.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajgen::{figure8, velocity_profile_finite_diff, DEFAULT_V_CAP};
    use nalgebra::{Vector3, Vector4};

    #[test]
    fn figure8_padding_count() {
        let path = velocity_profile_finite_diff(&figure8(1000, 0.1, Vector3::zeros()).unwrap(), DEFAULT_V_CAP).unwrap();
        let r = lift_to_reference(&path, 75).unwrap();
        assert_eq!(r.len(), 1075);
        assert_eq!(r.unpadded_len(), 1000);
        let tail = &r.states[999..];
        assert_eq!(tail.len(), 76);
        assert!(tail.iter().all(|s| s == &tail[0]));
        for s in &r.states {
            assert_eq!(s.q, Vector4::new(1.0, 0.0, 0.0, 0.0));
            assert_eq!(s.w, Vector3::zeros());
            assert_eq!(s.r.z, 0.0);
        }
        assert_eq!(r.states[10].v, path.velocities.as_ref().unwrap()[10]);
    }

    #[test]
    fn velocities_required() {
        let path = figure8(8, 0.1, Vector3::zeros()).unwrap();
        assert!(matches!(lift_to_reference(&path, 5), Err(Error::MissingVelocities)));
    }
}
