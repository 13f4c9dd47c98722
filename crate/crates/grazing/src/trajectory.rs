//! Time loop and snapshot diagnostics shared by both simulators.

use serde::Serialize;

use crate::cloud::ParticleCloud;
use crate::error::{param, Result};
use crate::metrics::entropy_knn;

pub trait Stepper {
    fn dt(&self) -> f64;

    /// Advance by one step; returns the number of collision events applied.
    fn step(&self, cloud: &mut ParticleCloud) -> Result<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub m2: f64,
    pub m4: f64,
    pub entropy: f64,
    pub max_speed: f64,
    /// events applied since the previous snapshot
    pub events: u64,
}

impl Diagnostics {
    pub fn of(cloud: &ParticleCloud, events: u64) -> Self {
        Diagnostics {
            t: cloud.time,
            m2: cloud.moment(2.0),
            m4: cloud.moment(4.0),
            entropy: entropy_knn(&cloud.velocities, 4).unwrap_or(f64::NAN),
            max_speed: cloud.max_speed(),
            events,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub cloud: ParticleCloud,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// Step index closest to time `t`.
pub fn steps_for(t: f64, dt: f64) -> u64 {
    (t / dt).round() as u64
}

/// Run up to `t_end`, recording the clouds at the step nearest each schedule time.
///
/// The initial cloud is always recorded when `0` is in the schedule or the
/// schedule is empty; the final cloud is always recorded.
pub fn run<S: Stepper>(sim: &S, mut cloud: ParticleCloud, t_end: f64, schedule: &[f64]) -> Result<Trajectory> {
    if schedule.iter().any(|&t| t < 0.0 || t > t_end + 1e-12) {
        return Err(param("snapshot times must lie in [0, T]"));
    }
    let dt = sim.dt();
    let total = steps_for(t_end, dt);
    let mut marks: Vec<u64> = schedule.iter().map(|&t| steps_for(t, dt)).collect();
    if marks.is_empty() {
        marks.push(0);
    }
    marks.push(total);
    marks.sort_unstable();
    marks.dedup();
    let mut traj = Trajectory::default();
    let mut events = 0;
    let mut next = 0;
    loop {
        if next < marks.len() && marks[next] == cloud.step {
            traj.snapshots.push(Snapshot {
                diagnostics: Diagnostics::of(&cloud, events),
                cloud: cloud.clone(),
            });
            events = 0;
            next += 1;
        }
        if cloud.step >= total {
            break;
        }
        events += sim.step(&mut cloud)?;
    }
    Ok(traj)
}
