use alloc::string::String;

use super::{Agent, AgentStats};
use crate::{Mat, Result, SimRng, Vector};

/// `u = -K x` with a gain that never changes. With the true optimal gain this
/// is the zero-regret reference.
#[derive(Debug, Clone)]
pub struct FixedGainAgent {
    name: String,
    gain: Mat,
}

impl FixedGainAgent {
    pub fn new(name: impl Into<String>, gain: Mat) -> Self {
        Self { name: name.into(), gain }
    }

    pub fn gain(&self) -> &Mat {
        &self.gain
    }
}

impl Agent for FixedGainAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, x: &Vector, _rng: &mut SimRng) -> Vector {
        -(&self.gain * x)
    }

    fn observe(&mut self, _x: &Vector, _u: &Vector, _x_next: &Vector) -> Result<()> {
        Ok(())
    }

    fn stats(&self) -> AgentStats {
        AgentStats::default()
    }
}
