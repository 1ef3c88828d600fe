use alloc::string::String;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Agent, AgentStats};
use crate::{Result, SimRng, Vector};

/// Plays `u ~ N(0, I)` for the first `steps` actions, then hands over to the
/// wrapped agent. Every transition, including the warmup ones, is passed on.
#[derive(Debug, Clone)]
pub struct Warmup<A> {
    inner: A,
    name: String,
    steps: usize,
    input_dim: usize,
    t: usize,
}

impl<A: Agent> Warmup<A> {
    pub fn new(inner: A, name: impl Into<String>, steps: usize, input_dim: usize) -> Self {
        Self {
            inner,
            name: name.into(),
            steps,
            input_dim,
            t: 0,
        }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: Agent> Agent for Warmup<A> {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, x: &Vector, rng: &mut SimRng) -> Vector {
        let t = self.t;
        self.t += 1;
        if t < self.steps {
            Vector::from_fn(self.input_dim, |_, _| rng.sample::<f64, _>(StandardNormal))
        } else {
            self.inner.act(x, rng)
        }
    }

    fn observe(&mut self, x: &Vector, u: &Vector, x_next: &Vector) -> Result<()> {
        self.inner.observe(x, u, x_next)
    }

    fn stats(&self) -> AgentStats {
        self.inner.stats()
    }
}
