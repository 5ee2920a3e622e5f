//! Per-edge decay rates (theta, mu) fixed ahead of each convex solve, and the
//! default sweep grid used when no rates are pinned.

use crate::model::types::{GraphModel, NodeId};
use crate::rat::{parse_rat, rat, ratio, Rat};
use num::Signed;
use serde::{Deserialize, Serialize};

/// Rates keyed by edge triplet (from, to, k).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RatePlan {
    pub rates: Vec<((NodeId, NodeId, usize), (Rat, Rat))>,
}

impl RatePlan {
    pub fn uniform(model: &GraphModel, theta: Rat, mu: Rat) -> Self {
        assert!(!theta.is_negative(), "theta must be nonnegative");
        let mut rates = Vec::new();
        for e in &model.edges {
            // edges out of the start node encode initial conditions: theta 0
            let th = if e.from == model.start { rat(0) } else { theta.clone() };
            rates.push(((e.from, e.to, e.k), (th, mu.clone())));
        }
        RatePlan { rates }
    }

    pub fn get(&self, from: NodeId, to: NodeId, k: usize) -> Option<&(Rat, Rat)> {
        self.rates
            .iter()
            .find(|(key, _)| *key == (from, to, k))
            .map(|(_, r)| r)
    }

    pub fn set(&mut self, from: NodeId, to: NodeId, k: usize, theta: Rat, mu: Rat) {
        if let Some(slot) = self.rates.iter_mut().find(|(key, _)| *key == (from, to, k)) {
            slot.1 = (theta, mu);
        } else {
            self.rates.push(((from, to, k), (theta, mu)));
        }
    }
}

/// Default sweep grids (the experiments fix rates per run; the sweep is the
/// search-driver convention when none are given).
pub fn default_theta_grid() -> Vec<Rat> {
    vec![rat(0), ratio(1, 2), ratio(9, 10), ratio(49, 50), rat(1), ratio(51, 50)]
}

pub fn default_mu_grid() -> Vec<Rat> {
    vec![rat(0), ratio(1, 1000), rat(1)]
}

pub fn parse_grid(s: &str) -> Result<Vec<Rat>, crate::rat::RatParseError> {
    s.split(',').map(|p| parse_rat(p.trim())).collect()
}
