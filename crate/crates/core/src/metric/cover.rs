use crate::envs::BallState;
use crate::error::{Error, Result};

/// Finite cover of the state-action space used by fixed-discretization agents.
pub trait Cover {
    type State;

    fn n_balls(&self) -> usize;

    fn n_actions(&self) -> usize;

    /// Ball containing `(state, action)`.
    fn quantize(&self, state: &Self::State, action: usize) -> usize;
}

/// Discrete metric on a tabular space: one ball per `(s, a)`, id `s * A + a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscreteCover {
    pub states: usize,
    pub actions: usize,
}

impl Cover for DiscreteCover {
    type State = usize;

    fn n_balls(&self) -> usize {
        self.states * self.actions
    }

    fn n_actions(&self) -> usize {
        self.actions
    }

    fn quantize(&self, state: &usize, action: usize) -> usize {
        state * self.actions + action
    }
}

const BALL_SLACK: f64 = 1e-12;

/// Grid cover of the unit disk crossed with a finite action set.
///
/// The square `[-1, 1]^2` is cut into `m x m` cells of side `2/m <= sqrt(2) eps`,
/// so each cell has Euclidean diameter at most `2 eps`; only cells meeting the
/// disk are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsNet {
    epsilon: f64,
    actions: usize,
    per_axis: usize,
    /// Grid cell (row-major, `iy * m + ix`) to compact cell id.
    grid: Vec<Option<usize>>,
    centers: Vec<BallState>,
}

impl EpsNet {
    pub fn new(epsilon: f64, actions: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 2.0) {
            return Err(Error::param(format!("epsilon must lie in (0, 2], got {epsilon}")));
        }
        if actions == 0 {
            return Err(Error::param("an epsilon-net needs at least one action"));
        }
        let m = (2.0 / (std::f64::consts::SQRT_2 * epsilon)).ceil().max(1.0) as usize;
        let side = 2.0 / m as f64;
        let mut grid = vec![None; m * m];
        let mut centers = Vec::new();
        for iy in 0..m {
            for ix in 0..m {
                let lo = [-1.0 + ix as f64 * side, -1.0 + iy as f64 * side];
                // Closest point of the cell to the origin.
                let nearest = [0.0f64.clamp(lo[0], lo[0] + side), 0.0f64.clamp(lo[1], lo[1] + side)];
                if nearest[0].hypot(nearest[1]) <= 1.0 + BALL_SLACK {
                    grid[iy * m + ix] = Some(centers.len());
                    centers.push([lo[0] + side / 2.0, lo[1] + side / 2.0]);
                }
            }
        }
        Ok(Self {
            epsilon,
            actions,
            per_axis: m,
            grid,
            centers,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of retained grid cells (balls per action).
    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    /// State center and action of a ball.
    pub fn center(&self, ball: usize) -> (BallState, usize) {
        (self.centers[ball / self.actions], ball % self.actions)
    }

    fn axis_index(&self, x: f64) -> usize {
        let side = 2.0 / self.per_axis as f64;
        (((x + 1.0) / side).floor().max(0.0) as usize).min(self.per_axis - 1)
    }
}

impl Cover for EpsNet {
    type State = BallState;

    fn n_balls(&self) -> usize {
        self.centers.len() * self.actions
    }

    fn n_actions(&self) -> usize {
        self.actions
    }

    fn quantize(&self, state: &BallState, action: usize) -> usize {
        let (ix, iy) = (self.axis_index(state[0]), self.axis_index(state[1]));
        let cell = self.grid[iy * self.per_axis + ix].expect("states of the unit ball always fall in a retained cell");
        cell * self.actions + action
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::Rng;

    #[test]
    fn hand_counted_sizes() {
        assert_eq!(EpsNet::new(2.0, 5).unwrap().n_balls(), 5);
        // m = 3: every cell of the 3x3 grid meets the disk.
        assert_eq!(EpsNet::new(0.5, 1).unwrap().cells(), 9);
        // m = 8: all but the four corner cells, whose nearest point (0.75, 0.75) is outside.
        assert_eq!(EpsNet::new(0.2, 1).unwrap().cells(), 60);
        assert!(EpsNet::new(0.0, 1).is_err());
        assert!(EpsNet::new(2.5, 1).is_err());
    }

    #[test]
    fn quantize_is_idempotent_on_centers() {
        let net = EpsNet::new(0.3, 3).unwrap();
        for b in 0..net.n_balls() {
            let (c, a) = net.center(b);
            assert_eq!(net.quantize(&c, a), b);
        }
    }

    #[test]
    fn random_points_are_covered_within_epsilon() {
        let net = EpsNet::new(0.15, 5).unwrap();
        let mut rng = Rng::new(4);
        let mut n = 0;
        while n < 10_000 {
            let s = [2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0];
            if s[0].hypot(s[1]) > 1.0 {
                continue;
            }
            n += 1;
            let a = rng.below(5);
            let (c, ca) = net.center(net.quantize(&s, a));
            assert_eq!(ca, a);
            assert!((c[0] - s[0]).hypot(c[1] - s[1]) <= 0.15 + 1e-12);
        }
    }

    #[test]
    fn boundary_states_are_retained() {
        let net = EpsNet::new(0.05, 1).unwrap();
        for i in 0..3600 {
            let t = i as f64 / 3600.0 * std::f64::consts::TAU;
            let s = [t.cos() * (1.0 + 1e-13), t.sin() * (1.0 + 1e-13)];
            net.quantize(&s, 0);
        }
    }
}
