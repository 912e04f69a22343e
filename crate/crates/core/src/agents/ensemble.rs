use crate::policy::max_value;

/// Ensemble of temporary Q-tables plus the acting table and counters,
/// all laid out `[H][S][A]` (the ensemble as `[J][H][S][A]`).
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleQ {
    horizon: usize,
    states: usize,
    actions: usize,
    members: usize,
    pub temp_q: Vec<f64>,
    pub policy_q: Vec<f64>,
    pub stage_count: Vec<usize>,
    pub stage_index: Vec<usize>,
    pub total_count: Vec<usize>,
}

impl EnsembleQ {
    /// Every member and the acting table start from `init[cell]`.
    pub fn new(horizon: usize, states: usize, actions: usize, members: usize, init: &[f64]) -> Self {
        let cells = horizon * states * actions;
        assert_eq!(init.len(), cells);
        let mut temp_q = Vec::with_capacity(cells * members);
        for _ in 0..members {
            temp_q.extend_from_slice(init);
        }
        Self {
            horizon,
            states,
            actions,
            members,
            temp_q,
            policy_q: init.to_vec(),
            stage_count: vec![0; cells],
            stage_index: vec![0; cells],
            total_count: vec![0; cells],
        }
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn cells(&self) -> usize {
        self.policy_q.len()
    }

    pub fn cell(&self, step: usize, state: usize, action: usize) -> usize {
        (step * self.states + state) * self.actions + action
    }

    pub fn temp(&self, member: usize, cell: usize) -> f64 {
        self.temp_q[member * self.cells() + cell]
    }

    /// Acting values `Q̄_h(s, ·)`.
    pub fn policy_row(&self, step: usize, state: usize) -> &[f64] {
        let c = self.cell(step, state, 0);
        &self.policy_q[c..c + self.actions]
    }

    /// `V̄_h(s) = max_a Q̄_h(s, a)`, zero past the horizon.
    pub fn value(&self, step: usize, state: usize) -> f64 {
        if step >= self.horizon {
            return 0.0;
        }
        max_value(self.policy_row(step, state))
    }

    /// `Ṽ^j_h(s) = max_a Q̃^j_h(s, a)`, zero past the horizon.
    pub fn member_value(&self, member: usize, step: usize, state: usize) -> f64 {
        if step >= self.horizon {
            return 0.0;
        }
        let c = member * self.cells() + self.cell(step, state, 0);
        max_value(&self.temp_q[c..c + self.actions])
    }

    /// `Q̃^j ← (1 - w_j) Q̃^j + w_j target_j` for every member.
    pub fn blend(&mut self, cell: usize, rates: &[f64], targets: &[f64]) {
        let cells = self.cells();
        for (j, (w, t)) in rates.iter().zip(targets).enumerate() {
            let q = &mut self.temp_q[j * cells + cell];
            *q = (1.0 - w) * *q + w * t;
        }
    }

    /// `Q̄ ← max_j Q̃^j` at one cell.
    pub fn refresh_policy(&mut self, cell: usize) {
        let cells = self.cells();
        self.policy_q[cell] = (0..self.members)
            .map(|j| self.temp_q[j * cells + cell])
            .fold(f64::NEG_INFINITY, f64::max);
    }

    pub fn reset_temp(&mut self, cell: usize, value: f64) {
        let cells = self.cells();
        for j in 0..self.members {
            self.temp_q[j * cells + cell] = value;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_half_weight_blend() {
        let mut e = EnsembleQ::new(1, 1, 1, 1, &[4.0]);
        e.blend(0, &[0.5], &[2.0]);
        assert_eq!(e.temp(0, 0), 3.0);
    }

    #[test]
    fn refresh_takes_member_max() {
        let mut e = EnsembleQ::new(1, 1, 2, 3, &[1.0, 1.0]);
        e.blend(1, &[1.0, 1.0, 1.0], &[0.2, 0.9, 0.4]);
        e.refresh_policy(1);
        assert_eq!(e.policy_q[1], 0.9);
        assert_eq!(e.value(0, 0), 1.0);
        assert_eq!(e.value(1, 0), 0.0);
        assert_eq!(e.member_value(0, 0, 0), 1.0);
    }
}
