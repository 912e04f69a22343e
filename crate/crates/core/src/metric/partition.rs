use std::fmt::Write as _;

use crate::envs::BallState;

use super::params::D_MAX;

/// Node of a dyadic tree over the box `[-1, 1]^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub lo: BallState,
    pub hi: BallState,
    pub depth: u32,
    /// Quadrant `bx + 2 by`, where `bx = 1` is the upper half in x.
    pub children: Option<[usize; 4]>,
    pub count: usize,
    pub temp_q: Vec<f64>,
    pub policy_q: f64,
    pub stage_count: usize,
    pub stage_index: usize,
}

impl Node {
    /// Infinity-norm diameter `d_max 2^-depth`.
    pub fn diameter(&self) -> f64 {
        D_MAX * 0.5f64.powi(self.depth as i32)
    }

    pub fn center(&self) -> BallState {
        [(self.lo[0] + self.hi[0]) / 2.0, (self.lo[1] + self.hi[1]) / 2.0]
    }

    pub fn contains(&self, s: BallState) -> bool {
        (0..2).all(|i| self.lo[i] <= s[i] && s[i] <= self.hi[i])
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// A leaf of one `(step, action)` tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallRef {
    pub step: usize,
    pub action: usize,
    pub node: usize,
}

/// Record of one split, kept for auditing the splitting rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRecord {
    pub step: usize,
    pub action: usize,
    pub depth: u32,
    pub count: usize,
    pub diameter: f64,
}

/// One dyadic tree per `(step, action)` over the state box; the action
/// coordinate uses the discrete metric.
#[derive(Clone, Debug)]
pub struct Partition {
    horizon: usize,
    actions: usize,
    trees: Vec<Vec<Node>>,
    splits: Vec<SplitRecord>,
}

impl Partition {
    /// Roots at step `h` start with `temp_q = [init(h); members]` and `policy_q = init(h)`.
    pub fn new(horizon: usize, actions: usize, members: usize, init: impl Fn(usize) -> f64) -> Self {
        let trees = (0..horizon * actions)
            .map(|i| {
                let v = init(i / actions);
                vec![Node {
                    lo: [-1.0, -1.0],
                    hi: [1.0, 1.0],
                    depth: 0,
                    children: None,
                    count: 0,
                    temp_q: vec![v; members],
                    policy_q: v,
                    stage_count: 0,
                    stage_index: 0,
                }]
            })
            .collect();
        Self {
            horizon,
            actions,
            trees,
            splits: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn tree(&self, step: usize, action: usize) -> &[Node] {
        &self.trees[step * self.actions + action]
    }

    pub fn node(&self, ball: BallRef) -> &Node {
        &self.trees[ball.step * self.actions + ball.action][ball.node]
    }

    pub fn node_mut(&mut self, ball: BallRef) -> &mut Node {
        &mut self.trees[ball.step * self.actions + ball.action][ball.node]
    }

    pub fn splits(&self) -> &[SplitRecord] {
        &self.splits
    }

    /// Leaf of the `(step, action)` tree containing `s`. Points on a shared
    /// boundary go to the lower quadrant.
    pub fn leaf(&self, step: usize, action: usize, s: BallState) -> BallRef {
        let tree = self.tree(step, action);
        let mut i = 0;
        while let Some(children) = tree[i].children {
            let c = tree[i].center();
            let q = usize::from(s[0] > c[0]) + 2 * usize::from(s[1] > c[1]);
            i = children[q];
        }
        BallRef { step, action, node: i }
    }

    /// One leaf per action, in action order.
    pub fn relevant_balls(&self, step: usize, s: BallState) -> Vec<BallRef> {
        (0..self.actions).map(|a| self.leaf(step, a, s)).collect()
    }

    /// Relevant ball with the largest policy Q-value; ties go to the lowest action.
    pub fn select(&self, step: usize, s: BallState) -> BallRef {
        let mut best = self.leaf(step, 0, s);
        for a in 1..self.actions {
            let b = self.leaf(step, a, s);
            if self.node(b).policy_q > self.node(best).policy_q {
                best = b;
            }
        }
        best
    }

    /// `V̄_h(s)` over the relevant balls, zero past the horizon.
    pub fn value(&self, step: usize, s: BallState) -> f64 {
        if step >= self.horizon {
            return 0.0;
        }
        (0..self.actions)
            .map(|a| self.node(self.leaf(step, a, s)).policy_q)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Splits `ball` into four children if `sqrt(d_max^2 / n) <= diam`.
    /// Children copy the parent's counters and Q-values.
    pub fn maybe_split(&mut self, ball: BallRef) -> bool {
        let node = self.node(ball);
        debug_assert!(node.is_leaf());
        if node.count == 0 || (D_MAX * D_MAX / node.count as f64).sqrt() > node.diameter() {
            return false;
        }
        let parent = node.clone();
        let c = parent.center();
        self.splits.push(SplitRecord {
            step: ball.step,
            action: ball.action,
            depth: parent.depth,
            count: parent.count,
            diameter: parent.diameter(),
        });
        let tree = &mut self.trees[ball.step * self.actions + ball.action];
        let first = tree.len();
        for q in 0..4 {
            let (bx, by) = (q & 1, q >> 1);
            let lo = [
                if bx == 1 { c[0] } else { parent.lo[0] },
                if by == 1 { c[1] } else { parent.lo[1] },
            ];
            let hi = [
                if bx == 1 { parent.hi[0] } else { c[0] },
                if by == 1 { parent.hi[1] } else { c[1] },
            ];
            tree.push(Node {
                lo,
                hi,
                depth: parent.depth + 1,
                children: None,
                ..parent.clone()
            });
        }
        tree[ball.node].children = Some([first, first + 1, first + 2, first + 3]);
        true
    }

    /// Every leaf as `step action depth lo_x lo_y hi_x hi_y count policy_q`, one per line.
    pub fn dump(&self) -> String {
        let mut out = String::from("step action depth lo_x lo_y hi_x hi_y count policy_q\n");
        for h in 0..self.horizon {
            for a in 0..self.actions {
                for n in self.tree(h, a).iter().filter(|n| n.is_leaf()) {
                    let _ = writeln!(
                        out,
                        "{h} {a} {} {} {} {} {} {} {}",
                        n.depth, n.lo[0], n.lo[1], n.hi[0], n.hi[1], n.count, n.policy_q
                    );
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> Partition {
        Partition::new(2, 5, 3, |h| 10.0 - h as f64)
    }

    #[test]
    fn fresh_tree_has_roots_only() {
        let p = fresh();
        let balls = p.relevant_balls(0, [0.3, -0.2]);
        assert_eq!(balls.len(), 5);
        assert!(balls.iter().all(|b| b.node == 0));
        assert_eq!(p.value(1, [0.0, 0.0]), 9.0);
        assert_eq!(p.value(2, [0.0, 0.0]), 0.0);
    }

    #[test]
    fn root_splits_after_first_visit() {
        let mut p = fresh();
        let root = BallRef {
            step: 0,
            action: 0,
            node: 0,
        };
        assert!(!p.maybe_split(root));
        p.node_mut(root).count = 1;
        assert!(p.maybe_split(root));
        let balls = p.relevant_balls(0, [-0.9, -0.9]);
        let leaf = p.node(balls[0]);
        assert_eq!((leaf.depth, leaf.lo, leaf.hi), (1, [-1.0, -1.0], [0.0, 0.0]));
        assert!(balls[1..].iter().all(|b| b.node == 0));
        assert_eq!(leaf.count, 1);
        assert_eq!(leaf.temp_q, vec![10.0; 3]);
    }

    #[test]
    fn depth_one_threshold_is_four() {
        let mut p = fresh();
        let root = BallRef {
            step: 0,
            action: 2,
            node: 0,
        };
        p.node_mut(root).count = 1;
        p.maybe_split(root);
        let child = p.leaf(0, 2, [0.5, 0.5]);
        assert_eq!(p.node(child).diameter(), 1.0);
        p.node_mut(child).count = 3;
        assert!(!p.maybe_split(child));
        p.node_mut(child).count = 4;
        assert!(p.maybe_split(child));
    }

    #[test]
    fn boundary_ties_go_low() {
        let mut p = fresh();
        let root = BallRef {
            step: 0,
            action: 0,
            node: 0,
        };
        p.node_mut(root).count = 1;
        p.maybe_split(root);
        let n = p.node(p.leaf(0, 0, [0.0, 0.0]));
        assert_eq!(n.hi, [0.0, 0.0]);
    }

    #[test]
    fn selection_rules() {
        let mut p = fresh();
        assert_eq!(p.select(0, [0.1, 0.1]).action, 0);
        let b = p.leaf(0, 3, [0.1, 0.1]);
        p.node_mut(b).policy_q = 50.0;
        assert_eq!(p.select(0, [0.1, 0.1]).action, 3);
        for a in 0..5 {
            let b = p.leaf(0, a, [0.1, 0.1]);
            p.node_mut(b).policy_q += 7.5;
        }
        assert_eq!(p.select(0, [0.1, 0.1]).action, 3);
    }

    #[test]
    fn dump_lists_leaves() {
        let mut p = fresh();
        let root = BallRef {
            step: 1,
            action: 4,
            node: 0,
        };
        p.node_mut(root).count = 1;
        p.maybe_split(root);
        let text = p.dump();
        assert_eq!(text.lines().count(), 1 + 2 * 5 - 1 + 4);
        assert!(text.contains("1 4 1 -1 -1 0 0 1 9"));
    }
}
