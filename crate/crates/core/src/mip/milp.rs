//! `min_Z maxᵢ aᵢ + ⟨Gᵢ, Z⟩` over binary `Z` with `Σ Z ≤ ℓ`.
//!
//! The built-in backend is a depth-first branch and bound. A node fixes some
//! coordinates; its bound is the largest, over cuts, of that cut's minimum
//! over the free coordinates (take the most negative slopes while budget
//! remains). The maximum of per-cut minima never exceeds the minimum of the
//! maximum, so the bound is valid.

use serde::{Deserialize, Serialize};

use super::CutSet;
use crate::error::{Result, SaaError};
use crate::Real;

/// Optimum (or best found pattern) of the cut MILP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct MilpSolution<T> {
    pub z: Vec<bool>,
    /// Model value at `z`.
    pub objective: T,
    /// Proven lower bound on the model minimum; equals `objective` when exact.
    pub lower_bound: T,
    pub nodes: usize,
    pub exact: bool,
}

/// Solver for the cut MILP; an external solver can implement this.
pub trait MilpBackend {
    fn solve<T: Real>(&self, cuts: &CutSet<T>) -> Result<MilpSolution<T>>;
}

/// Built-in depth-first branch and bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchAndBound {
    /// Nodes to explore before returning the incumbent with the open-node bound.
    pub node_limit: Option<usize>,
}

/// Optimal pattern and model value with the default backend.
pub fn milp_min_cuts<T: Real>(cuts: &CutSet<T>) -> Result<(Vec<bool>, T)> {
    let sol = BranchAndBound::default().solve(cuts)?;
    Ok((sol.z, sol.objective))
}

const FREE: u8 = 2;

struct Model<T> {
    intercepts: Vec<T>,
    /// Per cut, the slope vector.
    slopes: Vec<Vec<T>>,
    /// Per cut, the coordinates with negative slope, most negative first.
    order: Vec<Vec<usize>>,
    impact: Vec<T>,
    ell: usize,
}

#[derive(Clone)]
struct Node<T> {
    state: Vec<u8>,
    ones: usize,
    bound: T,
}

impl<T: Real> Model<T> {
    fn new(cuts: &CutSet<T>) -> Self {
        let slopes: Vec<Vec<T>> = cuts.cuts.iter().map(|c| c.grad.as_slice().to_vec()).collect();
        let order = slopes
            .iter()
            .map(|g| {
                let mut idx: Vec<usize> = (0..g.len()).filter(|&v| g[v] < T::zero()).collect();
                idx.sort_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap().then(a.cmp(&b)));
                idx
            })
            .collect();
        let nvar = cuts.k * cuts.n;
        let impact = (0..nvar)
            .map(|v| slopes.iter().map(|g| g[v]).sum::<T>().abs())
            .collect();
        Self {
            intercepts: cuts.cuts.iter().map(|c| c.intercept()).collect(),
            slopes,
            order,
            impact,
            ell: cuts.ell,
        }
    }

    fn value(&self, z: &[bool]) -> T {
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(g, &a)| {
                a + z
                    .iter()
                    .zip(g)
                    .filter(|(on, _)| **on)
                    .map(|(_, &s)| s)
                    .sum::<T>()
            })
            .fold(T::neg_infinity(), T::max)
    }

    /// Node bound and the greedy completion of the cut attaining it.
    fn bound(&self, state: &[u8], ones: usize) -> (T, Vec<bool>) {
        let budget = self.ell.saturating_sub(ones);
        let mut best = T::neg_infinity();
        let mut best_cut = 0;
        for (c, g) in self.slopes.iter().enumerate() {
            let fixed: T = state
                .iter()
                .zip(g)
                .filter(|(s, _)| **s == 1)
                .map(|(_, &s)| s)
                .sum();
            let free: T = self.order[c]
                .iter()
                .filter(|&&v| state[v] == FREE)
                .take(budget)
                .map(|&v| g[v])
                .sum();
            let val = self.intercepts[c] + fixed + free;
            if val > best {
                best = val;
                best_cut = c;
            }
        }
        let mut z: Vec<bool> = state.iter().map(|&s| s == 1).collect();
        for &v in self.order[best_cut]
            .iter()
            .filter(|&&v| state[v] == FREE)
            .take(budget)
        {
            z[v] = true;
        }
        (best, z)
    }

    fn branch_var(&self, state: &[u8]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for v in (0..state.len()).filter(|&v| state[v] == FREE) {
            match best {
                Some(b) if self.impact[v] <= self.impact[b] => {}
                _ => best = Some(v),
            }
        }
        best
    }

    /// Turns ones off in index order while the model value does not rise.
    fn minimalize(&self, z: &mut [bool], target: T) {
        for v in 0..z.len() {
            if z[v] {
                z[v] = false;
                if self.value(z) > target {
                    z[v] = true;
                }
            }
        }
    }
}

fn close<T: Real>(bound: T, incumbent: T) -> bool {
    bound >= incumbent - T::lit(1e-12) * incumbent.abs().max(T::one())
}

impl MilpBackend for BranchAndBound {
    fn solve<T: Real>(&self, cuts: &CutSet<T>) -> Result<MilpSolution<T>> {
        if cuts.cuts.is_empty() {
            return Err(SaaError::invalid("cut MILP needs at least one cut"));
        }
        let nvar = cuts.k * cuts.n;
        if cuts.cuts.iter().any(|c| c.grad.as_slice().len() != nvar) {
            return Err(SaaError::shape(
                "milp",
                format!("{nvar} slopes per cut"),
                "ragged cuts".to_string(),
            ));
        }
        let model = Model::new(cuts);
        let mut best_z = vec![false; nvar];
        let mut best = model.value(&best_z);

        let root_state = vec![FREE; nvar];
        let (root_bound, root_z) = model.bound(&root_state, 0);
        let root_val = model.value(&root_z);
        if root_val < best {
            best = root_val;
            best_z = root_z;
        }
        let mut stack = vec![Node {
            state: root_state,
            ones: 0,
            bound: root_bound,
        }];
        let mut nodes = 0usize;
        let mut truncated = false;
        while let Some(node) = stack.pop() {
            if close(node.bound, best) {
                continue;
            }
            if self.node_limit.is_some_and(|lim| nodes >= lim) {
                stack.push(node);
                truncated = true;
                break;
            }
            nodes += 1;
            let Some(v) = model.branch_var(&node.state) else {
                continue;
            };
            let mut children = Vec::with_capacity(2);
            for val in [0u8, 1u8] {
                if val == 1 && node.ones >= model.ell {
                    continue;
                }
                let mut state = node.state.clone();
                state[v] = val;
                let ones = node.ones + val as usize;
                let (bound, z) = model.bound(&state, ones);
                let zv = model.value(&z);
                if zv < best {
                    best = zv;
                    best_z = z;
                }
                if !close(bound, best) {
                    children.push(Node { state, ones, bound });
                }
            }
            // explore the lower bound first; the z = 0 child wins ties
            if children.len() == 2 && children[1].bound < children[0].bound {
                children.swap(0, 1);
            }
            stack.extend(children.into_iter().rev());
        }
        let lower_bound = if truncated {
            stack.iter().map(|n| n.bound).fold(best, T::min)
        } else {
            best
        };
        model.minimalize(&mut best_z, best);
        let objective = model.value(&best_z);
        Ok(MilpSolution {
            z: best_z,
            objective,
            lower_bound: lower_bound.min(objective),
            nodes,
            exact: !truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;
    use crate::mip::Cut;

    fn cut(z: &[bool], value: f64, g: &[f64], n: usize) -> Cut<f64> {
        Cut {
            z: z.to_vec(),
            value,
            grad: DenseMatrix::new(g.len() / n, n, g.to_vec()).unwrap(),
        }
    }

    fn brute(cs: &CutSet<f64>) -> f64 {
        let nvar = cs.k * cs.n;
        (0u32..1 << nvar)
            .filter(|mask| mask.count_ones() as usize <= cs.ell)
            .map(|mask| {
                let z: Vec<bool> = (0..nvar).map(|v| mask >> v & 1 == 1).collect();
                cs.lower_model(&z)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_cut_is_greedy() {
        let mut cs = CutSet::new(2, 2, 2);
        cs.push(cut(&[false; 4], 5.0, &[-1.0, -4.0, -2.0, 0.0], 2));
        let (z, eta) = milp_min_cuts(&cs).unwrap();
        assert_eq!(z, vec![false, true, true, false]);
        assert!((eta + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_cuts_pick_empty_pattern() {
        let mut cs = CutSet::new(2, 2, 3);
        cs.push(cut(&[true, false, false, false], 2.0, &[0.0; 4], 2));
        cs.push(cut(&[false, true, false, false], 3.0, &[0.0; 4], 2));
        let (z, eta) = milp_min_cuts(&cs).unwrap();
        assert_eq!(z, vec![false; 4]);
        assert_eq!(eta, 3.0);
    }

    #[test]
    fn two_cuts_match_enumeration() {
        let mut cs = CutSet::new(2, 2, 2);
        cs.push(cut(&[false; 4], 4.0, &[-3.0, -1.0, -2.0, -0.5], 2));
        cs.push(cut(&[true, false, true, false], 1.0, &[0.0, -2.0, -0.5, -2.5], 2));
        let (z, eta) = milp_min_cuts(&cs).unwrap();
        assert!((eta - brute(&cs)).abs() < 1e-12);
        assert!((cs.lower_model(&z) - eta).abs() < 1e-12);
        assert!(z.iter().filter(|v| **v).count() <= 2);
    }

    #[test]
    fn node_limit_keeps_valid_bound() {
        let mut cs = CutSet::new(2, 3, 3);
        cs.push(cut(&[false; 6], 4.0, &[-3.0, -1.0, -2.0, -0.5, -1.5, -0.2], 3));
        cs.push(cut(&[true, false, true, false, false, false], 1.0, &[0.0, -2.0, -0.5, -2.5, -0.1, -1.0], 3));
        cs.push(cut(&[false, true, false, true, false, false], 2.0, &[-1.0, 0.0, -1.5, 0.0, -2.0, -0.3], 3));
        let sol = BranchAndBound { node_limit: Some(1) }.solve(&cs).unwrap();
        let opt = brute(&cs);
        assert!(sol.lower_bound <= opt + 1e-12);
        assert!(sol.objective >= opt - 1e-12);
    }
}
