//! Cycle decomposition of a (true, candidate) selection pair.
//!
//! Slot `s` pairs row `true[s]` of `B` with row `cand[s]` of `B̂`. Following
//! `true[s] -> cand[s]`, then the slot where `cand[s]` sits in `B`, and so on,
//! traces a chain of rows of `A`. A chain either returns to its first row
//! (complete cycle) or reaches a row of `B̂` that is not a row of `B`
//! (incomplete cycle). Chains partition the `N` slots.

use serde::{Deserialize, Serialize};

use crate::densela::Mat;
use crate::error::{Error, Result};
use crate::model::Selection;

/// One cycle `v1, v2, ..., vn` of row ids of `A`.
///
/// `v1..v(n-1)` are rows of `B`, `v2..vn` rows of `B̂`, and slot by slot
/// `B` holds `v_i` where `B̂` holds `v_(i+1)`. A fixed point is stored as
/// `(v, v)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub row_ids: Vec<usize>,
    pub complete: bool,
}

impl Cycle {
    /// Number of slots (rows of `C`) covered by the cycle.
    pub fn len(&self) -> usize {
        self.row_ids.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn b_rows(&self) -> &[usize] {
        &self.row_ids[..self.row_ids.len() - 1]
    }

    pub fn b_hat_rows(&self) -> &[usize] {
        &self.row_ids[1..]
    }

    fn min_id(&self) -> usize {
        *self.row_ids.iter().min().expect("cycle is non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleDecomposition {
    pub cycles: Vec<Cycle>,
    pub n_complete: usize,
    pub n_total: usize,
}

fn check_pair(true_sel: &Selection, cand_sel: &Selection) -> Result<()> {
    if true_sel.len() != cand_sel.len() || true_sel.source_rows() != cand_sel.source_rows() {
        return Err(Error::dim(format!(
            "selections differ in shape: {} of {} vs {} of {}",
            true_sel.len(),
            true_sel.source_rows(),
            cand_sel.len(),
            cand_sel.source_rows()
        )));
    }
    Ok(())
}

/// Decomposes `C = [B, B̂]` into cycles, with `B` taken by `true_sel` and `B̂`
/// by `cand_sel`.
///
/// Canonical order: complete cycles first, then incomplete ones, each group
/// sorted by the smallest row id it contains. Complete cycles start at their
/// smallest row id; incomplete cycles start at the only row that can begin
/// them (a row of `B` absent from `B̂`).
pub fn decompose(true_sel: &Selection, cand_sel: &Selection) -> Result<CycleDecomposition> {
    check_pair(true_sel, cand_sel)?;
    let m = true_sel.source_rows();
    let b = true_sel.picks();
    let b_hat = cand_sel.picks();

    let mut slot_in_b = vec![None; m];
    for (s, &r) in b.iter().enumerate() {
        slot_in_b[r] = Some(s);
    }
    let mut in_b_hat = vec![false; m];
    for &r in b_hat {
        in_b_hat[r] = true;
    }

    let mut visited = vec![false; b.len()];
    let mut complete = Vec::new();
    let mut incomplete = Vec::new();

    // Chains that end outside B must start outside B̂.
    for start in 0..b.len() {
        if in_b_hat[b[start]] {
            continue;
        }
        let mut ids = vec![b[start]];
        let mut slot = start;
        loop {
            visited[slot] = true;
            let next = b_hat[slot];
            ids.push(next);
            match slot_in_b[next] {
                Some(s) => slot = s,
                None => break,
            }
        }
        incomplete.push(Cycle {
            row_ids: ids,
            complete: false,
        });
    }

    let mut order: Vec<usize> = (0..b.len()).filter(|&s| !visited[s]).collect();
    order.sort_by_key(|&s| b[s]);
    for start in order {
        if visited[start] {
            continue;
        }
        let mut ids = vec![b[start]];
        let mut slot = start;
        loop {
            visited[slot] = true;
            let next = b_hat[slot];
            ids.push(next);
            if next == b[start] {
                break;
            }
            slot = slot_in_b[next].expect("every row reached from a closed chain is in B");
        }
        complete.push(Cycle {
            row_ids: ids,
            complete: true,
        });
    }

    complete.sort_by_key(Cycle::min_id);
    incomplete.sort_by_key(Cycle::min_id);
    let n_complete = complete.len();
    let mut cycles = complete;
    cycles.extend(incomplete);
    Ok(CycleDecomposition {
        n_total: cycles.len(),
        n_complete,
        cycles,
    })
}

/// `C = [B, B̂]` with its rows regrouped cycle by cycle in decomposition
/// order; row `i` of the result is `[A[v_i], A[v_(i+1)]]` within its cycle.
pub fn cycle_ordered_form(
    decomp: &CycleDecomposition,
    true_sel: &Selection,
    cand_sel: &Selection,
    a: &Mat,
) -> Result<Mat> {
    check_pair(true_sel, cand_sel)?;
    if a.rows() != true_sel.source_rows() {
        return Err(Error::dim(format!(
            "matrix has {} rows, selections index {}",
            a.rows(),
            true_sel.source_rows()
        )));
    }
    let m = true_sel.source_rows();
    let mut slot_in_b = vec![None; m];
    for (s, &r) in true_sel.picks().iter().enumerate() {
        slot_in_b[r] = Some(s);
    }
    let mut used = vec![false; true_sel.len()];
    let mut left = Vec::with_capacity(true_sel.len());
    let mut right = Vec::with_capacity(true_sel.len());
    for cycle in &decomp.cycles {
        for pair in cycle.row_ids.windows(2) {
            let slot = pair
                .first()
                .and_then(|&r| slot_in_b.get(r).copied().flatten())
                .ok_or_else(|| Error::invalid(format!("row {} is not a row of B", pair[0])))?;
            if cand_sel.picks()[slot] != pair[1] || std::mem::replace(&mut used[slot], true) {
                return Err(Error::invalid(
                    "decomposition does not match the selection pair",
                ));
            }
            left.push(pair[0]);
            right.push(pair[1]);
        }
    }
    if used.iter().any(|u| !u) {
        return Err(Error::invalid("decomposition does not cover every slot"));
    }
    a.select_rows(&left)?.hcat(&a.select_rows(&right)?)
}
