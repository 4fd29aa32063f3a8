use markov_core::{Matrix, PROB_TOL};
use moma_builder::{ModuleModel, UnitState};

use crate::cost::CostParams;
use crate::error::{PolicyError, Result};

/// Builds the maintenance matrix of a module over its extended state space
/// (operational states x MAP phases, aggregated down state last).
///
/// Optimal rows are identity; critical rows restore every failed unit
/// according to its repair law while working units and the MAP phase stay
/// put; the down row replaces the whole module according to its replacement
/// law, re-seeding the MAP phase from the shock process initial vector.
pub fn build_maintenance_matrix(model: &ModuleModel) -> Result<Matrix> {
    let b = model.map_order();
    let n_ext = model.ext_op_count();
    let n_opt_ext = model.ext_optimal_count();
    let total = n_ext + 1;
    let part = model.partition();
    let mut m = Matrix::zeros(total, total);

    // Optimal states: no intervention.
    for s in 0..n_opt_ext {
        m.set(s, s, 1.0);
    }

    // Critical states: repair the failed units.
    for tuple_idx in part.critical() {
        let tuple = &model.op_tuples()[tuple_idx];
        let failed: Vec<usize> = tuple
            .iter()
            .enumerate()
            .filter_map(|(j, s)| matches!(s, UnitState::Failed).then_some(j))
            .collect();
        let mut assignments: Vec<(Vec<UnitState>, f64)> = vec![(tuple.clone(), 1.0)];
        for &j in &failed {
            let law = model.repair_law(j);
            let mut next = Vec::with_capacity(assignments.len() * law.len());
            for (t, w) in &assignments {
                for (phase, &p) in law.entries().iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let mut repaired = t.clone();
                    repaired[j] = UnitState::Op(phase);
                    next.push((repaired, w * p));
                }
            }
            assignments = next;
        }
        for (target, weight) in assignments {
            let target_idx = model.tuple_index(&target).ok_or_else(|| {
                PolicyError::Maintenance(format!(
                    "module {}: repair target of a critical state is not an operational state",
                    model.name
                ))
            })?;
            if target_idx >= part.n_optimal {
                return Err(PolicyError::Maintenance(format!(
                    "module {}: repair of a critical state lands outside the optimal class; \
                     the optimal-state override is incompatible with the repair laws",
                    model.name
                )));
            }
            for ph in 0..b {
                m.add_to(tuple_idx * b + ph, target_idx * b + ph, weight);
            }
        }
    }

    // Aggregated down state: replace the module.
    let beta = model.replacement_law();
    let map_initial: Vec<f64> = match model.shock() {
        Some((map, _)) => map.initial().entries().to_vec(),
        None => vec![1.0],
    };
    for (opt, &w) in beta.entries().iter().enumerate() {
        for (ph, &q) in map_initial.iter().enumerate() {
            m.set(n_ext, opt * b + ph, w * q);
        }
    }

    validate_maintenance_matrix(&m, n_opt_ext, &model.name)?;
    Ok(m)
}

fn validate_maintenance_matrix(m: &Matrix, n_opt_ext: usize, name: &str) -> Result<()> {
    for i in 0..m.rows() {
        let rs: f64 = m.row(i).iter().sum();
        if (rs - 1.0).abs() > PROB_TOL {
            return Err(PolicyError::Maintenance(format!(
                "module {name}: maintenance row {i} sums to {rs}"
            )));
        }
        let off_optimal: f64 = m.row(i)[n_opt_ext..].iter().sum();
        if off_optimal > PROB_TOL {
            return Err(PolicyError::Maintenance(format!(
                "module {name}: maintenance row {i} leaves mass outside the optimal class"
            )));
        }
    }
    Ok(())
}

/// Builds the cost matrix paired with the maintenance matrix: entry (s, s')
/// is the cost charged when maintenance moves the module from s to s'.
///
/// Optimal diagonal carries the inspection cost; critical rows charge the
/// inspection cost plus the restoration cost of every failed unit to its
/// landing phase; the down row charges inspection plus module replacement.
pub fn build_cost_matrix(
    model: &ModuleModel,
    maintenance: &Matrix,
    costs: &CostParams,
    module_index: usize,
) -> Result<Matrix> {
    let b = model.map_order();
    let n_ext = model.ext_op_count();
    let part = model.partition();
    let mut c = Matrix::zeros(n_ext + 1, n_ext + 1);
    let restore = &costs.restore[module_index];

    for s in 0..model.ext_optimal_count() {
        c.set(s, s, costs.inspection);
    }

    for tuple_idx in part.critical() {
        let tuple = &model.op_tuples()[tuple_idx];
        let failed: Vec<usize> = tuple
            .iter()
            .enumerate()
            .filter_map(|(j, s)| matches!(s, UnitState::Failed).then_some(j))
            .collect();
        for ph in 0..b {
            let row = tuple_idx * b + ph;
            for col in 0..n_ext {
                if maintenance.get(row, col) == 0.0 {
                    continue;
                }
                let (target_tuple_idx, _) = model.split_ext(col);
                let target = &model.op_tuples()[target_tuple_idx];
                let mut cost = costs.inspection;
                for &j in &failed {
                    match target[j] {
                        UnitState::Op(phase) => cost += restore[j][phase],
                        UnitState::Failed => {
                            return Err(PolicyError::Maintenance(format!(
                                "module {}: maintenance target keeps unit {j} failed",
                                model.name
                            )))
                        }
                    }
                }
                c.set(row, col, cost);
            }
        }
    }

    let down_row = n_ext;
    for col in 0..n_ext {
        if maintenance.get(down_row, col) != 0.0 {
            c.set(
                down_row,
                col,
                costs.inspection + costs.module_replacement[module_index],
            );
        }
    }
    Ok(c)
}

/// Per-row expected maintenance cost `(M ⊙ C) e`.
pub fn expected_row_costs(maintenance: &Matrix, cost: &Matrix) -> Vec<f64> {
    (0..maintenance.rows())
        .map(|i| {
            maintenance
                .row(i)
                .iter()
                .zip(cost.row(i))
                .map(|(m, c)| m * c)
                .sum()
        })
        .collect()
}

/// Restriction of the maintenance matrix to its optimal-class columns, the
/// shape in which small models print it.
pub fn maintenance_optimal_block(model: &ModuleModel, maintenance: &Matrix) -> Matrix {
    let cols: Vec<usize> = (0..model.ext_optimal_count()).collect();
    let rows: Vec<usize> = (0..maintenance.rows()).collect();
    maintenance.submatrix(&rows, &cols)
}
