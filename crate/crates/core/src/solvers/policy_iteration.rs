use super::{improve_with_rule, Method, SolveError, SolveResult, TieRule};
use crate::model::{evaluate, Policy, QueueModel, RateField, RewardTable};

#[derive(Debug, Clone, Default)]
pub struct PolicyIterationOptions {
    pub tie_rule: TieRule,
    /// Defaults to `10 (m+1) S`.
    pub max_iterations: Option<usize>,
}

/// Policy iteration with closed-form evaluation. Stops when the improved
/// policy equals the current one.
pub fn policy_iteration(
    rates: &RateField,
    model: &QueueModel,
    table: &RewardTable,
    initial: &Policy,
) -> Result<SolveResult, SolveError> {
    policy_iteration_with(rates, model, table, initial, &PolicyIterationOptions::default())
}

pub fn policy_iteration_with(
    rates: &RateField,
    model: &QueueModel,
    table: &RewardTable,
    initial: &Policy,
    options: &PolicyIterationOptions,
) -> Result<SolveResult, SolveError> {
    rates.check_shape(model)?;
    initial.check_shape(model.capacity, model.num_classes())?;
    let limit = options
        .max_iterations
        .unwrap_or(10 * (model.num_classes() + 1) * model.capacity);

    let mut policy = initial.clone();
    for iteration in 1..=limit {
        let eval = evaluate(&policy, rates, model, table);
        let next = improve_with_rule(table, &eval.relative_bias, options.tie_rule);
        if next == policy {
            return Ok(SolveResult {
                policy,
                eval,
                iterations: iteration,
                method: Method::PolicyIteration,
                vi_residual: None,
            });
        }
        policy = next;
    }
    Err(SolveError::NonTermination {
        method: Method::PolicyIteration,
        limit,
    })
}
