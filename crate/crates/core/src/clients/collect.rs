use std::collections::BTreeMap;

use super::{CallKey, ChatModel, ClientError, Result};
use crate::lexical::{QueryId, QuerySet};
use crate::parallel::run_keyed;

/// `t` responses per query, keyed by query id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSet {
    pub t: usize,
    pub responses: BTreeMap<QueryId, Vec<String>>,
    pub total_calls: usize,
}

impl ResponseSet {
    pub fn get(&self, id: QueryId) -> Option<&[String]> {
        self.responses.get(&id).map(Vec::as_slice)
    }
}

/// Refuse a run whose call count exceeds the budget.
pub fn check_budget(calls: usize, budget: usize) -> Result<()> {
    if calls > budget {
        return Err(ClientError::BudgetExceeded {
            required: calls,
            budget,
        });
    }
    Ok(())
}

/// Issue every query of `qs` exactly `t` times.
///
/// The budget is checked before the first call. Calls may run on up to
/// `parallelism` threads; results are stored by `(query, repeat)`.
pub fn collect_responses<C: ChatModel>(
    chat: &C,
    qs: &QuerySet,
    t: usize,
    budget: usize,
    parallelism: usize,
) -> Result<ResponseSet> {
    if t == 0 {
        return Err(ClientError::InvalidConfig("t must be at least 1".into()));
    }
    let ids = qs.ids();
    let total = ids.len() * t;
    check_budget(total, budget)?;

    let replies = run_keyed(total, parallelism, |job| {
        let key = CallKey {
            query: ids[job / t],
            repeat: job % t,
        };
        chat.complete(qs.text(key.query), key)
    })
    .map_err(|f| ClientError::Aborted {
        completed: f.completed,
        total,
        source: Box::new(f.error),
    })?;

    let mut responses = BTreeMap::new();
    for (id, chunk) in ids.iter().zip(replies.chunks(t)) {
        responses.insert(*id, chunk.to_vec());
    }
    Ok(ResponseSet {
        t,
        responses,
        total_calls: total,
    })
}
