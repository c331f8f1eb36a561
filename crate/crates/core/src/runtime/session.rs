use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, MutexGuard};

use super::provider::{CallRecord, Provider};
use super::scoredb::ScoreDb;
use super::value::Num;

/// State shared by every branch of one search. The early-stop flag only
/// ever goes from false to true.
#[derive(Debug)]
pub struct Session {
    seed: u64,
    early_stop: AtomicBool,
    early_stop_step: Mutex<Option<u64>>,
    clock: AtomicU64,
    scores: Mutex<ScoreDb>,
    aggregate_costs: Mutex<BTreeMap<String, Num>>,
    step_counts: Mutex<BTreeMap<String, u64>>,
    provider: Mutex<Provider>,
}

impl Session {
    pub fn new(provider: Provider) -> Arc<Session> {
        Arc::new(Session {
            seed: provider.seed(),
            early_stop: AtomicBool::new(false),
            early_stop_step: Mutex::new(None),
            clock: AtomicU64::new(0),
            scores: Mutex::new(ScoreDb::new()),
            aggregate_costs: Mutex::new(BTreeMap::new()),
            step_counts: Mutex::new(BTreeMap::new()),
            provider: Mutex::new(provider),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Ids are handed out in call order: `start` gets 0, each step the next.
    pub fn next_step_id(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::SeqCst)
    }

    pub fn steps_issued(&self) -> u64 {
        self.clock.load(Ordering::SeqCst)
    }

    pub fn set_early_stop(&self, step_id: u64) {
        let mut first = self.early_stop_step.lock();
        if first.is_none() {
            *first = Some(step_id);
        }
        self.early_stop.store(true, Ordering::SeqCst);
    }

    pub fn early_stop(&self) -> bool {
        self.early_stop.load(Ordering::SeqCst)
    }

    /// Id of the step that first set the early-stop flag.
    pub fn early_stop_step(&self) -> Option<u64> {
        *self.early_stop_step.lock()
    }

    pub fn scores(&self) -> MutexGuard<'_, ScoreDb> {
        self.scores.lock()
    }

    pub fn add_costs(&self, costs: &BTreeMap<String, Num>) {
        if !costs.is_empty() {
            super::info::add_costs(&mut self.aggregate_costs.lock(), costs);
        }
    }

    pub fn aggregate_costs(&self) -> BTreeMap<String, Num> {
        self.aggregate_costs.lock().clone()
    }

    pub fn count_step(&self, site_name: &str) {
        *self.step_counts.lock().entry(site_name.to_string()).or_insert(0) += 1;
    }

    pub fn step_counts(&self) -> BTreeMap<String, u64> {
        self.step_counts.lock().clone()
    }

    pub fn zero_step_counts(&self) {
        self.step_counts.lock().clear();
    }

    pub fn provider(&self) -> MutexGuard<'_, Provider> {
        self.provider.lock()
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        self.provider.lock().log().to_vec()
    }
}
