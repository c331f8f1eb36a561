use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use super::{Checkpoint, StepError, StepOptions};

/// Repeated `step` on one checkpoint. Stops after `max_samples` children,
/// when a `choose` site runs out of candidates, or after a step error.
pub struct StepSampler<'a> {
    cp: &'a Checkpoint,
    remaining: Option<usize>,
    protection: Option<u64>,
    done: bool,
}

pub fn step_sampler(cp: &Checkpoint, max_samples: Option<usize>, max_protection: Option<u64>) -> StepSampler<'_> {
    StepSampler { cp, remaining: max_samples, protection: max_protection, done: false }
}

impl Iterator for StepSampler<'_> {
    type Item = Result<Checkpoint, StepError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.remaining == Some(0) {
            return None;
        }
        let opts = StepOptions { max_protection: self.protection, ..StepOptions::default() };
        match self.cp.step_with(None, opts) {
            Ok(child) if child.is_exhaustion() => {
                self.done = true;
                None
            }
            Ok(child) => {
                if let Some(r) = &mut self.remaining {
                    *r -= 1;
                }
                if let Some(p) = &mut self.protection {
                    *p -= child.protect_retries().min(*p);
                }
                Some(Ok(child))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Steps `cp` up to `samples` times on `width` worker threads. Results are in
/// sample order; exhausted `choose` steps are dropped.
pub fn parallel_sample(cp: &Checkpoint, samples: usize, width: usize) -> Vec<Result<Checkpoint, StepError>> {
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<Checkpoint, StepError>>> = (0..samples).map(|_| None).collect();
    let chunks: Vec<Vec<(usize, Result<Checkpoint, StepError>)>> = thread::scope(|s| {
        let workers: Vec<_> = (0..width.max(1).min(samples.max(1)))
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        if i >= samples {
                            break;
                        }
                        out.push((i, cp.step(None)));
                    }
                    out
                })
            })
            .collect();
        workers.into_iter().map(|w| w.join().expect("sampler worker panicked")).collect()
    });
    for (i, r) in chunks.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().flatten().filter(|r| !matches!(r, Ok(c) if c.is_exhaustion())).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cps::compile_source;
    use crate::runtime::{Provider, Session, Value};

    fn start(src: &str) -> Checkpoint {
        let space = Arc::new(compile_source("t.pan", src, Some("main")).unwrap());
        Checkpoint::start(space, "main", vec![], Session::new(Provider::new(0))).unwrap()
    }

    #[test]
    fn max_samples_bounds_the_stream() {
        let cp = start("fn main() { branchpoint(); return 1 }");
        assert_eq!(step_sampler(&cp, Some(3), None).count(), 3);
    }

    #[test]
    fn choose_exhaustion_ends_the_stream() {
        let cp = start("fn main() { return choose([\"a\", \"b\"]) }");
        assert_eq!(step_sampler(&cp, Some(5), None).count(), 2);
    }

    #[test]
    fn parallel_matches_serial_multiset() {
        let src = "fn main() { x = choose(range(8)); branchpoint(); return x * x }";
        let serial: Vec<Value> =
            step_sampler(&start(src), None, None).map(|c| c.unwrap().frame().locals["x"].clone()).collect();
        let mut par: Vec<i64> = parallel_sample(&start(src), 8, 4)
            .into_iter()
            .map(|c| c.unwrap().frame().locals["x"].as_int().unwrap())
            .collect();
        par.sort();
        let serial: Vec<i64> = serial.iter().map(|v| v.as_int().unwrap()).collect();
        assert_eq!(serial, par);
    }
}
