//! Stack-usage probe: records the lowest stack address reached on the current
//! thread since the last reset.

use std::cell::Cell;

thread_local! {
    static BASE: Cell<usize> = const { Cell::new(0) };
    static LOW: Cell<usize> = const { Cell::new(usize::MAX) };
}

#[inline(always)]
fn here() -> usize {
    let marker = 0u8;
    std::hint::black_box(&marker) as *const u8 as usize
}

#[inline(never)]
pub fn probe() {
    let sp = here();
    LOW.with(|l| {
        if sp < l.get() {
            l.set(sp)
        }
    });
}

/// Starts a measurement relative to the caller's stack position.
#[inline(never)]
pub fn reset() {
    BASE.with(|b| b.set(here()));
    LOW.with(|l| l.set(usize::MAX));
}

/// Bytes of stack used below the `reset` point since the last reset.
pub fn max_depth_bytes() -> usize {
    let base = BASE.with(Cell::get);
    let low = LOW.with(Cell::get);
    if low == usize::MAX {
        0
    } else {
        base.saturating_sub(low)
    }
}
