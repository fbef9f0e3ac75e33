//! Thread-local allocation byte counter.
//!
//! The transient-memory figure is informational: it reports cumulative
//! bytes requested from the allocator during a call, not peak residency.
//! Binaries opt in by installing [`CountingAllocator`] as the global
//! allocator; without it the counter stays at zero and transient figures
//! read 0.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;

thread_local! {
    static ALLOCATED: Cell<u64> = const { Cell::new(0) };
}

/// Cumulative bytes allocated on this thread since it started.
pub fn allocated_bytes() -> u64 {
    ALLOCATED.with(|c| c.get())
}

/// System allocator wrapper that counts allocation sizes.
pub struct CountingAllocator;

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ALLOCATED.with(|c| c.set(c.get() + layout.size() as u64));
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        if new_size > layout.size() {
            ALLOCATED.with(|c| c.set(c.get() + (new_size - layout.size()) as u64));
        }
        System.realloc(ptr, layout, new_size)
    }
}
