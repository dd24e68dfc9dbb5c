//! Per-node parallel maps.
//!
//! Every kernel writes each output entry from read-only inputs, so the result
//! does not depend on how the work is split. Reductions stay sequential.
//! The worker count comes from the global rayon pool (`--threads`).

use rayon::prelude::*;

/// Below this many entries the work runs on the calling thread.
const PAR_THRESHOLD: usize = 1 << 14;

fn go_parallel(len: usize) -> bool {
    len >= PAR_THRESHOLD && rayon::current_num_threads() > 1
}

/// Calls `f(chunk_index, chunk)` for consecutive chunks of `chunk_len` entries.
pub fn for_each_chunk<T, F>(out: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    if go_parallel(out.len()) {
        out.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(c, chunk)| f(c, chunk));
    } else {
        for (c, chunk) in out.chunks_mut(chunk_len).enumerate() {
            f(c, chunk);
        }
    }
}

/// `out[i] = f(i)` for every index.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    const BLOCK: usize = 4096;
    for_each_chunk(out, BLOCK, |c, chunk| {
        let base = c * BLOCK;
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = f(base + k);
        }
    });
}

/// Installs a global pool with `threads` workers. Returns false when a pool
/// already exists (the first configuration wins).
pub fn init_threads(threads: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .is_ok()
}
