//! Minimal deterministic data-parallelism: split an index range into blocks,
//! run them on scoped threads, concatenate results in block order. Thread
//! count is capped by the RESNET_THREADS environment variable.

pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("RESNET_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(avail),
        Err(_) => avail,
    }
    .min(avail.max(1))
}

/// Apply `f` to each index block of `0..len` and concatenate the outputs in
/// index order. Output is identical regardless of thread count.
pub fn map_blocks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> Vec<T> + Sync,
{
    let threads = thread_count().min(len.max(1));
    if threads <= 1 || len < 2 {
        return f(0..len);
    }
    let chunk = len.div_ceil(threads);
    let mut results: Vec<Vec<T>> = Vec::with_capacity(threads);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(len);
            if lo >= hi {
                break;
            }
            let f = &f;
            handles.push(scope.spawn(move || f(lo..hi)));
        }
        for h in handles {
            results.push(h.join().expect("worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(len);
    for r in results {
        out.extend(r);
    }
    out
}
