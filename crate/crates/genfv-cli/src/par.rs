//! Path-parallel evaluation. Paths are assigned to workers in stride order
//! and the per-path results are merged back in path order, so the output is
//! identical for any worker count; the `GENFV_WORKERS` environment variable
//! overrides the detected parallelism.

pub fn worker_count() -> usize {
    std::env::var("GENFV_WORKERS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Evaluate `f(state, path)` for `path` in `0..paths` and return the results
/// in path order. `init` builds one mutable state (sampler or catalog cache)
/// per worker.
pub fn map_paths<T, S, I, F>(paths: u64, init: I, f: F) -> genfv::Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, u64) -> genfv::Result<T> + Sync,
{
    let workers = worker_count().min(paths.max(1) as usize);
    if workers <= 1 {
        let mut state = init();
        return (0..paths).map(|p| f(&mut state, p)).collect();
    }
    let per_worker: genfv::Result<Vec<Vec<T>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (f, init) = (&f, &init);
                scope.spawn(move || -> genfv::Result<Vec<T>> {
                    let mut state = init();
                    let mut out = Vec::new();
                    let mut p = w as u64;
                    while p < paths {
                        out.push(f(&mut state, p)?);
                        p += workers as u64;
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut iters: Vec<_> = per_worker?.into_iter().map(|v| v.into_iter()).collect();
    let mut merged = Vec::with_capacity(paths as usize);
    // Round r yields paths r*workers .. r*workers+workers in order; the
    // first exhausted iterator ends the final, possibly short, round.
    'rounds: loop {
        for it in iters.iter_mut() {
            match it.next() {
                Some(v) => merged.push(v),
                None => break 'rounds,
            }
        }
    }
    Ok(merged)
}
