//! Order-preserving parallel map over a work queue. Each job runs on one
//! thread; the per-job computation graphs are thread-local, so jobs never
//! share mutable state.

use std::collections::VecDeque;
use std::sync::Mutex;

pub fn parallel_map<T, R, F>(items: Vec<T>, workers: usize, f: &F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let n = items.len();
    if n == 0 {
        return Vec::new();
    }
    let queue: Mutex<VecDeque<(usize, T)>> = Mutex::new(items.into_iter().enumerate().collect());
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    let workers = workers.clamp(1, n);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = queue.lock().expect("queue lock").pop_front();
                let Some((i, item)) = next else { break };
                let r = f(item);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("all workers joined")
        .into_iter()
        .map(|r| r.expect("every slot visited"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let out = parallel_map((0..100).collect(), 7, &|x: i32| x * x);
        assert_eq!(out, (0..100).map(|x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn handles_fewer_items_than_workers() {
        assert_eq!(parallel_map(vec![3], 8, &|x: i32| x + 1), vec![4]);
        assert_eq!(parallel_map(Vec::<i32>::new(), 8, &|x| x), Vec::<i32>::new());
    }
}
