//! Bounded per-video concurrency: videos are collected into batches of at
//! most the worker count, processed on scoped threads, and their results
//! handed back in input order.

use std::collections::BTreeSet;
use std::thread;

use crate::error::CliError;

const MAX_WORKERS: usize = 8;

pub fn worker_count() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(MAX_WORKERS)
}

/// Runs `f` over the batch items on one scoped thread each, returning
/// results in item order.
pub fn map_batch<I, O, F>(batch: Vec<I>, f: &F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync,
{
    thread::scope(|scope| {
        let handles: Vec<_> = batch.into_iter().map(|item| scope.spawn(move || f(item))).collect();
        handles.into_iter().map(|h| h.join().expect("video worker panicked")).collect()
    })
}

/// Groups a stream of per-record items into contiguous per-video batches,
/// flushing each batch through `process` once `worker_count()` videos are
/// buffered. Records for one video must be contiguous in the input; a
/// video id that reappears later is rejected so no video is ever split
/// across batches.
pub struct VideoBatcher<T, F> {
    batch: Vec<(String, Vec<T>)>,
    seen: BTreeSet<String>,
    capacity: usize,
    process: F,
}

impl<T, F> VideoBatcher<T, F>
where
    T: Send,
    F: FnMut(Vec<(String, Vec<T>)>) -> Result<(), CliError>,
{
    pub fn new(process: F) -> Self {
        VideoBatcher {
            batch: Vec::new(),
            seen: BTreeSet::new(),
            capacity: worker_count(),
            process,
        }
    }

    pub fn push(
        &mut self,
        video_id: &str,
        item: T,
        path: &str,
        line: usize,
    ) -> Result<(), CliError> {
        match self.batch.last_mut() {
            Some((current, items)) if current == video_id => {
                items.push(item);
                return Ok(());
            }
            _ => {}
        }
        if !self.seen.insert(video_id.to_string()) {
            return Err(CliError::schema(
                path,
                line,
                format!("records for video '{video_id}' are not contiguous"),
            ));
        }
        if self.batch.len() == self.capacity {
            self.flush()?;
        }
        self.batch.push((video_id.to_string(), vec![item]));
        Ok(())
    }

    fn flush(&mut self) -> Result<(), CliError> {
        let batch = std::mem::take(&mut self.batch);
        (self.process)(batch)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.flush()
    }
}
