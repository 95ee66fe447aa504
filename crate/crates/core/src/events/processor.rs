use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::aggregate::{build_subscriptions, Aggregate};
use crate::error::Result;
use crate::events::{matches, Event, EventKind};
use crate::ids::{AggregateId, LifecycleState, VersionNumber};
use crate::store::VersionStore;
use crate::uow::UnitOfWork;

pub const DEFAULT_INTERVAL_MS: u64 = 1000;

type BatchKey = (AggregateId, AggregateId, VersionNumber);

/// Detects committed events that latest subscriber versions still subscribe
/// to and runs their appliers, each batch in its own unit of work.
pub struct EventProcessor<A: Aggregate> {
    store: Arc<VersionStore<A>>,
}

impl<A: Aggregate> Clone for EventProcessor<A> {
    fn clone(&self) -> Self {
        EventProcessor {
            store: Arc::clone(&self.store),
        }
    }
}

impl<A: Aggregate> EventProcessor<A> {
    pub fn new(store: Arc<VersionStore<A>>) -> Self {
        EventProcessor { store }
    }

    pub fn store(&self) -> &Arc<VersionStore<A>> {
        &self.store
    }

    /// Scans for matching events and processes them; returns the number of
    /// handler commits.
    ///
    /// For every subscriber, events of one sender are processed in ascending
    /// sender version. Events of one sender committed at the same version
    /// form one batch applied by a single handler commit, in event type
    /// order. `kind` restricts processing to batches containing that type,
    /// and only when nothing older from the same sender is pending.
    /// A failed handler is skipped for the rest of the scan; the events stay
    /// matchable for a later scan.
    pub fn detect_and_process(&self, kind: Option<EventKind<A>>, subscriber: Option<AggregateId>) -> usize {
        let mut handled = 0;
        let mut skip: BTreeSet<BatchKey> = BTreeSet::new();
        while let Some((key, batch)) = self.next_batch(kind, subscriber, &skip) {
            skip.insert(key);
            if self.handle(key.0, &batch).is_ok() {
                handled += 1;
            }
        }
        handled
    }

    fn next_batch(
        &self,
        kind: Option<EventKind<A>>,
        only: Option<AggregateId>,
        skip: &BTreeSet<BatchKey>,
    ) -> Option<(BatchKey, Vec<Event<A::Event>>)> {
        let events = self.store.events();
        let ids = match only {
            Some(id) => vec![id],
            None => self.store.aggregate_ids(),
        };
        for id in ids {
            let Some(record) = self.store.latest(id) else { continue };
            if record.state != LifecycleState::Active {
                continue;
            }
            let subs = build_subscriptions(id, record.state, &record.payload);
            let mut pending: Vec<&Event<A::Event>> = events
                .iter()
                .filter(|e| subs.iter().any(|s| matches(s, e, &record.payload)))
                .collect();
            pending.sort_by_key(|e| (e.sender, e.sender_version, e.kind()));

            let senders: BTreeSet<AggregateId> = pending.iter().map(|e| e.sender).collect();
            for sender in senders {
                let first = pending
                    .iter()
                    .find(|e| e.sender == sender)
                    .expect("sender has pending events");
                let version = first.sender_version;
                let batch: Vec<Event<A::Event>> = pending
                    .iter()
                    .filter(|e| e.sender == sender && e.sender_version == version)
                    .map(|e| (*e).clone())
                    .collect();
                let key = (id, sender, version);
                if skip.contains(&key) {
                    continue;
                }
                if kind.is_some_and(|k| batch.iter().all(|e| e.kind() != k)) {
                    continue;
                }
                return Some((key, batch));
            }
        }
        None
    }

    fn handle(&self, subscriber: AggregateId, batch: &[Event<A::Event>]) -> Result<VersionNumber> {
        let name = format!("event:{}", batch[0].kind());
        let mut uow = UnitOfWork::begin_at_head(&self.store, &name);
        let mut copy = uow.read(subscriber)?;
        for event in batch {
            copy.payload_mut().apply_event(event)?;
            copy.payload_mut()
                .observe_sender_version(event.sender, event.sender_version);
        }
        uow.register_changed(copy)?;
        uow.commit()
    }
}

struct Running {
    interval_ms: u64,
    stop: Sender<()>,
    handle: JoinHandle<()>,
}

/// Periodic background detection. The next run starts `interval_ms` after
/// the previous one finished.
pub struct EventLoop<A: Aggregate> {
    processor: EventProcessor<A>,
    running: Mutex<Option<Running>>,
    processed: Arc<AtomicUsize>,
}

impl<A: Aggregate> EventLoop<A> {
    pub fn new(processor: EventProcessor<A>) -> Self {
        EventLoop {
            processor,
            running: Mutex::new(None),
            processed: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.running.lock().unwrap_or_else(|e| e.into_inner()).is_some()
    }

    /// Total handler commits made by the background loop.
    pub fn processed(&self) -> usize {
        self.processed.load(Ordering::Relaxed)
    }

    /// Enables or disables the loop. Enabling an already running loop with
    /// the same interval does nothing; a different interval restarts it.
    pub fn set_loop(&self, enabled: bool, interval_ms: u64) {
        let interval_ms = interval_ms.max(1);
        let mut running = self.running.lock().unwrap_or_else(|e| e.into_inner());
        if enabled && running.as_ref().is_some_and(|r| r.interval_ms == interval_ms) {
            return;
        }
        if let Some(r) = running.take() {
            let _ = r.stop.send(());
            let _ = r.handle.join();
        }
        if !enabled {
            return;
        }
        let (stop, rx) = mpsc::channel::<()>();
        let processor = self.processor.clone();
        let processed = Arc::clone(&self.processed);
        let handle = std::thread::spawn(move || loop {
            let n = processor.detect_and_process(None, None);
            processed.fetch_add(n, Ordering::Relaxed);
            match rx.recv_timeout(Duration::from_millis(interval_ms)) {
                Err(RecvTimeoutError::Timeout) => continue,
                _ => break,
            }
        });
        *running = Some(Running {
            interval_ms,
            stop,
            handle,
        });
    }
}

impl<A: Aggregate> Drop for EventLoop<A> {
    fn drop(&mut self) {
        self.set_loop(false, DEFAULT_INTERVAL_MS);
    }
}
