//! Recommendation resolution: segment lookup, per-context cache with
//! stale-while-revalidate semantics, and a line-protocol front.
//!
//! Readers never block on list generation when any cache entry exists for
//! their context: fresh entries are returned directly, stale entries are
//! returned immediately while a background worker regenerates them. Only a
//! cold miss generates synchronously, single-flighted per context so every
//! concurrent caller receives the same list.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bandit::{select, BanditKnowledge, Context, ItemPool, RewardEvent};
use crate::error::{Error, Result};

/// How a resolution was served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CacheState {
    #[serde(rename = "fresh-hit")]
    FreshHit,
    #[serde(rename = "stale-hit")]
    StaleHit,
    #[serde(rename = "miss")]
    Miss,
    #[serde(rename = "error")]
    Error,
}

/// One cached recommendation list for a context.
#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub context: Context,
    pub items: Vec<String>,
    pub generated_at: i64,
    pub ttl_secs: i64,
    /// Set when the most recent background refresh failed and this entry
    /// was left in place.
    pub refresh_failed: bool,
}

impl CacheEntry {
    pub fn is_fresh(&self, now: i64) -> bool {
        now - self.generated_at <= self.ttl_secs
    }
}

/// Outcome of a resolve call.
#[derive(Debug, Clone, Serialize)]
pub struct Resolution {
    pub items: Vec<String>,
    pub segment: usize,
    pub cache_state: CacheState,
    pub generated_at: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Produces a ranked list for a context. The engine is generic over this so
/// tests can inject slow or failing generators.
pub trait ListGenerator: Send + Sync {
    fn generate(&self, context: &Context, now: i64) -> Result<Vec<String>>;
}

/// Default generator: ε-greedy bandit selection over the currently
/// available item pool, reading a knowledge snapshot.
pub struct BanditGenerator {
    pub knowledge: Arc<RwLock<BanditKnowledge>>,
    pub pool: Arc<RwLock<ItemPool>>,
    pub list_len: usize,
    rng: Mutex<ChaCha8Rng>,
}

impl BanditGenerator {
    pub fn new(
        knowledge: Arc<RwLock<BanditKnowledge>>,
        pool: Arc<RwLock<ItemPool>>,
        list_len: usize,
        seed: u64,
    ) -> Self {
        use rand::SeedableRng;
        BanditGenerator {
            knowledge,
            pool,
            list_len,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl ListGenerator for BanditGenerator {
    fn generate(&self, context: &Context, now: i64) -> Result<Vec<String>> {
        let available = self.pool.read().unwrap().available_at(now);
        if available.is_empty() {
            return Err(Error::EmptyPool);
        }
        // one read guard per selection: a snapshot, never a torn update
        let knowledge = self.knowledge.read().unwrap();
        let mut rng = self.rng.lock().unwrap();
        select(&knowledge, context, &available, self.list_len, &mut *rng)
    }
}

enum WorkerMsg {
    Refresh { context: Context, now: i64 },
    Shutdown,
}

struct EngineInner {
    assignments: RwLock<HashMap<String, usize>>,
    cache: Mutex<HashMap<Context, CacheEntry>>,
    generation_locks: Mutex<HashMap<Context, Arc<Mutex<()>>>>,
    in_flight: Mutex<HashSet<Context>>,
    generator: Arc<dyn ListGenerator>,
    ttl_secs: i64,
    refreshes_done: AtomicUsize,
}

impl EngineInner {
    /// Regenerate a context's entry and swap it in atomically. On failure
    /// the previous entry stays, flagged.
    fn refresh(&self, context: &Context, now: i64) -> Result<CacheEntry> {
        let outcome = self.generator.generate(context, now);
        let mut cache = self.cache.lock().unwrap();
        match outcome {
            Ok(items) => {
                let entry = CacheEntry {
                    context: context.clone(),
                    items,
                    generated_at: now,
                    ttl_secs: self.ttl_secs,
                    refresh_failed: false,
                };
                cache.insert(context.clone(), entry.clone());
                Ok(entry)
            }
            Err(e) => {
                if let Some(entry) = cache.get_mut(context) {
                    entry.refresh_failed = true;
                }
                Err(e)
            }
        }
    }
}

/// The serving engine: segment-aware cached recommendation resolution.
pub struct Engine {
    inner: Arc<EngineInner>,
    tx: mpsc::Sender<WorkerMsg>,
    worker: Option<JoinHandle<()>>,
}

impl Engine {
    pub fn new(
        assignments: HashMap<String, usize>,
        ttl_secs: i64,
        generator: Arc<dyn ListGenerator>,
    ) -> Engine {
        let inner = Arc::new(EngineInner {
            assignments: RwLock::new(assignments),
            cache: Mutex::new(HashMap::new()),
            generation_locks: Mutex::new(HashMap::new()),
            in_flight: Mutex::new(HashSet::new()),
            generator,
            ttl_secs,
            refreshes_done: AtomicUsize::new(0),
        });
        let (tx, rx) = mpsc::channel::<WorkerMsg>();
        let worker_inner = Arc::clone(&inner);
        let worker = std::thread::spawn(move || {
            while let Ok(msg) = rx.recv() {
                match msg {
                    WorkerMsg::Refresh { context, now } => {
                        let _ = worker_inner.refresh(&context, now);
                        worker_inner.in_flight.lock().unwrap().remove(&context);
                        worker_inner.refreshes_done.fetch_add(1, Ordering::SeqCst);
                    }
                    WorkerMsg::Shutdown => break,
                }
            }
        });
        Engine {
            inner,
            tx,
            worker: Some(worker),
        }
    }

    /// The segment a user resolves to; unknown users are cold-start (0).
    pub fn segment_of(&self, user_id: &str) -> usize {
        self.inner
            .assignments
            .read()
            .unwrap()
            .get(user_id)
            .copied()
            .unwrap_or(0)
    }

    /// Resolve a recommendation list for (user, placement) at time `now`.
    ///
    /// Fresh cache hits return immediately; stale hits return the old list
    /// and enqueue one asynchronous refresh (coalesced per context); misses
    /// generate synchronously under a per-context single-flight lock.
    pub fn resolve(&self, user_id: &str, placement: &str, now: i64) -> Resolution {
        let segment = self.segment_of(user_id);
        let context = Context::new(segment, placement);

        if let Some(res) = self.try_serve_cached(&context, segment, now) {
            return res;
        }

        // cold miss: single-flight generation per context
        let gen_lock = {
            let mut locks = self.inner.generation_locks.lock().unwrap();
            Arc::clone(locks.entry(context.clone()).or_default())
        };
        let _guard = gen_lock.lock().unwrap();
        if let Some(res) = self.try_serve_cached(&context, segment, now) {
            return res;
        }
        match self.inner.generator.generate(&context, now) {
            Ok(items) => {
                let entry = CacheEntry {
                    context: context.clone(),
                    items: items.clone(),
                    generated_at: now,
                    ttl_secs: self.inner.ttl_secs,
                    refresh_failed: false,
                };
                self.inner.cache.lock().unwrap().insert(context, entry);
                Resolution {
                    items,
                    segment,
                    cache_state: CacheState::Miss,
                    generated_at: now,
                    diagnostic: None,
                }
            }
            Err(e) => Resolution {
                items: Vec::new(),
                segment,
                cache_state: CacheState::Error,
                generated_at: now,
                diagnostic: Some(e.to_string()),
            },
        }
    }

    fn try_serve_cached(&self, context: &Context, segment: usize, now: i64) -> Option<Resolution> {
        let (items, generated_at, fresh) = {
            let cache = self.inner.cache.lock().unwrap();
            let entry = cache.get(context)?;
            (entry.items.clone(), entry.generated_at, entry.is_fresh(now))
        };
        if fresh {
            return Some(Resolution {
                items,
                segment,
                cache_state: CacheState::FreshHit,
                generated_at,
                diagnostic: None,
            });
        }
        self.enqueue_refresh(context, now);
        Some(Resolution {
            items,
            segment,
            cache_state: CacheState::StaleHit,
            generated_at,
            diagnostic: None,
        })
    }

    /// Queue an asynchronous refresh; at most one is in flight per context.
    pub fn enqueue_refresh(&self, context: &Context, now: i64) {
        let newly_queued = self.inner.in_flight.lock().unwrap().insert(context.clone());
        if newly_queued {
            let msg = WorkerMsg::Refresh {
                context: context.clone(),
                now,
            };
            if self.tx.send(msg).is_err() {
                self.inner.in_flight.lock().unwrap().remove(context);
            }
        }
    }

    /// Synchronous regeneration (also used by the background worker).
    pub fn refresh(&self, context: &Context, now: i64) -> Result<CacheEntry> {
        self.inner.refresh(context, now)
    }

    pub fn cache_entry(&self, context: &Context) -> Option<CacheEntry> {
        self.inner.cache.lock().unwrap().get(context).cloned()
    }

    pub fn cache_len(&self) -> usize {
        self.inner.cache.lock().unwrap().len()
    }

    /// Total background refreshes completed (success or failure).
    pub fn refreshes_done(&self) -> usize {
        self.inner.refreshes_done.load(Ordering::SeqCst)
    }

    /// Wait until no refresh is in flight. Returns false on timeout.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            if self.inner.in_flight.lock().unwrap().is_empty() {
                return true;
            }
            if std::time::Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(1));
        }
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        let _ = self.tx.send(WorkerMsg::Shutdown);
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

/// Text front over the engine: one request per line, one JSON response line.
///
/// Requests:
/// - `RESOLVE <user_id> <placement>`
/// - `REWARD <user_id> <placement> <item_id> <reward>`
pub struct LineProtocol {
    pub engine: Engine,
    pub knowledge: Arc<RwLock<BanditKnowledge>>,
}

impl LineProtocol {
    pub fn handle(&self, line: &str, now: i64) -> String {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("RESOLVE") => {
                let (Some(user), Some(placement), None) =
                    (parts.next(), parts.next(), parts.next())
                else {
                    return error_line("usage: RESOLVE <user_id> <placement>");
                };
                let resolution = self.engine.resolve(user, placement, now);
                serde_json::to_string(&resolution).expect("resolution serializes")
            }
            Some("REWARD") => {
                let (Some(user), Some(placement), Some(item), Some(reward), None) = (
                    parts.next(),
                    parts.next(),
                    parts.next(),
                    parts.next(),
                    parts.next(),
                ) else {
                    return error_line("usage: REWARD <user_id> <placement> <item_id> <reward>");
                };
                let Ok(reward) = reward.parse::<f64>() else {
                    return error_line("reward must be a number");
                };
                let event = RewardEvent {
                    segment: self.engine.segment_of(user),
                    placement: placement.to_string(),
                    item_id: item.to_string(),
                    timestamp: now,
                    reward,
                };
                match self.knowledge.write().unwrap().record_reward(event) {
                    Ok(()) => "{\"ok\":true}".to_string(),
                    Err(e) => error_line(&e.to_string()),
                }
            }
            _ => error_line("unknown command"),
        }
    }
}

fn error_line(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}
