use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use tokio::sync::{Notify, Semaphore, SemaphorePermit};
use tokio::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatePolicy {
    /// Request starts allowed in any sliding `window`; `None` is unlimited.
    pub max_requests: Option<u32>,
    pub window: Duration,
    pub max_concurrent: usize,
}

impl Default for RatePolicy {
    fn default() -> Self {
        RatePolicy {
            max_requests: Some(60),
            window: Duration::from_secs(60),
            max_concurrent: 4,
        }
    }
}

impl RatePolicy {
    pub fn per_minute(n: u32) -> Self {
        RatePolicy {
            max_requests: Some(n),
            ..Default::default()
        }
    }

    pub fn unlimited() -> Self {
        RatePolicy {
            max_requests: None,
            window: Duration::from_secs(60),
            max_concurrent: usize::MAX >> 4,
        }
    }
}

/// Sliding-window limiter plus a concurrency cap. A request occupies a
/// window slot while in flight and for one full window after it finishes,
/// so arrivals at the server also respect the limit whatever the latency.
pub struct Limiter {
    policy: RatePolicy,
    slots: Semaphore,
    state: Mutex<Window>,
    released: Notify,
    log: Mutex<Vec<Instant>>,
}

#[derive(Default)]
struct Window {
    in_flight: usize,
    finished: VecDeque<Instant>,
}

pub struct Permit<'a> {
    limiter: &'a Limiter,
    _slot: SemaphorePermit<'a>,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        if self.limiter.policy.max_requests.is_some() {
            let mut w = self.limiter.state.lock().unwrap();
            w.in_flight -= 1;
            w.finished.push_back(Instant::now());
            drop(w);
            self.limiter.released.notify_waiters();
        }
    }
}

impl Limiter {
    pub fn new(policy: RatePolicy) -> Self {
        Limiter {
            policy,
            slots: Semaphore::new(policy.max_concurrent.max(1)),
            state: Mutex::new(Window::default()),
            released: Notify::new(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn policy(&self) -> RatePolicy {
        self.policy
    }

    pub async fn acquire(&self) -> Permit<'_> {
        let slot = self.slots.acquire().await.expect("semaphore never closed");
        if let Some(max) = self.policy.max_requests {
            let max = max.max(1) as usize;
            loop {
                let released = self.released.notified();
                tokio::pin!(released);
                released.as_mut().enable();
                let wait_until = {
                    let mut w = self.state.lock().unwrap();
                    let now = Instant::now();
                    while w.finished.front().is_some_and(|t| now.duration_since(*t) >= self.policy.window) {
                        w.finished.pop_front();
                    }
                    let used = w.in_flight + w.finished.len();
                    if used < max {
                        w.in_flight += 1;
                        break;
                    }
                    // Oldest finished entry whose expiry frees a slot, if any.
                    w.finished.get(used - max).map(|t| *t + self.policy.window)
                };
                match wait_until {
                    Some(t) => {
                        tokio::select! {
                            _ = tokio::time::sleep_until(t) => {}
                            _ = &mut released => {}
                        }
                    }
                    None => released.await,
                }
            }
        }
        self.log.lock().unwrap().push(Instant::now());
        Permit {
            limiter: self,
            _slot: slot,
        }
    }

    /// Start time of every admitted request, in admission order.
    pub fn starts(&self) -> Vec<Instant> {
        self.log.lock().unwrap().clone()
    }
}

/// Largest number of instants that fall in any half-open window of length `window`.
pub fn max_in_window(times: &[Instant], window: Duration) -> usize {
    let mut t: Vec<Instant> = times.to_vec();
    t.sort();
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..t.len() {
        while t[hi].duration_since(t[lo]) >= window {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test(start_paused = true)]
    async fn window_spacing() {
        let lim = Limiter::new(RatePolicy {
            max_requests: Some(3),
            window: Duration::from_secs(10),
            max_concurrent: 8,
        });
        let t0 = Instant::now();
        for _ in 0..7 {
            let _p = lim.acquire().await;
        }
        let s = lim.starts();
        assert_eq!(s[2] - t0, Duration::ZERO);
        assert_eq!(s[3] - t0, Duration::from_secs(10));
        assert_eq!(s[6] - t0, Duration::from_secs(20));
        assert_eq!(max_in_window(&s, Duration::from_secs(10)), 3);
    }

    #[tokio::test(start_paused = true)]
    async fn unlimited_passes_through() {
        let lim = Limiter::new(RatePolicy::unlimited());
        let t0 = Instant::now();
        for _ in 0..1000 {
            let _p = lim.acquire().await;
        }
        assert_eq!(Instant::now() - t0, Duration::ZERO);
    }
}
