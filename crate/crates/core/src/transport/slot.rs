use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::frame::Frame;

#[derive(Debug, Default)]
struct SlotInner {
    seq: u64,
    frame: Option<Arc<Frame>>,
    closed: bool,
}

/// Latest-value frame slot: one publisher, any number of readers. Readers
/// only ever see the newest frame; older ones are dropped.
#[derive(Debug, Clone, Default)]
pub struct FrameSlot {
    inner: Arc<(Mutex<SlotInner>, Condvar)>,
}

impl FrameSlot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&self, frame: Frame) {
        let (lock, cvar) = &*self.inner;
        let mut inner = lock.lock().unwrap();
        inner.seq += 1;
        inner.frame = Some(Arc::new(frame));
        cvar.notify_all();
    }

    /// Wakes all waiters; subsequent waits return `None` immediately.
    pub fn close(&self) {
        let (lock, cvar) = &*self.inner;
        lock.lock().unwrap().closed = true;
        cvar.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.inner.0.lock().unwrap().closed
    }

    /// Sequence number and frame of the newest publication.
    pub fn latest(&self) -> Option<(u64, Arc<Frame>)> {
        let inner = self.inner.0.lock().unwrap();
        inner.frame.clone().map(|f| (inner.seq, f))
    }

    /// Blocks until a frame newer than `after_seq` is published, the slot is
    /// closed, or `timeout` elapses.
    pub fn wait_newer(&self, after_seq: u64, timeout: Duration) -> Option<(u64, Arc<Frame>)> {
        let deadline = Instant::now() + timeout;
        let (lock, cvar) = &*self.inner;
        let mut inner = lock.lock().unwrap();
        loop {
            if inner.seq > after_seq {
                if let Some(frame) = &inner.frame {
                    return Some((inner.seq, frame.clone()));
                }
            }
            if inner.closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            inner = cvar.wait_timeout(inner, deadline - now).unwrap().0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn readers_see_only_latest() {
        let slot = FrameSlot::new();
        assert!(slot.latest().is_none());
        for t in 0..5 {
            slot.publish(Frame::filled(1, 1, t as u8, t as f64));
        }
        let (seq, f) = slot.latest().unwrap();
        assert_eq!(seq, 5);
        assert_eq!(f.pixels, vec![4]);
    }

    #[test]
    fn wait_wakes_on_publish() {
        let slot = FrameSlot::new();
        let writer = slot.clone();
        let h = thread::spawn(move || {
            thread::sleep(Duration::from_millis(20));
            writer.publish(Frame::filled(1, 1, 9, 0.0));
        });
        let (seq, f) = slot.wait_newer(0, Duration::from_secs(2)).unwrap();
        assert_eq!((seq, f.pixels[0]), (1, 9));
        h.join().unwrap();
        assert!(slot.wait_newer(1, Duration::from_millis(10)).is_none());
        slot.close();
        assert!(slot.wait_newer(1, Duration::from_secs(5)).is_none());
    }
}
