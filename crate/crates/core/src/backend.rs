//! Packed-slot ciphertext contract and a cleartext emulator for it.
//!
//! The emulator supports exactly the four primitives a batched HE scheme
//! offers (slot-wise add, ciphertext-ciphertext multiply, ciphertext-plaintext
//! multiply, cyclic rotation) and counts every call, split by client/cloud
//! phase. Rotation is cyclic over a ciphertext's logical segment rather than
//! over all `N` slots; a real scheme would need replicate-and-mask tricks for
//! that, which the counters do not charge for.

use std::sync::atomic::{AtomicU8, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Arithmetic, FlatVector};

pub const DEFAULT_SLOTS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub slot_count: usize,
    pub plaintext_modulus: Option<i64>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self { slot_count: DEFAULT_SLOTS, plaintext_modulus: None }
    }
}

impl BackendConfig {
    pub fn with_slots(slot_count: usize) -> Self {
        Self { slot_count, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slot_count < 2 || !self.slot_count.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "slot count must be a power of two >= 2, got {}",
                self.slot_count
            )));
        }
        Arithmetic::new(self.plaintext_modulus)?;
        Ok(())
    }

    pub fn arithmetic(&self) -> Result<Arithmetic> {
        Arithmetic::new(self.plaintext_modulus)
    }
}

/// Who performs an operation: the data owner or the untrusted server.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Client,
    Cloud,
}

impl Phase {
    fn to_u8(self) -> u8 {
        match self {
            Phase::Client => 0,
            Phase::Cloud => 1,
        }
    }

    fn from_u8(v: u8) -> Self {
        if v == 0 {
            Phase::Client
        } else {
            Phase::Cloud
        }
    }
}

/// Operation counters for one phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub add: u64,
    pub mult_cc: u64,
    pub mult_cp: u64,
    pub rot: u64,
    pub encrypt: u64,
    pub decrypt: u64,
}

impl PhaseCounts {
    /// Number of primitive HE operations (encrypt/decrypt excluded).
    pub fn primitives(&self) -> u64 {
        self.add + self.mult_cc + self.mult_cp + self.rot
    }

    pub fn is_zero(&self) -> bool {
        *self == PhaseCounts::default()
    }
}

impl std::ops::Add for PhaseCounts {
    type Output = PhaseCounts;

    fn add(self, o: PhaseCounts) -> PhaseCounts {
        PhaseCounts {
            add: self.add + o.add,
            mult_cc: self.mult_cc + o.mult_cc,
            mult_cp: self.mult_cp + o.mult_cp,
            rot: self.rot + o.rot,
            encrypt: self.encrypt + o.encrypt,
            decrypt: self.decrypt + o.decrypt,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub client: PhaseCounts,
    pub cloud: PhaseCounts,
}

impl OpStats {
    pub fn phase(&self, phase: Phase) -> &PhaseCounts {
        match phase {
            Phase::Client => &self.client,
            Phase::Cloud => &self.cloud,
        }
    }

    fn phase_mut(&mut self, phase: Phase) -> &mut PhaseCounts {
        match phase {
            Phase::Client => &mut self.client,
            Phase::Cloud => &mut self.cloud,
        }
    }

    pub fn total(&self) -> PhaseCounts {
        self.client + self.cloud
    }

    /// Counter-wise difference `self - earlier`.
    pub fn since(&self, earlier: &OpStats) -> OpStats {
        fn d(a: &PhaseCounts, b: &PhaseCounts) -> PhaseCounts {
            PhaseCounts {
                add: a.add - b.add,
                mult_cc: a.mult_cc - b.mult_cc,
                mult_cp: a.mult_cp - b.mult_cp,
                rot: a.rot - b.rot,
                encrypt: a.encrypt - b.encrypt,
                decrypt: a.decrypt - b.decrypt,
            }
        }
        OpStats { client: d(&self.client, &earlier.client), cloud: d(&self.cloud, &earlier.cloud) }
    }
}

impl std::ops::Add for OpStats {
    type Output = OpStats;

    fn add(self, o: OpStats) -> OpStats {
        OpStats { client: self.client + o.client, cloud: self.cloud + o.cloud }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Add,
    MultCc,
    MultCp,
    Rot,
    Encrypt,
    Decrypt,
}

/// The contract every backend (emulated or real) offers the algorithms.
pub trait HeBackend: Sync {
    type Ciphertext: Clone + Send + Sync;

    fn config(&self) -> &BackendConfig;

    /// Packs `values` into a ciphertext whose logical segment is
    /// `segment_len` slots; the tail is zero.
    fn encrypt_slots(&self, values: &[i64], segment_len: usize) -> Result<Self::Ciphertext>;

    fn encrypt(&self, v: &FlatVector) -> Result<Self::Ciphertext> {
        self.encrypt_slots(v.values(), v.len())
    }

    /// Returns the logical segment.
    fn decrypt(&self, ct: &Self::Ciphertext) -> Result<Vec<i64>>;

    fn add(&self, x: &Self::Ciphertext, y: &Self::Ciphertext) -> Result<Self::Ciphertext>;
    fn mult(&self, x: &Self::Ciphertext, y: &Self::Ciphertext) -> Result<Self::Ciphertext>;
    fn cmult(&self, x: &Self::Ciphertext, plain: &[i64]) -> Result<Self::Ciphertext>;
    fn rot(&self, x: &Self::Ciphertext, offset: i64) -> Result<Self::Ciphertext>;

    fn segment_len(&self, ct: &Self::Ciphertext) -> usize;

    fn stats(&self) -> OpStats;
    fn reset_stats(&self);

    /// Phase charged by subsequent operations.
    fn set_phase(&self, phase: Phase);
    fn phase(&self) -> Phase;

    /// Highest number of simultaneously live ciphertexts, when tracked.
    fn peak_live_ciphertexts(&self) -> usize {
        0
    }
}

#[derive(Debug, Default)]
struct LiveTracker {
    live: AtomicUsize,
    peak: AtomicUsize,
}

impl LiveTracker {
    fn inc(&self) {
        let now = self.live.fetch_add(1, Ordering::Relaxed) + 1;
        self.peak.fetch_max(now, Ordering::Relaxed);
    }

    fn dec(&self) {
        self.live.fetch_sub(1, Ordering::Relaxed);
    }
}

/// Emulated ciphertext: the logical segment in the clear plus bookkeeping.
#[derive(Debug)]
pub struct Ciphertext {
    slots: Vec<i64>,
    slot_count: usize,
    depth: u32,
    phase: Phase,
    tracker: Arc<LiveTracker>,
}

impl Clone for Ciphertext {
    fn clone(&self) -> Self {
        self.tracker.inc();
        Self {
            slots: self.slots.clone(),
            slot_count: self.slot_count,
            depth: self.depth,
            phase: self.phase,
            tracker: Arc::clone(&self.tracker),
        }
    }
}

impl Drop for Ciphertext {
    fn drop(&mut self) {
        self.tracker.dec();
    }
}

impl Ciphertext {
    pub fn segment_len(&self) -> usize {
        self.slots.len()
    }

    /// Multiplicative (CC) depth accumulated so far.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// All `N` slots, zero beyond the logical segment.
    pub fn padded_slots(&self) -> Vec<i64> {
        let mut v = self.slots.clone();
        v.resize(self.slot_count, 0);
        v
    }
}

/// Cleartext emulator of a packed-slot HE scheme.
#[derive(Debug)]
pub struct SimdEmulator {
    cfg: BackendConfig,
    arith: Arithmetic,
    stats: Mutex<OpStats>,
    phase: AtomicU8,
    tracker: Arc<LiveTracker>,
}

impl SimdEmulator {
    pub fn new(cfg: BackendConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            arith: cfg.arithmetic()?,
            cfg,
            stats: Mutex::new(OpStats::default()),
            phase: AtomicU8::new(Phase::Client.to_u8()),
            tracker: Arc::new(LiveTracker::default()),
        })
    }

    pub fn with_slots(slot_count: usize) -> Result<Self> {
        Self::new(BackendConfig::with_slots(slot_count))
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.arith
    }

    fn charge(&self, op: Op) {
        let phase = self.phase();
        let mut s = self.stats.lock().expect("stats lock poisoned");
        let c = s.phase_mut(phase);
        match op {
            Op::Add => c.add += 1,
            Op::MultCc => c.mult_cc += 1,
            Op::MultCp => c.mult_cp += 1,
            Op::Rot => c.rot += 1,
            Op::Encrypt => c.encrypt += 1,
            Op::Decrypt => c.decrypt += 1,
        }
    }

    fn make(&self, slots: Vec<i64>, depth: u32) -> Ciphertext {
        self.tracker.inc();
        Ciphertext {
            slots,
            slot_count: self.cfg.slot_count,
            depth,
            phase: self.phase(),
            tracker: Arc::clone(&self.tracker),
        }
    }

    fn same_segment(x: &Ciphertext, y: &Ciphertext) -> Result<()> {
        if x.slots.len() != y.slots.len() {
            return Err(Error::SegmentMismatch { left: x.slots.len(), right: y.slots.len() });
        }
        Ok(())
    }

    fn zip(&self, x: &[i64], y: &[i64], f: impl Fn(i64, i64) -> Result<i64>) -> Result<Vec<i64>> {
        x.iter().zip(y).map(|(&a, &b)| f(a, b)).collect()
    }
}

impl HeBackend for SimdEmulator {
    type Ciphertext = Ciphertext;

    fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    fn encrypt_slots(&self, values: &[i64], segment_len: usize) -> Result<Ciphertext> {
        if segment_len == 0 {
            return Err(Error::InvalidShape("cannot encrypt an empty vector".into()));
        }
        if segment_len > self.cfg.slot_count {
            return Err(Error::Capacity { needed: segment_len, available: self.cfg.slot_count });
        }
        if values.len() > segment_len {
            return Err(Error::InvalidShape(format!("{} values do not fit a segment of {segment_len}", values.len())));
        }
        let mut slots: Vec<i64> = values.iter().map(|&v| self.arith.reduce(v)).collect();
        slots.resize(segment_len, 0);
        self.charge(Op::Encrypt);
        Ok(self.make(slots, 0))
    }

    fn decrypt(&self, ct: &Ciphertext) -> Result<Vec<i64>> {
        self.charge(Op::Decrypt);
        Ok(ct.slots.clone())
    }

    fn add(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
        Self::same_segment(x, y)?;
        let slots = self.zip(&x.slots, &y.slots, |a, b| self.arith.add(a, b))?;
        self.charge(Op::Add);
        Ok(self.make(slots, x.depth.max(y.depth)))
    }

    fn mult(&self, x: &Ciphertext, y: &Ciphertext) -> Result<Ciphertext> {
        Self::same_segment(x, y)?;
        let slots = self.zip(&x.slots, &y.slots, |a, b| self.arith.mul(a, b))?;
        self.charge(Op::MultCc);
        Ok(self.make(slots, x.depth.max(y.depth) + 1))
    }

    fn cmult(&self, x: &Ciphertext, plain: &[i64]) -> Result<Ciphertext> {
        if plain.len() != x.slots.len() {
            return Err(Error::SegmentMismatch { left: x.slots.len(), right: plain.len() });
        }
        let slots = self.zip(&x.slots, plain, |a, b| self.arith.mul(a, b))?;
        self.charge(Op::MultCp);
        Ok(self.make(slots, x.depth))
    }

    fn rot(&self, x: &Ciphertext, offset: i64) -> Result<Ciphertext> {
        let s = x.slots.len();
        let shift = offset.rem_euclid(s as i64) as usize;
        let mut slots = x.slots.clone();
        slots.rotate_left(shift);
        self.charge(Op::Rot);
        Ok(self.make(slots, x.depth))
    }

    fn segment_len(&self, ct: &Ciphertext) -> usize {
        ct.slots.len()
    }

    fn stats(&self) -> OpStats {
        *self.stats.lock().expect("stats lock poisoned")
    }

    fn reset_stats(&self) {
        *self.stats.lock().expect("stats lock poisoned") = OpStats::default();
        self.tracker.peak.store(self.tracker.live.load(Ordering::Relaxed), Ordering::Relaxed);
    }

    fn set_phase(&self, phase: Phase) {
        self.phase.store(phase.to_u8(), Ordering::Relaxed);
    }

    fn phase(&self) -> Phase {
        Phase::from_u8(self.phase.load(Ordering::Relaxed))
    }

    fn peak_live_ciphertexts(&self) -> usize {
        self.tracker.peak.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emu() -> SimdEmulator {
        SimdEmulator::new(BackendConfig::default()).unwrap()
    }

    fn enc(b: &SimdEmulator, v: &[i64]) -> Ciphertext {
        b.encrypt(&FlatVector::from_values(v.to_vec())).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(BackendConfig::with_slots(4096).validate().is_ok());
        assert!(BackendConfig::with_slots(2).validate().is_ok());
        for bad in [0, 1, 3, 100] {
            assert!(BackendConfig::with_slots(bad).validate().is_err(), "{bad}");
        }
        let cfg = BackendConfig { slot_count: 16, plaintext_modulus: Some(1) };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn encrypt_packs_and_pads() {
        let b = emu();
        let ct = enc(&b, &(0..15).collect::<Vec<_>>());
        assert_eq!(ct.segment_len(), 15);
        assert_eq!(ct.depth(), 0);
        let padded = ct.padded_slots();
        assert_eq!(padded.len(), 4096);
        assert!(padded[15..].iter().all(|&x| x == 0));
    }

    #[test]
    fn encrypt_rejects_empty_and_oversized() {
        let b = emu();
        assert!(b.encrypt(&FlatVector::from_values(vec![])).is_err());
        let big = FlatVector::from_values(vec![1; 4097]);
        assert!(matches!(b.encrypt(&big), Err(Error::Capacity { needed: 4097, available: 4096 })));
        assert!(b.encrypt(&FlatVector::from_values(vec![1; 4096])).is_ok());
    }

    #[test]
    fn add_mult_cmult_semantics() {
        let b = emu();
        let x = enc(&b, &[1, 2, 3]);
        let y = enc(&b, &[4, 5, 6]);
        assert_eq!(b.decrypt(&b.add(&x, &y).unwrap()).unwrap(), vec![5, 7, 9]);
        let zero = enc(&b, &[0, 0, 0]);
        assert_eq!(b.decrypt(&b.add(&x, &zero).unwrap()).unwrap(), vec![1, 2, 3]);
        let p = b.mult(&x, &y).unwrap();
        assert_eq!(b.decrypt(&p).unwrap(), vec![4, 10, 18]);
        assert_eq!(p.depth(), 1);
        let ones = enc(&b, &[1, 1, 1]);
        let same = b.mult(&x, &ones).unwrap();
        assert_eq!(b.decrypt(&same).unwrap(), vec![1, 2, 3]);
        assert_eq!(same.depth(), 1);
        let masked = b.cmult(&x, &[0, 1, 0]).unwrap();
        assert_eq!(b.decrypt(&masked).unwrap(), vec![0, 2, 0]);
        assert_eq!(masked.depth(), 0);
        assert_eq!(b.decrypt(&b.cmult(&x, &[1, 1, 1]).unwrap()).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn segment_mismatch_errors() {
        let b = emu();
        let x = enc(&b, &[1, 2, 3]);
        let y = enc(&b, &[1, 2]);
        assert!(matches!(b.add(&x, &y), Err(Error::SegmentMismatch { .. })));
        assert!(matches!(b.mult(&x, &y), Err(Error::SegmentMismatch { .. })));
        assert!(matches!(b.cmult(&x, &[1, 2]), Err(Error::SegmentMismatch { .. })));
    }

    #[test]
    fn depth_chain() {
        let b = emu();
        let mut x = enc(&b, &[2, 3]);
        let y = enc(&b, &[1, 1]);
        for _ in 0..3 {
            x = b.mult(&x, &y).unwrap();
        }
        assert_eq!(x.depth(), 3);
        let z = b.add(&x, &y).unwrap();
        assert_eq!(z.depth(), 3);
    }

    #[test]
    fn rotation() {
        let b = emu();
        let x = enc(&b, &[10, 11, 12, 13]);
        assert_eq!(b.decrypt(&b.rot(&x, 1).unwrap()).unwrap(), vec![11, 12, 13, 10]);
        assert_eq!(b.decrypt(&b.rot(&x, -1).unwrap()).unwrap(), vec![13, 10, 11, 12]);
        assert_eq!(b.decrypt(&b.rot(&x, 0).unwrap()).unwrap(), vec![10, 11, 12, 13]);
        assert_eq!(b.decrypt(&b.rot(&x, 4).unwrap()).unwrap(), vec![10, 11, 12, 13]);
    }

    #[test]
    fn counters_one_per_primitive() {
        let b = emu();
        let x = enc(&b, &[1, 2]);
        let y = enc(&b, &[3, 4]);
        b.reset_stats();
        b.set_phase(Phase::Cloud);
        let before = b.stats();
        b.add(&x, &y).unwrap();
        let d = b.stats().since(&before);
        assert_eq!(d.cloud, PhaseCounts { add: 1, ..Default::default() });
        let before = b.stats();
        b.cmult(&x, &[1, 0]).unwrap();
        let d = b.stats().since(&before);
        assert_eq!((d.cloud.mult_cp, d.cloud.mult_cc), (1, 0));
        let before = b.stats();
        b.mult(&x, &y).unwrap();
        b.rot(&x, 0).unwrap();
        let d = b.stats().since(&before);
        assert_eq!((d.cloud.mult_cc, d.cloud.rot, d.cloud.primitives()), (1, 1, 2));
        assert!(d.client.is_zero());
        b.reset_stats();
        assert_eq!(b.stats(), OpStats::default());
    }

    #[test]
    fn phase_split() {
        let b = emu();
        let x = enc(&b, &[1, 2]);
        b.set_phase(Phase::Cloud);
        let y = b.add(&x, &x).unwrap();
        assert_eq!(y.phase(), Phase::Cloud);
        b.set_phase(Phase::Client);
        b.decrypt(&y).unwrap();
        let s = b.stats();
        assert_eq!(s.client.encrypt, 1);
        assert_eq!(s.client.decrypt, 1);
        assert_eq!(s.cloud.add, 1);
    }

    #[test]
    fn modulus_keeps_slots_in_range() {
        let cfg = BackendConfig { slot_count: 8, plaintext_modulus: Some(17) };
        let b = SimdEmulator::new(cfg).unwrap();
        let x = enc(&b, &[-3, 16, 40]);
        assert_eq!(b.decrypt(&x).unwrap(), vec![14, 16, 6]);
        let y = b.mult(&x, &x).unwrap();
        let z = b.add(&y, &x).unwrap();
        for v in b.decrypt(&z).unwrap() {
            assert!((0..17).contains(&v));
        }
    }

    #[test]
    fn overflow_is_reported() {
        let b = emu();
        let x = enc(&b, &[i64::MAX]);
        assert!(matches!(b.add(&x, &x), Err(Error::Overflow(_))));
        assert!(matches!(b.mult(&x, &x), Err(Error::Overflow(_))));
    }

    #[test]
    fn live_ciphertext_tracking() {
        let b = emu();
        {
            let x = enc(&b, &[1]);
            let _y = x.clone();
            let _z = b.add(&x, &x).unwrap();
        }
        assert_eq!(b.peak_live_ciphertexts(), 3);
        b.reset_stats();
        assert_eq!(b.peak_live_ciphertexts(), 0);
    }

    #[test]
    fn concurrent_counting() {
        let b = emu();
        let x = enc(&b, &[1, 2, 3]);
        b.set_phase(Phase::Cloud);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for _ in 0..100 {
                        b.add(&x, &x).unwrap();
                    }
                });
            }
        });
        assert_eq!(b.stats().cloud.add, 800);
    }

    proptest! {
        #[test]
        fn decrypt_inverts_encrypt(v in prop::collection::vec(-1000i64..1000, 1..256)) {
            let b = SimdEmulator::with_slots(256).unwrap();
            let ct = b.encrypt(&FlatVector::from_values(v.clone())).unwrap();
            prop_assert_eq!(b.decrypt(&ct).unwrap(), v);
        }

        #[test]
        fn rotation_composes(v in prop::collection::vec(-50i64..50, 1..40), a in -100i64..100, c in -100i64..100) {
            let b = emu();
            let ct = enc(&b, &v);
            let two = b.rot(&b.rot(&ct, a).unwrap(), c).unwrap();
            let one = b.rot(&ct, a + c).unwrap();
            prop_assert_eq!(b.decrypt(&two).unwrap(), b.decrypt(&one).unwrap());
            let full = b.rot(&ct, v.len() as i64).unwrap();
            prop_assert_eq!(b.decrypt(&full).unwrap(), v);
        }
    }
}
