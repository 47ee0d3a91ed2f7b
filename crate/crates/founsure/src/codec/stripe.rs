//! The `(k + n) * t` working buffer and XOR encoding of one stripe.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use crate::error::{Error, Result};
use crate::graph::GeneratorMatrix;
use crate::precode::{apply_precode, Check1Sets};

/// XORs `src` into `dst`, bytewise.
pub fn xor_accumulate(dst: &mut [u8], src: &[u8]) -> Result<()> {
    if dst.len() != src.len() {
        return Err(Error::Internal(format!(
            "xor length mismatch: {} vs {}",
            dst.len(),
            src.len()
        )));
    }
    xor_into(dst, src);
    Ok(())
}

#[inline]
fn xor_into(dst: &mut [u8], src: &[u8]) {
    let mut dc = dst.chunks_exact_mut(8);
    let mut sc = src.chunks_exact(8);
    for (d, s) in dc.by_ref().zip(sc.by_ref()) {
        let v = u64::from_ne_bytes(d.try_into().unwrap()) ^ u64::from_ne_bytes(s.try_into().unwrap());
        d.copy_from_slice(&v.to_ne_bytes());
    }
    for (d, s) in dc.into_remainder().iter_mut().zip(sc.remainder()) {
        *d ^= s;
    }
}

/// One stripe's working memory: `k*t` bytes of data symbols (user bytes
/// first, then precode parities) followed by `n*t` bytes of coding symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeBuffer {
    k: u64,
    n: u64,
    t: u64,
    bytes: Vec<u8>,
}

impl StripeBuffer {
    pub fn new(k: u64, n: u64, t: u64) -> Self {
        StripeBuffer { k, n, t, bytes: vec![0u8; ((k + n) * t) as usize] }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// The `k*t`-byte data region.
    pub fn data(&self) -> &[u8] {
        &self.bytes[..(self.k * self.t) as usize]
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        let end = (self.k * self.t) as usize;
        &mut self.bytes[..end]
    }

    /// The `n*t`-byte coding region.
    pub fn coding(&self) -> &[u8] {
        &self.bytes[(self.k * self.t) as usize..]
    }

    pub fn coding_mut(&mut self) -> &mut [u8] {
        let start = (self.k * self.t) as usize;
        &mut self.bytes[start..]
    }

    /// Both regions at once, for writers that read data while filling coding.
    pub fn regions_mut(&mut self) -> (&[u8], &mut [u8]) {
        let split = (self.k * self.t) as usize;
        let (data, coding) = self.bytes.split_at_mut(split);
        (&*data, coding)
    }

    pub fn data_symbol(&self, i: u32) -> &[u8] {
        let t = self.t as usize;
        &self.data()[i as usize * t..(i as usize + 1) * t]
    }

    pub fn coding_symbol(&self, j: u32) -> &[u8] {
        let t = self.t as usize;
        &self.coding()[j as usize * t..(j as usize + 1) * t]
    }
}

/// Computes all coding symbols from a filled data region. The coding region
/// is split into one contiguous range per disk; `workers` threads process
/// disks round-robin, sharing the read-only data region.
pub fn fill_coding_region(
    data: &[u8],
    coding: &mut [u8],
    matrix: &GeneratorMatrix,
    t: usize,
    workers: usize,
) {
    debug_assert_eq!(data.len(), matrix.k() as usize * t);
    debug_assert_eq!(coding.len(), matrix.n() as usize * t);
    coding.fill(0);
    let cpd = matrix.chunks_per_disk() as usize;
    let disk_bytes = cpd * t;

    let encode_disk = |disk: usize, slice: &mut [u8]| {
        for local in 0..cpd {
            let id = disk * cpd + local;
            let out = &mut slice[local * t..(local + 1) * t];
            for &d in matrix.column(id as u32) {
                xor_into(out, &data[d as usize * t..(d as usize + 1) * t]);
            }
        }
    };

    if workers <= 1 || matrix.s() == 1 {
        for (disk, slice) in coding.chunks_mut(disk_bytes).enumerate() {
            encode_disk(disk, slice);
        }
        return;
    }

    let workers = workers.min(matrix.s() as usize);
    let mut per_worker: Vec<Vec<(usize, &mut [u8])>> = (0..workers).map(|_| Vec::new()).collect();
    for (disk, slice) in coding.chunks_mut(disk_bytes).enumerate() {
        per_worker[disk % workers].push((disk, slice));
    }
    thread::scope(|scope| {
        for assignment in per_worker {
            scope.spawn(move || {
                for (disk, slice) in assignment {
                    encode_disk(disk, slice);
                }
            });
        }
    });
}

/// Encodes one stripe: copies the user bytes, fills the precode parities,
/// then XORs every generator column into its coding symbol.
pub fn encode_stripe(
    user_data: &[u8],
    matrix: &GeneratorMatrix,
    check1: &Check1Sets,
    t: u64,
) -> Result<StripeBuffer> {
    let b = check1.b();
    let k = matrix.k();
    if check1.k() != k {
        return Err(Error::Parameter("precode and generator disagree on k".into()));
    }
    if user_data.len() as u64 != b * t {
        return Err(Error::Parameter(format!(
            "stripe payload is {} bytes, expected {}",
            user_data.len(),
            b * t
        )));
    }
    let mut buf = StripeBuffer::new(k, matrix.n(), t);
    let tu = t as usize;
    buf.data_mut()[..user_data.len()].copy_from_slice(user_data);
    let parities = apply_precode(user_data, check1, tu)?;
    buf.data_mut()[(b * t) as usize..].copy_from_slice(&parities);
    let (data, coding) = buf.regions_mut();
    fill_coding_region(data, coding, matrix, tu, 1);
    Ok(buf)
}

/// Dynamic work distribution helper: hands out indices `0..len` to a pool of
/// closures until exhausted.
pub(crate) struct WorkQueue {
    next: AtomicUsize,
    len: usize,
}

impl WorkQueue {
    pub(crate) fn new(len: usize) -> Self {
        WorkQueue { next: AtomicUsize::new(0), len }
    }

    pub(crate) fn grab(&self) -> Option<usize> {
        let i = self.next.fetch_add(1, Ordering::Relaxed);
        (i < self.len).then_some(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precode::build_check1;
    use crate::rngdist::{make_distribution, DistKind, RandomStream};

    #[test]
    fn xor_self_inverse_and_identity() {
        let mut stream = RandomStream::new(9);
        let a: Vec<u8> = (0..512).map(|_| stream.next_value() as u8).collect();
        let b: Vec<u8> = (0..512).map(|_| stream.next_value() as u8).collect();

        let mut x = a.clone();
        xor_accumulate(&mut x, &a).unwrap();
        assert!(x.iter().all(|&v| v == 0));

        let mut y = a.clone();
        xor_accumulate(&mut y, &vec![0u8; 512]).unwrap();
        assert_eq!(y, a);

        let mut z = a.clone();
        xor_accumulate(&mut z, &b).unwrap();
        xor_accumulate(&mut z, &b).unwrap();
        assert_eq!(z, a);

        assert!(xor_accumulate(&mut z, &b[..100]).is_err());
    }

    #[test]
    fn encode_zero_input_gives_zero_coding() {
        let dist = make_distribution(DistKind::FiniteDist, 6, 0.0, 0.5).unwrap();
        let matrix = crate::graph::build_generator(6, 12, 2, 5, &dist).unwrap();
        let check1 = build_check1(3, 6).unwrap();
        let buf = encode_stripe(&vec![0u8; 3 * 8], &matrix, &check1, 8).unwrap();
        assert!(buf.coding().iter().all(|&v| v == 0));
        assert!(buf.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn encode_degenerate_k1() {
        // Every column is {0}, so all coding symbols equal the single data symbol.
        let dist = make_distribution(DistKind::FiniteDist, 1, 0.0, 0.5).unwrap();
        let matrix = crate::graph::build_generator(1, 4, 2, 5, &dist).unwrap();
        let check1 = build_check1(1, 1).unwrap();
        let payload = [0xABu8, 0xCD];
        let buf = encode_stripe(&payload, &matrix, &check1, 2).unwrap();
        for j in 0..4 {
            assert_eq!(buf.coding_symbol(j), &payload);
        }
    }

    #[test]
    fn encode_matches_column_oracle() {
        // Hand-built 4-symbol matrix checked column by column.
        let dist = make_distribution(DistKind::FiniteDist, 4, 0.0, 0.5).unwrap();
        let matrix = crate::graph::build_generator(4, 8, 2, 77, &dist).unwrap();
        let check1 = build_check1(4, 4).unwrap(); // rate-1 precode: b = k
        let t = 16u64;
        let mut stream = RandomStream::new(3);
        let payload: Vec<u8> = (0..4 * t).map(|_| stream.next_value() as u8).collect();
        let buf = encode_stripe(&payload, &matrix, &check1, t).unwrap();
        for j in 0..8u32 {
            let mut expected = vec![0u8; t as usize];
            for &d in matrix.column(j) {
                for (e, s) in expected
                    .iter_mut()
                    .zip(&payload[d as usize * t as usize..(d as usize + 1) * t as usize])
                {
                    *e ^= s;
                }
            }
            assert_eq!(buf.coding_symbol(j), expected.as_slice(), "column {j}");
        }
    }

    #[test]
    fn parallel_fill_matches_serial() {
        let dist = make_distribution(DistKind::FiniteDist, 50, 0.0, 0.5).unwrap();
        let matrix = crate::graph::build_generator(50, 120, 6, 123, &dist).unwrap();
        let t = 32usize;
        let mut stream = RandomStream::new(8);
        let data: Vec<u8> = (0..50 * t).map(|_| stream.next_value() as u8).collect();
        let mut serial = vec![0u8; 120 * t];
        let mut parallel = vec![0u8; 120 * t];
        fill_coding_region(&data, &mut serial, &matrix, t, 1);
        fill_coding_region(&data, &mut parallel, &matrix, t, 4);
        assert_eq!(serial, parallel);
    }
}
