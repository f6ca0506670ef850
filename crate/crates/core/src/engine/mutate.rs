use rand::Rng;
use serde::{Deserialize, Serialize};

pub const MAX_INPUT_LEN: usize = 4096;
pub const MAX_STACK: usize = 8;
const ARITH_MAX: u8 = 35;

const INTERESTING_8: [u8; 5] = [0, 1, 127, 128, 255];
const INTERESTING_16: [u16; 9] = [0, 1, 127, 128, 255, 256, 32767, 32768, 65535];
const INTERESTING_32: [u32; 9] = [0, 1, 127, 128, 255, 65535, 65536, 2147483647, 2147483648];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    BitFlip,
    ByteSet,
    ByteArith,
    Interesting,
    BlockDelete,
    BlockDuplicate,
    Splice,
}

impl MutationOp {
    pub const ALL: [MutationOp; 7] = [
        MutationOp::BitFlip,
        MutationOp::ByteSet,
        MutationOp::ByteArith,
        MutationOp::Interesting,
        MutationOp::BlockDelete,
        MutationOp::BlockDuplicate,
        MutationOp::Splice,
    ];
}

/// Apply one operator in place. Splice without a donor falls back to a byte
/// set. Returns the operator actually applied.
pub fn apply_op<R: Rng>(op: MutationOp, data: &mut Vec<u8>, rng: &mut R, corpus: &[&[u8]]) -> MutationOp {
    if data.is_empty() {
        data.push(rng.random());
    }
    let len = data.len();
    match op {
        MutationOp::BitFlip => {
            let i = rng.random_range(0..len);
            data[i] ^= 1 << rng.random_range(0..8);
        }
        MutationOp::ByteSet => {
            let i = rng.random_range(0..len);
            data[i] = rng.random();
        }
        MutationOp::ByteArith => {
            let i = rng.random_range(0..len);
            let delta = rng.random_range(1..=ARITH_MAX);
            data[i] = if rng.random_bool(0.5) { data[i].wrapping_add(delta) } else { data[i].wrapping_sub(delta) };
        }
        MutationOp::Interesting => {
            let width = [1usize, 2, 4][rng.random_range(0..3)];
            let bytes: Vec<u8> = match width {
                4 if len >= 4 => {
                    let v = INTERESTING_32[rng.random_range(0..INTERESTING_32.len())];
                    if rng.random_bool(0.5) { v.to_le_bytes().to_vec() } else { v.to_be_bytes().to_vec() }
                }
                2 | 4 if len >= 2 => {
                    let v = INTERESTING_16[rng.random_range(0..INTERESTING_16.len())];
                    if rng.random_bool(0.5) { v.to_le_bytes().to_vec() } else { v.to_be_bytes().to_vec() }
                }
                _ => vec![INTERESTING_8[rng.random_range(0..INTERESTING_8.len())]],
            };
            let at = rng.random_range(0..=len - bytes.len());
            data[at..at + bytes.len()].copy_from_slice(&bytes);
        }
        MutationOp::BlockDelete => {
            if len > 1 {
                let n = rng.random_range(1..len);
                let at = rng.random_range(0..=len - n);
                data.drain(at..at + n);
            } else {
                return apply_op(MutationOp::ByteSet, data, rng, corpus);
            }
        }
        MutationOp::BlockDuplicate => {
            let room = MAX_INPUT_LEN.saturating_sub(len);
            if room == 0 {
                return apply_op(MutationOp::ByteSet, data, rng, corpus);
            }
            let n = rng.random_range(1..=len.min(room));
            let from = rng.random_range(0..=len - n);
            let to = rng.random_range(0..=len);
            let block: Vec<u8> = data[from..from + n].to_vec();
            data.splice(to..to, block);
        }
        MutationOp::Splice => {
            let donors: Vec<&[u8]> = corpus.iter().copied().filter(|d| !d.is_empty()).collect();
            if donors.is_empty() {
                return apply_op(MutationOp::ByteSet, data, rng, corpus);
            }
            let other = donors[rng.random_range(0..donors.len())];
            let a = rng.random_range(1..=len);
            let b = rng.random_range(0..other.len());
            data.truncate(a);
            data.extend_from_slice(&other[b..]);
        }
    }
    data.truncate(MAX_INPUT_LEN);
    op
}

/// Stack 1 to 8 random operators on a copy of `input`.
pub fn mutate<R: Rng>(input: &[u8], rng: &mut R, corpus: &[&[u8]]) -> Vec<u8> {
    let mut out = input.to_vec();
    let stack = 1 << rng.random_range(0..4);
    debug_assert!(stack <= MAX_STACK);
    for _ in 0..stack {
        let op = MutationOp::ALL[rng.random_range(0..MutationOp::ALL.len())];
        apply_op(op, &mut out, rng, corpus);
    }
    out
}
