//! Stripe-oriented XOR encoding, peeling decode, and decoding-path
//! generation, plus the whole-file encode/decode pipelines.

mod bp;
mod file;
mod stripe;

pub use bp::{
    bp_decode_stripe, can_decode_users, dpg, peel_mask, replay_decode_stripe, DecodingPath,
};
pub use file::{decode_file, detect_missing_disks, encode_file, DecodeOutcome};
pub use stripe::{encode_stripe, fill_coding_region, xor_accumulate, StripeBuffer};
