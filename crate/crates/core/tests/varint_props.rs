use std::collections::HashSet;

use proptest::prelude::*;
use qrind_core::codec::varint::{decode_varint, encode_varint, varint_len};

fn bits_of(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

#[test]
fn known_codes() {
    assert_eq!(encode_varint(0), bits_of("1"));
    assert_eq!(encode_varint(1), bits_of("010"));
    assert_eq!(encode_varint(2), bits_of("011"));
    assert_eq!(encode_varint(3), bits_of("00100"));
    assert_eq!(encode_varint(6), bits_of("00111"));
    assert_eq!(encode_varint(7), bits_of("0001000"));
}

#[test]
fn prefix_free_small_range() {
    let codes: HashSet<Vec<bool>> = (0..=5000).map(encode_varint).collect();
    assert_eq!(codes.len(), 5001);
    for c in &codes {
        for k in 1..c.len() {
            assert!(!codes.contains(&c[..k]), "{c:?} has a codeword prefix");
        }
    }
}

#[test]
fn stream_of_codes_splits_back() {
    let values: Vec<u64> = (0..300).map(|i| i * i * 37 % 10_007).collect();
    let stream: Vec<bool> = values.iter().flat_map(|&v| encode_varint(v)).collect();
    let mut at = 0;
    for &v in &values {
        let (got, used) = decode_varint(&stream[at..]).unwrap();
        assert_eq!(got, v);
        at += used;
    }
    assert_eq!(at, stream.len());
}

#[test]
fn truncated_codes_fail() {
    for v in [1u64, 5, 1000, u64::MAX] {
        let c = encode_varint(v);
        for k in 0..c.len() {
            assert!(decode_varint(&c[..k]).is_err(), "{v} truncated to {k} bits decoded");
        }
    }
}

proptest! {
    #[test]
    fn round_trip(v in any::<u64>()) {
        let c = encode_varint(v);
        prop_assert_eq!(c.len(), varint_len(v) as usize);
        prop_assert_eq!(decode_varint(&c).unwrap(), (v, c.len()));
    }

    #[test]
    fn length_is_gamma_length(v in 0u64..u64::MAX) {
        let bitlen = 64 - (v + 1).leading_zeros() as usize;
        prop_assert_eq!(encode_varint(v).len(), 2 * bitlen - 1);
    }

    #[test]
    fn length_monotone(a in any::<u64>(), b in any::<u64>()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(varint_len(lo) <= varint_len(hi));
    }
}
