mod common;

use common::exact_f16_bits;
use half::f16;
use proptest::prelude::*;
use qrind_core::codec::f16::{decode_f16, encode_f16, F16};

#[test]
fn every_finite_pattern_round_trips() {
    let mut checked = 0;
    for bits in 0..=u16::MAX {
        let reference = f16::from_bits(bits);
        if !reference.is_finite() {
            continue;
        }
        let x = decode_f16(bits);
        assert_eq!(x, reference.to_f64(), "decode {bits:#06x}");
        assert_eq!(encode_f16(x), bits, "encode {bits:#06x}");
        checked += 1;
    }
    assert_eq!(checked, 63_488);
}

#[test]
fn specials() {
    assert_eq!(encode_f16(f64::INFINITY), 0x7c00);
    assert_eq!(encode_f16(f64::NEG_INFINITY), 0xfc00);
    assert!(F16::from_bits(encode_f16(f64::NAN)).is_nan());
    assert_eq!(decode_f16(0x7c00), f64::INFINITY);
    assert!(decode_f16(0x7e00).is_nan());
    assert_eq!(encode_f16(-0.0), 0x8000);
    assert_eq!(encode_f16(1e-10), 0);
}

proptest! {
    #[test]
    fn rounding_matches_reference(x in any::<f64>().prop_filter("NaN", |x| !x.is_nan())) {
        prop_assert_eq!(encode_f16(x), exact_f16_bits(x));
    }

    #[test]
    fn rounding_near_representable(bits in 0u16..0x7c00, frac in 0.0f64..1.0, neg in any::<bool>()) {
        // Points between two adjacent halves, including exact midpoints.
        let lo = f16::from_bits(bits).to_f64();
        let hi = f16::from_bits(bits + 1).to_f64();
        let mut x = lo + (hi - lo) * frac;
        if neg { x = -x; }
        prop_assert_eq!(encode_f16(x), exact_f16_bits(x));
        let mid = if neg { -(lo + hi) / 2.0 } else { (lo + hi) / 2.0 };
        prop_assert_eq!(encode_f16(mid), exact_f16_bits(mid));
    }

    #[test]
    fn from_f32_matches_reference(x in any::<f32>().prop_filter("NaN", |x| !x.is_nan())) {
        prop_assert_eq!(F16::from_f32(x).to_bits(), f16::from_f32(x).to_bits());
    }
}

#[test]
fn just_above_midpoint_rounds_up() {
    // 41.328125 is the midpoint of 41.3125 and 41.34375; a hair above must go up
    // even though the value collapses onto the midpoint in f32.
    let x = 41.32812591644252;
    assert_eq!(x as f32, 41.328125f32);
    assert_eq!(decode_f16(encode_f16(x)), 41.34375);
    assert_eq!(exact_f16_bits(x), encode_f16(x));
    assert_eq!(decode_f16(encode_f16(41.328125)), 41.3125);
}

#[test]
fn exact_reference_agrees_on_representable_values() {
    for bits in (0u16..0x7c00).step_by(7) {
        let v = f16::from_bits(bits).to_f64();
        assert_eq!(exact_f16_bits(v), bits);
        assert_eq!(exact_f16_bits(-v), bits | 0x8000);
    }
    assert_eq!(exact_f16_bits(65519.99), 0x7bff);
    assert_eq!(exact_f16_bits(65520.0), 0x7c00);
}
