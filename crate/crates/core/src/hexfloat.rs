//! Lossless hexadecimal float literals (`0x1.8p+1`) for artifact serialization.
//!
//! Only the canonical form produced by [`format`] is accepted by [`parse`]:
//! normal numbers as `0x1.<mantissa>p<exp>`, subnormals as `0x0.<mantissa>p-1022`,
//! zero as `0x0p+0`, plus `inf`, `-inf` and `nan`.

use serde::{Deserialize, Deserializer, Serializer};
use serde_with::{DeserializeAs, SerializeAs};

const MANTISSA_BITS: u32 = 52;
const MANTISSA_MASK: u64 = (1 << MANTISSA_BITS) - 1;
const EXP_BIAS: i64 = 1023;

pub fn format(value: f64) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = value.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_field = ((bits >> MANTISSA_BITS) & 0x7ff) as i64;
    let mantissa = bits & MANTISSA_MASK;
    if exp_field == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_field == 0 {
        (0, 1 - EXP_BIAS)
    } else {
        (1, exp_field - EXP_BIAS)
    };
    let digits = format!("{mantissa:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed hexadecimal float literal `{0}`")]
pub struct ParseHexFloatError(pub String);

pub fn parse(text: &str) -> Result<f64, ParseHexFloatError> {
    let err = || ParseHexFloatError(text.to_string());
    match text {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (negative, rest) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text),
    };
    let rest = rest.strip_prefix("0x").ok_or_else(err)?;
    let (significand, exponent) = rest.split_once('p').ok_or_else(err)?;
    if !(exponent.starts_with('+') || exponent.starts_with('-')) {
        return Err(err());
    }
    let exp: i64 = exponent.parse().map_err(|_| err())?;
    let (lead, frac) = match significand.split_once('.') {
        Some((l, f)) if !f.is_empty() => (l, f),
        Some(_) => return Err(err()),
        None => (significand, ""),
    };
    if frac.len() > 13 || !frac.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()) {
        return Err(err());
    }
    let mantissa = if frac.is_empty() {
        0
    } else {
        u64::from_str_radix(frac, 16).map_err(|_| err())? << (4 * (13 - frac.len()))
    };
    let sign_bit = if negative { 1u64 << 63 } else { 0 };
    let bits = match lead {
        "1" => {
            let field = exp + EXP_BIAS;
            if !(1..=2046).contains(&field) {
                return Err(err());
            }
            ((field as u64) << MANTISSA_BITS) | mantissa
        }
        "0" if mantissa == 0 && exp == 0 && frac.is_empty() => 0,
        "0" if exp == 1 - EXP_BIAS && mantissa != 0 => mantissa,
        _ => return Err(err()),
    };
    Ok(f64::from_bits(sign_bit | bits))
}

/// `serde_with` adapter: `#[serde_as(as = "HexF64")]`, also usable nested
/// (`Vec<HexF64>`, `BTreeMap<_, HexF64>`).
pub struct HexF64;

impl SerializeAs<f64> for HexF64 {
    fn serialize_as<S: Serializer>(source: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format(*source))
    }
}

impl<'de> DeserializeAs<'de, f64> for HexF64 {
    fn deserialize_as<D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_literals() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(3.0), "0x1.8p+1");
        assert_eq!(format(-0.5), "-0x1p-1");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(format(0.1), "0x1.999999999999ap-4");
        assert_eq!(format(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(parse("0x1.8p+1").unwrap(), 3.0);
    }

    #[test]
    fn rejects_non_canonical() {
        for bad in ["1.0", "0x1.p+1", "0x1.8p1", "0x2p+0", "0x1.8P+1", "0x1.ABp+0", "0x0.8p+0", ""] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn special_values() {
        assert!(parse(&format(f64::NAN)).unwrap().is_nan());
        assert_eq!(parse(&format(f64::INFINITY)).unwrap(), f64::INFINITY);
        assert_eq!(parse(&format(f64::NEG_INFINITY)).unwrap(), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(!v.is_nan());
            let back = parse(&format(v)).unwrap();
            prop_assert_eq!(back.to_bits(), bits);
        }
    }
}
