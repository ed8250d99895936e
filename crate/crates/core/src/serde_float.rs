// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON has no encoding for infinities. Fields that may legitimately hold
//! `±∞` (an infinite threshold, the Hausdorff distance to an empty set) are
//! written as the strings `"inf"` / `"-inf"` and finite values as numbers.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
}

pub fn serialize<T: Scalar, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
    let v = value.as_f64();
    if v.is_finite() {
        value.serialize(s)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Number(v) => Ok(T::of(v)),
        Repr::Text(t) => match t.as_str() {
            "inf" => Ok(T::infinity()),
            "-inf" => Ok(T::neg_infinity()),
            "nan" => Ok(T::nan()),
            other => Err(de::Error::custom(format!(
                "expected a number, got {other:?}"
            ))),
        },
    }
}
