//! Serialization of exact rationals as `"numerator/denominator"` strings.
//!
//! The denominator is always written, even when it is one, so consumers can
//! parse every value the same way.

use num_rational::BigRational;
use serde::Serializer;

pub fn to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&to_string(r))
}

pub fn serialize_vec<S: Serializer>(rs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(rs.iter().map(to_string))
}
