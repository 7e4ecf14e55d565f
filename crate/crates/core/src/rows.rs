//! Serde adapter writing a real 3x3 matrix as an array of rows.
//!
//! Use as `#[serde(with = "crate::rows")]` on `Mat3` fields.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{Mat3, Rotation3};

pub fn to_rows(m: &Mat3) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]])
}

pub fn from_rows(r: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| r[i][j])
}

pub fn serialize<S: Serializer>(m: &Mat3, s: S) -> Result<S::Ok, S::Error> {
    to_rows(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat3, D::Error> {
    let r = <[[f64; 3]; 3]>::deserialize(d)?;
    Ok(from_rows(&r))
}

impl Serialize for Rotation3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        to_rows(self.matrix()).serialize(s)
    }
}

/// Accepts matrices orthogonal to within `1e-9`, matching the precision of
/// decimal round trips.
impl<'de> Deserialize<'de> for Rotation3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = <[[f64; 3]; 3]>::deserialize(d)?;
        Rotation3::with_tolerance(from_rows(&r), 1e-9).map_err(serde::de::Error::custom)
    }
}
