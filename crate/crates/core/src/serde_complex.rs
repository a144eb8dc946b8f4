//! Complex numbers serialize as `[re, im]` pairs.

use num_complex::Complex64;
use serde::de::{Deserialize, Deserializer};
use serde::ser::{SerializeSeq, Serializer};

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let [re, im] = <[f64; 2]>::deserialize(d)?;
    Ok(Complex64::new(re, im))
}

use serde::Serialize;

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for z in v {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

pub mod array4 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64; 4], s: S) -> Result<S::Ok, S::Error> {
        super::vec::serialize(v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Complex64; 4], D::Error> {
        let v = super::vec::deserialize(d)?;
        v.try_into().map_err(|_| serde::de::Error::custom("expected four complex vertices"))
    }
}
