//! Serde representation of dense matrices as `{ rows, cols, data }` with
//! column-major data, usable without `std`.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    Dense { rows: m.nrows(), cols: m.ncols(), data: m.as_slice().to_vec() }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let dense = Dense::deserialize(d)?;
    if dense.rows * dense.cols != dense.data.len() {
        return Err(serde::de::Error::custom("matrix data length does not match its shape"));
    }
    Ok(DMatrix::from_vec(dense.rows, dense.cols, dense.data))
}
