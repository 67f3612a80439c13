//! JSON encoding of complex matrices as row-major nested `[re, im]` pairs.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{c64, CMatrix};

type Rows = Vec<Vec<[f64; 2]>>;

pub fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn from_rows(rows: &Rows) -> Result<CMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    if rows.iter().flatten().any(|z| !z[0].is_finite() || !z[1].is_finite()) {
        return Err("matrix entries must be finite".into());
    }
    Ok(CMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().map(|z| c64(z[0], z[1])),
    ))
}

/// `#[serde(with = "crate::json::matrix")]`
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Rows::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

pub mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let list = Vec::<Rows>::deserialize(d)?;
        list.iter().map(|r| from_rows(r).map_err(D::Error::custom)).collect()
    }
}

pub mod optional_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
        let rows = Option::<Rows>::deserialize(d)?;
        rows.map(|r| from_rows(&r).map_err(D::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let rows = vec![vec![[1.0, 0.0]], vec![[1.0, 0.0], [0.0, 1.0]]];
        assert!(from_rows(&rows).is_err());
    }

    #[test]
    fn row_major_layout() {
        let rows = vec![vec![[1.0, 0.0], [2.0, 0.5]], vec![[3.0, 0.0], [4.0, 0.0]]];
        let m = from_rows(&rows).unwrap();
        assert_eq!(m[(0, 1)], c64(2.0, 0.5));
        assert_eq!(m[(1, 0)], c64(3.0, 0.0));
        assert_eq!(to_rows(&m), rows);
    }
}
