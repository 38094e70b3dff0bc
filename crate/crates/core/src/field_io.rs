//! Binary field serialization.
//!
//! Layout: the 8-byte magic `HRZFLD01`, a little-endian u32 header length,
//! a UTF-8 JSON header `{n, N, L, components, dtype, order}`, then the raw
//! little-endian f64 payload — components concatenated, each row-major.
//! Writing the same field twice produces identical bytes, and a write/read
//! round trip is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::ArrayD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

pub const MAGIC: &[u8; 8] = b"HRZFLD01";

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    #[serde(rename = "N")]
    points: usize,
    #[serde(rename = "L")]
    length: f64,
    components: usize,
    dtype: String,
    order: String,
}

/// Serialize a field into the binary container format.
pub fn write_field(field: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field_to(field, &mut w)
}

pub fn write_field_to(field: &Field, w: &mut impl Write) -> Result<()> {
    let grid = field.grid();
    let header = Header {
        n: grid.dim(),
        points: grid.points(),
        length: grid.length(),
        components: field.components(),
        dtype: "f64".to_string(),
        order: "row-major".to_string(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for c in 0..field.components() {
        for v in field.component_slice(c) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Deserialize a field written by [`write_field`].
pub fn read_field(path: &Path) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    read_field_from(&mut r)
}

pub fn read_field_from(r: &mut impl Read) -> Result<Field> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated field file: missing magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)
        .map_err(|_| Error::Format("truncated field file: missing header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| Error::Format("truncated field file: short header".into()))?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Format(format!("malformed header: {e}")))?;
    if header.dtype != "f64" {
        return Err(Error::Format(format!(
            "unsupported dtype {:?} (only f64 is defined)",
            header.dtype
        )));
    }
    if header.order != "row-major" {
        return Err(Error::Format(format!(
            "unsupported order {:?} (only row-major is defined)",
            header.order
        )));
    }
    let grid = Grid::new(header.n, header.points, header.length)?;
    if header.components != 1 && header.components != grid.dim() {
        return Err(Error::Format(format!(
            "component count {} incompatible with dimension {}",
            header.components, header.n
        )));
    }
    let per_component = grid.size();
    let mut payload = vec![0u8; header.components * per_component * 8];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Format("payload shorter than header declares".into()))?;
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(Error::Format("payload longer than header declares".into()));
    }
    let shape = grid.shape();
    let mut components = Vec::with_capacity(header.components);
    for c in 0..header.components {
        let mut values = Vec::with_capacity(per_component);
        let base = c * per_component * 8;
        for i in 0..per_component {
            let mut bytes = [0u8; 8];
            bytes.copy_from_slice(&payload[base + 8 * i..base + 8 * i + 8]);
            values.push(f64::from_le_bytes(bytes));
        }
        let arr = ArrayD::from_shape_vec(shape.as_slice(), values)
            .map_err(|e| Error::Format(format!("payload shape error: {e}")))?;
        components.push(arr);
    }
    if components.len() == 1 {
        Field::scalar(grid, components.pop().unwrap())
    } else {
        Field::vector(grid, components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample_field() -> Field {
        let grid = Grid::new(2, 32, 16.0).unwrap();
        let l = grid.length();
        Field::vector_from_fn(grid, |x, c| {
            ((2.0 * PI * x[c] / l).sin() + 0.1 * x[1 - c]).tanh()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact_and_deterministic() {
        let field = sample_field();
        let mut bytes_a = Vec::new();
        write_field_to(&field, &mut bytes_a).unwrap();
        let mut bytes_b = Vec::new();
        write_field_to(&field, &mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b, "serialization must be deterministic");

        let back = read_field_from(&mut bytes_a.as_slice()).unwrap();
        assert_eq!(back.components(), field.components());
        for c in 0..field.components() {
            for (a, b) in field
                .component_slice(c)
                .iter()
                .zip(back.component_slice(c))
            {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_corrupted_containers() {
        let field = sample_field();
        let mut bytes = Vec::new();
        write_field_to(&field, &mut bytes).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_field_from(&mut bad_magic.as_slice()),
            Err(Error::Format(_))
        ));

        let truncated = &bytes[..bytes.len() - 4];
        assert!(matches!(
            read_field_from(&mut &truncated[..]),
            Err(Error::Format(_))
        ));

        let mut extended = bytes.clone();
        extended.extend_from_slice(&[0u8; 8]);
        assert!(matches!(
            read_field_from(&mut extended.as_slice()),
            Err(Error::Format(_))
        ));

        // Flip the declared dtype inside the JSON header.
        let json_start = 12;
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut bad_dtype = bytes.clone();
        let header_text = String::from_utf8(bytes[json_start..json_start + header_len].to_vec())
            .unwrap()
            .replace("f64", "f32");
        bad_dtype.splice(json_start..json_start + header_len, header_text.into_bytes());
        assert!(matches!(
            read_field_from(&mut bad_dtype.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
