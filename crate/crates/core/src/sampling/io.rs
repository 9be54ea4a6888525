//! Binary dataset container.
//!
//! ```text
//! offset 0   8 bytes   magic "DFDSET01"
//! offset 8   u64 LE    header length H
//! offset 16  H bytes   UTF-8 JSON header
//! then one record per sample, little-endian f64:
//!     region id, target_disp (3), u_all (3N)[, f_c (3 * region vertex count)]
//! ```
//!
//! The force block is present only when the header says `with_forces`. Its
//! length depends on the sample's region, taken from `regions[id].n_vertices`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, DeformationSample, RegionInfo, SampleFailure, SamplingError};
use crate::mesh::ScaleConvention;
use crate::{Error, Vec3};

pub const DATASET_MAGIC: &[u8; 8] = b"DFDSET01";

const FIELD_ORDER: &str = "region_id,target_disp[3],u_all[3N],f_c[3Nc]?";

#[derive(Serialize, Deserialize)]
struct Header {
    mesh_hash: String,
    observation_ids: Vec<usize>,
    observation_free: Vec<usize>,
    n_free: usize,
    n_obs: usize,
    scale: ScaleConvention,
    n_steps: usize,
    sample_count: usize,
    with_forces: bool,
    field_order: String,
    regions: Vec<RegionInfo>,
    failures: Vec<SampleFailure>,
}

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let with_forces = ds.samples.first().is_some_and(|s| s.f_c.is_some());
    let header = Header {
        mesh_hash: ds.mesh_hash.clone(),
        observation_ids: ds.observation_ids.clone(),
        observation_free: ds.observation_free.clone(),
        n_free: ds.n_free,
        n_obs: ds.observation_ids.len(),
        scale: ds.scale,
        n_steps: ds.n_steps,
        sample_count: ds.samples.len(),
        with_forces,
        field_order: FIELD_ORDER.into(),
        regions: ds.regions.clone(),
        failures: ds.failures.clone(),
    };
    let json = serde_json::to_vec(&header).expect("dataset header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + ds.samples.len() * (4 + 3 * ds.n_free) * 8);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let mut put = |x: f64| out.extend_from_slice(&x.to_le_bytes());
    for s in &ds.samples {
        put(s.region as f64);
        s.target_disp.iter().for_each(|&x| put(x));
        s.u_all.iter().for_each(|&x| put(x));
        if with_forces {
            s.f_c.as_deref().unwrap_or_default().iter().for_each(|&x| put(x));
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8], SamplingError> {
        if self.bytes.len() - self.pos < n {
            return Err(SamplingError::Parse {
                offset: self.bytes.len() as u64,
                message: format!("truncated while reading {what}: need {n} bytes at offset {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, SamplingError> {
        let raw = self.take(8 * n, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset, SamplingError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != DATASET_MAGIC {
        return Err(SamplingError::Parse { offset: 0, message: "not a dataset file (bad magic)".into() });
    }
    let len = u64::from_le_bytes(r.take(8, "header length")?.try_into().unwrap());
    let len =
        usize::try_from(len).map_err(|_| SamplingError::Parse { offset: 8, message: "header too large".into() })?;
    let header: Header = serde_json::from_slice(r.take(len, "header")?)
        .map_err(|e| SamplingError::Parse { offset: 16, message: format!("bad header: {e}") })?;

    let mut samples = Vec::with_capacity(header.sample_count);
    for i in 0..header.sample_count {
        let start = r.pos as u64;
        let head = r.f64s(4, &format!("sample {i}"))?;
        let region = head[0];
        if !(region >= 0.0 && region.fract() == 0.0 && (region as usize) < header.regions.len()) {
            return Err(SamplingError::Parse { offset: start, message: format!("sample {i}: bad region id {region}") });
        }
        let region = region as usize;
        let u_all = r.f64s(3 * header.n_free, &format!("sample {i}"))?;
        let f_c = if header.with_forces {
            Some(r.f64s(3 * header.regions[region].n_vertices, &format!("sample {i} forces"))?)
        } else {
            None
        };
        samples.push(DeformationSample { region, target_disp: Vec3::new(head[1], head[2], head[3]), u_all, f_c });
    }
    if r.pos != bytes.len() {
        return Err(SamplingError::Parse {
            offset: r.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    let ds = Dataset {
        mesh_hash: header.mesh_hash,
        observation_ids: header.observation_ids,
        observation_free: header.observation_free,
        n_free: header.n_free,
        scale: header.scale,
        n_steps: header.n_steps,
        regions: header.regions,
        samples,
        failures: header.failures,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, Error> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(decode_dataset(&bytes)?)
}

/// One row per sample: region name, target displacement, then `u_all`.
pub fn write_csv(ds: &Dataset, mut w: impl std::io::Write) -> std::io::Result<()> {
    write!(w, "sample,region,tx,ty,tz")?;
    for v in 0..ds.n_free {
        write!(w, ",u{v}x,u{v}y,u{v}z")?;
    }
    writeln!(w)?;
    for (i, s) in ds.samples.iter().enumerate() {
        write!(w, "{i},{},{},{},{}", ds.regions[s.region].name, s.target_disp.x, s.target_disp.y, s.target_disp.z)?;
        for u in &s.u_all {
            write!(w, ",{u}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(with_forces: bool) -> Dataset {
        let regions =
            vec![RegionInfo { name: "a".into(), n_vertices: 1 }, RegionInfo { name: "b".into(), n_vertices: 2 }];
        let samples = (0..3)
            .map(|i| DeformationSample {
                region: i % 2,
                target_disp: Vec3::new(0.1 * i as f64, -1e-300, 1.0 / 3.0),
                u_all: (0..6).map(|k| (k * i) as f64 / 7.0).collect(),
                f_c: with_forces.then(|| vec![i as f64; 3 * (1 + i % 2)]),
            })
            .collect();
        Dataset {
            mesh_hash: "abc".into(),
            observation_ids: vec![5],
            observation_free: vec![1],
            n_free: 2,
            scale: ScaleConvention::default(),
            n_steps: 10,
            regions,
            samples,
            failures: vec![SampleFailure { region: 1, target_disp: [1.0, 0.0, 0.0], reason: "inverted".into() }],
        }
    }

    #[test]
    fn round_trip_with_and_without_forces() {
        for f in [false, true] {
            let ds = toy(f);
            let bytes = encode_dataset(&ds);
            assert_eq!(decode_dataset(&bytes).unwrap(), ds);
            assert_eq!(encode_dataset(&decode_dataset(&bytes).unwrap()), bytes);
        }
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_dataset(&toy(false));
        let cut = &bytes[..bytes.len() - 5];
        match decode_dataset(cut).unwrap_err() {
            SamplingError::Parse { offset, message } => {
                assert_eq!(offset, cut.len() as u64);
                assert!(message.contains("truncated"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(decode_dataset(&bytes[..4]), Err(SamplingError::Parse { .. })));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_dataset(&extra), Err(SamplingError::Parse { .. })));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(decode_dataset(&bad), Err(SamplingError::Parse { offset: 0, .. })));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&toy(false), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 5 + 6);
        assert!(lines[2].starts_with("1,b,0.1,"));
    }
}
