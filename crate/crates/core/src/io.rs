//! Binary formats for signals, filter banks and feature packs.
//!
//! Signal (`FSIG`), little-endian:
//! magic `FSIG`, version u32, dim u32, N per axis u32, Δ per axis f64,
//! domain u8 (0 space, 1 frequency), then interleaved f64 re/im, row-major.
//!
//! Banks (`FBNK`) and feature packs (`FPAK`) share one container layout:
//! magic, version u32, manifest length u64, JSON manifest, blob count u64,
//! then each blob as a u64 length followed by an `FSIG` record.

use std::fs;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{BankInfo, FilterBank};
use crate::network::{FeatureLayer, FeatureVector, Path};
use crate::signal::{Domain, Grid, SampledSignal};

const SIGNAL_MAGIC: &[u8; 4] = b"FSIG";
const BANK_MAGIC: &[u8; 4] = b"FBNK";
const PACK_MAGIC: &[u8; 4] = b"FPAK";
const VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn magic(&mut self, expect: &[u8; 4]) -> Result<()> {
        let m = self.take(4)?;
        if m != expect {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(m),
                String::from_utf8_lossy(expect)
            )));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn finished(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_signal(s: &SampledSignal) -> Vec<u8> {
    let g = s.grid();
    let mut out = Vec::with_capacity(16 + 12 * g.dim + 1 + 16 * g.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim as u32).to_le_bytes());
    for _ in 0..g.dim {
        out.extend_from_slice(&(g.n as u32).to_le_bytes());
    }
    for _ in 0..g.dim {
        out.extend_from_slice(&g.spacing.to_le_bytes());
    }
    out.push(match s.domain() {
        Domain::Space => 0,
        Domain::Frequency => 1,
    });
    for v in s.samples() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn read_signal_from(r: &mut Reader<'_>) -> Result<SampledSignal> {
    r.magic(SIGNAL_MAGIC)?;
    let dim = r.u32()? as usize;
    if dim != 1 && dim != 2 {
        return Err(Error::Format(format!("dimension {dim} not supported")));
    }
    let ns: Vec<u32> = (0..dim).map(|_| r.u32()).collect::<Result<_>>()?;
    let ds: Vec<f64> = (0..dim).map(|_| r.f64()).collect::<Result<_>>()?;
    if ns.iter().any(|&n| n != ns[0]) {
        return Err(Error::Format(format!("non-square grid {ns:?}")));
    }
    if ds.iter().any(|&d| d != ds[0]) {
        return Err(Error::Format(format!("unequal axis spacings {ds:?}")));
    }
    let grid = Grid::new(dim, ns[0] as usize, ds[0])?;
    let domain = match r.u8()? {
        0 => Domain::Space,
        1 => Domain::Frequency,
        t => return Err(Error::Format(format!("unknown domain tag {t}"))),
    };
    let mut data = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = r.f64()?;
        let im = r.f64()?;
        data.push(Complex64::new(re, im));
    }
    SampledSignal::new(grid, domain, data)
}

pub fn decode_signal(bytes: &[u8]) -> Result<SampledSignal> {
    let mut r = Reader::new(bytes);
    let s = read_signal_from(&mut r)?;
    r.finished()?;
    Ok(s)
}

pub fn write_signal(path: &FsPath, s: &SampledSignal) -> Result<()> {
    fs::write(path, encode_signal(s))?;
    Ok(())
}

pub fn read_signal(path: &FsPath) -> Result<SampledSignal> {
    decode_signal(&fs::read(path)?)
}

fn encode_container<M: Serialize>(magic: &[u8; 4], manifest: &M, blobs: &[SampledSignal]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(manifest)?;
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(blobs.len() as u64).to_le_bytes());
    for b in blobs {
        let bytes = encode_signal(b);
        out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        out.write_all(&bytes)?;
    }
    Ok(out)
}

fn decode_container<M: for<'de> Deserialize<'de>>(
    magic: &[u8; 4],
    bytes: &[u8],
) -> Result<(M, Vec<SampledSignal>)> {
    let mut r = Reader::new(bytes);
    r.magic(magic)?;
    let len = usize::try_from(r.u64()?).map_err(|_| Error::Format("manifest too large".into()))?;
    let manifest: M = serde_json::from_slice(r.take(len)?)?;
    let count = r.u64()?;
    let mut blobs = Vec::new();
    for _ in 0..count {
        let len = usize::try_from(r.u64()?).map_err(|_| Error::Format("blob too large".into()))?;
        blobs.push(decode_signal(r.take(len)?)?);
    }
    r.finished()?;
    Ok((manifest, blobs))
}

#[derive(Debug, Serialize, Deserialize)]
struct BankManifest {
    labels: Vec<String>,
    output_atom: String,
    grid: Grid,
    #[serde(flatten)]
    info: BankInfo,
}

pub fn encode_bank(bank: &FilterBank) -> Result<Vec<u8>> {
    let manifest = BankManifest {
        labels: bank.labels().to_vec(),
        output_atom: bank.output_label().to_string(),
        grid: *bank.grid(),
        info: bank.info().clone(),
    };
    let atoms: Vec<SampledSignal> = (0..bank.len())
        .map(|i| SampledSignal::from_parts(*bank.grid(), Domain::Frequency, bank.atom_samples(i).to_vec()))
        .collect();
    encode_container(BANK_MAGIC, &manifest, &atoms)
}

pub fn decode_bank(bytes: &[u8]) -> Result<FilterBank> {
    let (m, atoms): (BankManifest, _) = decode_container(BANK_MAGIC, bytes)?;
    FilterBank::new(m.grid, m.labels, atoms, &m.output_atom, m.info)
}

pub fn write_bank(path: &FsPath, bank: &FilterBank) -> Result<()> {
    fs::write(path, encode_bank(bank)?)?;
    Ok(())
}

pub fn read_bank(path: &FsPath) -> Result<FilterBank> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_bank(&bytes)
}

#[derive(Debug, Serialize, Deserialize)]
struct PackLayer {
    layer: usize,
    grid: Grid,
    propagated_energy: f64,
    paths: Vec<Vec<String>>,
    norms: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PackManifest {
    depth: usize,
    feature_count: usize,
    total_norm: f64,
    layers: Vec<PackLayer>,
}

pub fn encode_pack(phi: &FeatureVector) -> Result<Vec<u8>> {
    let layers = phi
        .layers
        .iter()
        .enumerate()
        .map(|(n, l)| PackLayer {
            layer: n,
            grid: l.grid,
            propagated_energy: l.propagated_energy,
            paths: l.paths.iter().map(|p| p.0.clone()).collect(),
            norms: l.features.iter().map(|s| s.norm_l2()).collect(),
        })
        .collect();
    let manifest = PackManifest {
        depth: phi.depth(),
        feature_count: phi.count(),
        total_norm: phi.norm(),
        layers,
    };
    let blobs: Vec<SampledSignal> = phi.layers.iter().flat_map(|l| l.features.iter().cloned()).collect();
    encode_container(PACK_MAGIC, &manifest, &blobs)
}

pub fn decode_pack(bytes: &[u8]) -> Result<FeatureVector> {
    let (m, blobs): (PackManifest, Vec<SampledSignal>) = decode_container(PACK_MAGIC, bytes)?;
    if blobs.len() != m.feature_count {
        return Err(Error::Format(format!(
            "manifest lists {} features, pack holds {}",
            m.feature_count,
            blobs.len()
        )));
    }
    let mut blobs = blobs.into_iter();
    let mut layers = Vec::with_capacity(m.layers.len());
    for l in m.layers {
        let features: Vec<SampledSignal> = blobs.by_ref().take(l.paths.len()).collect();
        if features.len() != l.paths.len() || features.iter().any(|f| f.grid() != &l.grid) {
            return Err(Error::Format(format!("layer {} does not match its manifest", l.layer)));
        }
        layers.push(FeatureLayer {
            grid: l.grid,
            paths: l.paths.into_iter().map(Path).collect(),
            features,
            propagated_energy: l.propagated_energy,
        });
    }
    Ok(FeatureVector { layers })
}

pub fn write_pack(path: &FsPath, phi: &FeatureVector) -> Result<()> {
    fs::write(path, encode_pack(phi)?)?;
    Ok(())
}

pub fn read_pack(path: &FsPath) -> Result<FeatureVector> {
    decode_pack(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::build_wavelet_1d;
    use crate::network::{extract, preset_scattering};
    use crate::signal::{random_bandlimited, BandlimitSpec};

    #[test]
    fn signal_round_trip_and_header() {
        let g = Grid::new(2, 8, 0.25).unwrap();
        let s = random_bandlimited(g, &BandlimitSpec { radius: 1.0, seed: 1 }).unwrap();
        let bytes = encode_signal(&s);
        assert_eq!(&bytes[..4], b"FSIG");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 4 + 4 + 4 + 8 + 16 + 1 + 16 * 64);
        assert_eq!(decode_signal(&bytes).unwrap(), s);
        assert!(decode_signal(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_signal(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn bank_round_trip() {
        let bank = build_wavelet_1d(Grid::new(1, 64, 1.0).unwrap(), -2, 0).unwrap().normalize_parseval().unwrap();
        let back = decode_bank(&encode_bank(&bank).unwrap()).unwrap();
        assert_eq!(back, bank);
    }

    #[test]
    fn pack_round_trip() {
        let seq = preset_scattering(Grid::new(2, 16, 1.0).unwrap(), 1, 4, 1).unwrap();
        let f = random_bandlimited(*seq.input_grid(), &BandlimitSpec { radius: 0.3, seed: 4 }).unwrap();
        let phi = extract(&seq, &f).unwrap();
        let bytes = encode_pack(&phi).unwrap();
        assert_eq!(decode_pack(&bytes).unwrap(), phi);
        assert_eq!(encode_pack(&phi).unwrap(), bytes);
    }
}
