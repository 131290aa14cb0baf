use frameshift::frames::build_tensor_wavelet_2d;
use frameshift::io;
use frameshift::verify::white_noise;
use frameshift::{extract, Error, Grid, ModuleSequence, NetModule, Nonlinearity, PoolingSpec};

#[test]
fn signal_header_layout() {
    let grid = Grid::new(2, 4, 0.25).unwrap();
    let bytes = io::encode_signal(&white_noise(grid, 1));
    assert_eq!(&bytes[..4], b"FSIG");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
    assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 4);
    assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.25);
    assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 0.25);
    assert_eq!(bytes.len(), 36 + 1 + 16 * 16);
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 16, 1.0).unwrap();
    let f = white_noise(grid, 2);
    io::write_signal(&dir.path().join("f.fsig"), &f).unwrap();
    assert_eq!(io::read_signal(&dir.path().join("f.fsig")).unwrap(), f);

    let bank = build_tensor_wavelet_2d(grid, 1).unwrap().normalize_parseval().unwrap();
    io::write_bank(&dir.path().join("b.fbank"), &bank).unwrap();
    let back = io::read_bank(&dir.path().join("b.fbank")).unwrap();
    assert_eq!(back.labels(), bank.labels());
    assert_eq!(back.output_label(), bank.output_label());
    assert_eq!(back.frame_bounds().b, bank.frame_bounds().b);

    let module = NetModule::new(bank, Nonlinearity::Tanh, PoolingSpec::subsample(1).unwrap());
    let seq = ModuleSequence::new(vec![module; 3], 2).unwrap().normalized().unwrap();
    let phi = extract(&seq, &f).unwrap();
    io::write_pack(&dir.path().join("p.fpack"), &phi).unwrap();
    let back = io::read_pack(&dir.path().join("p.fpack")).unwrap();
    assert_eq!(back.count(), phi.count());
    assert_eq!(back.distance(&phi).unwrap(), 0.0);
    assert_eq!(io::encode_pack(&back).unwrap(), io::encode_pack(&phi).unwrap());
}

#[test]
fn damaged_files_are_rejected() {
    let grid = Grid::new(1, 8, 1.0).unwrap();
    let bytes = io::encode_signal(&white_noise(grid, 3));
    assert!(matches!(io::decode_signal(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(io::decode_signal(&extra), Err(Error::Format(_))));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(io::decode_signal(&magic), Err(Error::Format(_))));
    let mut version = bytes;
    version[4] = 9;
    assert!(matches!(io::decode_signal(&version), Err(Error::Format(_))));
    assert!(io::decode_bank(b"FBNK").is_err());
    assert!(io::decode_pack(&io::encode_signal(&white_noise(grid, 3))).is_err());
}
