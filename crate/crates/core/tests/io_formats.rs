use bukhgeim::forward::assemble_dn;
use bukhgeim::io::{
    decode_dn, decode_field, encode_dn, encode_field, heatmap_svg, loglog_svg, norms_csv, read_dn, read_field,
    write_atomic, write_dn, write_field, NormRow, DN_MAGIC, FIELD_MAGIC, FORMAT_VERSION,
};
use bukhgeim::potentials::{random_gaussians, Bump};
use bukhgeim::{make_grid, Domain, Error, Potential};
use proptest::prelude::*;

#[test]
fn field_round_trip_is_bit_exact() {
    let g = make_grid(1.25, 64, Domain::unit_disk(), 1.0).unwrap();
    let f = random_gaussians(&g, 3, 4, 0.5, (0.1, 0.3));
    let bytes = encode_field(&f);
    assert_eq!(&bytes[..4], FIELD_MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), FORMAT_VERSION);
    assert_eq!(bytes.len(), 21 + 16 * 64 * 64);
    let back = decode_field(&bytes, &g).unwrap();
    assert_eq!(back.support(), f.support());
    assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/f.bfld");
    write_field(&path, &f).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(read_field(&path, &g).unwrap().values(), f.values());
}

#[test]
fn field_decoding_rejects_bad_input() {
    let g = make_grid(1.25, 64, Domain::unit_disk(), 1.0).unwrap();
    let bytes = encode_field(&Bump::standard().field(&g));
    let other = make_grid(1.25, 128, Domain::unit_disk(), 1.0).unwrap();
    assert!(matches!(decode_field(&bytes, &other), Err(Error::GridMismatch(_))));
    let wider = make_grid(1.5, 64, Domain::unit_disk(), 1.0).unwrap();
    assert!(matches!(decode_field(&bytes, &wider), Err(Error::GridMismatch(_))));
    assert!(matches!(decode_field(&bytes[..bytes.len() - 1], &g), Err(Error::Format(_))));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(decode_field(&extra, &g), Err(Error::Format(_))));
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(decode_field(&magic, &g), Err(Error::Format(_))));
    let mut version = bytes;
    version[4] = 99;
    assert!(matches!(decode_field(&version, &g), Err(Error::Format(_))));
}

#[test]
fn dn_round_trip_keeps_grid_and_metadata() {
    let g = make_grid(1.5, 32, Domain::unit_disk(), 1.0).unwrap();
    let q = Potential::from_field(Bump::standard().field(&g)).unwrap();
    let dn = assemble_dn(&q).unwrap().with_noise(1e-3, 4);
    let bytes = encode_dn(&dn);
    assert_eq!(&bytes[..4], DN_MAGIC);
    let back = decode_dn(&bytes).unwrap();
    assert!(back.grid().same_as(g.as_ref()));
    assert_eq!(back.matrix(), dn.matrix());
    assert_eq!(back.noise_level(), 1e-3);
    assert_eq!(back.q_fingerprint(), dn.q_fingerprint());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.dnmp");
    write_dn(&path, &dn).unwrap();
    assert_eq!(read_dn(&path).unwrap().matrix(), dn.matrix());
    assert!(matches!(decode_dn(&bytes[..100]), Err(Error::Format(_))));
    assert!(matches!(decode_dn(&encode_field(q.field())), Err(Error::Format(_))));
}

#[test]
fn norm_csv_has_header_and_round_trip_floats() {
    let rows = vec![
        NormRow { name: "lp".into(), p_or_s: 2.0, value: 0.1 + 0.2 },
        NormRow { name: "sobolev".into(), p_or_s: 0.5, value: 1e-300 },
    ];
    let text = String::from_utf8(norms_csv(&rows).unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,p_or_s,value"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[2].parse::<f64>().unwrap(), 0.1 + 0.2);
    assert_eq!(lines.next().unwrap().split(',').nth(2).unwrap().parse::<f64>().unwrap(), 1e-300);
}

#[test]
fn svg_outputs_carry_metadata() {
    let g = make_grid(1.5, 32, Domain::unit_disk(), 1.0).unwrap();
    let f = Bump::standard().field(&g);
    let s = heatmap_svg(&f, 0.0, 1.0, "config_hash=abc -- seed=1");
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    assert!(s.contains("<!-- config_hash=abc - - seed=1 -->"));
    let interior = (0..g.len()).filter(|&i| g.in_x(i)).count();
    assert_eq!(s.matches("<rect").count(), interior + 1);

    let p = loglog_svg("decay", &[1.0, 10.0, 100.0], &[("a", vec![1.0, 0.1, 0.01]), ("b", vec![1.0, 0.0, 0.5])], "m");
    assert_eq!(p.matches("<polyline").count(), 2);
    assert!(p.contains("<!-- m -->") && p.contains("decay"));
}

#[test]
fn atomic_write_replaces_whole_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    write_atomic(&path, b"first version, longer").unwrap();
    write_atomic(&path, b"second").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"second");
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn field_encoding_is_injective_on_values(seed in any::<u64>(), k in 0usize..1024) {
        let g = make_grid(1.5, 32, Domain::unit_disk(), 1.0).unwrap();
        // Values outside X are not stored for X-supported fields.
        prop_assume!(g.in_x(k));
        let f = random_gaussians(&g, seed, 2, 0.5, (0.1, 0.3));
        let mut vals = f.values().to_vec();
        vals[k] += bukhgeim::C64::new(1.0, 0.0);
        let h = bukhgeim::Field::from_values(&g, vals, f.support()).unwrap();
        prop_assert_ne!(encode_field(&f), encode_field(&h));
        let back = decode_field(&encode_field(&h), &g).unwrap();
        prop_assert_eq!(back.values(), h.values());
    }
}
