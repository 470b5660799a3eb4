use hodge_core::datasets::torus_grid;
use hodge_core::io;
use hodge_core::{fit, Embedding, Frames, Operator, RunConfig, Spectrum};

#[test]
fn artifacts_round_trip_exactly() {
    let torus = torus_grid::<f64>(7).unwrap();
    let res = fit(&torus.cloud, &RunConfig { knn: 8, ..RunConfig::default() }).unwrap();

    let mut buf = Vec::new();
    io::write_points(&mut buf, &torus.cloud).unwrap();
    assert_eq!(io::read_points::<f64, _>(&buf[..]).unwrap(), torus.cloud);

    let mut buf = Vec::new();
    io::write_frames(&mut buf, &res.frames).unwrap();
    let frames: Frames = io::read_frames(&buf[..]).unwrap();
    assert_eq!(frames.frames(), res.frames.frames());

    let mut buf = Vec::new();
    io::write_operator(&mut buf, &res.ed).unwrap();
    let ed: Operator = io::read_operator(&buf[..]).unwrap();
    assert_eq!(ed, res.ed);

    let mut buf = Vec::new();
    io::write_spectrum(&mut buf, &res.spectrum).unwrap();
    let spec: Spectrum = io::read_spectrum(&buf[..]).unwrap();
    assert_eq!(spec, res.spectrum);

    let mut buf = Vec::new();
    io::write_eigenvalues(&mut buf, &res.spectrum.eigenvalues).unwrap();
    assert_eq!(io::read_eigenvalues::<f64, _>(&buf[..]).unwrap(), res.spectrum.eigenvalues);

    let mut buf = Vec::new();
    io::write_embedding(&mut buf, &res.embedding).unwrap();
    let emb: Embedding = io::read_embedding(&buf[..]).unwrap();
    assert_eq!(emb, res.embedding);
}

#[test]
fn points_file_with_comments() {
    let text = "# torus sample\n# x,y,z\n1,0,0\n0,1,0\n\n0,0,1\n";
    let cloud = io::read_points::<f64, _>(text.as_bytes()).unwrap();
    assert_eq!(cloud.len(), 3);
    assert_eq!(cloud.ambient_dim(), 3);
}

#[test]
fn svg_has_one_marker_per_point() {
    let mut buf = Vec::new();
    io::write_svg_scatter(&mut buf, &[(0.0, 0.0), (1.0, 2.0), (0.5, 0.5)], &[0, 1, 2]).unwrap();
    let svg = String::from_utf8(buf).unwrap();
    assert_eq!(svg.matches("<circle").count(), 3);
    assert!(svg.trim_end().ends_with("</svg>"));
}
