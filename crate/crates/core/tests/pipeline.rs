use std::fs;
use std::path::Path;

use sngraph::io::{ply_string, read_graph, read_graph_binary, read_graph_json, GraphFile};
use sngraph::pipeline::{
    process_dataset, run_mesh, run_pipeline, DatasetManifest, DatasetOptions, OutputFormat,
    PipelineConfig, Split, MANIFEST_NAME,
};
use sngraph::shapes;

fn small_cfg(format: OutputFormat) -> PipelineConfig {
    PipelineConfig {
        resolution: 32,
        nodes: 12,
        format,
        ..PipelineConfig::default()
    }
}

#[test]
fn sphere_with_one_node() {
    let mesh = shapes::uv_sphere([0.3, -2.0, 5.0], 4.0, 24, 48);
    let cfg = PipelineConfig {
        resolution: 48,
        nodes: 1,
        ..PipelineConfig::default()
    };
    let out = run_mesh(&mesh, "ball", &cfg).unwrap();
    let g = &out.graph;
    assert_eq!(g.nodes.len(), 1);
    assert!(g.edges.is_empty() && g.rule4_edges.is_empty());
    let c = g.nodes[0].center;
    assert!(c.iter().all(|v| v.abs() <= 1.0 / 48.0), "{c:?}");
    assert_eq!(out.pr.as_ref().unwrap().rows(), 1);
    assert_eq!(out.adr.as_ref().unwrap().row(0)[..22].iter().filter(|&&v| v != 0.0).count(), 1);
}

#[test]
fn same_file_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("table.off");
    shapes::table().write_off(&src).unwrap();
    for format in [OutputFormat::Json, OutputFormat::Binary, OutputFormat::Ply] {
        let cfg = small_cfg(format);
        let a = run_pipeline(&src, &cfg).unwrap().encode(format).unwrap();
        let b = run_pipeline(&src, &cfg).unwrap().encode(format).unwrap();
        assert_eq!(a, b, "{format:?}");
    }
}

#[test]
fn written_files_decode_to_the_same_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_mesh(&shapes::airplane(), "plane", &small_cfg(OutputFormat::Json)).unwrap();
    let (j, b) = (dir.path().join("g.json"), dir.path().join("g.sng"));
    out.write(&j, OutputFormat::Json).unwrap();
    out.write(&b, OutputFormat::Binary).unwrap();
    let fj = read_graph_json(&j).unwrap();
    let fb = read_graph_binary(&b).unwrap();
    assert_eq!(fj, out.to_file());
    assert_eq!(fj.without_meta(), fb);
    assert_eq!(read_graph(&b).unwrap(), fb);
    assert_eq!(fj.to_graph().edges, out.graph.edges);
    assert_eq!(fj.to_graph().nodes.iter().map(|n| n.voxel).collect::<Vec<_>>(),
        out.graph.nodes.iter().map(|n| n.voxel).collect::<Vec<_>>());
}

/// Minimal reader for the PLY subset we emit; rejects anything off-schema.
fn validate_ply(text: &str) -> (usize, usize) {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ply"));
    assert_eq!(lines.next(), Some("format ascii 1.0"));
    let mut header = Vec::new();
    for l in lines.by_ref() {
        if l == "end_header" {
            break;
        }
        if !l.starts_with("comment ") {
            header.push(l);
        }
    }
    let count = |l: &str, name: &str| -> usize {
        l.strip_prefix(&format!("element {name} ")).unwrap().parse().unwrap()
    };
    assert_eq!(header.len(), 8, "{header:?}");
    let nv = count(header[0], "vertex");
    assert_eq!(&header[1..5], ["property float x", "property float y", "property float z", "property float radius"]);
    let ne = count(header[5], "edge");
    assert_eq!(&header[6..8], ["property int vertex1", "property int vertex2"]);
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), nv + ne);
    for l in &body[..nv] {
        let v: Vec<f32> = l.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|x| x.is_finite()) && v[3] > 0.0);
    }
    for l in &body[nv..] {
        let v: Vec<usize> = l.split(' ').map(|t| t.parse().unwrap()).collect();
        assert!(v.len() == 2 && v[0] < nv && v[1] < nv && v[0] != v[1]);
    }
    (nv, ne)
}

#[test]
fn ply_follows_schema() {
    for (name, mesh) in shapes::catalog() {
        let out = run_mesh(&mesh, name, &small_cfg(OutputFormat::Ply)).unwrap();
        let f = out.to_file();
        let (nv, ne) = validate_ply(&ply_string(&f));
        assert_eq!(nv, out.graph.nodes.len());
        assert_eq!(ne, out.graph.edges.len());
    }
    let one = run_mesh(&shapes::dumbbell(), "d", &PipelineConfig { resolution: 24, nodes: 1, ..Default::default() }).unwrap();
    assert_eq!(validate_ply(&ply_string(&one.to_file())), (1, 0));
}

fn toy_tree(root: &Path) {
    let files = [
        ("sphere/train/sphere_0001.off", shapes::uv_sphere([0.0; 3], 1.0, 12, 24)),
        ("sphere/test/sphere_0002.off", shapes::uv_sphere([1.0, 0.0, 0.0], 2.0, 10, 20)),
        ("table/train/table_0001.off", shapes::table()),
        ("table/test/table_0002.off", shapes::table().translated([0.0, 3.0, 0.0])),
    ];
    for (rel, mesh) in files {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        mesh.write_off(&p).unwrap();
    }
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = walkdir(root)
        .into_iter()
        .map(|p| (p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn walkdir(root: &Path) -> Vec<std::path::PathBuf> {
    let mut stack = vec![root.to_path_buf()];
    let mut files = Vec::new();
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files
}

#[test]
fn dataset_tree_and_skip_existing() {
    let src = tempfile::tempdir().unwrap();
    let dst = tempfile::tempdir().unwrap();
    toy_tree(src.path());
    let cfg = small_cfg(OutputFormat::Binary);
    let opts = DatasetOptions { jobs: 2, skip_existing: false };
    let report = process_dataset(src.path(), dst.path(), &cfg, &opts).unwrap();
    assert!(report.failures.is_empty());
    assert_eq!(report.manifest.rows.len(), 4);
    let m = DatasetManifest::read_csv(dst.path().join(MANIFEST_NAME)).unwrap();
    assert_eq!(m, report.manifest);
    let splits: Vec<Split> = m.rows.iter().map(|r| r.split).collect();
    assert_eq!(splits.iter().filter(|&&s| s == Split::Train).count(), 2);
    for row in &m.rows {
        let g = read_graph(dst.path().join(&row.output)).unwrap();
        assert_eq!(g.nodes.len(), row.achieved_n);
        assert!(row.path.starts_with(&row.label));
    }
    let before = tree_bytes(dst.path());

    let again = process_dataset(src.path(), dst.path(), &cfg, &DatasetOptions { skip_existing: true, ..opts }).unwrap();
    assert_eq!(again.skipped, 4);
    assert_eq!(again.manifest, report.manifest);
    assert_eq!(tree_bytes(dst.path()), before);
}

#[test]
fn dataset_counts_failures() {
    let src = tempfile::tempdir().unwrap();
    let dst = tempfile::tempdir().unwrap();
    toy_tree(src.path());
    fs::write(src.path().join("table/train/broken.off"), "OFF\n3 1 0\n0 0 0\n").unwrap();
    fs::write(src.path().join("table/train/notes.txt"), "not a mesh").unwrap();
    let report = process_dataset(src.path(), dst.path(), &small_cfg(OutputFormat::Json), &DatasetOptions::default()).unwrap();
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].0, "table/train/broken.off");
    assert_eq!(report.manifest.rows.len(), 4);
    assert!(process_dataset(src.path().join("missing"), dst.path(), &small_cfg(OutputFormat::Json), &DatasetOptions::default()).is_err());
}

#[test]
fn graph_file_rejects_bad_input() {
    assert!(GraphFile::from_binary(b"SNG2\0\0\0\0").is_err());
    assert!(GraphFile::from_json_str("{\"nodes\": 3}").is_err());
}
