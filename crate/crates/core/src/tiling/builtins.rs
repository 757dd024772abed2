use super::{CellSpec, EdgeSpec, Face, ReflectionFamily, TilingSpec};
use crate::exact::Scalar;

pub fn builtin_names() -> Vec<&'static str> {
    vec!["square", "triangular", "hex", "tetrakis", "z1", "z2", "z3", "z4", "z5", "z6", "z7", "z8", "fcc", "d4"]
}

/// Built-in tiling by name (`square`, `triangular`, `hex`, `tetrakis`, `z1`..`z8`, `fcc`, `d4`).
pub fn builtin(name: &str) -> Option<TilingSpec> {
    match name {
        "square" => {
            let mut s = zd(2);
            s.name = "square".into();
            Some(s)
        }
        "triangular" | "tri" => Some(triangular()),
        "hex" | "hexagonal" | "honeycomb" => Some(hex()),
        "tetrakis" => Some(tetrakis()),
        "fcc" => Some(fcc()),
        "d4" => Some(d4()),
        _ => {
            let d: usize = name.strip_prefix('z')?.parse().ok()?;
            (1..=8).contains(&d).then(|| zd(d))
        }
    }
}

fn int(v: i64) -> Scalar {
    Scalar::int(v)
}

fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn s(text: &str) -> Scalar {
    Scalar::parse(text).expect("built-in scalar parses")
}

fn vecs(rows: &[&[i64]]) -> Vec<Vec<Scalar>> {
    rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
}

fn origin_cell(d: usize) -> CellSpec {
    CellSpec { id: 0, position: vec![int(0); d] }
}

/// Symmetric single-cell edge set from half the offsets.
fn lattice_edges(half: &[Vec<i64>]) -> Vec<EdgeSpec> {
    half.iter()
        .flat_map(|o| [EdgeSpec(0, 0, o.clone(), 1), EdgeSpec(0, 0, o.iter().map(|x| -x).collect(), 1)])
        .collect()
}

fn unit(d: usize, i: usize) -> Vec<i64> {
    (0..d).map(|k| i64::from(k == i)).collect()
}

fn cube_family(normals: Vec<Vec<Scalar>>) -> ReflectionFamily {
    let d = normals.len();
    ReflectionFamily {
        normals,
        region: (0..d).flat_map(|i| [Face(i, 0, 1), Face(i, 1, -1)]).collect(),
    }
}

/// `ℤ^d` with nearest-neighbour edges and the coordinate hyperplanes.
pub fn zd(d: usize) -> TilingSpec {
    let id: Vec<Vec<Scalar>> = (0..d).map(|i| unit(d, i).into_iter().map(int).collect()).collect();
    TilingSpec {
        name: format!("z{d}"),
        dim: d,
        basis: id.clone(),
        cells: vec![origin_cell(d)],
        edges: lattice_edges(&(0..d).map(|i| unit(d, i)).collect::<Vec<_>>()),
        reflections: Some(cube_family(id)),
    }
}

fn triangular() -> TilingSpec {
    TilingSpec {
        name: "triangular".into(),
        dim: 2,
        basis: vec![vec![int(1), q(1, 2)], vec![int(0), s("sqrt(3)/2")]],
        cells: vec![origin_cell(2)],
        edges: lattice_edges(&[vec![1, 0], vec![0, 1], vec![1, -1]]),
        reflections: Some(ReflectionFamily {
            normals: vec![vec![q(-1, 2), int(1)], vec![int(-1), q(1, 2)], vec![q(1, 2), q(1, 2)]],
            region: vec![Face(0, 0, 1), Face(1, 0, -1), Face(2, 1, -1)],
        }),
    }
}

fn hex() -> TilingSpec {
    let mut edges = Vec::new();
    for o in [[0, 0], [-1, 0], [0, -1]] {
        edges.push(EdgeSpec(0, 1, o.to_vec(), 1));
        edges.push(EdgeSpec(1, 0, o.iter().map(|x| -x).collect(), 1));
    }
    TilingSpec {
        name: "hex".into(),
        dim: 2,
        basis: vec![vec![s("sqrt(3)"), s("sqrt(3)/2")], vec![int(0), q(3, 2)]],
        cells: vec![origin_cell(2), CellSpec { id: 1, position: vec![q(1, 3), q(1, 3)] }],
        edges,
        reflections: Some(ReflectionFamily {
            normals: vec![vec![q(1, 2), int(0)], vec![int(0), q(1, 2)], vec![q(-1, 2), q(1, 2)]],
            region: vec![Face(1, 0, 1), Face(2, 0, -1), Face(0, 1, -1)],
        }),
    }
}

/// Square grid with both diagonals of every face; face centres have degree 4.
fn tetrakis() -> TilingSpec {
    let mut edges = lattice_edges(&[vec![1, 0], vec![0, 1]]);
    for o in [[0, 0], [-1, 0], [0, -1], [-1, -1]] {
        edges.push(EdgeSpec(0, 1, o.to_vec(), 1));
        edges.push(EdgeSpec(1, 0, o.iter().map(|x| -x).collect(), 1));
    }
    TilingSpec {
        name: "tetrakis".into(),
        dim: 2,
        basis: vecs(&[&[1, 0], &[0, 1]]),
        cells: vec![origin_cell(2), CellSpec { id: 1, position: vec![q(1, 2), q(1, 2)] }],
        edges,
        reflections: Some(ReflectionFamily {
            normals: vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![q(1, 2), q(1, 2)], vec![q(1, 2), q(-1, 2)]],
            region: vec![Face(1, 0, 1), Face(3, 0, 1), Face(0, 1, -1)],
        }),
    }
}

fn fcc() -> TilingSpec {
    TilingSpec {
        name: "fcc".into(),
        dim: 3,
        basis: vecs(&[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]]),
        cells: vec![origin_cell(3)],
        edges: lattice_edges(&[
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, -1, 0],
            vec![1, 0, -1],
            vec![0, 1, -1],
        ]),
        reflections: None,
    }
}

/// The 24 shortest vectors of the lattice spanned by `e₁, e₂, e₃, ½(1,1,1,1)`,
/// a rescaled copy of `D4`, with hyperplanes normal to `e₁ ± e₂`, `e₃ ± e₄`.
fn d4() -> TilingSpec {
    // doubled real coordinates 2x ↦ fractional c: c_i = x_i − x_4 (i ≤ 3), c_4 = 2·x_4
    let frac = |x2: [i64; 4]| -> Vec<i64> { vec![(x2[0] - x2[3]) / 2, (x2[1] - x2[3]) / 2, (x2[2] - x2[3]) / 2, x2[3]] };
    let mut half = Vec::new();
    for i in 0..4 {
        let mut x2 = [0i64; 4];
        x2[i] = 2;
        half.push(frac(x2));
    }
    // first coordinate fixed to +½ so each ± pair appears once
    for mask in 0..8u32 {
        let sg = |b: u32| if mask & b == 0 { 1 } else { -1 };
        half.push(frac([1, sg(1), sg(2), sg(4)]));
    }
    let normals = vec![
        frac([2, 2, 0, 0]),
        frac([2, -2, 0, 0]),
        frac([0, 0, 2, 2]),
        frac([0, 0, 2, -2]),
    ];
    TilingSpec {
        name: "d4".into(),
        dim: 4,
        basis: vec![
            vec![int(1), int(0), int(0), q(1, 2)],
            vec![int(0), int(1), int(0), q(1, 2)],
            vec![int(0), int(0), int(1), q(1, 2)],
            vec![int(0), int(0), int(0), q(1, 2)],
        ],
        cells: vec![origin_cell(4)],
        edges: lattice_edges(&half),
        reflections: Some(cube_family(normals.into_iter().map(|n| n.into_iter().map(int).collect()).collect())),
    }
}
