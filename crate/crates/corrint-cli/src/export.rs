//! OBJ and CSV writers for maps sampled on a chart grid.

use std::fmt::Write as _;

use anyhow::Result;
use corrint_core::evaluation::LayeredMap;
use corrint_core::geomcore::{pullback_fast, sym_norm, Pt, SymMatField, Tv};

/// Grid coordinates along `axis`: closed for bounded axes, half-open for
/// periodic ones.
fn axis_coords(m: &LayeredMap, axis: usize, count: usize) -> Vec<f64> {
    let d = &m.domain;
    let den = if d.periodic[axis] { count } else { count - 1 };
    (0..count).map(|i| d.lo[axis] + d.width(axis) * i as f64 / den as f64).collect()
}

fn grid_points(m: &LayeredMap, grid: usize) -> (Vec<Pt>, [usize; 2]) {
    let grid = grid.max(2);
    let c0 = axis_coords(m, 0, grid);
    if m.n() == 1 {
        return (c0.iter().map(|&x| Pt::new(x, 0.0)).collect(), [grid, 1]);
    }
    let c1 = axis_coords(m, 1, grid);
    let mut pts = Vec::with_capacity(grid * grid);
    for &y in &c1 {
        for &x in &c0 {
            pts.push(Pt::new(x, y));
        }
    }
    (pts, [grid, grid])
}

fn fmt_v(out: &mut String, v: &Tv) {
    writeln!(out, "v {:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]).unwrap();
}

/// OBJ text: a closed or open polyline for curves, counter-clockwise
/// triangles (in chart orientation) for surfaces.
pub fn obj_string(m: &LayeredMap, grid: usize, name: &str) -> Result<String> {
    let (pts, [n0, n1]) = grid_points(m, grid);
    let mut out = String::new();
    writeln!(out, "o {name}").unwrap();
    for x in &pts {
        fmt_v(&mut out, &m.eval_map(x)?);
    }
    let per = &m.domain.periodic;
    if m.n() == 1 {
        out.push('l');
        for i in 0..n0 {
            write!(out, " {}", i + 1).unwrap();
        }
        if per[0] {
            out.push_str(" 1");
        }
        out.push('\n');
        return Ok(out);
    }
    let idx = |i: usize, j: usize| (j % n1) * n0 + (i % n0) + 1;
    let cells0 = if per[0] { n0 } else { n0 - 1 };
    let cells1 = if per[1] { n1 } else { n1 - 1 };
    for j in 0..cells1 {
        for i in 0..cells0 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            writeln!(out, "f {a} {b} {c}").unwrap();
            writeln!(out, "f {a} {c} {d}").unwrap();
        }
    }
    Ok(out)
}

/// Several curves as separate OBJ objects with running vertex indices.
pub fn obj_curves(curves: &[(String, Vec<Tv>)]) -> String {
    let mut out = String::new();
    let mut base = 1;
    for (name, pts) in curves {
        writeln!(out, "o {name}").unwrap();
        for v in pts {
            fmt_v(&mut out, v);
        }
        out.push('l');
        for i in 0..pts.len() {
            write!(out, " {}", base + i).unwrap();
        }
        writeln!(out, " {base}").unwrap();
        base += pts.len();
    }
    out
}

/// CSV rows `x0,x1,u0,u1,u2,defect_norm` on the grid.
pub fn csv_string(m: &LayeredMap, g: &SymMatField, grid: usize) -> Result<String> {
    let (pts, _) = grid_points(m, grid);
    let mut out = String::from("x0,x1,u0,u1,u2,defect_norm\n");
    for x in &pts {
        let (u, j) = m.eval_full(x)?;
        let d = sym_norm(&(g.eval(x) - pullback_fast(&j, m.n())), m.n());
        writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", x[0], x[1], u[0], u[1], u[2], d).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use corrint_core::models::{model_circle, model_sphere_band, Side};

    #[test]
    fn surface_faces_are_in_range_and_nondegenerate() {
        let m = model_sphere_band(0.05, Side::North, 1.0).unwrap().layered();
        let s = obj_string(&m, 16, "band").unwrap();
        let verts: Vec<Tv> = s
            .lines()
            .filter(|l| l.starts_with("v "))
            .map(|l| {
                let v: Vec<f64> = l[2..].split(' ').map(|t| t.parse().unwrap()).collect();
                Tv::new(v[0], v[1], v[2])
            })
            .collect();
        assert_eq!(verts.len(), 256);
        let faces: Vec<[usize; 3]> = s
            .lines()
            .filter(|l| l.starts_with("f "))
            .map(|l| {
                let f: Vec<usize> = l[2..].split(' ').map(|t| t.parse().unwrap()).collect();
                [f[0], f[1], f[2]]
            })
            .collect();
        assert_eq!(faces.len(), 2 * 15 * 16);
        for f in faces {
            assert!(f.iter().all(|&i| i >= 1 && i <= verts.len()));
            let (a, b, c) = (verts[f[0] - 1], verts[f[1] - 1], verts[f[2] - 1]);
            assert!((b - a).cross(&(c - a)).norm() > 1e-12);
        }
        // Axis 0 varies fastest; its first entry is the equator.
        for v in verts.iter().step_by(16) {
            assert!((v.norm() - 1.0).abs() < 1e-15 && v[2] == 0.0);
        }
    }

    #[test]
    fn curves_are_closed_polylines() {
        let m = model_circle().layered();
        let s = obj_string(&m, 8, "c").unwrap();
        assert!(s.lines().any(|l| l == "l 1 2 3 4 5 6 7 8 1"));
        let c = obj_curves(&[("a".into(), vec![Tv::zeros(); 3]), ("b".into(), vec![Tv::zeros(); 2])]);
        assert!(c.contains("l 1 2 3 1") && c.contains("l 4 5 4"));
        let csv = csv_string(&m, &model_circle().metric, 4).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }
}
