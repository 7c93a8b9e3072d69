//! Entity counts of the structured tetrahedral cube mesh and of a nested pair.
//!
//! `cargo run --example mesh_info -- 4`

use maxwell_dd::mesh::{nesting_map, Mesh};

fn main() -> maxwell_dd::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    for m in [n, 2 * n] {
        let mesh = Mesh::cube(m)?;
        println!(
            "n={m}: vertices={} tets={} edges={} faces={} boundary_faces={} h={:.4}",
            mesh.num_vertices(),
            mesh.num_tets(),
            mesh.num_edges(),
            mesh.num_faces(),
            mesh.boundary_faces.len(),
            mesh.diameter()
        );
    }
    let coarse = Mesh::cube(n)?;
    let fine = Mesh::cube(2 * n)?;
    let map = nesting_map(&coarse, &fine)?;
    let mut children = vec![0usize; coarse.num_tets()];
    for &c in &map {
        children[c] += 1;
    }
    println!("every coarse tet holds {:?} fine tets", children.iter().min().zip(children.iter().max()));
    Ok(())
}
