//! Assemble the stretched surface X(r) for each shipped scene.
use fibred_hodge::scene::{shipped, SHIPPED};

fn main() -> fibred_hodge::Result<()> {
    for name in SHIPPED {
        let geom = shipped(name)?.geometry()?;
        for r in [1.0, 3.0, 6.0] {
            let cx = geom.assemble(r)?;
            let st = cx.stats();
            println!(
                "{name} r = {r}: {} nodes, {} edges, {} faces, χ = {}, area {:.3}, d1d0 nonzeros {}",
                st.nodes,
                st.edges,
                st.faces,
                st.euler,
                st.total_area,
                cx.dd_nonzeros()
            );
        }
    }
    Ok(())
}
