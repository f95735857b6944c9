//! The fast acceptance criteria and a scene report written through the
//! runner.
use fibred_hodge::runner::acceptance::Suite;
use fibred_hodge::runner::{run, Command, RunConfig};
use fibred_hodge::scene::Overrides;

fn main() -> fibred_hodge::Result<()> {
    let mut suite = Suite::new(7);
    for id in [1, 3, 4, 9] {
        println!("{}", suite.run(id).line());
    }
    let scene = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/torus.json");
    let out = std::env::temp_dir().join("fibred-hodge-example");
    let cfg = RunConfig { scene: Some(scene), out, overrides: Overrides::default() };
    let o = run(Command::Cohomology, &cfg)?;
    o.lines.iter().for_each(|l| println!("{l}"));
    o.artifacts.iter().for_each(|a| println!("wrote {}", a.display()));
    Ok(())
}
