//! Build a monotone machine realising a staged semimeasure.

use avoidance_lab::encodings::{BoundFamily, NatString};
use avoidance_lab::machine::{lz_build, machine_semimeasure, StagedSemimeasure};

fn main() -> avoidance_lab::Result<()> {
    let h = BoundFamily::constant(2);
    let w = |v: &[u64]| NatString(v.to_vec());
    let nu = StagedSemimeasure::new(h.clone(), vec![Some((w(&[]), 1)), Some((w(&[0]), 1)), None, Some((w(&[1]), 1)), Some((w(&[0, 1]), 1))]);
    nu.validate()?;
    let m = lz_build(&nu, nu.stages())?;
    for s in 0..=nu.stages() {
        for (tau, sigma, _) in m.at_stage(s) {
            println!("stage {s}: {tau:?} -> {sigma}");
        }
    }
    for w in h.words_upto(2) {
        println!("nu({w}) = {}  machine = {}", nu.value(&w, nu.stages()), machine_semimeasure(&m, &w));
    }
    Ok(())
}
