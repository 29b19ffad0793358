//! Spread a sequence along arithmetic progressions and read it back from a window.

use avoidance_lab::encodings::BitString;
use avoidance_lab::reductions::{rumyantsev_apply, rumyantsev_plan, rumyantsev_recover, Coefficients};

fn main() -> avoidance_lab::Result<()> {
    let plan = rumyantsev_plan(&Coefficients::ceil_sqrt(), 3)?;
    println!("m0 = {}", plan.m0);
    for (i, st) in plan.stages.iter().enumerate() {
        println!("stage {i}: mod 2^{} offsets {:?}", st.exp, st.offsets);
    }
    println!("coverage after 2 stages: {}", plan.coverage(2));

    let x = BitString::parse("1011001110001011").unwrap();
    let psi = rumyantsev_apply(&plan, &x, 128, Some(0))?;
    println!("psi = {psi:?}");
    let (k, m) = (37u64, 5u32);
    let window = BitString(psi.bits()[k as usize..k as usize + 32].to_vec());
    println!("recovered from [{k}, {}): {:?}", k + 32, rumyantsev_recover(&plan, &window, k % 32, m)?);
    Ok(())
}
