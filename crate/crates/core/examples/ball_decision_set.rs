//! Optimistic action selection when every unit vector is a legal action.

use ol2m::linalg::{norm2, SpdMatrix};
use ol2m::region::{ConfidenceRegion, RegionMode};
use ol2m::select::select_ball;

fn main() -> Result<(), ol2m::error::Error> {
    // an elongated ellipsoid centered off the origin
    let z = SpdMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 1.0]])?;
    let region = ConfidenceRegion::new(vec![0.5, -0.2], z, 0.25, RegionMode::Ellipsoid)?;
    let choice = select_ball(&region)?;
    println!("action   {:.4?}", choice.x);
    println!("w_hat    {:.4?} (norm {:.4})", choice.w_hat, norm2(&choice.w_hat));
    println!("value    {:.4}", choice.value);

    // centered at the origin with equal axes: every direction is optimal
    let flat = ConfidenceRegion::new(vec![0.0, 0.0], SpdMatrix::identity(2, 1.0)?, 1.0, RegionMode::Ellipsoid)?;
    let choice = select_ball(&flat)?;
    println!("isotropic case picks {:.4?} with value {:.4}", choice.x, choice.value);
    Ok(())
}
