//! Minimal link computation: seeded multipath channel, per-subcarrier
//! waterfilled digital precoding, average mutual information.

use nalgebra::DMatrix;
use trihybrid::model::{
    generate_channel, mutual_information, ArrayDescriptor, MultipathParams, NoiseModel,
    PrecoderSet,
};
use trihybrid::optim::waterfilling_precoder;

fn main() -> Result<(), trihybrid::Error> {
    let lambda = 3e8 / 28e9;
    let tx = ArrayDescriptor::line_array(8, lambda / 2.0, lambda)?;
    let rx = ArrayDescriptor::line_array(2, lambda / 2.0, lambda)?;
    let params = MultipathParams::random_geometric(6, 28e9, 1e8, 16, 7);
    let h = generate_channel(&params, &tx, &rx, 42)?;

    let digital: Vec<_> = (0..16)
        .map(|k| waterfilling_precoder(h.matrix(k), 1.0 / 16.0, 1e-3, 2))
        .collect::<Result<_, _>>()?;
    let analog = vec![DMatrix::identity(8, 8); 16];
    let precoders = PrecoderSet::new(digital, analog, ())?;
    let se = mutual_information(&h, &precoders, &NoiseModel::new(1e-3)?)?;
    println!("{se:.2} bits/s/Hz");
    Ok(())
}
