use urnn::scene::{synth_scenes, SynthParams};
use rand::SeedableRng;
fn main() {
    // temporary: bias sampling by running tiny batches and reporting tags
    let params = SynthParams::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let scenes = synth_scenes(1000, &mut rng, &params).unwrap();
    let mut counts = std::collections::HashMap::new();
    for s in &scenes {
        *counts.entry(format!("{:?}", s.tag.unwrap())).or_insert(0) += 1;
    }
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort();
    for (k, n) in v { println!("{k}: {n}"); }
}
