use burr::{BuildConfig, RibbonFilter, ThresholdMode};
use burr_bench::bench::synth_keys;
use burr_bench::metrics::structural_bytes;

fn main() {
    let n = 10_000_000usize;
    let mut overheads = Vec::new();
    for seed in 0u64..24 {
        let mut bytes = Vec::new();
        for threads in [1usize, 8] {
            let config = BuildConfig {
                threshold_mode: ThresholdMode::OnePlusBit,
                minbpt: 1000,
                seed,
                ..BuildConfig::default()
            };
            let keys = synth_keys(n, seed);
            let f = RibbonFilter::build(&keys, &config, threads).unwrap();
            bytes.push(structural_bytes(f.structure()));
        }
        let o = (bytes[1] as f64 - bytes[0] as f64) / 7.0;
        println!("seed {seed}: overhead/thread = {o:.1}");
        overheads.push(o);
    }
    let mean = overheads.iter().sum::<f64>() / overheads.len() as f64;
    let var = overheads.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (overheads.len() - 1) as f64;
    println!("mean = {mean:.1}, sd = {:.1}, sd_mean = {:.1}", var.sqrt(), (var / overheads.len() as f64).sqrt());
}
