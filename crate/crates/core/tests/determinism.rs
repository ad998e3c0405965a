//! Results must not depend on how many worker threads run the replicates.
#![cfg(feature = "parallel")]

use lsfts::experiments::Manifest;

#[test]
fn reports_match_across_pool_sizes() {
    let manifest = Manifest::builtin();
    for name in ["oracle-equivalence", "eigen-rate", "q-selector"] {
        let spec = manifest.get(name).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| spec.run()).unwrap();
        let b = four.install(|| spec.run()).unwrap();
        assert_eq!(a.rows, b.rows, "{name}");
        assert_eq!(a.summary, b.summary, "{name}");
    }
}
