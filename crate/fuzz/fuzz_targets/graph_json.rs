#![no_main]

use libfuzzer_sys::fuzz_target;
use spinlab_core::graph::BipartiteMultigraph;

// Anything that parses must survive a serialization round trip unchanged.
fuzz_target!(|data: &[u8]| {
    if let Ok(g) = BipartiteMultigraph::from_json(data) {
        let text = g.to_json();
        let back = BipartiteMultigraph::from_json(text.as_bytes()).expect("serialized graph parses");
        assert_eq!(back, g);
        let _ = g.two_coloring();
    }
});
