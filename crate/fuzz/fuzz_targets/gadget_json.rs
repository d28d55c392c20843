#![no_main]

use libfuzzer_sys::fuzz_target;
use spinlab_core::gadgets::Gadget;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = Gadget::from_json(data) {
        let text = g.to_json();
        let back = Gadget::from_json(text.as_bytes()).expect("serialized gadget parses");
        assert_eq!(back, g);
        let _ = g.terminal_ids();
    }
});
