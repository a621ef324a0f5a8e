use proptest::prelude::*;

use sdnmc::explore::{self, Options};
use sdnmc::model::pack;
use sdnmc::model::{Packet, PacketId, VecSet};
use sdnmc::scenario::{templates, Checker};
use sdnmc::topology::{Location, PortId, PortSet, SwitchId};

fn states(c: &Checker) -> Vec<sdnmc::model::PackedState> {
    explore::explore(&c.model, &c.property, &Options { por: false, stop_on_violation: false, ..Options::default() })
        .unwrap()
        .states
}

#[test]
fn round_trip_on_reachable_states() {
    for sc in [templates::cp3(2, 2), templates::cp2(1), templates::cp1("buggy"), templates::cp5("fixed")] {
        let c = sc.build().unwrap();
        for p in states(&c) {
            let s = c.model.unpack(&p);
            assert_eq!(c.model.pack(&s), p);
            let mut buf = Vec::new();
            c.model.pack_into(&s, &mut buf);
            assert_eq!(&buf[..], p.words());
        }
    }
}

#[test]
fn dump_round_trip_and_schema_hash() {
    let c = templates::cp1("fixed").build().unwrap();
    let p = c.model.pack(&c.model.initial_state());
    let bytes = pack::dump(&p, c.model.schema_hash());
    let (h, q) = pack::undump(&bytes).unwrap();
    assert_eq!(h, c.model.schema_hash());
    assert_eq!(q, p);
    assert!(pack::undump(&bytes[..bytes.len() - 1]).is_err());

    let other = templates::cp1("fixed").build().unwrap();
    assert_eq!(other.model.schema_hash(), c.model.schema_hash());
    assert_eq!(pack::fingerprint(&other.model.pack(&other.model.initial_state())), pack::fingerprint(&p));
    let cp3 = templates::cp3(2, 2).build().unwrap();
    assert_ne!(cp3.model.schema_hash(), c.model.schema_hash());
}

#[test]
fn forwarding_queue_order_does_not_matter() {
    let c = templates::cp3(2, 2).build().unwrap();
    let m = &c.model;
    let a = SwitchId(0);
    let p1 = m.intern_packet(Packet::new(1, Location::new(a, PortId(1)))).unwrap();
    let p2 = m.intern_packet(Packet::new(2, Location::new(a, PortId(2)))).unwrap();
    let e1 = (p1, PortSet::single(PortId(2)));
    let e2 = (p2, PortSet::single(PortId(1)).with(PortId(3)));
    let mut x = m.initial_state();
    let mut y = m.initial_state();
    x.switch_mut(a).fq.insert(e1);
    x.switch_mut(a).fq.insert(e2);
    y.switch_mut(a).fq.insert(e2);
    y.switch_mut(a).fq.insert(e1);
    assert_eq!(m.pack(&x), m.pack(&y));
    assert_eq!(pack::fingerprint(&m.pack(&x)), pack::fingerprint(&m.pack(&y)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sets_pack_canonically(ids in prop::collection::vec((0u32..40, 1u8..3), 0..12), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let c = templates::cp3(3, 2).build().unwrap();
        let m = &c.model;
        let entries: Vec<(PacketId, PortSet)> = ids
            .iter()
            .map(|&(h, port)| {
                let p = Packet::new(h % 4, Location::new(SwitchId(1), PortId(port)));
                (m.intern_packet(p).unwrap(), PortSet::single(PortId(port % 2 + 1)))
            })
            .collect();
        let mut shuffled = entries.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let mut x = m.initial_state();
        let mut y = m.initial_state();
        x.switch_mut(SwitchId(1)).fq = entries.iter().copied().collect::<VecSet<_>>();
        y.switch_mut(SwitchId(1)).fq = shuffled.iter().copied().collect();
        for &(p, _) in &entries {
            x.switch_mut(SwitchId(2)).pq.insert(p.0);
        }
        for &(p, _) in shuffled.iter().rev() {
            y.switch_mut(SwitchId(2)).pq.insert(p.0);
        }
        prop_assert_eq!(m.pack(&x), m.pack(&y));
        prop_assert_eq!(m.unpack(&m.pack(&x)), x);
    }
}
