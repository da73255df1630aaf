use std::sync::Arc;
use std::thread;

use fedzip_core::ebcodec::{CodecBenchRecord, CodecId, CodecSpec};
use fedzip_core::netsim::{
    breakeven_bandwidth, emulate_send, pareto_front, select_codec, select_epsilon, transfer_time, worthwhile,
    CostInputs, GridCell, NetworkModel, SelectionGrid, SelectionPolicy, VirtualClock,
};
use fedzip_core::Error;
use proptest::prelude::*;

fn cost() -> impl Strategy<Value = CostInputs> {
    (1e3f64..1e10, 1.0f64..1000.0, 1e-4f64..10.0, 1e-4f64..10.0).prop_map(|(s, r, tc, td)| CostInputs {
        compress_seconds: tc,
        decompress_seconds: td,
        original_bytes: s,
        compressed_bytes: s / r,
    })
}

/// Cells with coarse values so ties actually occur.
fn grid(with_accuracy: bool) -> impl Strategy<Value = SelectionGrid> {
    (1usize..=6, 1usize..=6).prop_flat_map(move |(nc, ne)| {
        let cell = (1u32..20, 0u32..8, 0u32..8, 0u32..10);
        prop::collection::vec(cell, nc * ne).prop_map(move |raw| {
            let original_bytes = 100_000;
            let candidates: Vec<CodecSpec> = (0..nc)
                .map(|i| CodecSpec { codec: CodecId::External(128 + i as u8), ..CodecSpec::pq_rel(1e-2) })
                .collect();
            let epsilons: Vec<f64> = (0..ne).map(|j| 10f64.powi(-(j as i32) - 1)).collect();
            let cells = raw
                .iter()
                .enumerate()
                .map(|(k, &(r, tc, td, acc))| {
                    let spec = candidates[k / ne].with_epsilon(epsilons[k % ne]);
                    let ratio = f64::from(r);
                    GridCell {
                        spec,
                        record: CodecBenchRecord {
                            codec: spec.codec,
                            epsilon: spec.bound.epsilon,
                            eps_abs: spec.bound.epsilon,
                            compress_seconds: f64::from(tc) * 0.01,
                            decompress_seconds: f64::from(td) * 0.01,
                            original_bytes,
                            compressed_bytes: (original_bytes as f64 / ratio).round() as usize,
                            ratio,
                            max_abs_error: 0.0,
                            mean_abs_error: 0.0,
                        },
                        accuracy: with_accuracy.then(|| 0.5 + 0.05 * f64::from(acc)),
                    }
                })
                .collect();
            let g = SelectionGrid::new(candidates, epsilons, cells, original_bytes, 25_000).unwrap();
            if with_accuracy { g.with_baseline(0.95).unwrap() } else { g }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn worthwhile_matches_its_definition(c in cost(), bps in 1e3f64..1e11) {
        let m = NetworkModel::new(bps);
        let lhs = transfer_time(c.compressed_bytes, &m) + c.compress_seconds + c.decompress_seconds;
        prop_assert_eq!(worthwhile(&c, &m), lhs < transfer_time(c.original_bytes, &m));
    }

    #[test]
    fn breakeven_separates_regimes(c in cost()) {
        let b = breakeven_bandwidth(&c).unwrap();
        prop_assert!(worthwhile(&c, &NetworkModel::new(0.99 * b)));
        prop_assert!(!worthwhile(&c, &NetworkModel::new(1.01 * b)));
    }

    #[test]
    fn no_breakeven_without_savings(s in 1.0f64..1e9, grow in 1.0f64..2.0) {
        let c = CostInputs { compress_seconds: 1.0, decompress_seconds: 1.0, original_bytes: s, compressed_bytes: s * grow };
        prop_assert_eq!(breakeven_bandwidth(&c), Err(Error::NoBreakeven));
    }

    #[test]
    fn selected_codec_is_on_the_front(g in grid(false), bps in 1e5f64..1e9) {
        let m = NetworkModel::new(bps);
        let front = pareto_front(&g, &m);
        for policy in [SelectionPolicy::MinEndToEnd, SelectionPolicy::MaxRatio, SelectionPolicy::MinOverhead] {
            match select_codec(&g, &m, policy) {
                Ok(s) => prop_assert!(front.contains(&s.cell)),
                Err(e) => {
                    prop_assert_eq!(e, Error::NoFeasibleCandidate);
                    prop_assert!(front.is_empty());
                }
            }
        }
    }

    #[test]
    fn more_slack_never_costs_more(g in grid(true), bps in 1e5f64..1e9, clients in 1usize..6, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m = NetworkModel::new(bps).with_client(0, bps / 3.0);
        match (select_epsilon(&g, &m, clients, lo), select_epsilon(&g, &m, clients, hi)) {
            (Ok(tight), Ok(loose)) => prop_assert!(loose.objective <= tight.objective),
            (Ok(_), Err(e)) => prop_assert!(false, "looser slack lost feasibility: {e:?}"),
            _ => {}
        }
    }
}

#[test]
fn concurrent_virtual_sends_are_exact_and_order_free() {
    let sizes: Vec<f64> = (1..=64).map(|i| f64::from(i) * 12_345.0).collect();
    let model = NetworkModel::new(8e6);
    let serial = VirtualClock::new();
    let expected: f64 = sizes.iter().map(|&s| emulate_send(s, &model, &serial)).sum();

    for _ in 0..4 {
        let clock = Arc::new(VirtualClock::new());
        let handles: Vec<_> = sizes
            .chunks(8)
            .rev()
            .map(|chunk| {
                let (clock, chunk, model) = (Arc::clone(&clock), chunk.to_vec(), model.clone());
                thread::spawn(move || chunk.iter().map(|&s| emulate_send(s, &model, clock.as_ref())).sum::<f64>())
            })
            .collect();
        let elapsed: f64 = handles.into_iter().map(|h| h.join().unwrap()).sum();
        assert_eq!(clock.picos(), serial.picos());
        assert!((elapsed - expected).abs() < 1e-9);
    }
}
