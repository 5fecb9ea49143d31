//! Acceptance suite. Every criterion is its own test and prints one
//! `PASS`/`FAIL` line (visible with `--nocapture`); the assertion that
//! follows makes the test outcome match that line.
//!
//! Statistical comparisons use replicates paired by seed (all schemes see the
//! same channel and feedback sample paths) and a one-sided 95% Student-t
//! bound on the mean paired difference.
//!
//! * "A < B" (and "A <= B" where stated with confidence) requires the upper
//!   bound of `A - B` to be below zero.
//! * A monotone trend holds unless some consecutive step shows a significant
//!   move in the wrong direction.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use deltacode::channels::{ChannelSpec, GeInitial, GilbertElliott, GilbertElliottParams, LoRaParams};
use deltacode::degree::{degree_select, DegreeTable};
use deltacode::engine::{run, run_with_observer, substream, RunConfig, RunMetrics};
use deltacode::experiment::{execute, write_results, ExperimentFile};
use deltacode::receiver::ReceiverState;
use deltacode::schemes::SchemeKind;
use deltacode::{Packet, PayloadSlot, SymbolId, SymbolSource, TimeConfig};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

const REPLICATES: u64 = 10;

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict} {name} ({:.1} s): {detail}", elapsed.as_secs_f64());
}

fn finish(id: u32, name: &str, start: Instant, budget: Option<Duration>, failures: Vec<String>, detail: String) {
    let elapsed = start.elapsed();
    let mut failures = failures;
    if let Some(b) = budget {
        if elapsed > b {
            failures.push(format!("took {:.1} s, budget {:.0} s", elapsed.as_secs_f64(), b.as_secs_f64()));
        }
    }
    let ok = failures.is_empty();
    let detail = if ok { detail } else { format!("{detail}; {}", failures.join("; ")) };
    report(id, name, ok, elapsed, &detail);
    assert!(ok, "criterion {id} failed: {}", failures.join("; "));
}

/// One-sided 95% bounds `(lower, upper)` on the mean of `diffs`.
fn one_sided_bounds(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).unwrap().inverse_cdf(0.95);
    let half = t * (var / n).sqrt();
    (mean - half, mean + half)
}

fn paired_diffs(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Mean of `a` is below the mean of `b` with 95% confidence.
fn significantly_less(a: &[f64], b: &[f64]) -> bool {
    one_sided_bounds(&paired_diffs(a, b)).1 < 0.0
}

/// Mean of `next` exceeds the mean of `prev` with 95% confidence.
fn significant_increase(prev: &[f64], next: &[f64]) -> bool {
    one_sided_bounds(&paired_diffs(next, prev)).0 > 0.0
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs every config and checks conservation on each result.
fn run_all(cfgs: &[RunConfig]) -> Vec<RunMetrics> {
    let out: Vec<RunMetrics> = cfgs.par_iter().map(|c| run(c).expect("run")).collect();
    for m in &out {
        assert!(m.is_conserved(), "conservation broken: {m:?}");
    }
    out
}

/// DFR per replicate, keyed by (scheme, axis value index).
type Grid = BTreeMap<(SchemeKind, usize), Vec<f64>>;

fn dfr_grid(
    base: &RunConfig,
    schemes: &[SchemeKind],
    points: usize,
    set: impl Fn(&mut RunConfig, usize),
) -> Grid {
    let mut cfgs = Vec::new();
    let mut keys = Vec::new();
    for &scheme in schemes {
        for i in 0..points {
            for r in 0..REPLICATES {
                let mut c = RunConfig { scheme, seed: base.seed + r, ..base.clone() };
                set(&mut c, i);
                keys.push((scheme, i));
                cfgs.push(c);
            }
        }
    }
    let mut grid = Grid::new();
    for (k, m) in keys.into_iter().zip(run_all(&cfgs)) {
        grid.entry(k).or_default().push(m.dfr);
    }
    grid
}

fn fmt_means(grid: &Grid, scheme: SchemeKind, points: usize) -> String {
    let v: Vec<String> = (0..points).map(|i| format!("{:.3e}", mean(&grid[&(scheme, i)]))).collect();
    format!("{}=[{}]", scheme.name(), v.join(", "))
}

// Criterion 1

fn brute_force_degree(x: u64, y: u64) -> u64 {
    // Undelivered symbols are the low `y` bits; count degree-d subsets
    // holding exactly one of them.
    let undelivered: u32 = (1u32 << y) - 1;
    let mut hits = vec![0u128; x as usize + 1];
    let mut total = vec![0u128; x as usize + 1];
    for mask in 1u32..(1u32 << x) {
        let d = mask.count_ones() as usize;
        total[d] += 1;
        if (mask & undelivered).count_ones() == 1 {
            hits[d] += 1;
        }
    }
    let mut best = 1usize;
    for d in 2..=x as usize {
        if hits[d] * total[best] > hits[best] * total[d] {
            best = d;
        }
    }
    best as u64
}

#[test]
fn criterion_01_degree_oracle() {
    let start = Instant::now();
    let table = DegreeTable::build(16).unwrap();
    let mut failures = Vec::new();
    let mut checked = 0;
    for x in 2..=16u64 {
        for y in 1..x {
            let expect = brute_force_degree(x, y);
            let got = degree_select(x, y).unwrap();
            if got != expect || table.lookup(x, y) != Some(expect) {
                failures.push(format!("x={x} y={y}: got {got}, table {:?}, expected {expect}", table.lookup(x, y)));
            }
            checked += 1;
        }
    }
    finish(1, "degree oracle", start, Some(Duration::from_secs(1)), failures, format!("{checked} (x, y) pairs exact"));
}

// Criterion 2

fn random_slot<R: Rng>(rng: &mut R, src: &SymbolSource, now: u64, delta: u64) -> PayloadSlot {
    // Members come from a window reaching a little past expiry so stale
    // slots are exercised too.
    let lo = (now + 1).saturating_sub(delta + 2);
    let span = (now - lo + 1) as usize;
    if rng.random_bool(0.3) {
        return src.uncoded(SymbolId(rng.random_range(lo..=now)));
    }
    let d = rng.random_range(1..=span.min(8));
    let ids = sample(rng, span, d).into_iter().map(|i| SymbolId(lo + i as u64)).collect();
    src.coded(ids)
}

#[test]
fn criterion_02_decoder_soundness() {
    let start = Instant::now();
    let mut rng = substream(2024, 0);
    let mut failures = Vec::new();
    let mut deliveries = 0u64;
    for stream in 0..10_000u64 {
        let delta = rng.random_range(2..=20u64);
        let b = rng.random_range(1..=5usize);
        let l = rng.random_range(1..=8usize);
        let time = TimeConfig::new(delta, b, l).unwrap();
        let src = SymbolSource::new(stream, l);
        let mut rx = ReceiverState::new(time);
        let erasure = rng.random_range(0.0..0.7);
        for now in 0..rng.random_range(10..60u64) {
            rx.expire_and_count(SymbolId(now));
            rx.note_generated(SymbolId(now));
            let mut slots = vec![src.uncoded(SymbolId(now))];
            for _ in 1..b {
                slots.push(random_slot(&mut rng, &src, now, delta));
            }
            if rng.random_bool(erasure) {
                continue;
            }
            for id in rx.process_packet(&Packet { seq: SymbolId(now), slots }, SymbolId(now)) {
                deliveries += 1;
                if rx.payload(id) != Some(&src.payload(id)[..]) || id.0 > now || id.0 + delta <= now {
                    failures.push(format!("stream {stream}: bad delivery of {} at {now}", id.0));
                }
            }
        }
    }
    failures.truncate(5);
    finish(
        2,
        "decoder soundness",
        start,
        Some(Duration::from_secs(30)),
        failures,
        format!("10000 streams, {deliveries} deliveries bit-exact"),
    );
}

// Criterion 3

/// Symbols recoverable by Gaussian elimination over GF(2), with payloads.
fn eliminate(rows: &[(u32, Vec<u8>)], k: usize) -> BTreeMap<usize, Vec<u8>> {
    let mut basis: Vec<(u32, Vec<u8>)> = Vec::new();
    for (mask, payload) in rows {
        let (mut m, mut p) = (*mask, payload.clone());
        for (bm, bp) in &basis {
            let pivot = 31 - bm.leading_zeros();
            if m >> pivot & 1 == 1 {
                m ^= bm;
                p.iter_mut().zip(bp).for_each(|(a, b)| *a ^= b);
            }
        }
        if m != 0 {
            let pivot = 31 - m.leading_zeros();
            for (bm, bp) in basis.iter_mut() {
                if *bm >> pivot & 1 == 1 {
                    *bm ^= m;
                    bp.iter_mut().zip(&p).for_each(|(a, b)| *a ^= b);
                }
            }
            basis.push((m, p));
            basis.sort_by_key(|(bm, _)| std::cmp::Reverse(31 - bm.leading_zeros()));
        }
    }
    // Fully reduced: a unit vector is in the row space iff it is a row.
    basis
        .into_iter()
        .filter(|(m, _)| m.count_ones() == 1)
        .map(|(m, p)| (m.trailing_zeros() as usize, p))
        .filter(|(i, _)| *i < k)
        .collect()
}

#[test]
fn criterion_03_peeling_vs_elimination() {
    let start = Instant::now();
    let mut rng = substream(3, 0);
    let mut failures = Vec::new();
    let (mut equal, mut peeled_total, mut ge_total) = (0, 0, 0);
    let instances = 1000;
    for inst in 0..instances {
        let k = rng.random_range(1..=12usize);
        let l = 4;
        let src = SymbolSource::new(inst, l);
        let n_slots = rng.random_range(1..=2 * k);
        let mut slots = Vec::new();
        let mut rows = Vec::new();
        for _ in 0..n_slots {
            let d = rng.random_range(1..=k.min(4));
            let members = sample(&mut rng, k, d).into_vec();
            let mask = members.iter().fold(0u32, |m, &i| m | 1 << i);
            let slot = src.coded(members.iter().map(|&i| SymbolId(i as u64)).collect());
            rows.push((mask, slot.payload().to_vec()));
            slots.push(slot);
        }
        // Everything stays live: the deadline is far beyond the instance.
        let time = TimeConfig::new(64, 1, l).unwrap();
        let mut rx = ReceiverState::new(time);
        let now = SymbolId(k as u64 - 1);
        for i in 0..k {
            rx.note_generated(SymbolId(i as u64));
        }
        // Deliver in a few packets so buffered slots are peeled later.
        let mut peeled = Vec::new();
        let mut rest = &slots[..];
        while !rest.is_empty() {
            let take = rng.random_range(1..=rest.len());
            let pkt = Packet { seq: now, slots: rest[..take].to_vec() };
            peeled.extend(rx.process_packet(&pkt, now));
            rest = &rest[take..];
        }
        let ge = eliminate(&rows, k);
        for id in &peeled {
            match ge.get(&(id.0 as usize)) {
                Some(p) if Some(&p[..]) == rx.payload(*id) && p[..] == src.payload(*id)[..] => {}
                _ => failures.push(format!("instance {inst}: peeled {} not recoverable by elimination", id.0)),
            }
        }
        peeled_total += peeled.len();
        ge_total += ge.len();
        if peeled.len() == ge.len() {
            equal += 1;
        }
    }
    let fraction = equal as f64 / instances as f64;
    println!(
        "audit: peeling recovered {peeled_total} of {ge_total} elimination-recoverable symbols; \
         equal on {equal}/{instances} instances ({fraction:.3})"
    );
    failures.truncate(5);
    finish(
        3,
        "peeling vs elimination",
        start,
        None,
        failures,
        format!("subset holds; equal on {:.1}% of instances", 100.0 * fraction),
    );
}

// Criterion 4

#[test]
fn criterion_04_gilbert_elliott_stationarity() {
    let start = Instant::now();
    let params = GilbertElliottParams { p_gb: 0.2, p_bg: 0.6, initial: GeInitial::Stationary };
    let mut rng = substream(4, 0);
    let mut ge = GilbertElliott::new(params, &mut rng);
    let steps = 1_000_000;
    let lost = (0..steps).filter(|_| !ge.step_and_transmit(&mut rng)).count();
    let loss = lost as f64 / steps as f64;
    let failures = if (loss - 0.25).abs() <= 0.01 { vec![] } else { vec![format!("loss {loss}")] };
    finish(4, "Gilbert-Elliott stationarity", start, Some(Duration::from_secs(5)), failures, format!("loss {loss:.4}"));
}

// Criterion 5

#[test]
fn criterion_05_bernoulli_success_trend() {
    let start = Instant::now();
    let ps = [0.6, 0.7, 0.8, 0.9];
    let base = RunConfig { p_feedback: 0.25, b: 2, delta_max: 16, seed: 500, ..RunConfig::default() };
    let schemes = [SchemeKind::Windowed, SchemeKind::Selective, SchemeKind::Repetition];
    let grid = dfr_grid(&base, &schemes, ps.len(), |c, i| c.channel = ChannelSpec::Bernoulli { p_success: ps[i] });
    let mut failures = Vec::new();
    for (i, p) in ps.iter().enumerate() {
        let rep = &grid[&(SchemeKind::Repetition, i)];
        for s in [SchemeKind::Windowed, SchemeKind::Selective] {
            let dfr = &grid[&(s, i)];
            if !significantly_less(dfr, rep) {
                failures.push(format!("p={p}: {} {:.3e} not below repetition {:.3e}", s.name(), mean(dfr), mean(rep)));
            }
        }
    }
    let last = ps.len() - 1;
    let rep = mean(&grid[&(SchemeKind::Repetition, last)]);
    let mut factors = Vec::new();
    for s in [SchemeKind::Windowed, SchemeKind::Selective] {
        let factor = rep / mean(&grid[&(s, last)]);
        factors.push(format!("{} x{factor:.1}", s.name()));
        if !(factor >= 10.0) {
            failures.push(format!("p=0.9: {} improvement factor {factor:.2} < 10", s.name()));
        }
    }
    let detail = format!(
        "{}; {}; {}; factor at 0.9: {}",
        fmt_means(&grid, SchemeKind::Windowed, ps.len()),
        fmt_means(&grid, SchemeKind::Selective, ps.len()),
        fmt_means(&grid, SchemeKind::Repetition, ps.len()),
        factors.join(", ")
    );
    finish(5, "Bernoulli success-probability trend", start, Some(Duration::from_secs(120)), failures, detail);
}

// Criterion 6

#[test]
fn criterion_06_feedback_probability_trend() {
    let start = Instant::now();
    let frps = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let base =
        RunConfig { channel: ChannelSpec::Bernoulli { p_success: 0.6 }, b: 3, delta_max: 16, seed: 600, ..RunConfig::default() };
    let schemes = [SchemeKind::Windowed, SchemeKind::Selective];
    let grid = dfr_grid(&base, &schemes, frps.len(), |c, i| c.p_feedback = frps[i]);
    let mut failures = Vec::new();
    for (i, f) in frps.iter().enumerate().filter(|(_, f)| **f >= 0.75) {
        let (sel, win) = (&grid[&(SchemeKind::Selective, i)], &grid[&(SchemeKind::Windowed, i)]);
        if !significantly_less(sel, win) {
            failures.push(format!("FRP {f}: selective {:.3e} vs windowed {:.3e}", mean(sel), mean(win)));
        }
    }
    let detail = format!(
        "{}; {}",
        fmt_means(&grid, SchemeKind::Windowed, frps.len()),
        fmt_means(&grid, SchemeKind::Selective, frps.len())
    );
    finish(6, "feedback-probability trend", start, Some(Duration::from_secs(120)), failures, detail);
}

// Criterion 7

fn check_monotone(grid: &Grid, schemes: &[SchemeKind], labels: &[String], increasing: bool) -> Vec<String> {
    let mut failures = Vec::new();
    for &s in schemes {
        for i in 1..labels.len() {
            let (prev, next) = (&grid[&(s, i - 1)], &grid[&(s, i)]);
            let violated = if increasing { significant_increase(next, prev) } else { significant_increase(prev, next) };
            if violated {
                failures.push(format!(
                    "{}: {:.3e} at {} -> {:.3e} at {}",
                    s.name(),
                    mean(prev),
                    labels[i - 1],
                    mean(next),
                    labels[i]
                ));
            }
        }
    }
    failures
}

#[test]
fn criterion_07_delay_tolerance_trend() {
    let start = Instant::now();
    let deltas = [4u64, 8, 16];
    let base = RunConfig {
        channel: ChannelSpec::GilbertElliott(GilbertElliottParams { p_gb: 0.3, p_bg: 0.6, initial: GeInitial::Stationary }),
        p_feedback: 0.5,
        b: 3,
        seed: 700,
        ..RunConfig::default()
    };
    let grid = dfr_grid(&base, &SchemeKind::ALL, deltas.len(), |c, i| c.delta_max = deltas[i]);
    let labels: Vec<String> = deltas.iter().map(|d| format!("delta_max {d}")).collect();
    let failures = check_monotone(&grid, &SchemeKind::ALL, &labels, false);
    let detail = SchemeKind::ALL.iter().map(|&s| fmt_means(&grid, s, deltas.len())).collect::<Vec<_>>().join("; ");
    finish(7, "delay-tolerance trend", start, Some(Duration::from_secs(120)), failures, detail);
}

// Criterion 8

#[test]
fn criterion_08_complexity() {
    let start = Instant::now();
    let p_bgs = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let frps = [0.3, 0.9];
    let horizon = 20_000;
    let base = RunConfig { b: 3, delta_max: 16, min_failures: u64::MAX, max_intervals: horizon, ..RunConfig::default() };
    let mut cfgs = Vec::new();
    for &scheme in &[SchemeKind::Windowed, SchemeKind::Selective] {
        for (fi, &f) in frps.iter().enumerate() {
            for (pi, &p_bg) in p_bgs.iter().enumerate() {
                for r in 0..REPLICATES {
                    let c = RunConfig {
                        scheme,
                        p_feedback: f,
                        channel: ChannelSpec::GilbertElliott(GilbertElliottParams {
                            p_gb: 0.2,
                            p_bg,
                            initial: GeInitial::Stationary,
                        }),
                        seed: 800 + r,
                        ..base.clone()
                    };
                    cfgs.push(((scheme, fi, pi), c));
                }
            }
        }
    }
    let metrics = run_all(&cfgs.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>());
    let mut per_packet: BTreeMap<(SchemeKind, usize, usize), Vec<f64>> = BTreeMap::new();
    for ((k, _), m) in cfgs.iter().zip(&metrics) {
        per_packet.entry(*k).or_default().push(m.avg_symbols_combined_per_packet());
    }
    let mut failures = Vec::new();
    for fi in 0..frps.len() {
        for (pi, p_bg) in p_bgs.iter().enumerate() {
            let sel = mean(&per_packet[&(SchemeKind::Selective, fi, pi)]);
            let win = mean(&per_packet[&(SchemeKind::Windowed, fi, pi)]);
            if sel > win {
                failures.push(format!("FRP {} p_bg {p_bg}: selective {sel:.3} > windowed {win:.3}", frps[fi]));
            }
        }
    }
    for s in [SchemeKind::Windowed, SchemeKind::Selective] {
        for (pi, p_bg) in p_bgs.iter().enumerate() {
            let (lo, hi) = (&per_packet[&(s, 0, pi)], &per_packet[&(s, 1, pi)]);
            if !significantly_less(hi, lo) {
                failures.push(format!("{} p_bg {p_bg}: FRP 0.9 {:.3} not below FRP 0.3 {:.3}", s.name(), mean(hi), mean(lo)));
            }
        }
    }

    // Blind: every packet after warm-up combines exactly (b - 1) * delta_max / 2.
    let mut blind_runs = 0;
    for &f in &frps {
        for &p_bg in &p_bgs {
            let c = RunConfig {
                scheme: SchemeKind::Blind,
                p_feedback: f,
                channel: ChannelSpec::GilbertElliott(GilbertElliottParams { p_gb: 0.2, p_bg, initial: GeInitial::Stationary }),
                seed: 800,
                ..base.clone()
            };
            let expect = (c.b as u64 - 1) * c.delta_max / 2;
            let mut bad = None;
            let m = run_with_observer(&c, |ev| {
                if ev.now.0 >= c.delta_max && ev.packet.symbols_combined() != expect && bad.is_none() {
                    bad = Some((ev.now.0, ev.packet.symbols_combined()));
                }
            })
            .unwrap();
            assert!(m.is_conserved(), "conservation broken: {m:?}");
            if let Some((t, n)) = bad {
                failures.push(format!("blind FRP {f} p_bg {p_bg}: {n} symbols at interval {t}, expected {expect}"));
            }
            blind_runs += 1;
        }
    }
    let detail = format!(
        "symbols/packet at p_bg 0.3: windowed {:.3}/{:.3}, selective {:.3}/{:.3} (FRP 0.3/0.9); blind constant in {blind_runs} runs",
        mean(&per_packet[&(SchemeKind::Windowed, 0, 0)]),
        mean(&per_packet[&(SchemeKind::Windowed, 1, 0)]),
        mean(&per_packet[&(SchemeKind::Selective, 0, 0)]),
        mean(&per_packet[&(SchemeKind::Selective, 1, 0)]),
    );
    finish(8, "complexity", start, Some(Duration::from_secs(120)), failures, detail);
}

// Criterion 9

#[test]
fn criterion_09_lora_trend() {
    let start = Instant::now();
    let ns = [0usize, 50, 100, 200];
    let labels: Vec<String> = ns.iter().map(|n| format!("n={n}")).collect();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for b in [2usize, 4] {
        let base = RunConfig { p_feedback: 0.5, b, delta_max: 16, max_intervals: 200_000, seed: 900, ..RunConfig::default() };
        let grid = dfr_grid(&base, &SchemeKind::ALL, ns.len(), |c, i| {
            c.channel = ChannelSpec::Lora(LoRaParams { n_interferers: ns[i], ..LoRaParams::default() })
        });
        for f in check_monotone(&grid, &SchemeKind::ALL, &labels, true) {
            failures.push(format!("b={b} {f}"));
        }
        let last = ns.len() - 1;
        for good in [SchemeKind::Windowed, SchemeKind::Selective] {
            for bench in [SchemeKind::Repetition, SchemeKind::Blind] {
                let (g, h) = (&grid[&(good, last)], &grid[&(bench, last)]);
                if !significantly_less(g, h) {
                    failures.push(format!(
                        "b={b} n=200: {} {:.3e} not below {} {:.3e}",
                        good.name(),
                        mean(g),
                        bench.name(),
                        mean(h)
                    ));
                }
            }
        }
        details.push(format!(
            "b={b} n=200: {}",
            SchemeKind::ALL
                .iter()
                .map(|&s| format!("{} {:.2e}", s.name(), mean(&grid[&(s, last)])))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    finish(9, "LoRa interference trend", start, Some(Duration::from_secs(300)), failures, details.join("; "));
}

// Criterion 10

const DETERMINISM_FILES: [&str; 3] = [
    r#"
scheme = "windowed"
schemes = ["windowed", "selective", "repetition", "blind"]
p_feedback = 0.25
b = 2
delta_max = 16
seed = 11
min_failures = 20
replicates = 2
axis = "p_success"
values = [0.6, 0.8]
[channel]
kind = "bernoulli"
p_success = 0.7
"#,
    r#"
scheme = "selective"
schemes = ["selective", "blind"]
p_feedback = 0.5
b = 3
delta_max = 8
seed = 12
min_failures = 20
replicates = 2
axis = "p_bg"
values = [0.3, 0.6]
[channel]
kind = "gilbert_elliott"
p_gb = 0.3
p_bg = 0.6
"#,
    r#"
scheme = "repetition"
schemes = ["windowed", "repetition"]
p_feedback = 0.5
b = 2
delta_max = 16
seed = 13
min_failures = 5
max_intervals = 20000
replicates = 2
axis = "n_interferers"
values = [100, 200]
[channel]
kind = "lora"
"#,
];

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let csv = |text: &str| {
        let exp = ExperimentFile::parse(text).unwrap();
        let rows = execute(&exp.plan_sweep().unwrap()).unwrap();
        for r in &rows {
            assert!(r.metrics.is_conserved(), "conservation broken: {:?}", r.metrics);
        }
        let mut out = Vec::new();
        write_results(&rows, &mut out).unwrap();
        out
    };
    let mut bytes = 0;
    for (i, text) in DETERMINISM_FILES.iter().enumerate() {
        let (a, b) = (csv(text), csv(text));
        bytes += a.len();
        if a != b {
            failures.push(format!("config {i}: CSV differs between runs"));
        }
    }
    finish(10, "determinism", start, None, failures, format!("{} configs, {bytes} CSV bytes identical", DETERMINISM_FILES.len()));
}

// Criterion 11

#[test]
fn criterion_11_conservation() {
    // Every run above also asserts conservation; this sweeps the remaining
    // corners (short deadlines, single-slot packets, heavy loss, caps).
    let start = Instant::now();
    let channels = [
        ChannelSpec::Bernoulli { p_success: 0.2 },
        ChannelSpec::Bernoulli { p_success: 1.0 },
        ChannelSpec::GilbertElliott(GilbertElliottParams { p_gb: 0.5, p_bg: 0.1, initial: GeInitial::Bad }),
        ChannelSpec::Lora(LoRaParams { n_interferers: 150, interferer_tx_prob: 0.01, ..LoRaParams::default() }),
    ];
    let mut cfgs = Vec::new();
    for scheme in SchemeKind::ALL {
        for ch in &channels {
            for (b, delta) in [(1usize, 1u64), (2, 2), (3, 16), (5, 30)] {
                for p_feedback in [0.0, 0.5, 1.0] {
                    cfgs.push(RunConfig {
                        scheme,
                        channel: ch.clone(),
                        b,
                        delta_max: delta,
                        p_feedback,
                        l: 2,
                        min_failures: 50,
                        max_intervals: 5_000,
                        seed: 1100,
                        ..RunConfig::default()
                    });
                }
            }
        }
    }
    let metrics: Vec<RunMetrics> = cfgs.par_iter().map(|c| run(c).unwrap()).collect();
    let broken: Vec<String> = metrics
        .iter()
        .filter(|m| !m.is_conserved())
        .take(5)
        .map(|m| format!("{} {}: {} != {} + {}", m.scheme, m.channel, m.generated, m.delivered, m.failures))
        .collect();
    finish(11, "conservation", start, None, broken, format!("{} runs conserved", metrics.len()));
}
