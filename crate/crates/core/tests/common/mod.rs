//! Reference implementations used as oracles by several test targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use statlink_core::link::{
    compile_link_table, index_series, index_user_viz, region_item, HighlightEntry, ItemKind, ItemRef, LinkIndex,
    LinkRule, LinkTable, RuleOrigin, UserViz, UserVizEntry, UserVizKind, VizItemKey,
};
use statlink_core::{
    default_selection, slice, AreaKey, CubeBuilder, DataCube, Granularity, Obs, Provider, Selection, TimeKey,
};

/// Calendar containment spelled out per granularity pair.
pub fn contains_by_hand(coarse: &TimeKey, fine: &TimeKey) -> bool {
    use Granularity::*;
    let (cy, cs, fy, fs) = (coarse.year_value(), coarse.sub() as i32, fine.year_value(), fine.sub() as i32);
    match (coarse.granularity(), fine.granularity()) {
        (Year, _) => cy == fy,
        (Quarter, Quarter) | (Month, Month) => cy == fy && cs == fs,
        (Quarter, Month) => cy == fy && (fs - 1) / 3 + 1 == cs,
        _ => false,
    }
}

fn in_span(span: (TimeKey, TimeKey), t: &TimeKey) -> bool {
    let first = |k: &TimeKey| {
        k.year_value() * 12
            + match k.granularity() {
                Granularity::Year => 0,
                Granularity::Quarter => (k.sub() as i32 - 1) * 3,
                Granularity::Month => k.sub() as i32 - 1,
            }
    };
    let last = |k: &TimeKey| {
        first(k)
            + match k.granularity() {
                Granularity::Year => 11,
                Granularity::Quarter => 2,
                Granularity::Month => 0,
            }
    };
    first(&span.0) <= first(t) && last(t) <= last(&span.1)
}

/// Everything an endpoint stands for: itself, plus the in-span datapoints of a region.
fn expand<'a>(items: &'a [VizItemKey], r: &ItemRef) -> Vec<&'a VizItemKey> {
    let Some(item) = items.iter().find(|i| i.viz_id == r.viz_id && i.local_id == r.local_id) else {
        return Vec::new();
    };
    let mut out = vec![item];
    if item.kind == ItemKind::Region {
        let span = item.time_span.unwrap();
        out.extend(items.iter().filter(|i| {
            i.viz_id == item.viz_id && i.kind == ItemKind::Datapoint && i.time.is_some_and(|t| in_span(span, &t))
        }));
    }
    out
}

/// Hover resolution by scanning every rule of the wire document, as a client would.
pub fn naive_resolve(table: &LinkTable, anchor: &ItemRef) -> Option<Vec<HighlightEntry>> {
    table.items.iter().find(|i| i.viz_id == anchor.viz_id && i.local_id == anchor.local_id)?;
    let hit = |r: &ItemRef| expand(&table.items, r).iter().any(|i| i.viz_id == anchor.viz_id && i.local_id == anchor.local_id);
    let mut out = BTreeSet::new();
    for rule in &table.rules {
        let (a, b) = (expand(&table.items, &rule.from), expand(&table.items, &rule.to));
        if a.is_empty() || b.is_empty() {
            continue;
        }
        if hit(&rule.from) {
            out.extend(b.iter().map(|i| (i.viz_id.clone(), i.local_id.clone(), i.display_value.clone())));
        }
        if hit(&rule.to) {
            out.extend(a.iter().map(|i| (i.viz_id.clone(), i.local_id.clone(), i.display_value.clone())));
        }
    }
    Some(
        out.into_iter()
            .filter(|(v, l, _)| !(v == &anchor.viz_id && l == &anchor.local_id))
            .map(|(viz_id, local_id, display_value)| HighlightEntry { viz_id, local_id, display_value })
            .collect(),
    )
}

/// Present (area, time) observations of a selection, read straight from the cube.
pub fn present_keys(cube: &DataCube, sel: &Selection) -> Vec<(String, TimeKey)> {
    let members: Vec<&str> = cube
        .dimensions()
        .iter()
        .map(|d| sel.dimension_choice.get(&d.name).map(String::as_str).unwrap_or(d.members[0].code.as_str()))
        .collect();
    let mut out = Vec::new();
    for area in &sel.areas {
        for t in cube.times() {
            let inside = in_span((sel.time_from, sel.time_to), t);
            if inside && cube.get(&members, area, *t).is_some_and(|o| o.value.is_some()) {
                out.push((area.clone(), *t));
            }
        }
    }
    out
}

/// Number of (a, b) pairs with equal areas and times equal or nested either way.
pub fn brute_force_auto_count(a: &[(String, TimeKey)], b: &[(String, TimeKey)]) -> usize {
    let mut n = 0;
    for (aa, ta) in a {
        for (ab, tb) in b {
            if aa == ab && (contains_by_hand(ta, tb) || contains_by_hand(tb, ta)) {
                n += 1;
            }
        }
    }
    n
}

pub fn cube(id: &str, unit: &str, areas: &[(&str, &str)], cells: &[(&str, TimeKey, f64)]) -> DataCube {
    let mut times: Vec<TimeKey> = cells.iter().map(|c| c.1).collect();
    times.sort();
    times.dedup();
    let mut b = CubeBuilder::new(id, Provider::User)
        .title(id)
        .unit(unit)
        .areas(areas.iter().map(|(c, l)| AreaKey { code: c.to_string(), label: l.to_string() }))
        .times(times);
    for (area, t, v) in cells {
        b.set(&[], area, *t, Obs::present(*v)).unwrap();
    }
    b.build().unwrap()
}

pub fn full_selection(cube: &DataCube) -> Selection {
    let mut sel = default_selection(cube).unwrap();
    sel.areas = cube.areas().iter().map(|a| a.code.clone()).collect();
    sel
}

pub fn items(viz_id: &str, cube: &DataCube) -> Vec<VizItemKey> {
    index_series(viz_id, &slice(cube, &full_selection(cube)).unwrap())
}

pub fn user(viz_id: &str, kind: UserVizKind, entries: Vec<UserVizEntry>) -> Vec<VizItemKey> {
    index_user_viz(viz_id, &UserViz { user_viz_id: "uv".into(), kind, items: entries })
}

const AREAS: [(&str, &str); 3] = [("AAA", "Alpha"), ("BBB", "Beta"), ("CCC", "Gamma")];
const PLACE_LABELS: [&str; 5] = ["Alpha", " alpha", "BETA", "Zeta", "Gamma "];

fn time_pool() -> Vec<TimeKey> {
    let mut keys = Vec::new();
    for v in 2000..=2001 {
        keys.push(TimeKey::year(v).unwrap());
        keys.extend((1..=4).map(|q| TimeKey::quarter(v, q).unwrap()));
        keys.extend([1, 5, 12].map(|mm| TimeKey::month(v, mm).unwrap()));
    }
    keys
}

fn random_viz(rng: &mut StdRng, viz_id: &str, pool: &[TimeKey]) -> Vec<VizItemKey> {
    match rng.gen_range(0..4) {
        0 => user(
            viz_id,
            UserVizKind::Map,
            (0..rng.gen_range(1..4)).map(|_| UserVizEntry::place(PLACE_LABELS.choose(rng).unwrap(), 0.0, 0.0)).collect(),
        ),
        1 => {
            let entries = (0..rng.gen_range(1..4))
                .map(|i| {
                    let mut span = [*pool.choose(rng).unwrap(), *pool.choose(rng).unwrap()];
                    span.sort_by_key(|k| k.start_month());
                    UserVizEntry::event(&format!("event {i}"), span[0], span[1])
                })
                .collect();
            user(viz_id, UserVizKind::Timeline, entries)
        }
        _ => {
            let granularity = rng.gen_range(0..3);
            let times: Vec<TimeKey> = pool.iter().copied().filter(|t| t.granularity() as usize == granularity).collect();
            let mut cells = Vec::new();
            for (code, _) in AREAS {
                for t in &times {
                    if rng.gen_bool(0.5) {
                        cells.push((code, *t, rng.gen_range(0..100) as f64));
                    }
                }
            }
            if cells.is_empty() {
                cells.push((AREAS[0].0, times[0], 0.0));
            }
            let mut out = items(viz_id, &cube(viz_id, "u", &AREAS, &cells));
            for _ in 0..rng.gen_range(0..3) {
                let mut span = [*pool.choose(rng).unwrap(), *pool.choose(rng).unwrap()];
                span.sort_by_key(|k| k.start_month());
                let region = region_item(viz_id, span[0], span[1]);
                if !out.iter().any(|i| i.local_id == region.local_id) {
                    out.push(region);
                }
            }
            out
        }
    }
}

/// Random dashboards checked item by item: index equals the naive scan,
/// output is ordered and excludes the anchor, point-to-point reach is mutual.
/// Returns the number of anchors checked.
pub fn random_sweep(seed: u64, rounds: usize) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let pool = time_pool();
    let mut anchors = 0;
    for round in 0..rounds {
        let count = rng.gen_range(2..5);
        let vizzes: Vec<_> = (1..=count).map(|i| random_viz(&mut rng, &format!("v{i}"), &pool)).collect();
        let all: Vec<&VizItemKey> = vizzes.iter().flatten().collect();
        let mut manual = Vec::new();
        for _ in 0..rng.gen_range(0..4) {
            let (a, b) = (all.choose(&mut rng).unwrap(), all.choose(&mut rng).unwrap());
            if a.viz_id != b.viz_id {
                manual.push(LinkRule { from: a.item_ref(), to: b.item_ref(), origin: RuleOrigin::Manual });
            }
        }
        manual.push(LinkRule { from: ItemRef::new("v1", "gone"), to: all[0].item_ref(), origin: RuleOrigin::Manual });
        let table = compile_link_table("d", 1, &vizzes, &manual);
        let index = LinkIndex::new(&table);
        for item in &table.items {
            let anchor = item.item_ref();
            let set = index.resolve(&anchor).unwrap();
            assert_eq!(Some(set.items.clone()), naive_resolve(&table, &anchor), "round {round} {anchor:?}");
            assert!(set.items.windows(2).all(|w| (&w[0].viz_id, &w[0].local_id) < (&w[1].viz_id, &w[1].local_id)));
            assert!(!set.items.iter().any(|e| e.viz_id == anchor.viz_id && e.local_id == anchor.local_id));
            // Links between points are mutual; region covers may add one-way reach.
            if item.kind != ItemKind::Region {
                for e in &set.items {
                    let back = index.item(&ItemRef::new(&e.viz_id, &e.local_id)).unwrap();
                    if back.kind == ItemKind::Region {
                        continue;
                    }
                    let reverse: BTreeSet<(String, String)> = index
                        .resolve(&back.item_ref())
                        .unwrap()
                        .items
                        .into_iter()
                        .map(|h| (h.viz_id, h.local_id))
                        .collect();
                    assert!(reverse.contains(&(anchor.viz_id.clone(), anchor.local_id.clone())), "{anchor:?} -> {e:?}");
                }
            }
            anchors += 1;
        }
    }
    anchors
}
