#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use serde_json::{json, Value};
use statlink_core::fixtures::{self, FEAR_OF_CRIME, GDP, LIFE_EXPECTANCY};
use statlink_core::link::{HighlightSet, ItemRef, LinkTable};
use support::{spawn_server, Api};
use tempfile::TempDir;

fn fixture_api() -> (TempDir, Api) {
    let dir = TempDir::new().unwrap();
    fixtures::build_fixture_catalog(&dir.path().join("catalog")).unwrap();
    let base = spawn_server(dir.path());
    (dir, Api::new(base))
}

fn error_kind(body: &Value) -> &str {
    body["error"].as_str().unwrap_or_else(|| panic!("no error field in {body}"))
}

fn new_dashboard(api: &Api, title: &str) -> String {
    let (status, body) = api.post("/api/dashboards", json!({ "title": title }));
    assert_eq!(status, 201, "{body}");
    body["dashboard_id"].as_str().unwrap().to_string()
}

#[test]
fn datasets_list_filter_and_describe() {
    let (_dir, api) = fixture_api();
    let (status, all) = api.get("/api/datasets");
    assert_eq!(status, 200);
    assert_eq!(all.as_array().unwrap().len(), 4);

    let (_, fixture) = api.get("/api/datasets?provider=fixture");
    assert_eq!(fixture.as_array().unwrap().len(), 4);
    let (_, none) = api.get("/api/datasets?provider=eurostat");
    assert!(none.as_array().unwrap().is_empty());
    let (_, hits) = api.get("/api/datasets?q=life%20expectancy");
    let ids: Vec<_> = hits.as_array().unwrap().iter().map(|e| e["cube_id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec![LIFE_EXPECTANCY]);
    let (status, body) = api.get("/api/datasets?provider=acme");
    assert_eq!(status, 400, "{body}");

    let (status, meta) = api.get(&format!("/api/datasets/{GDP}"));
    assert_eq!(status, 200);
    assert_eq!(meta["cube_id"], GDP);
    assert_eq!(meta["areas"].as_array().unwrap().len(), fixtures::MAIN_AREAS.len());
    assert_eq!(meta["dimensions"][0]["name"], "variant");

    let (status, body) = api.get("/api/datasets/nope");
    assert_eq!((status, error_kind(&body)), (404, "unknown_cube"));
}

#[test]
fn slices_honour_query_parameters() {
    let (_dir, api) = fixture_api();
    let (status, set) = api.get(&format!("/api/datasets/{GDP}/slice?areas=EUU,AFR&from=2007&to=2008"));
    assert_eq!(status, 200, "{set}");
    let areas: Vec<_> = set["series"].as_array().unwrap().iter().map(|s| s["area"].as_str().unwrap()).collect();
    assert_eq!(areas, vec!["EUU", "AFR"]);
    let afr = &set["series"][1]["points"];
    assert_eq!(afr[1]["time"], "2008");
    assert_eq!(afr[1]["value"], 1593.0);

    let (_, noted) = api.get(&format!("/api/datasets/{GDP}/slice?areas=AFR&from=2008&to=2008&dim.variant=note"));
    assert_eq!(noted["series"][0]["points"][0]["value"], 1350.0);

    for (query, kind) in [
        ("areas=XXX&from=2007&to=2008", "unknown_area"),
        ("areas=AFR&from=2009&to=2007", "empty_time_range"),
        ("areas=AFR&dim.variant=bogus", "unknown_dimension_member"),
        ("areas=AFR&colour=red", "bad_request"),
    ] {
        let (status, body) = api.get(&format!("/api/datasets/{GDP}/slice?{query}"));
        assert_eq!((status, error_kind(&body)), (400, kind), "{query}");
    }
}

#[test]
fn dashboard_flow_over_http() {
    let (_dir, api) = fixture_api();
    let (status, body) = api.post("/api/dashboards", json!({ "title": "  " }));
    assert_eq!((status, error_kind(&body)), (400, "validation"));
    let id = new_dashboard(&api, "Crime and wealth");

    let (status, added) = api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": GDP }));
    assert_eq!(status, 201, "{added}");
    assert_eq!(added["viz"]["viz_id"], "v1");
    assert_eq!(added["dashboard"]["revision"], 2);

    let (status, body) =
        api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": LIFE_EXPECTANCY, "expected_revision": 1 }));
    assert_eq!((status, error_kind(&body)), (409, "conflict"));
    let (status, _) =
        api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": LIFE_EXPECTANCY, "expected_revision": 2 }));
    assert_eq!(status, 201);
    let (status, _) = api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": FEAR_OF_CRIME }));
    assert_eq!(status, 201);

    let (status, body) = api.post(&format!("/api/dashboards/{id}/visualizations"), json!({}));
    assert_eq!((status, error_kind(&body)), (400, "bad_request"));
    let (status, body) =
        api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": GDP, "viz_type": "map" }));
    assert_eq!((status, error_kind(&body)), (400, "incompatible_viz_type"));
    let (status, body) = api.post("/api/dashboards/dash-0404/visualizations", json!({ "cube_id": GDP }));
    assert_eq!((status, error_kind(&body)), (404, "unknown_dashboard"));

    let (status, set) = api.post(&format!("/api/dashboards/{id}/resolve"), json!({ "viz_id": "v1", "local_id": "USA@2001" }));
    assert_eq!(status, 200);
    let set: HighlightSet = serde_json::from_value(set).unwrap();
    let got: Vec<_> = set.items.iter().map(|e| (e.viz_id.as_str(), e.display_value.as_str())).collect();
    assert_eq!(got, vec![("v2", "77.0341 years"), ("v3", "30%")]);
    let (status, body) = api.post(&format!("/api/dashboards/{id}/resolve"), json!({ "viz_id": "v1", "local_id": "USA@1850" }));
    assert_eq!((status, error_kind(&body)), (404, "unknown_item"));

    let (status, updated) = api.patch(
        &format!("/api/dashboards/{id}/visualizations/v1"),
        json!({ "areas": ["PRT", "GBR"], "time_from": "1990", "time_to": "2000" }),
    );
    assert_eq!(status, 200, "{updated}");
    assert_eq!(updated["viz"]["selection"]["areas"], json!(["GBR", "PRT"]));
    let (status, payload) = api.get(&format!("/api/dashboards/{id}/visualizations/v1"));
    assert_eq!(status, 200);
    let legend = payload["legend"].as_array().unwrap();
    assert_eq!(legend.len(), 6);
    assert_eq!(legend.iter().filter(|e| e["selected"] == true).count(), 2);
    let (status, body) = api.patch(&format!("/api/dashboards/{id}/visualizations/v1"), json!({ "toggle_areas": ["ZZZ"] }));
    assert_eq!((status, error_kind(&body)), (400, "unknown_area"));
    let (status, body) = api.patch(&format!("/api/dashboards/{id}/visualizations/v9"), json!({}));
    assert_eq!((status, error_kind(&body)), (404, "unknown_viz"));

    let (status, view) = api.get(&format!("/api/dashboards/{id}"));
    assert_eq!(status, 200);
    assert_eq!(view["dashboard"]["revision"], 5);
    let (_, list) = api.get("/api/dashboards");
    assert_eq!(list.as_array().unwrap().len(), 1);
}

#[test]
fn user_visualizations_and_manual_rules() {
    let (_dir, api) = fixture_api();
    let id = new_dashboard(&api, "Recessions");
    let (status, uv) = api.post(
        "/api/uservisualizations",
        json!({ "kind": "timeline", "items": [
            { "label": "Early 1990s recession", "start": "1990", "end": "1992" },
            { "label": "Great Recession", "start": "2007-12", "end": "2009-06" }
        ] }),
    );
    assert_eq!(status, 201, "{uv}");
    let uv_id = uv["user_viz_id"].as_str().unwrap().to_string();
    assert_eq!(api.get(&format!("/api/uservisualizations/{uv_id}")).1, uv);
    let (status, body) = api.get("/api/uservisualizations/uv-404");
    assert_eq!((status, error_kind(&body)), (404, "unknown_user_viz"));
    let (status, body) = api.post("/api/uservisualizations", json!({ "kind": "timeline", "items": [{ "label": "Undated" }] }));
    assert_eq!(status, 400, "{body}");

    api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": GDP }));
    let (status, _) = api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "user_viz_id": uv_id }));
    assert_eq!(status, 201);

    let rule = json!({ "from": { "viz_id": "v1", "time_span": ["2007", "2009"] }, "to": { "viz_id": "v2", "local_id": "e1" } });
    let (status, first) = api.post(&format!("/api/dashboards/{id}/rules"), rule.clone());
    assert_eq!(status, 201, "{first}");
    assert_eq!(first["rule"]["origin"], "manual");
    let (status, again) = api.post(&format!("/api/dashboards/{id}/rules"), rule);
    assert_eq!(status, 200);
    assert_eq!(again["dashboard"]["revision"], first["dashboard"]["revision"]);

    let (_, set) = api.post(&format!("/api/dashboards/{id}/resolve"), json!({ "viz_id": "v2", "local_id": "e1" }));
    let set: HighlightSet = serde_json::from_value(set).unwrap();
    let ids: Vec<_> = set.items.iter().map(|e| e.local_id.clone()).collect();
    let (_, window) = api.get(&format!("/api/datasets/{GDP}/slice?from=2007&to=2009"));
    let mut want: Vec<String> = Vec::new();
    for series in window["series"].as_array().unwrap() {
        for point in series["points"].as_array().unwrap() {
            if point["value"].is_number() {
                want.push(format!("{}@{}", series["area"].as_str().unwrap(), point["time"].as_str().unwrap()));
            }
        }
    }
    want.push("region:2007..2009".into());
    want.sort();
    assert_eq!(ids, want);

    let same = json!({ "from": { "viz_id": "v1", "local_id": "USA@2001" }, "to": { "viz_id": "v1", "local_id": "USA@2002" } });
    let (status, body) = api.post(&format!("/api/dashboards/{id}/rules"), same);
    assert_eq!((status, error_kind(&body)), (400, "same_viz"));
    let missing = json!({ "from": { "viz_id": "v1", "local_id": "USA@1850" }, "to": { "viz_id": "v2", "local_id": "e0" } });
    let (status, body) = api.post(&format!("/api/dashboards/{id}/rules"), missing);
    assert_eq!((status, error_kind(&body)), (404, "unknown_item"));
}

#[test]
fn served_link_table_matches_served_highlights() {
    let (_dir, api) = fixture_api();
    let id = new_dashboard(&api, "Everything");
    for cube in [GDP, LIFE_EXPECTANCY, FEAR_OF_CRIME] {
        api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "cube_id": cube }));
    }
    let map = serde_json::to_value(fixtures::europe_map()).unwrap();
    let (_, uv) = api.post("/api/uservisualizations", json!({ "kind": map["kind"], "items": map["items"] }));
    api.post(&format!("/api/dashboards/{id}/visualizations"), json!({ "user_viz_id": uv["user_viz_id"] }));

    let (_, view) = api.get(&format!("/api/dashboards/{id}"));
    let table: LinkTable = serde_json::from_value(view["link_table"].clone()).unwrap();
    assert_eq!(table.revision, view["dashboard"]["revision"].as_u64().unwrap());
    assert!(!table.items.is_empty());
    for item in &table.items {
        let anchor = ItemRef::new(&item.viz_id, &item.local_id);
        let (status, set) = api.post(&format!("/api/dashboards/{id}/resolve"), serde_json::to_value(&anchor).unwrap());
        assert_eq!(status, 200);
        let set: HighlightSet = serde_json::from_value(set).unwrap();
        assert_eq!(Some(set.items), common::naive_resolve(&table, &anchor), "{anchor:?}");
    }
}

#[test]
fn malformed_requests_get_json_errors() {
    let (_dir, api) = fixture_api();
    let (status, body) = api.post_raw("/api/dashboards", "{\"title\": ");
    assert_eq!((status, error_kind(&body)), (400, "bad_request"));
    let (status, body) = api.post_raw("/api/dashboards", "{\"name\": \"x\"}");
    assert_eq!(status, 400, "{body}");
    let (status, body) = api.get("/api/nothing/here");
    assert_eq!((status, error_kind(&body)), (404, "not_found"));
    let (status, body) = api.get("/api/dashboards/dash-0404");
    assert_eq!((status, error_kind(&body)), (404, "unknown_dashboard"));
}
