mod support;

use std::io::{Cursor, Read};

use axum::http::{Method, StatusCode};
use corebox::extraction::extract_columns;
use corebox::imagery::{decode_image, encode_image_png, encode_mask_png};
use corebox::synth::{core_box, SceneSpec};
use corebox::GrayMask;
use corebox_service::ServiceConfig;
use serde_json::json;
use support::*;

fn scene(columns: u32) -> (Vec<u8>, GrayMask, Vec<u8>) {
    let (image, mask) = core_box(&SceneSpec::new(400, 300, columns, 5));
    (encode_image_png(&image).unwrap(), mask.clone(), encode_mask_png(&mask).unwrap())
}

fn zip_entries(bytes: &[u8]) -> Vec<(String, Vec<u8>)> {
    let mut zip = zip::ZipArchive::new(Cursor::new(bytes)).unwrap();
    (0..zip.len())
        .map(|i| {
            let mut f = zip.by_index(i).unwrap();
            let mut data = Vec::new();
            f.read_to_end(&mut data).unwrap();
            (f.name().to_string(), data)
        })
        .collect()
}

#[tokio::test]
async fn health_and_index() {
    let app = app(ServiceConfig::default());
    assert_eq!(get(&app, "/healthz").await.json()["status"], "ok");
    assert_eq!(get(&app, "/").await.status, StatusCode::OK);
}

#[tokio::test]
async fn create_variants() {
    let app = app(ServiceConfig::default());
    let (image, _, mask) = scene(3);
    let id = create(&app, &image, Some(&mask)).await;
    let info = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!((info["width"].as_u64(), info["height"].as_u64()), (Some(400), Some(300)));
    assert_eq!(info["extracted"], false);

    let small = encode_mask_png(&GrayMask::background(10, 10)).unwrap();
    let bad = post_multipart(&app, "/sessions", &[file("image", "a.png", &image), file("mask", "m.png", &small)]).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    let garbage = post_multipart(&app, "/sessions", &[file("image", "a.png", b"not an image")]).await;
    assert_eq!(garbage.status, StatusCode::BAD_REQUEST);
    let missing = post_multipart(&app, "/sessions", &[text("labels", "{\"labels\":{\"core_column\":255}}")]).await;
    assert_eq!(missing.status, StatusCode::BAD_REQUEST);

    let bare = create(&app, &image, None).await;
    let m = get(&app, &format!("/sessions/{bare}/mask")).await;
    assert_eq!(m.body, encode_mask_png(&GrayMask::background(400, 300)).unwrap());
}

#[tokio::test]
async fn depth_metadata_from_file_name() {
    let app = app(ServiceConfig::default());
    let (image, _, mask) = scene(4);
    let reply = post_multipart(&app, "/sessions", &[file("image", "box12_1200.0-1201.0m.png", &image), file("mask", "m.png", &mask)]).await;
    assert_eq!(reply.status, StatusCode::CREATED);
    let id = reply.json()["id"].as_str().unwrap().to_string();
    send(&app, Method::POST, &format!("/sessions/{id}/extract"), None, Vec::new()).await;
    let info = get(&app, &format!("/sessions/{id}")).await.json();
    let intervals = info["depths"]["intervals"].as_array().unwrap();
    assert_eq!(intervals.len(), 4);
    assert_eq!(intervals[0]["from"], 1200.0);
    assert_eq!(intervals[3]["to"], 1201.0);
}

#[tokio::test]
async fn unknown_session_is_404() {
    let app = app(ServiceConfig::default());
    for uri in ["/sessions/nope", "/sessions/nope/mask", "/sessions/nope/export"] {
        assert_eq!(get(&app, uri).await.status, StatusCode::NOT_FOUND);
    }
    assert_eq!(send(&app, Method::POST, "/sessions/nope/extract", None, Vec::new()).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn oversized_upload_is_413() {
    let app = app(ServiceConfig { max_upload_bytes: 1024, ..Default::default() });
    let (image, _, _) = scene(3);
    let reply = post_multipart(&app, "/sessions", &[file("image", "a.png", &image)]).await;
    assert_eq!(reply.status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn edit_extract_depths_export() {
    let app = app(ServiceConfig::default());
    let (image_png, mask, mask_png) = scene(4);
    let id = create(&app, &image_png, Some(&mask_png)).await;
    let base = format!("/sessions/{id}");

    assert_eq!(get(&app, &format!("{base}/export")).await.status, StatusCode::CONFLICT);
    let early = send_json(&app, Method::PUT, &format!("{base}/depths"), &json!({"spec": {"top": 1.0, "bottom": 2.0}})).await;
    assert_eq!(early.status, StatusCode::CONFLICT);

    let report = send(&app, Method::POST, &format!("{base}/extract"), None, Vec::new()).await.json();
    assert_eq!(report["kept"].as_array().unwrap().len(), 4);

    // Erase a vertical strip through the first column: it splits in two.
    let first = &report["kept"][0];
    let (x0, y0, h) = (first["x"].as_u64().unwrap() as u32, first["y"].as_u64().unwrap() as u32, first["h"].as_u64().unwrap() as u32);
    let cut = x0 + 150;
    let mut edited = mask.clone();
    for y in y0..y0 + h {
        for x in cut..cut + 6 {
            edited.set(x, y, 0);
        }
    }
    let edited_png = encode_mask_png(&edited).unwrap();
    assert_eq!(put_bytes(&app, &format!("{base}/mask"), edited_png.clone()).await.status, StatusCode::OK);
    assert_eq!(get(&app, &format!("{base}/mask")).await.body, edited_png);
    assert_eq!(get(&app, &format!("{base}/export")).await.status, StatusCode::CONFLICT, "edit must invalidate the report");
    assert_eq!(put_bytes(&app, &format!("{base}/mask"), encode_mask_png(&GrayMask::background(5, 5)).unwrap()).await.status, StatusCode::BAD_REQUEST);

    let relaxed = json!({"median_filter": false, "max_count": 10});
    let report = send_json(&app, Method::POST, &format!("{base}/extract"), &relaxed).await.json();
    let kept = report["kept"].as_array().unwrap();
    assert_eq!(kept.len(), 5);
    assert!(kept.iter().any(|b| b["x"].as_u64() == Some(x0 as u64) && b["w"].as_u64() == Some((cut - x0) as u64)));

    let bad = send_json(&app, Method::PUT, &format!("{base}/depths"), &json!({"spec": {"top": 5.0, "bottom": 5.0}})).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    let depths = send_json(&app, Method::PUT, &format!("{base}/depths"), &json!({"spec": {"top": 10.0, "bottom": 15.0}})).await.json();
    assert_eq!(depths["intervals"].as_array().unwrap().len(), 5);
    assert!(depths["warnings"].as_array().unwrap().is_empty());
    let gap = send_json(&app, Method::PUT, &format!("{base}/depths"), &json!({"edits": [{"column": 0, "from": 10.0, "to": 10.2}]})).await;
    assert_eq!(gap.status, StatusCode::OK);
    assert!(gap.json()["warnings"][0].as_str().unwrap().contains("gap"));
    let negative = send_json(&app, Method::PUT, &format!("{base}/depths"), &json!({"edits": [{"column": 0, "from": 11.0, "to": 10.0}]})).await;
    assert_eq!(negative.status, StatusCode::BAD_REQUEST);

    let a = get(&app, &format!("{base}/export")).await;
    assert_eq!(a.status, StatusCode::OK);
    let b = get(&app, &format!("{base}/export")).await;
    assert_eq!(a.body, b.body, "exports are deterministic");

    let entries = zip_entries(&a.body);
    let image = decode_image(&image_png).unwrap();
    let boxes: Vec<corebox::BoundingBox> = serde_json::from_value(report["kept"].clone()).unwrap();
    let offline = extract_columns(&image, &boxes).unwrap();
    let crops: Vec<_> = entries.iter().filter(|(n, _)| n.starts_with("column_")).collect();
    assert_eq!(crops.len(), offline.len());
    for ((_, png), c) in crops.iter().zip(&offline) {
        assert_eq!(decode_image(png).unwrap(), c.image);
    }
    let csv = String::from_utf8(entries.iter().find(|(n, _)| n == "depths.csv").unwrap().1.clone()).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().ends_with(",10,10.2"));
    assert_eq!(entries.last().unwrap().0, "mask.png");
    assert_eq!(entries.last().unwrap().1, edited_png);

    assert_eq!(send(&app, Method::DELETE, &base, None, Vec::new()).await.status, StatusCode::NO_CONTENT);
    assert_eq!(get(&app, &base).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn multipart_mask_upload() {
    let app = app(ServiceConfig::default());
    let (image, mask, _) = scene(3);
    let id = create(&app, &image, None).await;
    let png = encode_mask_png(&mask).unwrap();
    let ct = "multipart/form-data; boundary=corebox-test-boundary-7d1f";
    let reply = send(&app, Method::PUT, &format!("/sessions/{id}/mask"), Some(ct), multipart_body(&[file("mask", "m.png", &png)])).await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(get(&app, &format!("/sessions/{id}/mask")).await.body, png);
}

#[tokio::test]
async fn concurrent_sessions_stay_separate() {
    let app = app(ServiceConfig::default());
    let mut handles = Vec::new();
    for columns in 3..=6u32 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let (image, _, mask) = scene(columns);
            let id = create(&app, &image, Some(&mask)).await;
            let report = send(&app, Method::POST, &format!("/sessions/{id}/extract"), None, Vec::new()).await.json();
            (columns, report["kept"].as_array().unwrap().len())
        }));
    }
    for h in handles {
        let (columns, kept) = h.await.unwrap();
        assert_eq!(kept, columns as usize);
    }
}
