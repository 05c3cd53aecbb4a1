//! Drives the API in-process: create a session, extract, erase part of the
//! mask, re-extract, set depths and download the archive.
//!
//! To run the real server instead: `cargo run -p corebox-cli -- serve`.

use axum::body::Body;
use axum::http::{Method, Request};
use corebox::imagery::{encode_image_png, encode_mask_png};
use corebox::synth::{core_box, SceneSpec};
use corebox_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, content_type: &str, body: Vec<u8>) -> (u16, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", content_type).body(Body::from(body)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

#[tokio::main]
async fn main() {
    let config = ServiceConfig::default();
    let app = router(AppState::new(&config).unwrap(), &config);
    let (image, mut mask) = core_box(&SceneSpec::new(600, 400, 4, 1));

    let boundary = "example-boundary";
    let mut body = Vec::new();
    for (name, file, data) in [("image", "box_1200.0-1201.0m.png", encode_image_png(&image).unwrap()), ("mask", "mask.png", encode_mask_png(&mask).unwrap())] {
        body.extend(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{file}\"\r\n\r\n").bytes());
        body.extend(data);
        body.extend(b"\r\n");
    }
    body.extend(format!("--{boundary}--\r\n").bytes());
    let (status, reply) = call(&app, Method::POST, "/sessions", &format!("multipart/form-data; boundary={boundary}"), body).await;
    let id = serde_json::from_slice::<serde_json::Value>(&reply).unwrap()["id"].as_str().unwrap().to_string();
    println!("POST /sessions -> {status} {id}");

    let (status, _) = call(&app, Method::GET, &format!("/sessions/{id}/export"), "text/plain", Vec::new()).await;
    println!("GET export before extraction -> {status}");

    let (status, reply) = call(&app, Method::POST, &format!("/sessions/{id}/extract"), "application/json", Vec::new()).await;
    let report: serde_json::Value = serde_json::from_slice(&reply).unwrap();
    println!("POST extract -> {status}, {} columns", report["kept"].as_array().unwrap().len());

    // Erase the last column, as a reviewer would for a mislabelled region.
    for y in 300..400 {
        for x in 0..600 {
            mask.set(x, y, 0);
        }
    }
    let (status, _) = call(&app, Method::PUT, &format!("/sessions/{id}/mask"), "image/png", encode_mask_png(&mask).unwrap()).await;
    println!("PUT mask -> {status}");
    let (_, reply) = call(&app, Method::POST, &format!("/sessions/{id}/extract"), "application/json", Vec::new()).await;
    let report: serde_json::Value = serde_json::from_slice(&reply).unwrap();
    println!("re-extract -> {} columns", report["kept"].as_array().unwrap().len());

    let spec = serde_json::json!({"spec": {"top": 1200.0, "bottom": 1200.75}});
    let (status, reply) = call(&app, Method::PUT, &format!("/sessions/{id}/depths"), "application/json", spec.to_string().into_bytes()).await;
    println!("PUT depths -> {status} {}", String::from_utf8_lossy(&reply));

    let (status, archive) = call(&app, Method::GET, &format!("/sessions/{id}/export"), "text/plain", Vec::new()).await;
    println!("GET export -> {status}, {} bytes", archive.len());
}
