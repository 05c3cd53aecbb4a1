//! In-process HTTP helpers: requests go straight to the router, no sockets.

#![allow(dead_code)]

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use corebox_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub fn app(config: ServiceConfig) -> Router {
    router(AppState::new(&config).unwrap(), &config)
}

pub struct Part<'a> {
    pub name: &'a str,
    pub file_name: Option<&'a str>,
    pub data: &'a [u8],
}

pub fn file<'a>(name: &'a str, file_name: &'a str, data: &'a [u8]) -> Part<'a> {
    Part { name, file_name: Some(file_name), data }
}

pub fn text<'a>(name: &'a str, data: &'a str) -> Part<'a> {
    Part { name, file_name: None, data: data.as_bytes() }
}

const BOUNDARY: &str = "corebox-test-boundary-7d1f";

pub fn multipart_body(parts: &[Part]) -> Vec<u8> {
    let mut body = Vec::new();
    for p in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        match p.file_name {
            Some(f) => body.extend_from_slice(
                format!("Content-Disposition: form-data; name=\"{}\"; filename=\"{f}\"\r\nContent-Type: application/octet-stream\r\n\r\n", p.name).as_bytes(),
            ),
            None => body.extend_from_slice(format!("Content-Disposition: form-data; name=\"{}\"\r\n\r\n", p.name).as_bytes()),
        }
        body.extend_from_slice(p.data);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, content_type: Option<&str>, body: Vec<u8>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = content_type {
        req = req.header(header::CONTENT_TYPE, ct);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, None, Vec::new()).await
}

pub async fn post_multipart(app: &Router, uri: &str, parts: &[Part<'_>]) -> Reply {
    let ct = format!("multipart/form-data; boundary={BOUNDARY}");
    send(app, Method::POST, uri, Some(&ct), multipart_body(parts)).await
}

pub async fn put_bytes(app: &Router, uri: &str, body: Vec<u8>) -> Reply {
    send(app, Method::PUT, uri, Some("image/png"), body).await
}

pub async fn send_json(app: &Router, method: Method, uri: &str, value: &serde_json::Value) -> Reply {
    send(app, method, uri, Some("application/json"), serde_json::to_vec(value).unwrap()).await
}

pub async fn create(app: &Router, image_png: &[u8], mask_png: Option<&[u8]>) -> String {
    let mut parts = vec![file("image", "box.png", image_png)];
    if let Some(m) = mask_png {
        parts.push(file("mask", "mask.png", m));
    }
    let reply = post_multipart(app, "/sessions", &parts).await;
    assert_eq!(reply.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&reply.body));
    reply.json()["id"].as_str().unwrap().to_string()
}
