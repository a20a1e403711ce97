#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use iohbench::service::{router, Registry, RouterOptions};
use iohbench_core::algorithms::{OnePlusLambdaEa, RandomSearch};
use iohbench_core::runner::{run_experiment, Algorithm, RunOptions};
use iohbench_core::{parse_config, Suite};
use tower::ServiceExt;

pub fn config(folder: &Path, name: &str, params: &str, dims: &str, instances: &str, restarts: u32) -> String {
    format!(
        "[suite]\nsuite_name = PBO\nfunctions_id = 1-2\ninstances_id = {instances}\ndimensions = {dims}\n\
         budget_multiplier = 20\nindependent_restarts = {restarts}\n\
         [observer]\nobserver_name = PBO\nresult_folder = {}\nalgorithm_name = {name}\nalgorithm_info = fixture\n\
         parameters_name = {params}\n\
         [triggers]\ncomplete_triggers = false\nnumber_interval_triggers = 0\nnumber_target_triggers = 3\n\
         base_evaluation_triggers = 1,2,5\n",
        folder.display()
    )
}

fn run(folder: &Path, name: &str, alg: &dyn Algorithm, params: &str) {
    let cfg = parse_config(&config(folder, name, params, "12", "1-3", 2)).unwrap();
    run_experiment(&cfg, &Suite::pbo(), alg, &RunOptions::with_seed(7)).unwrap();
}

/// Two small result folders: random search and a (1+4) EA.
pub fn fixture_folders(root: &Path) -> Vec<PathBuf> {
    let rs = root.join("rs");
    let ea = root.join("ea");
    run(&rs, "RS", &RandomSearch, "evaluation");
    run(&ea, "EA", &OnePlusLambdaEa::new(4).unwrap(), "mutation_rate,l");
    vec![rs, ea]
}

pub fn app(registry: Arc<Registry>) -> Router {
    router(registry, RouterOptions::default())
}

pub async fn send(app: &Router, req: Request<Body>) -> (StatusCode, String, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ct = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, ct, body)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, String, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn get_json(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (s, _, b) = get(app, uri).await;
    (s, serde_json::from_slice(&b).unwrap())
}

pub async fn post_json(app: &Router, uri: &str, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
    let req = Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    let (s, _, b) = send(app, req).await;
    let v = if b.is_empty() { serde_json::Value::Null } else { serde_json::from_slice(&b).unwrap() };
    (s, v)
}

/// Zips every file under `folder`, paths relative to it.
pub fn zip_folder(folder: &Path) -> Vec<u8> {
    let mut buf = std::io::Cursor::new(Vec::new());
    {
        let mut w = zip::ZipWriter::new(&mut buf);
        let opts = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
        let mut stack = vec![folder.to_path_buf()];
        while let Some(dir) = stack.pop() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
            entries.sort();
            for p in entries {
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p.strip_prefix(folder).unwrap().to_string_lossy().replace('\\', "/");
                    w.start_file(rel, opts).unwrap();
                    w.write_all(&std::fs::read(&p).unwrap()).unwrap();
                }
            }
        }
        w.finish().unwrap();
    }
    buf.into_inner()
}

pub fn multipart(file_name: &str, bytes: &[u8], format: Option<&str>) -> (String, Vec<u8>) {
    let boundary = "----iohbench-test-boundary";
    let mut body = Vec::new();
    if let Some(f) = format {
        body.extend(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"format\"\r\n\r\n{f}\r\n").bytes());
    }
    body.extend(
        format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{file_name}\"\r\n\
             Content-Type: application/zip\r\n\r\n"
        )
        .bytes(),
    );
    body.extend_from_slice(bytes);
    body.extend(format!("\r\n--{boundary}--\r\n").bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}
