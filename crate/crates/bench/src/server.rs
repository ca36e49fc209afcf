use std::future::Future;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::Router;
use tokio::net::TcpListener;

use crate::gateway::{error_response, ApiError, Gateway, Response};

/// Every path is routed by the gateway itself, so the HTTP layer only moves
/// bytes.
pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new().fallback(handle).with_state(gateway)
}

async fn handle(
    State(gateway): State<Arc<Gateway>>,
    method: Method,
    uri: Uri,
    body: Body,
) -> HttpResponse {
    let cap = gateway.config().max_body_bytes;
    let response = match to_bytes(body, cap).await {
        Err(_) => error_response(&ApiError::new(
            413,
            "PayloadTooLarge",
            format!("request body exceeds {cap} bytes"),
        )),
        Ok(bytes) => {
            let path = uri.path().to_string();
            let method = method.as_str().to_string();
            let gw = Arc::clone(&gateway);
            tokio::task::spawn_blocking(move || gw.handle(&method, &path, &bytes))
                .await
                .unwrap_or_else(|e| error_response(&ApiError::new(500, "Internal", e.to_string())))
        }
    };
    into_http(response)
}

fn into_http(response: Response) -> HttpResponse {
    let status = StatusCode::from_u16(response.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        response.body,
    )
        .into_response()
}

pub async fn serve(
    gateway: Arc<Gateway>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(gateway))
        .with_graceful_shutdown(shutdown)
        .await
}
