use std::time::Duration;

use guidesmith_service::{app, AppState};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let port: u16 = match std::env::var("PORT") {
        Ok(p) => p.parse().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("PORT={p}: {e}")))?,
        Err(_) => 8080,
    };
    let state = AppState::default();
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.expire();
        }
    });
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("guidesmith-service listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state)).await
}
