use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::Request;
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::oneshot;
use tower_http::services::ServeDir;

use crate::api;
use crate::catalog::Catalog;
use crate::config::ServiceConfig;
use crate::ServiceError;

/// Shared server state. The catalog is swapped whole on reload, so a request
/// sees either the old or the new catalog, never a mix.
pub struct AppState {
    config: RwLock<Arc<ServiceConfig>>,
    config_path: Option<PathBuf>,
    catalog: RwLock<Option<Arc<Catalog>>>,
    progress: AtomicUsize,
    failure: Mutex<Option<String>>,
    reloading: Mutex<()>,
    started: Instant,
}

impl AppState {
    pub fn new(config: ServiceConfig, config_path: Option<PathBuf>) -> Arc<Self> {
        Arc::new(Self {
            config: RwLock::new(Arc::new(config)),
            config_path,
            catalog: RwLock::new(None),
            progress: AtomicUsize::new(0),
            failure: Mutex::new(None),
            reloading: Mutex::new(()),
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> Arc<ServiceConfig> {
        self.config.read().unwrap().clone()
    }

    pub fn catalog(&self) -> Option<Arc<Catalog>> {
        self.catalog.read().unwrap().clone()
    }

    pub fn uptime(&self) -> Duration {
        self.started.elapsed()
    }

    /// Shards opened so far by the load in progress.
    pub fn progress(&self) -> usize {
        self.progress.load(Ordering::Relaxed)
    }

    pub fn load_failed(&self) -> bool {
        self.failure.lock().unwrap().is_some()
    }

    pub(crate) fn load_status(&self) -> String {
        match &*self.failure.lock().unwrap() {
            Some(e) => format!("indexes failed to load: {e}"),
            None => "indexes are still loading".into(),
        }
    }

    /// Loads the catalog for the current configuration and publishes it.
    pub fn load(&self) -> Result<Arc<Catalog>, ServiceError> {
        let _guard = self.reloading.lock().unwrap();
        self.progress.store(0, Ordering::Relaxed);
        let config = self.config();
        match Catalog::load(&config, &self.progress) {
            Ok(c) => {
                let c = Arc::new(c);
                *self.catalog.write().unwrap() = Some(c.clone());
                *self.failure.lock().unwrap() = None;
                Ok(c)
            }
            Err(e) => {
                if self.catalog().is_none() {
                    *self.failure.lock().unwrap() = Some(e.to_string());
                }
                Err(e)
            }
        }
    }

    /// Re-reads the configuration file (if any) and loads a fresh catalog.
    /// The listen address is not changed by a reload.
    pub fn reload(&self) -> Result<Arc<Catalog>, ServiceError> {
        if let Some(path) = &self.config_path {
            let mut fresh = ServiceConfig::load(path)?;
            fresh.listen = self.config().listen.clone();
            *self.config.write().unwrap() = Arc::new(fresh);
        }
        self.load()
    }
}

async fn access_log(req: Request, next: Next) -> Response {
    let started = Instant::now();
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let res = next.run(req).await;
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    println!("ts={ts} method={method} path={path} status={} ms={:.1}", res.status().as_u16(), started.elapsed().as_secs_f64() * 1000.0);
    res
}

pub fn router(state: Arc<AppState>) -> Router {
    let mut app = Router::new()
        .route("/api/check", post(api::check))
        .route("/api/datasets", get(api::datasets))
        .route("/api/health", get(api::health))
        .route("/api/reload", post(api::reload));
    if let Some(dir) = &state.config().static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.layer(axum::extract::DefaultBodyLimit::disable()).layer(middleware::from_fn(access_log)).with_state(state)
}

/// A server running on a background task.
pub struct RunningService {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningService {
    pub async fn shutdown(mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(|e| ServiceError::Server(std::io::Error::other(e)))?.map_err(ServiceError::Server)
    }
}

/// Binds the configured address and starts serving; indexes load in the
/// background, and API calls answer 503 until they are ready.
pub async fn spawn(config: ServiceConfig, config_path: Option<PathBuf>) -> Result<RunningService, ServiceError> {
    let addr = config.listen_addr()?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(ServiceError::Server)?;
    let addr = listener.local_addr().map_err(ServiceError::Server)?;
    let state = AppState::new(config, config_path);
    let loader = state.clone();
    tokio::task::spawn_blocking(move || {
        if let Err(e) = loader.load() {
            eprintln!("index load failed: {e}");
        }
    });
    let (tx, rx) = oneshot::channel();
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningService { addr, state, shutdown: Some(tx), task })
}

/// Runs until Ctrl-C.
pub async fn serve(config: ServiceConfig, config_path: Option<PathBuf>) -> Result<(), ServiceError> {
    let running = spawn(config, config_path).await?;
    eprintln!("listening on http://{}", running.addr);
    tokio::signal::ctrl_c().await.map_err(ServiceError::Server)?;
    running.shutdown().await
}
