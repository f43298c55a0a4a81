//! Network side of lws: the reference target service over HTTP, the driver
//! that executes workload plans against a target, a live version of the
//! scripted original workload, and the local JSON API of the fitting
//! workbench.

pub mod driver;
pub mod live;
pub mod server;
pub mod workbench;

use std::net::SocketAddr;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use driver::{execute_plan, DriverOptions};
pub use live::{run_scripted, LiveOptions, LiveSummary};
pub use server::{serve_harness, HarnessServer};
pub use workbench::{serve_workbench, workbench_router};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Harness(#[from] lws_core::harness::HarnessError),
    #[error("http client: {0}")]
    Client(#[from] reqwest::Error),
    #[error("bad target url `{0}`")]
    Target(String),
}

/// Wall clock in nanoseconds since the Unix epoch.
pub fn unix_now_ns() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as i64)
        .unwrap_or(0)
}

/// An axum app listening on a local port until [`Served::stop`].
pub struct Served {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl Served {
    /// Binds `host:port` (port 0 picks a free one) and serves `app`.
    pub async fn start(app: axum::Router, host: &str, port: u16) -> Result<Self, NetError> {
        let addr = format!("{host}:{port}");
        let listener = TcpListener::bind(&addr).await.map_err(|source| NetError::Bind {
            addr: addr.clone(),
            source,
        })?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        });
        Ok(Self {
            addr,
            shutdown: Some(tx),
            task,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn stop(mut self) -> Result<(), NetError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.task.await {
            Ok(r) => Ok(r?),
            Err(e) => Err(NetError::Io(std::io::Error::other(e))),
        }
    }

    /// Serves until the process receives Ctrl-C.
    pub async fn run_until_ctrl_c(self) -> Result<(), NetError> {
        let _ = tokio::signal::ctrl_c().await;
        self.stop().await
    }
}
