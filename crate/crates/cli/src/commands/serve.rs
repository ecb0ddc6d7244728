use std::path::PathBuf;
use std::sync::Arc;

use vfgrad_service::{load_fonts, serve as run_server, Hub};

use crate::{CliError, Common};

pub fn serve(common: &Common, host: &str, port: u16, fonts: &[PathBuf], assets: Option<PathBuf>) -> Result<(), CliError> {
    common.no_trace("serve")?;
    if let Some(dir) = &assets {
        if !dir.is_dir() {
            return Err(CliError::usage(format!("{} is not a directory", dir.display())));
        }
    }
    let entries = load_fonts(fonts).map_err(CliError::usage)?;
    let names: Vec<String> = entries.iter().map(|f| f.name.clone()).collect();
    let hub = Arc::new(Hub::new(entries));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::failed(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::usage(format!("cannot bind {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::failed(e.to_string()))?;
        println!("serving {} on http://{addr}/ (WebSocket at /ws)", names.join(", "));
        run_server(listener, hub, assets).await.map_err(|e| CliError::failed(e.to_string()))
    })
}
