use anyhow::{Context, Result};
use neoscope_core::train::QualityModel;
use neoscope_engine::server::{serve, ServerConfig};
use neoscope_engine::{Models, Scorer};

use super::usage;
use crate::args::{Cli, StreamArgs};
use crate::output::Done;

pub fn stream(cli: &Cli, a: &StreamArgs) -> Result<Done> {
    if a.model.len() != 2 {
        return Err(usage("stream needs --model <heart.json> --model <lung.json>"));
    }
    let models = Models::from_pair(QualityModel::load(&a.model[0])?, QualityModel::load(&a.model[1])?)?;
    let cfg = ServerConfig { markers_csv: a.markers.clone().or_else(|| cli.out.clone()), ..ServerConfig::default() };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.listen).await.with_context(|| format!("binding {}", a.listen))?;
        let addr = listener.local_addr()?;
        println!("{}", serde_json::json!({ "status": "listening", "addr": addr.to_string() }));
        serve(listener, Scorer::new(models), cfg).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(Done::new("stream", vec![]))
}
