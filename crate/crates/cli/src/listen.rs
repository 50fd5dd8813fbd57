//! Forwards a sensor stream to a running server as control messages.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use futures_util::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;
use vtforge::gesture::{
    spawn_sensor_reader, ActivationCell, ActivationVector, CalibrationMap, LiveInput,
};

use crate::messages::ControlMessage;

/// Activation change worth sending.
const SEND_THRESHOLD: f64 = 1e-4;
/// Below this everywhere, the decayed activation counts as rest.
const REST_THRESHOLD: f64 = 1e-3;
const CLOSE_TIMEOUT: Duration = Duration::from_secs(2);

/// Reads `device` line by line (a serial tty already configured, a FIFO or a
/// plain file), applies the dropout policy and sends the result to `url` at
/// `rate` Hz. After the stream ends the activation is allowed to decay to
/// rest before the connection closes. Returns the frames accepted.
pub async fn listen(
    device: &Path,
    url: &str,
    calibration: CalibrationMap,
    rate: f64,
) -> anyhow::Result<u64> {
    let file = File::open(device).with_context(|| format!("opening {}", device.display()))?;
    let (ws, _) = tokio_tungstenite::connect_async(url)
        .await
        .with_context(|| format!("connecting to {url}"))?;
    let (mut sink, mut stream) = ws.split();
    // State and audio come back too; keep reading so the server never sees
    // this client as stalled.
    let mut drain = tokio::spawn(async move { while let Some(Ok(_)) = stream.next().await {} });

    let cell = Arc::new(ActivationCell::new());
    let reader = spawn_sensor_reader(BufReader::new(file), calibration, cell.clone());
    let input = LiveInput::new(cell, true);
    let mut tick = tokio::time::interval(Duration::from_secs_f64(1.0 / rate));
    let mut sent: Option<ActivationVector> = None;
    loop {
        tick.tick().await;
        let a = input.current();
        if sent.is_none_or(|s| s.max_abs_diff(&a) > SEND_THRESHOLD) {
            let text = serde_json::to_string(&ControlMessage::activations(&a))?;
            sink.send(Message::text(text))
                .await
                .context("server closed")?;
            sent = Some(a);
        }
        if reader.is_finished() && a.values().iter().all(|v| *v < REST_THRESHOLD) {
            break;
        }
    }
    let rest = serde_json::to_string(&ControlMessage::activations(&ActivationVector::REST))?;
    sink.send(Message::text(rest)).await?;
    // Finish the close handshake; dropping the socket with frames unread
    // resets the connection and can lose the message above.
    let _ = sink.close().await;
    if tokio::time::timeout(CLOSE_TIMEOUT, &mut drain)
        .await
        .is_err()
    {
        drain.abort();
    }
    let accepted = reader
        .join()
        .map_err(|_| anyhow::anyhow!("sensor reader panicked"))?
        .context("reading sensor stream")?;
    Ok(accepted)
}
