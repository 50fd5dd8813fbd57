//! Wire formats shared with the browser UI.

use serde::{Deserialize, Serialize};
use vtforge::engine::{to_pcm16, StateSnapshot};
use vtforge::gesture::ActivationVector;

pub const AUDIO_MAGIC: &[u8; 4] = b"VTAU";
pub const AUDIO_BLOCK: usize = 441;
pub const AUDIO_CHUNK_BYTES: usize = 8 + 2 * AUDIO_BLOCK;

/// Inbound text frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ControlMessage {
    Activations { values: Vec<f64> },
}

impl ControlMessage {
    pub fn activations(a: &ActivationVector) -> Self {
        ControlMessage::Activations {
            values: a.values().to_vec(),
        }
    }

    /// Parses and clamps. Anything but exactly four numbers is rejected.
    pub fn parse(text: &str) -> Result<ActivationVector, String> {
        let msg: ControlMessage = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let ControlMessage::Activations { values } = msg;
        let v: [f64; 4] = values
            .as_slice()
            .try_into()
            .map_err(|_| format!("expected 4 activations, got {}", values.len()))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err("activations must be finite".into());
        }
        Ok(ActivationVector::clamped(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateTag {
    State,
}

/// Outbound text frame, one per control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    #[serde(rename = "type")]
    pub kind: StateTag,
    pub t: f64,
    pub activations: [f64; 4],
    pub tongue: Vec<[f64; 2]>,
    pub area: Vec<f64>,
    pub rms: f64,
}

impl From<&StateSnapshot> for StateMessage {
    fn from(s: &StateSnapshot) -> Self {
        StateMessage {
            kind: StateTag::State,
            t: s.t,
            activations: s.activation.values(),
            tongue: s.tongue.iter().map(|p| [p.x, p.y]).collect(),
            area: s.area.clone(),
            rms: s.rms,
        }
    }
}

/// Little-endian PCM16 of one block, without the header.
pub fn pcm_bytes(samples: &[f64]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|&x| to_pcm16(x).to_le_bytes())
        .collect()
}

/// `"VTAU"`, the counter, then the PCM payload.
pub fn audio_chunk(counter: u32, pcm: &[u8]) -> Vec<u8> {
    debug_assert_eq!(pcm.len(), 2 * AUDIO_BLOCK);
    let mut out = Vec::with_capacity(8 + pcm.len());
    out.extend_from_slice(AUDIO_MAGIC);
    out.extend_from_slice(&counter.to_le_bytes());
    out.extend_from_slice(pcm);
    out
}

/// Counter and samples of a received chunk.
pub fn parse_audio_chunk(bytes: &[u8]) -> Option<(u32, Vec<i16>)> {
    if bytes.len() != AUDIO_CHUNK_BYTES || &bytes[..4] != AUDIO_MAGIC {
        return None;
    }
    let counter = u32::from_le_bytes(bytes[4..8].try_into().ok()?);
    let samples = bytes[8..]
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    Some((counter, samples))
}
